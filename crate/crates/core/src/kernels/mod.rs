//! Explicit Green-kernel pieces: the error function, the excited translation
//! kernel `e(y, t)`, moving Gaussians, the hyperbolic transport data, and
//! numerical checks of their bounds.

mod auxiliary;
mod bounds;
mod kernel_e;
mod transport;

pub use auxiliary::{aux1, aux2, aux3, test_integral, verify_aux_bounds, AuxEntry, AuxReport, AuxSettings, TestFunction};
pub use bounds::{verify_ebounds, BoundItem, EboundsReport, EboundsSettings};
pub use kernel_e::{KernelE, KernelMode, KernelValue, LField, LMode};
pub use transport::{hyperbolic_transport_data, HyperbolicTransportData};

use crate::error::{Error, Result};

/// `1 / (4 sqrt(pi))`: `errfn(z) = erfc(-z) / (4 sqrt(pi))`.
const ERRFN_SCALE: f64 = 0.141_047_395_886_939_07;

/// `errfn(z) = (1 / 2 pi) int_{-inf}^z exp(-s^2) ds`.
pub fn errfn(z: f64) -> f64 {
    libm::erfc(-z) * ERRFN_SCALE
}

/// `errfn(+inf) = 1 / (2 sqrt(pi))`.
pub const ERRFN_INF: f64 = 2.0 * ERRFN_SCALE;

/// `errfn'(z) = exp(-z^2) / (2 pi)`.
pub fn errfn_prime(z: f64) -> f64 {
    (-z * z).exp() / (2.0 * std::f64::consts::PI)
}

/// `errfn(p) - errfn(m)` for `p >= m` without cancellation in the tails.
pub fn errfn_diff(p: f64, m: f64) -> f64 {
    if m > 0.0 {
        (libm::erfc(m) - libm::erfc(p)) * ERRFN_SCALE
    } else if p < 0.0 {
        (libm::erfc(-p) - libm::erfc(-m)) * ERRFN_SCALE
    } else {
        (2.0 - libm::erfc(p) - libm::erfc(-m)) * ERRFN_SCALE
    }
}

/// `errfn(-z)` written via `erfc` so that large positive `z` keeps precision.
pub fn errfn_upper(z: f64) -> f64 {
    libm::erfc(z) * ERRFN_SCALE
}

/// Moving Gaussian `theta(z, s) = s^{-1/2} exp(-(z - a s)^2 / (b s))`.
#[derive(Debug, Clone, Copy)]
pub struct Theta {
    pub a: f64,
    pub b: f64,
}

impl Theta {
    pub fn new(a: f64, b: f64) -> Result<Theta> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::InvalidInput("moving Gaussian needs a nonzero speed".into()));
        }
        if !(b > 0.0) {
            return Err(Error::InvalidInput("moving Gaussian needs a positive width".into()));
        }
        Ok(Theta { a, b })
    }
    pub fn eval(&self, z: f64, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let d = z - self.a * s;
        (-d * d / (self.b * s)).exp() / s.sqrt()
    }
}

/// One moving Gaussian evaluated directly.
pub fn theta(z: f64, s: f64, a: f64, b: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput("theta needs s > 0".into()));
    }
    Ok(Theta::new(a, b)?.eval(z, s))
}
