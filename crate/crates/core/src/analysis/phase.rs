//! Least-squares phase of a perturbed profile and the Brent minimizer it
//! uses.

use crate::error::{Error, Result};

/// Profile `W̄` sampled on a uniform simulation grid.
#[derive(Debug, Clone)]
pub struct GridProfile {
    pub n: usize,
    pub x0: f64,
    pub h: f64,
    /// Row-major `W̄(x_i)`.
    pub w: Vec<f64>,
}

impl GridProfile {
    pub fn len(&self) -> usize {
        self.w.len() / self.n
    }
    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// `|W̄(+X) - W̄(-X)| / max |W̄'|`.
    pub fn layer_width(&self) -> f64 {
        let (n, len) = (self.n, self.len());
        let jump = (0..n).map(|c| (self.w[(len - 1) * n + c] - self.w[c]).powi(2)).sum::<f64>().sqrt();
        let mut slope = 0.0f64;
        for i in 0..len - 1 {
            let d = (0..n).map(|c| (self.w[(i + 1) * n + c] - self.w[i * n + c]).powi(2)).sum::<f64>().sqrt() / self.h;
            slope = slope.max(d);
        }
        if slope == 0.0 {
            return f64::INFINITY;
        }
        jump / slope
    }
}

/// Six-point Lagrange weights for the offset `f` in `[0, 1)` relative to
/// node `i`, on nodes `i - 2 ..= i + 3`.
fn weights(f: f64) -> [f64; 6] {
    let mut w = [0.0; 6];
    for (j, wj) in w.iter_mut().enumerate() {
        let xj = j as f64 - 2.0;
        let mut p = 1.0;
        for k in 0..6 {
            if k != j {
                let xk = k as f64 - 2.0;
                p *= (f - xk) / (xj - xk);
            }
        }
        *wj = p;
    }
    w
}

/// `state(x_i + delta)` on every node; end values are held constant outside
/// the grid.
pub fn shift_field(state: &[f64], n: usize, h: f64, delta: f64) -> Vec<f64> {
    let len = state.len() / n;
    let s = delta / h;
    let m = s.floor();
    let w = weights(s - m);
    let m = m as isize;
    let mut out = vec![0.0; state.len()];
    let clamp = |k: isize| k.clamp(0, len as isize - 1) as usize;
    for i in 0..len {
        let base = i as isize + m;
        for c in 0..n {
            let mut acc = 0.0;
            for (j, wj) in w.iter().enumerate() {
                acc += wj * state[clamp(base + j as isize - 2) * n + c];
            }
            out[i * n + c] = acc;
        }
    }
    out
}

/// Discrete `|state(. + delta) - W̄|_{L^2}^2`.
pub fn misfit(state: &[f64], profile: &GridProfile, delta: f64) -> f64 {
    let shifted = shift_field(state, profile.n, profile.h, delta);
    shifted.iter().zip(&profile.w).map(|(a, b)| (a - b).powi(2)).sum::<f64>() * profile.h
}

/// Brent's minimization on `[a, b]` (golden section with parabolic steps).
/// Returns `(x, f(x))`.
pub fn brent_minimize(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = tol + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + if d >= 0.0 { tol1 } else { -tol1 } };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Least-squares phase: the minimizer of `|state(. + delta) - W̄|_{L^2}`
/// in a bracket of four layer widths centred on `previous`, to `1e-6 h`.
pub fn phase_extract_lsq(state: &[f64], profile: &GridProfile, previous: f64) -> Result<f64> {
    if state.len() != profile.w.len() {
        return Err(Error::DimensionMismatch { expected: profile.w.len(), got: state.len() });
    }
    let half = 2.0 * profile.layer_width();
    if !half.is_finite() {
        return Err(Error::Phase("profile has no layer".into()));
    }
    let (a, b) = (previous - half, previous + half);
    let (x, _) = brent_minimize(|d| misfit(state, profile, d), a, b, 1e-6 * profile.h, 200);
    let edge = 1e-3 * (b - a);
    if x - a < edge || b - x < edge {
        return Err(Error::Phase(format!(
            "least-squares phase left the bracket [{a:.4}, {b:.4}]; the shock was lost or the perturbation is too large"
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_parabola_minimum() {
        let (x, fx) = brent_minimize(|x| (x - 0.3).powi(2) + 1.0, -2.0, 2.0, 1e-10, 200);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shift_reproduces_polynomials() {
        let h = 0.1;
        let v: Vec<f64> = (0..100).map(|i| (i as f64 * h).powi(3)).collect();
        let s = shift_field(&v, 1, h, 0.237);
        for i in 5..90 {
            let x = i as f64 * h + 0.237;
            assert!((s[i] - x.powi(3)).abs() < 1e-10);
        }
    }
}
