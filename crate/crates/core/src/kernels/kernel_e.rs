//! The excited translation kernel `e(y, t)` and its derivatives.

use super::{errfn, errfn_diff, errfn_prime, errfn_upper, ERRFN_INF};
use crate::error::{Error, Result};
use crate::profile::{CharacteristicData, HalfLineField, ShockProfile};

/// A left eigenvector as a function of `y`.
#[derive(Debug, Clone)]
pub enum LField {
    Constant(Vec<f64>),
    /// Samples of `l` and `l'` on `x0 + k h`, `k < count`, cubic Hermite in
    /// between and constant outside.
    Grid { x0: f64, h: f64, count: usize, l: Vec<f64>, dl: Vec<f64> },
}

impl LField {
    fn dim(&self) -> usize {
        match self {
            LField::Constant(v) => v.len(),
            LField::Grid { count, l, .. } => l.len() / count,
        }
    }

    /// `(l(y), l'(y))` written into the two slices.
    pub fn eval(&self, y: f64, l_out: &mut [f64], dl_out: &mut [f64]) {
        match self {
            LField::Constant(v) => {
                l_out.copy_from_slice(v);
                dl_out.iter_mut().for_each(|d| *d = 0.0);
            }
            LField::Grid { x0, h, count, l, dl } => {
                let n = l.len() / count;
                let s = (y - x0) / h;
                if s <= 0.0 || s >= (*count - 1) as f64 {
                    let k = if s <= 0.0 { 0 } else { count - 1 };
                    l_out.copy_from_slice(&l[k * n..(k + 1) * n]);
                    dl_out.iter_mut().for_each(|d| *d = 0.0);
                    return;
                }
                let k = (s.floor() as usize).min(count - 2);
                let u = s - k as f64;
                let (h00, h10, h01, h11) =
                    (2.0 * u.powi(3) - 3.0 * u * u + 1.0, u.powi(3) - 2.0 * u * u + u, -2.0 * u.powi(3) + 3.0 * u * u, u.powi(3) - u * u);
                let (d00, d10, d01, d11) = (6.0 * u * u - 6.0 * u, 3.0 * u * u - 4.0 * u + 1.0, -6.0 * u * u + 6.0 * u, 3.0 * u * u - 2.0 * u);
                for c in 0..n {
                    let (p0, p1) = (l[k * n + c], l[(k + 1) * n + c]);
                    let (m0, m1) = (dl[k * n + c] * h, dl[(k + 1) * n + c] * h);
                    l_out[c] = h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1;
                    dl_out[c] = (d00 * p0 + d10 * m0 + d01 * p1 + d11 * m1) / h;
                }
            }
        }
    }
}

/// One outgoing characteristic mode.
#[derive(Debug, Clone)]
pub struct KernelMode {
    /// Endstate speed (`> 0` on the left, `< 0` on the right).
    pub a: f64,
    pub beta: f64,
    pub l: LField,
}

/// Which eigenvector field enters the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LMode {
    /// Varying field for undercompressive shocks, endstate constants for Lax.
    Auto,
    Constant,
    Field,
}

/// `e(y, t)` for `y <= 0` from the left modes and for `y >= 0` from the
/// mirrored right modes.
#[derive(Debug, Clone)]
pub struct KernelE {
    pub n: usize,
    pub gamma: u8,
    pub minus: Vec<KernelMode>,
    pub plus: Vec<KernelMode>,
}

/// `e`, `e_t`, `e_y`, `e_yt` (row vectors of length `n`).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelValue {
    pub e: Vec<f64>,
    pub e_t: Vec<f64>,
    pub e_y: Vec<f64>,
    pub e_yt: Vec<f64>,
}

impl KernelValue {
    fn zeros(n: usize) -> Self {
        KernelValue { e: vec![0.0; n], e_t: vec![0.0; n], e_y: vec![0.0; n], e_yt: vec![0.0; n] }
    }
}

/// Scalar profile `g = errfn(xi+) - errfn(xi-)` and its derivatives for a
/// mode with speed `a > 0` at `y <= 0`.
#[derive(Debug, Clone, Copy)]
struct Scalar {
    g: f64,
    g_t: f64,
    g_y: f64,
    g_yt: f64,
}

fn scalar(y: f64, t: f64, a: f64, beta: f64) -> Scalar {
    let s = (4.0 * beta * t).sqrt();
    let xp = (y + a * t) / s;
    let xm = (y - a * t) / s;
    let (pp, pm) = (errfn_prime(xp), errfn_prime(xm));
    let dtp = (0.5 * a - y / (2.0 * t)) / s;
    let dtm = (-0.5 * a - y / (2.0 * t)) / s;
    let g = errfn_diff(xp, xm);
    let g_y = (pp - pm) / s;
    let g_t = pp * dtp - pm * dtm;
    let g_yt = (-2.0 * xp * pp * dtp + 2.0 * xm * pm * dtm) / s - (pp - pm) / (2.0 * t * s);
    Scalar { g, g_t, g_y, g_yt }
}

fn field_from(f: &HalfLineField, j: usize, x0: f64, h: f64) -> LField {
    let n = f.l(f.first, j).len();
    let mut l = Vec::with_capacity(f.len * n);
    let mut dl = Vec::with_capacity(f.len * n);
    for i in f.first..f.first + f.len {
        l.extend_from_slice(f.l(i, j));
        dl.extend_from_slice(f.dl(i, j));
    }
    // a field that is constant up to eigensolver roundoff is stored exactly
    let scale = l.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = 64.0 * f64::EPSILON * scale;
    let flat = dl.iter().all(|d| d.abs() <= noise) && l.chunks(n).all(|c| c.iter().zip(&l[..n]).all(|(a, b)| (a - b).abs() <= noise));
    if flat {
        return LField::Constant(l[..n].to_vec());
    }
    LField::Grid { x0, h, count: f.len, l, dl }
}

impl KernelE {
    /// Builds the kernel from characteristic data. Lax shocks (`gamma = 0`)
    /// use endstate eigenvectors under `LMode::Auto`.
    pub fn from_characteristics(cd: &CharacteristicData, profile: &ShockProfile, mode: LMode) -> Result<KernelE> {
        let gamma = cd
            .shock_type()
            .gamma()
            .ok_or_else(|| Error::Unsupported("overcompressive shocks have no kernel".into()))?;
        let use_field = match mode {
            LMode::Auto => gamma == 1,
            LMode::Constant => false,
            LMode::Field => true,
        };
        let n = profile.n;
        let ends = &cd.ends;
        let mut minus = Vec::new();
        for k in 0..n {
            if ends.a_minus[k] > 0.0 {
                let l = if use_field {
                    field_from(&cd.minus_field, k, profile.x[0], profile.h)
                } else {
                    LField::Constant(ends.l_minus.row(k).iter().cloned().collect())
                };
                minus.push(KernelMode { a: ends.a_minus[k], beta: ends.beta_minus[k], l });
            }
        }
        let mut plus = Vec::new();
        for k in 0..n {
            if ends.a_plus[k] < 0.0 {
                let l = if use_field {
                    field_from(&cd.plus_field, k, 0.0, profile.h)
                } else {
                    LField::Constant(ends.l_plus.row(k).iter().cloned().collect())
                };
                plus.push(KernelMode { a: ends.a_plus[k], beta: ends.beta_plus[k], l });
            }
        }
        KernelE::new(n, gamma, minus, plus)
    }

    pub fn new(n: usize, gamma: u8, minus: Vec<KernelMode>, plus: Vec<KernelMode>) -> Result<KernelE> {
        for m in &minus {
            if !(m.a > 0.0) || !(m.beta > 0.0) || m.l.dim() != n {
                return Err(Error::InvalidInput("left kernel modes need a > 0, beta > 0 and length-n l".into()));
            }
        }
        for m in &plus {
            if !(m.a < 0.0) || !(m.beta > 0.0) || m.l.dim() != n {
                return Err(Error::InvalidInput("right kernel modes need a < 0, beta > 0 and length-n l".into()));
            }
        }
        Ok(KernelE { n, gamma, minus, plus })
    }

    /// Modes active at `y` and whether the mirror applies.
    fn side(&self, y: f64) -> (&[KernelMode], bool) {
        if y <= 0.0 {
            (&self.minus, false)
        } else {
            (&self.plus, true)
        }
    }

    /// `e` and its derivatives; zero for `t < 1`, and the `t >= 1` branch is
    /// used at `t = 1`.
    pub fn eval(&self, y: f64, t: f64) -> KernelValue {
        let mut out = KernelValue::zeros(self.n);
        if t < 1.0 {
            return out;
        }
        let (modes, mirror) = self.side(y);
        let mut l = vec![0.0; self.n];
        let mut dl = vec![0.0; self.n];
        for m in modes {
            let (yy, sgn) = if mirror { (-y, -1.0) } else { (y, 1.0) };
            let s = scalar(yy, t, m.a.abs(), m.beta);
            m.l.eval(y, &mut l, &mut dl);
            for c in 0..self.n {
                out.e[c] += s.g * l[c];
                out.e_t[c] += s.g_t * l[c];
                out.e_y[c] += sgn * s.g_y * l[c] + s.g * dl[c];
                out.e_yt[c] += sgn * s.g_yt * l[c] + s.g_t * dl[c];
            }
        }
        out
    }

    /// `(e(y, inf), e_y(y, inf))`.
    pub fn at_infinity(&self, y: f64) -> (Vec<f64>, Vec<f64>) {
        let (modes, _) = self.side(y);
        let mut e = vec![0.0; self.n];
        let mut ey = vec![0.0; self.n];
        let mut l = vec![0.0; self.n];
        let mut dl = vec![0.0; self.n];
        for m in modes {
            m.l.eval(y, &mut l, &mut dl);
            for c in 0..self.n {
                e[c] += ERRFN_INF * l[c];
                ey[c] += ERRFN_INF * dl[c];
            }
        }
        (e, ey)
    }

    /// `e(y, t) - e(y, inf)` without cancellation (`t >= 1`).
    pub fn minus_infinity(&self, y: f64, t: f64) -> Vec<f64> {
        let (modes, mirror) = self.side(y);
        let mut out = vec![0.0; self.n];
        let mut l = vec![0.0; self.n];
        let mut dl = vec![0.0; self.n];
        let yy = if mirror { -y } else { y };
        for m in modes {
            let a = m.a.abs();
            let s = (4.0 * m.beta * t).sqrt();
            let d = -(errfn_upper((yy + a * t) / s) + errfn((yy - a * t) / s));
            m.l.eval(y, &mut l, &mut dl);
            for c in 0..self.n {
                out[c] += d * l[c];
            }
        }
        if t < 1.0 {
            let (einf, _) = self.at_infinity(y);
            return einf.iter().map(|v| -v).collect();
        }
        out
    }

    /// `e_y(y, t) - e_y(y, inf)` without cancellation (`t >= 1`).
    pub fn ey_minus_infinity(&self, y: f64, t: f64) -> Vec<f64> {
        if t < 1.0 {
            let (_, ey) = self.at_infinity(y);
            return ey.iter().map(|v| -v).collect();
        }
        let (modes, mirror) = self.side(y);
        let (yy, sgn) = if mirror { (-y, -1.0) } else { (y, 1.0) };
        let mut out = vec![0.0; self.n];
        let mut l = vec![0.0; self.n];
        let mut dl = vec![0.0; self.n];
        for m in modes {
            let a = m.a.abs();
            let s = (4.0 * m.beta * t).sqrt();
            let d = -(errfn_upper((yy + a * t) / s) + errfn((yy - a * t) / s));
            let sc = scalar(yy, t, a, m.beta);
            m.l.eval(y, &mut l, &mut dl);
            for c in 0..self.n {
                out[c] += sgn * sc.g_y * l[c] + d * dl[c];
            }
        }
        out
    }

    /// Sum of the scalar errfn differences at `(y, t)` (the bound template of
    /// the first kernel estimate).
    pub fn errfn_sum(&self, y: f64, t: f64) -> f64 {
        if t < 1.0 {
            return 0.0;
        }
        let (modes, mirror) = self.side(y);
        let yy = if mirror { -y } else { y };
        modes
            .iter()
            .map(|m| {
                let s = (4.0 * m.beta * t).sqrt();
                errfn_diff((yy + m.a.abs() * t) / s, (yy - m.a.abs() * t) / s)
            })
            .sum()
    }

    /// `sum exp(-|y + a t|^2 / (M t))` over the active modes (mirrored for
    /// `y > 0`).
    pub fn gaussian_sum(&self, y: f64, t: f64, big_m: f64) -> f64 {
        let (modes, mirror) = self.side(y);
        let yy = if mirror { -y } else { y };
        modes
            .iter()
            .map(|m| {
                let d = yy + m.a.abs() * t;
                (-d * d / (big_m * t)).exp()
            })
            .sum()
    }

    /// Smallest outgoing speed magnitude and largest diffusion rate.
    pub fn speed_and_rate_range(&self) -> (f64, f64, f64) {
        let all = self.minus.iter().chain(&self.plus);
        let amin = all.clone().map(|m| m.a.abs()).fold(f64::INFINITY, f64::min);
        let amax = all.clone().map(|m| m.a.abs()).fold(0.0, f64::max);
        let bmax = all.map(|m| m.beta).fold(0.0, f64::max);
        (amin, amax, bmax)
    }

    /// Largest `|l'|` sampled on `[-ymax, ymax]`; zero for constant fields.
    pub fn max_l_derivative(&self, ymax: f64, samples: usize) -> f64 {
        let mut l = vec![0.0; self.n];
        let mut dl = vec![0.0; self.n];
        let mut best = 0.0f64;
        for k in 0..=samples {
            let y = -ymax + 2.0 * ymax * k as f64 / samples as f64;
            let (modes, _) = self.side(y);
            for m in modes {
                m.l.eval(y, &mut l, &mut dl);
                best = dl.iter().fold(best, |acc, v| acc.max(v.abs()));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_kernel() -> KernelE {
        let mode = |a: f64| KernelMode { a, beta: 1.0, l: LField::Constant(vec![1.0]) };
        KernelE::new(1, 0, vec![mode(1.0)], vec![mode(-1.0)]).unwrap()
    }

    #[test]
    fn vanishes_before_unit_time() {
        let k = scalar_kernel();
        for y in [-3.0, 0.0, 2.0] {
            assert_eq!(k.eval(y, 0.5), KernelValue::zeros(1));
        }
    }

    #[test]
    fn origin_limit() {
        let k = scalar_kernel();
        let t: f64 = 1e6;
        let expect = errfn(t.sqrt() / 2.0) - errfn(-t.sqrt() / 2.0);
        assert!((k.eval(0.0, t).e[0] - expect).abs() < 1e-15);
        assert!((k.eval(0.0, t).e[0] - 0.28209).abs() < 1e-5);
    }

    #[test]
    fn derivatives_match_differences() {
        // varying field so that the l' terms are exercised
        let xs: Vec<f64> = (0..=200).map(|k| -10.0 + 0.05 * k as f64).collect();
        let l: Vec<f64> = xs.iter().flat_map(|x| [1.0 + 0.3 * x.tanh(), 0.5 * (-x * x).exp()]).collect();
        let dl: Vec<f64> = xs
            .iter()
            .flat_map(|x| [0.3 / x.cosh().powi(2), -x * (-x * x).exp()])
            .collect();
        let field = LField::Grid { x0: -10.0, h: 0.05, count: 201, l, dl };
        let m = KernelMode { a: 0.8, beta: 1.3, l: field };
        let k = KernelE::new(2, 1, vec![m], vec![KernelMode { a: -0.6, beta: 0.7, l: LField::Constant(vec![0.2, 1.0]) }]).unwrap();
        for (y, t) in [(-2.0, 3.0), (-0.7, 10.0), (1.5, 4.0), (-5.0, 7.5)] {
            let v = k.eval(y, t);
            let d = 1e-5;
            for c in 0..2 {
                let fy = (k.eval(y + d, t).e[c] - k.eval(y - d, t).e[c]) / (2.0 * d);
                let ft = (k.eval(y, t + d).e[c] - k.eval(y, t - d).e[c]) / (2.0 * d);
                let fyt = (k.eval(y, t + d).e_y[c] - k.eval(y, t - d).e_y[c]) / (2.0 * d);
                let tol = |x: f64| 1e-5 * x.abs().max(1e-3);
                assert!((fy - v.e_y[c]).abs() < tol(fy), "e_y {fy} {}", v.e_y[c]);
                assert!((ft - v.e_t[c]).abs() < tol(ft), "e_t {ft} {}", v.e_t[c]);
                assert!((fyt - v.e_yt[c]).abs() < tol(fyt), "e_yt {fyt} {}", v.e_yt[c]);
            }
        }
    }

    #[test]
    fn difference_to_limit() {
        let k = scalar_kernel();
        for (y, t) in [(-2.0, 5.0), (3.0, 100.0), (0.0, 2.0)] {
            let direct = k.eval(y, t).e[0] - k.at_infinity(y).0[0];
            assert!((k.minus_infinity(y, t)[0] - direct).abs() < 1e-14);
        }
    }
}
