//! Adaptive Gauss–Kronrod (7/15) quadrature with interval bisection.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol { abs: 1e-9, rel: 1e-7, max_intervals: 4000 }
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = hl * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * hl, ((rk - rg) * hl).abs())
}

/// Integrates `f` over `[a, b]`, refining the interval with the largest error
/// estimate until `err <= max(abs, rel |I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: QuadTol) -> Result<f64> {
    integrate_breaks(&mut f, &[a, b], tol)
}

/// Like [`integrate`], but starts from the given sorted break points.
pub fn integrate_breaks<F: FnMut(f64) -> f64>(f: &mut F, breaks: &[f64], tol: QuadTol) -> Result<f64> {
    let mut ivs: Vec<(f64, f64, f64, f64)> = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(f, w[0], w[1]);
            ivs.push((w[0], w[1], v, e));
        }
    }
    loop {
        let total: f64 = ivs.iter().map(|iv| iv.2).sum();
        let err: f64 = ivs.iter().map(|iv| iv.3).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        if ivs.len() >= tol.max_intervals {
            return Err(Error::Quadrature(format!(
                "error estimate {err:.3e} above tolerance after {} intervals",
                ivs.len()
            )));
        }
        let (k, _) = ivs
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, iv)| if iv.3 > acc.1 { (i, iv.3) } else { acc });
        let (a, b, _, _) = ivs.swap_remove(k);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Err(Error::Quadrature("interval underflow".into()));
        }
        let (v1, e1) = gk15(f, a, m);
        let (v2, e2) = gk15(f, m, b);
        ivs.push((a, m, v1, e1));
        ivs.push((m, b, v2, e2));
    }
}

/// Composite trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let v = integrate(|x| (-x * x).exp(), -10.0, 10.0, QuadTol::default()).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn integrable_singularity_refines() {
        let tol = QuadTol { abs: 1e-10, rel: 1e-10, max_intervals: 4000 };
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, tol).unwrap();
        assert!((v - 2.0).abs() < 1e-7);
    }

    #[test]
    fn trapezoid_is_exact_for_lines() {
        let vals: Vec<f64> = (0..11).map(|i| 2.0 * i as f64 * 0.1 + 1.0).collect();
        assert!((trapezoid(&vals, 0.1) - 2.0).abs() < 1e-14);
    }
}
