//! Explicit Runge–Kutta integrators: adaptive Dormand–Prince 5(4) for the
//! profile shooting and fixed-step classical RK4.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size control for [`Dopri5`].
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 { rtol: 1e-12, atol: 1e-13, h_max: 0.1, max_steps: 2_000_000 }
    }
}

impl Dopri5 {
    /// One Dormand–Prince step of size `h`; returns the new state and the
    /// scaled error norm.
    pub fn step<F>(&self, f: &F, x: f64, y: &[f64], h: f64) -> (Vec<f64>, f64)
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let mut k = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        f(x, y, &mut k[0]);
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k[0][i];
        }
        f(x + C2 * h, &tmp, &mut k[1]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        f(x + C3 * h, &tmp, &mut k[2]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        f(x + C4 * h, &tmp, &mut k[3]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        f(x + C5 * h, &tmp, &mut k[4]);
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        f(x + h, &tmp, &mut k[5]);
        let mut ynew = vec![0.0; n];
        for i in 0..n {
            ynew[i] = y[i]
                + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        f(x + h, &ynew, &mut k[6]);
        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        (ynew, (err / n as f64).sqrt())
    }

    /// Integrates from `x0` to `x1` (either direction), calling `observe`
    /// after every accepted step with `(x, y)`. Returning `false` from
    /// `observe` stops the integration early; the stopping point is returned.
    pub fn integrate<F, O>(&self, f: &F, x0: f64, y0: &[f64], x1: f64, mut observe: O) -> Result<(f64, Vec<f64>)>
    where
        F: Fn(f64, &[f64], &mut [f64]),
        O: FnMut(f64, &[f64]) -> bool,
    {
        let dir = if x1 >= x0 { 1.0 } else { -1.0 };
        let mut x = x0;
        let mut y = y0.to_vec();
        let span = (x1 - x0).abs();
        if span == 0.0 {
            return Ok((x, y));
        }
        let mut h = (0.01 * span).min(self.h_max).max(1e-12);
        let mut steps = 0;
        while dir * (x1 - x) > 1e-14 * span.max(1.0) {
            if steps >= self.max_steps {
                return Err(Error::Integration(format!("step limit reached at x = {x:.6}")));
            }
            steps += 1;
            let remaining = (x1 - x).abs();
            let hs = h.min(remaining);
            let (ynew, err) = self.step(f, x, &y, dir * hs);
            if !err.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
                h = hs * 0.25;
                if h < 1e-14 {
                    return Err(Error::Integration(format!("non-finite state near x = {x:.6}")));
                }
                continue;
            }
            if err <= 1.0 {
                x += dir * hs;
                y = ynew;
                if !observe(x, &y) {
                    return Ok((x, y));
                }
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (hs * fac).min(self.h_max);
            if h < 1e-14 {
                return Err(Error::Integration(format!("step size underflow at x = {x:.6}")));
            }
        }
        Ok((x, y))
    }
}

/// One classical RK4 step for a linear system whose coefficient is supplied
/// at the three stage abscissae `x`, `x + h/2`, `x + h`.
pub fn rk4_step<T, F>(y: &[T], h: f64, f: F) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    F: Fn(usize, &[T]) -> Vec<T>,
{
    let k1 = f(0, y);
    let y2: Vec<T> = y.iter().zip(&k1).map(|(a, k)| *a + *k * (0.5 * h)).collect();
    let k2 = f(1, &y2);
    let y3: Vec<T> = y.iter().zip(&k2).map(|(a, k)| *a + *k * (0.5 * h)).collect();
    let k3 = f(1, &y3);
    let y4: Vec<T> = y.iter().zip(&k3).map(|(a, k)| *a + *k * h).collect();
    let k4 = f(2, &y4);
    y.iter()
        .enumerate()
        .map(|(i, a)| *a + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dopri_exponential() {
        let f = |_x: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0];
        let (x, y) = Dopri5::default().integrate(&f, 0.0, &[1.0], 3.0, |_, _| true).unwrap();
        assert_eq!(x, 3.0);
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn dopri_backward() {
        let f = |x: f64, _y: &[f64], dy: &mut [f64]| dy[0] = x.cos();
        let (_, y) = Dopri5::default().integrate(&f, 1.0, &[1.0f64.sin()], -2.0, |_, _| true).unwrap();
        assert!((y[0] - (-2.0f64).sin()).abs() < 1e-11);
    }

    #[test]
    fn rk4_fourth_order() {
        let run = |h: f64| {
            let mut y = vec![1.0];
            let steps = (1.0 / h).round() as usize;
            for _ in 0..steps {
                y = rk4_step(&y, h, |_, v| vec![v[0]]);
            }
            (y[0] - 1f64.exp()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!(ratio > 14.0 && ratio < 18.0);
    }
}
