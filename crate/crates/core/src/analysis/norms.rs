//! Discrete Lebesgue and Sobolev norms of vector fields sampled on a
//! uniform grid (row-major, `n` components per node).

use serde::{Deserialize, Serialize};

/// Exponent of an `L^p` norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    L4,
    Inf,
}

impl Norm {
    /// `1 / p`.
    pub fn inverse_exponent(self) -> f64 {
        match self {
            Norm::L1 => 1.0,
            Norm::L2 => 0.5,
            Norm::L4 => 0.25,
            Norm::Inf => 0.0,
        }
    }
}

fn pointwise(values: &[f64], n: usize) -> impl Iterator<Item = f64> + '_ {
    values.chunks(n).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Trapezoid of `f` over the sampled points.
fn trapezoid(mut it: impl ExactSizeIterator<Item = f64>, h: f64) -> f64 {
    let len = it.len();
    let mut s = 0.0;
    for i in 0..len {
        let v = it.next().unwrap();
        s += if i == 0 || i + 1 == len { 0.5 * v } else { v };
    }
    s * h
}

/// `|w|_{L^p}` with the Euclidean norm pointwise: composite trapezoid for
/// finite `p`, grid maximum for `p = inf`.
pub fn lp_norm(values: &[f64], n: usize, h: f64, p: Norm) -> f64 {
    let pts: Vec<f64> = pointwise(values, n).collect();
    match p {
        Norm::Inf => pts.iter().fold(0.0, |m, v| m.max(*v)),
        Norm::L1 => trapezoid(pts.iter().copied(), h),
        Norm::L2 => trapezoid(pts.iter().map(|v| v * v), h).sqrt(),
        Norm::L4 => trapezoid(pts.iter().map(|v| v.powi(4)), h).powf(0.25),
    }
}

const STENCILS: [&[f64]; 5] = [
    &[0.0, 0.0, 1.0, 0.0, 0.0],
    &[0.0, -0.5, 0.0, 0.5, 0.0],
    &[0.0, 1.0, -2.0, 1.0, 0.0],
    &[-0.5, 1.0, 0.0, -1.0, 0.5],
    &[1.0, -4.0, 6.0, -4.0, 1.0],
];

/// Centered difference approximation of `d^k w / dx^k` (`k <= 4`), zero at
/// the two nodes nearest each end.
pub fn derivative(values: &[f64], n: usize, h: f64, k: usize) -> Vec<f64> {
    assert!(k <= 4, "derivative order above 4");
    let len = values.len() / n;
    let mut out = vec![0.0; values.len()];
    if k == 0 {
        out.copy_from_slice(values);
        return out;
    }
    let st = STENCILS[k];
    let scale = h.powi(-(k as i32));
    for i in 2..len.saturating_sub(2) {
        for c in 0..n {
            let mut s = 0.0;
            for (j, w) in st.iter().enumerate() {
                if *w != 0.0 {
                    s += w * values[(i + j - 2) * n + c];
                }
            }
            out[i * n + c] = s * scale;
        }
    }
    out
}

/// `|w|_{H^s} = (sum_{k <= s} |d^k w|_{L^2}^2)^{1/2}` with centered stencils.
pub fn hs_norm(values: &[f64], n: usize, h: f64, s: usize) -> f64 {
    (0..=s)
        .map(|k| lp_norm(&derivative(values, n, h, k), n, h, Norm::L2).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Norms of one snapshot.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct SnapshotNorms {
    pub l1: f64,
    pub l2: f64,
    pub l4: f64,
    pub linf: f64,
    pub wx_l2: f64,
    pub wx_l4: f64,
    pub wx_linf: f64,
    pub hs: f64,
}

impl SnapshotNorms {
    pub fn compute(values: &[f64], n: usize, h: f64, s: usize) -> SnapshotNorms {
        let wx = derivative(values, n, h, 1);
        SnapshotNorms {
            l1: lp_norm(values, n, h, Norm::L1),
            l2: lp_norm(values, n, h, Norm::L2),
            l4: lp_norm(values, n, h, Norm::L4),
            linf: lp_norm(values, n, h, Norm::Inf),
            wx_l2: lp_norm(&wx, n, h, Norm::L2),
            wx_l4: lp_norm(&wx, n, h, Norm::L4),
            wx_linf: lp_norm(&wx, n, h, Norm::Inf),
            hs: hs_norm(values, n, h, s),
        }
    }

    /// `(|w|_{L^p}, |w_x|_{L^p})`.
    pub fn pair(&self, p: Norm) -> (f64, f64) {
        match p {
            Norm::L1 => (self.l1, f64::NAN),
            Norm::L2 => (self.l2, self.wx_l2),
            Norm::L4 => (self.l4, self.wx_l4),
            Norm::Inf => (self.linf, self.wx_linf),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field() {
        let h = 0.5;
        let v = vec![2.0; 41];
        assert!((lp_norm(&v, 1, h, Norm::L1) - 40.0).abs() < 1e-12);
        assert_eq!(lp_norm(&v, 1, h, Norm::Inf), 2.0);
    }

    #[test]
    fn fourth_difference_of_quartic() {
        let h = 0.1;
        let v: Vec<f64> = (0..50).map(|i| (i as f64 * h).powi(4)).collect();
        let d4 = derivative(&v, 1, h, 4);
        assert!((d4[20] - 24.0).abs() < 1e-6);
        let d3 = derivative(&v, 1, h, 3);
        let x = 20.0 * h;
        assert!((d3[20] - 24.0 * x).abs() < 1e-6);
    }
}
