//! The eigenvalue problem `L w = lambda w` as a first-order system
//! `Y' = (M0(x) + lambda M1(x)) Y` in `Y = (w_I, w_II, z)`, where
//! `z = b1 w_I' + b2 w_II' - A21 w_I - A22 w_II`, and the analytic splitting
//! of its limits at `+-inf`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::coefficients::{Blocks, LinearizedCoefficients};
use crate::error::{Error, Result};
use crate::linalg::{complex_eigenvalues, null_vector, CMatrix};
use crate::models::FluxViscositySystem;
use crate::profile::ShockProfile;

/// `M0`, `M1` at each grid point and at the two endstates.
#[derive(Debug, Clone)]
pub struct EigenvalueOde {
    pub n: usize,
    pub nh: usize,
    pub r: usize,
    /// First-order system size `n + r`.
    pub dim: usize,
    pub h: f64,
    pub x: Vec<f64>,
    /// Row-major `dim x dim` blocks.
    pub m0: Vec<f64>,
    pub m1: Vec<f64>,
    pub m0_minus: DMatrix<f64>,
    pub m1_minus: DMatrix<f64>,
    pub m0_plus: DMatrix<f64>,
    pub m1_plus: DMatrix<f64>,
    /// Characteristic speeds at the endstates (ascending).
    pub a_minus: Vec<f64>,
    pub a_plus: Vec<f64>,
    /// Below this modulus the slow eigenvalues are matched to `-lambda / a`.
    pub lambda_slow: f64,
    /// Dimension of the unstable bundle at `-inf`.
    pub k_minus: usize,
    /// Dimension of the stable bundle at `+inf`.
    pub k_plus: usize,
}

/// Assembles `(M0, M1)` from `A`, `A'`, `B~` at one point.
fn assemble(a: &DMatrix<f64>, da: &DMatrix<f64>, b: &DMatrix<f64>, nh: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let r = n - nh;
    let dim = n + r;
    let bl = Blocks::split(a, b, nh);
    let dbl = Blocks::split(da, b, nh);
    let b2i = bl
        .b2
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SpectralDegeneracy("viscosity block b2 is singular".into()))?;
    let mut m0 = DMatrix::zeros(dim, dim);
    let mut m1 = DMatrix::zeros(dim, dim);
    let (i0, ii0, z0) = (0, nh, n);
    // rows I
    let (r_i_i, r_i_ii, r_i_z, r1_i_i) = if nh > 0 {
        let astar = &bl.a11 - &bl.a12 * &b2i * &bl.b1;
        let g = astar
            .try_inverse()
            .ok_or_else(|| Error::SpectralDegeneracy("hyperbolic block A* is singular (characteristic)".into()))?;
        let p = &bl.a12 * &b2i;
        (
            -&g * (&dbl.a11 + &p * &bl.a21),
            -&g * (&dbl.a12 + &p * &bl.a22),
            -&g * &p,
            -g,
        )
    } else {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, r), DMatrix::zeros(0, r), DMatrix::zeros(0, 0))
    };
    m0.view_mut((i0, i0), (nh, nh)).copy_from(&r_i_i);
    m0.view_mut((i0, ii0), (nh, r)).copy_from(&r_i_ii);
    m0.view_mut((i0, z0), (nh, r)).copy_from(&r_i_z);
    m1.view_mut((i0, i0), (nh, nh)).copy_from(&r1_i_i);
    // rows II
    let q = &b2i * &bl.b1;
    m0.view_mut((ii0, i0), (r, nh)).copy_from(&(&b2i * &bl.a21 - &q * &r_i_i));
    m0.view_mut((ii0, ii0), (r, r)).copy_from(&(&b2i * &bl.a22 - &q * &r_i_ii));
    m0.view_mut((ii0, z0), (r, r)).copy_from(&(&b2i - &q * &r_i_z));
    m1.view_mut((ii0, i0), (r, nh)).copy_from(&(-&q * &r1_i_i));
    // rows z
    m1.view_mut((z0, ii0), (r, r)).copy_from(&DMatrix::identity(r, r));
    Ok((m0, m1))
}

fn push_row_major(m: &DMatrix<f64>, out: &mut Vec<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
}

/// Which bundle a splitting selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Unstable subspace at `-inf`.
    Minus,
    /// Stable subspace at `+inf`.
    Plus,
}

/// Eigen-decomposition of a limiting matrix with the selected group.
#[derive(Debug, Clone)]
pub struct Splitting {
    pub values: Vec<Complex64>,
    /// Right eigenvectors as columns.
    pub right: CMatrix,
    /// Left eigenvectors as rows, dual to `right`.
    pub left: CMatrix,
    pub selected: Vec<bool>,
}

impl Splitting {
    /// Spectral projector onto the selected group.
    pub fn projector(&self) -> CMatrix {
        let n = self.values.len();
        let mut p = CMatrix::zeros(n, n);
        for (j, &s) in self.selected.iter().enumerate() {
            if s {
                p += self.right.column(j) * self.left.row(j);
            }
        }
        p
    }

    /// `dP/dlambda` given `dM/dlambda = m1`, from first-order perturbation
    /// of the eigen-decomposition.
    pub fn projector_derivative(&self, m1: &CMatrix) -> CMatrix {
        let n = self.values.len();
        let mut dp = CMatrix::zeros(n, n);
        for i in 0..n {
            if !self.selected[i] {
                continue;
            }
            for j in 0..n {
                if self.selected[j] {
                    continue;
                }
                let gap = self.values[i] - self.values[j];
                let lij = (self.left.row(i) * m1 * self.right.column(j))[(0, 0)];
                let lji = (self.left.row(j) * m1 * self.right.column(i))[(0, 0)];
                dp += (self.right.column(i) * self.left.row(j) * lij + self.right.column(j) * self.left.row(i) * lji) / gap;
            }
        }
        dp
    }

    /// Sum of the selected eigenvalues, `tr(P M)`.
    pub fn trace(&self) -> Complex64 {
        self.values.iter().zip(&self.selected).filter(|(_, s)| **s).map(|(v, _)| *v).sum()
    }
}

/// Eigenvalues and a dual pair of eigenvector matrices.
fn eigen_decompose(m: &CMatrix) -> Result<(Vec<Complex64>, CMatrix, CMatrix)> {
    let n = m.nrows();
    let values = complex_eigenvalues(m)?;
    let scale = m.norm().max(1e-300);
    let mut right = CMatrix::zeros(n, n);
    for (j, &mu) in values.iter().enumerate() {
        let shifted = m - CMatrix::identity(n, n) * mu;
        let (v, _) = null_vector(&shifted);
        right.set_column(j, &v);
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= 1e-13 * scale {
                return Err(Error::Splitting {
                    re: values[i].re,
                    im: values[i].im,
                    reason: "repeated eigenvalue of the limiting matrix".into(),
                });
            }
        }
    }
    let left = right
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Splitting { re: 0.0, im: 0.0, reason: "limiting matrix is defective".into() })?;
    Ok((values, right, left))
}

impl EigenvalueOde {
    pub fn new(model: &FluxViscositySystem, profile: &ShockProfile) -> Result<Self> {
        let c = LinearizedCoefficients::new(model, profile)?;
        Self::from_coefficients(&c)
    }

    pub fn from_coefficients(c: &LinearizedCoefficients) -> Result<Self> {
        let (n, nh, r) = (c.n, c.nh, c.r);
        let dim = n + r;
        let len = c.len();
        let mut m0 = Vec::with_capacity(len * dim * dim);
        let mut m1 = Vec::with_capacity(len * dim * dim);
        for i in 0..len {
            let (a0, a1) = assemble(&c.a_at(i), &c.da_at(i), &c.b_at(i), nh)?;
            push_row_major(&a0, &mut m0);
            push_row_major(&a1, &mut m1);
        }
        let zero = DMatrix::zeros(n, n);
        let (m0_minus, m1_minus) = assemble(&c.a_minus, &zero, &c.b_minus, nh)?;
        let (m0_plus, m1_plus) = assemble(&c.a_plus, &zero, &c.b_plus, nh)?;
        let speeds = |a: &DMatrix<f64>| -> Result<Vec<f64>> {
            let mut v: Vec<f64> = a.complex_eigenvalues().iter().map(|z| z.re).collect();
            v.sort_by(|x, y| x.partial_cmp(y).unwrap());
            Ok(v)
        };
        let a_minus = speeds(&c.a_minus)?;
        let a_plus = speeds(&c.a_plus)?;
        let amin = a_minus.iter().chain(&a_plus).map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        let bmax = c.b_minus.norm().max(c.b_plus.norm()).max(1e-300);
        let lambda_slow = 0.05 * amin * amin / bmax;
        let mut ode = EigenvalueOde {
            n,
            nh,
            r,
            dim,
            h: c.h,
            x: c.x.clone(),
            m0,
            m1,
            m0_minus,
            m1_minus,
            m0_plus,
            m1_plus,
            a_minus,
            a_plus,
            lambda_slow,
            k_minus: 0,
            k_plus: 0,
        };
        let probe = Complex64::new(0.5 * lambda_slow, 0.0);
        ode.k_minus = ode.split_counting(Side::Minus, probe)?;
        ode.k_plus = ode.split_counting(Side::Plus, probe)?;
        if ode.k_minus + ode.k_plus != dim {
            return Err(Error::SpectralDegeneracy(format!(
                "bundle dimensions {} + {} do not add up to {dim}",
                ode.k_minus, ode.k_plus
            )));
        }
        Ok(ode)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
    pub fn center_index(&self) -> usize {
        (self.len() - 1) / 2
    }

    /// `M(x_i, lambda)` as a complex matrix.
    pub fn matrix(&self, i: usize, lambda: Complex64) -> CMatrix {
        let d = self.dim;
        let o = i * d * d;
        CMatrix::from_fn(d, d, |r, c| Complex64::new(self.m0[o + r * d + c], 0.0) + lambda * self.m1[o + r * d + c])
    }

    pub fn limit(&self, side: Side, lambda: Complex64) -> CMatrix {
        let (a, b) = match side {
            Side::Minus => (&self.m0_minus, &self.m1_minus),
            Side::Plus => (&self.m0_plus, &self.m1_plus),
        };
        CMatrix::from_fn(self.dim, self.dim, |r, c| Complex64::new(a[(r, c)], 0.0) + lambda * b[(r, c)])
    }

    pub fn limit_derivative(&self, side: Side) -> CMatrix {
        let b = match side {
            Side::Minus => &self.m1_minus,
            Side::Plus => &self.m1_plus,
        };
        b.map(|v| Complex64::new(v, 0.0))
    }

    pub fn bundle_dim(&self, side: Side) -> usize {
        match side {
            Side::Minus => self.k_minus,
            Side::Plus => self.k_plus,
        }
    }

    fn split_counting(&self, side: Side, lambda: Complex64) -> Result<usize> {
        Ok(self.select_slow(side, lambda)?.selected.iter().filter(|s| **s).count())
    }

    /// Slow-mode rule: the `n` eigenvalues closest to `-lambda / a_i` follow
    /// the sign of `a_i`; the remaining fast ones follow `Re mu`.
    fn select_slow(&self, side: Side, lambda: Complex64) -> Result<Splitting> {
        let m = self.limit(side, lambda);
        let (values, right, left) = eigen_decompose(&m)?;
        let speeds = match side {
            Side::Minus => &self.a_minus,
            Side::Plus => &self.a_plus,
        };
        let dim = self.dim;
        let mut taken = vec![false; dim];
        let mut selected = vec![false; dim];
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (s, &a) in speeds.iter().enumerate() {
            let target = -lambda / a;
            for (j, v) in values.iter().enumerate() {
                pairs.push(((v - target).norm(), s, j));
            }
        }
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut speed_done = vec![false; speeds.len()];
        for (_, s, j) in pairs {
            if speed_done[s] || taken[j] {
                continue;
            }
            speed_done[s] = true;
            taken[j] = true;
            let a = speeds[s];
            selected[j] = match side {
                Side::Minus => a < 0.0,
                Side::Plus => a > 0.0,
            };
        }
        for j in 0..dim {
            if !taken[j] {
                let re = values[j].re;
                if re == 0.0 {
                    return Err(Error::Splitting {
                        re: lambda.re,
                        im: lambda.im,
                        reason: "fast eigenvalue on the imaginary axis".into(),
                    });
                }
                selected[j] = match side {
                    Side::Minus => re > 0.0,
                    Side::Plus => re < 0.0,
                };
            }
        }
        Ok(Splitting { values, right, left, selected })
    }

    /// Analytic splitting at `lambda`: the unstable bundle at `-inf` or the
    /// stable bundle at `+inf`, continued through `lambda = 0`.
    pub fn splitting(&self, side: Side, lambda: Complex64) -> Result<Splitting> {
        if lambda.norm() < self.lambda_slow {
            let s = self.select_slow(side, lambda)?;
            if s.selected.iter().filter(|x| **x).count() != self.bundle_dim(side) {
                return Err(Error::Splitting { re: lambda.re, im: lambda.im, reason: "slow-mode count changed".into() });
            }
            return Ok(s);
        }
        let m = self.limit(side, lambda);
        let (values, right, left) = eigen_decompose(&m)?;
        let k = self.bundle_dim(side);
        let mut order: Vec<usize> = (0..self.dim).collect();
        // unstable at -inf: the k largest real parts; stable at +inf: the k smallest
        match side {
            Side::Minus => order.sort_by(|&a, &b| values[b].re.partial_cmp(&values[a].re).unwrap()),
            Side::Plus => order.sort_by(|&a, &b| values[a].re.partial_cmp(&values[b].re).unwrap()),
        }
        if k > 0 && k < self.dim {
            let (last, next) = (values[order[k - 1]].re, values[order[k]].re);
            if (last - next).abs() <= 1e-12 * (1.0 + last.abs()) {
                return Err(Error::Splitting {
                    re: lambda.re,
                    im: lambda.im,
                    reason: "no spectral gap between the bundles".into(),
                });
            }
        }
        let mut selected = vec![false; self.dim];
        for &j in &order[..k] {
            selected[j] = true;
        }
        Ok(Splitting { values, right, left, selected })
    }
}

/// `EigenvalueOde` fixed at one spectral parameter.
#[derive(Debug, Clone)]
pub struct EigenvalueSystem<'a> {
    pub ode: &'a EigenvalueOde,
    pub lambda: Complex64,
}

impl EigenvalueSystem<'_> {
    pub fn dim(&self) -> usize {
        self.ode.dim
    }
    pub fn matrix(&self, i: usize) -> CMatrix {
        self.ode.matrix(i, self.lambda)
    }
    pub fn limit_minus(&self) -> CMatrix {
        self.ode.limit(Side::Minus, self.lambda)
    }
    pub fn limit_plus(&self) -> CMatrix {
        self.ode.limit(Side::Plus, self.lambda)
    }
    pub fn unstable_dim_minus(&self) -> usize {
        self.ode.k_minus
    }
    pub fn stable_dim_plus(&self) -> usize {
        self.ode.k_plus
    }
    /// True when all coefficient matrices are real (real `lambda`).
    pub fn is_real(&self) -> bool {
        self.lambda.im == 0.0
    }
}

/// Binds an assembled `EigenvalueOde` to a spectral parameter.
pub fn eigenvalue_system(ode: &EigenvalueOde, lambda: Complex64) -> EigenvalueSystem<'_> {
    EigenvalueSystem { ode, lambda }
}
