//! Coefficients of the linearized operator `Lw = -(A w)' + (B~ w')'` about a
//! profile, sampled on the profile grid.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::derivative;
use crate::models::FluxViscositySystem;
use crate::profile::ShockProfile;

/// `A(x)`, `A'(x)` and `B~(x)` on the profile grid, row-major `n x n` blocks.
#[derive(Debug, Clone)]
pub struct LinearizedCoefficients {
    pub n: usize,
    /// Size of the hyperbolic block.
    pub nh: usize,
    pub r: usize,
    pub h: f64,
    pub x: Vec<f64>,
    /// `A w = dF~(W) w - (dB~(W) w) W'`.
    pub a: Vec<f64>,
    pub da: Vec<f64>,
    pub b: Vec<f64>,
    /// `A` at the endstates.
    pub a_minus: DMatrix<f64>,
    pub a_plus: DMatrix<f64>,
    pub b_minus: DMatrix<f64>,
    pub b_plus: DMatrix<f64>,
}

impl LinearizedCoefficients {
    pub fn new(model: &FluxViscositySystem, profile: &ShockProfile) -> Result<Self> {
        let n = model.n();
        if profile.n != n {
            return Err(Error::DimensionMismatch { expected: n, got: profile.n });
        }
        let len = profile.len();
        let nn = n * n;
        let mut a = vec![0.0; len * nn];
        let mut b = vec![0.0; len * nn];
        for i in 0..len {
            let u = DVector::from_column_slice(profile.u_at(i));
            let dw = DVector::from_column_slice(profile.dw_at(i));
            let mut ai = model.dftilde_at_u(&u);
            for k in 0..n {
                let mut e = DVector::zeros(n);
                e[k] = 1.0;
                let col = model.dbtilde_dir_at_u(&u, &e) * &dw;
                for row in 0..n {
                    ai[(row, k)] -= col[row];
                }
            }
            let bi = model.btilde_at_u(&u);
            for row in 0..n {
                for col in 0..n {
                    a[i * nn + row * n + col] = ai[(row, col)];
                    b[i * nn + row * n + col] = bi[(row, col)];
                }
            }
        }
        let mut da = vec![0.0; len * nn];
        for e in 0..nn {
            let series: Vec<f64> = (0..len).map(|i| a[i * nn + e]).collect();
            let d = derivative(&series, profile.h);
            for i in 0..len {
                da[i * nn + e] = d[i];
            }
        }
        Ok(LinearizedCoefficients {
            n,
            nh: model.hyperbolic_dim(),
            r: model.r(),
            h: profile.h,
            x: profile.x.clone(),
            a,
            da,
            b,
            a_minus: model.dftilde_at_u(&profile.u_minus),
            a_plus: model.dftilde_at_u(&profile.u_plus),
            b_minus: model.btilde_at_u(&profile.u_minus),
            b_plus: model.btilde_at_u(&profile.u_plus),
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
    fn block(&self, v: &[f64], i: usize) -> DMatrix<f64> {
        let nn = self.n * self.n;
        DMatrix::from_row_slice(self.n, self.n, &v[i * nn..(i + 1) * nn])
    }
    pub fn a_at(&self, i: usize) -> DMatrix<f64> {
        self.block(&self.a, i)
    }
    pub fn da_at(&self, i: usize) -> DMatrix<f64> {
        self.block(&self.da, i)
    }
    pub fn b_at(&self, i: usize) -> DMatrix<f64> {
        self.block(&self.b, i)
    }
}

/// Blocks of `A` and `B~` split as hyperbolic (`I`, first `n - r`) and
/// parabolic (`II`) components.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub a11: DMatrix<f64>,
    pub a12: DMatrix<f64>,
    pub a21: DMatrix<f64>,
    pub a22: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
}

impl Blocks {
    pub fn split(a: &DMatrix<f64>, b: &DMatrix<f64>, nh: usize) -> Blocks {
        let n = a.nrows();
        let r = n - nh;
        Blocks {
            a11: a.view((0, 0), (nh, nh)).into_owned(),
            a12: a.view((0, nh), (nh, r)).into_owned(),
            a21: a.view((nh, 0), (r, nh)).into_owned(),
            a22: a.view((nh, nh), (r, r)).into_owned(),
            b1: b.view((nh, 0), (r, nh)).into_owned(),
            b2: b.view((nh, nh), (r, r)).into_owned(),
        }
    }
}

/// Discrete `L w` for a sampled field `w` (row-major `[i * n + k]`), using
/// sixth-order differences.
pub fn apply_operator(c: &LinearizedCoefficients, w: &[f64], lambda_shift: f64) -> Vec<f64> {
    let n = c.n;
    let len = c.len();
    let mut aw = vec![0.0; len * n];
    let mut bwx = vec![0.0; len * n];
    let wx = crate::profile::fd_derivative_field(w, n, c.h);
    for i in 0..len {
        let a = c.a_at(i);
        let b = c.b_at(i);
        let wi = DVector::from_column_slice(&w[i * n..(i + 1) * n]);
        let wxi = DVector::from_column_slice(&wx[i * n..(i + 1) * n]);
        let p = a * wi;
        let q = b * wxi;
        for k in 0..n {
            aw[i * n + k] = p[k];
            bwx[i * n + k] = q[k];
        }
    }
    let daw = crate::profile::fd_derivative_field(&aw, n, c.h);
    let dbwx = crate::profile::fd_derivative_field(&bwx, n, c.h);
    (0..len * n).map(|j| -daw[j] + dbwx[j] - lambda_shift * w[j]).collect()
}

/// Discrete `L^2` norm of `L W'` over the interior of the grid. The
/// translation mode makes this vanish up to discretization error.
pub fn translation_residual(model: &FluxViscositySystem, profile: &ShockProfile) -> Result<f64> {
    let c = LinearizedCoefficients::new(model, profile)?;
    let lw = apply_operator(&c, &profile.dw, 0.0);
    let n = c.n;
    let len = c.len();
    // stay clear of the one-sided stencils at the grid ends
    let skip = 6;
    let mut s = 0.0;
    for i in skip..len - skip {
        for k in 0..n {
            s += lw[i * n + k] * lw[i * n + k];
        }
    }
    Ok((s * c.h).sqrt())
}
