//! Structural assumptions on the endstates: symmetry and positivity of the
//! flux Jacobians, genuine coupling, and positivity of the viscosity block.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::FluxViscositySystem;
use crate::error::Result;
use crate::linalg::real_eigen;

/// Relative tolerance of the genuine-coupling kernel test.
pub const A2_TOL: f64 = 1e-8;
/// Relative tolerance for symmetry checks.
pub const SYM_TOL: f64 = 1e-12;
/// Relative tolerance on imaginary parts when diagonalizing `A`.
pub const EIG_IMAG_TOL: f64 = 1e-10;

/// Verdicts and witnesses at one endstate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndstateAssumptions {
    pub state: Vec<f64>,
    pub df1_symmetric: bool,
    pub df1_11_symmetric: bool,
    pub df0_symmetric: bool,
    pub df0_positive: bool,
    pub a1_ok: bool,
    /// `None` when `A = dF1 dF0^{-1}` is not diagonalizable with real
    /// eigenvalues; the coupling test is then indeterminate.
    pub a2_ok: Option<bool>,
    pub a3_ok: bool,
    /// Smallest eigenvalue of the symmetric part of `dF0`.
    pub df0_min_eig: f64,
    /// Eigenvalues of `A = dF1 dF0^{-1}` (ascending), when real.
    pub speeds: Option<Vec<f64>>,
    /// `|B dF0^{-1} v| / |v|` for each eigenvector `v` of `A`.
    pub coupling_ratios: Vec<f64>,
    /// Real parts of the eigenvalues of the viscosity block `b`.
    pub b_eig_re: Vec<f64>,
    /// Row-major `A`.
    pub a_matrix: Vec<f64>,
}

/// Outcome of [`check_assumptions`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub minus: EndstateAssumptions,
    pub plus: EndstateAssumptions,
    pub a1_ok: bool,
    pub a2_ok: Option<bool>,
    pub a3_ok: bool,
    pub strictly_parabolic: bool,
    pub a2_tol: f64,
    pub sym_tol: f64,
}

impl AssumptionReport {
    /// All three assumptions hold literally at both endstates.
    pub fn all_pass(&self) -> bool {
        self.a1_ok && self.a2_ok == Some(true) && self.a3_ok
    }

    /// Genuine coupling, positive viscosity block and real diagonalizable
    /// `A` at both endstates. Symmetry in (A1) is coordinate dependent and is
    /// reported but not required here.
    pub fn structural_ok(&self) -> bool {
        self.a2_ok == Some(true) && self.a3_ok && self.minus.df0_positive && self.plus.df0_positive
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.norm().max(1.0);
    (m - m.transpose()).norm() <= SYM_TOL * scale
}

fn endstate(model: &FluxViscositySystem, u: &DVector<f64>) -> Result<EndstateAssumptions> {
    let ev = model.evaluate(u)?;
    let n = model.n();
    let h = model.hyperbolic_dim();
    let df1_symmetric = is_symmetric(&ev.df1);
    let df1_11_symmetric = h == 0 || is_symmetric(&ev.df1.view((0, 0), (h, h)).into_owned());
    let df0_symmetric = is_symmetric(&ev.df0);
    let sym0 = (&ev.df0 + ev.df0.transpose()) * 0.5;
    let df0_min_eig = sym0.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    let df0_positive = df0_min_eig > 0.0;
    let a1_ok = df1_symmetric && df1_11_symmetric && df0_symmetric && df0_positive;

    let b_block = ev.b.view((h, h), (model.r(), model.r())).into_owned();
    let b_eig_re: Vec<f64> = b_block.complex_eigenvalues().iter().map(|z| z.re).collect();
    let a3_ok = b_eig_re.iter().all(|&x| x > 0.0);

    let df0_inv = ev.df0.clone().try_inverse();
    let (a2_ok, speeds, coupling_ratios, a_matrix) = match df0_inv {
        None => (None, None, vec![], vec![]),
        Some(inv) => {
            let a = &ev.df1 * &inv;
            let bt = &ev.b * &inv;
            let a_matrix: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a[(i, j)]).collect();
            match real_eigen(&a, EIG_IMAG_TOL) {
                Err(_) => (None, None, vec![], a_matrix),
                Ok(eig) => {
                    let ratios: Vec<f64> = (0..n)
                        .map(|j| {
                            let v = eig.right.column(j);
                            (&bt * v).norm() / v.norm()
                        })
                        .collect();
                    let ok = ratios.iter().all(|&r| r >= A2_TOL);
                    (Some(ok), Some(eig.values), ratios, a_matrix)
                }
            }
        }
    };
    Ok(EndstateAssumptions {
        state: u.iter().cloned().collect(),
        df1_symmetric,
        df1_11_symmetric,
        df0_symmetric,
        df0_positive,
        a1_ok,
        a2_ok,
        a3_ok,
        df0_min_eig,
        speeds,
        coupling_ratios,
        b_eig_re,
        a_matrix,
    })
}

/// Checks the structural assumptions at both endstates.
pub fn check_assumptions(
    model: &FluxViscositySystem,
    u_minus: &DVector<f64>,
    u_plus: &DVector<f64>,
) -> Result<AssumptionReport> {
    let minus = endstate(model, u_minus)?;
    let plus = endstate(model, u_plus)?;
    let a2_ok = match (minus.a2_ok, plus.a2_ok) {
        (Some(a), Some(b)) => Some(a && b),
        (Some(false), None) | (None, Some(false)) => Some(false),
        _ => None,
    };
    Ok(AssumptionReport {
        a1_ok: minus.a1_ok && plus.a1_ok,
        a2_ok,
        a3_ok: minus.a3_ok && plus.a3_ok,
        strictly_parabolic: model.f0_is_identity() && model.r() == model.n(),
        minus,
        plus,
        a2_tol: A2_TOL,
        sym_tol: SYM_TOL,
    })
}
