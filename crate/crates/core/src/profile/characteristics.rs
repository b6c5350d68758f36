//! Characteristic speeds, eigenvector fields and diffusion rates along a
//! profile, and shock classification.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ShockProfile;
use crate::error::{Error, Result};
use crate::linalg::{derivative, real_eigen, RealEigen};
use crate::models::FluxViscositySystem;

/// Shock type from the characteristic counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShockType {
    Lax,
    Undercompressive,
    Overcompressive,
}

impl ShockType {
    /// Kernel flag: 1 for undercompressive, 0 for Lax, `None` when the type
    /// is not supported downstream.
    pub fn gamma(self) -> Option<u8> {
        match self {
            ShockType::Lax => Some(0),
            ShockType::Undercompressive => Some(1),
            ShockType::Overcompressive => None,
        }
    }
    pub fn supported(self) -> bool {
        self.gamma().is_some()
    }
}

/// Classifies from the number of negative speeds at `+inf` and `-inf`.
pub fn classify_shock(i_plus: usize, i_minus: usize) -> ShockType {
    if i_plus == i_minus + 1 {
        ShockType::Lax
    } else if i_plus <= i_minus {
        ShockType::Undercompressive
    } else {
        ShockType::Overcompressive
    }
}

/// Characteristic data at the two endstates.
#[derive(Debug, Clone, Serialize)]
pub struct EndstateCharacteristics {
    pub a_minus: Vec<f64>,
    pub a_plus: Vec<f64>,
    /// Left eigenvectors as rows, dual to `r_minus`.
    #[serde(skip)]
    pub l_minus: DMatrix<f64>,
    #[serde(skip)]
    pub r_minus: DMatrix<f64>,
    #[serde(skip)]
    pub l_plus: DMatrix<f64>,
    #[serde(skip)]
    pub r_plus: DMatrix<f64>,
    pub beta_minus: Vec<f64>,
    pub beta_plus: Vec<f64>,
    pub i_minus: usize,
    pub i_plus: usize,
    pub shock_type: ShockType,
}

fn endstate_eigen(model: &FluxViscositySystem, u: &DVector<f64>) -> Result<(RealEigen, Vec<f64>)> {
    let a = model.dftilde_at_u(u);
    let eig = real_eigen(&a, 1e-10)?;
    let scale = eig.values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    for w in eig.values.windows(2) {
        if (w[1] - w[0]).abs() <= 1e-10 * scale {
            return Err(Error::SpectralDegeneracy(format!("repeated characteristic speed {:.6e}", w[0])));
        }
    }
    if eig.values.iter().any(|v| v.abs() <= 1e-12 * scale) {
        return Err(Error::SpectralDegeneracy("characteristic speed zero at an endstate".into()));
    }
    let bt = model.btilde_at_u(u);
    let beta = (0..model.n())
        .map(|k| {
            let l = eig.left.row(k);
            let r = eig.right.column(k);
            (l * &bt * r)[(0, 0)]
        })
        .collect();
    Ok((eig, beta))
}

/// Speeds, eigenvectors, diffusion rates and shock type at the endstates.
pub fn endstate_characteristics(
    model: &FluxViscositySystem,
    u_minus: &DVector<f64>,
    u_plus: &DVector<f64>,
) -> Result<EndstateCharacteristics> {
    let (em, bm) = endstate_eigen(model, u_minus)?;
    let (ep, bp) = endstate_eigen(model, u_plus)?;
    let i_minus = em.values.iter().filter(|v| **v < 0.0).count();
    let i_plus = ep.values.iter().filter(|v| **v < 0.0).count();
    Ok(EndstateCharacteristics {
        a_minus: em.values.clone(),
        a_plus: ep.values.clone(),
        l_minus: em.left,
        r_minus: em.right,
        l_plus: ep.left,
        r_plus: ep.right,
        beta_minus: bm,
        beta_plus: bp,
        i_minus,
        i_plus,
        shock_type: classify_shock(i_plus, i_minus),
    })
}

/// Eigenvector fields of `dF~(W(x))` tracked on one half-line.
#[derive(Debug, Clone)]
pub struct HalfLineField {
    /// Grid indices covered, in increasing order.
    pub first: usize,
    pub len: usize,
    n: usize,
    /// Speeds `a_j(x)`, `[i * n + j]`.
    pub speeds: Vec<f64>,
    /// Left eigenvectors, `[i * n * n + j * n + a]` is component `a` of `l_j`.
    pub left: Vec<f64>,
    /// Right eigenvectors, `[i * n * n + j * n + a]` is component `a` of `r_j`.
    pub right: Vec<f64>,
    /// `d l_j / dx`, same layout as `left`.
    pub dleft: Vec<f64>,
}

impl HalfLineField {
    /// `l_j` at the global grid index `i`.
    pub fn l(&self, i: usize, j: usize) -> &[f64] {
        let k = i - self.first;
        let o = k * self.n * self.n + j * self.n;
        &self.left[o..o + self.n]
    }
    pub fn dl(&self, i: usize, j: usize) -> &[f64] {
        let k = i - self.first;
        let o = k * self.n * self.n + j * self.n;
        &self.dleft[o..o + self.n]
    }
    pub fn r(&self, i: usize, j: usize) -> &[f64] {
        let k = i - self.first;
        let o = k * self.n * self.n + j * self.n;
        &self.right[o..o + self.n]
    }
    pub fn speed(&self, i: usize, j: usize) -> f64 {
        self.speeds[(i - self.first) * self.n + j]
    }
    pub fn contains(&self, i: usize) -> bool {
        i >= self.first && i < self.first + self.len
    }
}

/// Endstate data plus eigenvector fields along the profile.
#[derive(Debug, Clone)]
pub struct CharacteristicData {
    pub ends: EndstateCharacteristics,
    /// Fields for `x <= 0`, tracked from `-X`.
    pub minus_field: HalfLineField,
    /// Fields for `x >= 0`, tracked from `+X`.
    pub plus_field: HalfLineField,
    /// Largest violation of `l_i r_j = delta_ij` on the grid.
    pub biorthogonality_error: f64,
}

impl CharacteristicData {
    pub fn shock_type(&self) -> ShockType {
        self.ends.shock_type
    }
    pub fn i_minus(&self) -> usize {
        self.ends.i_minus
    }
    pub fn i_plus(&self) -> usize {
        self.ends.i_plus
    }
}

/// Tracks one half-line from its outer end inward; `order` lists the global
/// indices in tracking order.
fn track(
    model: &FluxViscositySystem,
    profile: &ShockProfile,
    order: &[usize],
    end_eig: &RealEigen,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    let n = profile.n;
    let m = order.len();
    let mut speeds = vec![0.0; m * n];
    let mut left = vec![0.0; m * n * n];
    let mut right = vec![0.0; m * n * n];
    let mut prev_r = end_eig.right.clone();
    let mut prev_l = end_eig.left.clone();
    let mut prev_vals = end_eig.values.clone();
    let mut err = 0.0f64;
    for (k, &i) in order.iter().enumerate() {
        let u = DVector::from_column_slice(profile.u_at(i));
        let a = model.dftilde_at_u(&u);
        let scale = a.norm().max(1.0);
        let fresh = real_eigen(&a, 1e-9).ok().filter(|e| {
            e.values.windows(2).all(|w| (w[1] - w[0]).abs() > 1e-7 * scale)
        });
        match fresh {
            Some(e) => {
                // match columns to the previous point by largest overlap
                let mut used = vec![false; n];
                let mut r = DMatrix::zeros(n, n);
                let mut vals = vec![0.0; n];
                for j in 0..n {
                    let pj = prev_r.column(j);
                    let mut best = (0, -1.0, 1.0);
                    for c in 0..n {
                        if used[c] {
                            continue;
                        }
                        let dot = pj.dot(&e.right.column(c));
                        if dot.abs() > best.1 {
                            best = (c, dot.abs(), dot.signum());
                        }
                    }
                    used[best.0] = true;
                    let s = if best.2 == 0.0 { 1.0 } else { best.2 };
                    r.set_column(j, &(e.right.column(best.0) * s));
                    vals[j] = e.values[best.0];
                }
                let l = r.clone().try_inverse().ok_or_else(|| {
                    Error::SpectralDegeneracy("eigenvectors became dependent along the profile".into())
                })?;
                prev_r = r;
                prev_l = l;
                prev_vals = vals;
            }
            None => {
                // degenerate point: keep the previous frame
            }
        }
        let bi = (&prev_l * &prev_r - DMatrix::<f64>::identity(n, n)).amax();
        err = err.max(bi);
        for j in 0..n {
            speeds[k * n + j] = prev_vals[j];
            for c in 0..n {
                left[k * n * n + j * n + c] = prev_l[(j, c)];
                right[k * n * n + j * n + c] = prev_r[(c, j)];
            }
        }
    }
    Ok((speeds, left, right, err))
}

fn make_field(first: usize, n: usize, h: f64, speeds: Vec<f64>, left: Vec<f64>, right: Vec<f64>) -> HalfLineField {
    let len = speeds.len() / n;
    let mut dleft = vec![0.0; left.len()];
    for j in 0..n {
        for c in 0..n {
            let comp: Vec<f64> = (0..len).map(|k| left[k * n * n + j * n + c]).collect();
            let d = derivative(&comp, h);
            for k in 0..len {
                dleft[k * n * n + j * n + c] = d[k];
            }
        }
    }
    HalfLineField { first, len, n, speeds, left, right, dleft }
}

/// Speeds, eigenvector fields (sign-continuous, biorthonormal), diffusion
/// rates and counts for a computed profile.
pub fn characteristic_data(model: &FluxViscositySystem, profile: &ShockProfile) -> Result<CharacteristicData> {
    let ends = endstate_characteristics(model, &profile.u_minus, &profile.u_plus)?;
    let n = profile.n;
    let c = profile.center_index();
    let len = profile.len();

    let em = RealEigen { values: ends.a_minus.clone(), right: ends.r_minus.clone(), left: ends.l_minus.clone() };
    let ep = RealEigen { values: ends.a_plus.clone(), right: ends.r_plus.clone(), left: ends.l_plus.clone() };

    let order_m: Vec<usize> = (0..=c).collect();
    let (sm, lm, rm, e1) = track(model, profile, &order_m, &em)?;
    let minus_field = make_field(0, n, profile.h, sm, lm, rm);

    let order_p: Vec<usize> = (c..len).rev().collect();
    let (sp, lp, rp, e2) = track(model, profile, &order_p, &ep)?;
    // store in increasing index order
    let m = order_p.len();
    let mut sp2 = vec![0.0; sp.len()];
    let mut lp2 = vec![0.0; lp.len()];
    let mut rp2 = vec![0.0; rp.len()];
    for k in 0..m {
        let kk = m - 1 - k;
        sp2[kk * n..(kk + 1) * n].copy_from_slice(&sp[k * n..(k + 1) * n]);
        lp2[kk * n * n..(kk + 1) * n * n].copy_from_slice(&lp[k * n * n..(k + 1) * n * n]);
        rp2[kk * n * n..(kk + 1) * n * n].copy_from_slice(&rp[k * n * n..(k + 1) * n * n]);
    }
    let plus_field = make_field(c, n, profile.h, sp2, lp2, rp2);

    for (k, b) in ends.beta_minus.iter().enumerate() {
        if ends.a_minus[k] > 0.0 && !(*b > 0.0) {
            return Err(Error::SpectralDegeneracy(format!("diffusion rate beta_{k}- = {b:.3e} is not positive")));
        }
    }
    for (k, b) in ends.beta_plus.iter().enumerate() {
        if ends.a_plus[k] < 0.0 && !(*b > 0.0) {
            return Err(Error::SpectralDegeneracy(format!("diffusion rate beta_{k}+ = {b:.3e} is not positive")));
        }
    }
    Ok(CharacteristicData { ends, minus_field, plus_field, biorthogonality_error: e1.max(e2) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_examples() {
        assert_eq!(classify_shock(1, 0), ShockType::Lax);
        assert_eq!(classify_shock(1, 1), ShockType::Undercompressive);
        assert_eq!(classify_shock(2, 0), ShockType::Overcompressive);
        assert_eq!(ShockType::Undercompressive.gamma(), Some(1));
        assert_eq!(ShockType::Lax.gamma(), Some(0));
        assert!(!ShockType::Overcompressive.supported());
    }

    #[test]
    fn classification_is_exhaustive() {
        for n in 1..=4usize {
            for ip in 0..=n {
                for im in 0..=n {
                    let t = classify_shock(ip, im);
                    let expected = if ip == im + 1 {
                        ShockType::Lax
                    } else if ip <= im {
                        ShockType::Undercompressive
                    } else {
                        ShockType::Overcompressive
                    };
                    assert_eq!(t, expected);
                }
            }
        }
    }
}
