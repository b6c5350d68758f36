//! Hyperbolic–parabolic systems `F0(U)_t + F1(U)_x = (B(U) U_x)_x` with a
//! block-degenerate viscosity `B = [[0, 0], [0, b]]`.

mod assumptions;
mod builtin;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::fd_jacobian;

pub use assumptions::{check_assumptions, AssumptionReport, EndstateAssumptions, A2_TOL};
pub use builtin::{burgers, cubic, psystem, quadratic};

/// Vector-valued map `U -> R^n`, writing into the output slice.
pub type VecMap = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Matrix-valued map `U -> R^{n x n}`, row-major output.
pub type MatMap = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Partial derivative `dB/dU_k`, row-major output.
pub type ViscDeriv = Arc<dyn Fn(&[f64], usize, &mut [f64]) + Send + Sync>;
/// Admissibility predicate on states.
pub type Admissible = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A model of the class `F0(U)_t + F1(U)_x = (B(U) U_x)_x`.
#[derive(Clone)]
pub struct FluxViscositySystem {
    name: String,
    n: usize,
    r: usize,
    f0: Option<VecMap>,
    f0_inv: Option<VecMap>,
    f1: VecMap,
    visc: MatMap,
    df0: Option<MatMap>,
    df1: Option<MatMap>,
    dvisc: Option<ViscDeriv>,
    admissible: Option<Admissible>,
    frame_speed: f64,
}

impl fmt::Debug for FluxViscositySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FluxViscositySystem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("r", &self.r)
            .field("f0_identity", &self.f0.is_none())
            .field("frame_speed", &self.frame_speed)
            .finish()
    }
}

/// Pointwise model data at one state.
#[derive(Debug, Clone)]
pub struct SystemEval {
    pub f0: DVector<f64>,
    pub f1: DVector<f64>,
    pub b: DMatrix<f64>,
    pub df0: DMatrix<f64>,
    pub df1: DMatrix<f64>,
}

/// Builder for custom models.
pub struct SystemBuilder {
    name: String,
    n: usize,
    r: usize,
    f0: Option<VecMap>,
    f0_inv: Option<VecMap>,
    f1: Option<VecMap>,
    visc: Option<MatMap>,
    df0: Option<MatMap>,
    df1: Option<MatMap>,
    dvisc: Option<ViscDeriv>,
    admissible: Option<Admissible>,
}

impl SystemBuilder {
    /// Conserved quantity map; identity when not set.
    pub fn f0(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.f0 = Some(Arc::new(f));
        self
    }
    /// Inverse of `F0`; Newton iteration is used when not set.
    pub fn f0_inverse(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.f0_inv = Some(Arc::new(f));
        self
    }
    pub fn f1(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.f1 = Some(Arc::new(f));
        self
    }
    /// Full `n x n` viscosity matrix `B(U)`, row-major.
    pub fn viscosity(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.visc = Some(Arc::new(f));
        self
    }
    pub fn df0(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.df0 = Some(Arc::new(f));
        self
    }
    pub fn df1(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.df1 = Some(Arc::new(f));
        self
    }
    /// `dB/dU_k` for each `k`, row-major.
    pub fn viscosity_derivative(
        mut self,
        f: impl Fn(&[f64], usize, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.dvisc = Some(Arc::new(f));
        self
    }
    pub fn admissible(mut self, f: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.admissible = Some(Arc::new(f));
        self
    }

    pub fn build(self) -> Result<FluxViscositySystem> {
        if self.n == 0 {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        if self.r == 0 || self.r > self.n {
            return Err(Error::InvalidInput(format!(
                "parabolic block size r = {} must satisfy 0 < r <= n = {}",
                self.r, self.n
            )));
        }
        let f1 = self.f1.ok_or_else(|| Error::InvalidInput("missing flux F1".into()))?;
        let visc = self.visc.ok_or_else(|| Error::InvalidInput("missing viscosity B".into()))?;
        Ok(FluxViscositySystem {
            name: self.name,
            n: self.n,
            r: self.r,
            f0: self.f0,
            f0_inv: self.f0_inv,
            f1,
            visc,
            df0: self.df0,
            df1: self.df1,
            dvisc: self.dvisc,
            admissible: self.admissible,
            frame_speed: 0.0,
        })
    }
}

impl FluxViscositySystem {
    pub fn builder(name: &str, n: usize, r: usize) -> SystemBuilder {
        SystemBuilder {
            name: name.to_string(),
            n,
            r,
            f0: None,
            f0_inv: None,
            f1: None,
            visc: None,
            df0: None,
            df1: None,
            dvisc: None,
            admissible: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r(&self) -> usize {
        self.r
    }
    /// Number of hyperbolic (non-diffused) components, `n - r`.
    pub fn hyperbolic_dim(&self) -> usize {
        self.n - self.r
    }
    pub fn f0_is_identity(&self) -> bool {
        self.f0.is_none()
    }
    pub fn frame_speed(&self) -> f64 {
        self.frame_speed
    }

    /// The same model seen in a frame moving with speed `s`:
    /// `F1 -> F1 - s F0`.
    pub fn with_frame_speed(mut self, s: f64) -> Self {
        self.frame_speed = s;
        self
    }

    pub fn is_admissible(&self, u: &[f64]) -> bool {
        u.len() == self.n
            && u.iter().all(|v| v.is_finite())
            && self.admissible.as_ref().map_or(true, |a| a(u))
    }

    fn check_state(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: u.len() });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state"));
        }
        if let Some(a) = &self.admissible {
            if !a(u) {
                return Err(Error::InvalidInput(format!("state {u:?} outside the admissible set of `{}`", self.name)));
            }
        }
        Ok(())
    }

    pub fn f0_into(&self, u: &[f64], out: &mut [f64]) {
        match &self.f0 {
            Some(f) => f(u, out),
            None => out.copy_from_slice(u),
        }
    }

    /// Flux in the current frame, `F1(U) - s F0(U)`.
    pub fn f1_into(&self, u: &[f64], out: &mut [f64]) {
        (self.f1)(u, out);
        if self.frame_speed != 0.0 {
            let s = self.frame_speed;
            match &self.f0 {
                None => {
                    for i in 0..self.n {
                        out[i] -= s * u[i];
                    }
                }
                Some(f0) => {
                    let mut w = vec![0.0; self.n];
                    f0(u, &mut w);
                    for i in 0..self.n {
                        out[i] -= s * w[i];
                    }
                }
            }
        }
    }

    pub fn visc_into(&self, u: &[f64], out: &mut [f64]) {
        (self.visc)(u, out);
        let n = self.n;
        for i in 0..(n - self.r) {
            for j in 0..n {
                out[i * n + j] = 0.0;
            }
        }
    }

    pub fn df0_into(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        match (&self.f0, &self.df0) {
            (None, _) => {
                out.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..n {
                    out[i * n + i] = 1.0;
                }
            }
            (Some(_), Some(d)) => d(u, out),
            (Some(_), None) => {
                let j = fd_jacobian(|x, o| self.f0_into(x, o), u, n);
                copy_row_major(&j, out);
            }
        }
    }

    pub fn df1_into(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        match &self.df1 {
            Some(d) => {
                d(u, out);
                if self.frame_speed != 0.0 {
                    let mut d0 = vec![0.0; n * n];
                    self.df0_into(u, &mut d0);
                    for k in 0..n * n {
                        out[k] -= self.frame_speed * d0[k];
                    }
                }
            }
            None => {
                let j = fd_jacobian(|x, o| self.f1_into(x, o), u, n);
                copy_row_major(&j, out);
            }
        }
    }

    /// `dB/dU_k` at `u`, row-major.
    pub fn dvisc_into(&self, u: &[f64], k: usize, out: &mut [f64]) {
        let n = self.n;
        match &self.dvisc {
            Some(d) => d(u, k, out),
            None => {
                let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                let h = f64::EPSILON.cbrt() * norm.max(1.0);
                let mut up = u.to_vec();
                let mut um = u.to_vec();
                up[k] += h;
                um[k] -= h;
                let mut bp = vec![0.0; n * n];
                let mut bm = vec![0.0; n * n];
                self.visc_into(&up, &mut bp);
                self.visc_into(&um, &mut bm);
                for i in 0..n * n {
                    out[i] = (bp[i] - bm[i]) / (2.0 * h);
                }
            }
        }
        for i in 0..(n - self.r) {
            for j in 0..n {
                out[i * n + j] = 0.0;
            }
        }
    }

    pub fn f0(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        self.f0_into(u.as_slice(), out.as_mut_slice());
        out
    }
    pub fn f1(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        self.f1_into(u.as_slice(), out.as_mut_slice());
        out
    }
    pub fn visc(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let mut out = vec![0.0; self.n * self.n];
        self.visc_into(u.as_slice(), &mut out);
        DMatrix::from_row_slice(self.n, self.n, &out)
    }
    pub fn df0(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let mut out = vec![0.0; self.n * self.n];
        self.df0_into(u.as_slice(), &mut out);
        DMatrix::from_row_slice(self.n, self.n, &out)
    }
    pub fn df1(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let mut out = vec![0.0; self.n * self.n];
        self.df1_into(u.as_slice(), &mut out);
        DMatrix::from_row_slice(self.n, self.n, &out)
    }
    pub fn dvisc(&self, u: &DVector<f64>, k: usize) -> DMatrix<f64> {
        let mut out = vec![0.0; self.n * self.n];
        self.dvisc_into(u.as_slice(), k, &mut out);
        DMatrix::from_row_slice(self.n, self.n, &out)
    }

    /// Evaluates `F0`, `F1`, `B`, `dF0` and `dF1` at `u`.
    pub fn evaluate(&self, u: &DVector<f64>) -> Result<SystemEval> {
        self.check_state(u.as_slice())?;
        let ev = SystemEval {
            f0: self.f0(u),
            f1: self.f1(u),
            b: self.visc(u),
            df0: self.df0(u),
            df1: self.df1(u),
        };
        let finite = ev.f0.iter().chain(ev.f1.iter()).chain(ev.b.iter()).chain(ev.df0.iter()).chain(ev.df1.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("model evaluation"));
        }
        Ok(ev)
    }

    /// `U = F0^{-1}(W)`.
    pub fn u_from_w(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        match (&self.f0, &self.f0_inv) {
            (None, _) => {
                out.copy_from_slice(w);
                Ok(())
            }
            (Some(_), Some(inv)) => {
                inv(w, out);
                Ok(())
            }
            (Some(_), None) => self.newton_f0_inverse(w, out),
        }
    }

    fn newton_f0_inverse(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.n;
        let mut u = out.to_vec();
        if u.iter().any(|v| !v.is_finite()) || u.iter().all(|v| *v == 0.0) {
            u.copy_from_slice(w);
        }
        let mut f = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        for _ in 0..60 {
            self.f0_into(&u, &mut f);
            let mut res: Vec<f64> = (0..n).map(|i| w[i] - f[i]).collect();
            let nrm = res.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if nrm < 1e-14 * (1.0 + w.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                out.copy_from_slice(&u);
                return Ok(());
            }
            self.df0_into(&u, &mut jac);
            if !crate::linalg::solve_in_place(&mut jac, &mut res, n) {
                break;
            }
            for i in 0..n {
                u[i] += res[i];
            }
        }
        Err(Error::Integration("Newton inversion of F0 did not converge".into()))
    }

    /// `B~(W) = B(U) dF0(U)^{-1}` evaluated at the state `u`.
    pub fn btilde_at_u(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let b = self.visc(u);
        if self.f0_is_identity() {
            return b;
        }
        let df0 = self.df0(u);
        b * df0.try_inverse().expect("dF0 must be invertible")
    }

    /// `dF~(W) = dF1 dF0^{-1}` evaluated at the state `u`.
    pub fn dftilde_at_u(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let d1 = self.df1(u);
        if self.f0_is_identity() {
            return d1;
        }
        d1 * self.df0(u).try_inverse().expect("dF0 must be invertible")
    }

    /// Directional derivative `(dB~(W) v)` at the state `u`, i.e.
    /// `d/de B~(W + e v)` at `e = 0`.
    pub fn dbtilde_dir_at_u(&self, u: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        if self.f0_is_identity() {
            let mut out = DMatrix::zeros(n, n);
            for k in 0..n {
                if v[k] != 0.0 {
                    out += self.dvisc(u, k) * v[k];
                }
            }
            return out;
        }
        let w = self.f0(u);
        let norm = w.norm();
        let h = f64::EPSILON.cbrt() * norm.max(1.0) / v.norm().max(1e-300);
        let bt = |wv: &DVector<f64>| {
            let mut uu = u.as_slice().to_vec();
            self.u_from_w(wv.as_slice(), &mut uu).expect("F0 inversion");
            self.btilde_at_u(&DVector::from_vec(uu))
        };
        (bt(&(&w + v * h)) - bt(&(&w - v * h))) / (2.0 * h)
    }
}

fn copy_row_major(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.ncols();
    for i in 0..m.nrows() {
        for j in 0..n {
            out[i * n + j] = m[(i, j)];
        }
    }
}

/// Names of the built-in models.
pub const BUILTIN_MODELS: [&str; 4] = ["burgers", "psystem", "cubic", "quadratic"];

fn param(params: &Value, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::Config(format!("model parameter `{key}` must be a number"))),
    }
}

fn check_keys(params: &Value, allowed: &[&str]) -> Result<()> {
    if let Some(obj) = params.as_object() {
        for k in obj.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown model parameter `{k}`")));
            }
        }
    } else if !params.is_null() {
        return Err(Error::Config("model parameters must be a JSON object".into()));
    }
    Ok(())
}

/// Looks up a built-in model by name. `params` is a JSON object of model
/// parameters; every model accepts a frame speed `s`.
pub fn by_name(name: &str, params: &Value) -> Result<FluxViscositySystem> {
    let sys = match name {
        "burgers" => {
            check_keys(params, &["viscosity", "s"])?;
            burgers(param(params, "viscosity", 1.0)?)
        }
        "psystem" => {
            check_keys(params, &["gamma", "kappa", "nu", "s"])?;
            psystem(param(params, "gamma", 1.4)?, param(params, "kappa", 1.0)?, param(params, "nu", 1.0)?)
        }
        "cubic" => {
            check_keys(params, &["b", "s"])?;
            let b = match params.get("b") {
                None | Some(Value::Null) => [[1.0, 0.0], [0.0, 1.0]],
                Some(v) => {
                    let m: Vec<Vec<f64>> = serde_json::from_value(v.clone())
                        .map_err(|e| Error::Config(format!("cubic `b` must be a 2x2 matrix: {e}")))?;
                    if m.len() != 2 || m.iter().any(|row| row.len() != 2) {
                        return Err(Error::Config("cubic `b` must be a 2x2 matrix".into()));
                    }
                    [[m[0][0], m[0][1]], [m[1][0], m[1][1]]]
                }
            };
            cubic(b)
        }
        "quadratic" => {
            check_keys(params, &["viscosity", "s"])?;
            quadratic(param(params, "viscosity", 1.0)?)
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    }?;
    Ok(sys.with_frame_speed(param(params, "s", 0.0)?))
}

/// Least-squares shock speed `s` minimizing `|[F1] - s [F0]|` between two
/// states, with the relative Rankine–Hugoniot residual.
pub fn rankine_hugoniot_speed(model: &FluxViscositySystem, um: &DVector<f64>, up: &DVector<f64>) -> (f64, f64) {
    let base = model.clone().with_frame_speed(0.0);
    let jf = base.f1(up) - base.f1(um);
    let jw = base.f0(up) - base.f0(um);
    let den = jw.dot(&jw);
    if den == 0.0 {
        return (0.0, jf.norm());
    }
    let s = jf.dot(&jw) / den;
    let res = (&jf - &jw * s).norm() / jf.norm().max(jw.norm()).max(1.0);
    (s, res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_rejects_unknown() {
        assert!(matches!(by_name("euler", &Value::Null), Err(Error::UnknownModel(_))));
        let bad = serde_json::json!({"gamma": 1.4, "bogus": 1});
        assert!(matches!(by_name("psystem", &bad), Err(Error::Config(_))));
    }

    #[test]
    fn frame_speed_shifts_flux() {
        let m = by_name("burgers", &serde_json::json!({"s": 0.5})).unwrap();
        let u = DVector::from_vec(vec![2.0]);
        assert_eq!(m.f1(&u)[0], 2.0 - 1.0);
        assert_eq!(m.df1(&u)[(0, 0)], 2.0 - 0.5);
    }

    #[test]
    fn builder_validates_block_size() {
        let b = FluxViscositySystem::builder("x", 2, 3)
            .f1(|u, o| o.copy_from_slice(u))
            .viscosity(|_, o| o.iter_mut().for_each(|v| *v = 0.0));
        assert!(b.build().is_err());
    }
}
