//! Conservation-law systems `div_X G(U) = 0` together with a multiplier `B`
//! and a companion flux `Q` linked by `D_U Q_j = B D_U G_j`.
//!
//! Flux matrices are stored row-major with `rows x (k + 1)` entries; column 0
//! is the temporal flux. Jacobian layouts:
//!
//! * flux: `out[(i * (k + 1) + j) * n + l] = dG_ij / dU_l`
//! * multiplier: `out[i * n + l] = dB_i / dU_l`
//! * companion: `out[j * n + l] = dQ_j / dU_l`

mod builtin;
mod compat;
mod domain;
mod extension;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use builtin::{make_builtin, BuiltinParams, PressureLaw, StoredEnergy, BUILTIN_NAMES};
pub use compat::{
    check_compatibility, BoxSampler, CompatibilityReport, JacobianMethod, JacobianMode,
    StateSampler,
};
pub use domain::{DomainKind, StateDomain};
pub use extension::{extend_to_compact_range, smooth_step, smooth_step_derivative};

use crate::error::{LabError, Result};

/// Evaluators behind a [`SystemSpec`]. Jacobian methods return `false` when
/// no analytic form is available; callers then fall back to finite differences.
pub trait FluxModel: Send + Sync {
    fn flux(&self, u: &[f64], out: &mut [f64]);
    fn multiplier(&self, u: &[f64], out: &mut [f64]);
    fn companion(&self, u: &[f64], out: &mut [f64]);

    fn flux_jacobian(&self, _u: &[f64], _out: &mut [f64]) -> bool {
        false
    }
    fn multiplier_jacobian(&self, _u: &[f64], _out: &mut [f64]) -> bool {
        false
    }
    fn companion_jacobian(&self, _u: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

/// A conservation-law system with one scalar companion law.
///
/// Immutable after construction and cheap to clone; evaluators are shared.
#[derive(Clone)]
pub struct SystemSpec {
    pub name: String,
    /// State dimension.
    pub n: usize,
    /// Number of equations (rows of `G`). Equal to `n` except for systems
    /// carrying extra constraint rows, e.g. incompressible MHD.
    pub rows: usize,
    /// Space dimension; space-time has `k + 1` axes.
    pub k: usize,
    pub domain: StateDomain,
    pub affine_columns: BTreeSet<usize>,
    pub affine_rows: BTreeSet<usize>,
    /// Box from which interior states are drawn by default.
    pub sampling_box: Option<(Vec<f64>, Vec<f64>)>,
    model: Arc<dyn FluxModel>,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("rows", &self.rows)
            .field("k", &self.k)
            .field("domain", &self.domain)
            .field("affine_columns", &self.affine_columns)
            .field("affine_rows", &self.affine_rows)
            .finish()
    }
}

/// Central finite-difference step for coordinate value `x`.
pub fn fd_step_for(base: f64, x: f64) -> f64 {
    base * (1.0 + x.abs())
}

/// Default finite-difference base step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

impl SystemSpec {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        rows: usize,
        k: usize,
        domain: StateDomain,
        model: Arc<dyn FluxModel>,
    ) -> Self {
        SystemSpec {
            name: name.into(),
            n,
            rows,
            k,
            domain,
            affine_columns: BTreeSet::new(),
            affine_rows: BTreeSet::new(),
            sampling_box: None,
            model,
        }
    }

    pub fn builder(name: impl Into<String>, n: usize, k: usize) -> SystemBuilder {
        SystemBuilder::new(name, n, k)
    }

    pub fn with_affine(mut self, columns: &[usize], rows: &[usize]) -> Self {
        self.affine_columns = columns.iter().copied().collect();
        self.affine_rows = rows.iter().copied().collect();
        self
    }

    pub fn with_sampling_box(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.sampling_box = Some((lo, hi));
        self
    }

    pub fn cols(&self) -> usize {
        self.k + 1
    }

    pub fn flux_len(&self) -> usize {
        self.rows * (self.k + 1)
    }

    pub fn model(&self) -> &Arc<dyn FluxModel> {
        &self.model
    }

    pub fn flux_into(&self, u: &[f64], out: &mut [f64]) {
        self.model.flux(u, out)
    }

    pub fn flux(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.flux_len()];
        self.model.flux(u, &mut out);
        out
    }

    pub fn multiplier_into(&self, u: &[f64], out: &mut [f64]) {
        self.model.multiplier(u, out)
    }

    pub fn multiplier(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.model.multiplier(u, &mut out);
        out
    }

    pub fn companion_into(&self, u: &[f64], out: &mut [f64]) {
        self.model.companion(u, out)
    }

    pub fn companion(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        self.model.companion(u, &mut out);
        out
    }

    /// `true` when flux entry `(row, col)` is known to be affine in `U`.
    pub fn is_affine_entry(&self, row: usize, col: usize) -> bool {
        self.affine_columns.contains(&col) || self.affine_rows.contains(&row)
    }

    /// Flux Jacobian, analytic when available unless `mode` forces differences.
    pub fn flux_jacobian_into(
        &self,
        u: &[f64],
        out: &mut [f64],
        mode: JacobianMode,
        fd_step: f64,
    ) -> JacobianMethod {
        if mode == JacobianMode::Auto && self.model.flux_jacobian(u, out) {
            return JacobianMethod::Analytic;
        }
        let m = self.flux_len();
        central_difference(self.n, m, u, fd_step, out, |x, o| self.model.flux(x, o));
        JacobianMethod::FiniteDifference
    }

    pub fn multiplier_jacobian_into(
        &self,
        u: &[f64],
        out: &mut [f64],
        mode: JacobianMode,
        fd_step: f64,
    ) -> JacobianMethod {
        if mode == JacobianMode::Auto && self.model.multiplier_jacobian(u, out) {
            return JacobianMethod::Analytic;
        }
        central_difference(self.n, self.rows, u, fd_step, out, |x, o| {
            self.model.multiplier(x, o)
        });
        JacobianMethod::FiniteDifference
    }

    pub fn companion_jacobian_into(
        &self,
        u: &[f64],
        out: &mut [f64],
        mode: JacobianMode,
        fd_step: f64,
    ) -> JacobianMethod {
        if mode == JacobianMode::Auto && self.model.companion_jacobian(u, out) {
            return JacobianMethod::Analytic;
        }
        central_difference(self.n, self.cols(), u, fd_step, out, |x, o| {
            self.model.companion(x, o)
        });
        JacobianMethod::FiniteDifference
    }

    /// Same flux, multiplier replaced by the constant row `c` and companion
    /// flux `Q = c G`. The resulting companion law is the trivial one.
    pub fn with_constant_multiplier(&self, c: &[f64]) -> Result<SystemSpec> {
        if c.len() != self.rows {
            return Err(LabError::Parameter(format!(
                "constant multiplier has {} entries, system has {} rows",
                c.len(),
                self.rows
            )));
        }
        let model = ConstantMultiplier {
            inner: self.model.clone(),
            c: c.to_vec(),
            n: self.n,
            rows: self.rows,
            cols: self.cols(),
        };
        let mut spec = self.clone();
        spec.name = format!("{}+constant-multiplier", self.name);
        spec.model = Arc::new(model);
        Ok(spec)
    }
}

/// Central differences of an `m`-valued map with respect to each of `n`
/// inputs; `out[r * n + l] = d f_r / d x_l`.
pub(crate) fn central_difference(
    n: usize,
    m: usize,
    u: &[f64],
    base: f64,
    out: &mut [f64],
    f: impl Fn(&[f64], &mut [f64]),
) {
    let mut x = u.to_vec();
    let mut plus = vec![0.0; m];
    let mut minus = vec![0.0; m];
    for l in 0..n {
        let h = fd_step_for(base, u[l]);
        x[l] = u[l] + h;
        f(&x, &mut plus);
        x[l] = u[l] - h;
        f(&x, &mut minus);
        x[l] = u[l];
        for r in 0..m {
            out[r * n + l] = (plus[r] - minus[r]) / (2.0 * h);
        }
    }
}

struct ConstantMultiplier {
    inner: Arc<dyn FluxModel>,
    c: Vec<f64>,
    n: usize,
    rows: usize,
    cols: usize,
}

impl FluxModel for ConstantMultiplier {
    fn flux(&self, u: &[f64], out: &mut [f64]) {
        self.inner.flux(u, out)
    }
    fn flux_jacobian(&self, u: &[f64], out: &mut [f64]) -> bool {
        self.inner.flux_jacobian(u, out)
    }
    fn multiplier(&self, _u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.c);
    }
    fn multiplier_jacobian(&self, _u: &[f64], out: &mut [f64]) -> bool {
        out.fill(0.0);
        true
    }
    fn companion(&self, u: &[f64], out: &mut [f64]) {
        let mut g = vec![0.0; self.rows * self.cols];
        self.inner.flux(u, &mut g);
        for j in 0..self.cols {
            out[j] = (0..self.rows)
                .map(|i| self.c[i] * g[i * self.cols + j])
                .sum();
        }
    }
    fn companion_jacobian(&self, u: &[f64], out: &mut [f64]) -> bool {
        let mut dg = vec![0.0; self.rows * self.cols * self.n];
        if !self.inner.flux_jacobian(u, &mut dg) {
            return false;
        }
        for j in 0..self.cols {
            for l in 0..self.n {
                out[j * self.n + l] = (0..self.rows)
                    .map(|i| self.c[i] * dg[(i * self.cols + j) * self.n + l])
                    .sum();
            }
        }
        true
    }
}

type Eval = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Closure-backed system construction, mostly for experiments and tests.
pub struct SystemBuilder {
    name: String,
    n: usize,
    rows: usize,
    k: usize,
    domain: StateDomain,
    flux: Option<Eval>,
    flux_jac: Option<Eval>,
    mult: Option<Eval>,
    mult_jac: Option<Eval>,
    comp: Option<Eval>,
    comp_jac: Option<Eval>,
    affine_columns: Vec<usize>,
    affine_rows: Vec<usize>,
}

impl SystemBuilder {
    fn new(name: impl Into<String>, n: usize, k: usize) -> Self {
        SystemBuilder {
            name: name.into(),
            n,
            rows: n,
            k,
            domain: StateDomain::all_space(),
            flux: None,
            flux_jac: None,
            mult: None,
            mult_jac: None,
            comp: None,
            comp_jac: None,
            affine_columns: Vec::new(),
            affine_rows: Vec::new(),
        }
    }

    pub fn rows(mut self, rows: usize) -> Self {
        self.rows = rows;
        self
    }
    pub fn domain(mut self, domain: StateDomain) -> Self {
        self.domain = domain;
        self
    }
    pub fn flux(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.flux = Some(Arc::new(f));
        self
    }
    pub fn flux_jacobian(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.flux_jac = Some(Arc::new(f));
        self
    }
    pub fn multiplier(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.mult = Some(Arc::new(f));
        self
    }
    pub fn multiplier_jacobian(
        mut self,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.mult_jac = Some(Arc::new(f));
        self
    }
    pub fn companion(mut self, f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.comp = Some(Arc::new(f));
        self
    }
    pub fn companion_jacobian(
        mut self,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.comp_jac = Some(Arc::new(f));
        self
    }
    pub fn affine(mut self, columns: &[usize], rows: &[usize]) -> Self {
        self.affine_columns = columns.to_vec();
        self.affine_rows = rows.to_vec();
        self
    }

    pub fn build(self) -> Result<SystemSpec> {
        let missing =
            |what: &str| LabError::Parameter(format!("system `{}` has no {what}", self.name));
        let model = ClosureModel {
            flux: self.flux.clone().ok_or_else(|| missing("flux"))?,
            mult: self.mult.clone().ok_or_else(|| missing("multiplier"))?,
            comp: self.comp.clone().ok_or_else(|| missing("companion flux"))?,
            flux_jac: self.flux_jac,
            mult_jac: self.mult_jac,
            comp_jac: self.comp_jac,
        };
        if self.n == 0 || self.rows == 0 {
            return Err(LabError::Parameter(
                "state and row counts must be positive".into(),
            ));
        }
        Ok(SystemSpec::new(
            self.name,
            self.n,
            self.rows,
            self.k,
            self.domain,
            Arc::new(model),
        )
        .with_affine(&self.affine_columns, &self.affine_rows))
    }
}

struct ClosureModel {
    flux: Eval,
    mult: Eval,
    comp: Eval,
    flux_jac: Option<Eval>,
    mult_jac: Option<Eval>,
    comp_jac: Option<Eval>,
}

impl FluxModel for ClosureModel {
    fn flux(&self, u: &[f64], out: &mut [f64]) {
        (self.flux)(u, out)
    }
    fn multiplier(&self, u: &[f64], out: &mut [f64]) {
        (self.mult)(u, out)
    }
    fn companion(&self, u: &[f64], out: &mut [f64]) {
        (self.comp)(u, out)
    }
    fn flux_jacobian(&self, u: &[f64], out: &mut [f64]) -> bool {
        self.flux_jac.as_ref().map(|f| f(u, out)).is_some()
    }
    fn multiplier_jacobian(&self, u: &[f64], out: &mut [f64]) -> bool {
        self.mult_jac.as_ref().map(|f| f(u, out)).is_some()
    }
    fn companion_jacobian(&self, u: &[f64], out: &mut [f64]) -> bool {
        self.comp_jac.as_ref().map(|f| f(u, out)).is_some()
    }
}
