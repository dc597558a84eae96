//! Built-in systems with hand-derived Jacobians.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{FluxModel, StateDomain, SystemSpec};
use crate::error::{LabError, Result};

pub const BUILTIN_NAMES: [&str; 6] = [
    "burgers",
    "euler-compressible-1d",
    "euler-compressible-m-form-1d",
    "elastodynamics-1d",
    "euler-incompressible-2d",
    "mhd-incompressible-1d",
];

/// Barotropic pressure law `p(rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PressureLaw {
    /// `p = kappa * rho^gamma`.
    Polytropic { kappa: f64, gamma: f64 },
}

impl Default for PressureLaw {
    fn default() -> Self {
        PressureLaw::Polytropic {
            kappa: 1.0,
            gamma: 2.0,
        }
    }
}

impl PressureLaw {
    fn validate(&self) -> Result<()> {
        let PressureLaw::Polytropic { kappa, gamma } = *self;
        if !(kappa > 0.0) || !(gamma >= 1.0) || !kappa.is_finite() || !gamma.is_finite() {
            return Err(LabError::Parameter(format!(
                "polytropic law needs kappa > 0 and gamma >= 1, got kappa={kappa}, gamma={gamma}"
            )));
        }
        Ok(())
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        let PressureLaw::Polytropic { kappa, gamma } = *self;
        kappa * rho.powf(gamma)
    }

    pub fn dpressure(&self, rho: f64) -> f64 {
        let PressureLaw::Polytropic { kappa, gamma } = *self;
        kappa * gamma * rho.powf(gamma - 1.0)
    }

    /// Specific internal energy `e` with `e' = p / rho^2` and `e(1) = 0`.
    pub fn internal_energy(&self, rho: f64) -> f64 {
        let PressureLaw::Polytropic { kappa, gamma } = *self;
        if gamma == 1.0 {
            kappa * rho.ln()
        } else {
            kappa * (rho.powf(gamma - 1.0) - 1.0) / (gamma - 1.0)
        }
    }

    /// Enthalpy `h = e + p / rho`, so that `(rho e)' = h` and `h' = p' / rho`.
    pub fn enthalpy(&self, rho: f64) -> f64 {
        self.internal_energy(rho) + self.pressure(rho) / rho
    }

    pub fn denthalpy(&self, rho: f64) -> f64 {
        self.dpressure(rho) / rho
    }
}

/// Stored energy `W(w)` of one-dimensional elasticity, defined for `w > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "energy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StoredEnergy {
    /// `W = a w^4 / 4`.
    Quartic { a: f64 },
    /// `W = mu (w^2 / 2 - ln w)`, singular as `w -> 0`.
    NeoHookean { mu: f64 },
}

impl Default for StoredEnergy {
    fn default() -> Self {
        StoredEnergy::Quartic { a: 1.0 }
    }
}

impl StoredEnergy {
    fn validate(&self) -> Result<()> {
        let c = match *self {
            StoredEnergy::Quartic { a } => a,
            StoredEnergy::NeoHookean { mu } => mu,
        };
        if !(c > 0.0) || !c.is_finite() {
            return Err(LabError::Parameter(format!(
                "stored energy coefficient must be positive, got {c}"
            )));
        }
        Ok(())
    }

    pub fn energy(&self, w: f64) -> f64 {
        match *self {
            StoredEnergy::Quartic { a } => a * w.powi(4) / 4.0,
            StoredEnergy::NeoHookean { mu } => mu * (0.5 * w * w - w.ln()),
        }
    }

    /// Stress `sigma = W'`.
    pub fn stress(&self, w: f64) -> f64 {
        match *self {
            StoredEnergy::Quartic { a } => a * w.powi(3),
            StoredEnergy::NeoHookean { mu } => mu * (w - 1.0 / w),
        }
    }

    pub fn dstress(&self, w: f64) -> f64 {
        match *self {
            StoredEnergy::Quartic { a } => 3.0 * a * w * w,
            StoredEnergy::NeoHookean { mu } => mu * (1.0 + 1.0 / (w * w)),
        }
    }
}

/// Parameters selecting constitutive laws from the fixed catalogue.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuiltinParams {
    pub pressure_law: Option<PressureLaw>,
    pub stored_energy: Option<StoredEnergy>,
    /// Open density interval `(rho_min, rho_max)` for the Euler systems.
    pub density_range: Option<[f64; 2]>,
}

/// Construct one of the [`BUILTIN_NAMES`] systems.
pub fn make_builtin(name: &str, params: &BuiltinParams) -> Result<SystemSpec> {
    match name {
        "burgers" => Ok(burgers()),
        "euler-compressible-1d" => euler_velocity_form(params),
        "euler-compressible-m-form-1d" => euler_momentum_form(params),
        "elastodynamics-1d" => elastodynamics(params),
        "euler-incompressible-2d" => Ok(incompressible_euler_2d()),
        "mhd-incompressible-1d" => Ok(incompressible_mhd_1d()),
        other => Err(LabError::UnknownSystem(other.to_string())),
    }
}

fn sampling_density(range: Option<[f64; 2]>) -> (f64, f64) {
    let (lo, hi) = match range {
        Some([lo, hi]) => {
            let pad = 0.01 * (hi - lo);
            (lo + pad, hi - pad)
        }
        None => return (0.5, 2.0),
    };
    let (a, b) = (lo.max(0.5), hi.min(2.0));
    if a < b {
        (a, b)
    } else {
        (lo, hi)
    }
}

fn check_density_range(range: [f64; 2], what: &str) -> Result<()> {
    let [lo, hi] = range;
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(LabError::Parameter(format!(
            "{what}: density range must satisfy 0 < rho_min < rho_max < inf, got {range:?}"
        )));
    }
    Ok(())
}

// --- Burgers: G = (u, u^2/2), B = u, Q = (u^2/2, u^3/3) ---------------------

struct Burgers;

impl FluxModel for Burgers {
    fn flux(&self, u: &[f64], out: &mut [f64]) {
        out[0] = u[0];
        out[1] = 0.5 * u[0] * u[0];
    }
    fn flux_jacobian(&self, u: &[f64], out: &mut [f64]) -> bool {
        out[0] = 1.0;
        out[1] = u[0];
        true
    }
    fn multiplier(&self, u: &[f64], out: &mut [f64]) {
        out[0] = u[0];
    }
    fn multiplier_jacobian(&self, _u: &[f64], out: &mut [f64]) -> bool {
        out[0] = 1.0;
        true
    }
    fn companion(&self, u: &[f64], out: &mut [f64]) {
        let x = u[0];
        out[0] = 0.5 * x * x;
        out[1] = x * x * x / 3.0;
    }
    fn companion_jacobian(&self, u: &[f64], out: &mut [f64]) -> bool {
        out[0] = u[0];
        out[1] = u[0] * u[0];
        true
    }
}

fn burgers() -> SystemSpec {
    SystemSpec::new(
        "burgers",
        1,
        1,
        1,
        StateDomain::all_space(),
        Arc::new(Burgers),
    )
    .with_affine(&[0], &[])
    .with_sampling_box(vec![-2.0], vec![2.0])
}

// --- Compressible Euler, U = (rho, u) ---------------------------------------
//
// rho_t + (rho u)_x = 0,  u_t + (u^2/2 + h(rho))_x = 0,
// B = (u^2/2 + h, rho u),  Q = (rho u^2/2 + rho e, (rho u^2/2 + rho e + p) u).

struct EulerVelocity {
    law: PressureLaw,
}

impl FluxModel for EulerVelocity {
    fn flux(&self, s: &[f64], out: &mut [f64]) {
        let (rho, u) = (s[0], s[1]);
        out[0] = rho;
        out[1] = rho * u;
        out[2] = u;
        out[3] = 0.5 * u * u + self.law.enthalpy(rho);
    }
    fn flux_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (rho, u) = (s[0], s[1]);
        // entries (i, j) each with (d/drho, d/du)
        out.copy_from_slice(&[
            1.0,
            0.0, // G00 = rho
            u,
            rho, // G01 = rho u
            0.0,
            1.0, // G10 = u
            self.law.denthalpy(rho),
            u, // G11 = u^2/2 + h
        ]);
        true
    }
    fn multiplier(&self, s: &[f64], out: &mut [f64]) {
        let (rho, u) = (s[0], s[1]);
        out[0] = 0.5 * u * u + self.law.enthalpy(rho);
        out[1] = rho * u;
    }
    fn multiplier_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (rho, u) = (s[0], s[1]);
        out.copy_from_slice(&[self.law.denthalpy(rho), u, u, rho]);
        true
    }
    fn companion(&self, s: &[f64], out: &mut [f64]) {
        let (rho, u) = (s[0], s[1]);
        let energy = 0.5 * rho * u * u + rho * self.law.internal_energy(rho);
        out[0] = energy;
        out[1] = (energy + self.law.pressure(rho)) * u;
    }
    fn companion_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (rho, u) = (s[0], s[1]);
        let h = self.law.enthalpy(rho);
        let dp = self.law.dpressure(rho);
        out[0] = 0.5 * u * u + h;
        out[1] = rho * u;
        out[2] = (0.5 * u * u + h + dp) * u;
        out[3] = 1.5 * rho * u * u + rho * h;
        true
    }
}

fn euler_velocity_form(params: &BuiltinParams) -> Result<SystemSpec> {
    let law = params.pressure_law.unwrap_or_default();
    law.validate()?;
    let domain = match params.density_range {
        Some(r) => {
            check_density_range(r, "euler-compressible-1d")?;
            StateDomain::open_box(vec![r[0], f64::NEG_INFINITY], vec![r[1], f64::INFINITY])
        }
        None => StateDomain::half_space(0, true),
    };
    let (lo, hi) = sampling_density(params.density_range);
    Ok(SystemSpec::new(
        "euler-compressible-1d",
        2,
        2,
        1,
        domain,
        Arc::new(EulerVelocity { law }),
    )
    .with_affine(&[0], &[])
    .with_sampling_box(vec![lo, -1.0], vec![hi, 1.0]))
}

// --- Compressible Euler, U = (rho, m) ---------------------------------------
//
// rho_t + m_x = 0,  m_t + (m^2/rho + p)_x = 0,
// B = (h - m^2/(2 rho^2), m/rho),  Q = (m^2/(2 rho) + rho e, m^3/(2 rho^2) + h m).

struct EulerMomentum {
    law: PressureLaw,
}

impl FluxModel for EulerMomentum {
    fn flux(&self, s: &[f64], out: &mut [f64]) {
        let (rho, m) = (s[0], s[1]);
        out[0] = rho;
        out[1] = m;
        out[2] = m;
        out[3] = m * m / rho + self.law.pressure(rho);
    }
    fn flux_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (rho, m) = (s[0], s[1]);
        out.copy_from_slice(&[
            1.0,
            0.0,
            0.0,
            1.0,
            0.0,
            1.0,
            -m * m / (rho * rho) + self.law.dpressure(rho),
            2.0 * m / rho,
        ]);
        true
    }
    fn multiplier(&self, s: &[f64], out: &mut [f64]) {
        let (rho, m) = (s[0], s[1]);
        out[0] = self.law.enthalpy(rho) - m * m / (2.0 * rho * rho);
        out[1] = m / rho;
    }
    fn multiplier_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (rho, m) = (s[0], s[1]);
        let r2 = rho * rho;
        out.copy_from_slice(&[
            self.law.denthalpy(rho) + m * m / (r2 * rho),
            -m / r2,
            -m / r2,
            1.0 / rho,
        ]);
        true
    }
    fn companion(&self, s: &[f64], out: &mut [f64]) {
        let (rho, m) = (s[0], s[1]);
        let energy = m * m / (2.0 * rho) + rho * self.law.internal_energy(rho);
        out[0] = energy;
        out[1] = (energy + self.law.pressure(rho)) * m / rho;
    }
    fn companion_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (rho, m) = (s[0], s[1]);
        let h = self.law.enthalpy(rho);
        let r2 = rho * rho;
        out[0] = -m * m / (2.0 * r2) + h;
        out[1] = m / rho;
        out[2] = -m * m * m / (r2 * rho) + self.law.denthalpy(rho) * m;
        out[3] = 1.5 * m * m / r2 + h;
        true
    }
}

fn euler_momentum_form(params: &BuiltinParams) -> Result<SystemSpec> {
    let law = params.pressure_law.unwrap_or_default();
    law.validate()?;
    let range = params.density_range.unwrap_or([0.1, 10.0]);
    check_density_range(range, "euler-compressible-m-form-1d (B contains 1/rho)")?;
    let (lo, hi) = sampling_density(Some(range));
    Ok(SystemSpec::new(
        "euler-compressible-m-form-1d",
        2,
        2,
        1,
        StateDomain::open_box(
            vec![range[0], f64::NEG_INFINITY],
            vec![range[1], f64::INFINITY],
        ),
        Arc::new(EulerMomentum { law }),
    )
    .with_affine(&[0], &[0])
    .with_sampling_box(vec![lo, -2.0], vec![hi, 2.0]))
}

// --- One-dimensional elastodynamics, U = (w, v) ------------------------------
//
// w_t - v_x = 0,  v_t - sigma(w)_x = 0,  B = (sigma, v),
// Q = (v^2/2 + W, -sigma v).

struct Elastodynamics {
    energy: StoredEnergy,
}

impl FluxModel for Elastodynamics {
    fn flux(&self, s: &[f64], out: &mut [f64]) {
        let (w, v) = (s[0], s[1]);
        out[0] = w;
        out[1] = -v;
        out[2] = v;
        out[3] = -self.energy.stress(w);
    }
    fn flux_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let w = s[0];
        out.copy_from_slice(&[1.0, 0.0, 0.0, -1.0, 0.0, 1.0, -self.energy.dstress(w), 0.0]);
        true
    }
    fn multiplier(&self, s: &[f64], out: &mut [f64]) {
        out[0] = self.energy.stress(s[0]);
        out[1] = s[1];
    }
    fn multiplier_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        out.copy_from_slice(&[self.energy.dstress(s[0]), 0.0, 0.0, 1.0]);
        true
    }
    fn companion(&self, s: &[f64], out: &mut [f64]) {
        let (w, v) = (s[0], s[1]);
        out[0] = 0.5 * v * v + self.energy.energy(w);
        out[1] = -self.energy.stress(w) * v;
    }
    fn companion_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (w, v) = (s[0], s[1]);
        let sigma = self.energy.stress(w);
        out.copy_from_slice(&[sigma, v, -self.energy.dstress(w) * v, -sigma]);
        true
    }
}

fn elastodynamics(params: &BuiltinParams) -> Result<SystemSpec> {
    let energy = params.stored_energy.unwrap_or_default();
    energy.validate()?;
    // The positive half-line of strains stands in for the non-convex set of
    // matrices with positive determinant, hence the convex flag is off.
    Ok(SystemSpec::new(
        "elastodynamics-1d",
        2,
        2,
        1,
        StateDomain::half_space(0, false),
        Arc::new(Elastodynamics { energy }),
    )
    .with_affine(&[0], &[0])
    .with_sampling_box(vec![0.5, -1.0], vec![2.0, 1.0]))
}

// --- Incompressible Euler in two space dimensions, U = (p, u1, u2) ----------
//
// Rows: div u = 0;  (u_i)_t + div(u_i u + p e_i) = 0.
// B = (p - |u|^2/2, u1, u2),  Q = (|u|^2/2, (|u|^2/2 + p) u).

struct IncompressibleEuler2d;

impl FluxModel for IncompressibleEuler2d {
    fn flux(&self, s: &[f64], out: &mut [f64]) {
        let (p, u1, u2) = (s[0], s[1], s[2]);
        out.copy_from_slice(&[
            0.0,
            u1,
            u2,
            u1,
            u1 * u1 + p,
            u1 * u2,
            u2,
            u1 * u2,
            u2 * u2 + p,
        ]);
    }
    fn flux_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (u1, u2) = (s[1], s[2]);
        // 9 entries x 3 derivatives (dp, du1, du2)
        out.copy_from_slice(&[
            0.0,
            0.0,
            0.0, // 0, 0
            0.0,
            1.0,
            0.0, // 0, 1
            0.0,
            0.0,
            1.0, // 0, 2
            0.0,
            1.0,
            0.0, // 1, 0
            1.0,
            2.0 * u1,
            0.0, // 1, 1
            0.0,
            u2,
            u1, // 1, 2
            0.0,
            0.0,
            1.0, // 2, 0
            0.0,
            u2,
            u1, // 2, 1
            1.0,
            0.0,
            2.0 * u2, // 2, 2
        ]);
        true
    }
    fn multiplier(&self, s: &[f64], out: &mut [f64]) {
        let (p, u1, u2) = (s[0], s[1], s[2]);
        out.copy_from_slice(&[p - 0.5 * (u1 * u1 + u2 * u2), u1, u2]);
    }
    fn multiplier_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (u1, u2) = (s[1], s[2]);
        out.copy_from_slice(&[1.0, -u1, -u2, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        true
    }
    fn companion(&self, s: &[f64], out: &mut [f64]) {
        let (p, u1, u2) = (s[0], s[1], s[2]);
        let ke = 0.5 * (u1 * u1 + u2 * u2);
        out.copy_from_slice(&[ke, (ke + p) * u1, (ke + p) * u2]);
    }
    fn companion_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (p, u1, u2) = (s[0], s[1], s[2]);
        let ke = 0.5 * (u1 * u1 + u2 * u2);
        out.copy_from_slice(&[
            0.0,
            u1,
            u2,
            u1,
            ke + p + u1 * u1,
            u1 * u2,
            u2,
            u1 * u2,
            ke + p + u2 * u2,
        ]);
        true
    }
}

fn incompressible_euler_2d() -> SystemSpec {
    SystemSpec::new(
        "euler-incompressible-2d",
        3,
        3,
        2,
        StateDomain::all_space(),
        Arc::new(IncompressibleEuler2d),
    )
    .with_affine(&[0], &[0])
    .with_sampling_box(vec![-1.0; 3], vec![1.0; 3])
}

// --- Ideal incompressible MHD in one space dimension --------------------------
//
// State (p, u1, u2, u3, h1, h2, h3); eight rows:
//   0: div u = 0          -> (0, u1)
//   1: div h = 0          -> (0, h1)
//   2+i: velocity         -> (u_i, u_i u1 + (p + |h|^2/2) d_i1 - h_i h1)
//   5+i: induction        -> (h_i, h_i u1 - u_i h1)
// B = (p - |u|^2/2, u.h, u, h),
// Q = (|u|^2/2 + |h|^2/2, (|u|^2/2 + p + |h|^2) u1 - (u.h) h1).

const MHD_N: usize = 7;

struct IncompressibleMhd1d;

fn mhd_parts(s: &[f64]) -> (f64, [f64; 3], [f64; 3]) {
    (s[0], [s[1], s[2], s[3]], [s[4], s[5], s[6]])
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl FluxModel for IncompressibleMhd1d {
    fn flux(&self, s: &[f64], out: &mut [f64]) {
        let (p, u, h) = mhd_parts(s);
        let hh = dot3(&h, &h);
        out[0] = 0.0;
        out[1] = u[0];
        out[2] = 0.0;
        out[3] = h[0];
        for i in 0..3 {
            let r = 2 + i;
            out[2 * r] = u[i];
            out[2 * r + 1] = u[i] * u[0] + if i == 0 { p + 0.5 * hh } else { 0.0 } - h[i] * h[0];
            let r = 5 + i;
            out[2 * r] = h[i];
            out[2 * r + 1] = h[i] * u[0] - u[i] * h[0];
        }
    }

    fn flux_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (_, u, h) = mhd_parts(s);
        out.fill(0.0);
        let n = MHD_N;
        let idx = |row: usize, col: usize, var: usize| (row * 2 + col) * n + var;
        let (iu, ih) = (1usize, 4usize);
        out[idx(0, 1, iu)] = 1.0;
        out[idx(1, 1, ih)] = 1.0;
        for i in 0..3 {
            let r = 2 + i;
            out[idx(r, 0, iu + i)] = 1.0;
            if i == 0 {
                out[idx(r, 1, 0)] = 1.0;
            }
            for k in 0..3 {
                let du = if i == k { u[0] } else { 0.0 } + if k == 0 { u[i] } else { 0.0 };
                let dh = if i == 0 { h[k] } else { 0.0 }
                    - if i == k { h[0] } else { 0.0 }
                    - if k == 0 { h[i] } else { 0.0 };
                out[idx(r, 1, iu + k)] = du;
                out[idx(r, 1, ih + k)] = dh;
            }
            let r = 5 + i;
            out[idx(r, 0, ih + i)] = 1.0;
            for k in 0..3 {
                let du = if k == 0 { h[i] } else { 0.0 } - if i == k { h[0] } else { 0.0 };
                let dh = if i == k { u[0] } else { 0.0 } - if k == 0 { u[i] } else { 0.0 };
                out[idx(r, 1, iu + k)] = du;
                out[idx(r, 1, ih + k)] = dh;
            }
        }
        true
    }

    fn multiplier(&self, s: &[f64], out: &mut [f64]) {
        let (p, u, h) = mhd_parts(s);
        out[0] = p - 0.5 * dot3(&u, &u);
        out[1] = dot3(&u, &h);
        out[2..5].copy_from_slice(&u);
        out[5..8].copy_from_slice(&h);
    }

    fn multiplier_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (_, u, h) = mhd_parts(s);
        let n = MHD_N;
        out.fill(0.0);
        out[0] = 1.0;
        for k in 0..3 {
            out[1 + k] = -u[k];
            out[n + 1 + k] = h[k];
            out[n + 4 + k] = u[k];
            out[(2 + k) * n + 1 + k] = 1.0;
            out[(5 + k) * n + 4 + k] = 1.0;
        }
        true
    }

    fn companion(&self, s: &[f64], out: &mut [f64]) {
        let (p, u, h) = mhd_parts(s);
        let uu = dot3(&u, &u);
        let hh = dot3(&h, &h);
        out[0] = 0.5 * uu + 0.5 * hh;
        out[1] = (0.5 * uu + p + hh) * u[0] - dot3(&u, &h) * h[0];
    }

    fn companion_jacobian(&self, s: &[f64], out: &mut [f64]) -> bool {
        let (p, u, h) = mhd_parts(s);
        let n = MHD_N;
        let uu = dot3(&u, &u);
        let hh = dot3(&h, &h);
        let uh = dot3(&u, &h);
        out.fill(0.0);
        for k in 0..3 {
            out[1 + k] = u[k];
            out[4 + k] = h[k];
        }
        out[n] = u[0];
        for k in 0..3 {
            out[n + 1 + k] =
                u[k] * u[0] + if k == 0 { 0.5 * uu + p + hh } else { 0.0 } - h[k] * h[0];
            out[n + 4 + k] = 2.0 * h[k] * u[0] - u[k] * h[0] - if k == 0 { uh } else { 0.0 };
        }
        true
    }
}

fn incompressible_mhd_1d() -> SystemSpec {
    SystemSpec::new(
        "mhd-incompressible-1d",
        MHD_N,
        8,
        1,
        StateDomain::all_space(),
        Arc::new(IncompressibleMhd1d),
    )
    .with_affine(&[0], &[0, 1, 5])
    .with_sampling_box(vec![-1.0; MHD_N], vec![1.0; MHD_N])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{central_difference, JacobianMode, DEFAULT_FD_STEP};

    fn analytic_matches_differences(sys: &SystemSpec, u: &[f64]) {
        let (n, rows, cols) = (sys.n, sys.rows, sys.cols());
        let mut a = vec![0.0; rows * cols * n];
        let mut f = vec![0.0; rows * cols * n];
        assert!(sys.model().flux_jacobian(u, &mut a));
        central_difference(n, rows * cols, u, 1e-6, &mut f, |x, o| sys.flux_into(x, o));
        for (x, y) in a.iter().zip(&f) {
            assert!(
                (x - y).abs() < 1e-6,
                "{} flux jacobian: {x} vs {y}",
                sys.name
            );
        }
        let mut a = vec![0.0; rows * n];
        let mut f = vec![0.0; rows * n];
        assert!(sys.model().multiplier_jacobian(u, &mut a));
        central_difference(n, rows, u, 1e-6, &mut f, |x, o| sys.multiplier_into(x, o));
        for (x, y) in a.iter().zip(&f) {
            assert!(
                (x - y).abs() < 1e-6,
                "{} multiplier jacobian: {x} vs {y}",
                sys.name
            );
        }
        let mut a = vec![0.0; cols * n];
        let mut f = vec![0.0; cols * n];
        assert!(sys.model().companion_jacobian(u, &mut a));
        central_difference(n, cols, u, 1e-6, &mut f, |x, o| sys.companion_into(x, o));
        for (x, y) in a.iter().zip(&f) {
            assert!(
                (x - y).abs() < 1e-6,
                "{} companion jacobian: {x} vs {y}",
                sys.name
            );
        }
    }

    #[test]
    fn hand_jacobians_agree_with_differences() {
        for name in BUILTIN_NAMES {
            let sys = make_builtin(name, &BuiltinParams::default()).unwrap();
            let (lo, hi) = sys.sampling_box.clone().unwrap();
            let u: Vec<f64> = lo
                .iter()
                .zip(&hi)
                .enumerate()
                .map(|(i, (l, h))| l + (h - l) * (0.3 + 0.07 * i as f64))
                .collect();
            analytic_matches_differences(&sys, &u);
        }
    }

    #[test]
    fn enthalpy_derivative_matches_pressure_law() {
        for law in [
            PressureLaw::default(),
            PressureLaw::Polytropic {
                kappa: 0.7,
                gamma: 1.0,
            },
            PressureLaw::Polytropic {
                kappa: 2.0,
                gamma: 1.4,
            },
        ] {
            assert!(law.internal_energy(1.0).abs() < 1e-15);
            for rho in [0.5, 1.0, 1.7] {
                let h = 1e-6;
                let de = (law.internal_energy(rho + h) - law.internal_energy(rho - h)) / (2.0 * h);
                assert!((de - law.pressure(rho) / (rho * rho)).abs() < 1e-8);
                let dh = (law.enthalpy(rho + h) - law.enthalpy(rho - h)) / (2.0 * h);
                assert!((dh - law.denthalpy(rho)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn burgers_annotations() {
        let b = make_builtin("burgers", &BuiltinParams::default()).unwrap();
        assert_eq!((b.n, b.k), (1, 1));
        assert!(matches!(
            b.domain.kind,
            crate::systems::DomainKind::AllSpace
        ));
        assert_eq!(
            b.affine_columns.iter().copied().collect::<Vec<_>>(),
            vec![0]
        );
        let _ = JacobianMode::Auto;
        let _ = DEFAULT_FD_STEP;
    }

    #[test]
    fn momentum_form_rejects_vacuum() {
        let params = BuiltinParams {
            density_range: Some([0.0, 2.0]),
            ..Default::default()
        };
        assert!(matches!(
            make_builtin("euler-compressible-m-form-1d", &params),
            Err(LabError::Parameter(_))
        ));
        assert!(matches!(
            make_builtin("navier-stokes", &params),
            Err(LabError::UnknownSystem(_))
        ));
    }
}
