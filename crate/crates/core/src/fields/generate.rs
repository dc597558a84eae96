use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DiscreteField, Lattice};
use crate::error::{LabError, Result};
use crate::systems::SystemSpec;

/// How the octave phases of a lacunary series are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseLaw {
    /// Independent uniform phases.
    #[default]
    Random,
    /// Seeded first phase, then `phi_{j+1} = 2 phi_j - pi/2`. Consecutive
    /// octaves stay phase-locked, so nonlinear interactions between them add
    /// up coherently instead of cancelling at random.
    Coherent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LacunaryParams {
    pub alpha: f64,
    pub n_octaves: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub travel_speed: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub phase_law: PhaseLaw,
}

fn one() -> f64 {
    1.0
}

impl LacunaryParams {
    pub fn new(alpha: f64, n_octaves: u32, seed: u64) -> Self {
        LacunaryParams {
            alpha,
            n_octaves,
            seed,
            travel_speed: 0.0,
            amplitude: 1.0,
            phase_law: PhaseLaw::Random,
        }
    }

    fn validate(&self, lattice: &Lattice) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(LabError::Parameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !self.amplitude.is_finite() || !self.travel_speed.is_finite() {
            return Err(LabError::Parameter(
                "amplitude and travel speed must be finite".into(),
            ));
        }
        let max = (lattice.n_space / 4).max(1).ilog2();
        if self.n_octaves == 0 || self.n_octaves > max {
            return Err(LabError::Resolution(format!(
                "{} octaves are not resolved by n_space = {}; at most {max} allowed (2^octaves <= n_space/4)",
                self.n_octaves, lattice.n_space
            )));
        }
        Ok(())
    }
}

pub fn lacunary_phases(n_octaves: u32, seed: u64, law: PhaseLaw) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match law {
        PhaseLaw::Random => (0..n_octaves)
            .map(|_| rng.gen_range(0.0..2.0 * PI))
            .collect(),
        PhaseLaw::Coherent => {
            let mut phi = rng.gen_range(0.0..2.0 * PI);
            (0..n_octaves)
                .map(|_| {
                    let p = phi;
                    phi = (2.0 * phi - 0.5 * PI).rem_euclid(2.0 * PI);
                    p
                })
                .collect()
        }
    }
}

/// `amplitude * sum_j 2^(-alpha j) cos(2^j 2 pi x / period + phi_j)`, `j = 1..`.
pub fn lacunary_profile(x: f64, period: f64, alpha: f64, amplitude: f64, phases: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, phi) in phases.iter().enumerate() {
        let j = (i + 1) as i32;
        let freq = 2f64.powi(j);
        s += 2f64.powf(-alpha * j as f64) * (freq * 2.0 * PI * x / period + phi).cos();
    }
    amplitude * s
}

/// Make the time axis periodic for a wave travelling at `speed`: the time
/// extent becomes the nearest positive multiple of `period / |speed|`.
fn fit_time_to_travel(speed: f64, lattice: &Lattice, notes: &mut Vec<String>) -> (Lattice, bool) {
    let mut out = lattice.clone();
    if speed == 0.0 {
        return (out, true);
    }
    let unit = lattice.extent_space / speed.abs();
    let m = (lattice.extent_time / unit).round();
    if m < 1.0 {
        notes.push(format!(
            "time axis not periodic: extent_time {} is below one travel period {unit}",
            lattice.extent_time
        ));
        return (out, false);
    }
    let t = m * unit;
    if (t - lattice.extent_time).abs() > 1e-12 * lattice.extent_time {
        notes.push(format!(
            "extent_time adjusted from {} to {t} so the travelling wave is time-periodic",
            lattice.extent_time
        ));
    }
    out.extent_time = t;
    (out, true)
}

/// Travelling discontinuity on the torus: `U_left` where `(x - s t) mod L` lies
/// in `[0, L/2)`, `U_right` otherwise. The left-to-right jump sits at
/// `x - s t = L/2`; the periodic wrap adds the reverse jump at `x - s t = 0`.
pub fn make_shock_field(
    system: &SystemSpec,
    u_left: &[f64],
    u_right: &[f64],
    speed: f64,
    lattice: &Lattice,
) -> Result<DiscreteField> {
    if lattice.k != 1 {
        return Err(LabError::UnsupportedGeometry(format!(
            "shock fields need one space dimension, lattice has k = {}",
            lattice.k
        )));
    }
    if system.k != 1 {
        return Err(LabError::UnsupportedGeometry(format!(
            "system `{}` has k = {}",
            system.name, system.k
        )));
    }
    lattice.validate()?;
    let n = system.n;
    if u_left.len() != n || u_right.len() != n {
        return Err(LabError::Parameter(format!(
            "shock states need {n} components"
        )));
    }
    if u_left == u_right {
        return Err(LabError::Parameter(
            "left and right states coincide: no jump".into(),
        ));
    }
    if !speed.is_finite() {
        return Err(LabError::Parameter("shock speed must be finite".into()));
    }
    for u in [u_left, u_right] {
        if !system.domain.contains(u) {
            return Err(LabError::Rejection {
                state: u.to_vec(),
                reason: format!("outside {}", system.domain.describe()),
            });
        }
    }
    let mut notes = Vec::new();
    let (lattice, periodic) = fit_time_to_travel(speed, lattice, &mut notes);
    let hx = lattice.h_space();
    let cells = lattice.n_space as f64;
    let mut field = DiscreteField::from_fn(lattice, n, periodic, |p, out| {
        // Position in cells; snap to integers to make node sampling exact.
        let mut q = (p[1] - speed * p[0]) / hx;
        if (q - q.round()).abs() < 1e-9 {
            q = q.round();
        }
        let xi = q.rem_euclid(cells);
        out.copy_from_slice(if xi < 0.5 * cells { u_left } else { u_right });
    })?;
    field.system = Some(system.name.clone());
    field.notes = notes;
    Ok(field)
}

/// Scalar lacunary field `U(t, x) = f(x_1 - c t)`.
pub fn make_lacunary_field(params: &LacunaryParams, lattice: &Lattice) -> Result<DiscreteField> {
    lattice.validate()?;
    params.validate(lattice)?;
    let phases = lacunary_phases(params.n_octaves, params.seed, params.phase_law);
    let mut notes = Vec::new();
    let (lattice, periodic) = fit_time_to_travel(params.travel_speed, lattice, &mut notes);
    let period = lattice.extent_space;
    let c = params.travel_speed;
    let mut field = DiscreteField::from_fn(lattice, 1, periodic, |p, out| {
        out[0] = lacunary_profile(
            p[1] - c * p[0],
            period,
            params.alpha,
            params.amplitude,
            &phases,
        );
    })?;
    field.notes = notes;
    Ok(field)
}

/// Stationary shear flow `(p, u1, u2) = (0, f(x_2), 0)` on a `k = 2` lattice
/// with `f` a lacunary profile.
pub fn make_shear_field(params: &LacunaryParams, lattice: &Lattice) -> Result<DiscreteField> {
    if lattice.k != 2 {
        return Err(LabError::UnsupportedGeometry(format!(
            "shear fields need two space dimensions, lattice has k = {}",
            lattice.k
        )));
    }
    lattice.validate()?;
    params.validate(lattice)?;
    if params.travel_speed != 0.0 {
        return Err(LabError::Parameter("shear fields are stationary".into()));
    }
    let phases = lacunary_phases(params.n_octaves, params.seed, params.phase_law);
    let period = lattice.extent_space;
    DiscreteField::from_fn(lattice.clone(), 3, true, |p, out| {
        out[0] = 0.0;
        out[1] = lacunary_profile(p[2], period, params.alpha, params.amplitude, &phases);
        out[2] = 0.0;
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{make_builtin, BuiltinParams};

    fn burgers() -> SystemSpec {
        make_builtin("burgers", &BuiltinParams::default()).unwrap()
    }

    #[test]
    fn shock_takes_two_values_and_travels() {
        let l = Lattice::new(1, 64, 64, 2.0, 1.0).unwrap();
        let f = make_shock_field(&burgers(), &[1.0], &[0.0], 0.5, &l).unwrap();
        assert!(f.periodic_time);
        assert!(f.values.iter().all(|v| *v == 0.0 || *v == 1.0));
        // s h_t = h_x: each time step moves the profile by one cell.
        let row0 = &f.values[0..64];
        let row1 = &f.values[64..128];
        for i in 0..64 {
            assert_eq!(row1[(i + 1) % 64], row0[i]);
        }
        assert_eq!(row0.iter().filter(|v| **v == 1.0).count(), 32);
    }

    #[test]
    fn shock_rejects_bad_inputs() {
        let l = Lattice::new(1, 16, 16, 2.0, 1.0).unwrap();
        assert!(make_shock_field(&burgers(), &[1.0], &[1.0], 0.5, &l).is_err());
        let l2 = Lattice::new(2, 16, 16, 2.0, 1.0).unwrap();
        assert!(matches!(
            make_shock_field(&burgers(), &[1.0], &[0.0], 0.5, &l2),
            Err(LabError::UnsupportedGeometry(_))
        ));
    }

    #[test]
    fn time_extent_is_adjusted_and_recorded() {
        let l = Lattice::new(1, 16, 16, 1.9, 1.0).unwrap();
        let f = make_shock_field(&burgers(), &[1.0], &[0.0], 0.5, &l).unwrap();
        assert_eq!(f.lattice.extent_time, 2.0);
        assert_eq!(f.notes.len(), 1);
    }

    #[test]
    fn coherent_phases_follow_doubling_rule() {
        let p = lacunary_phases(5, 9, PhaseLaw::Coherent);
        for w in p.windows(2) {
            let d = (w[1] - (2.0 * w[0] - 0.5 * PI)).rem_euclid(2.0 * PI);
            assert!(d < 1e-12 || (2.0 * PI - d) < 1e-12);
        }
    }

    #[test]
    fn unresolved_octaves_report_maximum() {
        let l = Lattice::new(1, 8, 64, 1.0, 1.0).unwrap();
        let err = make_lacunary_field(&LacunaryParams::new(0.5, 5, 0), &l).unwrap_err();
        assert!(err.to_string().contains("at most 4"), "{err}");
    }
}
