//! Weak-form residuals of the system and its companion law, jump conditions
//! and shock dissipation rates.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::DiscreteField;
use crate::par;
use crate::systems::SystemSpec;
use crate::testfn::TestFunction;

/// Tolerance below which a temporal jump counts as zero.
pub const JUMP_TOL: f64 = 1e-14;
/// Agreement required between row speeds of one shock.
pub const SPEED_TOL: f64 = 1e-10;

fn check_inputs(
    system: &SystemSpec,
    field: &DiscreteField,
    testfns: &[TestFunction],
) -> Result<()> {
    if field.n != system.n || field.lattice.k != system.k {
        return Err(LabError::Parameter(format!(
            "field (n = {}, k = {}) does not match system `{}` (n = {}, k = {})",
            field.n, field.lattice.k, system.name, system.n, system.k
        )));
    }
    for t in testfns {
        t.check_support(&field.lattice, field.periodic_time)?;
    }
    Ok(())
}

/// `sum_nodes f(U) . D_X psi * cell volume`, where `f` writes `width x (k+1)`
/// entries per state.
fn pair_with_gradient(
    field: &DiscreteField,
    testfn: &TestFunction,
    width: usize,
    f: impl Fn(&[f64], &mut [f64]) + Sync,
) -> Vec<f64> {
    let l = &field.lattice;
    let axes = l.axes();
    let time_period = field.periodic_time.then_some(l.extent_time);
    let sums = par::sum_vec_with(
        field.n_nodes(),
        width,
        || (vec![0.0; axes], vec![0.0; axes], vec![0.0; width * axes]),
        |i, acc, (p, grad, g)| {
            l.point(i, p);
            testfn.eval(p, l.extent_space, time_period, grad);
            if grad.iter().all(|x| *x == 0.0) {
                return;
            }
            f(field.state(i), g);
            for (r, a) in acc.iter_mut().enumerate() {
                *a += g[r * axes..(r + 1) * axes]
                    .iter()
                    .zip(grad.iter())
                    .map(|(x, y)| x * y)
                    .sum::<f64>();
            }
        },
    );
    sums.into_iter().map(|s| s * l.cell_volume()).collect()
}

/// Per test function, the row vector `int G(U) : D_X psi`.
pub fn weak_residual_system(
    system: &SystemSpec,
    field: &DiscreteField,
    testfns: &[TestFunction],
) -> Result<Vec<Vec<f64>>> {
    check_inputs(system, field, testfns)?;
    Ok(testfns
        .iter()
        .map(|t| pair_with_gradient(field, t, system.rows, |u, g| system.flux_into(u, g)))
        .collect())
}

/// Per test function, `-int Q(U) . D_X psi`.
pub fn weak_residual_companion(
    system: &SystemSpec,
    field: &DiscreteField,
    testfns: &[TestFunction],
) -> Result<Vec<f64>> {
    check_inputs(system, field, testfns)?;
    Ok(testfns
        .iter()
        .map(|t| -pair_with_gradient(field, t, 1, |u, q| system.companion_into(u, q))[0])
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockSpeeds {
    /// `[[G_i1]] / [[G_i0]]` per row; `None` where both jumps vanish.
    pub rows: Vec<Option<f64>>,
    pub consistent: bool,
    /// Common speed when consistent.
    pub speed: Option<f64>,
}

fn check_states(system: &SystemSpec, ul: &[f64], ur: &[f64]) -> Result<()> {
    if system.k != 1 {
        return Err(LabError::Parameter(format!(
            "jump conditions need a 1D system, `{}` has k = {}",
            system.name, system.k
        )));
    }
    if ul.len() != system.n || ur.len() != system.n {
        return Err(LabError::Parameter(format!(
            "states must have {} components",
            system.n
        )));
    }
    for u in [ul, ur] {
        if !system.domain.contains(u) {
            return Err(LabError::Rejection {
                state: u.to_vec(),
                reason: format!("outside {}", system.domain.describe()),
            });
        }
    }
    if ul == ur {
        return Err(LabError::Parameter(
            "left and right states coincide: no jump".into(),
        ));
    }
    Ok(())
}

/// Flux shock speeds `[[G_i1]] / [[G_i0]]`, jumps taken left minus right.
pub fn rankine_hugoniot_speed(system: &SystemSpec, ul: &[f64], ur: &[f64]) -> Result<ShockSpeeds> {
    check_states(system, ul, ur)?;
    let gl = system.flux(ul);
    let gr = system.flux(ur);
    let mut rows = Vec::with_capacity(system.rows);
    for i in 0..system.rows {
        let j0 = gl[2 * i] - gr[2 * i];
        let j1 = gl[2 * i + 1] - gr[2 * i + 1];
        if j0.abs() <= JUMP_TOL {
            if j1.abs() > JUMP_TOL {
                return Err(LabError::InfiniteSpeed {
                    row: i,
                    spatial_jump: j1,
                });
            }
            rows.push(None);
        } else {
            rows.push(Some(j1 / j0));
        }
    }
    let defined: Vec<f64> = rows.iter().flatten().copied().collect();
    let consistent = match defined.first() {
        None => false,
        Some(s0) => defined
            .iter()
            .all(|s| (s - s0).abs() <= SPEED_TOL * (1.0 + s0.abs())),
    };
    let speed = consistent.then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(ShockSpeeds {
        rows,
        consistent,
        speed,
    })
}

/// `[[Q_1]] / [[Q_0]]`; `None` when the companion density does not jump.
pub fn companion_speed(system: &SystemSpec, ul: &[f64], ur: &[f64]) -> Result<Option<f64>> {
    check_states(system, ul, ur)?;
    let ql = system.companion(ul);
    let qr = system.companion(ur);
    let j0 = ql[0] - qr[0];
    let j1 = ql[1] - qr[1];
    if j0.abs() <= JUMP_TOL {
        if j1.abs() > JUMP_TOL {
            return Err(LabError::InfiniteSpeed {
                row: system.rows,
                spatial_jump: j1,
            });
        }
        return Ok(None);
    }
    Ok(Some(j1 / j0))
}

/// `s [[Q_0]] - [[Q_1]]` for the flux shock speed `s`.
pub fn shock_dissipation_rate(system: &SystemSpec, ul: &[f64], ur: &[f64]) -> Result<f64> {
    let speeds = rankine_hugoniot_speed(system, ul, ur)?;
    let Some(s) = speeds.speed else {
        return Err(LabError::InconsistentSpeeds(speeds.rows));
    };
    let ql = system.companion(ul);
    let qr = system.companion(ur);
    Ok(s * (ql[0] - qr[0]) - (ql[1] - qr[1]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShockSummary {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub rh_speed_flux: Vec<Option<f64>>,
    pub rh_consistent: bool,
    pub rh_speed_companion: Option<f64>,
    /// Companion speed minus flux speed.
    pub mismatch: Option<f64>,
    pub shock_dissipation_rate: Option<f64>,
}

impl ShockSummary {
    pub fn new(system: &SystemSpec, ul: &[f64], ur: &[f64]) -> Result<Self> {
        let speeds = rankine_hugoniot_speed(system, ul, ur)?;
        let companion = companion_speed(system, ul, ur)?;
        let rate = match speeds.speed {
            Some(_) => Some(shock_dissipation_rate(system, ul, ur)?),
            None => None,
        };
        let mismatch = match (companion, speeds.speed) {
            (Some(c), Some(s)) => Some(c - s),
            _ => None,
        };
        Ok(ShockSummary {
            left: ul.to_vec(),
            right: ur.to_vec(),
            rh_speed_flux: speeds.rows,
            rh_consistent: speeds.consistent,
            rh_speed_companion: companion,
            mismatch,
            shock_dissipation_rate: rate,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DissipationReport {
    pub system: String,
    pub testfns: Vec<TestFunction>,
    /// Per test function, one entry per system row.
    pub system_weak_residuals: Vec<Vec<f64>>,
    pub companion_weak_residuals: Vec<f64>,
    /// Time integral of each test function along the shock path, when known.
    pub path_integrals: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shock: Option<ShockSummary>,
}

impl DissipationReport {
    pub fn compute(
        system: &SystemSpec,
        field: &DiscreteField,
        testfns: &[TestFunction],
        shock: Option<(&[f64], &[f64])>,
    ) -> Result<Self> {
        Ok(DissipationReport {
            system: system.name.clone(),
            testfns: testfns.to_vec(),
            system_weak_residuals: weak_residual_system(system, field, testfns)?,
            companion_weak_residuals: weak_residual_companion(system, field, testfns)?,
            path_integrals: testfns.iter().map(|t| t.path_time_integral()).collect(),
            shock: shock
                .map(|(l, r)| ShockSummary::new(system, l, r))
                .transpose()?,
        })
    }

    /// Predicted companion residual `rate * int psi` per test function.
    pub fn predicted_companion_residuals(&self) -> Vec<Option<f64>> {
        let rate = self.shock.as_ref().and_then(|s| s.shock_dissipation_rate);
        self.path_integrals
            .iter()
            .map(|p| Some(rate? * (*p)?))
            .collect()
    }

    /// Rows `level, testfn, companion_residual, predicted, system_residual_0..`.
    pub fn write_csv_rows<W: std::io::Write>(
        &self,
        w: &mut csv::Writer<W>,
        level: &str,
        header: bool,
    ) -> Result<()> {
        let rows = self.system_weak_residuals.first().map_or(0, |r| r.len());
        if header {
            let mut h = vec![
                "level".to_string(),
                "testfn".into(),
                "companion_residual".into(),
                "predicted".into(),
            ];
            h.extend((0..rows).map(|i| format!("system_residual_{i}")));
            w.write_record(&h)?;
        }
        let predicted = self.predicted_companion_residuals();
        for (t, c) in self.companion_weak_residuals.iter().enumerate() {
            let mut rec = vec![
                level.to_string(),
                t.to_string(),
                format!("{c:e}"),
                predicted[t].map_or(String::new(), |p| format!("{p:e}")),
            ];
            rec.extend(
                self.system_weak_residuals[t]
                    .iter()
                    .map(|v| format!("{v:e}")),
            );
            w.write_record(&rec)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Lattice;
    use crate::systems::{make_builtin, BuiltinParams};

    fn burgers() -> SystemSpec {
        make_builtin("burgers", &BuiltinParams::default()).unwrap()
    }

    #[test]
    fn burgers_speeds() {
        let b = burgers();
        let s = rankine_hugoniot_speed(&b, &[1.0], &[0.0]).unwrap();
        assert_eq!(s.speed, Some(0.5));
        let c = companion_speed(&b, &[1.0], &[0.0]).unwrap().unwrap();
        assert!((c - 2.0 / 3.0).abs() < 1e-15);
        let r = shock_dissipation_rate(&b, &[2.0], &[0.0]).unwrap();
        assert!((r + 8.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn equal_states_rejected() {
        assert!(rankine_hugoniot_speed(&burgers(), &[0.3], &[0.3]).is_err());
    }

    #[test]
    fn infinite_speed_detected() {
        // Rows with equal density but different flux.
        let sys = SystemSpec::builder("flat", 1, 1)
            .flux(|u, o| {
                o[0] = 1.0;
                o[1] = u[0];
            })
            .multiplier(|_, o| o[0] = 1.0)
            .companion(|u, o| {
                o[0] = 1.0;
                o[1] = u[0];
            })
            .build()
            .unwrap();
        let err = rankine_hugoniot_speed(&sys, &[1.0], &[0.0]).unwrap_err();
        assert!(matches!(err, LabError::InfiniteSpeed { row: 0, .. }));
    }

    #[test]
    fn constant_field_residuals_vanish() {
        let l = Lattice::new(1, 32, 32, 1.0, 1.0).unwrap();
        let f = DiscreteField::from_fn(l, 1, true, |_, o| o[0] = 0.7).unwrap();
        let t = TestFunction::Bump {
            center: vec![0.5, 0.5],
            radius: vec![0.3, 0.3],
            amplitude: 1.0,
        };
        let b = burgers();
        let r = weak_residual_system(&b, &f, std::slice::from_ref(&t)).unwrap();
        assert!(r[0][0].abs() < 1e-13);
        let c = weak_residual_companion(&b, &f, &[t]).unwrap();
        assert!(c[0].abs() < 1e-13);
    }
}
