//! Nonlinear commutator `G([U]_eps) - [G(U)]_eps`, the bound audit, the
//! residual of the mollified companion law and the good-set diagnostic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{DiscreteField, Lattice};
use crate::mollifier::{
    central_gradient, choose, convolve_direct, output_lattice, planes_norm, untrimmed_index,
    Backend, KernelAxes, MollifierKernel, SpectralPlanes,
};
use crate::par;
use crate::rate::{extrapolate_limit, fit_power_law, RateFit};
use crate::systems::{JacobianMode, SystemSpec, DEFAULT_FD_STEP};
use crate::testfn::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommutatorOptions {
    pub backend: Backend,
    pub kernel_axes: KernelAxes,
    /// Treat flux entries annotated as affine as having zero commutator
    /// instead of computing it.
    pub affine_short_circuit: bool,
    pub jacobian_mode: JacobianMode,
}

impl Default for CommutatorOptions {
    fn default() -> Self {
        CommutatorOptions {
            backend: Backend::Auto,
            kernel_axes: KernelAxes::SpaceTime,
            affine_short_circuit: true,
            jacobian_mode: JacobianMode::Auto,
        }
    }
}

/// Mollified state and mollified flux entries on the output lattice.
struct Mollified {
    lattice: Lattice,
    v: Vec<Vec<f64>>,
    gm: Vec<Vec<f64>>,
}

/// Shared setup for sweeps: flux planes and, when needed, their spectra.
struct Engine<'a> {
    system: &'a SystemSpec,
    field: &'a DiscreteField,
    opts: CommutatorOptions,
    /// Flat flux indices `i * cols + j` that are mollified.
    entries: Vec<usize>,
    planes: Vec<Vec<f64>>,
    spectral: Option<SpectralPlanes>,
}

fn check_field(system: &SystemSpec, field: &DiscreteField) -> Result<()> {
    if field.n != system.n || field.lattice.k != system.k {
        return Err(LabError::Parameter(format!(
            "field (n = {}, k = {}) does not match system `{}` (n = {}, k = {})",
            field.n, field.lattice.k, system.name, system.n, system.k
        )));
    }
    let bad = (0..field.n_nodes())
        .into_par_iter()
        .find_first(|&i| !system.domain.contains(field.state(i)));
    if let Some(i) = bad {
        return Err(LabError::Rejection {
            state: field.state(i).to_vec(),
            reason: format!("field node {i} lies outside {}", system.domain.describe()),
        });
    }
    Ok(())
}

impl<'a> Engine<'a> {
    fn new(
        system: &'a SystemSpec,
        field: &'a DiscreteField,
        kernels: &[MollifierKernel],
        opts: CommutatorOptions,
    ) -> Result<Self> {
        check_field(system, field)?;
        let cols = system.cols();
        let entries: Vec<usize> = (0..system.flux_len())
            .filter(|e| !(opts.affine_short_circuit && system.is_affine_entry(e / cols, e % cols)))
            .collect();
        let n = system.n;
        let mut planes = crate::mollifier::component_planes(field);
        if !entries.is_empty() {
            let m = system.flux_len();
            let mut g = vec![0.0; field.n_nodes() * m];
            g.par_chunks_mut(m).enumerate().for_each(|(i, out)| {
                system.flux_into(&field.values[i * n..(i + 1) * n], out);
            });
            for &e in &entries {
                planes.push(g.iter().skip(e).step_by(m).copied().collect());
            }
        }
        let spectral = kernels
            .iter()
            .any(|k| choose(opts.backend, k, &field.lattice) == Backend::Fft)
            .then(|| {
                let refs: Vec<&[f64]> = planes.iter().map(|p| p.as_slice()).collect();
                SpectralPlanes::new(&field.lattice, field.periodic_time, &refs)
            });
        Ok(Engine {
            system,
            field,
            opts,
            entries,
            planes,
            spectral,
        })
    }

    fn apply(&self, kernel: &MollifierKernel) -> Result<Mollified> {
        let l = &self.field.lattice;
        let lattice = output_lattice(l, self.field.periodic_time, kernel)?;
        let mut out = match (&self.spectral, choose(self.opts.backend, kernel, l)) {
            (Some(s), Backend::Fft) => s.convolve(kernel)?,
            _ => {
                let refs: Vec<&[f64]> = self.planes.iter().map(|p| p.as_slice()).collect();
                convolve_direct(l, self.field.periodic_time, &refs, kernel)?
            }
        };
        let gm = out.split_off(self.system.n);
        let v = out;
        let n = self.system.n;
        let bad = (0..lattice.n_nodes()).into_par_iter().find_first(|&i| {
            let s: Vec<f64> = (0..n).map(|c| v[c][i]).collect();
            !self.system.domain.contains(&s)
        });
        if let Some(node) = bad {
            return Err(LabError::DomainViolation {
                system: self.system.name.clone(),
                node,
                state: (0..n).map(|c| v[c][node]).collect(),
            });
        }
        Ok(Mollified { lattice, v, gm })
    }

    /// Commutator entries at node `i`: all `rows * cols` values.
    fn commutator_at(&self, m: &Mollified, i: usize, state: &mut [f64], g: &mut [f64]) {
        for (c, s) in state.iter_mut().enumerate() {
            *s = m.v[c][i];
        }
        self.system.flux_into(state, g);
        let mut next = 0;
        for (e, x) in g.iter_mut().enumerate() {
            if self.entries.get(next) == Some(&e) {
                *x -= m.gm[next][i];
                next += 1;
            } else {
                *x = 0.0;
            }
        }
    }
}

fn kernels_for(
    epsilons: &[f64],
    lattice: &Lattice,
    axes: KernelAxes,
) -> Result<Vec<MollifierKernel>> {
    if epsilons.is_empty() {
        return Err(LabError::Parameter("epsilon sweep is empty".into()));
    }
    epsilons
        .iter()
        .map(|e| MollifierKernel::new(*e, lattice, axes))
        .collect()
}

/// `G([U]_eps) - [G(U)]_eps` per node, flattened `rows x (k + 1)`.
pub fn commutator_field(
    system: &SystemSpec,
    field: &DiscreteField,
    kernel: &MollifierKernel,
    opts: CommutatorOptions,
) -> Result<DiscreteField> {
    let engine = Engine::new(system, field, std::slice::from_ref(kernel), opts)?;
    let m = engine.apply(kernel)?;
    let len = system.flux_len();
    let mut values = vec![0.0; m.lattice.n_nodes() * len];
    values.par_chunks_mut(len).enumerate().for_each(|(i, out)| {
        let mut s = vec![0.0; system.n];
        engine.commutator_at(&m, i, &mut s, out);
    });
    let mut out = DiscreteField::new(m.lattice, len, values, field.periodic_time)?;
    out.system = Some(system.name.clone());
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommutatorSweep {
    pub q: f64,
    pub epsilons: Vec<f64>,
    /// `||G([U]_eps) - [G(U)]_eps||_q`.
    #[serde(rename = "commutator_Lq_norms")]
    pub commutator_lq_norms: Vec<f64>,
    /// `||[U]_eps - U||_{2q}`.
    pub mollification_norms: Vec<f64>,
    /// `max_Y ||U - U(. - Y)||_{2q}` over the kernel stencil.
    pub shift_sup_norms: Vec<f64>,
    /// Sum of the squares of the two previous columns.
    pub lemma_bound_values: Vec<f64>,
    /// Ratio of commutator norm to bound; NaN where the bound vanishes to
    /// rounding.
    #[serde(rename = "measured_C")]
    pub measured_c: Vec<f64>,
    /// Largest finite ratio; NaN if there is none.
    #[serde(rename = "measured_C_max")]
    pub measured_c_max: f64,
    pub rate_fit: RateFit,
}

/// Stencil-offset work above which the shift supremum is refused.
pub const SHIFT_SUP_WORK_LIMIT: f64 = 2e10;

/// `||U(. + off) - U||_p` over the lattice (overlap for non-periodic time).
fn multi_shift_norm(field: &DiscreteField, off: &[isize], p: f64) -> f64 {
    let l = &field.lattice;
    let n = field.n;
    let axes = l.axes();
    let s = par::sum_chunks(field.n_nodes(), |range| {
        let mut idx = vec![0usize; axes];
        let mut acc = 0.0;
        for node in range {
            l.multi_index(node, &mut idx);
            let mut other = 0usize;
            let mut valid = true;
            for a in 0..axes {
                let cnt = l.count(a) as isize;
                let mut j = idx[a] as isize + off[a];
                if a == 0 && !field.periodic_time {
                    if j < 0 || j >= cnt {
                        valid = false;
                        break;
                    }
                } else {
                    j = j.rem_euclid(cnt);
                }
                other += j as usize * l.stride(a);
            }
            if !valid {
                continue;
            }
            let d2: f64 = (0..n)
                .map(|c| {
                    let d = field.values[other * n + c] - field.values[node * n + c];
                    d * d
                })
                .sum();
            if d2 > 0.0 {
                acc += d2.powf(0.5 * p);
            }
        }
        acc
    });
    (s * l.cell_volume()).powf(1.0 / p)
}

/// Both sides of the commutator bound per epsilon, with the constant set to 1.
pub fn lemma_bound_audit(
    system: &SystemSpec,
    field: &DiscreteField,
    epsilons: &[f64],
    q: f64,
    opts: CommutatorOptions,
) -> Result<CommutatorSweep> {
    if !(q >= 1.0) || q.is_infinite() {
        return Err(LabError::Parameter(format!(
            "q must lie in [1, inf), got {q}"
        )));
    }
    let l = &field.lattice;
    let kernels = kernels_for(epsilons, l, opts.kernel_axes)?;
    let engine = Engine::new(system, field, &kernels, opts)?;
    let len = system.flux_len();
    let n = system.n;
    let mut comm = Vec::new();
    let mut moll = Vec::new();
    let mut shifts = Vec::new();
    for k in &kernels {
        let m = engine.apply(k)?;
        let out_l = &m.lattice;
        let c_norm = {
            let s = par::sum_vec_with(
                out_l.n_nodes(),
                1,
                || (vec![0.0; n], vec![0.0; len]),
                |i, acc, (st, g)| {
                    engine.commutator_at(&m, i, st, g);
                    let f2: f64 = g.iter().map(|x| x * x).sum();
                    if f2 > 0.0 {
                        acc[0] += f2.powf(0.5 * q);
                    }
                },
            );
            (s[0] * out_l.cell_volume()).powf(1.0 / q)
        };
        comm.push(c_norm);
        let diff: Vec<Vec<f64>> = (0..n)
            .map(|c| {
                (0..out_l.n_nodes())
                    .into_par_iter()
                    .map(|i| m.v[c][i] - field.values[untrimmed_index(l, out_l, i) * n + c])
                    .collect()
            })
            .collect();
        let refs: Vec<&[f64]> = diff.iter().map(|d| d.as_slice()).collect();
        moll.push(planes_norm(&refs, out_l.cell_volume(), 2.0 * q));
        // Offsets of the stencil, wrapped onto periodic axes, one of each +-Y pair.
        let mut offsets: std::collections::BTreeSet<Vec<isize>> = Default::default();
        for (off, _) in k.entries() {
            let w: Vec<isize> = off
                .iter()
                .enumerate()
                .map(|(a, o)| {
                    if a == 0 && !field.periodic_time {
                        *o
                    } else {
                        let c = l.count(a) as isize;
                        let r = o.rem_euclid(c);
                        if r > c / 2 {
                            r - c
                        } else {
                            r
                        }
                    }
                })
                .collect();
            if w.iter().all(|x| *x == 0) {
                continue;
            }
            let neg: Vec<isize> = w.iter().map(|x| -x).collect();
            if !offsets.contains(&neg) {
                offsets.insert(w);
            }
        }
        let work = offsets.len() as f64 * field.n_nodes() as f64;
        if work > SHIFT_SUP_WORK_LIMIT {
            return Err(LabError::Resolution(format!(
                "shift supremum over {} stencil offsets on {} nodes exceeds the work limit; use a coarser lattice",
                offsets.len(),
                field.n_nodes()
            )));
        }
        let sup = offsets
            .iter()
            .map(|o| multi_shift_norm(field, o, 2.0 * q))
            .fold(0.0, f64::max);
        shifts.push(sup);
    }
    let bound: Vec<f64> = moll
        .iter()
        .zip(&shifts)
        .map(|(a, b)| a * a + b * b)
        .collect();
    // Bounds at rounding level (e.g. constant fields) count as zero.
    let max_abs = field.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let volume = l.n_nodes() as f64 * l.cell_volume();
    let floor = (1e-12 * max_abs * volume.powf(0.5 / q)).powi(2);
    let ratio: Vec<f64> = comm
        .iter()
        .zip(&bound)
        .map(|(c, b)| if *b > floor { c / b } else { f64::NAN })
        .collect();
    let c_max = ratio
        .iter()
        .filter(|r| r.is_finite())
        .fold(f64::NAN, |m, r| if m.is_nan() { *r } else { m.max(*r) });
    Ok(CommutatorSweep {
        q,
        epsilons: epsilons.to_vec(),
        rate_fit: fit_power_law(epsilons, &comm),
        commutator_lq_norms: comm,
        mollification_norms: moll,
        shift_sup_norms: shifts,
        lemma_bound_values: bound,
        measured_c: ratio,
        measured_c_max: c_max,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub epsilons: Vec<f64>,
    /// Term carrying `D_U B` and `D_X [U]_eps`.
    #[serde(rename = "I1")]
    pub i1: Vec<f64>,
    /// Term carrying `D_X psi`.
    #[serde(rename = "I2")]
    pub i2: Vec<f64>,
    /// `I1 + I2`, the integral of the residual.
    pub total: Vec<f64>,
    /// `-int Q([U]_eps) . D_X psi`, evaluated directly as a cross-check.
    pub mollified_companion_residual: Vec<f64>,
    pub rate_fit: RateFit,
    /// Extrapolation of `total` to `eps -> 0` (sweep ordered by decreasing eps).
    pub limit_estimate: f64,
}

/// Residual of the mollified companion law against `testfn`:
///
/// `I1 = int ([G(U)]_eps - G(v)) : (psi D_U B^T(v) D_X v)`,
/// `I2 = int ([G(U)]_eps - G(v)) : (B^T(v) D_X psi)`, `v = [U]_eps`.
///
/// Integration by parts gives `I1 + I2 = -int Q(v) . D_X psi`.
pub fn residual_r(
    system: &SystemSpec,
    field: &DiscreteField,
    epsilons: &[f64],
    testfn: &TestFunction,
    opts: CommutatorOptions,
) -> Result<ResidualReport> {
    let l = &field.lattice;
    let kernels = kernels_for(epsilons, l, opts.kernel_axes)?;
    for k in &kernels {
        testfn.check_support(
            &output_lattice(l, field.periodic_time, k)?,
            field.periodic_time,
        )?;
    }
    let engine = Engine::new(system, field, &kernels, opts)?;
    let (n, rows, cols) = (system.n, system.rows, system.cols());
    let axes = cols;
    let mut i1 = Vec::new();
    let mut i2 = Vec::new();
    let mut direct = Vec::new();
    for k in &kernels {
        let m = engine.apply(k)?;
        let out_l = &m.lattice;
        let dv = central_gradient(out_l, field.periodic_time, &m.v);
        let time_period = field.periodic_time.then_some(out_l.extent_time);
        struct Scratch {
            p: Vec<f64>,
            grad: Vec<f64>,
            s: Vec<f64>,
            c: Vec<f64>,
            b: Vec<f64>,
            db: Vec<f64>,
            q: Vec<f64>,
        }
        let sums = par::sum_vec_with(
            out_l.n_nodes(),
            3,
            || Scratch {
                p: vec![0.0; axes],
                grad: vec![0.0; axes],
                s: vec![0.0; n],
                c: vec![0.0; rows * cols],
                b: vec![0.0; rows],
                db: vec![0.0; rows * n],
                q: vec![0.0; cols],
            },
            |i, acc, w| {
                out_l.point(i, &mut w.p);
                let psi = testfn.eval(&w.p, out_l.extent_space, time_period, &mut w.grad);
                if psi == 0.0 && w.grad.iter().all(|g| *g == 0.0) {
                    return;
                }
                engine.commutator_at(&m, i, &mut w.s, &mut w.c);
                system.multiplier_into(&w.s, &mut w.b);
                if psi != 0.0 {
                    system.multiplier_jacobian_into(
                        &w.s,
                        &mut w.db,
                        opts.jacobian_mode,
                        DEFAULT_FD_STEP,
                    );
                }
                let (mut a1, mut a2) = (0.0, 0.0);
                for r in 0..rows {
                    for j in 0..cols {
                        let c = w.c[r * cols + j];
                        if c == 0.0 {
                            continue;
                        }
                        if psi != 0.0 {
                            let mut t = 0.0;
                            for l in 0..n {
                                t += w.db[r * n + l] * dv[l * axes + j][i];
                            }
                            a1 -= c * psi * t;
                        }
                        a2 -= c * w.b[r] * w.grad[j];
                    }
                }
                acc[0] += a1;
                acc[1] += a2;
                system.companion_into(&w.s, &mut w.q);
                acc[2] -= w.q.iter().zip(&w.grad).map(|(q, g)| q * g).sum::<f64>();
            },
        );
        let vol = out_l.cell_volume();
        i1.push(sums[0] * vol);
        i2.push(sums[1] * vol);
        direct.push(sums[2] * vol);
    }
    let total: Vec<f64> = i1.iter().zip(&i2).map(|(a, b)| a + b).collect();
    let mut ordered: Vec<(f64, f64)> = epsilons
        .iter()
        .copied()
        .zip(total.iter().copied())
        .collect();
    ordered.sort_by(|a, b| b.0.total_cmp(&a.0));
    let seq: Vec<f64> = ordered.iter().map(|p| p.1).collect();
    Ok(ResidualReport {
        epsilons: epsilons.to_vec(),
        rate_fit: fit_power_law(epsilons, &total),
        limit_estimate: extrapolate_limit(&seq),
        i1,
        i2,
        total,
        mollified_companion_residual: direct,
    })
}

/// Fraction of nodes where `|U - [U]_eps| < delta` (Euclidean in the
/// components), on the output lattice of the kernel.
pub fn good_set_measure(
    field: &DiscreteField,
    kernel: &MollifierKernel,
    delta: f64,
    backend: Backend,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(LabError::Parameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let m = crate::mollifier::mollify_with(field, kernel, backend)?;
    let l = &field.lattice;
    let n = field.n;
    let d2 = delta * delta;
    let good = par::count(m.n_nodes(), |i| {
        let j = untrimmed_index(l, &m.lattice, i);
        let s: f64 = (0..n)
            .map(|c| {
                let d = m.values[i * n + c] - field.values[j * n + c];
                d * d
            })
            .sum();
        s < d2
    });
    Ok(good as f64 / m.n_nodes() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_shock_field;
    use crate::mollifier::make_kernel;
    use crate::systems::{make_builtin, BuiltinParams, StateDomain};

    fn burgers() -> SystemSpec {
        make_builtin("burgers", &BuiltinParams::default()).unwrap()
    }

    fn wave(l: &Lattice) -> DiscreteField {
        DiscreteField::from_fn(l.clone(), 1, true, |p, o| {
            o[0] = (2.0 * std::f64::consts::PI * p[1]).sin()
        })
        .unwrap()
    }

    #[test]
    fn affine_column_vanishes() {
        let l = Lattice::new(1, 32, 128, 1.0, 1.0).unwrap();
        let f = wave(&l);
        let k = make_kernel(0.125, &l).unwrap();
        let opts = CommutatorOptions {
            affine_short_circuit: false,
            ..Default::default()
        };
        let c = commutator_field(&burgers(), &f, &k, opts).unwrap();
        let max0 = c
            .values
            .iter()
            .step_by(2)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let max1 = c
            .values
            .iter()
            .skip(1)
            .step_by(2)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max0 <= 1e-13, "{max0}");
        assert!(max1 > 1e-3);
        let c = commutator_field(&burgers(), &f, &k, CommutatorOptions::default()).unwrap();
        assert!(c.values.iter().step_by(2).all(|v| *v == 0.0));
    }

    #[test]
    fn non_convex_domain_violation_is_reported() {
        let sys = SystemSpec::builder("ring", 1, 1)
            .domain(StateDomain::predicate("|u| > 0.5", false, |u| {
                u[0].abs() > 0.5
            }))
            .flux(|u, o| {
                o[0] = u[0];
                o[1] = 0.5 * u[0] * u[0];
            })
            .multiplier(|u, o| o[0] = u[0])
            .companion(|u, o| {
                o[0] = 0.5 * u[0] * u[0];
                o[1] = u[0].powi(3) / 3.0;
            })
            .build()
            .unwrap();
        let l = Lattice::new(1, 64, 64, 1.0, 1.0).unwrap();
        let f = make_shock_field(&sys, &[1.0], &[-1.0], 0.0, &l).unwrap();
        let k = make_kernel(0.125, &l).unwrap();
        let err = commutator_field(&sys, &f, &k, CommutatorOptions::default()).unwrap_err();
        assert!(matches!(err, LabError::DomainViolation { .. }), "{err}");
        assert!(err.to_string().contains("extend the system"));
    }

    #[test]
    fn good_set_of_constant_field_is_everything() {
        let l = Lattice::new(1, 16, 64, 1.0, 1.0).unwrap();
        let f = DiscreteField::from_fn(l.clone(), 1, true, |_, o| o[0] = 1.0).unwrap();
        let k = make_kernel(0.25, &l).unwrap();
        assert_eq!(good_set_measure(&f, &k, 1e-3, Backend::Auto).unwrap(), 1.0);
    }

    #[test]
    fn empty_sweep_rejected() {
        let l = Lattice::new(1, 16, 64, 1.0, 1.0).unwrap();
        let f = wave(&l);
        assert!(lemma_bound_audit(&burgers(), &f, &[], 1.5, CommutatorOptions::default()).is_err());
    }
}
