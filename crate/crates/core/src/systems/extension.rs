use std::sync::Arc;

use super::{FluxModel, StateDomain, SystemSpec};
use crate::error::{LabError, Result};

fn e(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn de(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        e(t) / (t * t)
    }
}

/// C-infinity step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let (a, b) = (e(t), e(1.0 - t));
        a / (a + b)
    }
}

pub fn smooth_step_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let (a, b) = (e(t), e(1.0 - t));
    let s = a + b;
    (de(t) * b + a * de(1.0 - t)) / (s * s)
}

/// Tensorized cutoff: 1 on the `delta`-enlargement of `[lo, hi]`, 0 outside the
/// `2 delta`-enlargement (both in the max-norm).
#[derive(Debug, Clone)]
struct Cutoff {
    lo: Vec<f64>,
    hi: Vec<f64>,
    delta: f64,
}

impl Cutoff {
    fn factor(&self, x: f64, i: usize) -> (f64, f64) {
        let (d, sign) = if x < self.lo[i] {
            (self.lo[i] - x, -1.0)
        } else if x > self.hi[i] {
            (x - self.hi[i], 1.0)
        } else {
            (0.0, 0.0)
        };
        let t = (d - self.delta) / self.delta;
        (
            1.0 - smooth_step(t),
            -sign * smooth_step_derivative(t) / self.delta,
        )
    }

    fn value(&self, u: &[f64]) -> f64 {
        u.iter()
            .enumerate()
            .map(|(i, x)| self.factor(*x, i).0)
            .product()
    }

    /// Value and gradient.
    fn gradient(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        let parts: Vec<(f64, f64)> = u
            .iter()
            .enumerate()
            .map(|(i, x)| self.factor(*x, i))
            .collect();
        let chi = parts.iter().map(|p| p.0).product();
        for l in 0..u.len() {
            grad[l] = parts
                .iter()
                .enumerate()
                .map(|(i, p)| if i == l { p.1 } else { p.0 })
                .product();
        }
        chi
    }
}

struct Extended {
    inner: Arc<dyn FluxModel>,
    cutoff: Cutoff,
    n: usize,
    len_g: usize,
    len_b: usize,
    len_q: usize,
}

/// `out = chi * f(u)` with the inner evaluator skipped outside the support.
fn scaled(chi: f64, out: &mut [f64], f: impl FnOnce(&mut [f64])) {
    if chi == 0.0 {
        out.fill(0.0);
    } else {
        f(out);
        if chi != 1.0 {
            out.iter_mut().for_each(|v| *v *= chi);
        }
    }
}

impl Extended {
    /// `D(chi f) = chi Df + f (x) grad chi`; `false` when the inner Jacobian is
    /// not analytic.
    fn product_rule(
        &self,
        u: &[f64],
        out: &mut [f64],
        m: usize,
        value: impl Fn(&[f64], &mut [f64]),
        jac: impl Fn(&[f64], &mut [f64]) -> bool,
    ) -> bool {
        let n = self.n;
        let mut grad = vec![0.0; n];
        let chi = self.cutoff.gradient(u, &mut grad);
        if chi == 0.0 && grad.iter().all(|g| *g == 0.0) {
            out.fill(0.0);
            return true;
        }
        if !jac(u, out) {
            return false;
        }
        let mut f = vec![0.0; m];
        value(u, &mut f);
        for r in 0..m {
            for l in 0..n {
                out[r * n + l] = chi * out[r * n + l] + f[r] * grad[l];
            }
        }
        true
    }
}

impl FluxModel for Extended {
    fn flux(&self, u: &[f64], out: &mut [f64]) {
        scaled(self.cutoff.value(u), out, |o| self.inner.flux(u, o))
    }
    fn multiplier(&self, u: &[f64], out: &mut [f64]) {
        scaled(self.cutoff.value(u), out, |o| self.inner.multiplier(u, o))
    }
    fn companion(&self, u: &[f64], out: &mut [f64]) {
        scaled(self.cutoff.value(u), out, |o| self.inner.companion(u, o))
    }
    fn flux_jacobian(&self, u: &[f64], out: &mut [f64]) -> bool {
        self.product_rule(
            u,
            out,
            self.len_g,
            |x, o| self.inner.flux(x, o),
            |x, o| self.inner.flux_jacobian(x, o),
        )
    }
    fn multiplier_jacobian(&self, u: &[f64], out: &mut [f64]) -> bool {
        self.product_rule(
            u,
            out,
            self.len_b,
            |x, o| self.inner.multiplier(x, o),
            |x, o| self.inner.multiplier_jacobian(x, o),
        )
    }
    fn companion_jacobian(&self, u: &[f64], out: &mut [f64]) -> bool {
        self.product_rule(
            u,
            out,
            self.len_q,
            |x, o| self.inner.companion(x, o),
            |x, o| self.inner.companion_jacobian(x, o),
        )
    }
}

/// Replace `G`, `B`, `Q` by compactly supported versions that agree with the
/// originals on the `delta`-enlargement of the box `K = [lo, hi]` and vanish
/// outside its `2 delta`-enlargement. Enlargements use the max-norm distance to
/// `K`. The result is defined on all of `R^n`.
///
/// Affine annotations are kept: on the convex set `K` the affine structure is
/// unchanged, and mollified states of a field with range in `K` stay in `K`.
pub fn extend_to_compact_range(
    system: &SystemSpec,
    lo: &[f64],
    hi: &[f64],
    delta: f64,
) -> Result<SystemSpec> {
    let n = system.n;
    if lo.len() != n || hi.len() != n {
        return Err(LabError::Parameter(format!(
            "range box must have {n} components"
        )));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(LabError::Parameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if lo
        .iter()
        .zip(hi)
        .any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite())
    {
        return Err(LabError::Parameter(format!(
            "range box needs finite lo <= hi, got {lo:?}..{hi:?}"
        )));
    }
    let lo2: Vec<f64> = lo.iter().map(|x| x - 2.0 * delta).collect();
    let hi2: Vec<f64> = hi.iter().map(|x| x + 2.0 * delta).collect();
    if let Some((coord, upper)) = system.domain.box_violation(&lo2, &hi2) {
        let (side, value) = if upper {
            ("upper", hi2[coord])
        } else {
            ("lower", lo2[coord])
        };
        return Err(LabError::Geometry(format!(
            "2*delta enlargement of the range box leaves {}: {side} face of coordinate {coord} at {value}",
            system.domain.describe()
        )));
    }
    let model = Extended {
        inner: system.model().clone(),
        cutoff: Cutoff {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            delta,
        },
        n,
        len_g: system.flux_len(),
        len_b: system.rows,
        len_q: system.cols(),
    };
    let mut spec = SystemSpec::new(
        format!("{}+extended", system.name),
        n,
        system.rows,
        system.k,
        StateDomain::all_space(),
        Arc::new(model),
    );
    spec.affine_columns = system.affine_columns.clone();
    spec.affine_rows = system.affine_rows.clone();
    spec.sampling_box = Some((
        lo.iter().map(|x| x - delta).collect(),
        hi.iter().map(|x| x + delta).collect(),
    ));
    Ok(spec)
}
