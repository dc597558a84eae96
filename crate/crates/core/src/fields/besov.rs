use serde::{Deserialize, Serialize};

use super::DiscreteField;
use crate::error::{LabError, Result};
use crate::par;
use crate::rate::{fit_power_law, FitStatus, RateFit};

pub const BESOV_MIN_SHIFTS: usize = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BesovEstimate {
    pub q: f64,
    /// Shift magnitudes, strictly decreasing by factors of two.
    pub shifts: Vec<f64>,
    /// Max over axes of the `L^q` norm of the shifted difference.
    pub diff_norms: Vec<f64>,
    /// NaN when every difference vanishes.
    pub fitted_alpha: f64,
    pub fit: RateFit,
    /// Index range `[start, end)` into `shifts` used by the regression.
    pub fit_window: (usize, usize),
    /// `max_j diff_norms[j] / shifts[j]^alpha`; zero for constant fields.
    pub seminorm_proxy: f64,
}

fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0) {
        return Err(LabError::Parameter(format!("q must be >= 1, got {q}")));
    }
    Ok(())
}

/// `L^q` norm over the lattice of `|U(X + offset e_axis) - U(X)|`, Euclidean
/// in the state components. Non-periodic time shifts are restricted to the
/// overlap of the lattice and its translate. `q = inf` gives the max norm.
pub fn shift_difference_norm(
    field: &DiscreteField,
    axis: usize,
    offset: isize,
    q: f64,
) -> Result<f64> {
    check_q(q)?;
    let l = &field.lattice;
    if axis > l.k {
        return Err(LabError::Parameter(format!("axis {axis} out of range")));
    }
    let n = field.n;
    let count = l.count(axis) as isize;
    let stride = l.stride(axis) as isize;
    let periodic = axis > 0 || field.periodic_time;
    let v = &field.values;
    let diff2 = |node: usize| -> Option<f64> {
        let i = (node as isize / stride) % count;
        let mut j = i + offset;
        if periodic {
            j = j.rem_euclid(count);
        } else if j < 0 || j >= count {
            return None;
        }
        let other = (node as isize + (j - i) * stride) as usize;
        let (a, b) = (&v[node * n..node * n + n], &v[other * n..other * n + n]);
        Some(a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum())
    };
    let len = field.n_nodes();
    if q.is_infinite() {
        let m = par::max(len, |i| diff2(i).map_or(0.0, f64::sqrt));
        return Ok(m.max(0.0));
    }
    let s = par::sum(len, |i| {
        diff2(i).map_or(0.0, |d| if d == 0.0 { 0.0 } else { d.powf(0.5 * q) })
    });
    Ok((s * l.cell_volume()).powf(1.0 / q))
}

/// Dyadic shift sweep and power-law fit of the shifted-difference norms.
///
/// Shift magnitudes are `2^j h_min` (`j >= 1`) up to `max_axis extent / 8`;
/// the `n_shifts` smallest are kept. A magnitude is applied along every axis
/// whose spacing it covers and whose extent it does not exceed over 8,
/// rounded to whole cells. With five or more shifts the largest and smallest
/// are left out of the regression.
pub fn estimate_besov(field: &DiscreteField, q: f64, n_shifts: usize) -> Result<BesovEstimate> {
    check_q(q)?;
    if n_shifts < BESOV_MIN_SHIFTS {
        return Err(LabError::Parameter(format!(
            "n_shifts must be at least {BESOV_MIN_SHIFTS}, got {n_shifts}"
        )));
    }
    let l = &field.lattice;
    let axes = l.axes();
    let h0 = (0..axes)
        .map(|a| l.spacing(a))
        .fold(f64::INFINITY, f64::min);
    let top = (0..axes).map(|a| l.extent(a) / 8.0).fold(0.0, f64::max);
    let mut ladder = Vec::new();
    let mut r = 2.0 * h0;
    while r <= top * (1.0 + 1e-12) {
        ladder.push(r);
        r *= 2.0;
    }
    ladder.truncate(n_shifts);
    ladder.reverse();
    if ladder.len() < BESOV_MIN_SHIFTS {
        return Err(LabError::Resolution(format!(
            "only {} dyadic shifts between 2h and extent/8; need {BESOV_MIN_SHIFTS}",
            ladder.len()
        )));
    }
    let mut norms = Vec::with_capacity(ladder.len());
    for &r in &ladder {
        let mut best = 0.0f64;
        for a in 0..axes {
            let h = l.spacing(a);
            if r < h * (1.0 - 1e-12) || r > l.extent(a) / 8.0 * (1.0 + 1e-12) {
                continue;
            }
            let offset = (r / h).round() as isize;
            best = best.max(shift_difference_norm(field, a, offset, q)?);
        }
        norms.push(best);
    }
    let window = if ladder.len() >= 5 {
        (1, ladder.len() - 1)
    } else {
        (0, ladder.len())
    };
    let fit = fit_power_law(&ladder[window.0..window.1], &norms[window.0..window.1]);
    let (alpha, proxy) = if norms.iter().all(|v| *v == 0.0) {
        (f64::NAN, 0.0)
    } else {
        let a = if fit.status == FitStatus::Fitted {
            fit.slope
        } else {
            f64::NAN
        };
        let p = ladder
            .iter()
            .zip(&norms)
            .map(|(s, v)| v / s.powf(a))
            .fold(0.0, f64::max);
        (a, p)
    };
    Ok(BesovEstimate {
        q,
        shifts: ladder,
        diff_norms: norms,
        fitted_alpha: alpha,
        fit,
        fit_window: window,
        seminorm_proxy: proxy,
    })
}
