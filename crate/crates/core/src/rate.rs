//! Log-log rate regression.

use serde::{Deserialize, Serialize};

/// Outcome of fitting `log(value) = intercept + slope * log(scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Fitted,
    /// Every value was exactly zero; slope and intercept are NaN.
    AllZero,
    /// Fewer than two positive, finite points.
    Insufficient,
}

/// Least-squares power-law fit. Non-finite numbers serialize as JSON `null`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub n_points: usize,
    pub status: FitStatus,
}

impl RateFit {
    fn degenerate(status: FitStatus, scales: &[f64]) -> Self {
        let (lo, hi) = min_max(scales);
        RateFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            residual: f64::NAN,
            scale_min: lo,
            scale_max: hi,
            n_points: 0,
            status,
        }
    }

    pub fn is_fitted(&self) -> bool {
        self.status == FitStatus::Fitted
    }

    /// `value * scale^(-slope)` for every point: the empirical constant of the rate.
    pub fn constants(&self, scales: &[f64], values: &[f64]) -> Vec<f64> {
        scales
            .iter()
            .zip(values)
            .map(|(s, v)| v.abs() * s.powf(-self.slope))
            .collect()
    }
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Fit `|values|` against `scales` on log-log axes. Zero or non-finite
/// values are skipped; if all values are zero the fit is [`FitStatus::AllZero`].
pub fn fit_power_law(scales: &[f64], values: &[f64]) -> RateFit {
    assert_eq!(scales.len(), values.len());
    if !values.is_empty() && values.iter().all(|v| *v == 0.0) {
        return RateFit::degenerate(FitStatus::AllZero, scales);
    }
    let pts: Vec<(f64, f64)> = scales
        .iter()
        .zip(values)
        .filter(|(s, v)| **s > 0.0 && v.abs() > 0.0 && v.is_finite())
        .map(|(s, v)| (s.ln(), v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return RateFit::degenerate(FitStatus::Insufficient, scales);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return RateFit::degenerate(FitStatus::Insufficient, scales);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let used: Vec<f64> = pts.iter().map(|p| p.0.exp()).collect();
    let (lo, hi) = min_max(&used);
    RateFit {
        slope,
        intercept,
        residual: (rss / n).sqrt(),
        scale_min: lo,
        scale_max: hi,
        n_points: pts.len(),
        status: FitStatus::Fitted,
    }
}

/// Extrapolate a sequence computed at geometrically shrinking scales to the
/// zero-scale limit.
///
/// Uses Aitken's delta-squared step on the last three values when the
/// successive differences contract (ratio in `(0, 1)`); otherwise the last
/// value is returned unchanged.
pub fn extrapolate_limit(values: &[f64]) -> f64 {
    match values {
        [] => f64::NAN,
        [.., a, b, c] => {
            let d1 = b - a;
            let d2 = c - b;
            let denom = d2 - d1;
            if d1 != 0.0 && denom != 0.0 {
                let ratio = d2 / d1;
                if ratio > 0.0 && ratio < 1.0 {
                    return c - d2 * d2 / denom;
                }
            }
            *c
        }
        [.., last] => *last,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let s: Vec<f64> = (0..6).map(|i| 2f64.powi(-i)).collect();
        let v: Vec<f64> = s.iter().map(|x| 3.0 * x.powf(0.8)).collect();
        let fit = fit_power_law(&s, &v);
        assert!((fit.slope - 0.8).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn all_zero_is_a_sentinel() {
        let fit = fit_power_law(&[1.0, 0.5, 0.25], &[0.0, 0.0, 0.0]);
        assert_eq!(fit.status, FitStatus::AllZero);
        assert!(fit.slope.is_nan());
    }

    #[test]
    fn aitken_recovers_geometric_limit() {
        let v: Vec<f64> = (0..5).map(|i| 2.0 + 0.5f64.powi(i)).collect();
        assert!((extrapolate_limit(&v) - 2.0).abs() < 1e-12);
        // Non-contracting: fall back to last value.
        assert_eq!(extrapolate_limit(&[1.0, 3.0, 2.0]), 2.0);
        assert_eq!(extrapolate_limit(&[4.0]), 4.0);
    }
}
