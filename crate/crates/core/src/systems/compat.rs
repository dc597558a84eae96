use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fd_step_for, SystemSpec};
use crate::error::{LabError, Result};

/// Whether Jacobians may come from analytic evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMode {
    /// Analytic when supplied, finite differences otherwise.
    Auto,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMethod {
    Analytic,
    FiniteDifference,
}

/// Source of states for [`check_compatibility`].
pub trait StateSampler {
    fn sample(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64>;
}

impl<F: FnMut(&mut ChaCha8Rng) -> Vec<f64>> StateSampler for F {
    fn sample(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self(rng)
    }
}

/// Uniform states in the closed box `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct BoxSampler {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSampler {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        BoxSampler { lo, hi }
    }

    /// The system's default sampling box, or `[-1, 1]^n`.
    pub fn for_system(system: &SystemSpec) -> Self {
        match &system.sampling_box {
            Some((lo, hi)) => BoxSampler::new(lo.clone(), hi.clone()),
            None => BoxSampler::new(vec![-1.0; system.n], vec![1.0; system.n]),
        }
    }
}

impl StateSampler for BoxSampler {
    fn sample(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| if h > l { rng.gen_range(*l..=*h) } else { *l })
            .collect()
    }
}

/// Worst violation of `D_U Q_j = B D_U G_j` over the sampled states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub system: String,
    pub max_residual: f64,
    pub worst_state: Vec<f64>,
    pub worst_column: usize,
    pub samples: usize,
    pub method: JacobianMethod,
}

/// Sample states and measure `max_j |D_U Q_j(U) - B(U) D_U G_j(U)|_inf`.
///
/// Every sampled state, and its perturbations by the difference step, must
/// lie inside the system domain.
pub fn check_compatibility(
    system: &SystemSpec,
    sampler: &mut dyn StateSampler,
    rng: &mut ChaCha8Rng,
    n_samples: usize,
    fd_step: f64,
    mode: JacobianMode,
) -> Result<CompatibilityReport> {
    if n_samples == 0 {
        return Err(LabError::Parameter("n_samples must be at least 1".into()));
    }
    if !(fd_step > 0.0) {
        return Err(LabError::Parameter(format!(
            "finite-difference step must be positive, got {fd_step}"
        )));
    }
    let (n, rows, cols) = (system.n, system.rows, system.cols());
    let mut dg = vec![0.0; rows * cols * n];
    let mut dq = vec![0.0; cols * n];
    let mut b = vec![0.0; rows];
    let mut method = JacobianMethod::Analytic;
    let mut worst = (0.0f64, Vec::new(), 0usize);

    for _ in 0..n_samples {
        let u = sampler.sample(rng);
        if u.len() != n {
            return Err(LabError::Rejection {
                state: u,
                reason: format!("expected {n} components"),
            });
        }
        let margins: Vec<f64> = u.iter().map(|x| fd_step_for(fd_step, *x)).collect();
        if !system.domain.contains_with_margin(&u, &margins) {
            return Err(LabError::Rejection {
                reason: format!(
                    "outside {} (or closer than the difference step)",
                    system.domain.describe()
                ),
                state: u,
            });
        }
        let m1 = system.flux_jacobian_into(&u, &mut dg, mode, fd_step);
        let m2 = system.companion_jacobian_into(&u, &mut dq, mode, fd_step);
        if m1 == JacobianMethod::FiniteDifference || m2 == JacobianMethod::FiniteDifference {
            method = JacobianMethod::FiniteDifference;
        }
        system.multiplier_into(&u, &mut b);
        for j in 0..cols {
            let mut col_res = 0.0f64;
            for l in 0..n {
                let bdg: f64 = (0..rows).map(|i| b[i] * dg[(i * cols + j) * n + l]).sum();
                col_res = col_res.max((dq[j * n + l] - bdg).abs());
            }
            if col_res > worst.0 || worst.1.is_empty() {
                worst = (col_res, u.clone(), j);
            }
        }
    }
    Ok(CompatibilityReport {
        system: system.name.clone(),
        max_residual: worst.0,
        worst_state: worst.1,
        worst_column: worst.2,
        samples: n_samples,
        method,
    })
}
