//! Smooth compactly supported test functions with closed-form gradients.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::Lattice;
use crate::systems::{smooth_step, smooth_step_derivative};

/// `int_{-1}^{1} exp(-1/(1-s^2)) ds`.
pub const BUMP_INTEGRAL: f64 = 0.443_993_816_168_079_4;

/// `exp(-1/(1-s^2))` and its derivative.
fn bump(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let d = 1.0 - s * s;
    let b = (-1.0 / d).exp();
    (b, -2.0 * s / (d * d) * b)
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// Catalogue of test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestFunction {
    /// `A prod_a b((X_a - c_a) / r_a)` over all `k + 1` axes, time first.
    Bump {
        center: Vec<f64>,
        radius: Vec<f64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `A b((t - c) / r)`, constant in space. With `normalize` the time
    /// integral is `A`.
    TimeBump {
        center: f64,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        normalize: bool,
    },
    /// `A phi(t) chi(x - s t - x0)` with `phi` a time bump and `chi` equal to
    /// 1 for `|xi| <= half_width`, decaying smoothly to 0 at
    /// `|xi| = half_width + ramp`. Along the path `x = x0 + s t` it equals
    /// `A phi(t)`.
    ShockAligned {
        t_center: f64,
        t_radius: f64,
        speed: f64,
        x0: f64,
        half_width: f64,
        ramp: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "yes")]
        normalize: bool,
    },
}

/// Minimal-image difference on a circle of length `period`.
fn wrap(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

impl TestFunction {
    pub fn amplitude(&self) -> f64 {
        match self {
            TestFunction::Bump { amplitude, .. }
            | TestFunction::TimeBump { amplitude, .. }
            | TestFunction::ShockAligned { amplitude, .. } => *amplitude,
        }
    }

    /// Same function multiplied by `c`.
    pub fn scaled(&self, c: f64) -> TestFunction {
        let mut out = self.clone();
        match &mut out {
            TestFunction::Bump { amplitude, .. }
            | TestFunction::TimeBump { amplitude, .. }
            | TestFunction::ShockAligned { amplitude, .. } => *amplitude *= c,
        }
        out
    }

    /// Time profile and its derivative.
    fn time_part(
        center: f64,
        radius: f64,
        normalize: bool,
        t: f64,
        period: Option<f64>,
    ) -> (f64, f64) {
        let mut d = t - center;
        if let Some(p) = period {
            d = wrap(d, p);
        }
        let (b, db) = bump(d / radius);
        let norm = if normalize {
            radius * BUMP_INTEGRAL
        } else {
            1.0
        };
        (b / norm, db / (radius * norm))
    }

    /// Value at `p = (t, x_1, .., x_k)`; `grad` receives `D_X psi`.
    /// `time_period` is set for time-periodic lattices.
    pub fn eval(
        &self,
        p: &[f64],
        space_period: f64,
        time_period: Option<f64>,
        grad: &mut [f64],
    ) -> f64 {
        grad.fill(0.0);
        match self {
            TestFunction::Bump {
                center,
                radius,
                amplitude,
            } => {
                let axes = p.len();
                let mut parts = [(0.0, 0.0); 8];
                let parts = &mut parts[..axes];
                for a in 0..axes {
                    let mut d = p[a] - center[a];
                    if a > 0 {
                        d = wrap(d, space_period);
                    } else if let Some(tp) = time_period {
                        d = wrap(d, tp);
                    }
                    let (b, db) = bump(d / radius[a]);
                    if b == 0.0 {
                        return 0.0;
                    }
                    parts[a] = (b, db / radius[a]);
                }
                let value: f64 = parts.iter().map(|x| x.0).product();
                for a in 0..axes {
                    grad[a] = amplitude * value / parts[a].0 * parts[a].1;
                }
                amplitude * value
            }
            TestFunction::TimeBump {
                center,
                radius,
                amplitude,
                normalize,
            } => {
                let (v, dv) = Self::time_part(*center, *radius, *normalize, p[0], time_period);
                grad[0] = amplitude * dv;
                amplitude * v
            }
            TestFunction::ShockAligned {
                t_center,
                t_radius,
                speed,
                x0,
                half_width,
                ramp,
                amplitude,
                normalize,
            } => {
                let (phi, dphi) =
                    Self::time_part(*t_center, *t_radius, *normalize, p[0], time_period);
                if phi == 0.0 {
                    return 0.0;
                }
                let xi = wrap(p[1] - speed * p[0] - x0, space_period);
                let u = (xi.abs() - half_width) / ramp;
                let chi = 1.0 - smooth_step(u);
                let dchi = -xi.signum() * smooth_step_derivative(u) / ramp;
                grad[0] = amplitude * (dphi * chi - speed * phi * dchi);
                grad[1] = amplitude * phi * dchi;
                amplitude * phi * chi
            }
        }
    }

    /// `int psi(t, x(t)) dt` along the aligned shock path; `None` for other kinds.
    pub fn path_time_integral(&self) -> Option<f64> {
        match self {
            TestFunction::ShockAligned {
                t_radius,
                amplitude,
                normalize,
                ..
            } => Some(if *normalize {
                *amplitude
            } else {
                amplitude * t_radius * BUMP_INTEGRAL
            }),
            _ => None,
        }
    }

    /// Check parameters and that the support stays inside the lattice:
    /// strictly inside the time window when time is not periodic, and
    /// narrower than half a period on periodic axes.
    pub fn check_support(&self, lattice: &Lattice, periodic_time: bool) -> Result<()> {
        let t0 = lattice.origin_time;
        let t_last = t0 + (lattice.n_time - 1) as f64 * lattice.h_time();
        let half_t = 0.5 * lattice.extent_time;
        let half_x = 0.5 * lattice.extent_space;
        let check_time = |c: f64, r: f64| -> Result<()> {
            if !(r > 0.0) || !r.is_finite() || !c.is_finite() {
                return Err(LabError::Support(format!(
                    "time radius must be positive, got {r}"
                )));
            }
            if periodic_time {
                if r > half_t {
                    return Err(LabError::Support(format!(
                        "time radius {r} exceeds half the period {half_t}"
                    )));
                }
            } else if c - r < t0 || c + r > t_last {
                return Err(LabError::Support(format!(
                    "time support [{}, {}] leaves the lattice window [{t0}, {t_last}]",
                    c - r,
                    c + r
                )));
            }
            Ok(())
        };
        match self {
            TestFunction::Bump { center, radius, .. } => {
                let axes = lattice.axes();
                if center.len() != axes || radius.len() != axes {
                    return Err(LabError::Support(format!(
                        "bump needs {axes} centre and radius entries"
                    )));
                }
                if axes > 8 {
                    return Err(LabError::Support("at most 8 axes supported".into()));
                }
                check_time(center[0], radius[0])?;
                for a in 1..axes {
                    if !(radius[a] > 0.0) || radius[a] > half_x {
                        return Err(LabError::Support(format!(
                            "radius {} on axis {a} must lie in (0, {half_x}]",
                            radius[a]
                        )));
                    }
                }
                Ok(())
            }
            TestFunction::TimeBump { center, radius, .. } => check_time(*center, *radius),
            TestFunction::ShockAligned {
                t_center,
                t_radius,
                speed,
                half_width,
                ramp,
                ..
            } => {
                if lattice.k != 1 {
                    return Err(LabError::Support(
                        "shock-aligned test functions are 1D".into(),
                    ));
                }
                check_time(*t_center, *t_radius)?;
                if !speed.is_finite() || !(*half_width >= 0.0) || !(*ramp > 0.0) {
                    return Err(LabError::Support(
                        "need finite speed, half_width >= 0 and ramp > 0".into(),
                    ));
                }
                if half_width + ramp > half_x {
                    return Err(LabError::Support(format!(
                        "spatial support half-width {} exceeds half the period {half_x}",
                        half_width + ramp
                    )));
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &TestFunction, p: &[f64], tp: Option<f64>) {
        let mut g = vec![0.0; p.len()];
        let mut tmp = vec![0.0; p.len()];
        f.eval(p, 1.0, tp, &mut g);
        for a in 0..p.len() {
            let h = 1e-6;
            let mut q = p.to_vec();
            q[a] += h;
            let up = f.eval(&q, 1.0, tp, &mut tmp);
            q[a] -= 2.0 * h;
            let dn = f.eval(&q, 1.0, tp, &mut tmp);
            let fd = (up - dn) / (2.0 * h);
            assert!(
                (fd - g[a]).abs() < 1e-5 * (1.0 + g[a].abs()),
                "{f:?} axis {a}: {fd} vs {}",
                g[a]
            );
        }
    }

    #[test]
    fn gradients_match_differences() {
        let bump = TestFunction::Bump {
            center: vec![0.5, 0.9, 0.2],
            radius: vec![0.3, 0.25, 0.3],
            amplitude: 2.0,
        };
        fd_check(&bump, &[0.6, 0.05, 0.3], None);
        let tb = TestFunction::TimeBump {
            center: 1.0,
            radius: 0.5,
            amplitude: 1.0,
            normalize: true,
        };
        fd_check(&tb, &[1.2, 0.3], None);
        let sa = TestFunction::ShockAligned {
            t_center: 1.0,
            t_radius: 1.0,
            speed: 0.5,
            x0: 0.5,
            half_width: 0.15,
            ramp: 0.15,
            amplitude: 1.0,
            normalize: true,
        };
        for p in [[0.7, 1.1], [1.5, 0.1], [0.2, 0.62]] {
            fd_check(&sa, &p, Some(2.0));
        }
    }

    #[test]
    fn bump_integral_constant() {
        let n = 200_000;
        let h = 2.0 / n as f64;
        let s: f64 = (0..n)
            .map(|i| bump(-1.0 + (i as f64 + 0.5) * h).0 * h)
            .sum();
        assert!((s - BUMP_INTEGRAL).abs() < 1e-10);
    }

    #[test]
    fn support_violations_are_reported() {
        let l = Lattice::new(1, 16, 16, 1.0, 1.0).unwrap();
        let tb = TestFunction::TimeBump {
            center: 0.1,
            radius: 0.3,
            amplitude: 1.0,
            normalize: false,
        };
        assert!(matches!(
            tb.check_support(&l, false),
            Err(LabError::Support(_))
        ));
        assert!(tb.check_support(&l, true).is_ok());
    }
}
