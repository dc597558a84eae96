use std::fmt;
use std::sync::Arc;

/// Shape of an open state domain.
#[derive(Clone)]
pub enum DomainKind {
    AllSpace,
    /// Open box `lo < u < hi`; infinite bounds are allowed.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `u[coordinate] > 0`.
    HalfSpacePositive {
        coordinate: usize,
    },
    Predicate {
        description: String,
        test: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
    },
}

/// Open set of admissible states.
#[derive(Clone)]
pub struct StateDomain {
    pub kind: DomainKind,
    pub convex: bool,
}

impl fmt::Debug for StateDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (convex: {})", self.describe(), self.convex)
    }
}

impl StateDomain {
    pub fn all_space() -> Self {
        StateDomain {
            kind: DomainKind::AllSpace,
            convex: true,
        }
    }

    pub fn open_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        StateDomain {
            kind: DomainKind::Box { lo, hi },
            convex: true,
        }
    }

    /// Half-space `u[coordinate] > 0`. The `convex` flag is set by the caller:
    /// a half-space may stand in for a non-convex domain.
    pub fn half_space(coordinate: usize, convex: bool) -> Self {
        StateDomain {
            kind: DomainKind::HalfSpacePositive { coordinate },
            convex,
        }
    }

    pub fn predicate(
        description: impl Into<String>,
        convex: bool,
        test: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        StateDomain {
            kind: DomainKind::Predicate {
                description: description.into(),
                test: Arc::new(test),
            },
            convex,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            DomainKind::AllSpace => "all-space".to_string(),
            DomainKind::Box { lo, hi } => format!("box {lo:?}..{hi:?}"),
            DomainKind::HalfSpacePositive { coordinate } => {
                format!("half-space u[{coordinate}] > 0")
            }
            DomainKind::Predicate { description, .. } => format!("predicate: {description}"),
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        if u.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match &self.kind {
            DomainKind::AllSpace => true,
            DomainKind::Box { lo, hi } => u
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (l, h))| *l < *x && *x < *h),
            DomainKind::HalfSpacePositive { coordinate } => u[*coordinate] > 0.0,
            DomainKind::Predicate { test, .. } => test(u),
        }
    }

    /// Membership of `u` and of every coordinate perturbation `u ± margin_l e_l`.
    pub fn contains_with_margin(&self, u: &[f64], margins: &[f64]) -> bool {
        if !self.contains(u) {
            return false;
        }
        let mut x = u.to_vec();
        for (l, m) in margins.iter().enumerate() {
            for sign in [1.0, -1.0] {
                x[l] = u[l] + sign * m;
                if !self.contains(&x) {
                    return false;
                }
            }
            x[l] = u[l];
        }
        true
    }

    /// Whether the closed box `[lo, hi]` lies inside the domain. Returns the
    /// first offending face as `(coordinate, is_upper)` otherwise.
    ///
    /// Predicate domains are probed at the corners and on a seeded sample of
    /// interior points.
    pub fn box_violation(&self, lo: &[f64], hi: &[f64]) -> Option<(usize, bool)> {
        match &self.kind {
            DomainKind::AllSpace => None,
            DomainKind::Box { lo: dl, hi: dh } => {
                for i in 0..lo.len() {
                    if lo[i] <= dl[i] {
                        return Some((i, false));
                    }
                    if hi[i] >= dh[i] {
                        return Some((i, true));
                    }
                }
                None
            }
            DomainKind::HalfSpacePositive { coordinate } => {
                (lo[*coordinate] <= 0.0).then_some((*coordinate, false))
            }
            DomainKind::Predicate { test, .. } => {
                use rand::{Rng, SeedableRng};
                let n = lo.len();
                let probe = |x: &[f64]| -> Option<(usize, bool)> {
                    if test(x) {
                        return None;
                    }
                    // Report the coordinate closest to a face.
                    let (i, upper) = (0..n)
                        .map(|i| {
                            let dl = x[i] - lo[i];
                            let du = hi[i] - x[i];
                            if dl <= du {
                                (dl, i, false)
                            } else {
                                (du, i, true)
                            }
                        })
                        .min_by(|a, b| a.0.total_cmp(&b.0))
                        .map(|(_, i, up)| (i, up))
                        .unwrap_or((0, false));
                    Some((i, upper))
                };
                if n <= 16 {
                    for mask in 0..(1usize << n) {
                        let corner: Vec<f64> = (0..n)
                            .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                            .collect();
                        if let Some(v) = probe(&corner) {
                            return Some(v);
                        }
                    }
                }
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
                for _ in 0..4096 {
                    let x: Vec<f64> = (0..n)
                        .map(|i| {
                            if hi[i] > lo[i] {
                                rng.gen_range(lo[i]..=hi[i])
                            } else {
                                lo[i]
                            }
                        })
                        .collect();
                    if let Some(v) = probe(&x) {
                        return Some(v);
                    }
                }
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_is_open() {
        let d = StateDomain::half_space(0, true);
        assert!(d.contains(&[1e-9, -3.0]));
        assert!(!d.contains(&[0.0, 0.0]));
        let b = StateDomain::open_box(vec![0.5, f64::NEG_INFINITY], vec![2.0, f64::INFINITY]);
        assert!(b.contains(&[1.0, 1e9]));
        assert!(!b.contains(&[2.0, 0.0]));
        assert!(!b.contains(&[1.0, f64::NAN]));
    }

    #[test]
    fn margin_check_perturbs_each_coordinate() {
        let d = StateDomain::half_space(0, true);
        assert!(d.contains_with_margin(&[0.1, 0.0], &[0.05, 0.05]));
        assert!(!d.contains_with_margin(&[0.1, 0.0], &[0.2, 0.05]));
    }

    #[test]
    fn convex_domains_contain_midpoints() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let domains = [
            StateDomain::all_space(),
            StateDomain::half_space(1, true),
            StateDomain::open_box(vec![-1.0, 0.5], vec![1.0, 2.0]),
        ];
        for d in &domains {
            let mut checked = 0;
            while checked < 200 {
                let a: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let b: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
                if d.contains(&a) && d.contains(&b) {
                    let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
                    assert!(d.contains(&mid), "{d:?}");
                    checked += 1;
                }
            }
        }
    }

    #[test]
    fn box_violation_names_face() {
        let d = StateDomain::half_space(0, false);
        assert_eq!(
            d.box_violation(&[-0.1, -1.0], &[2.0, 1.0]),
            Some((0, false))
        );
        assert_eq!(d.box_violation(&[0.5, -1.0], &[2.0, 1.0]), None);
        let ring = StateDomain::predicate("|u| > 0.25", false, |u| u[0].abs() > 0.25);
        assert!(ring.box_violation(&[-1.0], &[1.0]).is_some());
        assert!(ring.box_violation(&[0.5], &[1.0]).is_none());
    }
}
