//! Numerical results checked against independently computed values.

use std::f64::consts::PI;

use companion_core::commutator::{
    commutator_field, good_set_measure, lemma_bound_audit, residual_r, CommutatorOptions,
};
use companion_core::dissipation::{
    companion_speed, rankine_hugoniot_speed, shock_dissipation_rate, weak_residual_companion,
    weak_residual_system,
};
use companion_core::fields::{
    estimate_besov, lacunary_phases, make_lacunary_field, make_shear_field, make_shock_field,
    shift_difference_norm, DiscreteField, LacunaryParams, Lattice, PhaseLaw,
};
use companion_core::mollifier::{dyadic_epsilons, make_kernel, Backend};
use companion_core::rate::fit_power_law;
use companion_core::systems::{extend_to_compact_range, make_builtin, BuiltinParams, SystemSpec};
use companion_core::testfn::TestFunction;

fn burgers() -> SystemSpec {
    make_builtin("burgers", &BuiltinParams::default()).unwrap()
}

fn aligned(speed: f64, t_center: f64, t_radius: f64) -> TestFunction {
    TestFunction::ShockAligned {
        t_center,
        t_radius,
        speed,
        x0: 0.5,
        half_width: 0.15,
        ramp: 0.15,
        amplitude: 1.0,
        normalize: true,
    }
}

fn sup(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn besov_l2_differences_match_fourier_sum() {
    // Distinct resolved frequencies are orthogonal on the lattice, so the
    // squared L2 difference is a sum over octaves.
    let (alpha, octaves, seed) = (0.4, 8, 11);
    let l = Lattice::new(1, 8, 1024, 0.5, 1.0).unwrap();
    let f = make_lacunary_field(&LacunaryParams::new(alpha, octaves, seed), &l).unwrap();
    for offset in [1isize, 3, 16, 100] {
        let r = offset as f64 * l.h_space();
        let s: f64 = (1..=octaves as i32)
            .map(|j| {
                2f64.powf(-2.0 * alpha * j as f64) * 2.0 * (PI * 2f64.powi(j) * r).sin().powi(2)
            })
            .sum();
        let oracle = (l.extent_time * l.extent_space * s).sqrt();
        let got = shift_difference_norm(&f, 1, offset, 2.0).unwrap();
        assert!(
            (got - oracle).abs() <= 1e-10 * oracle,
            "offset {offset}: {got} vs {oracle}"
        );
    }
    // Phases do not enter the L2 norm.
    assert_eq!(
        lacunary_phases(octaves, seed, PhaseLaw::Random).len(),
        octaves as usize
    );
}

#[test]
fn besov_estimate_on_shock_is_one_third_at_q3() {
    let l = Lattice::new(1, 16, 4096, 2.0, 1.0).unwrap();
    let f = make_shock_field(&burgers(), &[1.0], &[0.0], 0.5, &l).unwrap();
    let est = estimate_besov(&f, 3.0, 8).unwrap();
    assert!(
        (est.fitted_alpha - 1.0 / 3.0).abs() < 0.02,
        "{}",
        est.fitted_alpha
    );
}

#[test]
fn smooth_commutator_matches_taylor_expansion() {
    // G_1 = u^2/2 gives G(v) - [G(u)]_eps = -(1/2) sum_a m_a (d_a u)^2 + O(eps^4),
    // m_a the second moment of the kernel along axis a.
    let l = Lattice::new(1, 256, 2048, 1.0, 1.0).unwrap();
    let amp = 0.5;
    let f = DiscreteField::from_fn(l.clone(), 1, true, |p, o| {
        o[0] = amp * (2.0 * PI * (p[1] - p[0])).sin()
    })
    .unwrap();
    let mut norms = Vec::new();
    for eps in [1.0 / 32.0, 1.0 / 64.0] {
        let k = make_kernel(eps, &l).unwrap();
        let mut m = [0.0; 2];
        for (off, w) in k.entries() {
            for a in 0..2 {
                let d = off[a] as f64 * l.spacing(a);
                m[a] += w * d * d;
            }
        }
        let c = commutator_field(&burgers(), &f, &k, CommutatorOptions::default()).unwrap();
        let mut p = [0.0; 2];
        let mut err = 0.0f64;
        let mut size = 0.0f64;
        for i in 0..l.n_nodes() {
            l.point(i, &mut p);
            let d = 2.0 * PI * amp * (2.0 * PI * (p[1] - p[0])).cos();
            let oracle = -0.5 * (m[0] + m[1]) * d * d;
            err = err.max((c.values[2 * i + 1] - oracle).abs());
            size = size.max(oracle.abs());
        }
        assert!(err <= 0.05 * size, "eps {eps}: error {err} against {size}");
        norms.push(sup(c.values.iter().skip(1).step_by(2).copied()));
    }
    let ratio = norms[0] / norms[1];
    assert!((ratio / 4.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn shock_commutator_matches_step_convolution() {
    // Stationary 1 -> 0 step: u^2 = u, so [G_1(u)] = v / 2 and the commutator
    // is (v^2 - v) / 2 with v the step convolved with the x-marginal.
    let l = Lattice::new(1, 256, 2048, 1.0, 1.0).unwrap();
    let f = make_shock_field(&burgers(), &[1.0], &[0.0], 0.0, &l).unwrap();
    let n = l.n_space as isize;
    let step = |i: isize| if i.rem_euclid(n) < n / 2 { 1.0 } else { 0.0 };
    let mut ratios = Vec::new();
    for eps in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
        let k = make_kernel(eps, &l).unwrap();
        let r = k.radii[1] as isize;
        let mut marginal = vec![0.0; (2 * r + 1) as usize];
        for (off, w) in k.entries() {
            marginal[(off[1] + r) as usize] += w;
        }
        let c = commutator_field(&burgers(), &f, &k, CommutatorOptions::default()).unwrap();
        let mut l1 = 0.0;
        for i in 0..n {
            let v: f64 = (-r..=r)
                .map(|o| marginal[(o + r) as usize] * step(i - o))
                .sum();
            let oracle = 0.5 * (v * v - v);
            for t in 0..l.n_time {
                let got = c.values[2 * (t * l.n_space + i as usize) + 1];
                assert!(
                    (got - oracle).abs() < 1e-12,
                    "eps {eps} node {i}: {got} vs {oracle}"
                );
            }
            l1 += oracle.abs() * l.h_space() * l.extent_time;
        }
        ratios.push(l1 / eps);
    }
    for r in &ratios {
        assert!((r / ratios[0] - 1.0).abs() < 0.02, "{ratios:?}");
    }
}

#[test]
fn lemma_audit_on_lacunary_field() {
    let b = burgers();
    let eps = dyadic_epsilons(1.0 / 16.0, 5);
    let mut sweeps = Vec::new();
    for n in [1024usize, 2048] {
        let l = Lattice::new(1, 16, n, 2f64.powi(-6), 1.0).unwrap();
        let mut p = LacunaryParams::new(0.5, n.ilog2() - 2, 3);
        p.phase_law = PhaseLaw::Coherent;
        let f = make_lacunary_field(&p, &l).unwrap();
        sweeps.push(lemma_bound_audit(&b, &f, &eps, 1.5, CommutatorOptions::default()).unwrap());
    }
    for s in &sweeps {
        assert!(
            s.rate_fit.slope >= 0.9 && s.rate_fit.slope <= 1.1,
            "slope {}",
            s.rate_fit.slope
        );
        let (lo, hi) = s
            .measured_c
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), c| {
                (lo.min(*c), hi.max(*c))
            });
        assert!(hi / lo <= 5.0, "{:?}", s.measured_c);
        for i in 0..eps.len() {
            assert!(
                s.commutator_lq_norms[i]
                    <= s.measured_c_max * s.lemma_bound_values[i] * (1.0 + 1e-12)
            );
        }
    }
    // The finer lattice reproduces the coarse commutator norms.
    for (a, b) in sweeps[0]
        .commutator_lq_norms
        .iter()
        .zip(&sweeps[1].commutator_lq_norms)
    {
        assert!((a / b - 1.0).abs() < 0.1, "{a} vs {b}");
    }
    let c_ratio = sweeps[0].measured_c_max / sweeps[1].measured_c_max;
    assert!((0.2..=5.0).contains(&c_ratio));
}

#[test]
fn lemma_audit_constant_field_reports_sentinel() {
    let l = Lattice::new(1, 16, 256, 0.25, 1.0).unwrap();
    let f = DiscreteField::from_fn(l, 1, true, |_, o| o[0] = 0.3).unwrap();
    let s = lemma_bound_audit(
        &burgers(),
        &f,
        &[0.125, 0.0625],
        2.0,
        CommutatorOptions::default(),
    )
    .unwrap();
    assert!(s.commutator_lq_norms.iter().all(|v| *v < 1e-14));
    assert!(s.lemma_bound_values.iter().all(|v| *v < 1e-14));
    assert!(s.measured_c.iter().all(|c| c.is_nan()));
    assert!(s.measured_c_max.is_nan());
}

#[test]
fn shock_companion_residual_matches_closed_form() {
    let b = burgers();
    let l = Lattice::new(1, 1024, 1024, 2.0, 1.0).unwrap();
    for (ul, ur) in [(1.0, 0.0), (0.0, 1.0), (2.0, 0.0), (0.5, -0.5)] {
        let s = 0.5 * (ul + ur);
        let f = make_shock_field(&b, &[ul], &[ur], s, &l).unwrap();
        let t = f.lattice.extent_time;
        let tf = aligned(s, 0.5 * t, 0.5 * t);
        let r = weak_residual_companion(&b, &f, &[tf]).unwrap()[0];
        let oracle = -(ul - ur).powi(3) / 12.0;
        assert!(
            (r - oracle).abs() <= 1e-6 * oracle.abs(),
            "{ul}->{ur}: {r} vs {oracle}"
        );
    }
}

#[test]
fn jump_condition_values() {
    let b = burgers();
    let sp = rankine_hugoniot_speed(&b, &[1.0], &[0.0]).unwrap();
    assert_eq!(sp.rows, vec![Some(0.5)]);
    assert!(sp.consistent);
    let c = companion_speed(&b, &[1.0], &[0.0]).unwrap().unwrap();
    assert!((c - 0.5 - 1.0 / 6.0).abs() < 1e-15);
    let d = shock_dissipation_rate(&b, &[1.0], &[0.0]).unwrap();
    assert!((d + 1.0 / 12.0).abs() < 1e-15);
    let e = make_builtin("elastodynamics-1d", &BuiltinParams::default()).unwrap();
    let s = ((1.5f64.powi(3) - 1.2f64.powi(3)) / 0.3).sqrt();
    let v = 0.5 * s * 0.3;
    let sp = rankine_hugoniot_speed(&e, &[1.5, -v], &[1.2, v]).unwrap();
    assert!(sp.consistent);
    assert!((sp.speed.unwrap() - s).abs() < 1e-12);
    // Mismatched states are not a single shock.
    assert!(shock_dissipation_rate(&e, &[1.5, 0.0], &[1.2, 0.0]).is_err());
}

#[test]
fn residual_converges_to_shock_dissipation() {
    let b = burgers();
    let l = Lattice::new(1, 1024, 1024, 2.0, 1.0).unwrap();
    let f = make_shock_field(&b, &[1.0], &[0.0], 0.5, &l).unwrap();
    let tf = aligned(0.5, 1.0, 1.0);
    let eps = dyadic_epsilons(1.0 / 16.0, 4);
    let r = residual_r(&b, &f, &eps, &tf, CommutatorOptions::default()).unwrap();
    let weak = weak_residual_companion(&b, &f, &[tf]).unwrap()[0];
    assert!(
        (r.limit_estimate / weak - 1.0).abs() < 0.05,
        "{} vs {weak}",
        r.limit_estimate
    );
    for i in 0..eps.len() {
        assert!((r.i1[i] + r.i2[i] - r.total[i]).abs() <= 1e-12 * r.total[i].abs());
        let direct = r.mollified_companion_residual[i];
        assert!(
            (r.total[i] / direct - 1.0).abs() < 0.02,
            "{} vs {direct}",
            r.total[i]
        );
    }
    let tail = &r.total[eps.len() - 3..];
    let hi = sup(tail.iter().copied());
    let lo = tail.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    assert!((hi - lo) / hi < 0.1);
}

#[test]
fn affine_system_has_zero_residual() {
    let sys = SystemSpec::builder("transport", 1, 1)
        .flux(|u, o| {
            o[0] = u[0];
            o[1] = 0.7 * u[0];
        })
        .multiplier(|u, o| o[0] = u[0])
        .companion(|u, o| {
            o[0] = 0.5 * u[0] * u[0];
            o[1] = 0.35 * u[0] * u[0];
        })
        .affine(&[0, 1], &[])
        .build()
        .unwrap();
    let l = Lattice::new(1, 64, 256, 1.0, 1.0).unwrap();
    let f = make_lacunary_field(&LacunaryParams::new(0.5, 6, 2), &l).unwrap();
    let tf = TestFunction::TimeBump {
        center: 0.5,
        radius: 0.4,
        amplitude: 1.0,
        normalize: false,
    };
    let r = residual_r(
        &sys,
        &f,
        &[0.125, 0.0625],
        &tf,
        CommutatorOptions::default(),
    )
    .unwrap();
    assert_eq!(r.total, vec![0.0, 0.0]);
}

#[test]
fn residual_is_linear_in_the_test_function() {
    let b = burgers();
    let l = Lattice::new(1, 64, 512, 0.25, 1.0).unwrap();
    let mut p = LacunaryParams::new(0.6, 7, 4);
    p.travel_speed = 1.0 / 0.25;
    let f = make_lacunary_field(&p, &l).unwrap();
    let tf = TestFunction::Bump {
        center: vec![0.125, 0.5],
        radius: vec![0.1, 0.3],
        amplitude: 1.0,
    };
    let eps = [0.0625, 0.03125];
    let one = residual_r(&b, &f, &eps, &tf, CommutatorOptions::default()).unwrap();
    let two = residual_r(&b, &f, &eps, &tf.scaled(2.0), CommutatorOptions::default()).unwrap();
    for i in 0..eps.len() {
        assert!((two.i1[i] - 2.0 * one.i1[i]).abs() <= 1e-12 * one.i1[i].abs().max(1e-300));
        assert!((two.i2[i] - 2.0 * one.i2[i]).abs() <= 1e-12 * one.i2[i].abs().max(1e-300));
    }
}

#[test]
fn extended_system_agrees_with_raw_on_elastodynamics_shock() {
    let e = make_builtin("elastodynamics-1d", &BuiltinParams::default()).unwrap();
    let ext = extend_to_compact_range(&e, &[1.0, -1.0], &[2.0, 1.0], 0.25).unwrap();
    let s = ((1.5f64.powi(3) - 1.2f64.powi(3)) / 0.3).sqrt();
    let v = 0.5 * s * 0.3;
    let l = Lattice::new(1, 512, 512, 0.85, 1.0).unwrap();
    let f = make_shock_field(&e, &[1.5, -v], &[1.2, v], s, &l).unwrap();
    let t = f.lattice.extent_time;
    let tf = aligned(s, 0.5 * t, 0.5 * t);
    let eps = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let raw = residual_r(&e, &f, &eps, &tf, CommutatorOptions::default()).unwrap();
    let extended = residual_r(&ext, &f, &eps, &tf, CommutatorOptions::default()).unwrap();
    for (a, b) in raw.total.iter().zip(&extended.total) {
        assert!((a - b).abs() <= 1e-10 * a.abs());
    }
    let rate = shock_dissipation_rate(&e, &[1.5, -v], &[1.2, v]).unwrap();
    assert!(
        (raw.limit_estimate / rate - 1.0).abs() < 0.05,
        "{} vs {rate}",
        raw.limit_estimate
    );
}

#[test]
fn good_set_complement_scales_with_epsilon() {
    let l = Lattice::new(1, 512, 512, 2.0, 1.0).unwrap();
    let f = make_shock_field(&burgers(), &[1.0], &[0.0], 0.5, &l).unwrap();
    let eps = dyadic_epsilons(1.0 / 8.0, 4);
    let comp: Vec<f64> = eps
        .iter()
        .map(|e| {
            1.0 - good_set_measure(&f, &make_kernel(*e, &l).unwrap(), 0.25, Backend::Auto).unwrap()
        })
        .collect();
    let fit = fit_power_law(&eps, &comp);
    assert!((fit.slope - 1.0).abs() < 0.2, "{comp:?}");

    let l = Lattice::new(1, 16, 2048, 0.125, 1.0).unwrap();
    let f = make_lacunary_field(&LacunaryParams::new(0.5, 9, 1), &l).unwrap();
    let frac: Vec<f64> = dyadic_epsilons(1.0 / 8.0, 5)
        .iter()
        .map(|e| {
            let k = companion_core::mollifier::MollifierKernel::new(
                *e,
                &l,
                companion_core::mollifier::KernelAxes::SpaceOnly,
            )
            .unwrap();
            good_set_measure(&f, &k, 0.3, Backend::Auto).unwrap()
        })
        .collect();
    assert!(
        frac.windows(2).filter(|w| w[1] < w[0] - 1e-12).count() <= 1,
        "{frac:?}"
    );
    assert!(*frac.last().unwrap() > frac[0]);
}

#[test]
fn system_weak_residuals_vanish_under_refinement() {
    let b = burgers();
    let tf = TestFunction::Bump {
        center: vec![1.0, 0.55],
        radius: vec![0.6, 0.3],
        amplitude: 1.0,
    };
    for n in [128usize, 256, 512] {
        for n_time in [n, 3 * n / 2] {
            let l = Lattice::new(1, n_time, n, 2.0, 1.0).unwrap();
            let f = make_shock_field(&b, &[1.0], &[0.0], 0.5, &l).unwrap();
            let r = weak_residual_system(&b, &f, std::slice::from_ref(&tf)).unwrap()[0][0];
            assert!(r.abs() <= l.h_space(), "n {n}: {r}");
        }
    }

    let e = make_builtin("euler-incompressible-2d", &BuiltinParams::default()).unwrap();
    let tf = TestFunction::Bump {
        center: vec![0.5, 0.4, 0.6],
        radius: vec![0.4, 0.3, 0.35],
        amplitude: 1.0,
    };
    let mut hs = Vec::new();
    let mut rs = Vec::new();
    for n in [32usize, 64, 128] {
        let l = Lattice::new(2, 16, n, 1.0, 1.0).unwrap();
        let f = make_shear_field(&LacunaryParams::new(0.5, n.ilog2() - 2, 5), &l).unwrap();
        let r = weak_residual_system(&e, &f, std::slice::from_ref(&tf)).unwrap();
        hs.push(l.h_space());
        rs.push(sup(r[0].iter().copied()));
    }
    assert!(fit_power_law(&hs, &rs).slope > 0.0, "{rs:?}");
    assert!(rs[2] < 1e-6);
}
