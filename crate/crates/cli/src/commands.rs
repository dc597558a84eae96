use std::path::Path;

use anyhow::{bail, Context, Result};
use companion_core::commutator::{lemma_bound_audit, residual_r, CommutatorSweep, ResidualReport};
use companion_core::dissipation::{DissipationReport, ShockSummary};
use companion_core::fields::{
    estimate_besov, make_lacunary_field, make_shock_field, BesovEstimate, LacunaryParams, Lattice,
};
use companion_core::mollifier::{verify_estimates, MollifierAudit};
use companion_core::systems::{
    check_compatibility, make_builtin, BoxSampler, BuiltinParams, CompatibilityReport,
    JacobianMethod, SystemSpec,
};
use companion_core::testfn::TestFunction;
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{refine, shock_speed, CommandName, ExperimentConfig, FieldConfig};
use crate::output::{num, Check, Output};

/// Result of one lattice level.
#[derive(Debug, Serialize)]
pub struct Level<T> {
    pub level: u32,
    pub lattice: Lattice,
    pub notes: Vec<String>,
    pub result: T,
}

pub fn run(cfg: &ExperimentConfig, base_dir: &Path, out: &Output) -> Result<Vec<Check>> {
    match cfg.command {
        CommandName::CheckCompanion => check_companion(cfg, out),
        CommandName::Besov => besov(cfg, base_dir, out),
        CommandName::MollifierAudit => mollifier_audit(cfg, base_dir, out),
        CommandName::CommutatorSweep => commutator_sweep(cfg, base_dir, out),
        CommandName::Dissipation => dissipation(cfg, base_dir, out),
        CommandName::OnsagerSuite => onsager_suite(cfg, out),
    }
}

fn optional_system(cfg: &ExperimentConfig) -> Result<Option<SystemSpec>> {
    cfg.system.as_ref().map(|_| cfg.build_system()).transpose()
}

fn q_values(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    if cfg.q.is_empty() {
        return Ok(vec![3.0]);
    }
    if let Some(q) = cfg.q.iter().find(|q| !(**q >= 1.0)) {
        bail!("q: exponents must be at least 1, got {q}");
    }
    Ok(cfg.q.clone())
}

fn rel_close(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol * target.abs()
}

fn check_companion(cfg: &ExperimentConfig, out: &Output) -> Result<Vec<Check>> {
    let cc = &cfg.compatibility;
    let params = cfg
        .system
        .as_ref()
        .map(|s| s.params.clone())
        .unwrap_or_else(BuiltinParams::default);
    let mut reports: Vec<CompatibilityReport> = Vec::new();
    let mut checks = Vec::new();
    let (mut w, _) = out.csv("compatibility")?;
    w.write_record([
        "system",
        "samples",
        "method",
        "max_residual",
        "tolerance",
        "passed",
    ])?;
    for name in cfg.compat_systems() {
        let sys = make_builtin(&name, &params)
            .with_context(|| format!("compatibility.systems: {name}"))?;
        let mut sampler = BoxSampler::for_system(&sys);
        let mut rng = ChaCha8Rng::seed_from_u64(cc.seed);
        let r = check_compatibility(
            &sys,
            &mut sampler,
            &mut rng,
            cc.n_samples,
            cc.fd_step,
            cc.jacobian_mode,
        )?;
        let tol = match r.method {
            JacobianMethod::Analytic => cc.tolerance_analytic,
            JacobianMethod::FiniteDifference => cc.tolerance_fd,
        };
        let ok = r.max_residual <= tol;
        info!("{name}: max residual {:e} ({:?})", r.max_residual, r.method);
        w.write_record([
            name.clone(),
            r.samples.to_string(),
            format!("{:?}", r.method),
            num(r.max_residual),
            num(tol),
            ok.to_string(),
        ])?;
        checks.push(Check::new(
            format!("compatibility/{name}"),
            ok,
            format!("max residual {:e} against {tol:e}", r.max_residual),
        ));
        reports.push(r);
    }
    w.flush()?;
    out.write_json(&reports, &checks)?;
    Ok(checks)
}

fn besov(cfg: &ExperimentConfig, base_dir: &Path, out: &Output) -> Result<Vec<Check>> {
    let sys = optional_system(cfg)?;
    let qs = q_values(cfg)?;
    let mut levels = Vec::new();
    let mut checks = Vec::new();
    let (mut w, _) = out.csv("shifts")?;
    w.write_record(["level", "q", "shift", "diff_norm"])?;
    for level in 0..cfg.levels()? {
        let field = cfg.build_field(sys.as_ref(), level, base_dir)?;
        let mut per_q: Vec<BesovEstimate> = Vec::new();
        for &q in &qs {
            let est = estimate_besov(&field, q, cfg.besov.n_shifts)?;
            info!("level {level} q {q}: fitted alpha {:.4}", est.fitted_alpha);
            for (s, d) in est.shifts.iter().zip(&est.diff_norms) {
                w.write_record([level.to_string(), num(q), num(*s), num(*d)])?;
            }
            if let Some(a) = cfg.expect.alpha {
                let tol = cfg.expect.alpha_tolerance.unwrap_or(0.05);
                checks.push(Check::new(
                    format!("besov/level{level}/q{q}"),
                    (est.fitted_alpha - a).abs() <= tol,
                    format!("fitted {:.4}, expected {a} +- {tol}", est.fitted_alpha),
                ));
            }
            per_q.push(est);
        }
        levels.push(Level {
            level,
            lattice: field.lattice.clone(),
            notes: field.notes.clone(),
            result: per_q,
        });
    }
    w.flush()?;
    out.write_json(&levels, &checks)?;
    Ok(checks)
}

fn mollifier_audit(cfg: &ExperimentConfig, base_dir: &Path, out: &Output) -> Result<Vec<Check>> {
    let sys = optional_system(cfg)?;
    let qs = q_values(cfg)?;
    let eps = cfg.epsilon_values()?;
    let Some(alpha_ref) = cfg.mollifier.alpha_ref.or(cfg.field_alpha()) else {
        bail!("mollifier.alpha_ref: required unless the field is lacunary");
    };
    let mut levels = Vec::new();
    let mut checks = Vec::new();
    let (mut w, _) = out.csv("norms")?;
    w.write_record([
        "level",
        "q",
        "epsilon",
        "gradient_norm",
        "error_norm",
        "translation_norm",
    ])?;
    for level in 0..cfg.levels()? {
        let field = cfg.build_field(sys.as_ref(), level, base_dir)?;
        let mut per_q: Vec<MollifierAudit> = Vec::new();
        for &q in &qs {
            let a = verify_estimates(
                &field,
                q,
                &eps,
                alpha_ref,
                cfg.mollifier.kernel_axes,
                cfg.mollifier.backend,
            )?;
            info!(
                "level {level} q {q}: gradient slope {:.4}, error slope {:.4}",
                a.gradient_fit.slope, a.error_fit.slope
            );
            for i in 0..eps.len() {
                w.write_record([
                    level.to_string(),
                    num(q),
                    num(eps[i]),
                    num(a.gradient_norms[i]),
                    num(a.error_norms[i]),
                    num(a.translation_norms[i]),
                ])?;
            }
            if let Some(alpha) = cfg.expect.alpha {
                let tol = cfg.expect.alpha_tolerance.unwrap_or(0.1);
                checks.push(Check::new(
                    format!("mollifier/level{level}/q{q}/error"),
                    (a.error_fit.slope - alpha).abs() <= tol,
                    format!("slope {:.4}, expected {alpha} +- {tol}", a.error_fit.slope),
                ));
                checks.push(Check::new(
                    format!("mollifier/level{level}/q{q}/gradient"),
                    (a.gradient_fit.slope - (alpha - 1.0)).abs() <= tol,
                    format!(
                        "slope {:.4}, expected {} +- {tol}",
                        a.gradient_fit.slope,
                        alpha - 1.0
                    ),
                ));
            }
            per_q.push(a);
        }
        levels.push(Level {
            level,
            lattice: field.lattice.clone(),
            notes: field.notes.clone(),
            result: per_q,
        });
    }
    w.flush()?;
    out.write_json(&levels, &checks)?;
    Ok(checks)
}

#[derive(Debug, Serialize)]
struct SweepResult {
    lemma: Vec<CommutatorSweep>,
    residuals: Vec<ResidualReport>,
}

fn residual_checks(
    cfg: &ExperimentConfig,
    label: &str,
    r: &ResidualReport,
    checks: &mut Vec<Check>,
) {
    if let Some(m) = cfg.expect.min_residual_slope {
        checks.push(Check::new(
            format!("{label}/slope"),
            r.rate_fit.is_fitted() && r.rate_fit.slope >= m,
            format!("slope {:.4}, expected at least {m}", r.rate_fit.slope),
        ));
    }
    if let Some(v) = cfg.expect.residual_limit {
        let tol = cfg.expect.relative_tolerance.unwrap_or(0.05);
        checks.push(Check::new(
            format!("{label}/limit"),
            rel_close(r.limit_estimate, v, tol),
            format!("limit {:.6}, expected {v} within {tol}", r.limit_estimate),
        ));
    }
}

fn commutator_sweep(cfg: &ExperimentConfig, base_dir: &Path, out: &Output) -> Result<Vec<Check>> {
    let sys = cfg.build_system()?;
    let eps = cfg.epsilon_values()?;
    if cfg.q.is_empty() && cfg.testfns.is_empty() {
        bail!("q, testfns: give at least one exponent or test function");
    }
    if let Some(q) = cfg.q.iter().find(|q| !(**q >= 1.0) || q.is_infinite()) {
        bail!("q: exponents must lie in [1, inf), got {q}");
    }
    let mut levels = Vec::new();
    let mut checks = Vec::new();
    let (mut wl, _) = out.csv("lemma")?;
    wl.write_record([
        "level",
        "q",
        "epsilon",
        "commutator_Lq_norm",
        "mollification_norm",
        "shift_sup_norm",
        "lemma_bound_value",
        "measured_C",
    ])?;
    let (mut wr, _) = out.csv("residual")?;
    wr.write_record([
        "level",
        "testfn",
        "epsilon",
        "I1",
        "I2",
        "total",
        "companion_residual",
    ])?;
    for level in 0..cfg.levels()? {
        let field = cfg.build_field(Some(&sys), level, base_dir)?;
        let mut lemma = Vec::new();
        for &q in &cfg.q {
            let s = lemma_bound_audit(&sys, &field, &eps, q, cfg.commutator)?;
            info!(
                "level {level} q {q}: commutator slope {:.4}",
                s.rate_fit.slope
            );
            for i in 0..eps.len() {
                wl.write_record([
                    level.to_string(),
                    num(q),
                    num(eps[i]),
                    num(s.commutator_lq_norms[i]),
                    num(s.mollification_norms[i]),
                    num(s.shift_sup_norms[i]),
                    num(s.lemma_bound_values[i]),
                    num(s.measured_c[i]),
                ])?;
            }
            lemma.push(s);
        }
        let mut residuals = Vec::new();
        for (t, tf) in cfg.testfns.iter().enumerate() {
            let r = residual_r(&sys, &field, &eps, tf, cfg.commutator)
                .with_context(|| format!("testfns[{t}]"))?;
            info!("level {level} testfn {t}: totals {:?}", r.total);
            for i in 0..eps.len() {
                wr.write_record([
                    level.to_string(),
                    t.to_string(),
                    num(eps[i]),
                    num(r.i1[i]),
                    num(r.i2[i]),
                    num(r.total[i]),
                    num(r.mollified_companion_residual[i]),
                ])?;
            }
            residual_checks(
                cfg,
                &format!("residual/level{level}/testfn{t}"),
                &r,
                &mut checks,
            );
            residuals.push(r);
        }
        levels.push(Level {
            level,
            lattice: field.lattice.clone(),
            notes: field.notes.clone(),
            result: SweepResult { lemma, residuals },
        });
    }
    wl.flush()?;
    wr.flush()?;
    out.write_json(&levels, &checks)?;
    Ok(checks)
}

fn dissipation(cfg: &ExperimentConfig, base_dir: &Path, out: &Output) -> Result<Vec<Check>> {
    let sys = cfg.build_system()?;
    let states = match (&cfg.field, &cfg.dissipation.left, &cfg.dissipation.right) {
        (_, Some(l), Some(r)) => Some((l.clone(), r.clone())),
        (_, Some(_), None) | (_, None, Some(_)) => {
            bail!("dissipation: give both `left` and `right`")
        }
        (Some(FieldConfig::Shock { left, right, .. }), None, None) => {
            Some((left.clone(), right.clone()))
        }
        _ => None,
    };
    let mut checks = Vec::new();
    if cfg.field.is_none() {
        let Some((l, r)) = states else {
            bail!("field: missing, and no shock states given under `dissipation`");
        };
        let summary = ShockSummary::new(&sys, &l, &r)?;
        let (mut w, _) = out.csv("shock")?;
        w.write_record([
            "speed_flux",
            "speed_companion",
            "mismatch",
            "dissipation_rate",
        ])?;
        let speed = summary.rh_speed_flux.iter().flatten().next().copied();
        w.write_record([
            speed.map_or(String::new(), num),
            summary.rh_speed_companion.map_or(String::new(), num),
            summary.mismatch.map_or(String::new(), num),
            summary.shock_dissipation_rate.map_or(String::new(), num),
        ])?;
        w.flush()?;
        checks.push(Check::new(
            "rankine-hugoniot/consistent",
            summary.rh_consistent,
            format!("{:?}", summary.rh_speed_flux),
        ));
        out.write_json(&summary, &checks)?;
        return Ok(checks);
    }
    if cfg.testfns.is_empty() {
        bail!("testfns: at least one test function is required");
    }
    let n_levels = cfg.levels()?;
    let mut levels = Vec::new();
    let (mut w, _) = out.csv("residuals")?;
    for level in 0..n_levels {
        let field = cfg.build_field(Some(&sys), level, base_dir)?;
        let report = DissipationReport::compute(
            &sys,
            &field,
            &cfg.testfns,
            states.as_ref().map(|(l, r)| (l.as_slice(), r.as_slice())),
        )?;
        report.write_csv_rows(&mut w, &level.to_string(), level == 0)?;
        if level + 1 == n_levels {
            let tol = cfg.expect.relative_tolerance.unwrap_or(0.02);
            for (t, p) in report.predicted_companion_residuals().iter().enumerate() {
                if let Some(p) = p {
                    let c = report.companion_weak_residuals[t];
                    checks.push(Check::new(
                        format!("dissipation/testfn{t}"),
                        rel_close(c, *p, tol),
                        format!(
                            "companion residual {c:.6}, shock prediction {p:.6}, tolerance {tol}"
                        ),
                    ));
                }
            }
            if let Some(v) = cfg.expect.residual_limit {
                let tol = cfg.expect.relative_tolerance.unwrap_or(0.02);
                let c = report.companion_weak_residuals[0];
                checks.push(Check::new(
                    "dissipation/expected",
                    rel_close(c, v, tol),
                    format!("companion residual {c:.6}, expected {v} within {tol}"),
                ));
            }
        }
        levels.push(Level {
            level,
            lattice: field.lattice.clone(),
            notes: field.notes.clone(),
            result: report,
        });
    }
    w.flush()?;
    out.write_json(&levels, &checks)?;
    Ok(checks)
}

#[derive(Debug, Serialize)]
pub struct SuiteRow {
    pub label: String,
    pub level: u32,
    pub alpha: Option<f64>,
    /// `3 alpha - 1` for lacunary rows.
    pub threshold: Option<f64>,
    pub slope: f64,
    pub totals: Vec<f64>,
    pub limit_estimate: f64,
    /// Dissipation prediction for the shock row.
    pub expected_limit: Option<f64>,
    pub verdict: String,
}

/// Bump in time centred on the window, constant in space.
fn default_time_bump(l: &Lattice) -> TestFunction {
    TestFunction::TimeBump {
        center: l.origin_time + 0.5 * l.extent_time,
        radius: 0.5 * l.extent_time,
        amplitude: 1.0,
        normalize: true,
    }
}

fn onsager_suite(cfg: &ExperimentConfig, out: &Output) -> Result<Vec<Check>> {
    let Some(suite) = &cfg.suite else {
        bail!("suite: missing");
    };
    let sys = match &cfg.system {
        Some(_) => cfg.build_system()?,
        None => make_builtin("burgers", &BuiltinParams::default())?,
    };
    if sys.n != 1 || sys.k != 1 {
        bail!("system: the suite runs scalar 1D systems");
    }
    if suite.alphas.is_empty() && suite.shock.is_none() {
        bail!("suite: no rows requested");
    }
    let eps = if suite.alphas.is_empty() {
        Vec::new()
    } else {
        cfg.epsilon_values()?
    };
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for level in 0..cfg.levels()? {
        for (i, &alpha) in suite.alphas.iter().enumerate() {
            let lattice = cfg.lattice_at(level)?;
            let mut p = LacunaryParams::new(alpha, suite.n_octaves, suite.seed);
            p.phase_law = suite.phase_law;
            let field =
                make_lacunary_field(&p, &lattice).with_context(|| format!("suite.alphas[{i}]"))?;
            let tf = cfg
                .testfns
                .first()
                .cloned()
                .unwrap_or_else(|| default_time_bump(&field.lattice));
            let r = residual_r(&sys, &field, &eps, &tf, cfg.commutator)
                .with_context(|| format!("suite.alphas[{i}]"))?;
            let threshold = 3.0 * alpha - 1.0;
            let verdict = if threshold <= 0.0 {
                "no decay expected".to_string()
            } else {
                let ok =
                    r.rate_fit.is_fitted() && r.rate_fit.slope >= threshold - suite.slope_tolerance;
                checks.push(Check::new(
                    format!("suite/level{level}/alpha{alpha}"),
                    ok,
                    format!(
                        "slope {:.4} against threshold {threshold:.4} - {}",
                        r.rate_fit.slope, suite.slope_tolerance
                    ),
                ));
                if ok { "pass" } else { "fail" }.to_string()
            };
            info!("alpha {alpha}: slope {:.4} ({verdict})", r.rate_fit.slope);
            rows.push(SuiteRow {
                label: format!("lacunary alpha={alpha}"),
                level,
                alpha: Some(alpha),
                threshold: Some(threshold),
                slope: r.rate_fit.slope,
                totals: r.total,
                limit_estimate: r.limit_estimate,
                expected_limit: None,
                verdict,
            });
        }
        if let Some(sh) = &suite.shock {
            let speed = shock_speed(&sys, &sh.left, &sh.right).context("suite.shock")?;
            let lattice = refine(&sh.lattice, level)?;
            let field = make_shock_field(&sys, &sh.left, &sh.right, speed, &lattice)
                .context("suite.shock")?;
            let l = &field.lattice;
            let half = 0.5 * l.extent_space;
            let tf = TestFunction::ShockAligned {
                t_center: l.origin_time + 0.5 * l.extent_time,
                t_radius: 0.5 * l.extent_time,
                speed,
                x0: half,
                half_width: 0.3 * half,
                ramp: 0.3 * half,
                amplitude: 1.0,
                normalize: true,
            };
            let eps = sh.epsilons.values().context("suite.shock.epsilons")?;
            let r = residual_r(&sys, &field, &eps, &tf, cfg.commutator).context("suite.shock")?;
            let rate = ShockSummary::new(&sys, &sh.left, &sh.right)?
                .shock_dissipation_rate
                .unwrap_or(f64::NAN);
            let expected = rate * tf.path_time_integral().unwrap_or(1.0);
            let tail = &r.total[r.total.len().saturating_sub(3)..];
            let (lo, hi) = tail.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
                (lo.min(v.abs()), hi.max(v.abs()))
            });
            let plateau = hi > 0.0 && (hi - lo) / hi < sh.plateau_tolerance;
            let limit_ok = rel_close(r.limit_estimate, expected, sh.limit_tolerance);
            checks.push(Check::new(
                format!("suite/level{level}/shock-plateau"),
                plateau,
                format!("last three |totals| span [{lo:.6}, {hi:.6}]"),
            ));
            checks.push(Check::new(
                format!("suite/level{level}/shock-limit"),
                limit_ok,
                format!(
                    "limit {:.6}, dissipation prediction {expected:.6}",
                    r.limit_estimate
                ),
            ));
            rows.push(SuiteRow {
                label: "shock".into(),
                level,
                alpha: None,
                threshold: None,
                slope: r.rate_fit.slope,
                totals: r.total,
                limit_estimate: r.limit_estimate,
                expected_limit: Some(expected),
                verdict: if plateau && limit_ok { "pass" } else { "fail" }.into(),
            });
        }
    }
    let (mut w, _) = out.csv("summary")?;
    w.write_record([
        "label",
        "level",
        "alpha",
        "threshold",
        "slope",
        "limit_estimate",
        "expected_limit",
        "verdict",
    ])?;
    for r in &rows {
        w.write_record([
            r.label.clone(),
            r.level.to_string(),
            r.alpha.map_or(String::new(), num),
            r.threshold.map_or(String::new(), num),
            num(r.slope),
            num(r.limit_estimate),
            r.expected_limit.map_or(String::new(), num),
            r.verdict.clone(),
        ])?;
    }
    w.flush()?;
    out.write_json(&rows, &checks)?;
    Ok(checks)
}
