use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use companion_core::commutator::CommutatorOptions;
use companion_core::fields::{
    make_lacunary_field, make_shear_field, make_shock_field, DiscreteField, LacunaryParams,
    Lattice, PhaseLaw,
};
use companion_core::mollifier::{dyadic_epsilons, Backend, KernelAxes};
use companion_core::systems::{
    extend_to_compact_range, make_builtin, BuiltinParams, JacobianMode, SystemSpec, BUILTIN_NAMES,
    DEFAULT_FD_STEP,
};
use companion_core::testfn::TestFunction;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    CheckCompanion,
    Besov,
    MollifierAudit,
    CommutatorSweep,
    Dissipation,
    OnsagerSuite,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::CheckCompanion => "check-companion",
            CommandName::Besov => "besov",
            CommandName::MollifierAudit => "mollifier-audit",
            CommandName::CommutatorSweep => "commutator-sweep",
            CommandName::Dissipation => "dissipation",
            CommandName::OnsagerSuite => "onsager-suite",
        }
    }
}

fn one_level() -> u32 {
    1
}

/// One experiment, read from a single JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandName,
    #[serde(default)]
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub field: Option<FieldConfig>,
    #[serde(default)]
    pub lattice: Option<Lattice>,
    #[serde(default)]
    pub epsilons: Option<EpsilonSweep>,
    /// Integrability exponents.
    #[serde(default)]
    pub q: Vec<f64>,
    #[serde(default)]
    pub testfns: Vec<TestFunction>,
    /// Number of lattice levels; level `j` doubles every count `j` times.
    #[serde(default = "one_level")]
    pub refinement_levels: u32,
    /// Stem of the output files; defaults to the command name.
    #[serde(default)]
    pub output_name: Option<String>,
    #[serde(default)]
    pub commutator: CommutatorOptions,
    #[serde(default)]
    pub compatibility: CompatibilityConfig,
    #[serde(default)]
    pub besov: BesovConfig,
    #[serde(default)]
    pub mollifier: MollifierConfig,
    #[serde(default)]
    pub dissipation: DissipationConfig,
    #[serde(default)]
    pub suite: Option<SuiteConfig>,
    #[serde(default)]
    pub expect: Expectations,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    #[serde(default)]
    pub params: BuiltinParams,
    #[serde(default)]
    pub extend: Option<ExtendConfig>,
}

/// Box `[lo, hi]` containing the field range and the cutoff width.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    Shock {
        left: Vec<f64>,
        right: Vec<f64>,
        /// Flux jump speed when omitted.
        #[serde(default)]
        speed: Option<f64>,
    },
    Lacunary(LacunaryParams),
    Shear(LacunaryParams),
    Constant {
        state: Vec<f64>,
    },
    /// Binary field file, relative to the config file.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EpsilonSweep {
    Values(Vec<f64>),
    /// `max, max/2, ..` with `levels` entries.
    Dyadic {
        max: f64,
        levels: usize,
    },
}

impl EpsilonSweep {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            EpsilonSweep::Values(v) => v.clone(),
            EpsilonSweep::Dyadic { max, levels } => dyadic_epsilons(*max, *levels),
        };
        if v.is_empty() {
            bail!("epsilons: sweep is empty");
        }
        if let Some(e) = v.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            bail!("epsilons: entries must be positive and finite, got {e}");
        }
        Ok(v)
    }
}

fn n_samples_default() -> usize {
    1000
}

fn fd_step_default() -> f64 {
    DEFAULT_FD_STEP
}

fn analytic_tol() -> f64 {
    1e-6
}

fn fd_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompatibilityConfig {
    /// Built-in systems to check; all of them when empty.
    #[serde(default)]
    pub systems: Vec<String>,
    #[serde(default = "n_samples_default")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "fd_step_default")]
    pub fd_step: f64,
    #[serde(default = "jacobian_auto")]
    pub jacobian_mode: JacobianMode,
    #[serde(default = "analytic_tol")]
    pub tolerance_analytic: f64,
    #[serde(default = "fd_tol")]
    pub tolerance_fd: f64,
}

fn jacobian_auto() -> JacobianMode {
    JacobianMode::Auto
}

impl Default for CompatibilityConfig {
    fn default() -> Self {
        CompatibilityConfig {
            systems: Vec::new(),
            n_samples: n_samples_default(),
            seed: 0,
            fd_step: DEFAULT_FD_STEP,
            jacobian_mode: JacobianMode::Auto,
            tolerance_analytic: analytic_tol(),
            tolerance_fd: fd_tol(),
        }
    }
}

fn n_shifts_default() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovConfig {
    #[serde(default = "n_shifts_default")]
    pub n_shifts: usize,
}

impl Default for BesovConfig {
    fn default() -> Self {
        BesovConfig {
            n_shifts: n_shifts_default(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierConfig {
    /// Reference exponent for the constants; the lacunary alpha by default.
    #[serde(default)]
    pub alpha_ref: Option<f64>,
    #[serde(default)]
    pub kernel_axes: KernelAxes,
    #[serde(default)]
    pub backend: Backend,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationConfig {
    /// Shock states for the jump conditions when the field is not a shock.
    #[serde(default)]
    pub left: Option<Vec<f64>>,
    #[serde(default)]
    pub right: Option<Vec<f64>>,
}

fn slope_tol() -> f64 {
    0.15
}

fn limit_tol() -> f64 {
    0.05
}

fn plateau_tol() -> f64 {
    0.10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub alphas: Vec<f64>,
    pub n_octaves: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub phase_law: PhaseLaw,
    #[serde(default = "slope_tol")]
    pub slope_tolerance: f64,
    #[serde(default)]
    pub shock: Option<SuiteShock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteShock {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub lattice: Lattice,
    pub epsilons: EpsilonSweep,
    #[serde(default = "limit_tol")]
    pub limit_tolerance: f64,
    #[serde(default = "plateau_tol")]
    pub plateau_tolerance: f64,
}

/// Quantitative expectations; a run that misses one exits with status 2.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    /// Besov exponent, or the reference exponent of a mollifier audit.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub alpha_tolerance: Option<f64>,
    /// Lower bound on the decay slope of the residual totals.
    #[serde(default)]
    pub min_residual_slope: Option<f64>,
    /// Value of the residual limit or of the companion weak residual.
    #[serde(default)]
    pub residual_limit: Option<f64>,
    /// Relative tolerance for `residual_limit` and shock predictions.
    #[serde(default)]
    pub relative_tolerance: Option<f64>,
}

/// Parse with the JSON path of the first offending field in the message.
pub fn parse(text: &str) -> Result<(ExperimentConfig, serde_json::Value)> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("config error at `{path}`: {}", e.into_inner())
    })?;
    let value: serde_json::Value = serde_json::from_str(text)?;
    Ok((cfg, value))
}

pub fn load(path: &Path) -> Result<(ExperimentConfig, serde_json::Value)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse(&text)
}

impl ExperimentConfig {
    pub fn build_system(&self) -> Result<SystemSpec> {
        let Some(sc) = &self.system else {
            bail!("system: missing");
        };
        let base = make_builtin(&sc.name, &sc.params).context("system")?;
        match &sc.extend {
            None => Ok(base),
            Some(e) => {
                extend_to_compact_range(&base, &e.lo, &e.hi, e.delta).context("system.extend")
            }
        }
    }

    /// Base lattice refined `level` times.
    pub fn lattice_at(&self, level: u32) -> Result<Lattice> {
        let Some(l) = &self.lattice else {
            bail!("lattice: missing");
        };
        refine(l, level)
    }

    pub fn epsilon_values(&self) -> Result<Vec<f64>> {
        match &self.epsilons {
            None => bail!("epsilons: missing"),
            Some(e) => e.values(),
        }
    }

    pub fn levels(&self) -> Result<u32> {
        if self.refinement_levels == 0 || self.refinement_levels > 4 {
            bail!("refinement_levels: must lie in 1..=4");
        }
        if self.refinement_levels > 1 && matches!(self.field, Some(FieldConfig::File { .. })) {
            bail!("refinement_levels: fields read from files cannot be refined");
        }
        Ok(self.refinement_levels)
    }

    /// Field at refinement `level`. `system` provides shock states and
    /// speeds; `base_dir` resolves file paths.
    pub fn build_field(
        &self,
        system: Option<&SystemSpec>,
        level: u32,
        base_dir: &Path,
    ) -> Result<DiscreteField> {
        let Some(fc) = &self.field else {
            bail!("field: missing");
        };
        let field = match fc {
            FieldConfig::File { path } => {
                DiscreteField::load(&base_dir.join(path)).context("field.file")?
            }
            FieldConfig::Shock { left, right, speed } => {
                let Some(sys) = system else {
                    bail!("field.shock: needs a system");
                };
                let s = match speed {
                    Some(s) => *s,
                    None => shock_speed(sys, left, right)?,
                };
                make_shock_field(sys, left, right, s, &self.lattice_at(level)?)
                    .context("field.shock")?
            }
            FieldConfig::Lacunary(p) => {
                make_lacunary_field(p, &self.lattice_at(level)?).context("field.lacunary")?
            }
            FieldConfig::Shear(p) => {
                make_shear_field(p, &self.lattice_at(level)?).context("field.shear")?
            }
            FieldConfig::Constant { state } => {
                let s = state.clone();
                DiscreteField::from_fn(self.lattice_at(level)?, s.len(), true, move |_, o| {
                    o.copy_from_slice(&s)
                })
                .context("field.constant")?
            }
        };
        Ok(field)
    }

    /// Alpha of a generated lacunary or shear field.
    pub fn field_alpha(&self) -> Option<f64> {
        match &self.field {
            Some(FieldConfig::Lacunary(p)) | Some(FieldConfig::Shear(p)) => Some(p.alpha),
            _ => None,
        }
    }

    /// Names of the systems for check-companion.
    pub fn compat_systems(&self) -> Vec<String> {
        if self.compatibility.systems.is_empty() {
            BUILTIN_NAMES.iter().map(|s| s.to_string()).collect()
        } else {
            self.compatibility.systems.clone()
        }
    }
}

pub fn refine(l: &Lattice, level: u32) -> Result<Lattice> {
    let f = 1usize << level;
    let out = Lattice {
        n_time: l.n_time * f,
        n_space: l.n_space * f,
        ..l.clone()
    };
    out.validate().context("lattice")?;
    Ok(out)
}

/// Common flux jump speed of a shock.
pub fn shock_speed(sys: &SystemSpec, left: &[f64], right: &[f64]) -> Result<f64> {
    let sp = companion_core::dissipation::rankine_hugoniot_speed(sys, left, right)?;
    match sp.speed {
        Some(s) => Ok(s),
        None => bail!("shock states have no common flux speed: {:?}", sp.rows),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_field_path_is_reported() {
        let err = parse(r#"{"command": "besov", "lattice": {"k": 1, "n_time": 8, "n_space": 8, "extent_time": 1, "extent_space": 1, "bogus": 1}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("lattice"), "{err}");
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn dyadic_sweep_expands() {
        let (cfg, _) =
            parse(r#"{"command": "besov", "epsilons": {"dyadic": {"max": 0.5, "levels": 3}}}"#)
                .unwrap();
        assert_eq!(cfg.epsilon_values().unwrap(), vec![0.5, 0.25, 0.125]);
    }

    #[test]
    fn empty_sweep_is_an_error() {
        let (cfg, _) =
            parse(r#"{"command": "commutator-sweep", "epsilons": {"values": []}}"#).unwrap();
        assert!(cfg.epsilon_values().is_err());
    }
}
