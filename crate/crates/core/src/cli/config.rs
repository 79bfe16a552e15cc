//! Scenario file schema. Every section except `model` is optional and
//! defaults as documented on its field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::design::DesignInputs;
use crate::detection::{DetectorGeometry, VerdictThresholds};
use crate::dynamics::IntegratorOptions;
use crate::ensemble::{DeltaLaw, EnsembleSpec, SamplingMode};
use crate::wavefunction::{ModelKind, PhysicalParams, TwoParticleWaveFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Master seed; the Gibbs ensemble uses it directly, the constrained
    /// ensemble uses `seed + 1`.
    #[serde(default)]
    pub seed: u64,
    pub model: PhysicalParams,
    #[serde(default)]
    pub gibbs: EnsembleConfig,
    #[serde(default)]
    pub constrained: EnsembleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detectors: Option<DetectorGeometry>,
    #[serde(default)]
    pub integrator: IntegratorOptions,
    #[serde(default)]
    pub thresholds: VerdictThresholds,
    /// Output directory; `--out` overrides, default `bohm-ergo-out/<subcommand>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub detect: DetectConfig,
    #[serde(default)]
    pub equivariance: EquivarianceConfig,
    #[serde(default)]
    pub ergodic: ErgodicConfig,
    #[serde(default)]
    pub design: DesignLimits,
}

/// An ensemble without its seed, which is derived from the scenario seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub n: usize,
    pub t0: f64,
    /// Band width for `x1 + x2`; `null` means the slit width `d`.
    pub constraint_width: Option<f64>,
    pub delta_law: DeltaLaw,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            t0: 0.0,
            constraint_width: None,
            delta_law: DeltaLaw::Uniform,
        }
    }
}

impl EnsembleConfig {
    fn spec(&self, mode: SamplingMode, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            mode,
            n: self.n,
            seed,
            constraint_width: self.constraint_width,
            t0: self.t0,
            delta_law: self.delta_law,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub ensemble: SamplingMode,
    /// Members whose full trajectories go into `trajectories.csv`.
    pub record: usize,
    /// End time; `null` integrates to the detector plane.
    pub t_final: Option<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            ensemble: SamplingMode::ConstrainedPairs,
            record: 10,
            t_final: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectConfig {
    /// Ensemble giving `p_time`; `gibbs` reuses the Gibbs runs.
    pub time_ensemble: SamplingMode,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            time_ensemble: SamplingMode::ConstrainedPairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquivarianceConfig {
    pub bins: usize,
    /// Test time; `null` is the nominal arrival time `t0 + L/v`.
    pub t_final: Option<f64>,
}

impl Default for EquivarianceConfig {
    fn default() -> Self {
        Self { bins: 50, t_final: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SystemName {
    #[default]
    Rotation,
    TwoPiece,
    BohmPair,
}

impl SystemName {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "rotation" => Some(Self::Rotation),
            "two_piece" => Some(Self::TwoPiece),
            "bohm_pair" => Some(Self::BohmPair),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErgodicConfig {
    pub system: SystemName,
    /// Steps per time mean; `null` is 10^6 for the circle maps and 20 for `bohm_pair`.
    pub n_steps: Option<usize>,
    pub tol: f64,
    /// Rotation angle of the circle maps; `null` is the golden ratio.
    pub alpha: Option<f64>,
    /// Strobe interval of the `bohm_pair` map.
    pub strobe_dt: f64,
    /// Size of the constrained pool representing the `bohm_pair` measure.
    pub pool: usize,
    /// Launch time of the `bohm_pair` pool.
    pub t0: f64,
    /// Orbits per start group (`bohm_pair`: per side of the axis).
    pub starts_per_side: usize,
    pub witness_samples: usize,
    pub witness_steps: usize,
}

impl Default for ErgodicConfig {
    fn default() -> Self {
        Self {
            system: SystemName::Rotation,
            n_steps: None,
            tol: 1e-3,
            alpha: None,
            strobe_dt: 10.0,
            pool: 200,
            t0: 5.0,
            starts_per_side: 2,
            witness_samples: 20,
            witness_steps: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignLimits {
    pub max_spreading: f64,
    pub max_growth: f64,
    pub fraunhofer_margin: f64,
}

impl Default for DesignLimits {
    fn default() -> Self {
        let d = DesignInputs::new(PhysicalParams::natural());
        Self {
            max_spreading: d.max_spreading,
            max_growth: d.max_growth,
            fraunhofer_margin: d.fraunhofer_margin,
        }
    }
}

impl ScenarioConfig {
    pub fn natural() -> Self {
        Self {
            name: None,
            seed: 0,
            model: PhysicalParams::natural(),
            gibbs: EnsembleConfig::default(),
            constrained: EnsembleConfig::default(),
            detectors: None,
            integrator: IntegratorOptions::default(),
            thresholds: VerdictThresholds::default(),
            out: None,
            simulate: SimulateConfig::default(),
            detect: DetectConfig::default(),
            equivariance: EquivarianceConfig::default(),
            ergodic: ErgodicConfig::default(),
            design: DesignLimits::default(),
        }
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{origin}: field `{path}`: {}", e.inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn gibbs_spec(&self) -> EnsembleSpec {
        self.gibbs.spec(SamplingMode::Gibbs, self.seed)
    }

    pub fn constrained_spec(&self) -> EnsembleSpec {
        self.constrained.spec(SamplingMode::ConstrainedPairs, self.seed.wrapping_add(1))
    }

    pub fn spec(&self, mode: SamplingMode) -> EnsembleSpec {
        match mode {
            SamplingMode::Gibbs => self.gibbs_spec(),
            SamplingMode::ConstrainedPairs => self.constrained_spec(),
        }
    }

    pub fn design_inputs(&self) -> DesignInputs {
        DesignInputs {
            params: self.model.clone(),
            max_spreading: self.design.max_spreading,
            max_growth: self.design.max_growth,
            fraunhofer_margin: self.design.fraunhofer_margin,
        }
    }

    /// Checks every section and names the first offending field.
    pub fn validate(&self) -> Result<TwoParticleWaveFunction, CliError> {
        let model = TwoParticleWaveFunction::build(self.model.clone()).map_err(|e| field("model", e))?;
        self.gibbs_spec().validate(&model).map_err(|e| field("gibbs", e))?;
        self.constrained_spec().validate(&model).map_err(|e| field("constrained", e))?;
        self.integrator.validate().map_err(|e| field("integrator", e))?;
        if let Some(g) = &self.detectors {
            g.validate().map_err(|e| field("detectors", e))?;
        }
        let th = &self.thresholds;
        if !(th.incompatible_sigma > 0.0 && th.agreement_sigma > 0.0 && (0.0..=1.0).contains(&th.max_lost_fraction)) {
            return Err(field("thresholds", "sigmas must be positive and max_lost_fraction in [0, 1]"));
        }
        if let Some(t) = self.simulate.t_final {
            if !(t > self.spec(self.simulate.ensemble).t0) {
                return Err(field("simulate.t_final", format!("{t} must exceed the ensemble t0")));
            }
        }
        if self.equivariance.bins == 0 {
            return Err(field("equivariance.bins", "must be positive"));
        }
        if let Some(t) = self.equivariance.t_final {
            if !(t >= self.gibbs.t0) {
                return Err(field("equivariance.t_final", format!("{t} precedes gibbs.t0")));
            }
        }
        let e = &self.ergodic;
        if !(e.tol > 0.0) || e.n_steps == Some(0) || !(e.strobe_dt > 0.0) || e.pool < 2 || e.starts_per_side == 0 {
            return Err(field(
                "ergodic",
                "tol and strobe_dt must be positive, n_steps and starts_per_side at least 1, pool at least 2",
            ));
        }
        if let Some(a) = e.alpha {
            if !a.is_finite() {
                return Err(field("ergodic.alpha", "must be finite"));
            }
        }
        self.design_inputs().validate().map_err(|e| field("design", e))?;
        Ok(model)
    }
}

fn field(name: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{name}`: {e}"))
}

/// Built-in scenarios; the same files are shipped under `presets/`.
pub const PRESETS: &[(&str, &str)] = &[
    ("natural", include_str!("../../../../presets/natural.json")),
    ("constrained", include_str!("../../../../presets/constrained.json")),
    ("constrained_sameside", include_str!("../../../../presets/constrained_sameside.json")),
    ("mirror", include_str!("../../../../presets/mirror.json")),
    ("full_window", include_str!("../../../../presets/full_window.json")),
    ("gibbs_only", include_str!("../../../../presets/gibbs_only.json")),
    ("electron", include_str!("../../../../presets/electron.json")),
];

pub fn preset(name: &str) -> Result<ScenarioConfig, CliError> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::Config(format!("unknown preset `{name}`; available: {}", names.join(", ")))
    })?;
    ScenarioConfig::from_json(text, &format!("preset {name}"))
}

pub fn parse_model(name: &str) -> Result<ModelKind, CliError> {
    ModelKind::parse(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown model `{name}`; available: double_slit, double_slit_free, asymmetric_slits, plane_wave"
        ))
    })
}

