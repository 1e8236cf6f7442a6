//! Pipeline configuration as TOML. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationConfig;
use crate::degradation::DegradationSpec;
use crate::error::{Error, Result};
use crate::sampling::{MixtureComponent, MixturePrior, ProposalConfig};
use crate::scenegen::SceneSpec;
use crate::schedule::{NoiseSchedule, ScheduleParams};
use crate::selection::{Rule, SelectionConfig, DEFAULT_TAU};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSection {
    pub tau: f64,
    pub rule: Rule,
    /// Lower clamp on ᾱ; the schedule's final ᾱ when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_min: Option<f64>,
}

impl Default for SelectionSection {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            rule: Rule::Simplified,
            alpha_min: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DenoiserConfig {
    /// Shared scalar prior `N(mean, sigma²)` at every pixel.
    Gaussian { mean: f64, sigma: f64 },
    Mixture {
        components: Vec<MixtureComponent>,
        /// Neighbourhood radius for guide-pooled responsibilities; 0 gives
        /// the exact per-pixel posterior.
        #[serde(default)]
        pool_radius: usize,
        #[serde(default = "default_pool_range")]
        pool_range_fraction: f64,
    },
}

fn default_pool_range() -> f64 {
    0.1
}

impl DenoiserConfig {
    pub fn mixture(&self) -> Result<Option<MixturePrior>> {
        match self {
            DenoiserConfig::Mixture { components, .. } => {
                Ok(Some(MixturePrior::new(components.clone())?))
            }
            DenoiserConfig::Gaussian { .. } => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    /// Number of scenes generated by `gen`.
    pub scenes: usize,
    /// Template spec; scene `i` uses a seed derived from the run seed and `i`.
    pub scene: SceneSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub corpus: String,
    pub degraded: String,
    pub output: String,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self {
            corpus: "corpus".into(),
            degraded: "degraded".into(),
            output: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub schedule: ScheduleParams,
    pub selection: SelectionSection,
    pub degradation: DegradationSpec,
    pub denoiser: DenoiserConfig,
    pub proposal: ProposalConfig,
    pub calibration: CalibrationConfig,
    pub corpus: CorpusSection,
    pub paths: PathsSection,
}

/// Depth levels shared by the default corpus and the default mixture prior.
pub const DEFAULT_LEVELS: [f64; 2] = [1.5, 7.5];

/// Default neighbourhood radius of the guided mixture denoiser, pixels.
pub const DEFAULT_POOL_RADIUS: usize = 6;

/// Standard deviation of each default mixture component, meters.
pub const DEFAULT_COMPONENT_SIGMA: f64 = 0.1;

impl Default for PipelineConfig {
    fn default() -> Self {
        let levels = DEFAULT_LEVELS.to_vec();
        let prior =
            MixturePrior::uniform(&levels, DEFAULT_COMPONENT_SIGMA).expect("valid default prior");
        Self {
            seed: 0,
            jobs: 0,
            schedule: ScheduleParams::default(),
            selection: SelectionSection::default(),
            degradation: DegradationSpec::heaviest(0),
            denoiser: DenoiserConfig::Mixture {
                components: prior.components().to_vec(),
                pool_radius: DEFAULT_POOL_RADIUS,
                pool_range_fraction: default_pool_range(),
            },
            proposal: ProposalConfig::default(),
            calibration: CalibrationConfig::default(),
            corpus: CorpusSection {
                scenes: 50,
                scene: SceneSpec::leveled(128, 128, levels, 0),
            },
            paths: PathsSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let schedule = self.schedule.build()?;
        self.selection_config(&schedule)?;
        self.degradation.validate()?;
        self.proposal.validate()?;
        self.calibration.validate()?;
        self.corpus.scene.validate()?;
        match &self.denoiser {
            DenoiserConfig::Gaussian { mean, sigma } => {
                if !mean.is_finite() || !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(Error::invalid(
                        "denoiser",
                        "gaussian prior needs finite mean and sigma >= 0",
                    ));
                }
            }
            DenoiserConfig::Mixture { .. } => {
                self.denoiser.mixture()?;
            }
        }
        Ok(())
    }

    pub fn selection_config(&self, schedule: &NoiseSchedule) -> Result<SelectionConfig> {
        let s = &self.selection;
        SelectionConfig::new(
            s.tau,
            s.alpha_min.unwrap_or(schedule.final_alpha_bar()),
            s.rule,
        )
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Hex SHA-256 of the canonical TOML text, which is also the digest of
    /// the file written by [`save_config`].
    pub fn hash(&self) -> String {
        super::sha256_hex(self.to_toml().as_bytes())
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PipelineConfig::from_toml(&text)
}

pub fn save_config(path: impl AsRef<Path>, config: &PipelineConfig) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, config.to_toml()).map_err(|e| Error::io(path, e))
}
