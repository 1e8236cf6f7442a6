//! Per-scene pipeline: calibrate, select a timestep, inject noise, denoise,
//! decode, and score. Also builds in-memory corpora from a config so the
//! same scenes can be produced with or without touching the filesystem.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate, CalibrationConfig, CalibrationOutput};
use crate::degradation::{apply_spec, DegradationSpec};
use crate::error::{Error, Result};
use crate::evaluation::{compute_metrics, MetricReport};
use crate::field::{DepthField, Grid};
use crate::rng::{derive_seed, tag_of, CounterRng, Stream};
use crate::sampling::{
    gaussian_noise, inject_noise, mean_and_noise_scales, noise_proposal, Denoiser, GaussianPrior,
    GuidedMixturePrior, IdentityCodec, LatentCodec, NoisyLatent, ProposalConfig,
};
use crate::scenegen::{generate_scene, SceneSpec};
use crate::schedule::NoiseSchedule;
use crate::selection::{select_timestep, Selection, SelectionConfig};
use crate::storage::config::{DenoiserConfig, PipelineConfig};

/// Pipeline variants compared in the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    None,
    /// Timestep drawn uniformly from the schedule instead of selected.
    RandomT,
    /// Plain Gaussian noise instead of the guide-conditioned proposal.
    GaussianNoise,
    /// Calibration output reported directly.
    NoDiffusion,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::None,
        Ablation::RandomT,
        Ablation::GaussianNoise,
        Ablation::NoDiffusion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::None => "none",
            Ablation::RandomT => "random-t",
            Ablation::GaussianNoise => "gaussian-noise",
            Ablation::NoDiffusion => "no-diffusion",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown ablation `{s}`")))
    }
}

/// Shared scalar Gaussian prior applied independently at every pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarGaussianPrior {
    pub mean: f64,
    pub sigma: f64,
}

impl Denoiser for ScalarGaussianPrior {
    fn denoise(&self, guide: &Grid, noisy: &NoisyLatent) -> Result<Vec<f64>> {
        GaussianPrior::new(vec![self.mean; noisy.values.len()], self.sigma)?.denoise(guide, noisy)
    }
}

pub fn build_denoiser(config: &DenoiserConfig) -> Result<Box<dyn Denoiser>> {
    Ok(match config {
        DenoiserConfig::Gaussian { mean, sigma } => {
            GaussianPrior::new(vec![*mean], *sigma)?;
            Box::new(ScalarGaussianPrior {
                mean: *mean,
                sigma: *sigma,
            })
        }
        DenoiserConfig::Mixture {
            pool_radius,
            pool_range_fraction,
            ..
        } => {
            let prior = config.mixture()?.expect("mixture config");
            if *pool_radius == 0 {
                Box::new(prior)
            } else {
                Box::new(GuidedMixturePrior::new(
                    prior,
                    *pool_radius,
                    *pool_range_fraction,
                )?)
            }
        }
    })
}

/// Everything needed to process one scene.
pub struct Pipeline {
    pub schedule: NoiseSchedule,
    pub selection: SelectionConfig,
    pub calibration: CalibrationConfig,
    pub proposal: ProposalConfig,
    pub denoiser: Box<dyn Denoiser>,
    pub codec: Box<dyn LatentCodec>,
}

impl Pipeline {
    pub fn from_config(config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        let schedule = config.schedule.build()?;
        let selection = config.selection_config(&schedule)?;
        Ok(Self {
            schedule,
            selection,
            calibration: config.calibration,
            proposal: config.proposal,
            denoiser: build_denoiser(&config.denoiser)?,
            codec: Box::new(IdentityCodec),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SceneOutcome {
    pub prediction: DepthField,
    pub calibration: CalibrationOutput,
    /// Absent for the calibration-only variant.
    pub selection: Option<Selection>,
}

/// Seed for one scene's stochastic steps within a run.
pub fn scene_seed(run_seed: u64, scene_id: &str) -> u64 {
    derive_seed(run_seed, tag_of(scene_id))
}

/// Uniform timestep in `1..=T`.
pub fn random_selection(schedule: &NoiseSchedule, seed: u64) -> Selection {
    let t = CounterRng::new(seed, Stream::RandomTimestep).range_at(0, 1, schedule.len());
    Selection {
        target_alpha: schedule.alpha_bar(t),
        timestep: t,
        alpha_bar: schedule.alpha_bar(t),
    }
}

pub fn run_scene(
    pipeline: &Pipeline,
    scene_id: &str,
    guide: &Grid,
    d_in: &DepthField,
    run_seed: u64,
    ablation: Ablation,
) -> Result<SceneOutcome> {
    let calibration = calibrate(guide, d_in, &pipeline.calibration)?;
    if ablation == Ablation::NoDiffusion {
        return Ok(SceneOutcome {
            prediction: calibration.z0_hat.clone(),
            calibration,
            selection: None,
        });
    }
    let seed = scene_seed(run_seed, scene_id);
    let selection = match ablation {
        Ablation::RandomT => random_selection(&pipeline.schedule, seed),
        _ => select_timestep(
            calibration.sigma_bar,
            &pipeline.selection,
            &pipeline.schedule,
        )?,
    };
    let (w, h) = (guide.width(), guide.height());
    let z0 = pipeline.codec.encode(&calibration.z0_hat);
    let scales = mean_and_noise_scales(&z0, calibration.sigma0_map.data(), selection.alpha_bar)?;
    let eps = match ablation {
        Ablation::GaussianNoise => gaussian_noise(w * h, seed),
        _ => noise_proposal(guide, &scales, &pipeline.proposal, seed)?,
    };
    let noisy = inject_noise(w, h, scales, &eps, &selection)?;
    let z = pipeline.denoiser.denoise(guide, &noisy)?;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("denoised latent"));
    }
    let prediction = pipeline.codec.decode(&z, w, h)?;
    Ok(SceneOutcome {
        prediction,
        calibration,
        selection: Some(selection),
    })
}

/// One scene of an in-memory corpus.
#[derive(Debug, Clone)]
pub struct CorpusScene {
    pub id: String,
    pub spec: SceneSpec,
    pub gt: DepthField,
    pub guide: Grid,
    pub degraded: DepthField,
}

pub fn scene_id(index: usize) -> String {
    format!("scene_{index:04}")
}

/// Scene spec for corpus entry `id`: the template with a seed derived from
/// the run seed and the id.
pub fn corpus_scene_spec(template: &SceneSpec, run_seed: u64, id: &str) -> SceneSpec {
    template.with_seed(derive_seed(
        derive_seed(run_seed, template.seed),
        tag_of(id),
    ))
}

/// Degradation spec for corpus entry `id`, seeded the same way.
pub fn scene_degradation(spec: &DegradationSpec, run_seed: u64, id: &str) -> DegradationSpec {
    DegradationSpec {
        seed: derive_seed(derive_seed(run_seed, spec.seed), tag_of(id)),
        ..spec.clone()
    }
}

/// Generates and degrades `config.corpus.scenes` scenes in parallel.
pub fn build_corpus(config: &PipelineConfig, run_seed: u64) -> Result<Vec<CorpusScene>> {
    (0..config.corpus.scenes)
        .into_par_iter()
        .map(|i| {
            let id = scene_id(i);
            let spec = corpus_scene_spec(&config.corpus.scene, run_seed, &id);
            let scene = generate_scene(&spec)?;
            let degraded = apply_spec(
                &scene.gt,
                &scene_degradation(&config.degradation, run_seed, &id),
            )?;
            Ok(CorpusScene {
                id,
                spec,
                gt: scene.gt,
                guide: scene.guide,
                degraded,
            })
        })
        .collect()
}

/// Runs every scene and scores it against ground truth, in corpus order.
pub fn evaluate_corpus(
    pipeline: &Pipeline,
    corpus: &[CorpusScene],
    run_seed: u64,
    ablation: Ablation,
    config_hash: &str,
) -> Result<Vec<MetricReport>> {
    corpus
        .par_iter()
        .map(|s| {
            let out = run_scene(pipeline, &s.id, &s.guide, &s.degraded, run_seed, ablation)?;
            let mut report = compute_metrics(&out.prediction, &s.gt)?;
            report.scene = s.id.clone();
            report.config_hash = config_hash.to_string();
            Ok(report)
        })
        .collect()
}
