//! File-level workflows behind the `adsr` subcommands: corpus generation,
//! degradation, pipeline runs with ablations, diagnostics and τ sweeps.
//! Every function is a pure function of its config (including the seed)
//! and its input files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::calibrate;
use crate::degradation::apply_spec;
use crate::distributions::{
    forward_marginal, h_maximizer, h_objective, wasserstein2_exact, wasserstein2_mean_term,
    wasserstein2_surrogate, TradeoffParams,
};
use crate::error::{Error, Result};
use crate::evaluation::{aggregate, compute_metrics, CorpusSummary, MetricReport};
use crate::field::{DepthField, Grid};
use crate::pipeline::{
    corpus_scene_spec, run_scene, scene_degradation, scene_id, Ablation, Pipeline,
};
use crate::scenegen::generate_scene;
use crate::schedule::NoiseSchedule;
use crate::storage::{
    create_dir, read_pfm, save_config, write_csv, write_json, write_pfm, FileRecord, Manifest,
    ManifestEntry, PipelineConfig,
};

pub const GT_SUFFIX: &str = "gt.pfm";
pub const GUIDE_SUFFIX: &str = "guide.pfm";
pub const LR_SUFFIX: &str = "lr.pfm";
pub const PRED_SUFFIX: &str = "pred.pfm";
pub const CONFIG_FILE: &str = "config.toml";

/// τ values swept when none are given; includes the default 0.14 and a
/// value four times larger.
pub const DEFAULT_TAUS: [f64; 7] = [0.02, 0.06, 0.10, 0.14, 0.16, 0.28, 0.56];

/// Runs `f` on a pool of `jobs` threads (0 = all cores).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn file_name(id: &str, suffix: &str) -> String {
    format!("{id}_{suffix}")
}

fn write_config_copy(dir: &Path, config: &PipelineConfig) -> Result<()> {
    save_config(dir.join(CONFIG_FILE), config)
}

fn copy_file(from: &Path, to: &Path) -> Result<()> {
    std::fs::copy(from, to).map_err(|e| Error::io(from, e))?;
    Ok(())
}

fn read_scene_file(dir: &Path, id: &str, suffix: &str) -> Result<DepthField> {
    let path = dir.join(file_name(id, suffix));
    if !path.exists() {
        return Err(Error::Corpus {
            scene: id.to_string(),
            reason: format!("missing file {}", path.display()),
        });
    }
    read_pfm(&path).map_err(|e| Error::Corpus {
        scene: id.to_string(),
        reason: e.to_string(),
    })
}

/// Guides are stored as depth maps; they must be fully valid.
fn read_guide(dir: &Path, id: &str) -> Result<Grid> {
    let f = read_scene_file(dir, id, GUIDE_SUFFIX)?;
    if !f.is_fully_valid() {
        return Err(Error::Corpus {
            scene: id.to_string(),
            reason: "guide has invalid pixels".into(),
        });
    }
    Grid::new(
        f.width(),
        f.height(),
        f.values().iter().map(|g| g - GUIDE_OFFSET).collect(),
    )
}

/// Guides are written through the depth-map codec, which treats values ≤ 0
/// as invalid, so they are shifted into a strictly positive range.
pub const GUIDE_OFFSET: f64 = 1.0;

fn guide_to_field(guide: &Grid) -> Result<DepthField> {
    DepthField::from_values(
        guide.width(),
        guide.height(),
        guide.data().iter().map(|g| g + GUIDE_OFFSET).collect(),
    )
}

/// Writes `config.corpus.scenes` (gt, guide) pairs and their specs to `dir`.
pub fn cmd_gen(config: &PipelineConfig, dir: &Path) -> Result<Manifest> {
    config.validate()?;
    create_dir(dir)?;
    let seed = config.seed;
    let entries = (0..config.corpus.scenes)
        .into_par_iter()
        .map(|i| {
            let id = scene_id(i);
            let spec = corpus_scene_spec(&config.corpus.scene, seed, &id);
            let scene = generate_scene(&spec)?;
            let gt = file_name(&id, GT_SUFFIX);
            let guide = file_name(&id, GUIDE_SUFFIX);
            let spec_file = format!("{id}_spec.json");
            write_pfm(dir.join(&gt), &scene.gt)?;
            write_pfm(dir.join(&guide), &guide_to_field(&scene.guide)?)?;
            write_json(dir.join(&spec_file), &spec)?;
            Ok(ManifestEntry {
                files: vec![
                    FileRecord::new(dir, gt)?,
                    FileRecord::new(dir, guide)?,
                    FileRecord::new(dir, spec_file)?,
                ],
                id,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_config_copy(dir, config)?;
    let manifest = Manifest {
        kind: "corpus".into(),
        config_hash: config.hash(),
        spec_hash: None,
        entries,
    };
    manifest.save(dir)?;
    Ok(manifest)
}

/// Applies the configured degradation to every ground truth of a corpus.
/// The output directory also receives copies of the gt and guide files, so
/// it is self-contained for `cmd_run`.
pub fn cmd_degrade(config: &PipelineConfig, corpus: &Path, out: &Path) -> Result<Manifest> {
    config.validate()?;
    let input = Manifest::load(corpus)?;
    create_dir(out)?;
    let entries = input
        .entries
        .par_iter()
        .map(|e| {
            let gt = read_scene_file(corpus, &e.id, GT_SUFFIX)?;
            let spec = scene_degradation(&config.degradation, config.seed, &e.id);
            let lr = apply_spec(&gt, &spec)?;
            let (gt_name, guide_name, lr_name) = (
                file_name(&e.id, GT_SUFFIX),
                file_name(&e.id, GUIDE_SUFFIX),
                file_name(&e.id, LR_SUFFIX),
            );
            copy_file(&corpus.join(&gt_name), &out.join(&gt_name))?;
            copy_file(&corpus.join(&guide_name), &out.join(&guide_name))?;
            write_pfm(out.join(&lr_name), &lr)?;
            Ok(ManifestEntry {
                id: e.id.clone(),
                files: vec![
                    FileRecord::new(out, gt_name)?,
                    FileRecord::new(out, guide_name)?,
                    FileRecord::new(out, lr_name)?,
                ],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_config_copy(out, config)?;
    let manifest = Manifest {
        kind: "degraded".into(),
        config_hash: config.hash(),
        spec_hash: Some(config.degradation.digest()),
        entries,
    };
    manifest.save(out)?;
    Ok(manifest)
}

/// One loaded scene of a degraded corpus.
#[derive(Debug, Clone)]
pub struct LoadedScene {
    pub id: String,
    pub guide: Grid,
    pub degraded: DepthField,
    pub gt: DepthField,
}

pub fn load_degraded(dir: &Path) -> Result<Vec<LoadedScene>> {
    let manifest = Manifest::load(dir)?;
    manifest
        .entries
        .par_iter()
        .map(|e| {
            Ok(LoadedScene {
                guide: read_guide(dir, &e.id)?,
                degraded: read_scene_file(dir, &e.id, LR_SUFFIX)?,
                gt: read_scene_file(dir, &e.id, GT_SUFFIX)?,
                id: e.id.clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub ablation: Ablation,
    #[serde(flatten)]
    pub summary: CorpusSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub seed: u64,
    pub tau: f64,
    /// Corpus metrics of the degraded input upsampled with bicubic
    /// interpolation, for reference.
    pub bicubic_input: CorpusSummary,
    pub variants: Vec<VariantSummary>,
}

fn score_scenes(
    pipeline: &Pipeline,
    scenes: &[LoadedScene],
    seed: u64,
    ablation: Ablation,
    config_hash: &str,
) -> Result<Vec<(DepthField, MetricReport)>> {
    scenes
        .par_iter()
        .map(|s| {
            let out = run_scene(pipeline, &s.id, &s.guide, &s.degraded, seed, ablation)?;
            let mut report = compute_metrics(&out.prediction, &s.gt)?;
            report.scene = s.id.clone();
            report.config_hash = config_hash.to_string();
            Ok((out.prediction, report))
        })
        .collect()
}

fn bicubic_baseline(scenes: &[LoadedScene]) -> Result<CorpusSummary> {
    let reports = scenes
        .par_iter()
        .map(|s| {
            let filled = crate::calibration::fill_nearest(&s.degraded)?;
            let up = crate::degradation::bicubic_resize(&filled, s.gt.width(), s.gt.height())?;
            compute_metrics(&up, &s.gt)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(&reports)
}

/// Runs the pipeline on a degraded corpus once per requested variant.
/// Predictions go to `out/<variant>/`, per-scene metrics to
/// `out/metrics_<variant>.csv`, and corpus means to `out/summary.json`.
pub fn cmd_run(
    config: &PipelineConfig,
    input: &Path,
    out: &Path,
    ablations: &[Ablation],
) -> Result<RunSummary> {
    let pipeline = Pipeline::from_config(config)?;
    let scenes = load_degraded(input)?;
    if scenes.is_empty() {
        return Err(Error::Empty("degraded corpus"));
    }
    create_dir(out)?;
    write_config_copy(out, config)?;
    let hash = config.hash();
    let mut variants = Vec::new();
    let mut manifest_entries = Vec::new();
    for &ablation in ablations {
        let results = score_scenes(&pipeline, &scenes, config.seed, ablation, &hash)?;
        let sub = out.join(ablation.name());
        create_dir(&sub)?;
        for (pred, report) in &results {
            let name = format!(
                "{}/{}",
                ablation.name(),
                file_name(&report.scene, PRED_SUFFIX)
            );
            write_pfm(out.join(&name), pred)?;
            manifest_entries.push(ManifestEntry {
                id: format!("{}:{}", ablation.name(), report.scene),
                files: vec![FileRecord::new(out, name)?],
            });
        }
        let reports: Vec<MetricReport> = results.into_iter().map(|(_, r)| r).collect();
        let csv_name = format!("metrics_{}.csv", ablation.name());
        write_csv(out.join(&csv_name), &reports)?;
        manifest_entries.push(ManifestEntry {
            id: format!("{}:metrics", ablation.name()),
            files: vec![FileRecord::new(out, csv_name)?],
        });
        variants.push(VariantSummary {
            ablation,
            summary: aggregate(&reports)?,
        });
    }
    let summary = RunSummary {
        config_hash: hash.clone(),
        seed: config.seed,
        tau: config.selection.tau,
        bicubic_input: bicubic_baseline(&scenes)?,
        variants,
    };
    write_json(out.join("summary.json"), &summary)?;
    Manifest {
        kind: "run".into(),
        config_hash: hash,
        spec_hash: None,
        entries: manifest_entries,
    }
    .save(out)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropRow {
    pub alpha_bar: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropReport {
    pub lambda: f64,
    pub omega: f64,
    pub analytic_maximizer: f64,
    pub grid_maximizer: f64,
    pub gap: f64,
    /// Spacing of the grid around the analytic maximizer.
    pub resolution: f64,
    /// Number of maximal runs where consecutive samples increase.
    pub increasing_regions: usize,
}

/// Samples `H` on `grid` log-spaced points of `[1e-6, 1]` and compares the
/// best grid point with the analytic maximizer.
pub fn verify_prop(lambda: f64, omega: f64, grid: usize) -> Result<(Vec<PropRow>, PropReport)> {
    let params = TradeoffParams::new(lambda, omega)?;
    if grid < 2 {
        return Err(Error::invalid("grid", "needs at least 2 points"));
    }
    let lo = 1e-6f64.ln();
    let rows = (0..grid)
        .map(|i| {
            let a = if i + 1 == grid {
                1.0
            } else {
                (lo * (1.0 - i as f64 / (grid - 1) as f64)).exp()
            };
            Ok(PropRow {
                alpha_bar: a,
                h: h_objective(a, params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rows
        .iter()
        .max_by(|a, b| a.h.total_cmp(&b.h))
        .expect("non-empty grid")
        .alpha_bar;
    let analytic = h_maximizer(params);
    let k = rows
        .partition_point(|r| r.alpha_bar < analytic)
        .min(grid - 1);
    let resolution = if k == 0 {
        rows[1].alpha_bar - rows[0].alpha_bar
    } else {
        rows[k].alpha_bar - rows[k - 1].alpha_bar
    };
    let mut increasing_regions = 0;
    let mut rising = false;
    for w in rows.windows(2) {
        let up = w[1].h > w[0].h;
        if up && !rising {
            increasing_regions += 1;
        }
        rising = up;
    }
    let report = PropReport {
        lambda,
        omega,
        analytic_maximizer: analytic,
        grid_maximizer: best,
        gap: (best - analytic).abs(),
        resolution,
        increasing_regions,
    };
    Ok((rows, report))
}

pub fn cmd_verify_prop(lambda: f64, omega: f64, grid: usize, out: &Path) -> Result<PropReport> {
    let (rows, report) = verify_prop(lambda, omega, grid)?;
    create_dir(out)?;
    write_csv(out.join("h_objective.csv"), &rows)?;
    write_json(out.join("maximizer.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionRow {
    pub t: usize,
    pub alpha_bar: f64,
    pub w2_exact: f64,
    pub w2_surrogate: f64,
    /// `√ᾱ·‖ẑ₀ − z‖`, the mean part of the exact distance.
    pub mean_term: f64,
    /// `√d·|σ̂_t − √(1−ᾱ)|`, the variance part of the exact distance.
    pub variance_term: f64,
}

/// Distances between the calibrated forward marginal `N(√ᾱ ẑ₀, ᾱσ̄₀² + 1 − ᾱ)`
/// and the ground-truth one `N(√ᾱ z, 1 − ᾱ)` at every timestep. The
/// surrogate uses `ω = √(‖ẑ₀ − z‖² + σ̄₀²)`.
pub fn contraction_table(
    z0_hat: &[f64],
    sigma_bar: f64,
    z_gt: &[f64],
    schedule: &NoiseSchedule,
) -> Result<Vec<ContractionRow>> {
    let diff_sq: f64 = z0_hat
        .iter()
        .zip(z_gt)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let omega = (diff_sq + sigma_bar * sigma_bar).sqrt();
    (1..=schedule.len())
        .map(|t| {
            let ab = schedule.alpha_bar(t);
            let p = forward_marginal(z0_hat, sigma_bar, ab)?;
            let q = forward_marginal(z_gt, 0.0, ab)?;
            Ok(ContractionRow {
                t,
                alpha_bar: ab,
                w2_exact: wasserstein2_exact(&p, &q)?,
                w2_surrogate: wasserstein2_surrogate(ab, omega)?,
                mean_term: wasserstein2_mean_term(&p, &q)?,
                variance_term: (p.dim() as f64).sqrt() * (p.sigma() - q.sigma()).abs(),
            })
        })
        .collect()
}

/// Contraction table for one scene, computed from its calibrated estimate
/// over pixels valid in the ground truth.
pub fn scene_contraction(
    config: &PipelineConfig,
    guide: &Grid,
    degraded: &DepthField,
    gt: &DepthField,
) -> Result<Vec<ContractionRow>> {
    let schedule = config.schedule.build()?;
    let cal = calibrate(guide, degraded, &config.calibration)?;
    let (z, g): (Vec<f64>, Vec<f64>) = (0..gt.len())
        .filter(|&i| gt.valid()[i])
        .map(|i| (cal.z0_hat.values()[i], gt.values()[i]))
        .unzip();
    contraction_table(&z, cal.sigma_bar, &g, &schedule)
}

pub fn cmd_contraction(
    config: &PipelineConfig,
    input: &Path,
    scene: &str,
    out: &Path,
) -> Result<PathBuf> {
    config.validate()?;
    let guide = read_guide(input, scene)?;
    let degraded = read_scene_file(input, scene, LR_SUFFIX)?;
    let gt = read_scene_file(input, scene, GT_SUFFIX)?;
    let rows = scene_contraction(config, &guide, &degraded, &gt)?;
    create_dir(out)?;
    let path = out.join(format!("contraction_{scene}.csv"));
    write_csv(&path, &rows)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub rmse: f64,
    pub mae: f64,
    pub delta_105: f64,
    pub mean_timestep: f64,
}

/// Corpus metrics of the full pipeline for each τ, on already loaded scenes.
pub fn sweep_tau(
    config: &PipelineConfig,
    scenes: &[LoadedScene],
    taus: &[f64],
) -> Result<Vec<SweepRow>> {
    if scenes.is_empty() {
        return Err(Error::Empty("degraded corpus"));
    }
    taus.iter()
        .map(|&tau| {
            let mut c = config.clone();
            c.selection.tau = tau;
            let pipeline = Pipeline::from_config(&c)?;
            let hash = c.hash();
            let results = scenes
                .par_iter()
                .map(|s| {
                    let out = run_scene(
                        &pipeline,
                        &s.id,
                        &s.guide,
                        &s.degraded,
                        c.seed,
                        Ablation::None,
                    )?;
                    let report = compute_metrics(&out.prediction, &s.gt)?;
                    let t = out.selection.map_or(0, |sel| sel.timestep);
                    Ok((report, t))
                })
                .collect::<Result<Vec<_>>>()?;
            let mean_timestep =
                results.iter().map(|(_, t)| *t as f64).sum::<f64>() / results.len() as f64;
            let reports: Vec<MetricReport> = results
                .into_iter()
                .map(|(mut r, _)| {
                    r.config_hash = hash.clone();
                    r
                })
                .collect();
            let s = aggregate(&reports)?;
            Ok(SweepRow {
                tau,
                rmse: s.rmse,
                mae: s.mae,
                delta_105: s.delta_105,
                mean_timestep,
            })
        })
        .collect()
}

pub fn cmd_sweep_tau(
    config: &PipelineConfig,
    input: &Path,
    taus: &[f64],
    out: &Path,
) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let scenes = load_degraded(input)?;
    let rows = sweep_tau(config, &scenes, taus)?;
    create_dir(out)?;
    write_csv(out.join("sweep_tau.csv"), &rows)?;
    Ok(rows)
}
