//! Fits the calibration scale on a held-out corpus and reports the
//! resulting ±2σ coverage. The fitted value is what the default config
//! pins as its scale.
//!
//! `cargo run --release --example calibrate_scene [scenes] [seed]`

use adaptive_dsr::calibration::{
    calibrate, calibration_objective, coverage, fit_sigma_scale, scaled_sigma, CalibrationConfig,
    CalibrationSample,
};
use adaptive_dsr::pipeline::build_corpus;
use adaptive_dsr::storage::PipelineConfig;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut config = PipelineConfig::default();
    if let Some(n) = args.next() {
        config.corpus.scenes = n.parse()?;
    }
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1000);

    let corpus = build_corpus(&config, seed)?;
    let cal = CalibrationConfig::default();
    let outputs = corpus
        .iter()
        .map(|s| calibrate(&s.guide, &s.degraded, &cal))
        .collect::<Result<Vec<_>, _>>()?;
    let samples: Vec<_> = corpus
        .iter()
        .zip(&outputs)
        .map(|(s, o)| CalibrationSample {
            z0_hat: &o.z0_hat,
            residual: &o.residual,
            z_gt: &s.gt,
        })
        .collect();
    let c = fit_sigma_scale(&samples)?;
    let (mut cov, mut objective) = (0.0, 0.0);
    for (s, o) in corpus.iter().zip(&outputs) {
        let sigma = scaled_sigma(&o.residual, c);
        cov += coverage(&o.z0_hat, &sigma, &s.gt, 2.0)?;
        objective += calibration_objective(&o.z0_hat, &sigma, &s.gt)?;
    }
    let first = &outputs[0];
    println!("{} scenes, seed {seed}", corpus.len());
    println!(
        "upsampling factor {:.0}, first scene mean raw residual {:.4}",
        first.factor,
        first.residual.mean()
    );
    println!("fitted c = {c:.4}");
    println!("+-2 sigma coverage = {:.3}", cov / corpus.len() as f64);
    println!(
        "mean nll + 0.5 l_d = {:.4}",
        objective / corpus.len() as f64
    );
    Ok(())
}
