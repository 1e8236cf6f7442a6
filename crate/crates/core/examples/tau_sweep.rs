//! Corpus metrics of the full pipeline as the selection threshold varies.
//!
//! `cargo run --release --example tau_sweep [scenes]`

use adaptive_dsr::commands::{sweep_tau, LoadedScene, DEFAULT_TAUS};
use adaptive_dsr::pipeline::build_corpus;
use adaptive_dsr::storage::PipelineConfig;

fn main() -> anyhow::Result<()> {
    let mut config = PipelineConfig::default();
    if let Some(n) = std::env::args().nth(1) {
        config.corpus.scenes = n.parse()?;
    }
    let scenes: Vec<LoadedScene> = build_corpus(&config, config.seed)?
        .into_iter()
        .map(|s| LoadedScene {
            id: s.id,
            guide: s.guide,
            degraded: s.degraded,
            gt: s.gt,
        })
        .collect();
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>8}",
        "tau", "rmse", "mae", "delta1.05", "mean t"
    );
    for r in sweep_tau(&config, &scenes, &DEFAULT_TAUS)? {
        println!(
            "{:>6.2} {:>10.4} {:>10.4} {:>10.3} {:>8.0}",
            r.tau, r.rmse, r.mae, r.delta_105, r.mean_timestep
        );
    }
    Ok(())
}
