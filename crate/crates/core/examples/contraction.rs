//! Wasserstein distance between the calibrated and true forward marginals
//! of one scene, at a few points along the schedule.
//!
//! `cargo run --release --example contraction [seed]`

use adaptive_dsr::commands::scene_contraction;
use adaptive_dsr::pipeline::build_corpus;
use adaptive_dsr::storage::PipelineConfig;

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(0);
    let mut config = PipelineConfig::default();
    config.corpus.scenes = 1;
    let scene = &build_corpus(&config, seed)?[0];
    let rows = scene_contraction(&config, &scene.guide, &scene.degraded, &scene.gt)?;
    println!(
        "{:>5} {:>10} {:>12} {:>12} {:>12} {:>12}",
        "t", "alpha_bar", "exact", "surrogate", "mean", "variance"
    );
    for r in rows.iter().filter(|r| r.t == 1 || r.t % 100 == 0) {
        println!(
            "{:>5} {:>10.5} {:>12.4} {:>12.4} {:>12.4} {:>12.4}",
            r.t, r.alpha_bar, r.w2_exact, r.w2_surrogate, r.mean_term, r.variance_term
        );
    }
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    println!(
        "final/first: exact {:.4}, surrogate {:.4}",
        last.w2_exact / first.w2_exact,
        last.w2_surrogate / first.w2_surrogate
    );
    Ok(())
}
