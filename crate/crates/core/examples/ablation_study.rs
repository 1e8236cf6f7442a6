//! Corpus RMSE of the full pipeline and its three ablated variants, over
//! several seeds.
//!
//! `cargo run --release --example ablation_study [scenes] [seeds]`

use adaptive_dsr::evaluation::aggregate;
use adaptive_dsr::pipeline::{build_corpus, evaluate_corpus, Ablation, Pipeline};
use adaptive_dsr::storage::PipelineConfig;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut config = PipelineConfig::default();
    if let Some(n) = args.next() {
        config.corpus.scenes = n.parse()?;
    }
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let pipeline = Pipeline::from_config(&config)?;
    let hash = config.hash();

    print!("{:>5}", "seed");
    for a in Ablation::ALL {
        print!(" {:>15}", a.name());
    }
    println!();
    for seed in 0..seeds {
        let corpus = build_corpus(&config, seed)?;
        print!("{seed:>5}");
        for a in Ablation::ALL {
            let s = aggregate(&evaluate_corpus(&pipeline, &corpus, seed, a, &hash)?)?;
            print!(" {:>15.4}", s.rmse);
        }
        println!();
    }
    Ok(())
}
