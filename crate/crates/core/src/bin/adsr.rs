use std::path::PathBuf;
use std::process::ExitCode;

use adaptive_dsr::commands::{self, DEFAULT_TAUS};
use adaptive_dsr::pipeline::Ablation;
use adaptive_dsr::selection::Rule;
use adaptive_dsr::storage::{load_config, PipelineConfig};
use adaptive_dsr::Error;
use anyhow::Context;
use clap::{Parser, Subcommand};

/// Adaptive diffusion sampling for guided depth super-resolution.
#[derive(Parser)]
#[command(name = "adsr", version)]
struct Cli {
    /// TOML pipeline config; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long = "alpha-min", global = true)]
    alpha_min: Option<f64>,
    #[arg(long, global = true, value_parser = parse_rule)]
    rule: Option<Rule>,
    /// Pipeline variants to run; repeat or comma-separate.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_ablation)]
    ablation: Vec<Ablation>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus of (gt, guide) pairs.
    Gen {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        scenes: Option<usize>,
    },
    /// Apply the configured degradation to a corpus.
    Degrade {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the pipeline on a degraded corpus and score it.
    Run {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample H on a grid and compare its maximizer with the closed form.
    VerifyProp {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 2.0)]
        omega: f64,
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
        #[arg(long, default_value = "prop")]
        out: PathBuf,
    },
    /// Exact and surrogate Wasserstein distances across the schedule for one scene.
    Contraction {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corpus metrics for a list of τ values.
    SweepTau {
        #[arg(long, value_delimiter = ',')]
        taus: Vec<f64>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_rule(s: &str) -> Result<Rule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_ablation(s: &str) -> Result<Ablation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn effective_config(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs;
    }
    if let Some(tau) = cli.tau {
        config.selection.tau = tau;
    }
    if let Some(a) = cli.alpha_min {
        config.selection.alpha_min = Some(a);
    }
    if let Some(rule) = cli.rule {
        config.selection.rule = rule;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut config = effective_config(&cli)?;
    let paths = config.paths.clone();
    let ablations = if cli.ablation.is_empty() {
        vec![Ablation::None]
    } else {
        cli.ablation.clone()
    };
    let or = |p: &Option<PathBuf>, d: &str| p.clone().unwrap_or_else(|| PathBuf::from(d));
    let jobs = config.jobs;
    match &cli.command {
        Command::Gen { out, scenes } => {
            if let Some(n) = scenes {
                config.corpus.scenes = *n;
            }
            let dir = or(out, &paths.corpus);
            let m = commands::with_jobs(jobs, || commands::cmd_gen(&config, &dir))??;
            println!("wrote {} scenes to {}", m.entries.len(), dir.display());
        }
        Command::Degrade { corpus, out } => {
            let (src, dst) = (or(corpus, &paths.corpus), or(out, &paths.degraded));
            let m = commands::with_jobs(jobs, || commands::cmd_degrade(&config, &src, &dst))??;
            println!(
                "degraded {} scenes into {} (spec {})",
                m.entries.len(),
                dst.display(),
                m.spec_hash.unwrap_or_default()
            );
        }
        Command::Run { input, out } => {
            let (src, dst) = (or(input, &paths.degraded), or(out, &paths.output));
            let s =
                commands::with_jobs(jobs, || commands::cmd_run(&config, &src, &dst, &ablations))??;
            println!(
                "{:<16} {:>10} {:>10} {:>10}",
                "variant", "rmse", "mae", "delta1.05"
            );
            println!(
                "{:<16} {:>10.5} {:>10.5} {:>10.4}",
                "bicubic-input",
                s.bicubic_input.rmse,
                s.bicubic_input.mae,
                s.bicubic_input.delta_105
            );
            for v in &s.variants {
                println!(
                    "{:<16} {:>10.5} {:>10.5} {:>10.4}",
                    v.ablation.name(),
                    v.summary.rmse,
                    v.summary.mae,
                    v.summary.delta_105
                );
            }
        }
        Command::VerifyProp {
            lambda,
            omega,
            grid,
            out,
        } => {
            let r = commands::cmd_verify_prop(*lambda, *omega, *grid, out)?;
            println!(
                "analytic {:.9} grid {:.9} gap {:.3e} (resolution {:.3e}), increasing regions {}",
                r.analytic_maximizer, r.grid_maximizer, r.gap, r.resolution, r.increasing_regions
            );
        }
        Command::Contraction { scene, input, out } => {
            let (src, dst) = (or(input, &paths.degraded), or(out, &paths.output));
            let path = commands::cmd_contraction(&config, &src, scene, &dst)?;
            println!("wrote {}", path.display());
        }
        Command::SweepTau { taus, input, out } => {
            let taus = if taus.is_empty() {
                DEFAULT_TAUS.to_vec()
            } else {
                taus.clone()
            };
            let (src, dst) = (or(input, &paths.degraded), or(out, &paths.output));
            let rows =
                commands::with_jobs(jobs, || commands::cmd_sweep_tau(&config, &src, &taus, &dst))??;
            println!("{:>8} {:>10} {:>10} {:>10}", "tau", "rmse", "mae", "mean t");
            for r in rows {
                println!(
                    "{:>8.3} {:>10.5} {:>10.5} {:>10.1}",
                    r.tau, r.rmse, r.mae, r.mean_timestep
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .chain()
                .find_map(|e| e.downcast_ref::<Error>())
                .map_or(1, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
