//! Compares the closed-form maximizer of the content/alignment trade-off
//! with a dense grid search for a few rates.
//!
//! `cargo run --example proposition_check`

use adaptive_dsr::commands::verify_prop;

fn main() -> anyhow::Result<()> {
    println!(
        "{:>6} {:>6} {:>12} {:>12} {:>10} {:>8}",
        "lambda", "omega", "analytic", "grid", "gap", "rises"
    );
    for (lambda, omega) in [(0.5, 1.0), (1.0, 2.0), (2.0, 1.0), (3.0, 3.0), (10.0, 0.5)] {
        let (_, r) = verify_prop(lambda, omega, 100_000)?;
        println!(
            "{lambda:>6} {omega:>6} {:>12.6e} {:>12.6e} {:>10.2e} {:>8}",
            r.analytic_maximizer, r.grid_maximizer, r.gap, r.increasing_regions
        );
    }
    Ok(())
}
