//! How mean uncertainty maps to a timestep under both selection rules.
//!
//! `cargo run --example schedule_and_selection`

use adaptive_dsr::schedule::NoiseSchedule;
use adaptive_dsr::selection::{select_timestep, Rule, SelectionConfig, DEFAULT_TAU};

fn main() -> anyhow::Result<()> {
    let schedule = NoiseSchedule::linear(1000, 1e-4, 0.02)?;
    println!(
        "T = {}, alpha_bar(1) = {:.6}, alpha_bar(T) = {:.4e}",
        schedule.len(),
        schedule.alpha_bar(1),
        schedule.final_alpha_bar()
    );
    for t in [1, 100, 250, 500, 750, 1000] {
        println!("  t = {t:>4}  alpha_bar = {:.6}", schedule.alpha_bar(t));
    }

    println!(
        "\n{:>10} {:>22} {:>22}",
        "sigma_bar", "simplified (a, t)", "threshold (a, t)"
    );
    let simplified = SelectionConfig::for_schedule(DEFAULT_TAU, Rule::Simplified, &schedule)?;
    let threshold = SelectionConfig::for_schedule(DEFAULT_TAU, Rule::Threshold, &schedule)?;
    for sb in [0.01, 0.05, 0.14, 0.3, 0.6, 1.0, 3.0] {
        let a = select_timestep(sb, &simplified, &schedule)?;
        let b = select_timestep(sb, &threshold, &schedule)?;
        println!(
            "{sb:>10.3} {:>14.4} {:>7} {:>14.4} {:>7}",
            a.alpha_bar, a.timestep, b.alpha_bar, b.timestep
        );
    }
    Ok(())
}
