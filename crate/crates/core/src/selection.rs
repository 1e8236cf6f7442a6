//! Adaptive timestep selection from calibrated uncertainty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Grid;
use crate::schedule::NoiseSchedule;

/// Lower bound applied to the mean uncertainty before it is used as a divisor.
pub const SIGMA_BAR_FLOOR: f64 = 1e-6;

/// Threshold used throughout the reported experiments.
pub const DEFAULT_TAU: f64 = 0.14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// `ᾱ = τ/σ̄₀`
    #[default]
    Simplified,
    /// `ᾱ = (τ/σ̄₀)²`, the boundary of `√ᾱ·σ̄₀ ≤ τ`
    Threshold,
}

impl std::str::FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplified" => Ok(Rule::Simplified),
            "threshold" => Ok(Rule::Threshold),
            other => Err(Error::Config(format!("unknown rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    tau: f64,
    alpha_min: f64,
    rule: Rule,
}

impl SelectionConfig {
    pub fn new(tau: f64, alpha_min: f64, rule: Rule) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid("tau", format!("must be > 0, got {tau}")));
        }
        if !(alpha_min > 0.0 && alpha_min < 1.0) {
            return Err(Error::invalid(
                "alpha_min",
                format!("must lie in (0, 1), got {alpha_min}"),
            ));
        }
        Ok(Self {
            tau,
            alpha_min,
            rule,
        })
    }

    /// Uses the schedule's most-noised ᾱ as the lower clamp.
    pub fn for_schedule(tau: f64, rule: Rule, schedule: &NoiseSchedule) -> Result<Self> {
        Self::new(tau, schedule.final_alpha_bar(), rule)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn alpha_min(&self) -> f64 {
        self.alpha_min
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn with_tau(self, tau: f64) -> Result<Self> {
        Self::new(tau, self.alpha_min, self.rule)
    }
}

/// Continuous ᾱ target from the mean uncertainty, clamped to `[ᾱ_min, 1]`.
pub fn select_alpha(sigma_bar: f64, config: &SelectionConfig) -> Result<f64> {
    if !(sigma_bar.is_finite() && sigma_bar > 0.0) {
        return Err(Error::invalid(
            "sigma_bar",
            format!("must be > 0, got {sigma_bar}"),
        ));
    }
    let ratio = config.tau / sigma_bar;
    let raw = match config.rule {
        Rule::Simplified => ratio,
        Rule::Threshold => ratio * ratio,
    };
    Ok(raw.clamp(config.alpha_min, 1.0))
}

/// Spatial mean of a per-pixel standard-deviation map, floored at
/// [`SIGMA_BAR_FLOOR`].
pub fn sigma_bar(sigma_map: &Grid) -> Result<f64> {
    if sigma_map.is_empty() {
        return Err(Error::Empty("sigma map"));
    }
    if sigma_map
        .data()
        .iter()
        .any(|v| !(v.is_finite() && *v >= 0.0))
    {
        return Err(Error::invalid(
            "sigma_map",
            "entries must be finite and >= 0",
        ));
    }
    Ok(sigma_map.mean().max(SIGMA_BAR_FLOOR))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    /// Continuous ᾱ produced by the rule, after clamping.
    pub target_alpha: f64,
    /// 1-based timestep snapped to the schedule.
    pub timestep: usize,
    /// The schedule's ᾱ at `timestep`; this is what downstream stages use.
    pub alpha_bar: f64,
}

pub fn select_timestep(
    sigma_bar: f64,
    config: &SelectionConfig,
    schedule: &NoiseSchedule,
) -> Result<Selection> {
    let target_alpha = select_alpha(sigma_bar, config)?;
    let timestep = schedule.timestep_for_alpha(target_alpha)?;
    Ok(Selection {
        target_alpha,
        timestep,
        alpha_bar: schedule.alpha_bar(timestep),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(rule: Rule) -> SelectionConfig {
        SelectionConfig::new(0.14, 1e-4, rule).unwrap()
    }

    #[test]
    fn simplified_examples() {
        assert_relative_eq!(select_alpha(0.28, &cfg(Rule::Simplified)).unwrap(), 0.5);
        assert_eq!(select_alpha(0.10, &cfg(Rule::Simplified)).unwrap(), 1.0);
    }

    #[test]
    fn threshold_example() {
        assert_relative_eq!(select_alpha(0.28, &cfg(Rule::Threshold)).unwrap(), 0.25);
    }

    #[test]
    fn lower_clamp_is_exact() {
        let c = SelectionConfig::new(0.14, 0.01, Rule::Simplified).unwrap();
        assert_eq!(select_alpha(1e6, &c).unwrap(), 0.01);
        assert_eq!(select_alpha(0.14, &c).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_sigma_and_config() {
        assert!(select_alpha(0.0, &cfg(Rule::Simplified)).is_err());
        assert!(select_alpha(-1.0, &cfg(Rule::Simplified)).is_err());
        assert!(SelectionConfig::new(0.0, 0.1, Rule::Simplified).is_err());
        assert!(SelectionConfig::new(0.1, 1.0, Rule::Simplified).is_err());
        assert!(SelectionConfig::new(0.1, 0.0, Rule::Simplified).is_err());
    }

    #[test]
    fn sigma_bar_examples() {
        let g = Grid::filled(4, 4, 0.2).unwrap();
        assert_relative_eq!(sigma_bar(&g).unwrap(), 0.2, epsilon = 1e-15);
        let g = Grid::new(2, 1, vec![0.1, 0.3]).unwrap();
        assert_relative_eq!(sigma_bar(&g).unwrap(), 0.2, epsilon = 1e-15);
        let z = Grid::filled(3, 3, 0.0).unwrap();
        assert_eq!(sigma_bar(&z).unwrap(), SIGMA_BAR_FLOOR);
        let bad = Grid::new(2, 1, vec![0.1, f64::NAN]).unwrap();
        assert!(sigma_bar(&bad).is_err());
    }

    #[test]
    fn sigma_equal_tau_maps_to_first_step() {
        let s = NoiseSchedule::default();
        let c = SelectionConfig::for_schedule(0.14, Rule::Simplified, &s).unwrap();
        let sel = select_timestep(0.14, &c, &s).unwrap();
        assert_eq!(sel.timestep, 1);
        assert_eq!(sel.alpha_bar, s.alpha_bar(1));
    }

    #[test]
    fn exact_snap() {
        let s = NoiseSchedule::default();
        let c = SelectionConfig::for_schedule(0.14, Rule::Simplified, &s).unwrap();
        let t = 123;
        // choose sigma_bar so that tau / sigma_bar reproduces alpha_bar(t) exactly
        let mut sb = 0.14 / s.alpha_bar(t);
        if 0.14 / sb != s.alpha_bar(t) {
            sb = f64::from_bits(sb.to_bits() + 1);
        }
        let sel = select_timestep(sb, &c, &s).unwrap();
        assert_eq!(sel.timestep, t);
    }

    #[test]
    fn rule_parses() {
        assert_eq!("threshold".parse::<Rule>().unwrap(), Rule::Threshold);
        assert!("fancy".parse::<Rule>().is_err());
    }
}
