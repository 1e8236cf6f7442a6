//! Discrete diffusion noise schedules.
//!
//! Timesteps are 1-based: `alpha_bar(1)` is the least-noised step and
//! `alpha_bar(T)` the most-noised one.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    #[default]
    Linear,
}

/// Serializable description of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleParams {
    pub kind: ScheduleKind,
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            kind: ScheduleKind::Linear,
            steps: 1000,
            beta_start: 1e-4,
            beta_end: 0.02,
        }
    }
}

impl ScheduleParams {
    pub fn build(&self) -> Result<NoiseSchedule> {
        match self.kind {
            ScheduleKind::Linear => {
                NoiseSchedule::linear(self.steps, self.beta_start, self.beta_end)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// Betas linearly interpolated from `beta_start` to `beta_end` inclusive.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        ensure_finite("beta_start", beta_start)?;
        ensure_finite("beta_end", beta_end)?;
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(Error::invalid(
                "beta",
                format!("need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}"),
            ));
        }
        let betas = if steps == 1 {
            vec![beta_start]
        } else {
            let span = (steps - 1) as f64;
            (0..steps)
                .map(|s| beta_start + (beta_end - beta_start) * s as f64 / span)
                .collect()
        };
        Self::from_betas(betas)
    }

    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::invalid("betas", "empty schedule"));
        }
        for pair in betas.windows(2) {
            if pair[1] < pair[0] {
                return Err(Error::invalid("betas", "must be non-decreasing"));
            }
        }
        if betas
            .iter()
            .any(|b| !(b.is_finite() && *b > 0.0 && *b < 1.0))
        {
            return Err(Error::invalid("betas", "every beta must lie in (0, 1)"));
        }
        let mut alpha_bars = Vec::with_capacity(betas.len());
        let mut acc = 1.0f64;
        for b in &betas {
            acc *= 1.0 - b;
            alpha_bars.push(acc);
        }
        Ok(Self { betas, alpha_bars })
    }

    /// Number of timesteps T.
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Cumulative products, index 0 holding timestep 1.
    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    /// ᾱ at 1-based timestep `t`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        assert!(
            t >= 1 && t <= self.len(),
            "timestep {t} outside 1..={}",
            self.len()
        );
        self.alpha_bars[t - 1]
    }

    /// ᾱ at the most-noised step.
    pub fn final_alpha_bar(&self) -> f64 {
        self.alpha_bars[self.len() - 1]
    }

    /// Timestep whose ᾱ is nearest to `target`; an exact tie goes to the
    /// larger (noisier) timestep.
    pub fn timestep_for_alpha(&self, target: f64) -> Result<usize> {
        if !(target.is_finite() && target > 0.0 && target <= 1.0) {
            return Err(Error::invalid(
                "target_alpha",
                format!("must lie in (0, 1], got {target}"),
            ));
        }
        let a = &self.alpha_bars;
        // first index whose alpha_bar is <= target
        let i = a.partition_point(|&v| v > target);
        let idx = if i == 0 {
            0
        } else if i == a.len() {
            a.len() - 1
        } else {
            let above = a[i - 1] - target;
            let below = target - a[i];
            if below <= above {
                i
            } else {
                i - 1
            }
        };
        Ok(idx + 1)
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        ScheduleParams::default()
            .build()
            .expect("default schedule parameters are valid")
    }
}
