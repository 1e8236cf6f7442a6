//! Adaptive diffusion sampling for guided depth super-resolution.
//!
//! A degraded low-resolution depth map is refined with a high-resolution
//! guide, its uncertainty is estimated, and that uncertainty picks how far
//! along a diffusion schedule to noise the estimate before a one-step
//! denoiser projects it back onto a prior. The denoisers shipped here are
//! exact posterior means under Gaussian and Gaussian-mixture priors.
//!
//! ```
//! use adaptive_dsr::schedule::NoiseSchedule;
//! use adaptive_dsr::selection::{select_timestep, Rule, SelectionConfig};
//!
//! let schedule = NoiseSchedule::default();
//! let config = SelectionConfig::for_schedule(0.14, Rule::Simplified, &schedule).unwrap();
//! let sel = select_timestep(0.28, &config, &schedule).unwrap();
//! assert!((sel.alpha_bar - 0.5).abs() < 1e-3);
//! ```

pub mod calibration;
pub mod commands;
pub mod degradation;
pub mod distributions;
pub mod error;
pub mod evaluation;
pub mod field;
pub mod pipeline;
pub mod rng;
pub mod sampling;
pub mod scenegen;
pub mod schedule;
pub mod selection;
pub mod storage;

pub use error::{Error, Result};
pub use field::{DepthField, Grid};
