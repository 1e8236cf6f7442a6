//! Calibration stage: a refined high-resolution estimate and a per-pixel
//! uncertainty map from a degraded low-resolution depth field and a
//! high-resolution guide.
//!
//! The refiner is joint-bilateral upsampling. Uncertainty is a windowed
//! mean absolute deviation between the refined estimate and a plain
//! bicubic upsample, converted to a standard deviation (×√(π/2)) and scaled
//! by a single fitted calibration factor.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::degradation::bicubic_resize;
use crate::error::{Error, Result};
use crate::field::{check_shape, DepthField, Grid};
use crate::selection;

/// Lower bound on every per-pixel standard deviation, meters.
pub const SIGMA_FLOOR: f64 = 1e-3;

/// Search interval for [`fit_sigma_scale`].
pub const SCALE_SEARCH: (f64, f64) = (1e-3, 1e3);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Scalar `c` applied to the raw residual statistic.
    pub sigma_scale: f64,
    /// Range kernel width as a fraction of the guide's dynamic range.
    pub range_fraction: f64,
}

/// Scale fitted with [`fit_sigma_scale`] on a held-out corpus of the default
/// scenes under the heaviest degradation, rounded.
pub const DEFAULT_SIGMA_SCALE: f64 = 1.5;

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            sigma_scale: DEFAULT_SIGMA_SCALE,
            range_fraction: 0.1,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_scale.is_finite() && self.sigma_scale > 0.0) {
            return Err(Error::invalid("sigma_scale", "must be > 0"));
        }
        if !(self.range_fraction.is_finite() && self.range_fraction > 0.0) {
            return Err(Error::invalid("range_fraction", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutput {
    pub z0_hat: DepthField,
    pub sigma0_map: Grid,
    pub sigma_bar: f64,
    /// Unscaled residual statistic, kept so the scale can be refit.
    pub residual: Grid,
    /// Upsampling factor between the input and the guide.
    pub factor: f64,
}

/// Replaces invalid pixels by the value of the nearest valid pixel
/// (Euclidean, ties in row-major order).
pub fn fill_nearest(field: &DepthField) -> Result<DepthField> {
    if field.valid_count() == 0 {
        return Err(Error::Empty("depth field without valid pixels"));
    }
    if field.is_fully_valid() {
        return Ok(field.clone());
    }
    let (w, h) = (field.width(), field.height());
    let valid_idx: Vec<usize> = (0..w * h).filter(|&i| field.valid()[i]).collect();
    let mut values = field.values().to_vec();
    for (i, value) in values.iter_mut().enumerate() {
        if field.valid()[i] {
            continue;
        }
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        let best = valid_idx
            .iter()
            .min_by_key(|&&j| {
                let (dx, dy) = ((j % w) as isize - x, (j / w) as isize - y);
                (dx * dx + dy * dy, j)
            })
            .copied()
            .expect("at least one valid pixel");
        *value = field.values()[best];
    }
    DepthField::from_values(w, h, values)
}

/// Upsampling factor (larger axis ratio) between `d_in` and the guide.
pub fn upsampling_factor(guide: &Grid, d_in: &DepthField) -> f64 {
    let fx = guide.width() as f64 / d_in.width() as f64;
    let fy = guide.height() as f64 / d_in.height() as f64;
    fx.max(fy)
}

/// Joint-bilateral upsampling of `d_in` onto the guide's grid. The spatial
/// kernel has standard deviation equal to the upsampling factor (one
/// low-resolution pixel); its support spans `min(⌈f⌉−1, 2)` low-resolution
/// samples on each side, so at unit factor only the co-located sample
/// contributes. The range kernel compares guide values at the output pixel
/// and at each sample's position.
pub fn joint_bilateral_upsample(
    guide: &Grid,
    d_in: &DepthField,
    range_fraction: f64,
) -> Result<DepthField> {
    let lr = fill_nearest(d_in)?;
    let (gw, gh) = (guide.width(), guide.height());
    let (lw, lh) = (lr.width(), lr.height());
    if lw > gw || lh > gh {
        return Err(Error::invalid("d_in", "input is larger than the guide"));
    }
    let fx = gw as f64 / lw as f64;
    let fy = gh as f64 / lh as f64;
    let f = fx.max(fy);
    let support = ((f.ceil() as isize) - 1).clamp(0, 2);
    let spatial_denom = 2.0 * f * f;
    let (lo, hi) = guide.min_max();
    let sigma_r = range_fraction * (hi - lo);
    let range_denom = 2.0 * sigma_r * sigma_r;

    // guide value at each low-resolution sample's center
    let mut sample_guide = vec![0.0; lw * lh];
    for qy in 0..lh {
        for qx in 0..lw {
            let cx = (qx as f64 + 0.5) * fx - 0.5;
            let cy = (qy as f64 + 0.5) * fy - 0.5;
            sample_guide[qy * lw + qx] =
                guide.get_clamped(cx.round() as isize, cy.round() as isize);
        }
    }

    let mut out = Vec::with_capacity(gw * gh);
    for py in 0..gh {
        let qy0 = (((py as f64 + 0.5) / fy).floor() as isize).min(lh as isize - 1);
        for px in 0..gw {
            let qx0 = (((px as f64 + 0.5) / fx).floor() as isize).min(lw as isize - 1);
            let ip = guide.get(px, py);
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for qy in (qy0 - support).max(0)..=(qy0 + support).min(lh as isize - 1) {
                let cy = (qy as f64 + 0.5) * fy - 0.5;
                let dy = cy - py as f64;
                for qx in (qx0 - support).max(0)..=(qx0 + support).min(lw as isize - 1) {
                    let cx = (qx as f64 + 0.5) * fx - 0.5;
                    let dx = cx - px as f64;
                    let q = qy as usize * lw + qx as usize;
                    let mut wt = (-(dx * dx + dy * dy) / spatial_denom).exp();
                    if range_denom > 0.0 {
                        let dg = ip - sample_guide[q];
                        wt *= (-(dg * dg) / range_denom).exp();
                    }
                    acc += wt * lr.values()[q];
                    wsum += wt;
                }
            }
            out.push(if wsum > 0.0 {
                acc / wsum
            } else {
                lr.values()[qy0 as usize * lw + qx0 as usize]
            });
        }
    }
    DepthField::from_values(gw, gh, out)
}

/// Mean of `|a − b|` over a `(2k+1)²` edge-clamped window, times √(π/2).
pub fn residual_statistic(a: &DepthField, b: &DepthField, k: usize) -> Result<Grid> {
    check_shape(a.width(), a.height(), b.width(), b.height())?;
    let (w, h) = (a.width(), a.height());
    let diff = Grid::new(
        w,
        h,
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| {
                let d = (x - y).abs();
                if d.is_finite() {
                    d
                } else {
                    0.0
                }
            })
            .collect(),
    )?;
    let k = k as isize;
    let norm = ((2 * k + 1) * (2 * k + 1)) as f64;
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for dx in -k..=k {
                s += diff.get_clamped(x as isize + dx, y as isize);
            }
            rows[y * w + x] = s;
        }
    }
    let rows = Grid::new(w, h, rows)?;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for dy in -k..=k {
                s += rows.get_clamped(x as isize, y as isize + dy);
            }
            out[y * w + x] = FRAC_PI_2.sqrt() * s / norm;
        }
    }
    Grid::new(w, h, out)
}

/// `max(c·raw, floor)` per pixel.
pub fn scaled_sigma(residual: &Grid, scale: f64) -> Grid {
    let data = residual
        .data()
        .iter()
        .map(|r| (scale * r).max(SIGMA_FLOOR))
        .collect();
    Grid::new(residual.width(), residual.height(), data).expect("same shape")
}

pub fn calibrate(
    guide: &Grid,
    d_in: &DepthField,
    config: &CalibrationConfig,
) -> Result<CalibrationOutput> {
    config.validate()?;
    if d_in.valid_count() == 0 {
        return Err(Error::Empty("degraded input has no valid pixels"));
    }
    let z0_hat = joint_bilateral_upsample(guide, d_in, config.range_fraction)?;
    let plain = bicubic_resize(&fill_nearest(d_in)?, guide.width(), guide.height())?;
    let factor = upsampling_factor(guide, d_in);
    let k = (factor / 2.0).ceil() as usize;
    let residual = residual_statistic(&z0_hat, &plain, k)?;
    let sigma0_map = scaled_sigma(&residual, config.sigma_scale);
    let sigma_bar = selection::sigma_bar(&sigma0_map)?;
    Ok(CalibrationOutput {
        z0_hat,
        sigma0_map,
        sigma_bar,
        residual,
        factor,
    })
}

/// Mean over valid ground-truth pixels of `ln σ² + (ẑ − z)²/σ²`.
pub fn nll_loss(z0_hat: &DepthField, sigma0_map: &Grid, z_gt: &DepthField) -> Result<f64> {
    check_shape(z0_hat.width(), z0_hat.height(), z_gt.width(), z_gt.height())?;
    sigma0_map.same_shape(z_gt.width(), z_gt.height())?;
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..z_gt.len() {
        if !z_gt.valid()[i] || !z0_hat.valid()[i] {
            continue;
        }
        let s = sigma0_map.data()[i];
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid(
                "sigma0_map",
                "standard deviations must be > 0",
            ));
        }
        let var = s * s;
        let e = z0_hat.values()[i] - z_gt.values()[i];
        total += var.ln() + e * e / var;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Empty("no valid pixels for nll"));
    }
    Ok(total / count as f64)
}

/// One scene's worth of data for fitting the calibration scale.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationSample<'a> {
    pub z0_hat: &'a DepthField,
    pub residual: &'a Grid,
    pub z_gt: &'a DepthField,
}

fn mean_nll_at(corpus: &[CalibrationSample<'_>], scale: f64) -> Result<f64> {
    let mut total = 0.0;
    for s in corpus {
        total += nll_loss(s.z0_hat, &scaled_sigma(s.residual, scale), s.z_gt)?;
    }
    Ok(total / corpus.len() as f64)
}

/// Scale `c` minimizing the corpus-mean NLL of `max(c·raw, floor)`, by
/// golden-section search over `ln c`.
pub fn fit_sigma_scale(corpus: &[CalibrationSample<'_>]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::Empty("calibration corpus"));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (SCALE_SEARCH.0.ln(), SCALE_SEARCH.1.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = mean_nll_at(corpus, c.exp())?;
    let mut fd = mean_nll_at(corpus, d.exp())?;
    while b - a > 1e-7 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = mean_nll_at(corpus, c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = mean_nll_at(corpus, d.exp())?;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Mean absolute error over pixels where `mask` is set.
pub fn l_d_loss(d_hat: &DepthField, d_gt: &DepthField, mask: &[bool]) -> Result<f64> {
    check_shape(d_hat.width(), d_hat.height(), d_gt.width(), d_gt.height())?;
    if mask.len() != d_gt.len() {
        return Err(Error::DimensionMismatch {
            expected: d_gt.len(),
            found: mask.len(),
        });
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        total += (d_hat.values()[i] - d_gt.values()[i]).abs();
        count += 1;
    }
    if count == 0 {
        return Err(Error::Empty("l_d mask"));
    }
    Ok(total / count as f64)
}

/// Weight of the depth term in [`calibration_objective`].
pub const L_D_WEIGHT: f64 = 0.5;

/// `nll + 0.5·l_d` over pixels valid in the ground truth. Reported for
/// diagnostics only; nothing here is trained against it.
pub fn calibration_objective(
    z0_hat: &DepthField,
    sigma0_map: &Grid,
    z_gt: &DepthField,
) -> Result<f64> {
    let nll = nll_loss(z0_hat, sigma0_map, z_gt)?;
    let l_d = l_d_loss(z0_hat, z_gt, z_gt.valid())?;
    Ok(nll + L_D_WEIGHT * l_d)
}

/// Fraction of valid pixels whose error lies within `k` standard deviations.
pub fn coverage(z0_hat: &DepthField, sigma0_map: &Grid, z_gt: &DepthField, k: f64) -> Result<f64> {
    check_shape(z0_hat.width(), z0_hat.height(), z_gt.width(), z_gt.height())?;
    let mut inside = 0usize;
    let mut count = 0usize;
    for i in 0..z_gt.len() {
        if z_gt.valid()[i] && z0_hat.valid()[i] {
            count += 1;
            if (z0_hat.values()[i] - z_gt.values()[i]).abs() <= k * sigma0_map.data()[i] {
                inside += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::Empty("no valid pixels for coverage"));
    }
    Ok(inside as f64 / count as f64)
}
