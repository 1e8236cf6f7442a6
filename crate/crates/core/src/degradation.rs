//! Synthetic degradation of depth fields: bicubic resampling, additive
//! Gaussian noise, Gaussian blur, pixel removal with 3-nearest-neighbour
//! fill, and low-bit quantization.
//!
//! [`apply_spec`] runs the stages in a fixed order: downsample, noise,
//! blur, sparsify, quantize. Each stage is skipped when inactive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{DepthField, Grid, MIN_DEPTH};
use crate::rng::{CounterRng, Stream};

/// Catmull-Rom coefficient.
const CUBIC_A: f64 = -0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlurSpec {
    pub kernel_size: usize,
    pub sigma: f64,
}

impl Default for BlurSpec {
    fn default() -> Self {
        Self {
            kernel_size: 3,
            sigma: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationSpec {
    pub downsample_factor: f64,
    /// Standard deviation of the additive noise, meters.
    pub noise_sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blur: Option<BlurSpec>,
    pub removal_fraction: f64,
    /// Quantization step in meters; 0 disables quantization.
    pub quantization_step: f64,
    pub seed: u64,
}

impl Default for DegradationSpec {
    fn default() -> Self {
        Self::identity()
    }
}

impl DegradationSpec {
    pub fn identity() -> Self {
        Self {
            downsample_factor: 1.0,
            noise_sigma: 0.0,
            blur: None,
            removal_fraction: 0.0,
            quantization_step: 0.0,
            seed: 0,
        }
    }

    pub fn downsample_only(factor: f64) -> Self {
        Self {
            downsample_factor: factor,
            ..Self::identity()
        }
    }

    /// 16x downsampling combined with every perturbation of the benchmark
    /// recipe: noise 0.05 m, 3x3 blur with σ = 0.5, 30% removal, and
    /// decimeter quantization.
    pub fn heaviest(seed: u64) -> Self {
        Self {
            downsample_factor: 16.0,
            noise_sigma: 0.05,
            blur: Some(BlurSpec::default()),
            removal_fraction: 0.3,
            quantization_step: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.downsample_factor.is_finite() && self.downsample_factor >= 1.0) {
            return Err(Error::invalid(
                "downsample_factor",
                "must be finite and >= 1",
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise_sigma", "must be finite and >= 0"));
        }
        if let Some(b) = &self.blur {
            if b.kernel_size % 2 == 0 {
                return Err(Error::invalid("blur.kernel_size", "must be odd"));
            }
            if !(b.sigma.is_finite() && b.sigma > 0.0) {
                return Err(Error::invalid("blur.sigma", "must be > 0"));
            }
        }
        if !(self.removal_fraction >= 0.0 && self.removal_fraction < 1.0) {
            return Err(Error::invalid("removal_fraction", "must lie in [0, 1)"));
        }
        if !(self.quantization_step.is_finite() && self.quantization_step >= 0.0) {
            return Err(Error::invalid(
                "quantization_step",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serializes");
        crate::storage::sha256_hex(&json)
    }
}

#[inline]
fn cubic_weight(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        ((CUBIC_A + 2.0) * t - (CUBIC_A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((CUBIC_A * t - 5.0 * CUBIC_A) * t + 8.0 * CUBIC_A) * t - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Bicubic resampling to an explicit output size with pixel-center
/// alignment and edge clamping. Invalid taps are dropped and the remaining
/// weights renormalized.
pub fn bicubic_resize(field: &DepthField, out_w: usize, out_h: usize) -> Result<DepthField> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid(
            "output size",
            "resampled field would be empty",
        ));
    }
    let (w, h) = (field.width(), field.height());
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    let vals = field.values();
    let valid = field.valid();

    // per-axis taps are shared across rows and columns
    let taps = |out: usize, scale: f64, len: usize| -> Vec<[(usize, f64); 4]> {
        (0..out)
            .map(|o| {
                let u = (o as f64 + 0.5) * scale - 0.5;
                let base = u.floor();
                let frac = u - base;
                let mut t = [(0usize, 0.0f64); 4];
                for (k, slot) in t.iter_mut().enumerate() {
                    let off = k as isize - 1;
                    let idx = (base as isize + off).clamp(0, len as isize - 1) as usize;
                    *slot = (idx, cubic_weight(frac - off as f64));
                }
                t
            })
            .collect()
    };
    let tx = taps(out_w, sx, w);
    let ty = taps(out_h, sy, h);

    let mut out = Vec::with_capacity(out_w * out_h);
    for row in &ty {
        for col in &tx {
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for &(yy, wy) in row {
                for &(xx, wx) in col {
                    let i = yy * w + xx;
                    if valid[i] {
                        let wt = wx * wy;
                        acc += wt * vals[i];
                        wsum += wt;
                    }
                }
            }
            out.push(if wsum.abs() > 1e-6 {
                (acc / wsum).max(MIN_DEPTH)
            } else {
                f64::NAN
            });
        }
    }
    DepthField::from_values(out_w, out_h, out)
}

/// Output size for a relative scale: `max(1, round(n·scale))`.
pub fn scaled_size(n: usize, scale: f64) -> usize {
    ((n as f64 * scale).round() as usize).max(1)
}

/// Bicubic resampling by a relative `scale`; values above 1 enlarge the field.
pub fn bicubic_resample(field: &DepthField, scale: f64) -> Result<DepthField> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid("scale", format!("must be > 0, got {scale}")));
    }
    let ow = (field.width() as f64 * scale).round() as usize;
    let oh = (field.height() as f64 * scale).round() as usize;
    if ow == 0 || oh == 0 {
        return Err(Error::invalid("scale", "degenerate output size"));
    }
    bicubic_resize(field, ow, oh)
}

pub fn add_gaussian_noise(field: &DepthField, sigma: f64, seed: u64) -> Result<DepthField> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid("sigma", "must be finite and >= 0"));
    }
    if sigma == 0.0 {
        return Ok(field.clone());
    }
    let rng = CounterRng::new(seed, Stream::DegradeNoise);
    let values = field
        .values()
        .iter()
        .zip(field.valid())
        .enumerate()
        .map(|(i, (&v, &ok))| {
            if ok {
                (v + sigma * rng.normal_at(i as u64)).max(MIN_DEPTH)
            } else {
                f64::NAN
            }
        })
        .collect();
    DepthField::with_mask(
        field.width(),
        field.height(),
        values,
        field.valid().to_vec(),
    )
}

/// Normalized discrete Gaussian kernel of odd size.
pub fn gaussian_kernel(kernel_size: usize, sigma: f64) -> Result<Vec<f64>> {
    if kernel_size.is_multiple_of(2) {
        return Err(Error::invalid("kernel_size", "must be odd"));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid("sigma", "must be > 0"));
    }
    let r = (kernel_size / 2) as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|x| (-((x * x) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / s).collect())
}

/// Separable convolution of a plain grid with edge clamping.
pub(crate) fn convolve_separable(grid: &Grid, kernel: &[f64]) -> Grid {
    let (w, h) = (grid.width(), grid.height());
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, wk) in kernel.iter().enumerate() {
                acc += wk * grid.get_clamped(x as isize + k as isize - r, y as isize);
            }
            tmp[y * w + x] = acc;
        }
    }
    let tmp = Grid::new(w, h, tmp).expect("same shape");
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, wk) in kernel.iter().enumerate() {
                acc += wk * tmp.get_clamped(x as isize, y as isize + k as isize - r);
            }
            out[y * w + x] = acc;
        }
    }
    Grid::new(w, h, out).expect("same shape")
}

/// Separable normalized Gaussian blur with edge clamping. Invalid pixels
/// contribute nothing and the weights of valid taps are renormalized.
pub fn gaussian_blur(field: &DepthField, kernel_size: usize, sigma: f64) -> Result<DepthField> {
    let kernel = gaussian_kernel(kernel_size, sigma)?;
    let (w, h) = (field.width(), field.height());
    let masked = Grid::new(
        w,
        h,
        field
            .values()
            .iter()
            .zip(field.valid())
            .map(|(&v, &ok)| if ok { v } else { 0.0 })
            .collect(),
    )?;
    let weights = Grid::new(
        w,
        h,
        field
            .valid()
            .iter()
            .map(|&ok| if ok { 1.0 } else { 0.0 })
            .collect(),
    )?;
    let num = convolve_separable(&masked, &kernel);
    let den = convolve_separable(&weights, &kernel);
    let values = num
        .data()
        .iter()
        .zip(den.data())
        .zip(field.valid())
        .map(|((&n, &d), &ok)| {
            if ok && d > 0.0 {
                (n / d).max(MIN_DEPTH)
            } else {
                f64::NAN
            }
        })
        .collect();
    DepthField::with_mask(w, h, values, field.valid().to_vec())
}

/// Removes `⌊fraction·N⌋` valid pixels chosen by seeded sampling without
/// replacement and refills each with the mean of its three nearest
/// surviving pixels (Euclidean distance, ties in row-major order).
pub fn sparsify_and_fill(field: &DepthField, fraction: f64, seed: u64) -> Result<DepthField> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid("fraction", "must lie in [0, 1)"));
    }
    let n = field.len();
    let remove_count = (fraction * n as f64).floor() as usize;
    if remove_count == 0 {
        return Ok(field.clone());
    }
    let rng = CounterRng::new(seed, Stream::Sparsify);
    let mut candidates: Vec<(u64, usize)> = (0..n)
        .filter(|&i| field.valid()[i])
        .map(|i| (rng.u64_at(i as u64, 0), i))
        .collect();
    candidates.sort_unstable();
    let mut removed = vec![false; n];
    for &(_, i) in candidates.iter().take(remove_count) {
        removed[i] = true;
    }
    let surviving: Vec<bool> = (0..n).map(|i| field.valid()[i] && !removed[i]).collect();
    if surviving.iter().filter(|&&s| s).count() < 3 {
        return Err(Error::invalid("fraction", "fewer than 3 surviving pixels"));
    }

    let (w, h) = (field.width(), field.height());
    let mut values = field.values().to_vec();
    for (i, _) in removed.iter().enumerate().filter(|(_, &r)| r) {
        let nn = nearest_survivors(&surviving, w, h, i % w, i / w, 3);
        values[i] = nn.iter().map(|&j| field.values()[j]).sum::<f64>() / nn.len() as f64;
    }
    DepthField::with_mask(w, h, values, field.valid().to_vec())
}

/// The `k` nearest surviving pixels to `(px, py)`, found by expanding
/// square rings until the k-th candidate is provably closest.
fn nearest_survivors(
    surviving: &[bool],
    w: usize,
    h: usize,
    px: usize,
    py: usize,
    k: usize,
) -> Vec<usize> {
    let mut found: Vec<(usize, usize)> = Vec::new(); // (dist², index)
    let max_r = w.max(h);
    for r in 1..=max_r {
        let r = r as isize;
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs() != r && dy.abs() != r {
                    continue;
                }
                let (x, y) = (px as isize + dx, py as isize + dy);
                if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                    continue;
                }
                let j = y as usize * w + x as usize;
                if surviving[j] {
                    found.push(((dx * dx + dy * dy) as usize, j));
                }
            }
        }
        if found.len() >= k {
            found.sort_unstable();
            // any pixel outside ring r is farther than r in Euclidean distance
            if found[k - 1].0 <= (r * r) as usize {
                break;
            }
        }
    }
    found.sort_unstable();
    found.into_iter().take(k).map(|(_, j)| j).collect()
}

/// Rounds every valid value half-to-even to a multiple of `step`.
pub fn quantize(field: &DepthField, step: f64) -> Result<DepthField> {
    if !(step.is_finite() && step >= 0.0) {
        return Err(Error::invalid("step", "must be finite and >= 0"));
    }
    if step == 0.0 {
        return Ok(field.clone());
    }
    let values = field
        .values()
        .iter()
        .zip(field.valid())
        .map(|(&v, &ok)| {
            if ok {
                ((v / step).round_ties_even() * step).max(MIN_DEPTH)
            } else {
                f64::NAN
            }
        })
        .collect();
    DepthField::with_mask(
        field.width(),
        field.height(),
        values,
        field.valid().to_vec(),
    )
}

/// Seeds for the noise and sparsify stages, derived from the spec seed.
pub fn stage_seeds(spec: &DegradationSpec) -> (u64, u64) {
    (
        crate::rng::derive_seed(spec.seed, 1),
        crate::rng::derive_seed(spec.seed, 2),
    )
}

pub fn apply_spec(field: &DepthField, spec: &DegradationSpec) -> Result<DepthField> {
    spec.validate()?;
    let (noise_seed, sparse_seed) = stage_seeds(spec);
    let mut out = if spec.downsample_factor != 1.0 {
        bicubic_resize(
            field,
            scaled_size(field.width(), 1.0 / spec.downsample_factor),
            scaled_size(field.height(), 1.0 / spec.downsample_factor),
        )?
    } else {
        field.clone()
    };
    if spec.noise_sigma > 0.0 {
        out = add_gaussian_noise(&out, spec.noise_sigma, noise_seed)?;
    }
    if let Some(b) = &spec.blur {
        out = gaussian_blur(&out, b.kernel_size, b.sigma)?;
    }
    if spec.removal_fraction > 0.0 {
        out = sparsify_and_fill(&out, spec.removal_fraction, sparse_seed)?;
    }
    if spec.quantization_step > 0.0 {
        out = quantize(&out, spec.quantization_step)?;
    }
    Ok(out)
}
