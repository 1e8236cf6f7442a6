//! Noise injection at the selected timestep and one-step denoising.
//!
//! The noisy latent is `ẑ_t + σ̂_t ⊙ ε` with `ẑ_t = √ᾱ·ẑ₀` and
//! `σ̂_t = √(ᾱ·σ̂₀² + 1 − ᾱ)` per pixel. Denoisers implement the
//! [`Denoiser`] contract `(guide, noisy latent) -> clean latent`; the two
//! provided here are exact posterior means under closed-form priors and
//! stand in for a learned one-step model.

use serde::{Deserialize, Serialize};

use crate::degradation::{convolve_separable, gaussian_kernel};
use crate::distributions::check_alpha_bar;
use crate::error::{Error, Result};
use crate::field::{DepthField, Grid};
use crate::rng::{CounterRng, Stream};
use crate::selection::Selection;

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Per-pixel mean scale `ẑ_t` and noise scale `σ̂_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scales {
    pub mean: Vec<f64>,
    pub noise: Vec<f64>,
}

pub fn mean_and_noise_scales(z0_hat: &[f64], sigma0: &[f64], alpha_bar: f64) -> Result<Scales> {
    check_alpha_bar(alpha_bar)?;
    check_len(z0_hat.len(), sigma0.len())?;
    let s = alpha_bar.sqrt();
    let mean = z0_hat.iter().map(|z| s * z).collect();
    let noise = sigma0
        .iter()
        .map(|sd| (alpha_bar * sd * sd + 1.0 - alpha_bar).sqrt())
        .collect();
    Ok(Scales { mean, noise })
}

/// A noise field together with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseField {
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Plain seeded unit-Gaussian field.
pub fn gaussian_noise(len: usize, seed: u64) -> NoiseField {
    NoiseField {
        values: CounterRng::new(seed, Stream::Proposal).normal_field(len),
        seed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProposalConfig {
    /// Weight of the guide-aligned residual; 0 gives plain Gaussian noise.
    pub kappa: f64,
    /// Width of the low-pass used to form the guide high-pass, in pixels.
    pub highpass_sigma: f64,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            kappa: 0.25,
            highpass_sigma: 4.0,
        }
    }
}

impl ProposalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::invalid("kappa", "must be finite and >= 0"));
        }
        if !(self.highpass_sigma.is_finite() && self.highpass_sigma > 0.0) {
            return Err(Error::invalid("highpass_sigma", "must be > 0"));
        }
        Ok(())
    }
}

/// `guide − blur(guide)`, centered and scaled to unit RMS. A guide without
/// structure yields an all-zero field.
pub fn guide_highpass(guide: &Grid, sigma: f64) -> Result<Vec<f64>> {
    let size = 2 * (3.0 * sigma).ceil() as usize + 1;
    let kernel = gaussian_kernel(size, sigma)?;
    let low = convolve_separable(guide, &kernel);
    let mut h: Vec<f64> = guide
        .data()
        .iter()
        .zip(low.data())
        .map(|(g, l)| g - l)
        .collect();
    let n = h.len() as f64;
    let mean = h.iter().sum::<f64>() / n;
    h.iter_mut().for_each(|v| *v -= mean);
    let rms = (h.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    // rounding in the blur leaves tiny residuals on a flat guide
    let (lo, hi) = guide.min_max();
    if hi == lo || rms <= 1e-12 * (hi - lo) {
        return Ok(vec![0.0; h.len()]);
    }
    h.iter_mut().for_each(|v| *v /= rms);
    Ok(h)
}

/// Guide-conditioned noise proposal: a seeded Gaussian draw plus a
/// `kappa`-weighted unit-RMS high-pass of the guide, rescaled so the sum
/// keeps unit variance. With `kappa = 0`, or a guide without structure, the
/// result is bit-identical to [`gaussian_noise`] with the same seed.
pub fn noise_proposal(
    guide: &Grid,
    scales: &Scales,
    config: &ProposalConfig,
    seed: u64,
) -> Result<NoiseField> {
    config.validate()?;
    check_len(guide.len(), scales.mean.len())?;
    check_len(scales.mean.len(), scales.noise.len())?;
    let mut eps = gaussian_noise(guide.len(), seed);
    if config.kappa == 0.0 {
        return Ok(eps);
    }
    let h = guide_highpass(guide, config.highpass_sigma)?;
    if h.iter().all(|&v| v == 0.0) {
        return Ok(eps);
    }
    let norm = (1.0 + config.kappa * config.kappa).sqrt();
    for (e, hv) in eps.values.iter_mut().zip(&h) {
        *e = (*e + config.kappa * hv) / norm;
    }
    Ok(eps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyLatent {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub timestep: usize,
    pub alpha_bar: f64,
    pub mean_scale: Vec<f64>,
    pub noise_scale: Vec<f64>,
    /// Seed of the noise field used to build `values`.
    pub seed: u64,
}

/// `values = mean_scale + noise_scale ⊙ epsilon`.
pub fn inject_noise(
    width: usize,
    height: usize,
    scales: Scales,
    epsilon: &NoiseField,
    selection: &Selection,
) -> Result<NoisyLatent> {
    check_alpha_bar(selection.alpha_bar)?;
    check_len(width * height, scales.mean.len())?;
    check_len(scales.mean.len(), scales.noise.len())?;
    check_len(scales.mean.len(), epsilon.values.len())?;
    if epsilon.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("epsilon"));
    }
    let values = scales
        .mean
        .iter()
        .zip(&scales.noise)
        .zip(&epsilon.values)
        .map(|((m, s), e)| m + s * e)
        .collect();
    Ok(NoisyLatent {
        width,
        height,
        values,
        timestep: selection.timestep,
        alpha_bar: selection.alpha_bar,
        mean_scale: scales.mean,
        noise_scale: scales.noise,
        seed: epsilon.seed,
    })
}

/// One-step denoiser contract: maps a guide and a noisy latent at a known
/// timestep to a clean latent estimate.
pub trait Denoiser: Send + Sync {
    fn denoise(&self, guide: &Grid, noisy: &NoisyLatent) -> Result<Vec<f64>>;
}

/// Per-pixel Gaussian prior `N(mean_i, sigma²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    mean: Vec<f64>,
    sigma: f64,
}

impl GaussianPrior {
    pub fn new(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid("sigma_p", "must be finite and >= 0"));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prior mean"));
        }
        Ok(Self { mean, sigma })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Posterior mean of one Gaussian component given `z_t`.
#[inline]
fn gaussian_posterior_mean(mu: f64, sigma: f64, z_t: f64, alpha_bar: f64) -> f64 {
    let s = alpha_bar.sqrt();
    let var = sigma * sigma;
    let gain = s * var / (alpha_bar * var + 1.0 - alpha_bar);
    mu + gain * (z_t - s * mu)
}

/// Exact posterior mean `E[z | z_t]` for `z_t = √ᾱ·z + √(1−ᾱ)·ε` under the
/// prior `N(mu_p, sigma_p²)`. At `ᾱ = 1` the observation is returned as is.
pub fn denoise_gaussian_posterior(prior: &GaussianPrior, noisy: &NoisyLatent) -> Result<Vec<f64>> {
    check_alpha_bar(noisy.alpha_bar)?;
    check_len(noisy.values.len(), prior.mean.len())?;
    if noisy.alpha_bar == 1.0 {
        return Ok(noisy.values.clone());
    }
    Ok(noisy
        .values
        .iter()
        .zip(&prior.mean)
        .map(|(&z, &mu)| gaussian_posterior_mean(mu, prior.sigma, z, noisy.alpha_bar))
        .collect())
}

impl Denoiser for GaussianPrior {
    fn denoise(&self, _guide: &Grid, noisy: &NoisyLatent) -> Result<Vec<f64>> {
        denoise_gaussian_posterior(self, noisy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub sigma: f64,
}

/// Per-pixel scalar Gaussian mixture prior shared by every pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePrior {
    components: Vec<MixtureComponent>,
}

impl MixturePrior {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty("mixture components"));
        }
        for c in &components {
            if !(c.weight.is_finite() && c.weight > 0.0) {
                return Err(Error::invalid("weight", "mixture weights must be > 0"));
            }
            if !(c.sigma.is_finite() && c.sigma >= 0.0) {
                return Err(Error::invalid("sigma", "component sigma must be >= 0"));
            }
            if !c.mean.is_finite() {
                return Err(Error::NonFinite("component mean"));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "weight",
                format!("mixture weights must sum to 1, got {total}"),
            ));
        }
        Ok(Self { components })
    }

    /// Equal-weight mixture over the given means.
    pub fn uniform(means: &[f64], sigma: f64) -> Result<Self> {
        let w = 1.0 / means.len().max(1) as f64;
        let mut comps: Vec<MixtureComponent> = means
            .iter()
            .map(|&mean| MixtureComponent {
                weight: w,
                mean,
                sigma,
            })
            .collect();
        // absorb rounding so the weights sum to one within tolerance
        let total: f64 = comps.iter().map(|c| c.weight).sum();
        if let Some(last) = comps.last_mut() {
            last.weight += 1.0 - total;
        }
        Self::new(comps)
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    fn posterior_mean_at(&self, z_t: f64, alpha_bar: f64, log_r: &mut Vec<f64>) -> f64 {
        let s = alpha_bar.sqrt();
        log_r.clear();
        for c in &self.components {
            let var = alpha_bar * c.sigma * c.sigma + 1.0 - alpha_bar;
            let d = z_t - s * c.mean;
            log_r.push(c.weight.ln() - 0.5 * var.ln() - 0.5 * d * d / var);
        }
        let max = log_r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut norm = 0.0;
        let mut acc = 0.0;
        for (c, lr) in self.components.iter().zip(log_r.iter()) {
            let r = (lr - max).exp();
            norm += r;
            acc += r * gaussian_posterior_mean(c.mean, c.sigma, z_t, alpha_bar);
        }
        acc / norm
    }
}

/// Posterior mean under a [`MixturePrior`]: responsibilities are computed in
/// log space from each component's marginal likelihood of `z_t`, then used
/// to weight the per-component Gaussian posterior means.
pub fn denoise_mixture_posterior(prior: &MixturePrior, noisy: &NoisyLatent) -> Result<Vec<f64>> {
    check_alpha_bar(noisy.alpha_bar)?;
    if noisy.alpha_bar == 1.0 {
        return Ok(noisy.values.clone());
    }
    let mut scratch = Vec::with_capacity(prior.components.len());
    Ok(noisy
        .values
        .iter()
        .map(|&z| prior.posterior_mean_at(z, noisy.alpha_bar, &mut scratch))
        .collect())
}

impl Denoiser for MixturePrior {
    fn denoise(&self, _guide: &Grid, noisy: &NoisyLatent) -> Result<Vec<f64>> {
        denoise_mixture_posterior(self, noisy)
    }
}

/// Mixture prior over depths that are constant across guide-homogeneous
/// neighbourhoods. The noisy latent is first averaged with joint-bilateral
/// weights (spatial width `radius/2`, range width `range_fraction` of the
/// guide's dynamic range) and the exact mixture posterior is then taken for
/// that pooled observation, whose noise variance shrinks by the effective
/// sample count `(Σa)²/Σa²`. With `radius = 0` this is
/// [`denoise_mixture_posterior`].
#[derive(Debug, Clone, PartialEq)]
pub struct GuidedMixturePrior {
    prior: MixturePrior,
    radius: usize,
    range_fraction: f64,
}

impl GuidedMixturePrior {
    pub fn new(prior: MixturePrior, radius: usize, range_fraction: f64) -> Result<Self> {
        if !(range_fraction.is_finite() && range_fraction > 0.0) {
            return Err(Error::invalid("range_fraction", "must be > 0"));
        }
        Ok(Self {
            prior,
            radius,
            range_fraction,
        })
    }

    pub fn prior(&self) -> &MixturePrior {
        &self.prior
    }

    pub fn radius(&self) -> usize {
        self.radius
    }
}

pub fn denoise_guided_mixture(
    model: &GuidedMixturePrior,
    guide: &Grid,
    noisy: &NoisyLatent,
) -> Result<Vec<f64>> {
    check_alpha_bar(noisy.alpha_bar)?;
    guide.same_shape(noisy.width, noisy.height)?;
    check_len(noisy.width * noisy.height, noisy.values.len())?;
    let ab = noisy.alpha_bar;
    if ab == 1.0 {
        return Ok(noisy.values.clone());
    }
    let (w, h) = (noisy.width, noisy.height);
    let r = model.radius as isize;
    let sigma_s = model.radius as f64 / 2.0;
    let spatial: Vec<f64> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .map(|(dx, dy)| {
            if r == 0 {
                1.0
            } else {
                (-((dx * dx + dy * dy) as f64) / (2.0 * sigma_s * sigma_s)).exp()
            }
        })
        .collect();
    let (lo, hi) = guide.min_max();
    let sigma_r = model.range_fraction * (hi - lo);
    let range_denom = 2.0 * sigma_r * sigma_r;
    let s = ab.sqrt();
    let comps = &model.prior.components;
    let mut log_r = Vec::with_capacity(comps.len());
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gi = guide.get(x as usize, y as usize);
            let (mut sa, mut sa2, mut sz) = (0.0, 0.0, 0.0);
            let mut k = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (xx, yy) = (x + dx, y + dy);
                    let ws = spatial[k];
                    k += 1;
                    if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
                        continue;
                    }
                    let j = yy as usize * w + xx as usize;
                    let mut a = ws;
                    if range_denom > 0.0 {
                        let dg = gi - guide.data()[j];
                        a *= (-(dg * dg) / range_denom).exp();
                    }
                    sa += a;
                    sa2 += a * a;
                    sz += a * noisy.values[j];
                }
            }
            let m = sz / sa;
            let noise_var = (1.0 - ab) * sa2 / (sa * sa);
            log_r.clear();
            for c in comps {
                let var = ab * c.sigma * c.sigma + noise_var;
                let d = m - s * c.mean;
                log_r.push(c.weight.ln() - 0.5 * var.ln() - 0.5 * d * d / var);
            }
            let max = log_r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (mut norm, mut acc) = (0.0, 0.0);
            for (c, lr) in comps.iter().zip(&log_r) {
                let weight = (lr - max).exp();
                let var = c.sigma * c.sigma;
                let gain = s * var / (ab * var + noise_var);
                norm += weight;
                acc += weight * (c.mean + gain * (m - s * c.mean));
            }
            out.push(acc / norm);
        }
    }
    Ok(out)
}

impl Denoiser for GuidedMixturePrior {
    fn denoise(&self, guide: &Grid, noisy: &NoisyLatent) -> Result<Vec<f64>> {
        denoise_guided_mixture(self, guide, noisy)
    }
}

/// Maps depth fields to latents and back.
pub trait LatentCodec: Send + Sync {
    fn encode(&self, depth: &DepthField) -> Vec<f64>;
    fn decode(&self, latent: &[f64], width: usize, height: usize) -> Result<DepthField>;
}

/// Latent space equals depth space, in meters.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityCodec;

impl LatentCodec for IdentityCodec {
    fn encode(&self, depth: &DepthField) -> Vec<f64> {
        depth.values().to_vec()
    }

    fn decode(&self, latent: &[f64], width: usize, height: usize) -> Result<DepthField> {
        DepthField::from_values_clamped(width, height, latent.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn selection(alpha_bar: f64) -> Selection {
        Selection {
            target_alpha: alpha_bar,
            timestep: 1,
            alpha_bar,
        }
    }

    fn noisy(values: Vec<f64>, alpha_bar: f64) -> NoisyLatent {
        let n = values.len();
        NoisyLatent {
            width: n,
            height: 1,
            values,
            timestep: 1,
            alpha_bar,
            mean_scale: vec![0.0; n],
            noise_scale: vec![1.0; n],
            seed: 0,
        }
    }

    #[test]
    fn guided_mixture_without_pooling_is_pointwise() {
        let prior = MixturePrior::uniform(&[1.0, 4.0], 0.3).unwrap();
        let guided = GuidedMixturePrior::new(prior.clone(), 0, 0.1).unwrap();
        let nz = noisy(vec![-0.5, 0.3, 1.1, 2.0, 3.7], 0.4);
        let guide = Grid::from_fn(5, 1, |x, _| x as f64).unwrap();
        let a = denoise_guided_mixture(&guided, &guide, &nz).unwrap();
        let b = denoise_mixture_posterior(&prior, &nz).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn guided_mixture_pools_within_guide_regions() {
        // left half at one level, right half at the other; noise-free latent
        let prior = MixturePrior::uniform(&[1.0, 5.0], 0.05).unwrap();
        let guided = GuidedMixturePrior::new(prior, 3, 0.1).unwrap();
        let ab: f64 = 0.5;
        let vals: Vec<f64> = (0..16)
            .map(|i| {
                if i % 8 < 4 {
                    ab.sqrt()
                } else {
                    5.0 * ab.sqrt()
                }
            })
            .collect();
        let guide = Grid::from_fn(8, 2, |x, _| if x < 4 { 0.0 } else { 1.0 }).unwrap();
        let nz = NoisyLatent {
            width: 8,
            height: 2,
            ..noisy(vals, ab)
        };
        let out = denoise_guided_mixture(&guided, &guide, &nz).unwrap();
        for (i, v) in out.iter().enumerate() {
            let want = if i % 8 < 4 { 1.0 } else { 5.0 };
            assert!((v - want).abs() < 1e-6, "{i}: {v}");
        }
    }

    #[test]
    fn scales_at_noiseless_endpoint() {
        let s = mean_and_noise_scales(&[1.0, 2.0], &[0.0, 0.0], 1.0).unwrap();
        assert_eq!(s.mean, vec![1.0, 2.0]);
        assert_eq!(s.noise, vec![0.0, 0.0]);
    }

    #[test]
    fn scales_prior_limit() {
        let s = mean_and_noise_scales(&[3.0], &[0.4], 1e-14).unwrap();
        assert!(s.mean[0].abs() < 1e-6);
        assert_relative_eq!(s.noise[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scales_reject_mismatch() {
        assert!(mean_and_noise_scales(&[1.0, 2.0], &[0.1], 0.5).is_err());
        assert!(mean_and_noise_scales(&[1.0], &[0.1], 0.0).is_err());
    }

    #[test]
    fn zero_noise_and_pure_noise() {
        let scales = Scales {
            mean: vec![1.0, 2.0],
            noise: vec![0.3, 0.4],
        };
        let eps = NoiseField {
            values: vec![0.0, 0.0],
            seed: 1,
        };
        let n = inject_noise(2, 1, scales, &eps, &selection(0.5)).unwrap();
        assert_eq!(n.values, vec![1.0, 2.0]);
        assert_eq!(n.seed, 1);

        let scales = Scales {
            mean: vec![0.0, 0.0],
            noise: vec![1.0, 1.0],
        };
        let eps = NoiseField {
            values: vec![0.7, -1.2],
            seed: 2,
        };
        let n = inject_noise(2, 1, scales, &eps, &selection(0.5)).unwrap();
        assert_eq!(n.values, vec![0.7, -1.2]);
    }

    #[test]
    fn inject_rejects_bad_epsilon() {
        let scales = Scales {
            mean: vec![0.0],
            noise: vec![1.0],
        };
        let eps = NoiseField {
            values: vec![f64::NAN],
            seed: 0,
        };
        assert!(inject_noise(1, 1, scales.clone(), &eps, &selection(0.5)).is_err());
        let eps = NoiseField {
            values: vec![0.0, 0.0],
            seed: 0,
        };
        assert!(inject_noise(1, 1, scales, &eps, &selection(0.5)).is_err());
    }

    #[test]
    fn kappa_zero_is_plain_gaussian() {
        let guide = Grid::from_fn(16, 16, |x, y| ((x * 7 + y * 3) % 5) as f64).unwrap();
        let scales = mean_and_noise_scales(&[1.0; 256], &[0.1; 256], 0.5).unwrap();
        let cfg = ProposalConfig {
            kappa: 0.0,
            ..ProposalConfig::default()
        };
        let a = noise_proposal(&guide, &scales, &cfg, 77).unwrap();
        let b = gaussian_noise(256, 77);
        assert_eq!(
            a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn constant_guide_contributes_nothing() {
        let guide = Grid::filled(16, 16, 0.42).unwrap();
        let scales = mean_and_noise_scales(&[1.0; 256], &[0.1; 256], 0.5).unwrap();
        let a = noise_proposal(&guide, &scales, &ProposalConfig::default(), 5).unwrap();
        assert_eq!(a, gaussian_noise(256, 5));
    }

    #[test]
    fn gaussian_denoiser_edge_cases() {
        let prior = GaussianPrior::new(vec![2.0, 2.0], 0.5).unwrap();
        let n = noisy(vec![1.3, -0.4], 1.0);
        assert_eq!(
            denoise_gaussian_posterior(&prior, &n).unwrap(),
            vec![1.3, -0.4]
        );
        let degenerate = GaussianPrior::new(vec![2.0, -1.0], 0.0).unwrap();
        let n = noisy(vec![5.0, 9.0], 0.3);
        assert_eq!(
            denoise_gaussian_posterior(&degenerate, &n).unwrap(),
            vec![2.0, -1.0]
        );
    }

    #[test]
    fn mixture_symmetry_and_reduction() {
        let prior = MixturePrior::uniform(&[-1.0, 1.0], 0.2).unwrap();
        let n = noisy(vec![0.0], 0.6);
        assert_eq!(denoise_mixture_posterior(&prior, &n).unwrap(), vec![0.0]);

        let single = MixturePrior::new(vec![MixtureComponent {
            weight: 1.0,
            mean: 1.5,
            sigma: 0.3,
        }])
        .unwrap();
        let g = GaussianPrior::new(vec![1.5; 3], 0.3).unwrap();
        let n = noisy(vec![-0.2, 0.9, 2.4], 0.45);
        let a = denoise_mixture_posterior(&single, &n).unwrap();
        let b = denoise_gaussian_posterior(&g, &n).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixture_survives_underflow() {
        let prior = MixturePrior::uniform(&[-50.0, 50.0], 0.01).unwrap();
        let n = noisy(vec![40.0], 0.999_999);
        let out = denoise_mixture_posterior(&prior, &n).unwrap();
        assert!(out[0].is_finite());
        assert!((out[0] - 50.0).abs() < 10.0);
    }

    #[test]
    fn mixture_validation() {
        assert!(MixturePrior::new(vec![]).is_err());
        let bad = MixtureComponent {
            weight: 0.6,
            mean: 0.0,
            sigma: 1.0,
        };
        assert!(MixturePrior::new(vec![bad, bad]).is_err());
        let neg = MixtureComponent {
            weight: -0.5,
            mean: 0.0,
            sigma: 1.0,
        };
        assert!(MixturePrior::new(vec![neg]).is_err());
    }

    #[test]
    fn identity_codec_round_trip() {
        let d = DepthField::from_values(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let z = IdentityCodec.encode(&d);
        assert_eq!(IdentityCodec.decode(&z, 2, 2).unwrap(), d);
    }
}
