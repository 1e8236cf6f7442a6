//! Isotropic Gaussian algebra for forward marginals, 2-Wasserstein
//! distances, and the fidelity/alignment objective
//! `H(ᾱ) = √ᾱ · exp(−λ·ω·√ᾱ)` with its closed-form maximizer.

use crate::error::{ensure_finite, Error, Result};

/// Exponent magnitude above which `H` is evaluated through its logarithm.
const LOG_SPACE_THRESHOLD: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicGaussian {
    mean: Vec<f64>,
    sigma: f64,
}

impl IsotropicGaussian {
    pub fn new(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::Empty("gaussian mean"));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gaussian mean"));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid(
                "sigma",
                format!("must be finite and >= 0, got {sigma}"),
            ));
        }
        Ok(Self { mean, sigma })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Weight `λ` on the distance term and distance scale `ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffParams {
    lambda: f64,
    omega: f64,
}

impl TradeoffParams {
    pub fn new(lambda: f64, omega: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(
                "lambda",
                format!("must be > 0, got {lambda}"),
            ));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::invalid("omega", format!("must be > 0, got {omega}")));
        }
        Ok(Self { lambda, omega })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// The product `λω` that fully determines the shape of `H`.
    pub fn rate(&self) -> f64 {
        self.lambda * self.omega
    }
}

pub(crate) fn check_alpha_bar(alpha_bar: f64) -> Result<f64> {
    if alpha_bar.is_finite() && alpha_bar > 0.0 && alpha_bar <= 1.0 {
        Ok(alpha_bar)
    } else {
        Err(Error::invalid(
            "alpha_bar",
            format!("must lie in (0, 1], got {alpha_bar}"),
        ))
    }
}

/// Forward marginal of a signal known up to an isotropic error `sigma0`:
/// `N(√ᾱ·z0, (ᾱ·σ0² + 1 − ᾱ) I)`. With `sigma0 = 0` this is the exact
/// forward marginal of a clean signal.
pub fn forward_marginal(z0: &[f64], sigma0: f64, alpha_bar: f64) -> Result<IsotropicGaussian> {
    check_alpha_bar(alpha_bar)?;
    if !(sigma0.is_finite() && sigma0 >= 0.0) {
        return Err(Error::invalid(
            "sigma0",
            format!("must be finite and >= 0, got {sigma0}"),
        ));
    }
    if z0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("z0"));
    }
    let scale = alpha_bar.sqrt();
    let mean = z0.iter().map(|v| scale * v).collect();
    let sigma = (alpha_bar * sigma0 * sigma0 + (1.0 - alpha_bar)).sqrt();
    IsotropicGaussian::new(mean, sigma)
}

/// Closed-form 2-Wasserstein distance between isotropic Gaussians:
/// `√(‖μp − μq‖² + d·(σp − σq)²)`.
pub fn wasserstein2_exact(p: &IsotropicGaussian, q: &IsotropicGaussian) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    let mean_sq: f64 = p
        .mean
        .iter()
        .zip(&q.mean)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let ds = p.sigma - q.sigma;
    Ok((mean_sq + p.dim() as f64 * ds * ds).sqrt())
}

/// Mean-only part of [`wasserstein2_exact`], `‖μp − μq‖`.
pub fn wasserstein2_mean_term(p: &IsotropicGaussian, q: &IsotropicGaussian) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok(p.mean
        .iter()
        .zip(&q.mean)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Surrogate distance `√ᾱ·ω` that drives timestep selection. It omits the
/// dimension factor on the variance term and upper-bounds the exact
/// variance contribution.
pub fn wasserstein2_surrogate(alpha_bar: f64, omega: f64) -> Result<f64> {
    check_alpha_bar(alpha_bar)?;
    ensure_finite("omega", omega)?;
    if omega < 0.0 {
        return Err(Error::invalid("omega", "must be >= 0"));
    }
    Ok(alpha_bar.sqrt() * omega)
}

/// `ln H(ᾱ) = ½ ln ᾱ − λω√ᾱ`.
pub fn log_h_objective(alpha_bar: f64, params: TradeoffParams) -> Result<f64> {
    check_alpha_bar(alpha_bar)?;
    let s = alpha_bar.sqrt();
    Ok(0.5 * alpha_bar.ln() - params.rate() * s)
}

/// `H(ᾱ) = √ᾱ · exp(−λω√ᾱ)`.
pub fn h_objective(alpha_bar: f64, params: TradeoffParams) -> Result<f64> {
    check_alpha_bar(alpha_bar)?;
    let s = alpha_bar.sqrt();
    let exponent = params.rate() * s;
    if exponent > LOG_SPACE_THRESHOLD {
        Ok(log_h_objective(alpha_bar, params)?.exp())
    } else {
        Ok(s * (-exponent).exp())
    }
}

/// Maximizer of `H` on (0, 1]: the critical point `1/(λω)²`, or the
/// boundary 1 when `λω ≤ 1` (H is increasing on the whole interval).
pub fn h_maximizer(params: TradeoffParams) -> f64 {
    let rate = params.rate();
    if rate <= 1.0 {
        1.0
    } else {
        (1.0 / (rate * rate)).min(1.0)
    }
}

/// Derivative `dH/dᾱ = exp(−λω√ᾱ)/(2√ᾱ) · (1 − λω√ᾱ)`.
pub fn h_derivative(alpha_bar: f64, params: TradeoffParams) -> Result<f64> {
    check_alpha_bar(alpha_bar)?;
    let s = alpha_bar.sqrt();
    let r = params.rate();
    Ok((-r * s).exp() / (2.0 * s) * (1.0 - r * s))
}
