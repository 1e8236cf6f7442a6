//! The closed-form denoisers on a single noisy observation, swept over the
//! noise level.
//!
//! `cargo run --example denoise_oracles`

use adaptive_dsr::sampling::{
    denoise_gaussian_posterior, denoise_mixture_posterior, GaussianPrior, MixturePrior, NoisyLatent,
};

fn latent(value: f64, alpha_bar: f64) -> NoisyLatent {
    NoisyLatent {
        width: 1,
        height: 1,
        values: vec![value],
        timestep: 0,
        alpha_bar,
        mean_scale: vec![0.0],
        noise_scale: vec![1.0],
        seed: 0,
    }
}

fn main() -> anyhow::Result<()> {
    let gaussian = GaussianPrior::new(vec![4.0], 1.0)?;
    let mixture = MixturePrior::uniform(&[1.5, 7.5], 0.1)?;
    // observation of a clean value of 6.0 at zero noise draw
    let clean = 6.0;
    println!(
        "{:>10} {:>10} {:>12} {:>12}",
        "alpha_bar", "z_t", "gaussian", "mixture"
    );
    for ab in [0.99, 0.9, 0.5, 0.1, 0.01, 0.001] {
        let z_t = f64::sqrt(ab) * clean;
        let g = denoise_gaussian_posterior(&gaussian, &latent(z_t, ab))?[0];
        let m = denoise_mixture_posterior(&mixture, &latent(z_t, ab))?[0];
        println!("{ab:>10} {z_t:>10.4} {g:>12.4} {m:>12.4}");
    }
    let symmetric = MixturePrior::uniform(&[-1.0, 1.0], 0.3)?;
    println!(
        "symmetric modes at z_t = 0: {}",
        denoise_mixture_posterior(&symmetric, &latent(0.0, 0.5))?[0]
    );
    Ok(())
}
