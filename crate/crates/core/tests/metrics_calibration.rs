//! Metrics, losses and calibration against serial compensated sums and
//! brute-force window statistics.

mod common;

use adaptive_dsr::calibration::{
    calibrate, calibration_objective, coverage, fit_sigma_scale, joint_bilateral_upsample,
    l_d_loss, nll_loss, residual_statistic, scaled_sigma, CalibrationConfig, CalibrationSample,
    SIGMA_FLOOR,
};
use adaptive_dsr::degradation::{apply_spec, DegradationSpec};
use adaptive_dsr::evaluation::{aggregate, compute_metrics, grad_loss, rec_loss, MetricReport};
use adaptive_dsr::scenegen::{generate_scene, SceneSpec};
use adaptive_dsr::{DepthField, Grid};
use common::{field, sum};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn with_holes(vals: &[f64], holes: &[bool]) -> Vec<f64> {
    vals.iter()
        .zip(holes)
        .map(|(v, h)| if *h { f64::NAN } else { *v })
        .collect()
}

proptest! {
    #[test]
    fn metrics_match_compensated_sums(
        pairs in prop::collection::vec((0.1f64..20.0, 0.1f64..20.0, any::<bool>(), any::<bool>()), 1..200)
    ) {
        let n = pairs.len();
        let pred: Vec<f64> = pairs.iter().map(|p| if p.2 && p.3 { f64::NAN } else { p.0 }).collect();
        let gt: Vec<f64> = pairs.iter().map(|p| if p.2 && !p.3 { f64::NAN } else { p.1 }).collect();
        let used: Vec<usize> = (0..n).filter(|&i| gt[i].is_finite() && pred[i].is_finite()).collect();
        let r = compute_metrics(&field(n, 1, pred.clone()), &field(n, 1, gt.clone()));
        if used.is_empty() {
            prop_assert!(r.is_err());
            return Ok(());
        }
        let r = r.unwrap();
        let m = used.len() as f64;
        let rmse = (sum(used.iter().map(|&i| (pred[i] - gt[i]).powi(2))) / m).sqrt();
        let mae = sum(used.iter().map(|&i| (pred[i] - gt[i]).abs())) / m;
        let delta = used.iter().filter(|&&i| (pred[i] / gt[i]).max(gt[i] / pred[i]) < 1.05).count() as f64 / m;
        prop_assert!((r.rmse - rmse).abs() <= 1e-12 * (1.0 + rmse));
        prop_assert!((r.mae - mae).abs() <= 1e-12 * (1.0 + mae));
        prop_assert_eq!(r.delta_105, delta);
        prop_assert_eq!(r.valid_count, used.len());
        prop_assert!(r.rmse >= r.mae);
        let gt_valid = (0..n).filter(|&i| gt[i].is_finite()).count();
        prop_assert_eq!(r.nonfinite_pred, gt_valid - used.len());
    }

    #[test]
    fn delta_is_scale_invariant(vals in prop::collection::vec((0.5f64..10.0, 0.8f64..1.2), 1..100), k in 0.01f64..100.0) {
        let n = vals.len();
        let p: Vec<f64> = vals.iter().map(|v| v.0).collect();
        let g: Vec<f64> = vals.iter().map(|v| v.0 * v.1).collect();
        let a = compute_metrics(&field(n, 1, p.clone()), &field(n, 1, g.clone())).unwrap();
        let b = compute_metrics(
            &field(n, 1, p.iter().map(|v| v * k).collect()),
            &field(n, 1, g.iter().map(|v| v * k).collect()),
        ).unwrap();
        prop_assert_eq!(a.delta_105, b.delta_105);
    }

    #[test]
    fn nll_matches_serial_sum(vals in prop::collection::vec((0.5f64..5.0, -0.4f64..1.0, 0.01f64..2.0), 1..100)) {
        let n = vals.len();
        let gt: Vec<f64> = vals.iter().map(|v| v.0).collect();
        let z: Vec<f64> = vals.iter().map(|v| v.0 + v.1).collect();
        let s: Vec<f64> = vals.iter().map(|v| v.2).collect();
        let want = sum(vals.iter().map(|v| (v.2 * v.2).ln() + v.1 * v.1 / (v.2 * v.2))) / n as f64;
        let got = nll_loss(&field(n, 1, z), &Grid::new(n, 1, s).unwrap(), &field(n, 1, gt)).unwrap();
        prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()));
    }
}

#[test]
fn losses_match_direct_definitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (w, h) = (13, 9);
    let n = w * h;
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..5.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..5.0)).collect();
    let za: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let zb: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
    let (fa, fb) = (field(w, h, a.clone()), field(w, h, b.clone()));
    let idx: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    let m = idx.len() as f64;

    let l1 = sum(idx.iter().map(|&i| (a[i] - b[i]).abs())) / m;
    assert!((l_d_loss(&fa, &fb, &mask).unwrap() - l1).abs() < 1e-13);

    let want_rec = sum(idx.iter().map(|&i| (za[i] - zb[i]).powi(2))) / m + l1;
    assert!((rec_loss(&za, &zb, &fa, &fb, &mask).unwrap() - want_rec).abs() < 1e-13);

    let mut gx = Vec::new();
    let mut gy = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w && mask[i] && mask[i + 1] {
                gx.push(((a[i + 1] - a[i]) - (b[i + 1] - b[i])).abs());
            }
            if y + 1 < h && mask[i] && mask[i + w] {
                gy.push(((a[i + w] - a[i]) - (b[i + w] - b[i])).abs());
            }
        }
    }
    let want_grad =
        sum(gx.iter().copied()) / gx.len() as f64 + sum(gy.iter().copied()) / gy.len() as f64;
    assert!((grad_loss(&fa, &fb, &mask).unwrap() - want_grad).abs() < 1e-13);
}

#[test]
fn aggregate_pools_pixels() {
    let r = |rmse: f64, mae: f64, n: usize| MetricReport {
        scene: String::new(),
        rmse,
        mae,
        delta_105: 0.5,
        valid_count: n,
        nonfinite_pred: 0,
        config_hash: String::new(),
    };
    let s = aggregate(&[r(1.0, 0.5, 100), r(3.0, 1.0, 300)]).unwrap();
    assert!((s.rmse - 2.5).abs() < 1e-15);
    assert!((s.mae - 0.875).abs() < 1e-15);
    assert!((s.scene_mean_rmse - 2.0).abs() < 1e-15);
    assert_eq!(s.valid_pixels, 400);
}

#[test]
fn residual_statistic_matches_brute_force_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (w, h) = (15, 11);
    let a = field(w, h, (0..w * h).map(|_| rng.gen_range(1.0..3.0)).collect());
    let b = field(w, h, (0..w * h).map(|_| rng.gen_range(1.0..3.0)).collect());
    for k in [0usize, 1, 3] {
        let got = residual_statistic(&a, &b, k).unwrap();
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut vals = Vec::new();
                for dy in -(k as isize)..=k as isize {
                    for dx in -(k as isize)..=k as isize {
                        let xx = (x + dx).clamp(0, w as isize - 1) as usize;
                        let yy = (y + dy).clamp(0, h as isize - 1) as usize;
                        vals.push((a.get(xx, yy) - b.get(xx, yy)).abs());
                    }
                }
                let want = sum(vals.iter().copied()) / vals.len() as f64
                    * (std::f64::consts::PI / 2.0).sqrt();
                assert!((got.get(x as usize, y as usize) - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn upsampling_at_unit_factor_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = field(12, 12, (0..144).map(|_| rng.gen_range(1.0..4.0)).collect());
    let guide = Grid::from_fn(12, 12, |x, y| ((x + 2 * y) % 5) as f64).unwrap();
    let out = joint_bilateral_upsample(&guide, &d, 0.1).unwrap();
    for (a, b) in out.values().iter().zip(d.values()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn guide_keeps_upsampled_edges_sharp() {
    // depth and guide share a vertical edge; the guided refiner should beat
    // plain bicubic on the ground truth
    let gt = field(
        64,
        64,
        (0..64 * 64)
            .map(|i| if i % 64 < 29 { 2.0 } else { 6.0 })
            .collect(),
    );
    let guide = Grid::from_fn(64, 64, |x, _| if x < 29 { 0.1 } else { 0.9 }).unwrap();
    let lr = apply_spec(&gt, &DegradationSpec::downsample_only(8.0)).unwrap();
    let out = calibrate(&guide, &lr, &CalibrationConfig::default()).unwrap();
    let jbu = compute_metrics(&out.z0_hat, &gt).unwrap().rmse;
    let plain = adaptive_dsr::degradation::bicubic_resize(&lr, 64, 64).unwrap();
    let bic = compute_metrics(&plain, &gt).unwrap().rmse;
    assert!(jbu < bic, "{jbu} vs {bic}");
}

#[test]
fn heavier_degradation_raises_uncertainty() {
    let mut larger = 0;
    for seed in 0..10 {
        let scene = generate_scene(&SceneSpec::default().with_seed(seed)).unwrap();
        let heavy = apply_spec(&scene.gt, &DegradationSpec::heaviest(seed)).unwrap();
        let light = apply_spec(&scene.gt, &DegradationSpec::downsample_only(2.0)).unwrap();
        let c = CalibrationConfig::default();
        let sh = calibrate(&scene.guide, &heavy, &c).unwrap().sigma_bar;
        let sl = calibrate(&scene.guide, &light, &c).unwrap().sigma_bar;
        larger += (sh > sl) as usize;
    }
    assert!(larger >= 9, "{larger}/10");
}

/// Residual grids equal to the true error spread, so the fitted scale
/// should come out near one.
fn gaussian_fixture(seed: u64, n: usize) -> (DepthField, Grid, DepthField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.5)).collect();
    let gt: Vec<f64> = (0..n).map(|_| rng.gen_range(2.0..6.0)).collect();
    let z: Vec<f64> = gt
        .iter()
        .zip(&sig)
        .map(|(g, s)| {
            let e: f64 = StandardNormal.sample(&mut rng);
            g + s * e
        })
        .collect();
    (
        field(n, 1, z),
        Grid::new(n, 1, sig).unwrap(),
        field(n, 1, gt),
    )
}

fn mean_nll(samples: &[CalibrationSample], c: f64) -> f64 {
    samples
        .iter()
        .map(|s| nll_loss(s.z0_hat, &scaled_sigma(s.residual, c), s.z_gt).unwrap())
        .sum::<f64>()
        / samples.len() as f64
}

#[test]
fn fitted_scale_recovers_true_spread() {
    let fixtures: Vec<_> = (0..4).map(|s| gaussian_fixture(s, 20_000)).collect();
    let samples: Vec<CalibrationSample> = fixtures
        .iter()
        .map(|(z, r, g)| CalibrationSample {
            z0_hat: z,
            residual: r,
            z_gt: g,
        })
        .collect();
    let c = fit_sigma_scale(&samples).unwrap();
    assert!((c - 1.0).abs() < 0.02, "{c}");
    let best = mean_nll(&samples, c);
    assert!(mean_nll(&samples, c / 2.0) > best);
    assert!(mean_nll(&samples, 2.0 * c) > best);
    assert!(mean_nll(&samples, c * 1.01) >= best - 1e-9);
    assert!(mean_nll(&samples, c / 1.01) >= best - 1e-9);

    // about 95% of errors fall inside two fitted standard deviations
    let (z, r, g) = &fixtures[0];
    let cov = coverage(z, &scaled_sigma(r, c), g, 2.0).unwrap();
    assert!((cov - 0.9545).abs() < 0.01, "{cov}");
}

#[test]
fn scaled_sigma_respects_floor() {
    let r = Grid::new(3, 1, vec![0.0, 1e-6, 0.5]).unwrap();
    let s = scaled_sigma(&r, 2.0);
    assert_eq!(s.data(), &[SIGMA_FLOOR, SIGMA_FLOOR, 1.0]);
}

#[test]
fn holes_in_the_input_are_filled_before_upsampling() {
    let vals: Vec<f64> = (0..64).map(|i| 3.0 + 0.01 * i as f64).collect();
    let holes: Vec<bool> = (0..64).map(|i| i % 5 == 0).collect();
    let lr = field(8, 8, with_holes(&vals, &holes));
    let guide = Grid::filled(32, 32, 0.5).unwrap();
    let out = calibrate(&guide, &lr, &CalibrationConfig::default()).unwrap();
    assert!(out.z0_hat.is_fully_valid());
    assert!(out
        .sigma0_map
        .data()
        .iter()
        .all(|s| s.is_finite() && *s >= SIGMA_FLOOR));
}

#[test]
fn combined_objective_adds_weighted_depth_term() {
    let (z, r, g) = gaussian_fixture(9, 500);
    let nll = nll_loss(&z, &r, &g).unwrap();
    let l1 = sum(z
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| (a - b).abs()))
        / 500.0;
    assert!((calibration_objective(&z, &r, &g).unwrap() - (nll + 0.5 * l1)).abs() < 1e-12);
}
