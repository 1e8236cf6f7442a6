//! Degradation stages against brute-force references.

mod common;

use adaptive_dsr::degradation::{
    add_gaussian_noise, apply_spec, bicubic_resize, gaussian_blur, quantize, scaled_size,
    sparsify_and_fill, DegradationSpec,
};
use adaptive_dsr::DepthField;
use common::field;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(w: usize, h: usize, seed: u64) -> DepthField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    field(w, h, (0..w * h).map(|_| rng.gen_range(1.0..9.0)).collect())
}

/// Dense 2-D normalized convolution with a Gaussian kernel, edge clamping,
/// and masked taps.
fn blur_reference(f: &DepthField, size: usize, sigma: f64) -> Vec<f64> {
    let (w, h) = (f.width() as isize, f.height() as isize);
    let r = (size / 2) as isize;
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !f.valid()[(y * w + x) as usize] {
                out.push(f64::NAN);
                continue;
            }
            let (mut num, mut den) = (0.0, 0.0);
            for dy in -r..=r {
                for dx in -r..=r {
                    let xx = (x + dx).clamp(0, w - 1);
                    let yy = (y + dy).clamp(0, h - 1);
                    let j = (yy * w + xx) as usize;
                    let k = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                    if f.valid()[j] {
                        num += k * f.values()[j];
                        den += k;
                    }
                }
            }
            out.push(num / den);
        }
    }
    out
}

#[test]
fn blur_matches_dense_convolution() {
    let f = random_field(23, 17, 1);
    for (size, sigma) in [(3, 0.5), (5, 1.2), (7, 2.0)] {
        let got = gaussian_blur(&f, size, sigma).unwrap();
        for (a, b) in got.values().iter().zip(blur_reference(&f, size, sigma)) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn blur_with_holes_matches_masked_convolution() {
    let base = random_field(20, 20, 2);
    let values: Vec<f64> = base
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 7 == 3 { f64::NAN } else { *v })
        .collect();
    let f = field(20, 20, values);
    let got = gaussian_blur(&f, 5, 1.0).unwrap();
    for (i, (a, b)) in got
        .values()
        .iter()
        .zip(blur_reference(&f, 5, 1.0))
        .enumerate()
    {
        if f.valid()[i] {
            assert!((a - b).abs() < 1e-12);
        } else {
            assert!(!got.valid()[i]);
        }
    }
}

/// The three nearest survivors by exhaustive search, ties by index.
fn nearest3(survivors: &[bool], w: usize, i: usize) -> Vec<usize> {
    let (x, y) = ((i % w) as isize, (i / w) as isize);
    let mut d: Vec<(isize, usize)> = (0..survivors.len())
        .filter(|&j| survivors[j])
        .map(|j| {
            let (dx, dy) = ((j % w) as isize - x, (j / w) as isize - y);
            (dx * dx + dy * dy, j)
        })
        .collect();
    d.sort();
    d.into_iter().take(3).map(|(_, j)| j).collect()
}

#[test]
fn sparsified_pixels_are_three_nearest_means() {
    for (seed, frac) in [(3u64, 0.3), (4, 0.6), (5, 0.05)] {
        let f = random_field(19, 13, seed);
        let out = sparsify_and_fill(&f, frac, seed).unwrap();
        let changed: Vec<bool> = f
            .values()
            .iter()
            .zip(out.values())
            .map(|(a, b)| a != b)
            .collect();
        let expected = (frac * f.len() as f64).floor() as usize;
        assert_eq!(changed.iter().filter(|&&c| c).count(), expected);
        let survivors: Vec<bool> = changed.iter().map(|c| !c).collect();
        for i in (0..f.len()).filter(|&i| changed[i]) {
            let nn = nearest3(&survivors, 19, i);
            let want = nn.iter().map(|&j| f.values()[j]).sum::<f64>() / 3.0;
            assert!((out.values()[i] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn bicubic_reproduces_linear_ramps_in_the_interior() {
    let (w, h) = (64, 48);
    let (a, bx, by) = (2.0, 0.07, -0.02);
    let f = field(
        w,
        h,
        (0..w * h)
            .map(|i| a + bx * (i % w) as f64 + by * (i / w) as f64)
            .collect(),
    );
    for (ow, oh) in [(32, 24), (16, 12), (128, 96)] {
        let out = bicubic_resize(&f, ow, oh).unwrap();
        let (sx, sy) = (w as f64 / ow as f64, h as f64 / oh as f64);
        for oy in 0..oh {
            for ox in 0..ow {
                let (u, v) = ((ox as f64 + 0.5) * sx - 0.5, (oy as f64 + 0.5) * sy - 0.5);
                if u < 2.0 || v < 2.0 || u > (w - 3) as f64 || v > (h - 3) as f64 {
                    continue;
                }
                let want = a + bx * u + by * v;
                assert!((out.get(ox, oy) - want).abs() < 1e-10, "({ox}, {oy})");
            }
        }
    }
}

#[test]
fn noise_has_configured_spread() {
    let flat = field(200, 200, vec![4.0; 40_000]);
    let noisy = add_gaussian_noise(&flat, 0.05, 11).unwrap();
    let d: Vec<f64> = noisy.values().iter().map(|v| v - 4.0).collect();
    let mean = common::sum(d.iter().copied()) / d.len() as f64;
    let std = (common::sum(d.iter().map(|v| (v - mean).powi(2))) / (d.len() - 1) as f64).sqrt();
    assert!(mean.abs() < 0.001);
    assert!((std - 0.05).abs() < 0.02 * 0.05);
}

#[test]
fn heaviest_output_size_and_validity() {
    let f = random_field(128, 128, 6);
    let out = apply_spec(&f, &DegradationSpec::heaviest(0)).unwrap();
    assert_eq!(
        (out.width(), out.height()),
        (scaled_size(128, 1.0 / 16.0), scaled_size(128, 1.0 / 16.0))
    );
    assert!(out.is_fully_valid());
}

#[test]
fn spec_digest_tracks_content() {
    let a = DegradationSpec::heaviest(1);
    assert_eq!(a.digest(), DegradationSpec::heaviest(1).digest());
    assert_ne!(a.digest(), DegradationSpec::heaviest(2).digest());
}

proptest! {
    #[test]
    fn quantization_error_is_bounded(vals in prop::collection::vec(0.01f64..50.0, 1..64), step in 0.001f64..1.0) {
        let f = field(vals.len(), 1, vals.clone());
        let q = quantize(&f, step).unwrap();
        for (v, w) in vals.iter().zip(q.values()) {
            prop_assert!((v - w).abs() <= step / 2.0 + 8.0 * f64::EPSILON * v.abs().max(1.0));
        }
        let again = quantize(&q, step).unwrap();
        for (a, b) in q.values().iter().zip(again.values()) {
            prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs());
        }
    }

    #[test]
    fn degradation_is_a_pure_function_of_its_seed(seed in any::<u64>()) {
        let f = random_field(32, 32, 9);
        let spec = DegradationSpec { downsample_factor: 4.0, ..DegradationSpec::heaviest(seed) };
        let a = apply_spec(&f, &spec).unwrap();
        let b = apply_spec(&f, &spec).unwrap();
        prop_assert_eq!(
            a.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn constant_fields_survive_resampling(c in 0.5f64..10.0, ow in 1usize..40, oh in 1usize..40) {
        let f = field(17, 11, vec![c; 17 * 11]);
        let out = bicubic_resize(&f, ow, oh).unwrap();
        for v in out.values() {
            prop_assert!((v - c).abs() < 1e-12 * c);
        }
    }
}
