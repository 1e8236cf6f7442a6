//! Depth metrics and the sampling-stage reconstruction losses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{check_shape, DepthField};

/// Ratio threshold of the δ metric.
pub const DELTA_THRESHOLD: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scene: String,
    pub rmse: f64,
    pub mae: f64,
    pub delta_105: f64,
    pub valid_count: usize,
    /// Ground-truth-valid pixels dropped because the prediction was not finite.
    pub nonfinite_pred: usize,
    pub config_hash: String,
}

/// RMSE, MAE and δ₁.₀₅ over ground-truth-valid pixels with a finite prediction.
pub fn compute_metrics(pred: &DepthField, gt: &DepthField) -> Result<MetricReport> {
    check_shape(pred.width(), pred.height(), gt.width(), gt.height())?;
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut hits = 0usize;
    let mut count = 0usize;
    let mut nonfinite = 0usize;
    for i in 0..gt.len() {
        if !gt.valid()[i] {
            continue;
        }
        let (p, g) = (pred.values()[i], gt.values()[i]);
        if !p.is_finite() {
            nonfinite += 1;
            continue;
        }
        let e = p - g;
        sq += e * e;
        abs += e.abs();
        if p > 0.0 && (p / g).max(g / p) < DELTA_THRESHOLD {
            hits += 1;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::Empty("no valid ground-truth pixels"));
    }
    let n = count as f64;
    let mae = abs / n;
    // the power-mean inequality can be violated by one ulp of rounding
    let rmse = (sq / n).sqrt().max(mae);
    Ok(MetricReport {
        scene: String::new(),
        rmse,
        mae,
        delta_105: hits as f64 / n,
        valid_count: count,
        nonfinite_pred: nonfinite,
        config_hash: String::new(),
    })
}

fn check_mask(len: usize, mask: &[bool]) -> Result<usize> {
    if mask.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            found: mask.len(),
        });
    }
    let n = mask.iter().filter(|&&m| m).count();
    if n == 0 {
        return Err(Error::Empty("loss mask"));
    }
    Ok(n)
}

/// Mean squared latent error plus mean absolute depth error over `mask`.
pub fn rec_loss(
    z_hat: &[f64],
    z_gt: &[f64],
    d_hat: &DepthField,
    d_gt: &DepthField,
    mask: &[bool],
) -> Result<f64> {
    check_shape(d_hat.width(), d_hat.height(), d_gt.width(), d_gt.height())?;
    if z_hat.len() != z_gt.len() {
        return Err(Error::DimensionMismatch {
            expected: z_gt.len(),
            found: z_hat.len(),
        });
    }
    let n = check_mask(d_gt.len(), mask)?;
    if z_hat.len() != mask.len() {
        return Err(Error::DimensionMismatch {
            expected: mask.len(),
            found: z_hat.len(),
        });
    }
    let mut latent = 0.0;
    let mut depth = 0.0;
    for i in 0..mask.len() {
        if mask[i] {
            let e = z_hat[i] - z_gt[i];
            latent += e * e;
            depth += (d_hat.values()[i] - d_gt.values()[i]).abs();
        }
    }
    Ok(latent / n as f64 + depth / n as f64)
}

/// Mean over masked pixels of `|∂x d̂ − ∂x d| + |∂y d̂ − ∂y d|` with forward
/// differences. Each axis term is averaged over the stencils whose two
/// pixels are both masked.
pub fn grad_loss(d_hat: &DepthField, d_gt: &DepthField, mask: &[bool]) -> Result<f64> {
    check_shape(d_hat.width(), d_hat.height(), d_gt.width(), d_gt.height())?;
    check_mask(d_gt.len(), mask)?;
    let (w, h) = (d_gt.width(), d_gt.height());
    let (a, b) = (d_hat.values(), d_gt.values());
    let (mut sx, mut nx, mut sy, mut ny) = (0.0, 0usize, 0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !mask[i] {
                continue;
            }
            if x + 1 < w && mask[i + 1] {
                sx += ((a[i + 1] - a[i]) - (b[i + 1] - b[i])).abs();
                nx += 1;
            }
            if y + 1 < h && mask[i + w] {
                sy += ((a[i + w] - a[i]) - (b[i + w] - b[i])).abs();
                ny += 1;
            }
        }
    }
    if nx + ny == 0 {
        return Err(Error::Empty("no complete gradient stencils"));
    }
    let mx = if nx > 0 { sx / nx as f64 } else { 0.0 };
    let my = if ny > 0 { sy / ny as f64 } else { 0.0 };
    Ok(mx + my)
}

/// Corpus summary: per-metric means weighted by valid pixel count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub scenes: usize,
    pub valid_pixels: usize,
    pub rmse: f64,
    pub mae: f64,
    pub delta_105: f64,
    /// Unweighted mean of per-scene RMSE.
    pub scene_mean_rmse: f64,
}

pub fn aggregate(reports: &[MetricReport]) -> Result<CorpusSummary> {
    if reports.is_empty() {
        return Err(Error::Empty("metric reports"));
    }
    let total: usize = reports.iter().map(|r| r.valid_count).sum();
    let wmean = |f: fn(&MetricReport) -> f64| {
        reports
            .iter()
            .map(|r| f(r) * r.valid_count as f64)
            .sum::<f64>()
            / total as f64
    };
    Ok(CorpusSummary {
        scenes: reports.len(),
        valid_pixels: total,
        rmse: wmean(|r| r.rmse),
        mae: wmean(|r| r.mae),
        delta_105: wmean(|r| r.delta_105),
        scene_mean_rmse: reports.iter().map(|r| r.rmse).sum::<f64>() / reports.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn df(v: &[f64], w: usize) -> DepthField {
        DepthField::from_values(w, v.len() / w, v.to_vec()).unwrap()
    }

    #[test]
    fn perfect_prediction() {
        let g = df(&[1.0, 2.0, 3.0, 4.0], 2);
        let r = compute_metrics(&g, &g).unwrap();
        assert_eq!((r.rmse, r.mae, r.delta_105), (0.0, 0.0, 1.0));
        assert_eq!(r.valid_count, 4);
    }

    #[test]
    fn two_pixel_example() {
        let r = compute_metrics(&df(&[1.0, 2.0], 2), &df(&[2.0, 2.0], 2)).unwrap();
        assert_relative_eq!(r.rmse, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(r.mae, 0.5);
        assert_relative_eq!(r.delta_105, 0.5);
    }

    #[test]
    fn invalid_gt_and_nonfinite_pred_are_skipped() {
        let gt = df(&[1.0, f64::NAN, 3.0], 3);
        let pred =
            DepthField::with_mask(3, 1, vec![1.0, 5.0, f64::NAN], vec![true, true, false]).unwrap();
        let r = compute_metrics(&pred, &gt).unwrap();
        assert_eq!(r.valid_count, 1);
        assert_eq!(r.nonfinite_pred, 1);
        let none = df(&[f64::NAN, f64::NAN], 2);
        assert!(compute_metrics(&none, &none).is_err());
    }

    #[test]
    fn rec_loss_examples() {
        let d = df(&[1.0, 2.0], 2);
        let z = d.values().to_vec();
        assert_eq!(rec_loss(&z, &z, &d, &d, &[true, true]).unwrap(), 0.0);
        let shifted = df(&[1.3, 2.3], 2);
        assert_relative_eq!(
            rec_loss(&z, &z, &shifted, &d, &[true, true]).unwrap(),
            0.3,
            epsilon = 1e-12
        );
    }

    #[test]
    fn grad_loss_hand_case() {
        // d̂ differs from d only at the center of a 3x3 grid by +1
        let d = df(&[1.0; 9], 3);
        let mut v = vec![1.0; 9];
        v[4] = 2.0;
        let dh = df(&v, 3);
        // x stencils: 6 total, two touch the center (|+1|, |-1|) -> 2/6
        // y stencils: same by symmetry -> 2/6
        assert_relative_eq!(
            grad_loss(&dh, &d, &[true; 9]).unwrap(),
            4.0 / 6.0,
            epsilon = 1e-15
        );
        let offset = df(&v.iter().map(|x| x + 3.0).collect::<Vec<_>>(), 3);
        assert_relative_eq!(
            grad_loss(&offset, &dh, &[true; 9]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn aggregate_weights_by_valid_count() {
        let mk = |rmse: f64, n: usize| MetricReport {
            scene: String::new(),
            rmse,
            mae: rmse,
            delta_105: 1.0,
            valid_count: n,
            nonfinite_pred: 0,
            config_hash: String::new(),
        };
        let s = aggregate(&[mk(1.0, 1), mk(4.0, 3)]).unwrap();
        assert_relative_eq!(s.rmse, 13.0 / 4.0);
        assert_relative_eq!(s.scene_mean_rmse, 2.5);
        assert!(aggregate(&[]).is_err());
    }
}
