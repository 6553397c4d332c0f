use ndarray::Array2;

use crate::error::{Error, Result};
use crate::lightfield::SceneMeta;
use crate::maps::DisparityMap;

fn check_dims(a: &DisparityMap, b: &DisparityMap) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: (b.width(), b.height()),
            found: (a.width(), a.height()),
        });
    }
    Ok(())
}

/// Mean squared difference over pixels valid in both maps.
pub fn mse(pred: &DisparityMap, gt: &DisparityMap) -> Result<f64> {
    check_dims(pred, gt)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if let (Some(p), Some(g)) = (pred.get(x, y), gt.get(x, y)) {
                sum += (p - g) * (p - g);
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::invalid("no pixel is valid in both maps"));
    }
    Ok(sum / n as f64)
}

/// `10 log10(max_i² / mse)`; `+∞` for a perfect match.
pub fn psnr_from_mse(mse: f64, max_i: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max_i * max_i / mse).log10()
    }
}

pub fn psnr(pred: &DisparityMap, gt: &DisparityMap, max_i: f64) -> Result<f64> {
    if !(max_i > 0.0) {
        return Err(Error::invalid("max_I must be positive"));
    }
    Ok(psnr_from_mse(mse(pred, gt)?, max_i))
}

/// `|pred - gt|` where both are valid, `NaN` elsewhere.
pub fn error_map(pred: &DisparityMap, gt: &DisparityMap) -> Result<Array2<f64>> {
    check_dims(pred, gt)?;
    Ok(Array2::from_shape_fn(gt.dim(), |(y, x)| {
        match (pred.get(x, y), gt.get(x, y)) {
            (Some(p), Some(g)) => (p - g).abs(),
            _ => f64::NAN,
        }
    }))
}

/// Depth in scene units from disparity.
#[derive(Debug, Clone)]
pub struct DepthMap {
    pub depth: DisparityMap,
    /// Valid pixels with negative depth (points in front of the focal plane
    /// convention); they are kept, not clipped.
    pub negative_count: usize,
}

/// `Z = f b / d`. Pixels with `|d| < 1e-9` are invalid (depth at infinity).
pub fn disparity_to_depth(d: &DisparityMap, meta: &SceneMeta) -> DepthMap {
    let fb = meta.focal_length_px * meta.baseline;
    let (h, w) = d.dim();
    let mut values = Array2::from_elem((h, w), f64::NAN);
    let mut valid = Array2::from_elem((h, w), false);
    let mut negative_count = 0;
    for y in 0..h {
        for x in 0..w {
            if let Some(v) = d.get(x, y).filter(|v| v.abs() >= 1e-9) {
                let z = fb / v;
                negative_count += usize::from(z < 0.0);
                values[[y, x]] = z;
                valid[[y, x]] = true;
            }
        }
    }
    if negative_count > 0 {
        log::warn!("{negative_count} pixels have negative depth (negative disparity)");
    }
    DepthMap {
        depth: DisparityMap::new(values, valid).expect("same shape"),
        negative_count,
    }
}
