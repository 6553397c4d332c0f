use ndarray::{Array2, Array3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maps::DisparityMap;

/// Joint bilateral filter of `d` guided by `guide` (`height × width ×
/// channels`). Weights are a spatial Gaussian times a Gaussian in guide
/// distance, over valid pixels of the `ceil(3 σs)` window clipped to the
/// image. Invalid pixels receive the weighted mean of their valid
/// neighbours when any weight is positive.
pub fn bilateral_filter(
    d: &DisparityMap,
    guide: &Array3<f64>,
    sigma_s: f64,
    sigma_r: f64,
) -> Result<DisparityMap> {
    if !(sigma_s > 0.0 && sigma_r > 0.0) {
        return Err(Error::invalid("bilateral sigmas must be positive"));
    }
    let (h, w) = d.dim();
    let (gh, gw, channels) = guide.dim();
    if (gh, gw) != (h, w) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            found: (gw, gh),
        });
    }
    let radius = (3.0 * sigma_s).ceil() as isize;
    let spatial: Vec<f64> = (-radius..=radius)
        .map(|t| (-(t * t) as f64 / (2.0 * sigma_s * sigma_s)).exp())
        .collect();
    let range_scale = 1.0 / (2.0 * sigma_r * sigma_r);

    let rows: Vec<Vec<Option<f64>>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    let center = d.get(x, y);
                    let base = center.unwrap_or(0.0);
                    let (mut wsum, mut acc) = (0.0, 0.0);
                    for dy in -radius..=radius {
                        let yy = y as isize + dy;
                        if yy < 0 || yy >= h as isize {
                            continue;
                        }
                        let yy = yy as usize;
                        for dx in -radius..=radius {
                            let xx = x as isize + dx;
                            if xx < 0 || xx >= w as isize {
                                continue;
                            }
                            let xx = xx as usize;
                            let Some(q) = d.get(xx, yy) else { continue };
                            let mut dist2 = 0.0;
                            for c in 0..channels {
                                let diff = guide[[y, x, c]] - guide[[yy, xx, c]];
                                dist2 += diff * diff;
                            }
                            let wt = spatial[(dy + radius) as usize]
                                * spatial[(dx + radius) as usize]
                                * (-dist2 * range_scale).exp();
                            wsum += wt;
                            acc += wt * (q - base);
                        }
                    }
                    if wsum > 0.0 {
                        Some(base + acc / wsum)
                    } else {
                        center
                    }
                })
                .collect()
        })
        .collect();

    let mut values = Array2::from_elem((h, w), f64::NAN);
    let mut valid = Array2::from_elem((h, w), false);
    for (y, row) in rows.into_iter().enumerate() {
        for (x, v) in row.into_iter().enumerate() {
            if let Some(v) = v {
                values[[y, x]] = v;
                valid[[y, x]] = true;
            }
        }
    }
    DisparityMap::new(values, valid)
}
