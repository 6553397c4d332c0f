//! Plane sweeping: variance-across-views cost volume, box aggregation and
//! winner-take-all selection.

use ndarray::{Array2, Array3, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lightfield::{uniform_disparities, LightField, SceneMeta};
use crate::maps::{CostVolume, DisparityMap};
use crate::sampling::Plane;
use crate::shear::view_offset;

/// Treatment of sheared samples that land outside the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BorderMode {
    /// Use the clamped (edge-replicated) sample.
    #[default]
    Clamp,
    /// Drop the sample and renormalize over the views that remain.
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams {
    pub n_disparities: usize,
    pub disparity_min: f64,
    pub disparity_max: f64,
    /// Half-size of the aggregation window (1 → 3×3, 0 → none).
    pub box_radius: usize,
    pub border: BorderMode,
}

impl SweepParams {
    /// Defaults over the disparity range of `meta`: 11 samples, 3×3 box.
    pub fn for_scene(meta: &SceneMeta) -> Self {
        SweepParams {
            n_disparities: 11,
            disparity_min: meta.disparity_min,
            disparity_max: meta.disparity_max,
            box_radius: 1,
            border: BorderMode::Clamp,
        }
    }

    pub fn with_count(mut self, n: usize) -> Self {
        self.n_disparities = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_disparities < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 disparity samples, got {}",
                self.n_disparities
            )));
        }
        if !(self.disparity_min.is_finite()
            && self.disparity_max.is_finite()
            && self.disparity_min < self.disparity_max)
        {
            return Err(Error::invalid("sweep disparity range is empty"));
        }
        Ok(())
    }

    pub fn disparities(&self) -> Vec<f64> {
        uniform_disparities(self.disparity_min, self.disparity_max, self.n_disparities)
    }
}

/// Population variance across views of the luma field sheared by each
/// sampled disparity. Per pixel the views are visited `u`-major, then `v`,
/// and the variance is taken about the mean of the same samples.
pub fn build_cost_volume(lf: &LightField, params: &SweepParams) -> Result<CostVolume> {
    params.validate()?;
    let luma = lf.to_luma();
    let (w, h) = (luma.width(), luma.height());
    let (n_u, n_v) = (luma.n_u(), luma.n_v());
    let (cu, cv) = (luma.center_u(), luma.center_v());
    let planes: Vec<Vec<Plane>> = (0..n_u)
        .map(|u| {
            (0..n_v)
                .map(|v| Plane::new(luma.view_slice(u, v), w, h, 1))
                .collect()
        })
        .collect();
    let disparities = params.disparities();
    let strict = params.border == BorderMode::Strict;
    let mut costs = Array3::zeros((disparities.len(), h, w));
    costs
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(disparities.par_iter())
        .for_each(|(mut slice, &d)| {
            slice
                .axis_iter_mut(Axis(0))
                .into_par_iter()
                .enumerate()
                .for_each(|(y, mut row)| {
                    let mut samples = Vec::with_capacity(n_u * n_v);
                    for x in 0..w {
                        samples.clear();
                        for (u, column) in planes.iter().enumerate() {
                            let sx = x as f64 + view_offset(cu, u, d);
                            for (v, plane) in column.iter().enumerate() {
                                let sy = y as f64 + view_offset(cv, v, d);
                                let taps = plane.taps(sx, sy);
                                if strict && taps.clamped {
                                    continue;
                                }
                                samples.push(plane.interpolate(&taps, 0));
                            }
                        }
                        row[x] = variance(&samples);
                    }
                });
        });
    Ok(CostVolume::from_parts_unchecked(costs, disparities))
}

/// Population variance about the sample mean, summed in slice order.
#[inline]
fn variance(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n
}

/// Mean over the `(2r+1)²` window of every slice, replicating borders.
pub fn box_filter_cost(cv: &CostVolume, radius: usize) -> CostVolume {
    if radius == 0 {
        return cv.clone();
    }
    let src = cv.costs();
    let (_, h, w) = src.dim();
    let r = radius as isize;
    let count = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    let mut out = Array3::zeros(src.raw_dim());
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(src.axis_iter(Axis(0)).into_par_iter())
        .for_each(|(mut dst, slice)| {
            for y in 0..h {
                for x in 0..w {
                    let c = slice[[y, x]];
                    let mut acc = 0.0;
                    for dy in -r..=r {
                        let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                        for dx in -r..=r {
                            let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                            acc += slice[[yy, xx]] - c;
                        }
                    }
                    // Clamp guards the last-ulp negatives the differences can introduce.
                    dst[[y, x]] = (c + acc / count).max(0.0);
                }
            }
        });
    CostVolume::from_parts_unchecked(out, cv.disparities().to_vec())
}

/// Per-pixel argmin over the sampled disparities; ties go to the smallest
/// index. Every pixel is valid.
pub fn select_disparity(cv: &CostVolume) -> DisparityMap {
    let costs = cv.costs();
    let disparities = cv.disparities();
    let values = Array2::from_shape_fn((cv.height(), cv.width()), |(y, x)| {
        let mut best = 0;
        for k in 1..disparities.len() {
            if costs[[k, y, x]] < costs[[best, y, x]] {
                best = k;
            }
        }
        disparities[best]
    });
    DisparityMap::dense(values).expect("finite disparities")
}

/// Cost volume, box aggregation and selection in one call.
pub fn estimate_sweep(lf: &LightField, params: &SweepParams) -> Result<DisparityMap> {
    let cv = build_cost_volume(lf, params)?;
    Ok(select_disparity(&box_filter_cost(&cv, params.box_radius)))
}
