//! Epipolar-plane estimator.
//!
//! For every pixel with enough local contrast, the radiances along the EPI
//! line of each hypothesised disparity are scored by how tightly they
//! cluster around their mean-shift mode; the best-scoring disparity wins if
//! its score stands out from the average. Pixels left undecided at full
//! resolution are filled from successively coarser pyramid levels.

mod density;
mod edge;

pub use density::{density_score, Density, Kernel, MeanShift};
pub use edge::edge_confidence;

use ndarray::{Array2, Zip};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lightfield::{center_view, uniform_disparities, LightField, SceneMeta};
use crate::maps::{ConfidenceMap, DisparityMap};
use crate::pyramid::{level_sizes, lightfield_down, upsample_disparity};
use crate::refine::{fill_nearest, median_filter_3x3, median_filter_valid};
use crate::sampling::Plane;
use crate::shear::view_offset;

#[derive(Debug, Clone, PartialEq)]
pub struct EpiParams {
    /// Edge window height and width.
    pub edge_rows: usize,
    pub edge_cols: usize,
    pub edge_threshold_level0: f64,
    pub edge_threshold_coarse: f64,
    /// Kernel bandwidth `h` in radiance units.
    pub bandwidth: f64,
    /// Pixels whose depth confidence does not exceed this are dropped.
    pub depth_conf_epsilon: f64,
    /// Hypotheses per level, spread over the level-scaled range.
    pub n_disparities: usize,
    pub disparity_min: f64,
    pub disparity_max: f64,
    pub meanshift: MeanShift,
    /// Coarser levels are used while both extents are at least this.
    pub min_pyramid_extent: usize,
    pub kernel: Kernel,
}

impl EpiParams {
    pub fn for_scene(meta: &SceneMeta) -> Self {
        EpiParams {
            edge_rows: 3,
            edge_cols: 7,
            edge_threshold_level0: 0.05,
            edge_threshold_coarse: 0.1,
            bandwidth: 0.1,
            depth_conf_epsilon: 0.03,
            n_disparities: 11,
            disparity_min: meta.disparity_min,
            disparity_max: meta.disparity_max,
            meanshift: MeanShift::default(),
            min_pyramid_extent: 10,
            kernel: Kernel::Triangular,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bandwidth", self.bandwidth),
            ("depth_conf_epsilon", self.depth_conf_epsilon),
            ("edge_threshold_level0", self.edge_threshold_level0),
            ("edge_threshold_coarse", self.edge_threshold_coarse),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if self.edge_rows == 0 || self.edge_cols == 0 {
            return Err(Error::invalid("edge window must be non-empty"));
        }
        if self.n_disparities < 2 {
            return Err(Error::invalid("need at least 2 disparity samples"));
        }
        if self.min_pyramid_extent < 2 {
            return Err(Error::invalid("min_pyramid_extent must be at least 2"));
        }
        if !(self.disparity_min < self.disparity_max) {
            return Err(Error::invalid("EPI disparity range is empty"));
        }
        Ok(())
    }

    /// Hypotheses at pyramid level `level`, in that level's pixel units.
    pub fn disparities(&self, level: usize) -> Vec<f64> {
        let s = 0.5f64.powi(level as i32);
        uniform_disparities(
            self.disparity_min * s,
            self.disparity_max * s,
            self.n_disparities,
        )
    }

    pub fn edge_threshold(&self, level: usize) -> f64 {
        if level == 0 {
            self.edge_threshold_level0
        } else {
            self.edge_threshold_coarse
        }
    }
}

fn view_planes(lf: &LightField) -> Vec<(usize, usize, Plane<'_>)> {
    let (w, h, c) = (lf.width(), lf.height(), lf.channels());
    (0..lf.n_v())
        .flat_map(|v| (0..lf.n_u()).map(move |u| (u, v)))
        .map(|(u, v)| (u, v, Plane::new(lf.view_slice(u, v), w, h, c)))
        .collect()
}

#[inline]
fn gather(
    planes: &[(usize, usize, Plane)],
    center: (usize, usize),
    x: usize,
    y: usize,
    d: f64,
    out: &mut Vec<f64>,
) {
    out.clear();
    for (u, v, plane) in planes {
        let taps = plane.taps(
            x as f64 + view_offset(center.0, *u, d),
            y as f64 + view_offset(center.1, *v, d),
        );
        for ch in 0..plane.channels {
            out.push(plane.interpolate(&taps, ch));
        }
    }
}

/// Radiances along the EPI line through `(x, y)` with slope `d`: one
/// bilinear sample per view (the center view contributes the pixel itself),
/// views in row-major `(v, u)` order, channels interleaved.
pub fn sample_radiances(lf: &LightField, x: usize, y: usize, d: f64) -> Vec<f64> {
    let planes = view_planes(lf);
    let mut out = Vec::with_capacity(lf.n_views() * lf.channels());
    gather(&planes, (lf.center_u(), lf.center_v()), x, y, d, &mut out);
    out
}

fn estimate_level_with_threshold(
    lf: &LightField,
    disparities: &[f64],
    params: &EpiParams,
    threshold: f64,
) -> (DisparityMap, ConfidenceMap) {
    let (w, h, c) = (lf.width(), lf.height(), lf.channels());
    let ce = edge_confidence(&center_view(lf), params.edge_rows, params.edge_cols);
    let planes = view_planes(lf);
    let center = (lf.center_u(), lf.center_v());

    let mut values = Array2::from_elem((h, w), f64::NAN);
    let mut conf = Array2::zeros((h, w));
    Zip::indexed(&mut values)
        .and(&mut conf)
        .into_par_iter()
        .for_each_init(
            || Vec::with_capacity(lf.n_views() * c),
            |buf, ((y, x), value, cd)| {
                let edge = ce.get(x, y);
                if edge < threshold {
                    return;
                }
                let (mut best, mut best_s, mut sum_s) = (0, f64::NEG_INFINITY, 0.0);
                for (k, &d) in disparities.iter().enumerate() {
                    gather(&planes, center, x, y, d, buf);
                    let s = density_score(
                        buf,
                        c,
                        params.bandwidth,
                        params.kernel,
                        params.meanshift,
                        None,
                    )
                    .score;
                    sum_s += s;
                    if s > best_s {
                        best_s = s;
                        best = k;
                    }
                }
                let confidence = edge * (best_s - sum_s / disparities.len() as f64).abs();
                *cd = confidence;
                if confidence > params.depth_conf_epsilon {
                    *value = disparities[best];
                }
            },
        );
    let valid = values.mapv(f64::is_finite);
    let map = DisparityMap::new(values, valid).expect("same shape");
    (median_filter_valid(&map), ConfidenceMap::from_raw(conf))
}

/// Sparse estimate at one pyramid level: pixels failing the edge gate or the
/// depth-confidence test are invalid, the rest are median filtered among
/// themselves. Also returns the depth confidence (0 where gated).
pub fn estimate_epi_level(
    lf: &LightField,
    disparities: &[f64],
    params: &EpiParams,
    level: usize,
) -> Result<(DisparityMap, ConfidenceMap)> {
    params.validate()?;
    if disparities.is_empty() {
        return Err(Error::invalid("no disparity hypotheses"));
    }
    Ok(estimate_level_with_threshold(
        lf,
        disparities,
        params,
        params.edge_threshold(level),
    ))
}

/// Dense completion of a sparse estimate: holes take their nearest valid
/// value and are then median filtered; pixels valid in `keep` are never
/// changed.
fn complete(keep: &DisparityMap, merged: &DisparityMap) -> DisparityMap {
    let smoothed = median_filter_3x3(&fill_nearest(merged));
    let mut out = smoothed;
    for y in 0..keep.height() {
        for x in 0..keep.width() {
            if let Some(v) = keep.get(x, y) {
                out.set(x, y, Some(v));
            }
        }
    }
    out
}

/// Full-resolution EPI estimate made dense by nearest-valid filling and a
/// median pass over the filled pixels.
pub fn epi_level0_dense(lf: &LightField, params: &EpiParams) -> Result<DisparityMap> {
    let (level0, _) = estimate_epi_level(lf, &params.disparities(0), params, 0)?;
    Ok(complete(&level0, &level0))
}

/// Intermediate results of [`fine_to_coarse`].
#[derive(Debug, Clone)]
pub struct EpiPyramid {
    /// Sparse estimate of every level, finest first.
    pub levels: Vec<DisparityMap>,
    /// Full-resolution merge before hole filling.
    pub merged: DisparityMap,
    pub disparity: DisparityMap,
}

pub fn fine_to_coarse_detailed(lf: &LightField, params: &EpiParams) -> Result<EpiPyramid> {
    params.validate()?;
    let n_levels = level_sizes(lf.width(), lf.height(), params.min_pyramid_extent)
        .len()
        .max(1);
    let mut levels = Vec::with_capacity(n_levels);
    let mut sizes = Vec::with_capacity(n_levels);
    let mut current: Option<LightField> = None;
    for k in 0..n_levels {
        if k > 0 {
            let finer = current.as_ref().unwrap_or(lf);
            current = Some(lightfield_down(finer)?);
        }
        let field = current.as_ref().unwrap_or(lf);
        let (map, _) = estimate_epi_level(field, &params.disparities(k), params, k)?;
        log::debug!(
            "EPI level {k} ({}x{}): {} of {} pixels valid",
            field.width(),
            field.height(),
            map.valid_count(),
            field.width() * field.height()
        );
        sizes.push((field.width(), field.height()));
        levels.push(map);
    }

    let mut merged = levels[n_levels - 1].clone();
    for k in (0..n_levels - 1).rev() {
        let (w, h) = sizes[k];
        let up = upsample_disparity(&merged, w, h)?;
        let mut next = levels[k].clone();
        for y in 0..h {
            for x in 0..w {
                if !next.is_valid(x, y) {
                    next.set(x, y, up.get(x, y));
                }
            }
        }
        merged = next;
    }
    let disparity = complete(&levels[0], &merged);
    Ok(EpiPyramid {
        levels,
        merged,
        disparity,
    })
}

/// Fine-to-coarse EPI estimate: full-resolution results are kept, holes are
/// filled from coarser levels (values rescaled to full resolution), then from
/// the nearest valid pixel, and the filled pixels are median filtered.
pub fn fine_to_coarse(lf: &LightField, params: &EpiParams) -> Result<DisparityMap> {
    Ok(fine_to_coarse_detailed(lf, params)?.disparity)
}
