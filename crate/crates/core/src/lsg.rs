//! Closed-form least-squares gradient disparity.
//!
//! Linearising the brightness-constancy residual of a sheared light field
//! gives, per pixel, `d = Σ (Lx Lu + Ly Lv) / Σ (Lx² + Ly²)`, the sums
//! running over every view and a square spatial window.

use ndarray::{Array2, Zip};
use rayon::prelude::*;

use crate::error::Result;
use crate::gradients::gradients;
use crate::lightfield::{LightField, SceneMeta};
use crate::maps::DisparityMap;

/// Which quadratic form normalises the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LsgDenominator {
    /// `Σ (Lx² + Ly²)`; recovers the disparity of a sheared ramp exactly.
    #[default]
    Spatial,
    /// `Σ (Lu² + Lv²)`; the angular-energy variant, which yields `1/d` on a
    /// ramp. Kept for comparison only.
    Angular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsgParams {
    /// Half-size of the square summation window (1 → 3×3).
    pub window_radius: usize,
    pub denom_epsilon: f64,
    pub denominator: LsgDenominator,
}

impl Default for LsgParams {
    fn default() -> Self {
        LsgParams {
            window_radius: 1,
            denom_epsilon: 1e-8,
            denominator: LsgDenominator::Spatial,
        }
    }
}

/// Per-pixel numerator and denominator summed over views only.
fn view_sums(lf: &LightField, params: &LsgParams) -> Result<(Array2<f64>, Array2<f64>)> {
    let g = gradients(lf)?;
    let (h, w) = (lf.height(), lf.width());
    let (n_v, n_u) = (lf.n_v(), lf.n_u());
    let mut num = Array2::zeros((h, w));
    let mut den = Array2::zeros((h, w));
    Zip::indexed(&mut num)
        .and(&mut den)
        .par_for_each(|(y, x), n, d| {
            let (mut sn, mut sd) = (0.0, 0.0);
            for v in 0..n_v {
                for u in 0..n_u {
                    let i = [v, u, y, x];
                    let (lx, ly, lu, lv) = (g.lx[i], g.ly[i], g.lu[i], g.lv[i]);
                    sn += lx * lu + ly * lv;
                    sd += match params.denominator {
                        LsgDenominator::Spatial => lx * lx + ly * ly,
                        LsgDenominator::Angular => lu * lu + lv * lv,
                    };
                }
            }
            *n = sn;
            *d = sd;
        });
    Ok((num, den))
}

/// Sum over the `(2r+1)²` window clipped to the image.
fn window_sum(a: &Array2<f64>, r: usize) -> Array2<f64> {
    if r == 0 {
        return a.clone();
    }
    let (h, w) = a.dim();
    let mut out = Array2::zeros((h, w));
    out.axis_iter_mut(ndarray::Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(y, mut row)| {
            let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
            for x in 0..w {
                let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
                let mut s = 0.0;
                for yy in y0..=y1 {
                    for xx in x0..=x1 {
                        s += a[[yy, xx]];
                    }
                }
                row[x] = s;
            }
        });
    out
}

/// Per-pixel disparity, clamped to the scene range. Pixels whose
/// denominator is below `denom_epsilon` carry no gradient information and
/// are invalid.
pub fn estimate_lsg(lf: &LightField, meta: &SceneMeta, params: &LsgParams) -> Result<DisparityMap> {
    let (num, den) = view_sums(lf, params)?;
    let num = window_sum(&num, params.window_radius);
    let den = window_sum(&den, params.window_radius);
    let eps = params.denom_epsilon;
    let mut values = Array2::zeros(num.raw_dim());
    let mut valid = Array2::from_elem(num.raw_dim(), false);
    Zip::from(&mut values)
        .and(&mut valid)
        .and(&num)
        .and(&den)
        .for_each(|v, ok, &n, &d| {
            if d >= eps {
                *v = (n / (d + eps)).clamp(meta.disparity_min, meta.disparity_max);
                *ok = true;
            }
        });
    DisparityMap::new(values, valid)
}
