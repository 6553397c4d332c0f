//! Gaussian pyramid reduction and disparity upsampling.

use ndarray::{Array2, Array3, Array5, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lightfield::LightField;
use crate::maps::DisparityMap;

pub const GAUSSIAN_TAPS: usize = 7;
pub const GAUSSIAN_SIGMA: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Normalized 1D taps; the 7×7 kernel is their outer product.
pub fn gaussian_kernel() -> [f64; GAUSSIAN_TAPS] {
    let r = (GAUSSIAN_TAPS / 2) as isize;
    let mut k = [0.0; GAUSSIAN_TAPS];
    for (i, tap) in k.iter_mut().enumerate() {
        let t = (i as isize - r) as f64;
        *tap = (-t * t / (2.0 * GAUSSIAN_SIGMA * GAUSSIAN_SIGMA)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|t| *t /= sum);
    k
}

/// Reflect-101 border index (`-1 -> 1`, `n -> n-2`).
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Separable 7×7 Gaussian blur with reflected borders.
///
/// Evaluated as `v + Σ k_i (v_i - v)`, which equals `Σ k_i v_i` for a
/// normalized kernel and leaves constant images bit-exact.
pub fn gaussian_blur(img: &Array3<f64>) -> Array3<f64> {
    let k = gaussian_kernel();
    let r = (GAUSSIAN_TAPS / 2) as isize;
    let (h, w, c) = img.dim();
    let mut tmp = Array3::zeros((h, w, c));
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let center = img[[y, x, ch]];
                let mut acc = 0.0;
                for (i, &kw) in k.iter().enumerate() {
                    let xx = reflect(x as isize + i as isize - r, w);
                    acc += kw * (img[[y, xx, ch]] - center);
                }
                tmp[[y, x, ch]] = center + acc;
            }
        }
    }
    let mut out = Array3::zeros((h, w, c));
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let center = tmp[[y, x, ch]];
                let mut acc = 0.0;
                for (i, &kw) in k.iter().enumerate() {
                    let yy = reflect(y as isize + i as isize - r, h);
                    acc += kw * (tmp[[yy, x, ch]] - center);
                }
                out[[y, x, ch]] = center + acc;
            }
        }
    }
    out
}

/// Blur, then keep every second row and column starting at 0.
/// Output size is `ceil(dim / 2)`.
pub fn pyramid_down(img: &Array3<f64>) -> Result<Array3<f64>> {
    let (h, w, _) = img.dim();
    if h < 2 || w < 2 {
        return Err(Error::invalid(format!(
            "pyramid_down needs at least 2x2, got {w}x{h}"
        )));
    }
    let blurred = gaussian_blur(img);
    Ok(blurred.slice(ndarray::s![..;2, ..;2, ..]).to_owned())
}

/// Single-channel convenience wrapper around [`pyramid_down`].
pub fn pyramid_down_2d(img: &Array2<f64>) -> Result<Array2<f64>> {
    let img3 = img.view().insert_axis(Axis(2)).to_owned();
    Ok(pyramid_down(&img3)?.index_axis_move(Axis(2), 0))
}

/// Reduces every view of a light field; angular resolution is unchanged.
pub fn lightfield_down(lf: &LightField) -> Result<LightField> {
    let views: Vec<(usize, usize)> = (0..lf.n_v())
        .flat_map(|v| (0..lf.n_u()).map(move |u| (u, v)))
        .collect();
    let reduced: Vec<Array3<f64>> = views
        .par_iter()
        .map(|&(u, v)| pyramid_down(&lf.view(u, v).to_owned()))
        .collect::<Result<_>>()?;
    let (h, w, c) = reduced[0].dim();
    let mut data = Array5::zeros((lf.n_v(), lf.n_u(), h, w, c));
    for (i, view) in reduced.into_iter().enumerate() {
        // Rounding can push a blurred value a few ulps outside [0, 1].
        data.index_axis_mut(Axis(0), i / lf.n_u())
            .index_axis_mut(Axis(0), i % lf.n_u())
            .assign(&view.mapv(|v| v.clamp(0.0, 1.0)));
    }
    LightField::new(data)
}

/// Spatial sizes `(width, height)` of every level whose smaller extent is at
/// least `min_extent`, starting from the full resolution.
pub fn level_sizes(width: usize, height: usize, min_extent: usize) -> Vec<(usize, usize)> {
    let mut sizes = Vec::new();
    let (mut w, mut h) = (width, height);
    while w.min(h) >= min_extent {
        sizes.push((w, h));
        if w < 2 || h < 2 {
            break;
        }
        w = w.div_ceil(2);
        h = h.div_ceil(2);
    }
    sizes
}

/// Integer reduction factor relating `target` to `source`, if one exists
/// under ceiling division; otherwise the plain ratio.
fn scale_between(target: usize, source: usize) -> f64 {
    let ratio = target as f64 / source as f64;
    let s = ratio.round().max(1.0) as usize;
    if target.div_ceil(s) == source {
        s as f64
    } else {
        ratio
    }
}

/// Nearest-neighbour upsampling. Disparity is measured in pixels, so values
/// are multiplied by the horizontal scale factor.
pub fn upsample_disparity(
    d: &DisparityMap,
    target_w: usize,
    target_h: usize,
) -> Result<DisparityMap> {
    let (h, w) = d.dim();
    if target_w < w || target_h < h {
        return Err(Error::invalid(format!(
            "upsample target {target_w}x{target_h} smaller than source {w}x{h}"
        )));
    }
    let sx = scale_between(target_w, w);
    let sy = scale_between(target_h, h);
    let mut values = Array2::from_elem((target_h, target_w), f64::NAN);
    let mut valid = Array2::from_elem((target_h, target_w), false);
    for y in 0..target_h {
        let ys = ((y as f64 / sy) as usize).min(h - 1);
        for x in 0..target_w {
            let xs = ((x as f64 / sx) as usize).min(w - 1);
            if let Some(v) = d.get(xs, ys) {
                values[[y, x]] = v * sx;
                valid[[y, x]] = true;
            }
        }
    }
    DisparityMap::new(values, valid)
}

/// Keeps every second sample and halves the values: the coarse-level
/// counterpart of [`upsample_disparity`].
pub fn downsample_disparity(d: &DisparityMap) -> DisparityMap {
    let values = d.values().slice(ndarray::s![..;2, ..;2]).mapv(|v| v * 0.5);
    let valid = d.valid().slice(ndarray::s![..;2, ..;2]).to_owned();
    DisparityMap::new(values, valid).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel();
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..3 {
            assert_eq!(k[i], k[6 - i]);
        }
        // sigma^2 = 0.5 -> neighbouring tap ratio e^-1.
        assert!((k[4] / k[3] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn reflect_101() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-3, 5), 3);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(7, 5), 1);
        assert_eq!(reflect(-3, 2), 1);
        assert_eq!(reflect(4, 2), 0);
        assert_eq!(reflect(3, 1), 0);
    }

    #[test]
    fn constant_stays_constant() {
        let img = Array3::from_elem((9, 13, 1), 0.3);
        let out = pyramid_down(&img).unwrap();
        assert_eq!(out.dim(), (5, 7, 1));
        assert!(out.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn shape_contract() {
        let img = Array3::zeros((16, 16, 3));
        assert_eq!(pyramid_down(&img).unwrap().dim(), (8, 8, 3));
        assert!(pyramid_down(&Array3::zeros((1, 4, 1))).is_err());
    }

    #[test]
    fn impulse_response() {
        // Oracle: direct evaluation of the 2D Gaussian at the offsets sampled
        // by the decimation grid.
        let mut img = Array3::zeros((15, 15, 1));
        img[[7, 7, 0]] = 1.0;
        let out = pyramid_down(&img).unwrap();
        let g = |t: f64| (-t * t).exp();
        let norm: f64 = (-3..=3).map(|t| g(t as f64)).sum();
        for yo in 0..8 {
            for xo in 0..8 {
                let dy = 2 * yo as isize - 7;
                let dx = 2 * xo as isize - 7;
                let expect = if dx.abs() <= 3 && dy.abs() <= 3 {
                    g(dx as f64) * g(dy as f64) / (norm * norm)
                } else {
                    0.0
                };
                assert!((out[[yo, xo, 0]] - expect).abs() < 1e-15);
            }
        }
        // Sum over the output equals the squared sum of odd-offset taps.
        let odd: f64 = [-3.0, -1.0, 1.0, 3.0].iter().map(|&t| g(t)).sum::<f64>() / norm;
        assert!((out.sum() - odd * odd).abs() < 1e-14);
    }

    #[test]
    fn level_count() {
        assert_eq!(level_sizes(12, 12, 10), vec![(12, 12)]);
        assert_eq!(level_sizes(20, 40, 10), vec![(20, 40), (10, 20)]);
        assert_eq!(level_sizes(128, 128, 10).len(), 4);
        assert!(level_sizes(8, 100, 10).is_empty());
    }

    #[test]
    fn upsample_scales_values() {
        let d = DisparityMap::constant(8, 8, 1.0);
        let up = upsample_disparity(&d, 16, 16).unwrap();
        assert_eq!(up.dim(), (16, 16));
        assert!(up.values().iter().all(|&v| v == 2.0));
        assert_eq!(upsample_disparity(&d, 8, 8).unwrap(), d);
        let inv = DisparityMap::invalid(4, 3);
        assert_eq!(upsample_disparity(&inv, 8, 6).unwrap().valid_count(), 0);
        assert!(upsample_disparity(&d, 4, 4).is_err());
    }

    #[test]
    fn upsample_inverts_ceil_reduction() {
        let d = DisparityMap::constant(7, 7, 0.5);
        let up = upsample_disparity(&d, 13, 13).unwrap();
        assert!(up.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn two_resolution_scene_pair() {
        // A shift of s pixels at full resolution is s/2 after reduction;
        // reduce then upsample must restore the original disparity.
        let d = DisparityMap::constant(10, 6, 1.5);
        let coarse = downsample_disparity(&d);
        assert_eq!(coarse.dim(), (3, 5));
        assert!(coarse.values().iter().all(|&v| v == 0.75));
        let back = upsample_disparity(&coarse, 10, 6).unwrap();
        assert_eq!(back, d);
    }
}
