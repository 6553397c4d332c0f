//! Refocusing a light field onto a disparity plane.
//!
//! A scene point at disparity `d` seen at `x` in the reference view appears
//! at `x - (u - center_u) d` in view `u`. Shearing by `d` resamples every view
//! at `x + (center_u - u) d` so such points line up with the reference view;
//! `d = 0` is the identity and the reference view never moves.

use ndarray::Array5;
use rayon::prelude::*;

use crate::lightfield::LightField;
use crate::sampling::Plane;

/// Horizontal or vertical sampling offset of view index `i` for disparity `d`.
#[inline]
pub fn view_offset(center: usize, i: usize, d: f64) -> f64 {
    (center as f64 - i as f64) * d
}

pub fn shear(lf: &LightField, d: f64) -> LightField {
    assert!(d.is_finite(), "shear disparity must be finite");
    let (w, h, c) = (lf.width(), lf.height(), lf.channels());
    let (n_u, n_v) = (lf.n_u(), lf.n_v());
    let (cu, cv) = (lf.center_u(), lf.center_v());
    let view_len = w * h * c;
    let mut out = vec![0.0; view_len * n_u * n_v];
    out.par_chunks_mut(view_len)
        .enumerate()
        .for_each(|(i, dst)| {
            let (v, u) = (i / n_u, i % n_u);
            let plane = Plane::new(lf.view_slice(u, v), w, h, c);
            let ox = view_offset(cu, u, d);
            let oy = view_offset(cv, v, d);
            for y in 0..h {
                for x in 0..w {
                    let taps = plane.taps(x as f64 + ox, y as f64 + oy);
                    for ch in 0..c {
                        dst[(y * w + x) * c + ch] = plane.interpolate(&taps, ch);
                    }
                }
            }
        });
    let data = Array5::from_shape_vec((n_v, n_u, h, w, c), out).expect("shape");
    LightField::new(data).expect("bilinear interpolation stays in range")
}
