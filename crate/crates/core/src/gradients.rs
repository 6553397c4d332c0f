//! Finite-difference gradients of a light field.

use ndarray::{Array4, ArrayView4, Axis, Zip};

use crate::error::{Error, Result};
use crate::lightfield::LightField;

/// Spatial and angular derivatives of the luma field, each shaped
/// `(n_v, n_u, height, width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub lx: Array4<f64>,
    pub ly: Array4<f64>,
    pub lu: Array4<f64>,
    pub lv: Array4<f64>,
}

/// Central differences in the interior, one-sided at the ends; an axis of
/// length 1 has zero derivative. Multi-channel fields are reduced to luma
/// first.
pub fn gradients(lf: &LightField) -> Result<GradientField> {
    if lf.width() < 2 || lf.height() < 2 {
        return Err(Error::invalid(format!(
            "gradients need at least 2x2 views, got {}x{}",
            lf.width(),
            lf.height()
        )));
    }
    let luma = lf.to_luma();
    let field = luma.data().index_axis(Axis(4), 0);
    Ok(GradientField {
        lx: derivative(field, Axis(3)),
        ly: derivative(field, Axis(2)),
        lu: derivative(field, Axis(1)),
        lv: derivative(field, Axis(0)),
    })
}

fn derivative(field: ArrayView4<'_, f64>, axis: Axis) -> Array4<f64> {
    let mut out = Array4::zeros(field.raw_dim());
    let n = field.len_of(axis);
    if n < 2 {
        return out;
    }
    Zip::from(out.lanes_mut(axis))
        .and(field.lanes(axis))
        .for_each(|mut dst, src| {
            dst[0] = src[1] - src[0];
            for i in 1..n - 1 {
                dst[i] = (src[i + 1] - src[i - 1]) * 0.5;
            }
            dst[n - 1] = src[n - 1] - src[n - 2];
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_in_x() {
        let lf = LightField::from_fn(6, 5, 3, 3, 1, |x, _, _, _, _| x as f64 / 10.0).unwrap();
        let g = gradients(&lf).unwrap();
        for v in g.lx.iter() {
            assert!((v - 0.1).abs() < 1e-12);
        }
        assert!(g
            .ly
            .iter()
            .chain(g.lu.iter())
            .chain(g.lv.iter())
            .all(|&v| v == 0.0));
    }

    #[test]
    fn constant_field_has_zero_gradients() {
        let lf = LightField::from_fn(4, 4, 3, 2, 1, |_, _, _, _, _| 0.3).unwrap();
        let g = gradients(&lf).unwrap();
        for a in [&g.lx, &g.ly, &g.lu, &g.lv] {
            assert!(a.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn x_plus_two_u() {
        // 8x8 spatial, 3x3 angular; scaled into [0, 1].
        let s = 1.0 / 16.0;
        let lf = LightField::from_fn(8, 8, 3, 3, 1, |x, _, u, _, _| {
            (x as f64 + 2.0 * u as f64) * s
        })
        .unwrap();
        let g = gradients(&lf).unwrap();
        // Hand-rolled central differences.
        for v in 0..3 {
            for u in 0..3 {
                for y in 0..8 {
                    for x in 1..7 {
                        let expect_x =
                            (lf.get(x + 1, y, u, v, 0) - lf.get(x - 1, y, u, v, 0)) / 2.0;
                        assert_eq!(g.lx[[v, u, y, x]], expect_x);
                        assert!((g.lx[[v, u, y, x]] - s).abs() < 1e-12);
                    }
                    let x = 3;
                    assert!((g.lu[[v, u, y, x]] - 2.0 * s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn singleton_angular_axis_is_zero() {
        let lf = LightField::from_fn(4, 4, 3, 1, 1, |x, _, u, _, _| (x + u) as f64 / 8.0).unwrap();
        let g = gradients(&lf).unwrap();
        assert!(g.lv.iter().all(|&v| v == 0.0));
        assert!(g.lu.iter().all(|&v| (v - 0.125).abs() < 1e-12));
    }

    #[test]
    fn rejects_single_pixel() {
        let lf = LightField::from_fn(1, 1, 3, 3, 1, |_, _, _, _, _| 0.5).unwrap();
        assert!(gradients(&lf).is_err());
    }
}
