//! 4D light field container and scene metadata.
//!
//! Index convention: the radiance `L(x, y, u, v)` with spatial `(x, y)` and
//! angular `(u, v)` coordinates is stored as a row-major array of shape
//! `(n_v, n_u, height, width, channels)`, i.e. one sub-aperture view after
//! another, each view row-major over `(y, x)`. Accessors take arguments in
//! `(x, y, u, v)` order.

use ndarray::{s, Array2, Array3, Array5, ArrayView3, Axis};

use crate::error::{Error, Result};

/// Rec. 709 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];

#[derive(Debug, Clone, PartialEq)]
pub struct LightField {
    data: Array5<f64>,
}

impl LightField {
    /// Wraps an array shaped `(n_v, n_u, height, width, channels)`.
    pub fn new(data: Array5<f64>) -> Result<Self> {
        let (n_v, n_u, h, w, c) = data.dim();
        if n_u == 0 || n_v == 0 {
            return Err(Error::invalid("light field needs at least one view"));
        }
        if w == 0 || h == 0 {
            return Err(Error::invalid("light field views must be non-empty"));
        }
        if c != 1 && c != 3 {
            return Err(Error::invalid(format!(
                "light field must have 1 or 3 channels, got {c}"
            )));
        }
        if let Some(bad) = data
            .iter()
            .find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::invalid(format!("radiance {bad} outside [0, 1]")));
        }
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Ok(LightField { data })
    }

    /// Builds a field by evaluating `f(x, y, u, v, channel)` at every sample.
    pub fn from_fn<F>(
        width: usize,
        height: usize,
        n_u: usize,
        n_v: usize,
        channels: usize,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(usize, usize, usize, usize, usize) -> f64,
    {
        let data = Array5::from_shape_fn((n_v, n_u, height, width, channels), |(v, u, y, x, c)| {
            f(x, y, u, v, c)
        });
        Self::new(data)
    }

    /// Assembles a field from sub-aperture views given row-major by `(v, u)`.
    pub fn from_views(views: &[Array3<f64>], n_u: usize, n_v: usize) -> Result<Self> {
        if views.len() != n_u * n_v {
            return Err(Error::invalid(format!(
                "expected {} views, got {}",
                n_u * n_v,
                views.len()
            )));
        }
        let (h, w, c) = views[0].dim();
        let mut data = Array5::zeros((n_v, n_u, h, w, c));
        for (i, view) in views.iter().enumerate() {
            if view.dim() != (h, w, c) {
                return Err(Error::invalid(format!(
                    "view {i} has shape {:?}, expected {:?}",
                    view.dim(),
                    (h, w, c)
                )));
            }
            data.slice_mut(s![i / n_u, i % n_u, .., .., ..])
                .assign(view);
        }
        Self::new(data)
    }

    pub fn width(&self) -> usize {
        self.data.dim().3
    }

    pub fn height(&self) -> usize {
        self.data.dim().2
    }

    pub fn n_u(&self) -> usize {
        self.data.dim().1
    }

    pub fn n_v(&self) -> usize {
        self.data.dim().0
    }

    pub fn channels(&self) -> usize {
        self.data.dim().4
    }

    pub fn center_u(&self) -> usize {
        self.n_u() / 2
    }

    pub fn center_v(&self) -> usize {
        self.n_v() / 2
    }

    pub fn n_views(&self) -> usize {
        self.n_u() * self.n_v()
    }

    pub fn data(&self) -> &Array5<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array5<f64> {
        self.data
    }

    /// Contiguous backing store, layout as described in the module docs.
    pub fn as_slice(&self) -> &[f64] {
        self.data.as_slice().expect("standard layout")
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, u: usize, v: usize, c: usize) -> f64 {
        self.data[[v, u, y, x, c]]
    }

    /// Sub-aperture view `(u, v)`, shaped `(height, width, channels)`.
    pub fn view(&self, u: usize, v: usize) -> ArrayView3<'_, f64> {
        self.data.slice(s![v, u, .., .., ..])
    }

    /// Contiguous samples of view `(u, v)`.
    pub fn view_slice(&self, u: usize, v: usize) -> &[f64] {
        let len = self.width() * self.height() * self.channels();
        let start = (v * self.n_u() + u) * len;
        &self.as_slice()[start..start + len]
    }

    /// Single-channel copy using Rec. 709 luma; grayscale fields are cloned.
    pub fn to_luma(&self) -> LightField {
        if self.channels() == 1 {
            return self.clone();
        }
        let gray = self
            .data
            .map_axis(Axis(4), |px| {
                (LUMA_WEIGHTS[0] * px[0] + LUMA_WEIGHTS[1] * px[1] + LUMA_WEIGHTS[2] * px[2])
                    .clamp(0.0, 1.0)
            })
            .insert_axis(Axis(4));
        LightField { data: gray }
    }

    /// Multiplies every radiance by `a`; the result must stay in `[0, 1]`.
    pub fn scaled(&self, a: f64) -> Result<LightField> {
        LightField::new(self.data.mapv(|v| v * a))
    }

    /// Rounds every radiance to the nearest multiple of 1/255, as an 8-bit round trip would.
    pub fn quantized_8bit(&self) -> LightField {
        LightField {
            data: self.data.mapv(|v| (v * 255.0).round() / 255.0),
        }
    }
}

/// The sub-aperture view at `(center_u, center_v)` as an owned image.
pub fn center_view(lf: &LightField) -> Array3<f64> {
    lf.view(lf.center_u(), lf.center_v()).to_owned()
}

/// Luma of an image shaped `(height, width, channels)`.
pub fn image_luma(img: &Array3<f64>) -> Array2<f64> {
    match img.dim().2 {
        1 => img.index_axis(Axis(2), 0).to_owned(),
        _ => img.map_axis(Axis(2), |px| {
            LUMA_WEIGHTS[0] * px[0] + LUMA_WEIGHTS[1] * px[1] + LUMA_WEIGHTS[2] * px[2]
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneMeta {
    pub name: String,
    pub focal_length_px: f64,
    /// Scene units per adjacent view.
    pub baseline: f64,
    /// Disparity bounds in pixels per angular step.
    pub disparity_min: f64,
    pub disparity_max: f64,
}

impl SceneMeta {
    pub fn new(
        name: impl Into<String>,
        focal_length_px: f64,
        baseline: f64,
        disparity_min: f64,
        disparity_max: f64,
    ) -> Result<Self> {
        let meta = SceneMeta {
            name: name.into(),
            focal_length_px,
            baseline,
            disparity_min,
            disparity_max,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal_length_px.is_finite() && self.focal_length_px > 0.0) {
            return Err(Error::invalid("focal_length_px must be positive"));
        }
        if !(self.baseline.is_finite() && self.baseline > 0.0) {
            return Err(Error::invalid("baseline must be positive"));
        }
        if !(self.disparity_min.is_finite()
            && self.disparity_max.is_finite()
            && self.disparity_min < self.disparity_max)
        {
            return Err(Error::invalid(format!(
                "disparity range [{}, {}] is empty",
                self.disparity_min, self.disparity_max
            )));
        }
        Ok(())
    }

    pub fn disparity_span(&self) -> f64 {
        self.disparity_max - self.disparity_min
    }

    pub fn contains(&self, d: f64) -> bool {
        d >= self.disparity_min && d <= self.disparity_max
    }
}

/// `n` hypotheses spaced uniformly over `[min, max]`, both endpoints included.
pub fn uniform_disparities(min: f64, max: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "need at least two disparity samples");
    let step = (max - min) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                max
            } else {
                min + step * i as f64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indexed_field(n_u: usize, n_v: usize) -> LightField {
        let n = (n_u * n_v) as f64;
        LightField::from_fn(4, 3, n_u, n_v, 1, |x, y, u, v, _| {
            ((v * n_u + u) as f64 + (x + y) as f64 * 1e-3) / n
        })
        .unwrap()
    }

    #[test]
    fn center_of_nine_by_nine_is_four_four() {
        let lf = indexed_field(9, 9);
        assert_eq!((lf.center_u(), lf.center_v()), (4, 4));
        let c = center_view(&lf);
        assert_eq!(c.dim(), (3, 4, 1));
        assert_eq!(c[[1, 2, 0]], lf.get(2, 1, 4, 4, 0));
    }

    #[test]
    fn single_view_center() {
        let lf = indexed_field(1, 1);
        assert_eq!((lf.center_u(), lf.center_v()), (0, 0));
        assert_eq!(center_view(&lf), lf.view(0, 0).to_owned());
    }

    #[test]
    fn constant_views_all_equal_center() {
        let lf =
            LightField::from_fn(5, 5, 3, 3, 1, |x, y, _, _, _| (x * 5 + y) as f64 / 25.0).unwrap();
        let c = center_view(&lf);
        for v in 0..3 {
            for u in 0..3 {
                assert_eq!(lf.view(u, v), c.view());
            }
        }
    }

    #[test]
    fn center_view_is_a_copy() {
        let lf = indexed_field(3, 3);
        let before = lf.clone();
        let mut c = center_view(&lf);
        c.fill(0.0);
        assert_eq!(lf, before);
    }

    #[test]
    fn rejects_out_of_range_radiance() {
        let data = Array5::from_elem((1, 1, 2, 2, 1), 1.5);
        assert!(LightField::new(data).is_err());
        let data = Array5::from_elem((1, 1, 2, 2, 1), f64::NAN);
        assert!(LightField::new(data).is_err());
    }

    #[test]
    fn luma_of_gray_rgb_is_gray() {
        let lf = LightField::from_fn(3, 3, 1, 1, 3, |x, _, _, _, _| x as f64 / 4.0).unwrap();
        let l = lf.to_luma();
        assert_eq!(l.channels(), 1);
        for x in 0..3 {
            assert!((l.get(x, 0, 0, 0, 0) - x as f64 / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_sampling_includes_endpoints() {
        let d = uniform_disparities(-2.0, 2.0, 11);
        assert_eq!(d.len(), 11);
        assert_eq!(d[0], -2.0);
        assert_eq!(d[10], 2.0);
        assert!((d[5]).abs() < 1e-15);
        assert!(d.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn meta_validation() {
        assert!(SceneMeta::new("a", 100.0, 0.5, -2.0, 2.0).is_ok());
        assert!(SceneMeta::new("a", 0.0, 0.5, -2.0, 2.0).is_err());
        assert!(SceneMeta::new("a", 100.0, -1.0, -2.0, 2.0).is_err());
        assert!(SceneMeta::new("a", 100.0, 0.5, 2.0, 2.0).is_err());
    }
}
