//! Per-pixel maps produced by the estimators.

use ndarray::{Array2, Array3, ArrayView2};

use crate::error::{Error, Result};

/// Disparity in pixels per angular step, with a validity mask.
///
/// Invalid pixels hold `NaN` in `values`; metrics never read them.
/// Equality compares the masks and the values at valid pixels only.
#[derive(Debug, Clone)]
pub struct DisparityMap {
    values: Array2<f64>,
    valid: Array2<bool>,
}

impl PartialEq for DisparityMap {
    fn eq(&self, other: &Self) -> bool {
        self.valid == other.valid
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .zip(self.valid.iter())
                .all(|((a, b), &ok)| !ok || a == b)
    }
}

impl DisparityMap {
    pub fn new(values: Array2<f64>, valid: Array2<bool>) -> Result<Self> {
        if values.dim() != valid.dim() {
            return Err(Error::DimensionMismatch {
                expected: values.dim(),
                found: valid.dim(),
            });
        }
        let mut values = values;
        for (v, &ok) in values.iter_mut().zip(valid.iter()) {
            if !ok {
                *v = f64::NAN;
            } else if !v.is_finite() {
                return Err(Error::invalid("valid disparity must be finite"));
            }
        }
        Ok(DisparityMap { values, valid })
    }

    /// Every pixel valid.
    pub fn dense(values: Array2<f64>) -> Result<Self> {
        let valid = Array2::from_elem(values.dim(), true);
        Self::new(values, valid)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        DisparityMap {
            values: Array2::from_elem((height, width), value),
            valid: Array2::from_elem((height, width), true),
        }
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        DisparityMap {
            values: Array2::from_elem((height, width), f64::NAN),
            valid: Array2::from_elem((height, width), false),
        }
    }

    /// Non-finite entries become invalid pixels.
    pub fn from_sentinel(values: Array2<f64>) -> Self {
        let valid = values.mapv(f64::is_finite);
        let values = values.mapv(|v| if v.is_finite() { v } else { f64::NAN });
        DisparityMap { values, valid }
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn height(&self) -> usize {
        self.values.nrows()
    }

    /// `(height, width)`.
    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn valid(&self) -> ArrayView2<'_, bool> {
        self.valid.view()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        if self.valid[[y, x]] {
            Some(self.values[[y, x]])
        } else {
            None
        }
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[[y, x]]
    }

    pub fn set(&mut self, x: usize, y: usize, value: Option<f64>) {
        match value {
            Some(d) => {
                self.values[[y, x]] = d;
                self.valid[[y, x]] = true;
            }
            None => {
                self.values[[y, x]] = f64::NAN;
                self.valid[[y, x]] = false;
            }
        }
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Values with `NaN` at invalid pixels.
    pub fn to_sentinel_array(&self) -> Array2<f64> {
        self.values.clone()
    }

    pub fn map_valid(&self, f: impl Fn(f64) -> f64) -> DisparityMap {
        let mut out = self.clone();
        for (v, &ok) in out.values.iter_mut().zip(self.valid.iter()) {
            if ok {
                *v = f(*v);
            }
        }
        out
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> DisparityMap {
        self.map_valid(|d| d.clamp(lo, hi))
    }

    pub fn valid_range(&self) -> Option<(f64, f64)> {
        self.values
            .iter()
            .zip(self.valid.iter())
            .filter(|(_, &ok)| ok)
            .fold(None, |acc, (&v, _)| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }
}

/// Non-negative per-pixel confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap(Array2<f64>);

impl ConfidenceMap {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("confidence must be finite and non-negative"));
        }
        Ok(ConfidenceMap(values))
    }

    pub(crate) fn from_raw(values: Array2<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        ConfidenceMap(values)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0[[y, x]]
    }
}

/// Matching cost per pixel and disparity hypothesis.
///
/// Stored slice-major as `(n_d, height, width)` so each hypothesis is a
/// contiguous image.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    costs: Array3<f64>,
    disparities: Vec<f64>,
}

impl CostVolume {
    pub fn new(costs: Array3<f64>, disparities: Vec<f64>) -> Result<Self> {
        if disparities.len() < 2 {
            return Err(Error::invalid("cost volume needs at least two hypotheses"));
        }
        if costs.dim().0 != disparities.len() {
            return Err(Error::invalid(format!(
                "{} cost slices for {} disparities",
                costs.dim().0,
                disparities.len()
            )));
        }
        if !disparities.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("disparities must be strictly increasing"));
        }
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid("costs must be finite and non-negative"));
        }
        Ok(CostVolume { costs, disparities })
    }

    pub fn costs(&self) -> &Array3<f64> {
        &self.costs
    }

    pub fn disparities(&self) -> &[f64] {
        &self.disparities
    }

    pub fn n_disparities(&self) -> usize {
        self.disparities.len()
    }

    pub fn width(&self) -> usize {
        self.costs.dim().2
    }

    pub fn height(&self) -> usize {
        self.costs.dim().1
    }

    #[inline]
    pub fn cost(&self, x: usize, y: usize, k: usize) -> f64 {
        self.costs[[k, y, x]]
    }

    pub(crate) fn from_parts_unchecked(costs: Array3<f64>, disparities: Vec<f64>) -> Self {
        CostVolume { costs, disparities }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_pixels_carry_nan() {
        let values = Array2::from_elem((2, 2), 1.0);
        let mut valid = Array2::from_elem((2, 2), true);
        valid[[0, 1]] = false;
        let d = DisparityMap::new(values, valid).unwrap();
        assert!(d.values()[[0, 1]].is_nan());
        assert_eq!(d.get(1, 0), None);
        assert_eq!(d.get(0, 0), Some(1.0));
        assert_eq!(d.valid_count(), 3);
    }

    #[test]
    fn cost_volume_rejects_unsorted_disparities() {
        let costs = Array3::zeros((2, 1, 1));
        assert!(CostVolume::new(costs.clone(), vec![1.0, 0.0]).is_err());
        assert!(CostVolume::new(costs, vec![0.0, 1.0]).is_ok());
        assert!(CostVolume::new(Array3::zeros((1, 1, 1)), vec![0.0]).is_err());
    }

    #[test]
    fn confidence_rejects_negative() {
        assert!(ConfidenceMap::new(Array2::from_elem((1, 1), -1.0)).is_err());
    }
}
