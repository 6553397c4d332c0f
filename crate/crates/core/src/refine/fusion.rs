use ndarray::Array2;

use crate::error::{Error, Result};
use crate::maps::{ConfidenceMap, DisparityMap};

/// Per-estimator weights: a global factor, optionally multiplied per pixel
/// by a confidence map.
#[derive(Debug, Clone, Default)]
pub struct FusionWeights {
    pub global: Vec<f64>,
    pub confidences: Vec<Option<ConfidenceMap>>,
}

impl FusionWeights {
    /// Global weights only.
    pub fn uniform(global: Vec<f64>) -> Self {
        let n = global.len();
        FusionWeights {
            global,
            confidences: vec![None; n],
        }
    }
}

/// Weighted mean over the estimators valid at each pixel. Pixels where no
/// valid estimator carries positive weight are invalid. The result is
/// clamped to the range of the contributing values.
pub fn fuse_weighted(maps: &[DisparityMap], weights: &FusionWeights) -> Result<DisparityMap> {
    let Some(first) = maps.first() else {
        return Err(Error::invalid("nothing to fuse"));
    };
    if weights.global.len() != maps.len() || weights.confidences.len() != maps.len() {
        return Err(Error::invalid(format!(
            "{} maps but {} global weights and {} confidence slots",
            maps.len(),
            weights.global.len(),
            weights.confidences.len()
        )));
    }
    if let Some(bad) = weights
        .global
        .iter()
        .find(|w| !(w.is_finite() && **w >= 0.0))
    {
        return Err(Error::invalid(format!("fusion weight {bad} is negative")));
    }
    let (h, w) = first.dim();
    for dim in maps
        .iter()
        .map(|m| m.dim())
        .chain(weights.confidences.iter().flatten().map(|c| c.dim()))
    {
        if dim != (h, w) {
            return Err(Error::DimensionMismatch {
                expected: (w, h),
                found: (dim.1, dim.0),
            });
        }
    }

    let mut values = Array2::from_elem((h, w), f64::NAN);
    let mut valid = Array2::from_elem((h, w), false);
    for y in 0..h {
        for x in 0..w {
            let mut base = None;
            let (mut wsum, mut acc) = (0.0, 0.0);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (i, m) in maps.iter().enumerate() {
                let Some(v) = m.get(x, y) else { continue };
                let wt = weights.global[i]
                    * weights.confidences[i].as_ref().map_or(1.0, |c| c.get(x, y));
                if wt <= 0.0 {
                    continue;
                }
                let b = *base.get_or_insert(v);
                wsum += wt;
                acc += wt * (v - b);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if let Some(b) = base {
                values[[y, x]] = (b + acc / wsum).clamp(lo, hi);
                valid[[y, x]] = true;
            }
        }
    }
    DisparityMap::new(values, valid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_map_identity() {
        let mut d = DisparityMap::constant(4, 3, 0.3);
        d.set(1, 1, None);
        let out = fuse_weighted(std::slice::from_ref(&d), &FusionWeights::uniform(vec![1.0]));
        assert_eq!(out.unwrap(), d);
    }

    #[test]
    fn weighted_mean_arithmetic() {
        let maps = [
            DisparityMap::constant(3, 3, 0.0),
            DisparityMap::constant(3, 3, 2.0),
        ];
        let out = fuse_weighted(&maps, &FusionWeights::uniform(vec![1.0, 3.0])).unwrap();
        assert!(out.values().iter().all(|&v| v == 1.5));
    }

    #[test]
    fn confidence_maps_and_validity() {
        let mut a = DisparityMap::constant(2, 1, 1.0);
        a.set(1, 0, None);
        let b = DisparityMap::constant(2, 1, 3.0);
        let conf = ConfidenceMap::new(ndarray::array![[0.0, 1.0]]).unwrap();
        let weights = FusionWeights {
            global: vec![1.0, 1.0],
            confidences: vec![None, Some(conf)],
        };
        let out = fuse_weighted(&[a, b], &weights).unwrap();
        assert_eq!(out.get(0, 0), Some(1.0));
        assert_eq!(out.get(1, 0), Some(3.0));
    }

    #[test]
    fn errors() {
        let a = DisparityMap::constant(2, 2, 1.0);
        let b = DisparityMap::constant(3, 2, 1.0);
        assert!(fuse_weighted(&[a.clone(), b], &FusionWeights::uniform(vec![1.0, 1.0])).is_err());
        assert!(fuse_weighted(
            std::slice::from_ref(&a),
            &FusionWeights::uniform(vec![-1.0])
        )
        .is_err());
        assert!(fuse_weighted(&[a], &FusionWeights::uniform(vec![])).is_err());
        assert!(fuse_weighted(&[], &FusionWeights::default()).is_err());
    }

    proptest! {
        #[test]
        fn output_within_input_range(
            vals in proptest::collection::vec(-2.0f64..2.0, 3),
            ws in proptest::collection::vec(0.0f64..5.0, 3),
        ) {
            let maps: Vec<_> = vals.iter().map(|&v| DisparityMap::constant(2, 2, v)).collect();
            let out = fuse_weighted(&maps, &FusionWeights::uniform(ws.clone())).unwrap();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for &v in out.values().iter().filter(|v| v.is_finite()) {
                prop_assert!(v >= lo && v <= hi);
            }
            let identical = vec![DisparityMap::constant(2, 2, vals[0]); 3];
            if ws.iter().any(|&w| w > 0.0) {
                let same = fuse_weighted(&identical, &FusionWeights::uniform(ws)).unwrap();
                prop_assert_eq!(same, DisparityMap::constant(2, 2, vals[0]));
            }
        }
    }
}
