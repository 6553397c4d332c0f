use std::collections::VecDeque;

use crate::maps::DisparityMap;

/// Gives every invalid pixel the value of its nearest valid pixel, nearness
/// measured in 4-connected steps. Ties resolve toward the source reached
/// first in a raster-order breadth-first sweep, so the result is
/// deterministic. A map without valid pixels is returned unchanged.
pub fn fill_nearest(d: &DisparityMap) -> DisparityMap {
    let (h, w) = d.dim();
    let mut out = d.clone();
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if d.is_valid(x, y) {
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        let v = out.get(x, y);
        let neighbours = [
            (x.wrapping_sub(1), y),
            (x + 1, y),
            (x, y.wrapping_sub(1)),
            (x, y + 1),
        ];
        for (nx, ny) in neighbours {
            if nx < w && ny < h && !out.is_valid(nx, ny) {
                out.set(nx, ny, v);
                queue.push_back((nx, ny));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_from_nearest_source() {
        let mut d = DisparityMap::invalid(7, 1);
        d.set(0, 0, Some(1.0));
        d.set(6, 0, Some(5.0));
        let f = fill_nearest(&d);
        let row: Vec<f64> = (0..7).map(|x| f.get(x, 0).unwrap()).collect();
        assert_eq!(row, vec![1.0, 1.0, 1.0, 1.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn dense_and_empty_maps_unchanged() {
        let d = DisparityMap::constant(3, 3, 0.2);
        assert_eq!(fill_nearest(&d), d);
        let e = DisparityMap::invalid(3, 3);
        assert_eq!(fill_nearest(&e), e);
    }

    #[test]
    fn valid_pixels_never_change() {
        let mut d = DisparityMap::invalid(5, 5);
        d.set(1, 3, Some(-0.5));
        d.set(4, 0, Some(0.25));
        let f = fill_nearest(&d);
        assert_eq!(f.valid_count(), 25);
        assert_eq!(f.get(1, 3), Some(-0.5));
        assert_eq!(f.get(4, 0), Some(0.25));
        assert_eq!(f.get(0, 4), Some(-0.5));
    }
}
