use ndarray::{Array2, Array3};
use rayon::prelude::*;

use crate::maps::ConfidenceMap;

/// Sum of distances between each pixel and every pixel of the
/// `rows × cols` window centred on it, the window clipped to the image.
/// Distance is the absolute difference for one channel and the Euclidean
/// norm otherwise.
pub fn edge_confidence(img: &Array3<f64>, rows: usize, cols: usize) -> ConfidenceMap {
    let (h, w, c) = img.dim();
    let (ry, rx) = ((rows / 2) as isize, (cols / 2) as isize);
    let out: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..w).map(move |x| {
                let mut sum = 0.0;
                for yy in (y as isize - ry).max(0)..=(y as isize + ry).min(h as isize - 1) {
                    for xx in (x as isize - rx).max(0)..=(x as isize + rx).min(w as isize - 1) {
                        let (yy, xx) = (yy as usize, xx as usize);
                        sum += if c == 1 {
                            (img[[y, x, 0]] - img[[yy, xx, 0]]).abs()
                        } else {
                            (0..c)
                                .map(|ch| (img[[y, x, ch]] - img[[yy, xx, ch]]).powi(2))
                                .sum::<f64>()
                                .sqrt()
                        };
                    }
                }
                sum
            })
        })
        .collect();
    ConfidenceMap::from_raw(Array2::from_shape_vec((h, w), out).expect("shape"))
}
