use ndarray::Array2;
use rayon::prelude::*;

use crate::maps::DisparityMap;

/// Lower median of the valid samples in the 3×3 window around `(x, y)`,
/// with border coordinates replicated.
fn window_median(d: &DisparityMap, x: usize, y: usize) -> Option<f64> {
    let (h, w) = d.dim();
    let mut buf = [0.0; 9];
    let mut n = 0;
    for dy in -1isize..=1 {
        let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
        for dx in -1isize..=1 {
            let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
            if let Some(v) = d.get(xx, yy) {
                buf[n] = v;
                n += 1;
            }
        }
    }
    if n == 0 {
        return None;
    }
    let s = &mut buf[..n];
    s.sort_unstable_by(f64::total_cmp);
    Some(s[(n - 1) / 2])
}

fn filter_rows(d: &DisparityMap, keep_mask: bool) -> DisparityMap {
    let (h, w) = d.dim();
    let rows: Vec<Vec<Option<f64>>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    if keep_mask && !d.is_valid(x, y) {
                        None
                    } else {
                        window_median(d, x, y)
                    }
                })
                .collect()
        })
        .collect();
    let mut values = Array2::from_elem((h, w), f64::NAN);
    let mut valid = Array2::from_elem((h, w), false);
    for (y, row) in rows.into_iter().enumerate() {
        for (x, v) in row.into_iter().enumerate() {
            if let Some(v) = v {
                values[[y, x]] = v;
                valid[[y, x]] = true;
            }
        }
    }
    DisparityMap::new(values, valid).expect("same shape")
}

/// 3×3 median over valid samples. A pixel with at least one valid sample in
/// its window becomes valid, so isolated holes are filled. With an even
/// number of valid samples the lower median is taken, which keeps the
/// output within the input values.
pub fn median_filter_3x3(d: &DisparityMap) -> DisparityMap {
    filter_rows(d, false)
}

/// Like [`median_filter_3x3`] but only valid pixels are filtered; the
/// validity mask is returned unchanged.
pub fn median_filter_valid(d: &DisparityMap) -> DisparityMap {
    filter_rows(d, true)
}
