//! 8-bit PNG views and visualisation of scalar maps.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb, RgbImage};
use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

/// Maps `[lo, hi]` affinely onto `[0, 255]` with clamping. Values are
/// rounded half away from zero, so the midpoint renders as 128. Non-finite
/// (invalid) samples render as 0.
pub fn gray_bytes(map: &Array2<f64>, lo: f64, hi: f64) -> Result<GrayImage> {
    if !(lo < hi) {
        return Err(Error::invalid(format!("png range [{lo}, {hi}] is empty")));
    }
    let (h, w) = map.dim();
    let scale = 255.0 / (hi - lo);
    Ok(ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let v = map[[y as usize, x as usize]];
        let px = if v.is_finite() {
            ((v - lo) * scale).clamp(0.0, 255.0).round() as u8
        } else {
            0
        };
        Luma([px])
    }))
}

pub fn write_gray_png(map: &Array2<f64>, path: impl AsRef<Path>, lo: f64, hi: f64) -> Result<()> {
    let path = path.as_ref();
    gray_bytes(map, lo, hi)?
        .save(path)
        .map_err(|source| Error::Image {
            path: path.into(),
            source,
        })
}

/// Quantizes a `[0, 1]` view (1 or 3 channels) to 8 bits and writes it.
pub fn write_view_png(view: &Array3<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (h, w, c) = view.dim();
    let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let result = match c {
        1 => GrayImage::from_fn(w as u32, h as u32, |x, y| {
            Luma([q(view[[y as usize, x as usize, 0]])])
        })
        .save(path),
        3 => RgbImage::from_fn(w as u32, h as u32, |x, y| {
            let (x, y) = (x as usize, y as usize);
            Rgb([q(view[[y, x, 0]]), q(view[[y, x, 1]]), q(view[[y, x, 2]])])
        })
        .save(path),
        _ => return Err(Error::invalid(format!("cannot write {c}-channel view"))),
    };
    result.map_err(|source| Error::Image {
        path: path.into(),
        source,
    })
}

/// Decoded view shaped `(height, width, channels)` with samples in `[0, 1]`.
/// Gray images give one channel, everything else three (alpha dropped).
pub(crate) fn decode_view(img: DynamicImage) -> Array3<f64> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(g) => Array3::from_shape_fn((h, w, 1), |(y, x, _)| {
            g.get_pixel(x as u32, y as u32)[0] as f64 / 255.0
        }),
        DynamicImage::ImageLuma16(g) => Array3::from_shape_fn((h, w, 1), |(y, x, _)| {
            g.get_pixel(x as u32, y as u32)[0] as f64 / 65535.0
        }),
        DynamicImage::ImageLumaA8(_) => {
            let g = img.to_luma8();
            Array3::from_shape_fn((h, w, 1), |(y, x, _)| {
                g.get_pixel(x as u32, y as u32)[0] as f64 / 255.0
            })
        }
        DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_)
        | DynamicImage::ImageLumaA16(_) => {
            let rgb = img.to_rgb16();
            Array3::from_shape_fn((h, w, 3), |(y, x, c)| {
                rgb.get_pixel(x as u32, y as u32)[c] as f64 / 65535.0
            })
        }
        _ => {
            let rgb = img.to_rgb8();
            Array3::from_shape_fn((h, w, 3), |(y, x, c)| {
                rgb.get_pixel(x as u32, y as u32)[c] as f64 / 255.0
            })
        }
    }
}

pub fn read_view_png(path: impl AsRef<Path>) -> Result<Array3<f64>> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.into(),
        source,
    })?;
    Ok(decode_view(img))
}
