//! Portable float map, single channel (`Pf`) only.
//!
//! Layout: `Pf\n<w> <h>\n<scale>\n` followed by `w·h` 4-byte floats. A
//! negative scale means little-endian. Rows are stored bottom-up on disk and
//! returned top-down.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::maps::DisparityMap;

pub fn decode_pfm(bytes: &[u8]) -> Result<Array2<f32>> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Pfm("truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = token()?;
    match magic.as_str() {
        "Pf" => {}
        "PF" => {
            return Err(Error::Pfm(
                "3-channel PF map where grayscale Pf expected".into(),
            ))
        }
        other => return Err(Error::Pfm(format!("bad magic {other:?}"))),
    }
    let width: usize = token()?
        .parse()
        .map_err(|_| Error::Pfm("bad width".into()))?;
    let height: usize = token()?
        .parse()
        .map_err(|_| Error::Pfm("bad height".into()))?;
    let scale: f64 = token()?
        .parse()
        .map_err(|_| Error::Pfm("bad scale".into()))?;
    if width == 0 || height == 0 {
        return Err(Error::Pfm(format!("non-positive size {width}x{height}")));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Pfm("scale must be nonzero".into()));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Pfm("missing header terminator".into()));
    }
    pos += 1;

    let payload = &bytes[pos..];
    let needed = width * height * 4;
    if payload.len() < needed {
        return Err(Error::Pfm(format!(
            "payload has {} bytes, expected {needed}",
            payload.len()
        )));
    }
    let little = scale < 0.0;
    let mut out = Array2::zeros((height, width));
    for (i, chunk) in payload[..needed].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (row, col) = (i / width, i % width);
        out[[height - 1 - row, col]] = v;
    }
    Ok(out)
}

/// Little-endian encoding with scale `-1.0`.
pub fn encode_pfm(map: &Array2<f32>) -> Vec<u8> {
    let (h, w) = map.dim();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for row in map.rows().into_iter().rev() {
        for &v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<Array2<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes)
}

pub fn write_pfm(map: &Array2<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pfm(map)).map_err(|e| Error::io(path, e))
}

/// Non-finite samples become invalid pixels.
pub fn read_disparity_pfm(path: impl AsRef<Path>) -> Result<DisparityMap> {
    let raw = read_pfm(path)?;
    Ok(DisparityMap::from_sentinel(raw.mapv(f64::from)))
}

/// Invalid pixels are written as NaN.
pub fn write_disparity_pfm(d: &DisparityMap, path: impl AsRef<Path>) -> Result<()> {
    write_pfm(&d.to_sentinel_array().mapv(|v| v as f32), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_trip_constant() {
        let m = Array2::from_elem((4, 4), 1.5f32);
        assert_eq!(decode_pfm(&encode_pfm(&m)).unwrap(), m);
    }

    #[test]
    fn crafted_little_endian() {
        // Bytes assembled independently: rows bottom-up, LE floats.
        let mut bytes = b"Pf\n2 2\n-1.0\n".to_vec();
        for v in [3.0f32, 4.0, 1.0, 2.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let m = decode_pfm(&bytes).unwrap();
        assert_eq!(m, ndarray::array![[1.0f32, 2.0], [3.0, 4.0]]);
    }

    #[test]
    fn big_endian_positive_scale() {
        let mut bytes = b"Pf\n1 2\n1.0\n".to_vec();
        for v in [7.0f32, -0.25] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let m = decode_pfm(&bytes).unwrap();
        assert_eq!(m, ndarray::array![[-0.25f32], [7.0]]);
    }

    #[test]
    fn rejects_color_and_garbage() {
        assert!(matches!(
            decode_pfm(b"PF\n1 1\n-1.0\n000000000000"),
            Err(Error::Pfm(_))
        ));
        assert!(decode_pfm(b"P6\n1 1\n-1.0\n0000").is_err());
        assert!(decode_pfm(b"Pf\n2 2\n-1.0\n0000").is_err());
        assert!(decode_pfm(b"Pf\n2 2\n0.0\n0000000000000000").is_err());
        assert!(decode_pfm(b"Pf\n0 2\n-1.0\n").is_err());
        assert!(decode_pfm(b"Pf\n2").is_err());
    }

    #[test]
    fn invalid_pixels_survive_as_nan() {
        let mut d = DisparityMap::constant(3, 2, 0.5);
        d.set(1, 1, None);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pfm");
        write_disparity_pfm(&d, &p).unwrap();
        let back = read_disparity_pfm(&p).unwrap();
        assert_eq!(back.valid(), d.valid());
        assert_eq!(back.get(0, 0), Some(0.5));
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(
            w in 1usize..9,
            h in 1usize..9,
            bits in proptest::collection::vec(any::<u32>(), 64),
        ) {
            let m = Array2::from_shape_fn((h, w), |(y, x)| {
                let v = f32::from_bits(bits[(y * w + x) % bits.len()]);
                if v.is_finite() { v } else { f32::from_bits(1) } // subnormal
            });
            let back = decode_pfm(&encode_pfm(&m)).unwrap();
            for (a, b) in m.iter().zip(back.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
