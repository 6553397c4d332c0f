//! Procedural layered scenes with exact ground-truth disparity.
//!
//! Each layer is a fronto-parallel plane carrying a value-noise texture
//! `T(X, Y)` defined in reference-view pixel coordinates. View `(u, v)` sees
//! the layer point `X = x + (u - center_u) d`, `Y = y + (v - center_v) d` at
//! pixel `(x, y)`, so shearing by `d` brings the layer back into alignment.
//! Nearer layers (larger disparity) occlude farther ones.

use ndarray::{Array2, Array5};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lightfield::LightField;
use crate::maps::DisparityMap;

#[derive(Debug, Clone, PartialEq)]
pub struct TextureSpec {
    pub seed: u64,
    /// Lattice spacing of the coarsest octave, in pixels.
    pub period: f64,
    pub octaves: u32,
    pub mean: f64,
    /// Peak-to-peak amplitude; 0 gives a flat layer.
    pub contrast: f64,
}

impl TextureSpec {
    pub fn new(seed: u64) -> Self {
        TextureSpec {
            seed,
            period: 16.0,
            octaves: 2,
            mean: 0.5,
            contrast: 0.9,
        }
    }

    pub fn flat(mean: f64) -> Self {
        TextureSpec {
            seed: 0,
            period: 1.0,
            octaves: 1,
            mean,
            contrast: 0.0,
        }
    }

    /// Texture value at continuous coordinates for colour channel `ch`.
    pub fn sample(&self, x: f64, y: f64, ch: usize) -> f64 {
        if self.contrast == 0.0 {
            return self.mean;
        }
        let mut acc = 0.0;
        let mut norm = 0.0;
        let mut amp = 1.0;
        let mut period = self.period;
        for o in 0..self.octaves.max(1) {
            let salt = self.seed ^ ((o as u64) << 40) ^ ((ch as u64) << 52);
            acc += amp * (value_noise(x / period, y / period, salt) - 0.5);
            norm += amp;
            amp *= 0.5;
            period *= 0.5;
        }
        (self.mean + self.contrast * acc / norm).clamp(0.0, 1.0)
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn lattice(ix: i64, iy: i64, salt: u64) -> f64 {
    let h = mix(salt ^ mix((ix as u64) ^ mix(iy as u64 ^ 0xA5A5_A5A5)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn value_noise(x: f64, y: f64, salt: u64) -> f64 {
    let (fx, fy) = (x.floor(), y.floor());
    let (ix, iy) = (fx as i64, fy as i64);
    let (tx, ty) = (fade(x - fx), fade(y - fy));
    let a = lattice(ix, iy, salt);
    let b = lattice(ix + 1, iy, salt);
    let c = lattice(ix, iy + 1, salt);
    let d = lattice(ix + 1, iy + 1, salt);
    let top = a + tx * (b - a);
    let bottom = c + tx * (d - c);
    top + ty * (bottom - top)
}

/// Where a layer exists, in reference-view pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Full,
    /// Half-open `[x0, x1) × [y0, y1)`.
    Rect {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },
    Disk {
        cx: f64,
        cy: f64,
        r: f64,
    },
}

impl Region {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Region::Full => true,
            Region::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Region::Disk { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) < r * r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub disparity: f64,
    pub texture: TextureSpec,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub n_u: usize,
    pub n_v: usize,
    pub channels: usize,
    pub layers: Vec<Layer>,
    pub noise_sigma: f64,
    pub noise_seed: u64,
    pub disparity_range: (f64, f64),
}

impl SynthSpec {
    /// One textured plane covering the whole frame.
    pub fn single_plane(size: usize, views: usize, disparity: f64, seed: u64) -> Self {
        SynthSpec {
            width: size,
            height: size,
            n_u: views,
            n_v: views,
            channels: 1,
            layers: vec![Layer {
                disparity,
                texture: TextureSpec::new(seed),
                region: Region::Full,
            }],
            noise_sigma: 0.0,
            noise_seed: seed,
            disparity_range: (-2.0, 2.0),
        }
    }

    /// Full-frame background plus nested centred rectangles, one per
    /// additional disparity; nearer disparities get smaller rectangles.
    pub fn nested_layers(size: usize, views: usize, disparities: &[f64], seed: u64) -> Self {
        let mut sorted: Vec<f64> = disparities.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite disparity"));
        let s = size as f64;
        let layers = sorted
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                let region = if k == 0 {
                    Region::Full
                } else {
                    let inset = (0.2 + 0.1 * (k - 1) as f64).min(0.45) * s;
                    Region::Rect {
                        x0: inset.round(),
                        y0: inset.round(),
                        x1: (s - inset).round(),
                        y1: (s - inset).round(),
                    }
                };
                Layer {
                    disparity: d,
                    texture: TextureSpec::new(seed.wrapping_add(k as u64 * 7919)),
                    region,
                }
            })
            .collect();
        SynthSpec {
            width: size,
            height: size,
            n_u: views,
            n_v: views,
            channels: 1,
            layers,
            noise_sigma: 0.0,
            noise_seed: seed,
            disparity_range: (-2.0, 2.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.n_u == 0 || self.n_v == 0 {
            return Err(Error::invalid(
                "synthetic scene dimensions must be positive",
            ));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::invalid("synthetic scene needs 1 or 3 channels"));
        }
        if self.layers.is_empty() {
            return Err(Error::invalid("synthetic scene needs at least one layer"));
        }
        let (lo, hi) = self.disparity_range;
        if !(lo < hi) {
            return Err(Error::invalid("empty disparity range"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.disparity >= lo && l.disparity <= hi) {
                return Err(Error::invalid(format!(
                    "layer {i} disparity {} outside [{lo}, {hi}]",
                    l.disparity
                )));
            }
            let t = &l.texture;
            if !(t.period > 0.0 && t.contrast >= 0.0 && (0.0..=1.0).contains(&t.mean)) {
                return Err(Error::invalid(format!("layer {i} has an invalid texture")));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma must be non-negative"));
        }
        Ok(())
    }

    /// Layer indices nearest first; equal disparities keep list order.
    fn depth_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.layers.len()).collect();
        order.sort_by(|&a, &b| {
            self.layers[b]
                .disparity
                .partial_cmp(&self.layers[a].disparity)
                .expect("finite")
        });
        order
    }

    /// Index of the layer visible at pixel `(x, y)` of view `(u, v)`.
    pub fn visible_layer(&self, x: usize, y: usize, u: usize, v: usize) -> Option<usize> {
        let (cu, cv) = ((self.n_u / 2) as f64, (self.n_v / 2) as f64);
        self.depth_order().into_iter().find(|&i| {
            let l = &self.layers[i];
            let (xs, ys) = layer_coords(x, y, u, v, cu, cv, l.disparity);
            l.region.contains(xs, ys)
        })
    }
}

#[inline]
fn layer_coords(x: usize, y: usize, u: usize, v: usize, cu: f64, cv: f64, d: f64) -> (f64, f64) {
    (
        x as f64 + (u as f64 - cu) * d,
        y as f64 + (v as f64 - cv) * d,
    )
}

/// Renders the field and the reference-view ground truth.
pub fn synth_scene(spec: &SynthSpec) -> Result<(LightField, DisparityMap)> {
    spec.validate()?;
    let (w, h, c) = (spec.width, spec.height, spec.channels);
    let (n_u, n_v) = (spec.n_u, spec.n_v);
    let (cu, cv) = ((n_u / 2) as f64, (n_v / 2) as f64);
    let order = spec.depth_order();
    let view_len = w * h * c;
    let mut data = vec![0.0; view_len * n_u * n_v];
    data.par_chunks_mut(view_len)
        .enumerate()
        .for_each(|(i, dst)| {
            let (v, u) = (i / n_u, i % n_u);
            for y in 0..h {
                for x in 0..w {
                    let hit = order.iter().find_map(|&k| {
                        let l = &spec.layers[k];
                        let (xs, ys) = layer_coords(x, y, u, v, cu, cv, l.disparity);
                        l.region.contains(xs, ys).then_some((l, xs, ys))
                    });
                    for ch in 0..c {
                        dst[(y * w + x) * c + ch] = match hit {
                            Some((l, xs, ys)) => l.texture.sample(xs, ys, ch),
                            None => 0.0,
                        };
                    }
                }
            }
        });
    if spec.noise_sigma > 0.0 {
        let normal =
            Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
        for s in data.iter_mut() {
            *s = (*s + normal.sample(&mut rng)).clamp(0.0, 1.0);
        }
    }
    let lf = LightField::new(Array5::from_shape_vec((n_v, n_u, h, w, c), data).expect("shape"))?;

    let (ucen, vcen) = (n_u / 2, n_v / 2);
    let mut values = Array2::from_elem((h, w), f64::NAN);
    let mut valid = Array2::from_elem((h, w), false);
    for y in 0..h {
        for x in 0..w {
            if let Some(k) = spec.visible_layer(x, y, ucen, vcen) {
                values[[y, x]] = spec.layers[k].disparity;
                valid[[y, x]] = true;
            }
        }
    }
    Ok((lf, DisparityMap::new(values, valid)?))
}
