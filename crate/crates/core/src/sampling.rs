//! Bilinear sampling with clamp-to-edge borders.
//!
//! The interpolation is evaluated in lerp form,
//! `top = a + fx (b - a)`, `bottom = c + fx (d - c)`, `top + fy (bottom - top)`,
//! so integer coordinates return the stored sample bit-exactly.

/// Borrowed single view: `height × width × channels`, row-major.
#[derive(Debug, Clone, Copy)]
pub struct Plane<'a> {
    pub data: &'a [f64],
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

/// Integer corners and fractional weights of one bilinear lookup.
#[derive(Debug, Clone, Copy)]
pub struct Taps {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
    pub fx: f64,
    pub fy: f64,
    /// The requested coordinate fell outside `[0, w-1] × [0, h-1]`.
    pub clamped: bool,
}

impl Taps {
    #[inline]
    pub fn new(x: f64, y: f64, width: usize, height: usize) -> Taps {
        let xmax = (width - 1) as f64;
        let ymax = (height - 1) as f64;
        let clamped = !(x >= 0.0 && x <= xmax && y >= 0.0 && y <= ymax);
        let xc = x.clamp(0.0, xmax);
        let yc = y.clamp(0.0, ymax);
        let x0 = xc.floor() as usize;
        let y0 = yc.floor() as usize;
        Taps {
            x0,
            x1: (x0 + 1).min(width - 1),
            y0,
            y1: (y0 + 1).min(height - 1),
            fx: xc - x0 as f64,
            fy: yc - y0 as f64,
            clamped,
        }
    }
}

impl<'a> Plane<'a> {
    pub fn new(data: &'a [f64], width: usize, height: usize, channels: usize) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Plane {
            data,
            width,
            height,
            channels,
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn taps(&self, x: f64, y: f64) -> Taps {
        Taps::new(x, y, self.width, self.height)
    }

    #[inline]
    pub fn interpolate(&self, t: &Taps, c: usize) -> f64 {
        let a = self.at(t.x0, t.y0, c);
        let b = self.at(t.x1, t.y0, c);
        let cc = self.at(t.x0, t.y1, c);
        let d = self.at(t.x1, t.y1, c);
        let top = a + t.fx * (b - a);
        let bottom = cc + t.fx * (d - cc);
        top + t.fy * (bottom - top)
    }

    #[inline]
    pub fn bilinear(&self, x: f64, y: f64, c: usize) -> f64 {
        self.interpolate(&self.taps(x, y), c)
    }

    /// Partial derivatives of the interpolant at `(x, y)`; zero along an axis
    /// whose coordinate was clamped.
    #[inline]
    pub fn bilinear_gradient(&self, x: f64, y: f64, c: usize) -> (f64, f64) {
        let t = self.taps(x, y);
        let a = self.at(t.x0, t.y0, c);
        let b = self.at(t.x1, t.y0, c);
        let cc = self.at(t.x0, t.y1, c);
        let d = self.at(t.x1, t.y1, c);
        let inside_x = x >= 0.0 && x <= (self.width - 1) as f64;
        let inside_y = y >= 0.0 && y <= (self.height - 1) as f64;
        let gx = if inside_x && t.x1 != t.x0 {
            (1.0 - t.fy) * (b - a) + t.fy * (d - cc)
        } else {
            0.0
        };
        let gy = if inside_y && t.y1 != t.y0 {
            (1.0 - t.fx) * (cc - a) + t.fx * (d - b)
        } else {
            0.0
        };
        (gx, gy)
    }
}
