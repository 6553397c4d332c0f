//! Multiscale variational refinement of a dense disparity map.
//!
//! Minimizes
//! `E(D) = Σ ρ(I_c(p) - I_n(p - δ D(p))) + λ Σ_{p~q} w_pq ρ(D(p) - D(q))`
//! where `I_c` is the center view, `I_n` a neighbouring view at angular
//! offset `δ`, `p~q` runs over 4-neighbour pairs, `w_pq` decays with the
//! center-view gradient and `ρ` is the Charbonnier penalty.
//!
//! Each iteration linearizes the warped residual, replaces both penalties
//! by their quadratic majorizers at the current iterate (lagged
//! diffusivity), solves the resulting sparse system by conjugate gradients
//! and moves toward its solution with halving backtracking. A step is
//! accepted only if the energy does not increase.

use ndarray::{Array2, Zip};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lightfield::{image_luma, LightField};
use crate::maps::DisparityMap;
use crate::pyramid::{downsample_disparity, level_sizes, pyramid_down_2d, upsample_disparity};
use crate::refine::{bilateral_filter, fill_nearest, median_filter_3x3};
use crate::sampling::Plane;

const MIN_LEVEL_EXTENT: usize = 8;
const MAX_HALVINGS: usize = 30;
/// Largest per-pixel change of one step; the linearized residual is only
/// trustworthy within about one pixel of warp.
const MAX_UPDATE: f64 = 1.0;
const CG_MAX_ITERS: usize = 50;
/// Relative energy decrease below which a level is considered converged.
const STOP_TOLERANCE: f64 = 1e-6;
const CG_TOLERANCE: f64 = 1e-4;

/// Jacobi-preconditioned conjugate gradients for `A x = b`, starting at 0.
/// Rows whose diagonal is zero are left at 0.
fn conjugate_gradient(
    apply: impl Fn(&Array2<f64>) -> Array2<f64>,
    b: &Array2<f64>,
    inv_diag: &Array2<f64>,
) -> Array2<f64> {
    let dot = |a: &Array2<f64>, c: &Array2<f64>| -> f64 {
        a.iter().zip(c.iter()).map(|(x, y)| x * y).sum()
    };
    let mut x = Array2::zeros(b.raw_dim());
    let mut r = b * inv_diag.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let b_norm = dot(&r, &r).sqrt();
    if b_norm == 0.0 {
        return x;
    }
    let mut z = &r * inv_diag;
    let mut dir = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..CG_MAX_ITERS {
        let ad = apply(&dir);
        let denom = dot(&dir, &ad);
        if !(denom > 0.0) {
            break;
        }
        let alpha = rz / denom;
        x.scaled_add(alpha, &dir);
        r.scaled_add(-alpha, &ad);
        if dot(&r, &r).sqrt() <= CG_TOLERANCE * b_norm {
            break;
        }
        z = &r * inv_diag;
        let rz_next = dot(&r, &z);
        dir = &z + &(rz_next / rz * &dir);
        rz = rz_next;
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyParams {
    pub lambda: f64,
    pub charbonnier_eps: f64,
    pub step_size: f64,
    pub max_iters: usize,
    pub n_levels: usize,
    pub bilateral_sigma_s: f64,
    pub bilateral_sigma_r: f64,
    /// Iterates are projected onto this interval when set.
    pub disparity_range: Option<(f64, f64)>,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            lambda: 0.1,
            charbonnier_eps: 1e-3,
            step_size: 0.5,
            max_iters: 100,
            n_levels: 3,
            bilateral_sigma_s: 1.0,
            bilateral_sigma_r: 0.1,
            disparity_range: None,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda must be non-negative"));
        }
        if !(self.charbonnier_eps > 0.0) {
            return Err(Error::invalid("charbonnier_eps must be positive"));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::invalid("step_size must be positive"));
        }
        if self.max_iters == 0 || self.n_levels == 0 {
            return Err(Error::invalid("max_iters and n_levels must be at least 1"));
        }
        if let Some((lo, hi)) = self.disparity_range {
            if !(lo < hi) {
                return Err(Error::invalid("disparity_range is empty"));
            }
        }
        Ok(())
    }
}

/// `ρ(t) = √(t² + ε²)`.
#[inline]
pub fn charbonnier(t: f64, eps: f64) -> f64 {
    (t * t + eps * eps).sqrt()
}

/// `ρ'(t) = t / ρ(t)`.
#[inline]
pub fn charbonnier_grad(t: f64, eps: f64) -> f64 {
    t / charbonnier(t, eps)
}

/// Result of [`energy_refine_traced`].
#[derive(Debug, Clone)]
pub struct EnergyOutcome {
    pub disparity: DisparityMap,
    /// Energy after initialization and after each accepted step, one list
    /// per pyramid level from coarsest to finest.
    pub energies: Vec<Vec<f64>>,
}

struct Level {
    center: Array2<f64>,
    neighbour: Array2<f64>,
    /// Weight of the edge between `(x, y)` and `(x + 1, y)`.
    wx: Array2<f64>,
    /// Weight of the edge between `(x, y)` and `(x, y + 1)`.
    wy: Array2<f64>,
    offset: (f64, f64),
    has_data: bool,
}

fn gradient_magnitude(img: &Array2<f64>) -> Array2<f64> {
    let (h, w) = img.dim();
    let diff = |a: f64, b: f64, span: usize| {
        if span == 0 {
            0.0
        } else {
            (a - b) / span as f64
        }
    };
    Array2::from_shape_fn((h, w), |(y, x)| {
        let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
        let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
        let gx = diff(img[[y, xr]], img[[y, xl]], xr - xl);
        let gy = diff(img[[yd, x]], img[[yu, x]], yd - yu);
        (gx * gx + gy * gy).sqrt()
    })
}

impl Level {
    fn new(
        center: Array2<f64>,
        neighbour: Array2<f64>,
        offset: (f64, f64),
        has_data: bool,
    ) -> Self {
        let (h, w) = center.dim();
        let g = gradient_magnitude(&center);
        let tau = g.mean().unwrap_or(0.0);
        let weight = |a: f64, b: f64| {
            if tau > 0.0 {
                (-(a + b) / (2.0 * tau)).exp()
            } else {
                1.0
            }
        };
        let wx = Array2::from_shape_fn((h, w.saturating_sub(1)), |(y, x)| {
            weight(g[[y, x]], g[[y, x + 1]])
        });
        let wy = Array2::from_shape_fn((h.saturating_sub(1), w), |(y, x)| {
            weight(g[[y, x]], g[[y + 1, x]])
        });
        Level {
            center,
            neighbour,
            wx,
            wy,
            offset,
            has_data,
        }
    }

    fn plane(&self) -> Plane<'_> {
        let (h, w) = self.neighbour.dim();
        Plane::new(self.neighbour.as_slice().expect("standard layout"), w, h, 1)
    }

    /// Photometric residual and its derivative with respect to `D(x, y)`.
    #[inline]
    fn residual(&self, plane: &Plane, d: f64, x: usize, y: usize) -> (f64, f64) {
        let (du, dv) = self.offset;
        let sx = x as f64 - du * d;
        let sy = y as f64 - dv * d;
        let r = self.center[[y, x]] - plane.bilinear(sx, sy, 0);
        let (gx, gy) = plane.bilinear_gradient(sx, sy, 0);
        (r, du * gx + dv * gy)
    }

    fn energy(&self, d: &Array2<f64>, p: &EnergyParams) -> f64 {
        let (h, w) = d.dim();
        let eps = p.charbonnier_eps;
        let plane = self.plane();
        let rows: Vec<f64> = (0..h)
            .into_par_iter()
            .map(|y| {
                let mut e = 0.0;
                for x in 0..w {
                    if self.has_data {
                        e += charbonnier(self.residual(&plane, d[[y, x]], x, y).0, eps);
                    }
                    if x + 1 < w {
                        e += p.lambda
                            * self.wx[[y, x]]
                            * charbonnier(d[[y, x]] - d[[y, x + 1]], eps);
                    }
                    if y + 1 < h {
                        e += p.lambda
                            * self.wy[[y, x]]
                            * charbonnier(d[[y, x]] - d[[y + 1, x]], eps);
                    }
                }
                e
            })
            .collect();
        rows.iter().sum()
    }

    /// Step toward the minimizer of the quadratic model in which the
    /// residual is linearized and both penalties are replaced by their
    /// quadratic majorizers at the current iterate.
    fn direction(&self, d: &Array2<f64>, p: &EnergyParams) -> Array2<f64> {
        let (h, w) = d.dim();
        let eps = p.charbonnier_eps;
        let plane = self.plane();
        let mut grad = Array2::zeros((h, w));
        let mut data_curv = Array2::zeros((h, w));
        if self.has_data {
            Zip::indexed(&mut grad)
                .and(&mut data_curv)
                .par_for_each(|(y, x), g, c| {
                    let (r, j) = self.residual(&plane, d[[y, x]], x, y);
                    let rho = charbonnier(r, eps);
                    *g = r / rho * j;
                    *c = j * j / rho;
                });
        }
        // Lagged edge weights λ w / ρ(ΔD) and the smoothness gradient.
        let mut ex = Array2::zeros(self.wx.raw_dim());
        let mut ey = Array2::zeros(self.wy.raw_dim());
        for y in 0..h {
            for x in 0..w {
                if x + 1 < w {
                    let t = d[[y, x]] - d[[y, x + 1]];
                    let k = p.lambda * self.wx[[y, x]] / charbonnier(t, eps);
                    ex[[y, x]] = k;
                    grad[[y, x]] += k * t;
                    grad[[y, x + 1]] -= k * t;
                }
                if y + 1 < h {
                    let t = d[[y, x]] - d[[y + 1, x]];
                    let k = p.lambda * self.wy[[y, x]] / charbonnier(t, eps);
                    ey[[y, x]] = k;
                    grad[[y, x]] += k * t;
                    grad[[y + 1, x]] -= k * t;
                }
            }
        }
        let apply = |v: &Array2<f64>| -> Array2<f64> {
            let mut out = &data_curv * v;
            for y in 0..h {
                for x in 0..w {
                    if x + 1 < w {
                        let f = ex[[y, x]] * (v[[y, x]] - v[[y, x + 1]]);
                        out[[y, x]] += f;
                        out[[y, x + 1]] -= f;
                    }
                    if y + 1 < h {
                        let f = ey[[y, x]] * (v[[y, x]] - v[[y + 1, x]]);
                        out[[y, x]] += f;
                        out[[y + 1, x]] -= f;
                    }
                }
            }
            out
        };
        let mut diag = data_curv.clone();
        for y in 0..h {
            for x in 0..w {
                if x + 1 < w {
                    diag[[y, x]] += ex[[y, x]];
                    diag[[y, x + 1]] += ex[[y, x]];
                }
                if y + 1 < h {
                    diag[[y, x]] += ey[[y, x]];
                    diag[[y + 1, x]] += ey[[y, x]];
                }
            }
        }
        let inv_diag = diag.mapv(|a| if a > 0.0 { 1.0 / a } else { 0.0 });
        let step = conjugate_gradient(apply, &grad.mapv(|g| -g), &inv_diag);
        step.mapv(|s| s.clamp(-MAX_UPDATE, MAX_UPDATE))
    }

    fn solve(
        &self,
        init: Array2<f64>,
        p: &EnergyParams,
        range: Option<(f64, f64)>,
    ) -> (Array2<f64>, Vec<f64>) {
        let project = |v: f64| match range {
            Some((lo, hi)) => v.clamp(lo, hi),
            None => v,
        };
        let mut d = init.mapv(project);
        let mut e = self.energy(&d, p);
        let mut energies = vec![e];
        let mut step = p.step_size;
        for _ in 0..p.max_iters {
            let dir = self.direction(&d, p);
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let mut cand = d.clone();
                Zip::from(&mut cand)
                    .and(&dir)
                    .for_each(|c, &s| *c = project(*c + step * s));
                let ec = self.energy(&cand, p);
                if ec <= e {
                    accepted = Some((cand, ec));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, ec)) = accepted else { break };
            let decrease = e - ec;
            d = cand;
            e = ec;
            energies.push(e);
            if decrease <= STOP_TOLERANCE * e.max(1e-12) {
                break;
            }
            step = (step * 2.0).min(p.step_size);
        }
        (d, energies)
    }
}

/// Angular offset of the view used for the photometric term: the
/// horizontal neighbour of the center view, or the vertical one when the
/// grid has a single column.
fn neighbour_view(lf: &LightField) -> Option<(usize, usize, f64, f64)> {
    let (cu, cv) = (lf.center_u(), lf.center_v());
    if lf.n_u() > 1 {
        let u = if cu + 1 < lf.n_u() { cu + 1 } else { cu - 1 };
        Some((u, cv, u as f64 - cu as f64, 0.0))
    } else if lf.n_v() > 1 {
        let v = if cv + 1 < lf.n_v() { cv + 1 } else { cv - 1 };
        Some((cu, v, 0.0, v as f64 - cv as f64))
    } else {
        None
    }
}

/// Like [`energy_refine`] and also returns the energy trace of every level.
pub fn energy_refine_traced(
    d0: &DisparityMap,
    lf: &LightField,
    p: &EnergyParams,
) -> Result<EnergyOutcome> {
    p.validate()?;
    let (h, w) = d0.dim();
    if (h, w) != (lf.height(), lf.width()) {
        return Err(Error::DimensionMismatch {
            expected: (lf.width(), lf.height()),
            found: (w, h),
        });
    }
    let d0 = fill_nearest(d0);
    if d0.valid_count() == 0 {
        return Err(Error::invalid(
            "energy refinement needs at least one valid disparity",
        ));
    }

    let center_img = image_luma(&lf.view(lf.center_u(), lf.center_v()).to_owned());
    let (neighbour_img, offset, has_data) = match neighbour_view(lf) {
        Some((u, v, du, dv)) => (image_luma(&lf.view(u, v).to_owned()), (du, dv), true),
        None => (center_img.clone(), (0.0, 0.0), false),
    };

    let n_levels = level_sizes(w, h, MIN_LEVEL_EXTENT)
        .len()
        .clamp(1, p.n_levels);
    let mut levels = vec![Level::new(center_img, neighbour_img, offset, has_data)];
    let mut priors = vec![d0.clone()];
    for k in 1..n_levels {
        let prev = &levels[k - 1];
        let c = pyramid_down_2d(&prev.center)?;
        let n = pyramid_down_2d(&prev.neighbour)?;
        levels.push(Level::new(c, n, offset, has_data));
        priors.push(downsample_disparity(&priors[k - 1]));
    }

    let mut energies = Vec::with_capacity(n_levels);
    let mut solution: Option<DisparityMap> = None;
    for k in (0..n_levels).rev() {
        let prior = &priors[k];
        let scale = 0.5f64.powi(k as i32);
        let range = p.disparity_range.map(|(lo, hi)| (lo * scale, hi * scale));
        let init = match &solution {
            None => prior.values().to_owned(),
            Some(coarse) => {
                // Candidates: the prior, the coarse solution itself, or the
                // prior plus the coarse correction; start from the best fit,
                // so refinement never begins worse than its input.
                let (pw, ph) = (prior.width(), prior.height());
                let level = &levels[k];
                let direct = upsample_disparity(coarse, pw, ph)?.values().to_owned();
                let delta = DisparityMap::dense(&coarse.values() - &priors[k + 1].values())?;
                let corrected = &prior.values() + &upsample_disparity(&delta, pw, ph)?.values();
                [prior.values().to_owned(), corrected, direct]
                    .into_iter()
                    .map(|c| (level.energy(&c, p), c))
                    .fold(
                        None,
                        |best: Option<(f64, Array2<f64>)>, (e, c)| match best {
                            Some((be, bc)) if be <= e => Some((be, bc)),
                            _ => Some((e, c)),
                        },
                    )
                    .expect("three candidates")
                    .1
            }
        };
        let (d, trace) = levels[k].solve(init, p, range);
        log::debug!(
            "energy level {k}: {} accepted steps, E = {:.6}",
            trace.len() - 1,
            trace.last().unwrap()
        );
        energies.push(trace);
        solution = Some(DisparityMap::dense(d)?);
    }

    let solved = solution.expect("at least one level");
    let guide = lf.view(lf.center_u(), lf.center_v()).to_owned();
    let smoothed = bilateral_filter(&solved, &guide, p.bilateral_sigma_s, p.bilateral_sigma_r)?;
    Ok(EnergyOutcome {
        disparity: median_filter_3x3(&smoothed),
        energies,
    })
}

/// Refines `d0` by multiscale energy minimization, then applies a
/// bilateral filter guided by the center view and a 3×3 median. Invalid
/// pixels of `d0` are first filled from their nearest valid neighbour.
pub fn energy_refine(d0: &DisparityMap, lf: &LightField, p: &EnergyParams) -> Result<DisparityMap> {
    Ok(energy_refine_traced(d0, lf, p)?.disparity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::synth::{synth_scene, SynthSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn charbonnier_basics() {
        let eps = 1e-3;
        assert_eq!(charbonnier(0.0, eps), eps);
        assert_eq!(charbonnier(0.7, eps), charbonnier(-0.7, eps));
        assert_eq!(charbonnier_grad(0.0, eps), 0.0);
    }

    #[test]
    fn charbonnier_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let t: f64 = rng.random_range(-3.0..3.0);
            let eps: f64 = rng.random_range(1e-3..1.0);
            let hstep = 1e-6 * (1.0 + t.abs());
            let fd = (charbonnier(t + hstep, eps) - charbonnier(t - hstep, eps)) / (2.0 * hstep);
            let an = charbonnier_grad(t, eps);
            let rel = (fd - an).abs() / an.abs().max(1e-8);
            assert!(rel < 1e-4, "t={t} eps={eps} fd={fd} an={an}");
        }
    }

    fn random_map(w: usize, h: usize, seed: u64) -> DisparityMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DisparityMap::dense(Array2::from_shape_fn((h, w), |_| {
            rng.random_range(-1.0..1.0)
        }))
        .unwrap()
    }

    #[test]
    fn energy_never_increases() {
        let spec = SynthSpec::single_plane(32, 3, 0.6, 3);
        let (lf, _) = synth_scene(&spec).unwrap();
        for seed in 0..5 {
            let out =
                energy_refine_traced(&random_map(32, 32, seed), &lf, &EnergyParams::default())
                    .unwrap();
            for trace in &out.energies {
                assert!(trace.windows(2).all(|e| e[1] <= e[0]));
            }
        }
    }

    #[test]
    fn stationary_at_ground_truth_without_smoothing() {
        let spec = SynthSpec::single_plane(48, 3, 1.0, 9);
        let (lf, gt) = synth_scene(&spec).unwrap();
        let p = EnergyParams {
            lambda: 0.0,
            ..EnergyParams::default()
        };
        let out = energy_refine(&gt, &lf, &p).unwrap();
        let worst = out
            .values()
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "worst deviation {worst}");
    }

    #[test]
    fn large_lambda_flattens() {
        let spec = SynthSpec::single_plane(32, 3, 0.5, 4);
        let (lf, _) = synth_scene(&spec).unwrap();
        let p = EnergyParams {
            lambda: 1e4,
            ..EnergyParams::default()
        };
        let out = energy_refine(&random_map(32, 32, 8), &lf, &p).unwrap();
        let vals: Vec<f64> = out.values().iter().cloned().collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
        assert!(sd < 1e-2, "stddev {sd}");
    }

    #[test]
    fn constant_field_has_no_data_term() {
        let lf = LightField::from_fn(16, 16, 3, 3, 1, |_, _, _, _, _| 0.4).unwrap();
        let d0 = random_map(16, 16, 2);
        let out = energy_refine_traced(&d0, &lf, &EnergyParams::default()).unwrap();
        let spread = |m: &DisparityMap| {
            let (lo, hi) = m.valid_range().unwrap();
            hi - lo
        };
        assert!(spread(&out.disparity) < spread(&d0));
    }

    #[test]
    fn rejects_bad_input() {
        let lf = LightField::from_fn(8, 8, 3, 3, 1, |_, _, _, _, _| 0.4).unwrap();
        assert!(
            energy_refine(&DisparityMap::invalid(8, 8), &lf, &EnergyParams::default()).is_err()
        );
        assert!(energy_refine(
            &DisparityMap::constant(4, 8, 0.0),
            &lf,
            &EnergyParams::default()
        )
        .is_err());
        let bad = EnergyParams {
            step_size: 0.0,
            ..EnergyParams::default()
        };
        assert!(energy_refine(&DisparityMap::constant(8, 8, 0.0), &lf, &bad).is_err());
    }
}
