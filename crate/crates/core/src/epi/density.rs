//! Kernel density score of a radiance sample with mean-shift mode seeking.

/// Kernel profile applied to the radiance distance `t ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    /// `max(0, 1 - t/h)`.
    #[default]
    Triangular,
    /// `1 - h/t` for `t ≥ h`, else 0: the form that rewards distant samples.
    PaperLiteral,
}

impl Kernel {
    #[inline]
    pub fn eval(self, t: f64, h: f64) -> f64 {
        match self {
            Kernel::Triangular => (1.0 - t / h).max(0.0),
            Kernel::PaperLiteral => {
                if t >= h {
                    1.0 - h / t
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Triangular => "triangular",
            Kernel::PaperLiteral => "paper-literal",
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "triangular" => Ok(Kernel::Triangular),
            "paper-literal" => Ok(Kernel::PaperLiteral),
            other => Err(format!("unknown kernel {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanShift {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for MeanShift {
    fn default() -> Self {
        MeanShift {
            max_iters: 20,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density {
    /// Mean kernel weight of the samples about the mode, in `[0, 1]`.
    pub score: f64,
    /// Mode; only the first `channels` entries are meaningful.
    pub mode: [f64; 3],
    pub iterations: usize,
}

#[inline]
fn distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        (a[0] - b[0]).abs()
    } else {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// Score `S = mean K(‖r - r̄‖)` of `samples` (interleaved, `channels` per
/// radiance) about the mode `r̄` found by mean shift from `init`, or from
/// the sample mean when `init` is `None`. If every kernel weight vanishes
/// the score is 0 and the mode stays where it was.
pub fn density_score(
    samples: &[f64],
    channels: usize,
    bandwidth: f64,
    kernel: Kernel,
    ms: MeanShift,
    init: Option<&[f64]>,
) -> Density {
    assert!((1..=3).contains(&channels) && !samples.is_empty());
    if channels == 1 {
        return density_gray(samples, bandwidth, kernel, ms, init.map(|i| i[0]));
    }
    let n = samples.len() / channels;
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut mode = [0.0; 3];
    for r in samples.chunks_exact(channels) {
        for c in 0..channels {
            lo[c] = lo[c].min(r[c]);
            hi[c] = hi[c].max(r[c]);
            mode[c] += r[c];
        }
    }
    match init {
        Some(init) => mode[..channels].copy_from_slice(&init[..channels]),
        None => mode[..channels].iter_mut().for_each(|m| *m /= n as f64),
    }

    let mut iterations = 0;
    for _ in 0..ms.max_iters {
        let mut wsum = 0.0;
        let mut shift = [0.0; 3];
        for r in samples.chunks_exact(channels) {
            let k = kernel.eval(distance(r, &mode[..channels]), bandwidth);
            if k > 0.0 {
                wsum += k;
                for c in 0..channels {
                    shift[c] += k * (r[c] - mode[c]);
                }
            }
        }
        if wsum == 0.0 {
            return Density {
                score: 0.0,
                mode,
                iterations,
            };
        }
        iterations += 1;
        let mut moved = 0.0;
        for c in 0..channels {
            let next = (mode[c] + shift[c] / wsum).clamp(lo[c], hi[c]);
            moved += (next - mode[c]) * (next - mode[c]);
            mode[c] = next;
        }
        if moved.sqrt() < ms.tol {
            break;
        }
    }
    let total: f64 = samples
        .chunks_exact(channels)
        .map(|r| kernel.eval(distance(r, &mode[..channels]), bandwidth))
        .sum();
    Density {
        score: total / n as f64,
        mode,
        iterations,
    }
}

/// Single-channel specialisation of [`density_score`] with identical
/// arithmetic. Zero weights add nothing to either sum, so the loops skip
/// the branch.
fn density_gray(
    samples: &[f64],
    bandwidth: f64,
    kernel: Kernel,
    ms: MeanShift,
    init: Option<f64>,
) -> Density {
    match kernel {
        Kernel::Triangular => {
            mean_shift_gray(samples, ms, init, |t| (1.0 - t / bandwidth).max(0.0))
        }
        Kernel::PaperLiteral => mean_shift_gray(samples, ms, init, |t| {
            Kernel::PaperLiteral.eval(t, bandwidth)
        }),
    }
}

#[inline(always)]
fn mean_shift_gray(
    samples: &[f64],
    ms: MeanShift,
    init: Option<f64>,
    k: impl Fn(f64) -> f64,
) -> Density {
    let n = samples.len() as f64;
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &r in samples {
        lo = lo.min(r);
        hi = hi.max(r);
        sum += r;
    }
    let mut mode = init.unwrap_or(sum / n);
    let mut iterations = 0;
    for _ in 0..ms.max_iters {
        let (mut wsum, mut shift) = (0.0, 0.0);
        for &r in samples {
            let w = k((r - mode).abs());
            wsum += w;
            shift += w * (r - mode);
        }
        if wsum == 0.0 {
            return Density {
                score: 0.0,
                mode: [mode, 0.0, 0.0],
                iterations,
            };
        }
        iterations += 1;
        let next = (mode + shift / wsum).clamp(lo, hi);
        let moved = (next - mode).abs();
        mode = next;
        if moved < ms.tol {
            break;
        }
    }
    let total: f64 = samples.iter().map(|&r| k((r - mode).abs())).sum();
    Density {
        score: total / n,
        mode: [mode, 0.0, 0.0],
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const H: f64 = 0.1;

    #[test]
    fn all_equal_is_a_fixed_point() {
        let r = vec![0.37; 9];
        let d = density_score(&r, 1, H, Kernel::Triangular, MeanShift::default(), None);
        assert_eq!(d.mode[0], 0.37);
        assert_eq!(d.score, 1.0);
    }

    #[test]
    fn two_clusters_from_zero() {
        let mut r = vec![0.0; 5];
        r.extend(vec![1.0; 5]);
        let d = density_score(
            &r,
            1,
            H,
            Kernel::Triangular,
            MeanShift::default(),
            Some(&[0.0]),
        );
        assert_eq!(d.mode[0], 0.0);
        assert_eq!(d.score, 0.5);
        assert!(d.iterations < 5);
    }

    #[test]
    fn zero_weights_leave_mode_alone() {
        let r = vec![0.0, 1.0];
        let d = density_score(&r, 1, H, Kernel::Triangular, MeanShift::default(), None);
        assert_eq!(d.score, 0.0);
        assert_eq!(d.mode[0], 0.5);
    }

    #[test]
    fn spread_samples_score_low() {
        let r: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let d = density_score(&r, 1, H, Kernel::Triangular, MeanShift::default(), None);
        // Oracle: at most 19 samples lie within h of any point, each weight ≤ 1,
        // and their weights sum to at most 1 + 2 Σ_{k=1..9} (1 - k/10) = 10.
        assert!(d.score <= 10.0 / 101.0 + 1e-12, "{}", d.score);
    }

    #[test]
    fn paper_literal_kernel_breaks_fixed_point() {
        let r = vec![0.37; 9];
        let d = density_score(&r, 1, H, Kernel::PaperLiteral, MeanShift::default(), None);
        assert_eq!(d.score, 0.0);
        assert_eq!(Kernel::PaperLiteral.eval(0.2, H), 0.5);
    }

    #[test]
    fn color_distance() {
        let r = vec![0.2, 0.2, 0.2, 0.2, 0.26, 0.28];
        let d = density_score(
            &r,
            3,
            H,
            Kernel::Triangular,
            MeanShift::default(),
            Some(&[0.2, 0.2, 0.2]),
        );
        assert!(d.score > 0.0 && d.score < 1.0);
        assert_eq!(
            "paper-literal".parse::<Kernel>().unwrap(),
            Kernel::PaperLiteral
        );
        assert!("box".parse::<Kernel>().is_err());
    }

    proptest! {
        #[test]
        fn kernel_properties(a in 0.0f64..1.0, b in 0.0f64..1.0, h in 0.01f64..1.0) {
            let k = Kernel::Triangular;
            prop_assert_eq!(k.eval(0.0, h), 1.0);
            let (s, t) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(k.eval(s, h) >= k.eval(t, h));
            if a >= h {
                prop_assert_eq!(k.eval(a, h), 0.0);
            } else {
                prop_assert!(k.eval(a, h) > 0.0);
            }
        }

        #[test]
        fn mean_shift_stays_in_hull(
            r in proptest::collection::vec(0.0f64..1.0, 1..40),
            init_idx in 0usize..40,
            h in 0.02f64..0.5,
        ) {
            let init = r[init_idx % r.len()];
            let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for max_iters in 1..6 {
                let ms = MeanShift { max_iters, tol: 0.0 };
                let d = density_score(&r, 1, h, Kernel::Triangular, ms, Some(&[init]));
                prop_assert!(d.mode[0] >= lo && d.mode[0] <= hi);
                prop_assert!((0.0..=1.0).contains(&d.score));
            }
        }
    }
}
