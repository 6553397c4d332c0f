use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::epi::{epi_level0_dense, fine_to_coarse, EpiParams};
use crate::error::{Error, Result};
use crate::eval::metrics::{error_map, mse, psnr_from_mse};
use crate::io::write_gray_png;
use crate::lightfield::{LightField, SceneMeta};
use crate::lsg::{estimate_lsg, LsgParams};
use crate::maps::DisparityMap;
use crate::sweep::{estimate_sweep, SweepParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Lsg,
    Sweep,
    /// Level-0 EPI estimate with its holes filled, so it is scored on the
    /// same pixels as the others.
    EpiLevel0,
    EpiFinal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Lsg,
        Algorithm::Sweep,
        Algorithm::EpiLevel0,
        Algorithm::EpiFinal,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Lsg => "lsg",
            Algorithm::Sweep => "sweep",
            Algorithm::EpiLevel0 => "epi-level0",
            Algorithm::EpiFinal => "epi-final",
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?}"))
    }
}

/// A light field with its metadata and optional ground truth.
#[derive(Debug, Clone)]
pub struct Scene {
    pub lf: LightField,
    pub meta: SceneMeta,
    pub gt: Option<DisparityMap>,
}

impl Scene {
    fn ground_truth(&self) -> Result<&DisparityMap> {
        self.gt
            .as_ref()
            .ok_or_else(|| Error::MissingGroundTruth(self.meta.name.clone()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkParams {
    pub lsg: LsgParams,
    pub sweep: SweepParams,
    pub epi: EpiParams,
    /// Timed runs per estimator; the median is reported.
    pub repetitions: usize,
    /// Error maps are written here as `error_<algorithm>.png` when set.
    pub error_map_dir: Option<PathBuf>,
}

impl BenchmarkParams {
    pub fn for_scene(meta: &SceneMeta) -> Self {
        BenchmarkParams {
            lsg: LsgParams::default(),
            sweep: SweepParams::for_scene(meta),
            epi: EpiParams::for_scene(meta),
            repetitions: 3,
            error_map_dir: None,
        }
    }
}

/// Runs one estimator and returns its output.
pub fn run_algorithm(
    algo: Algorithm,
    scene: &Scene,
    params: &BenchmarkParams,
) -> Result<DisparityMap> {
    match algo {
        Algorithm::Lsg => estimate_lsg(&scene.lf, &scene.meta, &params.lsg),
        Algorithm::Sweep => estimate_sweep(&scene.lf, &params.sweep),
        Algorithm::EpiLevel0 => epi_level0_dense(&scene.lf, &params.epi),
        Algorithm::EpiFinal => fine_to_coarse(&scene.lf, &params.epi),
    }
}

/// Runs `f` `reps` times (at least once) and returns its last output with
/// the median wall-clock time in seconds.
pub fn time_median<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut times = Vec::with_capacity(reps.max(1));
    let mut out = None;
    for _ in 0..reps.max(1) {
        let t0 = Instant::now();
        let v = f()?;
        times.push(t0.elapsed().as_secs_f64());
        out = Some(v);
    }
    times.sort_by(f64::total_cmp);
    Ok((out.expect("at least one run"), times[times.len() / 2]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub algorithm: String,
    pub psnr_db: f64,
    pub mse: f64,
    pub runtime_s: f64,
    pub error_map: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scene: String,
    /// Peak value used for PSNR: the span of the scene's disparity range.
    pub max_i: f64,
    pub rows: Vec<ReportRow>,
}

pub const REPORT_HEADER: &str = "scene,algorithm,psnr_db,mse,runtime_s,error_map";

impl EvalReport {
    pub fn row(&self, algorithm: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }

    /// Floats use shortest round-trip formatting, so the CSV reproduces the
    /// stored values exactly. Infinite PSNR is written as `inf`.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# max_I={}\n{REPORT_HEADER}\n", self.max_i);
        for r in &self.rows {
            let map = r
                .error_map
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default();
            writeln!(
                s,
                "{},{},{},{},{},{}",
                self.scene, r.algorithm, r.psnr_db, r.mse, r.runtime_s, map
            )
            .expect("writing to a String");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Config {
            line,
            message: msg.into(),
        };
        let mut lines = text.lines().enumerate();
        let max_i = lines
            .next()
            .and_then(|(_, l)| l.strip_prefix("# max_I="))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(1, "expected `# max_I=<value>`"))?;
        match lines.next() {
            Some((_, h)) if h == REPORT_HEADER => {}
            _ => return Err(bad(2, "unexpected report header")),
        }
        let mut scene = String::new();
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(i + 1, "expected 6 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
            scene = f[0].to_string();
            rows.push(ReportRow {
                algorithm: f[1].to_string(),
                psnr_db: num(f[2])?,
                mse: num(f[3])?,
                runtime_s: num(f[4])?,
                error_map: (!f[5].is_empty()).then(|| PathBuf::from(f[5])),
            });
        }
        Ok(EvalReport { scene, max_i, rows })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Times each algorithm and scores it against the scene's ground truth.
/// Rows run sequentially so timings do not compete.
pub fn run_benchmark(
    scene: &Scene,
    algorithms: &[Algorithm],
    params: &BenchmarkParams,
) -> Result<EvalReport> {
    let gt = scene.ground_truth()?;
    let max_i = scene.meta.disparity_span();
    if let Some(dir) = &params.error_map_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut rows = Vec::with_capacity(algorithms.len());
    for &algo in algorithms {
        let (pred, runtime_s) =
            time_median(params.repetitions, || run_algorithm(algo, scene, params))?;
        let m = mse(&pred, gt)?;
        let error_map_path = match &params.error_map_dir {
            Some(dir) => {
                let path = dir.join(format!("error_{}.png", algo.id()));
                write_gray_png(&error_map(&pred, gt)?, &path, 0.0, max_i)?;
                Some(path)
            }
            None => None,
        };
        log::info!("{}: mse {m:.6} in {runtime_s:.3} s", algo.id());
        rows.push(ReportRow {
            algorithm: algo.id().to_string(),
            psnr_db: psnr_from_mse(m, max_i),
            mse: m,
            runtime_s,
            error_map: error_map_path,
        });
    }
    Ok(EvalReport {
        scene: scene.meta.name.clone(),
        max_i,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRow {
    pub count: usize,
    pub mse: f64,
    pub runtime_s: f64,
}

/// Plane sweeping over the scene range at each hypothesis count.
pub fn depth_count_sweep(
    scene: &Scene,
    counts: &[usize],
    base: &SweepParams,
    repetitions: usize,
) -> Result<Vec<CountRow>> {
    let gt = scene.ground_truth()?;
    if let Some(&c) = counts.iter().find(|&&c| c < 2) {
        return Err(Error::invalid(format!("depth count {c} is below 2")));
    }
    counts
        .iter()
        .map(|&count| {
            let p = base.clone().with_count(count);
            let (pred, runtime_s) = time_median(repetitions, || estimate_sweep(&scene.lf, &p))?;
            Ok(CountRow {
                count,
                mse: mse(&pred, gt)?,
                runtime_s,
            })
        })
        .collect()
}

pub fn count_rows_csv(rows: &[CountRow]) -> String {
    let mut s = String::from("count,mse,runtime_s\n");
    for r in rows {
        writeln!(s, "{},{},{}", r.count, r.mse, r.runtime_s).expect("writing to a String");
    }
    s
}
