//! Command-line frontend for `lfdepth`.
//!
//! Every subcommand that writes into an output directory also writes
//! `manifest.txt`, a `key=value` record of the effective parameters.

// `!(a < b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lfdepth::epi::{fine_to_coarse, EpiParams, Kernel};
use lfdepth::eval::{
    count_rows_csv, depth_count_sweep, error_map, mse, psnr_from_mse, run_benchmark, Algorithm,
    BenchmarkParams, Scene,
};
use lfdepth::io::{
    load_lightfield, read_disparity_pfm, save_scene, synth_scene, write_disparity_pfm,
    write_gray_png, SceneConfig, SynthSpec,
};
use lfdepth::lsg::{estimate_lsg, LsgParams};
use lfdepth::refine::{
    bilateral_filter, energy_refine, fuse_weighted, median_filter_3x3, EnergyParams, FusionWeights,
};
use lfdepth::sweep::{estimate_sweep, SweepParams};
use lfdepth::{center_view, DisparityMap, SceneMeta};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Parser)]
#[command(name = "lfdepth", version, about = "Light field disparity estimation")]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a disparity map for one scene.
    Estimate(EstimateArgs),
    /// Benchmark estimators against the scene's ground truth.
    Compare(CompareArgs),
    /// Render a synthetic layered scene with ground truth.
    Synth(SynthArgs),
    /// Plane-sweep accuracy and runtime over several hypothesis counts.
    SweepDepths(SweepDepthsArgs),
    /// MSE and PSNR of an existing disparity PFM against ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Lsg,
    Sweep,
    Epi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Refinement {
    Median,
    Bilateral,
    Energy,
    /// Equal-weight fusion of all three estimators.
    Fuse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Triangular,
    PaperLiteral,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Kernel {
        match k {
            KernelArg::Triangular => Kernel::Triangular,
            KernelArg::PaperLiteral => Kernel::PaperLiteral,
        }
    }
}

/// Estimator overrides shared by the scene-based subcommands.
#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    /// Disparity hypotheses for plane sweeping and per EPI level.
    #[arg(long, default_value_t = 11)]
    pub n_disparities: usize,
    /// LSG summation window half-size.
    #[arg(long, default_value_t = 1)]
    pub window_radius: usize,
    /// Plane-sweep cost aggregation half-size.
    #[arg(long, default_value_t = 1)]
    pub box_radius: usize,
    #[arg(long, value_enum, default_value_t = KernelArg::Triangular)]
    pub kernel: KernelArg,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Estimator,
    #[arg(long, value_enum)]
    pub refine: Option<Refinement>,
    #[command(flatten)]
    pub est: EstimatorArgs,
    /// Smoothness weight of the energy refinement.
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scene: PathBuf,
    /// Comma-separated subset of lsg, sweep, epi-level0, epi-final.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "lsg,sweep,epi-level0,epi-final"
    )]
    pub algos: Vec<String>,
    #[command(flatten)]
    pub est: EstimatorArgs,
    /// Timed repetitions per algorithm; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Comma-separated layer disparities. The farthest covers the frame and
    /// nearer ones are nested rectangles.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub layers: Vec<f64>,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 9)]
    pub views: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gaussian noise standard deviation in radiance units.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub channels: usize,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    pub disp_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub disp_max: f64,
    #[arg(long, default_value_t = 100.0)]
    pub focal_length_px: f64,
    #[arg(long, default_value_t = 0.5)]
    pub baseline: f64,
    /// Scene name; defaults to the output directory name.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepDepthsArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "5,11,21")]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub box_radius: usize,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// PSNR peak value, normally the span of the disparity range.
    #[arg(long, default_value_t = 4.0)]
    pub max_i: f64,
    /// Optional PNG of the absolute error.
    #[arg(long)]
    pub error_map: Option<PathBuf>,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<lfdepth::Error> for CliError {
    fn from(e: lfdepth::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Ordered `key=value` lines.
#[derive(Debug, Default)]
pub struct Manifest(Vec<(String, String)>);

impl Manifest {
    fn new(command: &str, threads: usize) -> Self {
        let mut m = Manifest::default();
        m.set("tool", "lfdepth");
        m.set("version", env!("CARGO_PKG_VERSION"));
        m.set("command", command);
        m.set("threads", threads);
        m
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn write(&self, dir: &Path) -> CliResult<()> {
        write_text(&dir.join(MANIFEST_FILE), &self.to_text())?;
        log::info!("wrote {}", dir.display());
        Ok(())
    }

    fn meta(&mut self, m: &SceneMeta) {
        self.set("scene_name", &m.name);
        self.set("focal_length_px", m.focal_length_px);
        self.set("baseline", m.baseline);
        self.set("disp_min", m.disparity_min);
        self.set("disp_max", m.disparity_max);
    }

    fn lsg(&mut self, p: &LsgParams) {
        self.set("lsg.window_radius", p.window_radius);
        self.set("lsg.denom_epsilon", p.denom_epsilon);
        self.set(
            "lsg.denominator",
            format!("{:?}", p.denominator).to_lowercase(),
        );
    }

    fn sweep(&mut self, p: &SweepParams) {
        self.set("sweep.n_disparities", p.n_disparities);
        self.set("sweep.disparity_min", p.disparity_min);
        self.set("sweep.disparity_max", p.disparity_max);
        self.set("sweep.box_radius", p.box_radius);
        self.set("sweep.border", format!("{:?}", p.border).to_lowercase());
    }

    fn epi(&mut self, p: &EpiParams) {
        self.set("epi.edge_rows", p.edge_rows);
        self.set("epi.edge_cols", p.edge_cols);
        self.set("epi.edge_threshold_level0", p.edge_threshold_level0);
        self.set("epi.edge_threshold_coarse", p.edge_threshold_coarse);
        self.set("epi.bandwidth", p.bandwidth);
        self.set("epi.depth_conf_epsilon", p.depth_conf_epsilon);
        self.set("epi.n_disparities", p.n_disparities);
        self.set("epi.disparity_min", p.disparity_min);
        self.set("epi.disparity_max", p.disparity_max);
        self.set("epi.meanshift_max_iters", p.meanshift.max_iters);
        self.set("epi.meanshift_tol", p.meanshift.tol);
        self.set("epi.min_pyramid_extent", p.min_pyramid_extent);
        self.set("epi.kernel", p.kernel.name());
    }

    fn energy(&mut self, p: &EnergyParams) {
        self.set("energy.lambda", p.lambda);
        self.set("energy.charbonnier_eps", p.charbonnier_eps);
        self.set("energy.step_size", p.step_size);
        self.set("energy.max_iters", p.max_iters);
        self.set("energy.n_levels", p.n_levels);
        self.set("energy.bilateral_sigma_s", p.bilateral_sigma_s);
        self.set("energy.bilateral_sigma_r", p.bilateral_sigma_r);
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn load_scene(path: &Path) -> CliResult<Scene> {
    let cfg = SceneConfig::read(path)?;
    let (lf, meta, gt) = load_lightfield(&cfg)?;
    Ok(Scene { lf, meta, gt })
}

struct Estimators {
    lsg: LsgParams,
    sweep: SweepParams,
    epi: EpiParams,
}

impl Estimators {
    fn new(meta: &SceneMeta, a: &EstimatorArgs) -> Self {
        let lsg = LsgParams {
            window_radius: a.window_radius,
            ..LsgParams::default()
        };
        let sweep = SweepParams {
            box_radius: a.box_radius,
            ..SweepParams::for_scene(meta).with_count(a.n_disparities)
        };
        let epi = EpiParams {
            n_disparities: a.n_disparities,
            kernel: a.kernel.into(),
            ..EpiParams::for_scene(meta)
        };
        Estimators { lsg, sweep, epi }
    }

    fn run(&self, scene: &Scene, algo: Estimator) -> lfdepth::Result<DisparityMap> {
        match algo {
            Estimator::Lsg => estimate_lsg(&scene.lf, &scene.meta, &self.lsg),
            Estimator::Sweep => estimate_sweep(&scene.lf, &self.sweep),
            Estimator::Epi => fine_to_coarse(&scene.lf, &self.epi),
        }
    }
}

/// Parses arguments from the process and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            // Printing only fails if the terminal is gone.
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| {
                CliError::Usage(format!("cannot configure {} threads: {e}", cli.threads))
            })?;
    }
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, cli.threads),
        Command::Compare(a) => cmd_compare(a, cli.threads),
        Command::Synth(a) => cmd_synth(a, cli.threads),
        Command::SweepDepths(a) => cmd_sweep_depths(a, cli.threads),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}

pub fn cmd_estimate(a: &EstimateArgs, threads: usize) -> CliResult<()> {
    let scene = load_scene(&a.scene)?;
    let est = Estimators::new(&scene.meta, &a.est);
    let energy = EnergyParams {
        lambda: a.lambda,
        disparity_range: Some((scene.meta.disparity_min, scene.meta.disparity_max)),
        ..EnergyParams::default()
    };
    energy.validate()?;
    log::info!(
        "{}: {}x{} pixels, {}x{} views",
        scene.meta.name,
        scene.lf.width(),
        scene.lf.height(),
        scene.lf.n_u(),
        scene.lf.n_v()
    );
    let mut d = est.run(&scene, a.algo)?;
    match a.refine {
        None => {}
        Some(Refinement::Median) => d = median_filter_3x3(&d),
        Some(Refinement::Bilateral) => {
            d = bilateral_filter(
                &d,
                &center_view(&scene.lf),
                energy.bilateral_sigma_s,
                energy.bilateral_sigma_r,
            )?
        }
        Some(Refinement::Energy) => d = energy_refine(&d, &scene.lf, &energy)?,
        Some(Refinement::Fuse) => {
            let mut maps = vec![d];
            for other in [Estimator::Lsg, Estimator::Sweep, Estimator::Epi] {
                if other != a.algo {
                    maps.push(est.run(&scene, other)?);
                }
            }
            d = fuse_weighted(&maps, &FusionWeights::uniform(vec![1.0; maps.len()]))?;
        }
    }

    create_dir(&a.out)?;
    write_disparity_pfm(&d, a.out.join("disparity.pfm"))?;
    write_gray_png(
        &d.to_sentinel_array(),
        a.out.join("disparity.png"),
        scene.meta.disparity_min,
        scene.meta.disparity_max,
    )?;

    let mut m = Manifest::new("estimate", threads);
    m.set("scene", a.scene.display());
    m.meta(&scene.meta);
    m.set("algo", format!("{:?}", a.algo).to_lowercase());
    m.set(
        "refine",
        a.refine
            .map(|r| format!("{r:?}").to_lowercase())
            .unwrap_or_else(|| "none".into()),
    );
    m.lsg(&est.lsg);
    m.sweep(&est.sweep);
    m.epi(&est.epi);
    m.energy(&energy);
    m.set("valid_pixels", d.valid_count());
    m.write(&a.out)
}

pub fn cmd_compare(a: &CompareArgs, threads: usize) -> CliResult<()> {
    let algos = a
        .algos
        .iter()
        .map(|s| s.parse::<Algorithm>().map_err(CliError::Usage))
        .collect::<CliResult<Vec<_>>>()?;
    if algos.is_empty() {
        return Err(CliError::Usage("no algorithms selected".into()));
    }
    let scene = load_scene(&a.scene)?;
    if scene.gt.is_none() {
        return Err(lfdepth::Error::MissingGroundTruth(scene.meta.name.clone()).into());
    }
    let est = Estimators::new(&scene.meta, &a.est);
    create_dir(&a.out)?;
    let params = BenchmarkParams {
        lsg: est.lsg,
        sweep: est.sweep,
        epi: est.epi,
        repetitions: a.reps,
        error_map_dir: Some(a.out.clone()),
    };
    let report = run_benchmark(&scene, &algos, &params)?;
    report.write_csv(a.out.join("report.csv"))?;

    let mut m = Manifest::new("compare", threads);
    m.set("scene", a.scene.display());
    m.meta(&scene.meta);
    m.set(
        "algos",
        algos.iter().map(|x| x.id()).collect::<Vec<_>>().join(","),
    );
    m.set("reps", a.reps);
    m.set("max_I", report.max_i);
    m.lsg(&params.lsg);
    m.sweep(&params.sweep);
    m.epi(&params.epi);
    m.write(&a.out)
}

pub fn synth_spec(a: &SynthArgs) -> SynthSpec {
    let mut spec = if a.layers.len() == 1 {
        SynthSpec::single_plane(a.size, a.views, a.layers[0], a.seed)
    } else {
        SynthSpec::nested_layers(a.size, a.views, &a.layers, a.seed)
    };
    spec.channels = a.channels;
    spec.noise_sigma = a.noise;
    spec.disparity_range = (a.disp_min, a.disp_max);
    spec
}

pub fn cmd_synth(a: &SynthArgs, threads: usize) -> CliResult<()> {
    if a.layers.is_empty() {
        return Err(CliError::Usage(
            "--layers needs at least one disparity".into(),
        ));
    }
    let spec = synth_spec(a);
    spec.validate()?;
    let name = a.name.clone().unwrap_or_else(|| {
        a.out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "synthetic".into())
    });
    let meta = SceneMeta::new(name, a.focal_length_px, a.baseline, a.disp_min, a.disp_max)?;
    let (lf, gt) = synth_scene(&spec)?;
    save_scene(&a.out, &lf, &meta, Some(&gt))?;

    let mut m = Manifest::new("synth", threads);
    m.meta(&meta);
    m.set(
        "layers",
        a.layers
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    m.set("size", a.size);
    m.set("views", a.views);
    m.set("channels", a.channels);
    m.set("seed", a.seed);
    m.set("noise", a.noise);
    m.write(&a.out)
}

pub fn cmd_sweep_depths(a: &SweepDepthsArgs, threads: usize) -> CliResult<()> {
    if a.counts.is_empty() {
        return Err(CliError::Usage("--counts needs at least one value".into()));
    }
    if let Some(c) = a.counts.iter().find(|&&c| c < 2) {
        return Err(CliError::Usage(format!("depth count {c} is below 2")));
    }
    let scene = load_scene(&a.scene)?;
    let base = SweepParams {
        box_radius: a.box_radius,
        ..SweepParams::for_scene(&scene.meta)
    };
    let rows = depth_count_sweep(&scene, &a.counts, &base, a.reps)?;
    create_dir(&a.out)?;
    write_text(&a.out.join("depth_counts.csv"), &count_rows_csv(&rows))?;

    let mut m = Manifest::new("sweep-depths", threads);
    m.set("scene", a.scene.display());
    m.meta(&scene.meta);
    m.set(
        "counts",
        a.counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    m.set("reps", a.reps);
    m.sweep(&base);
    m.write(&a.out)
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> CliResult<()> {
    if !(a.max_i > 0.0) {
        return Err(CliError::Usage("--max-i must be positive".into()));
    }
    let pred = read_disparity_pfm(&a.pred)?;
    let gt = read_disparity_pfm(&a.gt)?;
    let m = mse(&pred, &gt)?;
    println!("mse={m}");
    println!("psnr_db={}", psnr_from_mse(m, a.max_i));
    println!("max_I={}", a.max_i);
    if let Some(path) = &a.error_map {
        write_gray_png(&error_map(&pred, &gt)?, path, 0.0, a.max_i)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("lfdepth").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn synth_flags_map_onto_the_spec() {
        let Command::Synth(a) = parse(&[
            "synth", "--layers", "1.0,-0.5", "--size", "32", "--views", "5", "--out", "x",
        ])
        .command
        else {
            panic!("wrong subcommand")
        };
        let spec = synth_spec(&a);
        assert_eq!(spec, SynthSpec::nested_layers(32, 5, &[1.0, -0.5], 0));
        let Command::Synth(a) =
            parse(&["synth", "--layers=-0.25", "--noise", "0.01", "--out", "x"]).command
        else {
            panic!("wrong subcommand")
        };
        let spec = synth_spec(&a);
        assert_eq!(spec.layers.len(), 1);
        assert_eq!(spec.layers[0].disparity, -0.25);
        assert_eq!(spec.noise_sigma, 0.01);
    }

    #[test]
    fn manifest_is_key_value_text() {
        let mut m = Manifest::new("estimate", 4);
        m.epi(&EpiParams::for_scene(
            &SceneMeta::new("s", 1.0, 1.0, -2.0, 2.0).unwrap(),
        ));
        let text = m.to_text();
        assert!(text.starts_with("tool=lfdepth\nversion="));
        assert!(text.contains("\ncommand=estimate\nthreads=4\n"));
        assert!(text.contains("epi.kernel=triangular\n"));
        assert!(text.lines().all(|l| l.split_once('=').is_some()));
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(
            CliError::from(lfdepth::Error::InvalidInput("x".into())).exit_code(),
            2
        );
        assert_eq!(
            CliError::from(lfdepth::Error::MissingGroundTruth("s".into())).exit_code(),
            2
        );
        let io = lfdepth::Error::MissingView {
            index: 0,
            path: "a.png".into(),
        };
        assert_eq!(CliError::from(io).exit_code(), 3);
    }

    #[test]
    fn unknown_values_and_flags_are_usage_errors() {
        for args in [
            &[
                "lfdepth", "estimate", "--algo", "nope", "--scene", "s", "--out", "o",
            ][..],
            &["lfdepth", "synth", "--layers", "abc", "--out", "x"],
            &[
                "lfdepth", "compare", "--scene", "s", "--out", "o", "--bogus",
            ],
        ] {
            let err = Cli::try_parse_from(args).unwrap_err();
            assert!(err.use_stderr(), "{args:?}");
        }
    }
}
