//! Command-line front end: synthetic pair generation, disparity and depth on
//! PGM files, image comparison, timing runs and scenario simulation.

pub mod bench;

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;
use wmsn_stereo::metrics::{psnr, ssim, MetricResult, SsimParams};
use wmsn_stereo::sidecar::{decode_plain, decode_rle, encode_plain, PLAIN_MAGIC, RLE_MAGIC};
use wmsn_stereo::sim::{run_simulation, MapEncoding, Policy, Scenario, SimError};
use wmsn_stereo::synth::shifted_pair;
use wmsn_stereo::{
    compute_disparity, disparity_to_depth, parse_pgm, scale_to_gray, serialize_pgm, CostMethod,
    DisparityMap, GrayImage, MatchParams,
};

use bench::{run_bench, to_csv, BenchConfig, Size};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input file, bad parameters or an invalid scenario.
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

#[derive(Debug, Parser)]
#[command(name = "wmsn", version, about = "Stereo block matching and sensor network energy simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct MatchArgs {
    /// Support window radius; the window side is 2r+1.
    #[arg(long, default_value_t = 3)]
    pub radius: usize,
    #[arg(long, default_value_t = 64)]
    pub max_disparity: usize,
    /// Matching cost: sad or ssd.
    #[arg(long, default_value = "sad")]
    pub method: CostMethod,
}

impl MatchArgs {
    fn params(&self) -> MatchParams {
        MatchParams::new(self.radius, self.max_disparity, self.method)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded textured left image and its exactly shifted right view.
    Generate {
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 5)]
        disparity: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix; writes <prefix>-left.pgm and <prefix>-right.pgm.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a disparity map; writes <prefix>.pgm and a DSP1 <prefix>.dsp.
    Disparity {
        left: PathBuf,
        right: PathBuf,
        #[command(flatten)]
        matching: MatchArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a DSP1 or DSR1 disparity file to metric depth.
    Depth {
        map: PathBuf,
        /// Focal length in pixels.
        #[arg(long, default_value_t = 500.0)]
        focal_length: f64,
        /// Camera baseline in metres.
        #[arg(long, default_value_t = 0.1)]
        baseline: f64,
        /// Optional CSV grid of depths; invalid pixels are empty cells.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two PGM images with SSIM and PSNR.
    Metrics {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Time both cost methods over a list of image sizes; CSV on stdout.
    Bench {
        /// Comma-separated sizes such as 128x128,256x256.
        #[arg(long, value_delimiter = ',', default_value = "128x128,256x256,512x512")]
        sizes: Vec<Size>,
        #[arg(long, default_value_t = 3)]
        radius: usize,
        #[arg(long, default_value_t = 64)]
        max_disparity: usize,
        /// Restrict to one method; both by default.
        #[arg(long)]
        method: Option<CostMethod>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario file and write the JSON report.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's transmission policy.
        #[arg(long)]
        policy: Option<Policy>,
        /// Override the scenario's map encoding.
        #[arg(long)]
        encoding: Option<MapEncoding>,
    },
}

pub fn read_pgm(path: &Path) -> Result<GrayImage, CliError> {
    let bytes = fs::read(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    parse_pgm(&bytes).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| input(format!("cannot write {}: {e}", path.display())))
}

/// `prefix` with `suffix` appended to its final component.
fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn read_pair(a: &Path, b: &Path) -> Result<(GrayImage, GrayImage), CliError> {
    let (ia, ib) = (read_pgm(a)?, read_pgm(b)?);
    if !ia.same_dimensions(&ib) {
        return Err(input(format!(
            "dimension mismatch: {} is {}x{}, {} is {}x{}",
            a.display(),
            ia.width(),
            ia.height(),
            b.display(),
            ib.width(),
            ib.height()
        )));
    }
    Ok((ia, ib))
}

fn read_map(path: &Path) -> Result<DisparityMap, CliError> {
    let bytes = fs::read(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    let decoded = if bytes.starts_with(RLE_MAGIC) {
        decode_rle(&bytes)
    } else if bytes.starts_with(PLAIN_MAGIC) {
        decode_plain(&bytes)
    } else {
        return Err(input(format!("{}: not a DSP1 or DSR1 disparity file", path.display())));
    };
    decoded.map_err(|e| input(format!("{}: {e}", path.display())))
}

fn sim_error(path: &Path, e: SimError) -> CliError {
    match e {
        SimError::MapShape | SimError::Stereo(_) => CliError::Internal(e.to_string()),
        _ => input(format!("{}: {e}", path.display())),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Internal(format!("cannot write output: {e}")))
}

/// `{"ssim":…,"psnr":…}` in that key order; infinities are the string "inf".
pub fn metrics_json(s: MetricResult, p: MetricResult) -> String {
    let field = |m: MetricResult| serde_json::to_string(&m).expect("metric serializes");
    format!("{{\"ssim\":{},\"psnr\":{}}}", field(s), field(p))
}

/// Runs one parsed command, writing its report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { width, height, disparity, seed, out: prefix } => {
            if width == 0 || height == 0 {
                return Err(input("width and height must be positive"));
            }
            let (left, right) = shifted_pair(width, height, disparity, seed);
            let (lp, rp) = (with_suffix(&prefix, "-left.pgm"), with_suffix(&prefix, "-right.pgm"));
            write_file(&lp, &serialize_pgm(&left))?;
            write_file(&rp, &serialize_pgm(&right))?;
            emit(out, &format!("{}\n{}\n", lp.display(), rp.display()))
        }
        Command::Disparity { left, right, matching, out: prefix } => {
            let (l, r) = read_pair(&left, &right)?;
            let params = matching.params();
            let (map, stats) = compute_disparity(&l, &r, &params).map_err(|e| input(e.to_string()))?;
            let (gp, sp) = (with_suffix(&prefix, ".pgm"), with_suffix(&prefix, ".dsp"));
            write_file(&gp, &serialize_pgm(&scale_to_gray(&map)))?;
            write_file(&sp, &encode_plain(&map))?;
            emit(
                out,
                &format!(
                    "method={} valid_pixels={} elementary_ops={} wall_seconds={:.6}\n",
                    params.method,
                    map.valid_count(),
                    stats.elementary_ops,
                    stats.wall_seconds
                ),
            )
        }
        Command::Depth { map, focal_length, baseline, out: csv } => {
            let disparity = read_map(&map)?;
            let depth = disparity_to_depth(&disparity, focal_length, baseline).map_err(|e| input(e.to_string()))?;
            let known: Vec<f64> = depth.depths.iter().flatten().copied().collect();
            let mut text = format!("pixels={} with_depth={}", depth.depths.len(), known.len());
            if !known.is_empty() {
                let min = known.iter().copied().fold(f64::INFINITY, f64::min);
                let max = known.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mean = known.iter().sum::<f64>() / known.len() as f64;
                write!(text, " min_m={min} mean_m={mean} max_m={max}").unwrap();
            }
            text.push('\n');
            if let Some(path) = csv {
                let mut grid = String::new();
                for row in depth.depths.chunks(depth.width) {
                    let cells: Vec<String> = row.iter().map(|d| d.map(|v| v.to_string()).unwrap_or_default()).collect();
                    grid.push_str(&cells.join(","));
                    grid.push('\n');
                }
                write_file(&path, grid.as_bytes())?;
            }
            emit(out, &text)
        }
        Command::Metrics { a, b, json } => {
            let (ia, ib) = read_pair(&a, &b)?;
            let s = ssim(&ia, &ib, &SsimParams::default()).map_err(|e| input(e.to_string()))?;
            let p = psnr(&ia, &ib).map_err(|e| input(e.to_string()))?;
            if json {
                emit(out, &format!("{}\n", metrics_json(s, p)))
            } else {
                emit(out, &format!("ssim={s}\npsnr={p}\n"))
            }
        }
        Command::Bench { sizes, radius, max_disparity, method, reps, seed, out: path } => {
            let config = BenchConfig {
                sizes,
                window_radius: radius,
                max_disparity,
                methods: method.map_or(CostMethod::ALL.to_vec(), |m| vec![m]),
                repetitions: reps,
                seed,
            };
            let csv = to_csv(&run_bench(&config).map_err(|e| input(e.to_string()))?);
            match path {
                Some(p) => write_file(&p, csv.as_bytes()),
                None => emit(out, &csv),
            }
        }
        Command::Simulate { scenario, out: path, policy, encoding } => {
            let mut sc = Scenario::from_file(&scenario).map_err(|e| sim_error(&scenario, e))?;
            if let Some(p) = policy {
                sc.policy = p;
            }
            if let Some(e) = encoding {
                sc.encoding = e;
            }
            let report = run_simulation(&sc).map_err(|e| sim_error(&scenario, e))?;
            write_file(&path, report.to_json().as_bytes())?;
            let t = &report.totals;
            let mut text = format!(
                "steps={} policy={} encoding={} lifetime={}\nprocessing_uj={} transmission_uj={} events={} transmissions={} dropped={}\n",
                report.steps,
                report.policy.as_str(),
                report.encoding.as_str(),
                report.lifetime,
                t.processing_uj,
                t.transmission_uj,
                t.events,
                t.transmissions,
                t.dropped
            );
            for s in &report.payload_sizes {
                let rle = match (s.rle_bytes_min, s.rle_bytes_max) {
                    (Some(lo), Some(hi)) => format!("{lo}..{hi}"),
                    _ => "none".into(),
                };
                writeln!(
                    text,
                    "pair {}: rle_bytes={rle} sidecar_bytes={} raw_pair_bytes={}",
                    s.pair, s.sidecar_bytes, s.raw_pair_bytes
                )
                .unwrap();
            }
            emit(out, &text)
        }
    }
}
