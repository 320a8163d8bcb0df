//! Method and resolution timing on seeded synthetic pairs.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;
use wmsn_stereo::synth::shifted_pair;
use wmsn_stereo::{compute_disparity, CostMethod, GrayImage, MatchParams, StereoError};

pub const CSV_HEADER: &str = "method,width,height,radius,max_disparity,reps,median_seconds,elementary_ops";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("at least 3 repetitions are required, got {0}")]
    TooFewRepetitions(usize),
    #[error("size {size}: {source}")]
    Params { size: Size, source: StereoError },
    #[error(transparent)]
    Stereo(#[from] StereoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Size {
    pub width: usize,
    pub height: usize,
}

impl FromStr for Size {
    type Err = String;

    /// `WxH`, or a single number for a square.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let dim = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid size `{s}` (expected WIDTHxHEIGHT)"))
        };
        let (width, height) = match s.split_once(['x', 'X']) {
            Some((w, h)) => (dim(w)?, dim(h)?),
            None => {
                let n = dim(s)?;
                (n, n)
            }
        };
        if width == 0 || height == 0 {
            return Err(format!("invalid size `{s}`: dimensions must be positive"));
        }
        Ok(Size { width, height })
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub method: CostMethod,
    pub width: usize,
    pub height: usize,
    pub window_radius: usize,
    pub max_disparity: usize,
    pub repetitions: usize,
    /// Median wall time of the timed repetitions, in seconds.
    pub wall_time: f64,
    pub elementary_ops: u64,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.9},{}",
            self.method,
            self.width,
            self.height,
            self.window_radius,
            self.max_disparity,
            self.repetitions,
            self.wall_time,
            self.elementary_ops
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<Size>,
    pub window_radius: usize,
    pub max_disparity: usize,
    pub methods: Vec<CostMethod>,
    pub repetitions: usize,
    pub seed: u64,
}

pub fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

fn time_once(left: &GrayImage, right: &GrayImage, params: &MatchParams) -> Result<(f64, u64), StereoError> {
    let start = Instant::now();
    let (map, stats) = compute_disparity(left, right, params)?;
    let elapsed = start.elapsed().as_secs_f64();
    std::hint::black_box(&map);
    Ok((elapsed, stats.elementary_ops))
}

/// Times every (method, size) combination.
///
/// Methods are interleaved within each repetition so that slow drifts in
/// machine load hit all of them alike. One untimed warm-up run precedes the
/// repetitions. Rows come out grouped by method, sizes in the given order.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    if config.repetitions < 3 {
        return Err(BenchError::TooFewRepetitions(config.repetitions));
    }
    for &size in &config.sizes {
        MatchParams::new(config.window_radius, config.max_disparity, CostMethod::Sad)
            .validate_for(size.width, size.height)
            .map_err(|source| BenchError::Params { size, source })?;
    }
    let mut samples = vec![vec![Vec::with_capacity(config.repetitions); config.sizes.len()]; config.methods.len()];
    let mut ops = vec![vec![0u64; config.sizes.len()]; config.methods.len()];
    for (s, size) in config.sizes.iter().enumerate() {
        let base = MatchParams::new(config.window_radius, config.max_disparity, CostMethod::Sad);
        let shift = (config.max_disparity / 2).min(size.width.saturating_sub(1));
        let (left, right) = shifted_pair(size.width, size.height, shift, config.seed);
        for &method in &config.methods {
            time_once(&left, &right, &base.with_method(method))?;
        }
        for _ in 0..config.repetitions {
            for (m, &method) in config.methods.iter().enumerate() {
                let (secs, n) = time_once(&left, &right, &base.with_method(method))?;
                samples[m][s].push(secs);
                ops[m][s] = n;
            }
        }
    }
    let mut records = Vec::new();
    for (m, &method) in config.methods.iter().enumerate() {
        for (s, size) in config.sizes.iter().enumerate() {
            records.push(BenchRecord {
                method,
                width: size.width,
                height: size.height,
                window_radius: config.window_radius,
                max_disparity: config.max_disparity,
                repetitions: config.repetitions,
                wall_time: median(&mut samples[m][s]),
                elementary_ops: ops[m][s],
            });
        }
    }
    Ok(records)
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}
