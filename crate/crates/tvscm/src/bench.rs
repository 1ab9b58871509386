//! Latency, throughput and memory measurements of a forward pass.

use std::hint::black_box;
use std::path::Path;
use std::time::{Duration, Instant};

use log::warn;
use serde::{Deserialize, Serialize};
use tvscm_core::accounting::{LatencyStats, MemoryFootprint};
use tvscm_core::nn::Model;
use tvscm_core::Matrix;

use crate::report::ReportFormat;
use crate::{io, Error, Result};

pub const BENCH_REPORT_SCHEMA_VERSION: u32 = 1;
pub const MIN_REPS: usize = 100;
pub const MIN_WARMUP: usize = 50;
pub const MIN_POINT_DURATION: Duration = Duration::from_secs(1);
pub const DEFAULT_BATCHES: [usize; 4] = [1, 8, 32, 128];
pub const DEFAULT_REPS: usize = 1000;
pub const DEFAULT_WARMUP: usize = 100;
/// The median must exceed this many clock ticks to be trusted.
pub const TIMER_TICKS_REQUIRED: f64 = 20.0;

pub const BENCH_CSV_HEADER: [&str; 16] = [
    "schema_version",
    "model",
    "parameters",
    "weight_bytes",
    "mb_decimal",
    "mib_binary",
    "mean_ms",
    "p50_ms",
    "p90_ms",
    "p99_ms",
    "reps",
    "batch",
    "samples",
    "seconds",
    "samples_per_sec",
    "samples_per_sec_per_watt",
];

/// Anything that maps a batch of rows to outputs.
pub trait Forward {
    fn input_dim(&self) -> usize;
    fn parameter_count(&self) -> usize;
    fn forward_batch(&self, x: &Matrix) -> Result<Matrix>;
}

impl Forward for Model {
    fn input_dim(&self) -> usize {
        Model::input_dim(self)
    }

    fn parameter_count(&self) -> usize {
        Model::parameter_count(self)
    }

    fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward(x)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyProfile {
    pub stats: LatencyStats,
    pub warmup: usize,
    /// Smallest observable step of the monotonic clock.
    pub timer_granularity_ns: f64,
    pub timer_warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputPoint {
    pub batch: usize,
    pub samples: u64,
    pub seconds: f64,
    pub samples_per_sec: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_sec_per_watt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostDescriptor {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    /// Threads used by the timing loops.
    pub threads: usize,
}

impl HostDescriptor {
    pub fn current() -> Self {
        HostDescriptor {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub model: String,
    pub parameters: usize,
    pub weight_bytes: u64,
    pub memory_per_inference: MemoryFootprint,
    pub latency: LatencyProfile,
    pub throughput: Vec<ThroughputPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub watts: Option<f64>,
    pub host: HostDescriptor,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub reps: usize,
    pub warmup: usize,
    pub batches: Vec<usize>,
    pub point_duration: Duration,
    pub watts: Option<f64>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            reps: DEFAULT_REPS,
            warmup: DEFAULT_WARMUP,
            batches: DEFAULT_BATCHES.to_vec(),
            point_duration: MIN_POINT_DURATION,
            watts: None,
        }
    }
}

impl BenchOptions {
    pub fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(Error::Usage(format!(
                "--reps {} is below the minimum of {MIN_REPS}",
                self.reps
            )));
        }
        if self.warmup < MIN_WARMUP {
            return Err(Error::Usage(format!(
                "--warmup {} is below the minimum of {MIN_WARMUP}",
                self.warmup
            )));
        }
        if self.batches.is_empty() || self.batches.contains(&0) {
            return Err(Error::Usage("batch sizes must be positive".into()));
        }
        if self.point_duration < MIN_POINT_DURATION {
            return Err(Error::Usage(format!(
                "each throughput point needs at least {} s",
                MIN_POINT_DURATION.as_secs_f64()
            )));
        }
        if let Some(w) = self.watts {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Usage(format!("--watts must be positive, got {w}")));
            }
        }
        Ok(())
    }
}

/// Fixed, input-independent probe rows in `[0, 1)`.
pub fn probe_input(rows: usize, dim: usize) -> Matrix {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    let data = (0..rows * dim)
        .map(|i| (i as f64 * GOLDEN).fract())
        .collect();
    Matrix::from_vec(rows, dim, data).expect("shape is consistent")
}

/// Smallest positive difference between consecutive clock reads.
pub fn timer_granularity() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..1000 {
        let t0 = Instant::now();
        let mut t1 = Instant::now();
        while t1 == t0 {
            t1 = Instant::now();
        }
        best = best.min(t1 - t0);
    }
    best
}

/// Single-sample forward latency over `reps` timed runs after `warmup`
/// discarded ones.
pub fn latency_profile(model: &dyn Forward, reps: usize, warmup: usize) -> Result<LatencyProfile> {
    if reps < MIN_REPS || warmup < MIN_WARMUP {
        return Err(Error::Usage(format!(
            "latency needs reps ≥ {MIN_REPS} and warmup ≥ {MIN_WARMUP}, got {reps} and {warmup}"
        )));
    }
    let x = probe_input(1, model.input_dim());
    for _ in 0..warmup {
        black_box(model.forward_batch(black_box(&x))?);
    }
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        black_box(model.forward_batch(black_box(&x))?);
        samples.push(t.elapsed().as_secs_f64() * 1e3);
    }
    let stats = LatencyStats::from_samples_ms(&samples);
    let granularity_ns = timer_granularity().as_secs_f64() * 1e9;
    let timer_warning = (stats.p50_ms * 1e6 < TIMER_TICKS_REQUIRED * granularity_ns).then(|| {
        let msg = format!(
            "median latency {:.1} ns is under {TIMER_TICKS_REQUIRED}× the timer granularity ({granularity_ns:.1} ns)",
            stats.p50_ms * 1e6
        );
        warn!("{msg}");
        msg
    });
    Ok(LatencyProfile {
        stats,
        warmup,
        timer_granularity_ns: granularity_ns,
        timer_warning,
    })
}

/// Samples per second at each batch size, each point running for at least
/// `duration`.
pub fn throughput_sweep(
    model: &dyn Forward,
    batches: &[usize],
    duration: Duration,
    watts: Option<f64>,
) -> Result<Vec<ThroughputPoint>> {
    if duration < MIN_POINT_DURATION {
        return Err(Error::Usage(format!(
            "each throughput point needs at least {} s",
            MIN_POINT_DURATION.as_secs_f64()
        )));
    }
    let mut points = Vec::with_capacity(batches.len());
    for &batch in batches {
        if batch == 0 {
            return Err(Error::Usage("batch sizes must be positive".into()));
        }
        let x = probe_input(batch, model.input_dim());
        black_box(model.forward_batch(&x)?);
        let mut samples = 0u64;
        let start = Instant::now();
        let elapsed = loop {
            black_box(model.forward_batch(black_box(&x))?);
            samples += batch as u64;
            let e = start.elapsed();
            if e >= duration {
                break e;
            }
        };
        let seconds = elapsed.as_secs_f64();
        let samples_per_sec = samples as f64 / seconds;
        points.push(ThroughputPoint {
            batch,
            samples,
            seconds,
            samples_per_sec,
            samples_per_sec_per_watt: watts.map(|w| samples_per_sec / w),
        });
    }
    Ok(points)
}

/// Runs the full measurement suite on `model`.
pub fn run_bench(name: &str, model: &dyn Forward, options: &BenchOptions) -> Result<BenchReport> {
    options.validate()?;
    let parameters = model.parameter_count();
    let memory = MemoryFootprint::from_parameter_count(parameters);
    let latency = latency_profile(model, options.reps, options.warmup)?;
    let throughput = throughput_sweep(model, &options.batches, options.point_duration, options.watts)?;
    Ok(BenchReport {
        schema_version: BENCH_REPORT_SCHEMA_VERSION,
        model: name.to_string(),
        parameters,
        weight_bytes: memory.bytes,
        memory_per_inference: memory,
        latency,
        throughput,
        watts: options.watts,
        host: HostDescriptor::current(),
        reps: options.reps,
    })
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Usage(format!("invalid bench report: {e}")))
    }

    /// Header plus one row per throughput point; scalar fields repeat.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(BENCH_CSV_HEADER).expect("in-memory write");
        let l = &self.latency.stats;
        let m = &self.memory_per_inference;
        for p in &self.throughput {
            w.serialize((
                self.schema_version,
                &self.model,
                self.parameters,
                self.weight_bytes,
                m.mb_decimal,
                m.mib_binary,
                l.mean_ms,
                l.p50_ms,
                l.p90_ms,
                l.p99_ms,
                self.reps,
                p.batch,
                p.samples,
                p.seconds,
                p.samples_per_sec,
                p.samples_per_sec_per_watt,
            ))
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// `emit_report`: writes `report` to `path` as `json` or `csv`.
pub fn emit_report(report: &BenchReport, path: &Path, format: &str) -> Result<()> {
    let text = match format.parse::<ReportFormat>()? {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv(),
    };
    io::write(path, text.as_bytes())
}
