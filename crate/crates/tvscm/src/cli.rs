//! Command-line interface: `train`, `eval`, `bench`, `inspect` and `replay`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use serde_json::json;
use tvscm_core::arch::{ArchKind, DatasetKind, Topology};
use tvscm_core::data::{make_synthetic_split, Dataset, SYNTHETIC_NOISE};
use tvscm_core::nn::{Model, DEFAULT_FFT_THRESHOLD};
use tvscm_core::structmat::{numerical_rank, spectrum, tvscm, TwoValueParams};
use tvscm_core::train::{
    evaluate, init_parameters, train, Clock, NoClock, OptimizerConfig, TrainConfig, WallClock,
};

use crate::bench::{self, BenchOptions};
use crate::manifest::{DatasetFingerprint, RunManifest};
use crate::report::{ReportFormat, TrainRunReport};
use crate::{io, Error, Result};

pub const MODEL_FILE: &str = "model.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const EVAL_FILE: &str = "eval.json";
pub const BENCH_JSON: &str = "bench.json";
pub const BENCH_CSV: &str = "bench.csv";
pub const INSPECT_FILE: &str = "inspect.json";

#[derive(Debug, Parser)]
#[command(name = "tvscm", version, about = "Two-valued symmetric circulant networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write checkpoint, report and manifest to --out.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Measure memory, latency and throughput of a checkpoint.
    Bench(BenchArgs),
    /// Print the defining vector, spectrum and rank of a TVSCM.
    Inspect(InspectArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetName {
    Mnist,
    Ecg,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchName {
    Dense,
    Tvscm,
}

impl From<ArchName> for ArchKind {
    fn from(a: ArchName) -> Self {
        match a {
            ArchName::Dense => ArchKind::Dense,
            ArchName::Tvscm => ArchKind::Tvscm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerName {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

fn name_of<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    #[arg(long, value_enum)]
    pub dataset: DatasetName,
    /// Directory with the MNIST IDX files or the ECG CSV pair.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Synthetic training samples.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Synthetic test samples (0 disables the test split).
    #[arg(long, default_value_t = 500)]
    pub test_samples: usize,
    /// Synthetic feature dimension.
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Synthetic class count.
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Seed of the synthetic generator; `train` defaults it to --seed.
    #[arg(long)]
    pub data_seed: Option<u64>,
}

impl DataArgs {
    fn kind(&self) -> DatasetKind {
        match self.dataset {
            DatasetName::Mnist => DatasetKind::Mnist,
            DatasetName::Ecg => DatasetKind::Ecg,
            DatasetName::Synthetic => DatasetKind::Synthetic {
                dim: self.dim,
                classes: self.classes,
            },
        }
    }

    fn data_dir(&self) -> Result<&Path> {
        self.data_dir.as_deref().ok_or_else(|| {
            Error::Usage(format!("--dataset {} needs --data-dir", name_of(&self.dataset)))
        })
    }

    /// Training split and, when available, test split.
    fn load(&self) -> Result<(Dataset, Option<Dataset>)> {
        match self.dataset {
            DatasetName::Mnist => {
                let (train, test) = io::load_mnist_dir(self.data_dir()?)?;
                Ok((train, Some(test)))
            }
            DatasetName::Ecg => {
                let (train, test) = io::load_ecg_dir(self.data_dir()?)?;
                Ok((train, Some(test)))
            }
            DatasetName::Synthetic => {
                if self.samples == 0 || self.dim == 0 || self.classes == 0 {
                    return Err(Error::Usage(
                        "--samples, --dim and --classes must be positive".into(),
                    ));
                }
                let seed = self.data_seed.unwrap_or(0);
                let (train, test) = make_synthetic_split(
                    seed,
                    self.samples,
                    self.test_samples,
                    self.dim,
                    self.classes,
                    SYNTHETIC_NOISE,
                )?;
                Ok((train, (self.test_samples > 0).then_some(test)))
            }
        }
    }

    fn to_args(&self) -> Vec<String> {
        let mut args = vec!["--dataset".into(), name_of(&self.dataset)];
        if let Some(dir) = &self.data_dir {
            args.extend(["--data-dir".into(), dir.display().to_string()]);
        }
        if self.dataset == DatasetName::Synthetic {
            args.extend([
                "--samples".into(),
                self.samples.to_string(),
                "--test-samples".into(),
                self.test_samples.to_string(),
                "--dim".into(),
                self.dim.to_string(),
                "--classes".into(),
                self.classes.to_string(),
                "--data-seed".into(),
                self.data_seed.unwrap_or(0).to_string(),
            ]);
        }
        args
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "tvscm")]
    pub arch: ArchName,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, value_enum, default_value_t = OptimizerName::Adam)]
    pub optimizer: OptimizerName,
    /// SGD momentum.
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep the sample order fixed across epochs.
    #[arg(long)]
    pub no_shuffle: bool,
    /// Smallest TVSCM size that uses the FFT path.
    #[arg(long, default_value_t = DEFAULT_FFT_THRESHOLD)]
    pub fft_threshold: usize,
    /// Record wall-clock seconds per epoch (makes reports run-dependent).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: PathBuf,
}

impl TrainArgs {
    fn resolve(mut self) -> Self {
        self.data.data_seed = Some(self.data.data_seed.unwrap_or(self.seed));
        self
    }

    fn config(&self) -> TrainConfig {
        let optimizer = match self.optimizer {
            OptimizerName::Adam => OptimizerConfig::adam(self.lr),
            OptimizerName::Sgd => OptimizerConfig::sgd(self.lr, self.momentum),
        };
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch,
            optimizer,
            seed: self.seed,
            shuffle: !self.no_shuffle,
        }
    }

    fn to_args(&self) -> Vec<String> {
        let mut args = vec!["train".to_string()];
        args.extend(self.data.to_args());
        args.extend([
            "--arch".into(),
            name_of(&self.arch),
            "--epochs".into(),
            self.epochs.to_string(),
            "--batch".into(),
            self.batch.to_string(),
            "--lr".into(),
            self.lr.to_string(),
            "--optimizer".into(),
            name_of(&self.optimizer),
            "--momentum".into(),
            self.momentum.to_string(),
            "--seed".into(),
            self.seed.to_string(),
            "--fft-threshold".into(),
            self.fft_threshold.to_string(),
        ]);
        if self.no_shuffle {
            args.push("--no-shuffle".into());
        }
        if self.timing {
            args.push("--timing".into());
        }
        args.extend(["--out".into(), self.out.display().to_string()]);
        args
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = Split::Test)]
    pub split: Split,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EvalArgs {
    fn to_args(&self) -> Vec<String> {
        let mut args = vec!["eval".to_string()];
        args.extend(self.data.to_args());
        args.extend([
            "--model".into(),
            self.model.display().to_string(),
            "--split".into(),
            name_of(&self.split),
        ]);
        if let Some(out) = &self.out {
            args.extend(["--out".into(), out.display().to_string()]);
        }
        args
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Batch sizes for the throughput sweep.
    #[arg(long, value_delimiter = ',', default_value = "1,8,32,128")]
    pub batches: Vec<usize>,
    /// Timed single-sample runs (at least 100).
    #[arg(long, default_value_t = bench::DEFAULT_REPS)]
    pub reps: usize,
    /// Discarded runs before timing (at least 50).
    #[arg(long, default_value_t = bench::DEFAULT_WARMUP)]
    pub warmup: usize,
    /// Seconds per throughput point (at least 1).
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    /// Average power draw in watts, for samples/sec/W.
    #[arg(long)]
    pub watts: Option<f64>,
    /// Name recorded in the report; defaults to the checkpoint file stem.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

impl BenchArgs {
    fn resolve(mut self) -> Self {
        if self.name.is_none() {
            self.name = Some(
                self.model
                    .file_stem()
                    .map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned()),
            );
        }
        self
    }

    fn options(&self) -> Result<BenchOptions> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::Usage(format!("--duration must be ≥ 1, got {}", self.duration)));
        }
        let options = BenchOptions {
            reps: self.reps,
            warmup: self.warmup,
            batches: self.batches.clone(),
            point_duration: Duration::from_secs_f64(self.duration),
            watts: self.watts,
        };
        options.validate()?;
        Ok(options)
    }

    fn to_args(&self) -> Vec<String> {
        let batches: Vec<String> = self.batches.iter().map(ToString::to_string).collect();
        let mut args = vec![
            "bench".to_string(),
            "--model".into(),
            self.model.display().to_string(),
            "--batches".into(),
            batches.join(","),
            "--reps".into(),
            self.reps.to_string(),
            "--warmup".into(),
            self.warmup.to_string(),
            "--duration".into(),
            self.duration.to_string(),
        ];
        if let Some(w) = self.watts {
            args.extend(["--watts".into(), w.to_string()]);
        }
        if let Some(name) = &self.name {
            args.extend(["--name".into(), name.clone()]);
        }
        args.extend(["--out".into(), self.out.display().to_string()]);
        args
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InspectArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long)]
    pub n: usize,
    /// Print every entry even for large n.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl InspectArgs {
    fn to_args(&self) -> Vec<String> {
        let mut args = vec![
            "inspect".to_string(),
            "--a".into(),
            self.a.to_string(),
            "--b".into(),
            self.b.to_string(),
            "--n".into(),
            self.n.to_string(),
        ];
        if self.full {
            args.push("--full".into());
        }
        if let Some(out) = &self.out {
            args.extend(["--out".into(), out.display().to_string()]);
        }
        args
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for the repeated run; defaults to the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Usage(e.to_string()))?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(args.resolve()),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args.resolve()),
        Command::Inspect(args) => cmd_inspect(args),
        Command::Replay(args) => cmd_replay(args),
    }
}

fn config_json<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn load_model(path: &Path) -> Result<Model> {
    let bytes = io::read(path)?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Model::from_checkpoint_json(&text).map_err(|source| Error::Data {
        path: path.to_path_buf(),
        source,
    })
}

pub fn cmd_train(args: TrainArgs) -> Result<()> {
    let config = args.config();
    let (train_set, test_set) = args.data.load()?;
    let topology = Topology::for_dataset_kind(args.arch.into(), args.data.kind());
    let mut model = init_parameters(&topology.skeleton(), args.seed)?;
    model.set_fft_threshold(args.fft_threshold)?;
    info!(
        "training {} on {} ({} samples, {} parameters)",
        name_of(&args.arch),
        name_of(&args.data.dataset),
        train_set.len(),
        model.parameter_count()
    );
    let wall = WallClock::default();
    let clock: &dyn Clock = if args.timing { &wall } else { &NoClock };
    let (model, report) = train(model, &train_set, test_set.as_ref(), &config, clock)?;
    for r in &report.records {
        info!(
            "epoch {:>3}  loss {:.5}  train_acc {:.4}  test_acc {}",
            r.epoch,
            r.loss,
            r.train_acc,
            r.test_acc.map_or_else(|| "-".into(), |a| format!("{a:.4}"))
        );
    }
    let parameters = model.parameter_count();
    let report = TrainRunReport::new(
        &name_of(&args.data.dataset),
        &name_of(&args.arch),
        parameters,
        report,
    );

    let out = io::create_dir(&args.out)?;
    io::write(&out.join(MODEL_FILE), model.to_checkpoint_json().as_bytes())?;
    report.write(&out.join(REPORT_JSON), ReportFormat::Json)?;
    report.write(&out.join(REPORT_CSV), ReportFormat::Csv)?;

    let mut manifest = RunManifest::new("train", args.to_args(), config_json(&args));
    manifest.seed = Some(args.seed);
    manifest.datasets.push(DatasetFingerprint::of(&train_set));
    manifest.datasets.extend(test_set.as_ref().map(DatasetFingerprint::of));
    manifest.artifacts = vec![MODEL_FILE.into(), REPORT_JSON.into(), REPORT_CSV.into()];
    manifest.write(&out)?;

    let last = report.epochs.last().expect("at least one epoch");
    println!(
        "{} {}: parameters={} loss={:.6} train_acc={:.4}{}",
        name_of(&args.data.dataset),
        name_of(&args.arch),
        parameters,
        last.loss,
        last.train_acc,
        last.test_acc.map_or_else(String::new, |a| format!(" test_acc={a:.4}"))
    );
    Ok(())
}

pub fn cmd_eval(args: EvalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let (train_set, test_set) = args.data.load()?;
    let data = match args.split {
        Split::Train => train_set,
        Split::Test => test_set
            .ok_or_else(|| Error::Usage("this dataset has no test split".into()))?,
    };
    let eval = evaluate(&model, &data)?;
    let result = json!({
        "model": args.model.display().to_string(),
        "dataset": name_of(&args.data.dataset),
        "split": name_of(&args.split),
        "samples": data.len(),
        "accuracy": eval.accuracy,
        "loss": eval.loss,
    });
    println!(
        "accuracy={:.4} loss={:.6} samples={}",
        eval.accuracy,
        eval.loss,
        data.len()
    );
    println!("{result}");
    if let Some(out) = &args.out {
        let out = io::create_dir(out)?;
        let text = serde_json::to_string_pretty(&result).expect("json value") + "\n";
        io::write(&out.join(EVAL_FILE), text.as_bytes())?;
        let mut manifest = RunManifest::new("eval", args.to_args(), config_json(&args));
        manifest.seed = args.data.data_seed;
        manifest.datasets.push(DatasetFingerprint::of(&data));
        manifest.artifacts = vec![EVAL_FILE.into()];
        manifest.write(&out)?;
    }
    Ok(())
}

pub fn cmd_bench(args: BenchArgs) -> Result<()> {
    let options = args.options()?;
    let model = load_model(&args.model)?;
    let name = args.name.clone().expect("resolved");
    let report = bench::run_bench(&name, &model, &options)?;
    let out = io::create_dir(&args.out)?;
    bench::emit_report(&report, &out.join(BENCH_JSON), "json")?;
    bench::emit_report(&report, &out.join(BENCH_CSV), "csv")?;
    let mut manifest = RunManifest::new("bench", args.to_args(), config_json(&args));
    manifest.artifacts = vec![BENCH_JSON.into(), BENCH_CSV.into()];
    manifest.write(&out)?;

    let l = &report.latency.stats;
    println!(
        "{}: parameters={} bytes={} ({:.6} MB, {:.6} MiB)",
        report.model,
        report.parameters,
        report.weight_bytes,
        report.memory_per_inference.mb_decimal,
        report.memory_per_inference.mib_binary
    );
    println!(
        "latency ms: mean={:.6} p50={:.6} p90={:.6} p99={:.6}",
        l.mean_ms, l.p50_ms, l.p90_ms, l.p99_ms
    );
    for p in &report.throughput {
        let per_watt = p
            .samples_per_sec_per_watt
            .map_or_else(String::new, |w| format!(" ({w:.3} samples/s/W)"));
        println!("batch {:>4}: {:.1} samples/s{per_watt}", p.batch, p.samples_per_sec);
    }
    Ok(())
}

/// Rounds away floating-point dust for display.
fn clean(x: f64, tolerance: f64) -> f64 {
    if x.abs() <= tolerance {
        0.0
    } else {
        let scale = 1e9;
        (x * scale).round() / scale
    }
}

fn list(values: &[f64], full: bool) -> String {
    const HEAD: usize = 16;
    let shown: Vec<String> = values
        .iter()
        .take(if full { values.len() } else { HEAD })
        .map(ToString::to_string)
        .collect();
    let tail = if !full && values.len() > HEAD {
        format!(", … ({} more)", values.len() - HEAD)
    } else {
        String::new()
    };
    format!("[{}{tail}]", shown.join(", "))
}

/// Distinct values with multiplicities, in first-seen order.
fn distinct(values: &[f64]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        match out.iter_mut().find(|(u, _)| *u == v) {
            Some((_, count)) => *count += 1,
            None => out.push((v, 1)),
        }
    }
    out
}

pub fn cmd_inspect(args: InspectArgs) -> Result<()> {
    let params = TwoValueParams::new(args.a, args.b, args.n)?;
    let sym = tvscm(&params);
    let n = args.n as f64;
    let tolerance = 1e-9 * n * args.a.abs().max(args.b.abs());
    let eigen: Vec<f64> = spectrum(&sym)?.into_iter().map(|l| clean(l, tolerance)).collect();
    let v_sym: Vec<f64> = sym.defining_vector().to_vec();
    let rank = numerical_rank(&eigen, tolerance);
    let groups = distinct(&eigen);

    println!("n = {}, a = {}, b = {}", args.n, args.a, args.b);
    println!("v_sym = {}", list(&v_sym, args.full));
    println!("spectrum = {}", list(&eigen, args.full));
    let summary: Vec<String> = groups.iter().map(|(v, c)| format!("{v} (×{c})")).collect();
    println!("distinct eigenvalues = {}", summary.join(", "));
    println!("rank = {rank}");
    println!("parameters = 2");

    if let Some(out) = &args.out {
        let out = io::create_dir(out)?;
        let result = json!({
            "n": args.n,
            "a": args.a,
            "b": args.b,
            "v_sym": v_sym,
            "spectrum": eigen,
            "rank": rank,
            "parameters": 2,
        });
        let text = serde_json::to_string_pretty(&result).expect("json value") + "\n";
        io::write(&out.join(INSPECT_FILE), text.as_bytes())?;
        let mut manifest = RunManifest::new("inspect", args.to_args(), config_json(&args));
        manifest.artifacts = vec![INSPECT_FILE.into()];
        manifest.write(&out)?;
    }
    Ok(())
}

pub fn cmd_replay(args: ReplayArgs) -> Result<()> {
    let manifest = RunManifest::read(&args.manifest)?;
    let mut argv = manifest.args.clone();
    if let Some(out) = &args.out {
        let out = out.display().to_string();
        match argv.iter().position(|a| a == "--out") {
            Some(i) if i + 1 < argv.len() => argv[i + 1] = out,
            _ => argv.extend(["--out".into(), out]),
        }
    }
    info!("replaying: tvscm {}", argv.join(" "));
    let cli = Cli::try_parse_from(std::iter::once("tvscm".to_string()).chain(argv))
        .map_err(|e| Error::Usage(format!("manifest arguments do not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::Usage("a manifest cannot replay another replay".into()));
    }
    run(cli)
}
