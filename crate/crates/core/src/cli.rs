//! Command-line front end: `simulate`, `encode`, `train`, `eval`, `render`.
//!
//! Every artifact lives under `--out`, indexed by `manifest.json`.
//! Exit codes: 0 success, 2 configuration or unwritable output, 3 missing
//! or inconsistent data, 4 model or checkpoint problems.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dataset::{
    self, split, write_encoded_frames, write_events_csv, write_gray_frames, write_pairs_csv,
    write_truth_csv, Manifest, ManifestCounts, ManifestFiles, SplitRecord, MANIFEST_VERSION,
};
use crate::encoder::{
    denormalize_point, fuse_sequence, make_sample_pairs, EncodingConfig, SamplePair, SliceMode,
};
use crate::error::Error;
use crate::eval::{accuracy_table_with, angular_error_stats, parse_radii, CircleCenter, Trial};
use crate::events::{GazeVector, Point2, SensorGeometry};
use crate::model::loss::{CentroidMetric, LossConfig, LossMode};
use crate::model::network::{prepare_samples, NetworkSpec};
use crate::model::{write_loss_csv, Checkpoint, TrainConfig, Trainer};
use crate::render::{self, RgbImage};
use crate::simulator::{simulate, SceneConfig, TrajectoryConfig};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_MODEL: i32 = 4;

const CHECKPOINT_FILE: &str = "model.evgm";
const LOSSES_FILE: &str = "losses.csv";

#[derive(Debug, Parser)]
#[command(name = "evgaze", version, about = "Gaze-vector estimation from simulated event-camera data")]
pub struct Cli {
    /// Dataset directory holding manifest.json and all artifacts.
    #[arg(long, global = true, default_value = "run")]
    pub out: PathBuf,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for event simulation.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize events, guide frames and ground-truth centroids.
    Simulate(SimulateArgs),
    /// Fuse events and guide frames into six-channel frames and sample pairs.
    Encode(EncodeArgs),
    /// Train the two-branch regressor on the encoded pairs.
    Train(TrainArgs),
    /// Score a checkpoint on the held-out pairs.
    Eval(EvalArgs),
    /// Write PPM previews and overlays.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 4000)]
    pub duration_ms: u64,
    #[arg(long, default_value_t = 64)]
    pub width: u32,
    #[arg(long, default_value_t = 64)]
    pub height: u32,
    /// Guide-frame rate in Hz.
    #[arg(long, default_value_t = 3.0)]
    pub fps: f64,
    /// Contrast threshold in log-intensity units.
    #[arg(long, default_value_t = 0.3)]
    pub threshold: f64,
    /// Pupil radius in pixels (default: 10% of the shorter side, at least 2).
    #[arg(long)]
    pub pupil_radius: Option<f64>,
    /// Background noise events per pixel per second.
    #[arg(long, default_value_t = 0.0)]
    pub noise_rate: f64,
    /// Tremor amplitude in pixels.
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    /// Mean fixation length in milliseconds.
    #[arg(long, default_value_t = 300)]
    pub fixation_ms: u64,
    /// Saccade length in milliseconds.
    #[arg(long, default_value_t = 40)]
    pub saccade_ms: u64,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long, default_value_t = 33)]
    pub bin_ms: u64,
    #[arg(long, default_value_t = 5.0)]
    pub alpha: f64,
    /// Select bin events by nearest timestamp index instead of half-open time windows.
    #[arg(long)]
    pub nearest_slicing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Centroid,
    CentroidTheta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    L1,
    Euclidean,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, value_enum, default_value_t = LossArg::CentroidTheta)]
    pub loss: LossArg,
    #[arg(long, default_value_t = 1.0)]
    pub theta_weight: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::L1)]
    pub metric: MetricArg,
    /// Fraction of pairs held out for testing.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Network input side; frames are area-averaged down to it.
    #[arg(long, default_value_t = 64)]
    pub input_size: usize,
    /// Channels of each downsampling block, comma separated.
    #[arg(long, default_value = "8,16,32,64")]
    pub blocks: String,
    #[arg(long, default_value_t = 128)]
    pub hidden: usize,
    /// Add a stride-1 convolution with identity skip after every block.
    #[arg(long)]
    pub residual: bool,
    /// Continue from a checkpoint instead of a fresh initialization.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint to evaluate (default: the one recorded in the manifest).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "100,90,75,50,25")]
    pub radii: String,
    /// Centre a single circle on the target midpoint.
    #[arg(long)]
    pub midpoint: bool,
    /// Score every pair rather than the held-out split.
    #[arg(long)]
    pub all: bool,
    /// Use the ground truth as predictions (sanity check of the scoring).
    #[arg(long)]
    pub truth_as_predictions: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Number of encoded frames to preview.
    #[arg(long, default_value_t = 8)]
    pub frames: usize,
    /// Predictions CSV written by `eval`.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        let code = match &error {
            Error::Config(_) => EXIT_CONFIG,
            Error::Checkpoint(_) | Error::Diverged { .. } | Error::NonFinite(_) => EXIT_MODEL,
            _ => EXIT_DATA,
        };
        Self { code, error }
    }
}

trait ExitClass<T> {
    fn exit(self, code: i32) -> Result<T, CliError>;
}

impl<T> ExitClass<T> for crate::Result<T> {
    fn exit(self, code: i32) -> Result<T, CliError> {
        self.map_err(|error| CliError { code, error })
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Parses `args` and runs the command. Returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

pub fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Encode(a) => cmd_encode(cli, a),
        Command::Train(a) => cmd_train(cli, a),
        Command::Eval(a) => cmd_eval(cli, a),
        Command::Render(a) => cmd_render(cli, a),
    }
}

fn config(msg: impl Into<String>) -> CliError {
    Error::Config(msg.into()).into()
}

fn load_manifest(dir: &Path) -> CliResult<Manifest> {
    Manifest::load(dir).exit(EXIT_DATA)
}

pub fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> CliResult {
    if a.duration_ms == 0 {
        return Err(config("--duration-ms must be positive"));
    }
    if !(0.5..=30.0).contains(&a.fps) {
        return Err(config(format!("--fps must lie in [0.5, 30], got {}", a.fps)));
    }
    if cli.threads == 0 {
        return Err(config("--threads must be at least 1"));
    }
    let geometry = SensorGeometry::new(a.width, a.height)?;
    let mut scene = SceneConfig::new(geometry, cli.seed);
    scene.contrast_threshold = a.threshold;
    scene.noise_rate = a.noise_rate;
    if let Some(r) = a.pupil_radius {
        scene.pupil_radius = r;
    }
    let duration = a.duration_ms * 1000;
    let margin = scene.pupil_radius + 1.0 + a.jitter;
    let mut traj = TrajectoryConfig::new(geometry, duration, margin, cli.seed.wrapping_add(1));
    traj.jitter = a.jitter;
    traj.fixation_mean = a.fixation_ms * 1000;
    traj.saccade_duration = a.saccade_ms * 1000;

    let out = simulate(&scene, &traj, a.fps, cli.threads)?;
    log::info!(
        "simulated {} events, {} guide frames, {} centroids",
        out.events.len(),
        out.gray_frames.len(),
        out.truth.len()
    );

    let dir = &cli.out;
    std::fs::create_dir_all(dir.join("gray")).map_err(|e| Error::io(dir, e)).exit(EXIT_CONFIG)?;
    let files = ManifestFiles {
        events: "events.csv".into(),
        gray_index: write_gray_frames(dir, &out.gray_frames).exit(EXIT_CONFIG)?,
        truth: "truth.csv".into(),
        encoded_index: None,
        pairs: None,
        checkpoint: None,
        losses: None,
    };
    write_events_csv(&dir.join(&files.events), &out.events).exit(EXIT_CONFIG)?;
    write_truth_csv(&dir.join(&files.truth), &out.truth).exit(EXIT_CONFIG)?;
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        geometry,
        seed: cli.seed,
        duration,
        fps: a.fps,
        truth_period: out.truth.period,
        truth_bounds: out.truth.bounds,
        encoding: None,
        split: None,
        files,
        counts: ManifestCounts {
            events: out.events.len(),
            gray_frames: out.gray_frames.len(),
            truth: out.truth.len(),
            encoded_frames: None,
            pairs: None,
        },
    };
    manifest.save(dir).exit(EXIT_CONFIG)?;
    println!(
        "simulate: {} events, {} gray frames, {} truth rows -> {}",
        manifest.counts.events,
        manifest.counts.gray_frames,
        manifest.counts.truth,
        dir.display()
    );
    Ok(())
}

pub fn cmd_encode(cli: &Cli, a: &EncodeArgs) -> CliResult {
    let dir = &cli.out;
    let mut manifest = load_manifest(dir)?;
    let mut cfg = EncodingConfig::new(a.bin_ms * 1000, a.alpha)?;
    if a.nearest_slicing {
        cfg.slice_mode = SliceMode::NearestIndex;
    }
    let events = manifest.load_events(dir).exit(EXIT_DATA)?;
    let gray = manifest.load_gray(dir).exit(EXIT_DATA)?;
    let truth = manifest.load_truth(dir).exit(EXIT_DATA)?;
    let seq = fuse_sequence(&events, &gray, &truth, &cfg).map_err(|e| match e {
        Error::Config(msg) => CliError {
            code: EXIT_DATA,
            error: Error::Config(msg),
        },
        other => other.into(),
    })?;
    let pairs = make_sample_pairs(&seq)?;

    let enc_dir = dir.join("encoded");
    std::fs::create_dir_all(&enc_dir).map_err(|e| Error::io(&enc_dir, e)).exit(EXIT_CONFIG)?;
    let index = write_encoded_frames(dir, &seq.frames).exit(EXIT_CONFIG)?;
    write_pairs_csv(&dir.join("pairs.csv"), &pairs).exit(EXIT_CONFIG)?;
    manifest.encoding = Some(cfg);
    manifest.files.encoded_index = Some(index);
    manifest.files.pairs = Some("pairs.csv".into());
    manifest.counts.encoded_frames = Some(seq.len());
    manifest.counts.pairs = Some(pairs.len());
    manifest.save(dir).exit(EXIT_CONFIG)?;
    log::info!("bin event counts: {:?}", seq.bin_event_counts);
    println!("encode: {} frames, {} pairs", seq.len(), pairs.len());
    Ok(())
}

fn parse_blocks(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| config(format!("invalid block width {p:?}"))))
        .collect()
}

/// `(train, test)` under `record`; the test set is the first part of the split.
fn split_pairs(pairs: &[SamplePair], record: SplitRecord) -> CliResult<(Vec<SamplePair>, Vec<SamplePair>)> {
    let (test, train) = split(pairs, record.fraction, record.seed)?;
    Ok((train, test))
}

pub fn cmd_train(cli: &Cli, a: &TrainArgs) -> CliResult {
    let dir = &cli.out;
    let mut manifest = load_manifest(dir)?;
    let pairs = manifest.load_pairs(dir).exit(EXIT_DATA)?;
    let geo = manifest.geometry;
    let side = |s: u32| a.input_size.min(s as usize);
    let spec = NetworkSpec {
        height: side(geo.height),
        width: side(geo.width),
        blocks: parse_blocks(&a.blocks)?,
        residual: a.residual,
        hidden: a.hidden,
        ..NetworkSpec::default()
    };
    spec.validate()?;
    let loss = LossConfig {
        mode: match a.loss {
            LossArg::Centroid => LossMode::Centroid,
            LossArg::CentroidTheta => LossMode::CentroidTheta,
        },
        theta_weight: a.theta_weight,
        metric: match a.metric {
            MetricArg::L1 => CentroidMetric::L1,
            MetricArg::Euclidean => CentroidMetric::Euclidean,
        },
    };
    let cfg = TrainConfig {
        lr: a.lr,
        batch_size: a.batch_size,
        epochs: a.epochs,
        loss,
        seed: cli.seed,
        ..TrainConfig::default()
    };

    let record = SplitRecord {
        fraction: a.test_fraction,
        seed: cli.seed,
    };
    let (train_pairs, test_pairs) = split_pairs(&pairs, record)?;
    let train_set = prepare_samples::<f32>(&train_pairs, &spec)?;
    let test_set = prepare_samples::<f32>(&test_pairs, &spec)?;

    let mut trainer = match &a.resume {
        Some(path) => {
            let ck = Checkpoint::load(path).exit(EXIT_MODEL)?;
            if ck.spec != spec {
                return Err(Error::Checkpoint(format!(
                    "checkpoint network {:?} does not match requested {:?}",
                    ck.spec, spec
                ))
                .into());
            }
            Trainer::<f32>::resume(&ck, cfg)?
        }
        None => Trainer::<f32>::new(spec, cfg)?,
    };
    log::info!(
        "training {} parameters on {} pairs, testing on {}",
        trainer.net.param_count(),
        train_set.len(),
        test_set.len()
    );
    let outcome = match trainer.run(&train_set, &test_set) {
        Ok(o) => o,
        Err(e) => {
            if let Some(best) = trainer.best() {
                best.save(&dir.join(CHECKPOINT_FILE)).exit(EXIT_CONFIG)?;
                write_loss_csv(&dir.join(LOSSES_FILE), trainer.log()).exit(EXIT_CONFIG)?;
                eprintln!("kept best checkpoint from before the failure");
            }
            return Err(CliError { code: EXIT_MODEL, error: e });
        }
    };
    outcome.best.save(&dir.join(CHECKPOINT_FILE)).exit(EXIT_CONFIG)?;
    write_loss_csv(&dir.join(LOSSES_FILE), &outcome.log).exit(EXIT_CONFIG)?;
    manifest.split = Some(record);
    manifest.files.checkpoint = Some(CHECKPOINT_FILE.into());
    manifest.files.losses = Some(LOSSES_FILE.into());
    manifest.save(dir).exit(EXIT_CONFIG)?;
    let first = outcome.log.first().map(|l| l.train_loss()).unwrap_or(f64::NAN);
    let last = outcome.log.last().map(|l| l.train_loss()).unwrap_or(f64::NAN);
    println!(
        "train: {} epochs, train loss {first:.6} -> {last:.6}, best epoch {}",
        outcome.log.len(),
        outcome.best.epoch
    );
    Ok(())
}

#[derive(Debug, Serialize, serde::Deserialize)]
pub struct PredictionRow {
    pub pair: usize,
    pub target_x0: f64,
    pub target_y0: f64,
    pub target_x1: f64,
    pub target_y1: f64,
    pub pred_x0: f64,
    pub pred_y0: f64,
    pub pred_x1: f64,
    pub pred_y1: f64,
}

impl PredictionRow {
    fn vectors(&self) -> (GazeVector, GazeVector) {
        (
            GazeVector::new(Point2::new(self.target_x0, self.target_y0), Point2::new(self.target_x1, self.target_y1)),
            GazeVector::new(Point2::new(self.pred_x0, self.pred_y0), Point2::new(self.pred_x1, self.pred_y1)),
        )
    }
}

fn pixel_pair(p: [Point2; 2], geo: SensorGeometry) -> [Point2; 2] {
    p.map(|q| denormalize_point(q, geo.width, geo.height))
}

pub fn cmd_eval(cli: &Cli, a: &EvalArgs) -> CliResult {
    let dir = &cli.out;
    let manifest = load_manifest(dir)?;
    let radii = parse_radii(&a.radii)?;
    let pairs = manifest.load_pairs(dir).exit(EXIT_DATA)?;
    let geo = manifest.geometry;
    let index: Vec<usize> = if a.all || manifest.split.is_none() {
        (0..pairs.len()).collect()
    } else {
        let r = manifest.split.expect("checked");
        dataset::split_indices(pairs.len(), r.fraction, r.seed)?.0
    };

    let net = if a.truth_as_predictions {
        None
    } else {
        let path = match (&a.checkpoint, &manifest.files.checkpoint) {
            (Some(p), _) => p.clone(),
            (None, Some(rel)) => dir.join(rel),
            (None, None) => return Err(Error::Checkpoint("no checkpoint given or recorded in the manifest".into()).into()),
        };
        let ck = Checkpoint::load(&path).exit(EXIT_MODEL)?;
        if ck.spec.height > geo.height as usize || ck.spec.width > geo.width as usize {
            return Err(Error::Checkpoint(format!(
                "checkpoint expects {}x{} inputs, frames are {}x{}",
                ck.spec.height, ck.spec.width, geo.height, geo.width
            ))
            .into());
        }
        Some(ck.network::<f32>().exit(EXIT_MODEL)?)
    };

    let mut rows = Vec::with_capacity(index.len());
    let mut trials = Vec::with_capacity(index.len());
    for &i in &index {
        let pair = &pairs[i];
        let pred = match &net {
            Some(n) => n.predict_pair(pair).exit(EXIT_MODEL)?,
            None => pair.target,
        };
        let t = pixel_pair(pair.target, geo);
        let p = pixel_pair(pred, geo);
        trials.push(Trial::new(GazeVector::new(t[0], t[1]), GazeVector::new(p[0], p[1])).exit(EXIT_MODEL)?);
        rows.push(PredictionRow {
            pair: i,
            target_x0: t[0].x,
            target_y0: t[0].y,
            target_x1: t[1].x,
            target_y1: t[1].y,
            pred_x0: p[0].x,
            pred_y0: p[0].y,
            pred_x1: p[1].x,
            pred_y1: p[1].y,
        });
    }
    let center = if a.midpoint { CircleCenter::Midpoint } else { CircleCenter::Endpoints };
    let table = accuracy_table_with(&trials, &radii, center)?;
    let stats = angular_error_stats(&trials)?;

    table.write_csv(&dir.join("accuracy.csv")).exit(EXIT_CONFIG)?;
    std::fs::write(dir.join("accuracy.txt"), table.to_string())
        .map_err(|e| Error::io(dir.join("accuracy.txt"), e))
        .exit(EXIT_CONFIG)?;
    let stats_path = dir.join("angular.json");
    std::fs::write(&stats_path, serde_json::to_string_pretty(&stats).map_err(Error::from)?)
        .map_err(|e| Error::io(&stats_path, e))
        .exit(EXIT_CONFIG)?;
    let pred_path = dir.join("predictions.csv");
    let mut w = csv::Writer::from_path(&pred_path)
        .map_err(|e| Error::io(&pred_path, e.into()))
        .exit(EXIT_CONFIG)?;
    for r in &rows {
        w.serialize(r).map_err(|e| Error::io(&pred_path, e.into())).exit(EXIT_CONFIG)?;
    }
    w.flush().map_err(|e| Error::io(&pred_path, e)).exit(EXIT_CONFIG)?;

    println!("eval on {} pairs", trials.len());
    print!("{table}");
    println!("{stats}");
    Ok(())
}

fn read_predictions(path: &Path) -> CliResult<Vec<PredictionRow>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::io(path, e.into()))
        .exit(EXIT_DATA)?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 2,
                msg: e.to_string(),
            })
            .exit(EXIT_DATA)
        })
        .collect()
}

pub fn cmd_render(cli: &Cli, a: &RenderArgs) -> CliResult {
    let dir = &cli.out;
    let manifest = load_manifest(dir)?;
    let out = dir.join("render");
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e)).exit(EXIT_CONFIG)?;
    let geo = manifest.geometry;

    let gray = manifest.load_gray(dir).exit(EXIT_DATA)?;
    let truth = manifest.load_truth(dir).exit(EXIT_DATA)?;
    let base = gray.first().map(RgbImage::from_gray).unwrap_or_else(|| RgbImage::new(geo.width, geo.height));
    let path: Vec<Point2> = truth.samples.iter().map(|s| s.point()).collect();
    render::trajectory_overlay(base, &path)
        .save(&out.join("trajectory.ppm"))
        .exit(EXIT_CONFIG)?;
    let mut written = 1;

    let pairs = if manifest.files.pairs.is_some() {
        manifest.load_pairs(dir).exit(EXIT_DATA)?
    } else {
        Vec::new()
    };
    let mut previewed = std::collections::BTreeSet::new();
    for p in pairs.iter().take(a.frames) {
        if previewed.insert(p.source.0) {
            render::preview_frame(&p.frame_a)
                .save(&out.join(format!("preview_{:06}.ppm", p.source.0)))
                .exit(EXIT_CONFIG)?;
            written += 1;
        }
    }

    if let Some(pred_path) = &a.predictions {
        for row in read_predictions(pred_path)? {
            let pair = pairs.get(row.pair).ok_or_else(|| CliError {
                code: EXIT_DATA,
                error: Error::Manifest(format!("prediction refers to missing pair {}", row.pair)),
            })?;
            let (target, predicted) = row.vectors();
            render::prediction_overlay(render::frame_backdrop(&pair.frame_b), &target, &predicted)
                .save(&out.join(format!("pred_{:06}.ppm", row.pair)))
                .exit(EXIT_CONFIG)?;
            written += 1;
        }
    }
    println!("render: {written} images -> {}", out.display());
    Ok(())
}
