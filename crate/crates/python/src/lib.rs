//! Python bindings: simulate a recording, encode it, train a regressor and
//! score gaze vectors.

use std::path::PathBuf;

use evgaze::encoder::{eta_color as eta, fuse_sequence, make_sample_pairs, ColorCode, EncodingConfig, SamplePair};
use evgaze::eval::{self, CircleCenter, Trial};
use evgaze::model::{prepare_input, prepare_samples, Checkpoint, LossConfig, LossMode, Network, NetworkSpec, TrainConfig, Trainer};
use evgaze::simulator::{simulate as run_simulation, SceneConfig, SimOutput, TrajectoryConfig};
use evgaze::{dataset, Error, GazeVector, Point2, SensorGeometry};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;

create_exception!(evgaze, EvgazeError, PyException);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::EmptyInput(_) => PyValueError::new_err(e.to_string()),
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => EvgazeError::new_err(other.to_string()),
    }
}

type Xy = (f64, f64);

fn pt((x, y): Xy) -> Point2 {
    Point2::new(x, y)
}

fn xy(p: Point2) -> Xy {
    (p.x, p.y)
}

/// One simulated recording: events, guide frames and ground-truth centroids.
#[pyclass(module = "evgaze", frozen)]
struct Recording {
    out: SimOutput,
}

#[pymethods]
impl Recording {
    #[getter]
    fn width(&self) -> u32 {
        self.out.events.geometry().width
    }

    #[getter]
    fn height(&self) -> u32 {
        self.out.events.geometry().height
    }

    #[getter]
    fn duration_us(&self) -> u64 {
        self.out.duration
    }

    #[getter]
    fn num_events(&self) -> usize {
        self.out.events.len()
    }

    /// `(x, y, t_us, polarity)` tuples in time order.
    fn events(&self) -> Vec<(u16, u16, u64, u8)> {
        self.out.events.events().iter().map(|e| (e.x, e.y, e.t, e.p)).collect()
    }

    fn gray_frame_times(&self) -> Vec<u64> {
        self.out.gray_frames.iter().map(|f| f.t).collect()
    }

    /// Row-major intensities of guide frame `i`.
    fn gray_frame(&self, i: usize) -> PyResult<Vec<f32>> {
        self.out
            .gray_frames
            .get(i)
            .map(|f| f.pixels.clone())
            .ok_or_else(|| PyIndexError::new_err(format!("guide frame {i} out of range")))
    }

    /// `(t_us, x, y)` ground-truth pupil centroids.
    fn truth(&self) -> Vec<(u64, f64, f64)> {
        self.out.truth.samples.iter().map(|s| (s.t, s.cx, s.cy)).collect()
    }

    #[pyo3(signature = (bin_ms = 33, alpha = 5.0))]
    fn encode(&self, bin_ms: u64, alpha: f64) -> PyResult<Sequence> {
        let cfg = EncodingConfig::new(bin_ms * 1000, alpha).map_err(py_err)?;
        let seq = fuse_sequence(&self.out.events, &self.out.gray_frames, &self.out.truth, &cfg).map_err(py_err)?;
        let pairs = make_sample_pairs(&seq).map_err(py_err)?;
        Ok(Sequence {
            geometry: self.out.events.geometry(),
            frames: seq.frames.iter().map(|f| f.channels.clone()).collect(),
            counts: seq.bin_event_counts,
            pairs,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Recording({}x{}, {} events, {} guide frames, {} centroids)",
            self.width(),
            self.height(),
            self.out.events.len(),
            self.out.gray_frames.len(),
            self.out.truth.len()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (width = 64, height = 64, duration_ms = 4000, fps = 3.0, seed = 0, threshold = 0.3, noise_rate = 0.0, threads = 1))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    width: u32,
    height: u32,
    duration_ms: u64,
    fps: f64,
    seed: u64,
    threshold: f64,
    noise_rate: f64,
    threads: usize,
) -> PyResult<Recording> {
    let geometry = SensorGeometry::new(width, height).map_err(py_err)?;
    let mut scene = SceneConfig::new(geometry, seed);
    scene.contrast_threshold = threshold;
    scene.noise_rate = noise_rate;
    let margin = scene.pupil_radius + 1.0;
    let traj = TrajectoryConfig::new(geometry, duration_ms * 1000, margin, seed.wrapping_add(1));
    let out = py
        .detach(|| run_simulation(&scene, &traj, fps, threads.max(1)))
        .map_err(py_err)?;
    Ok(Recording { out })
}

/// Encoded frames of one recording and the training pairs built from them.
#[pyclass(module = "evgaze", frozen)]
struct Sequence {
    geometry: SensorGeometry,
    frames: Vec<Vec<f32>>,
    counts: Vec<usize>,
    pairs: Vec<SamplePair>,
}

#[pymethods]
impl Sequence {
    fn __len__(&self) -> usize {
        self.frames.len()
    }

    #[getter]
    fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    #[getter]
    fn bin_event_counts(&self) -> Vec<usize> {
        self.counts.clone()
    }

    /// Channel-major `[6][height][width]` values of frame `i`, flattened.
    fn frame(&self, i: usize) -> PyResult<Vec<f32>> {
        self.frames
            .get(i)
            .cloned()
            .ok_or_else(|| PyIndexError::new_err(format!("frame {i} out of range")))
    }

    /// Target gaze vector of pair `i` in pixels.
    fn target(&self, i: usize) -> PyResult<(Xy, Xy)> {
        let p = self.pair(i)?;
        let [a, b] = pixel_points(p.target, self.geometry);
        Ok((xy(a), xy(b)))
    }

    fn __repr__(&self) -> String {
        format!("Sequence({} frames, {} pairs)", self.frames.len(), self.pairs.len())
    }
}

impl Sequence {
    fn pair(&self, i: usize) -> PyResult<&SamplePair> {
        self.pairs
            .get(i)
            .ok_or_else(|| PyIndexError::new_err(format!("pair {i} out of range")))
    }
}

fn pixel_points(p: [Point2; 2], g: SensorGeometry) -> [Point2; 2] {
    p.map(|q| evgaze::encoder::denormalize_point(q, g.width, g.height))
}

/// Two-branch gaze-vector regressor.
#[pyclass(module = "evgaze", frozen)]
struct Model {
    ck: Checkpoint,
    net: Network<f32>,
    losses: Vec<(usize, f64, Option<f64>)>,
}

#[pymethods]
impl Model {
    #[getter]
    fn param_count(&self) -> usize {
        self.net.param_count()
    }

    #[getter]
    fn epoch(&self) -> usize {
        self.ck.epoch
    }

    /// `(epoch, train_loss, test_loss)` rows of the training run.
    #[getter]
    fn losses(&self) -> Vec<(usize, f64, Option<f64>)> {
        self.losses.clone()
    }

    /// Predicted gaze vector of pair `i` of `seq`, in pixels.
    fn predict(&self, seq: &Sequence, i: usize) -> PyResult<(Xy, Xy)> {
        let pair = seq.pair(i)?;
        let spec = self.net.spec();
        let a = prepare_input::<f32>(&pair.frame_a, spec).map_err(py_err)?;
        let b = prepare_input::<f32>(&pair.frame_b, spec).map_err(py_err)?;
        let p = self.net.predict(&a, &b).map_err(py_err)?;
        let [s, e] = pixel_points(p, seq.geometry);
        Ok((xy(s), xy(e)))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.ck.save(&path).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let ck = Checkpoint::load(&path).map_err(py_err)?;
        let net = ck.network().map_err(py_err)?;
        Ok(Self {
            ck,
            net,
            losses: Vec::new(),
        })
    }

    fn __repr__(&self) -> String {
        let s = self.net.spec();
        format!("Model({}x{} input, blocks {:?}, {} parameters)", s.width, s.height, s.blocks, self.net.param_count())
    }
}

/// Trains on a random split of `seq` and returns the checkpoint with the
/// lowest held-out loss.
#[pyfunction]
#[pyo3(signature = (seq, epochs = 50, batch_size = 16, lr = 1e-3, seed = 0, test_fraction = 0.2, theta = true, input_size = 64, blocks = vec![8, 16, 32, 64], hidden = 128, residual = false))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    seq: &Sequence,
    epochs: usize,
    batch_size: usize,
    lr: f64,
    seed: u64,
    test_fraction: f64,
    theta: bool,
    input_size: usize,
    blocks: Vec<usize>,
    hidden: usize,
    residual: bool,
) -> PyResult<Model> {
    let g = seq.geometry;
    let spec = NetworkSpec {
        height: input_size.min(g.height as usize),
        width: input_size.min(g.width as usize),
        blocks,
        residual,
        hidden,
        ..NetworkSpec::default()
    };
    spec.validate().map_err(py_err)?;
    let cfg = TrainConfig {
        lr,
        batch_size,
        epochs,
        loss: LossConfig::new(if theta { LossMode::CentroidTheta } else { LossMode::Centroid }),
        seed,
        ..TrainConfig::default()
    };
    let run = || -> evgaze::Result<Model> {
        let (test, train) = dataset::split(&seq.pairs, test_fraction, seed)?;
        let train_set = prepare_samples::<f32>(&train, &spec)?;
        let test_set = prepare_samples::<f32>(&test, &spec)?;
        let mut trainer = Trainer::<f32>::new(spec.clone(), cfg)?;
        let outcome = trainer.run(&train_set, &test_set)?;
        let losses = outcome.log.iter().map(|l| (l.epoch, l.train_loss(), l.test_loss())).collect();
        let net = outcome.best.network()?;
        Ok(Model {
            ck: outcome.best,
            net,
            losses,
        })
    };
    py.detach(run).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (t, alpha = 5.0))]
fn eta_color(t: f64, alpha: f64) -> PyResult<(f64, f64, f64)> {
    let code = ColorCode::new(alpha).map_err(py_err)?;
    let [r, g, b] = eta(t, code).map_err(py_err)?;
    Ok((r, g, b))
}

fn trial(target: (Xy, Xy), predicted: (Xy, Xy)) -> PyResult<Trial> {
    let v = |(a, b): (Xy, Xy)| GazeVector::new(pt(a), pt(b));
    Trial::new(v(target), v(predicted)).map_err(py_err)
}

fn center(midpoint: bool) -> CircleCenter {
    if midpoint {
        CircleCenter::Midpoint
    } else {
        CircleCenter::Endpoints
    }
}

#[pyfunction]
#[pyo3(signature = (target, predicted, radius, midpoint = false))]
fn strat1_success(target: (Xy, Xy), predicted: (Xy, Xy), radius: f64, midpoint: bool) -> PyResult<bool> {
    Ok(eval::strat1_success_with(&trial(target, predicted)?, radius, center(midpoint)))
}

#[pyfunction]
#[pyo3(signature = (target, predicted, radius, midpoint = false))]
fn strat2_success(target: (Xy, Xy), predicted: (Xy, Xy), radius: f64, midpoint: bool) -> PyResult<bool> {
    Ok(eval::strat2_success_with(&trial(target, predicted)?, radius, center(midpoint)))
}

/// `(radius, strategy 1 %, strategy 2 %)` rows over paired target and
/// predicted vectors.
#[pyfunction]
#[pyo3(signature = (targets, predictions, radii = eval::DEFAULT_RADII.to_vec(), midpoint = false))]
fn accuracy_table(
    targets: Vec<(Xy, Xy)>,
    predictions: Vec<(Xy, Xy)>,
    radii: Vec<f64>,
    midpoint: bool,
) -> PyResult<Vec<(f64, f64, f64)>> {
    if targets.len() != predictions.len() {
        return Err(PyValueError::new_err(format!(
            "{} targets but {} predictions",
            targets.len(),
            predictions.len()
        )));
    }
    let trials = targets
        .into_iter()
        .zip(predictions)
        .map(|(t, p)| trial(t, p))
        .collect::<PyResult<Vec<_>>>()?;
    let table = eval::accuracy_table_with(&trials, &radii, center(midpoint)).map_err(py_err)?;
    Ok(table.rows.iter().map(|r| (r.radius, r.strat1, r.strat2)).collect())
}

#[pymodule]
#[pyo3(name = "evgaze")]
fn evgaze_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("EvgazeError", m.py().get_type::<EvgazeError>())?;
    m.add_class::<Recording>()?;
    m.add_class::<Sequence>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(eta_color, m)?)?;
    m.add_function(wrap_pyfunction!(strat1_success, m)?)?;
    m.add_function(wrap_pyfunction!(strat2_success, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_table, m)?)?;
    Ok(())
}
