//! Deterministic synthetic DVS camera.
//!
//! The scene is a dark disk (the pupil) on a lighter background. The disk
//! follows a fixation/saccade trajectory; every pixel runs the standard
//! log-intensity contrast-threshold model to emit ON/OFF events, and a
//! sparse grayscale guide stream is rendered alongside.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{
    CentroidSample, CentroidTrack, Event, EventStream, GrayscaleFrame, Micros, Point2, Rect,
    SensorGeometry, OFF, ON,
};

/// Period of the ground-truth track, equal to the default encoding bin.
pub const TRUTH_PERIOD: Micros = 33_000;
/// Simulation tick. Event timestamps are interpolated between ticks.
pub const SIM_TICK: Micros = 1_000;
/// Intensity floor applied before taking the logarithm.
pub const LOG_EPS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub geometry: SensorGeometry,
    pub background_intensity: f64,
    pub pupil_intensity: f64,
    pub pupil_radius: f64,
    /// Log-intensity change that triggers one event.
    pub contrast_threshold: f64,
    /// Uniform background noise, events per pixel per second.
    pub noise_rate: f64,
    pub seed: u64,
}

impl SceneConfig {
    pub fn new(geometry: SensorGeometry, seed: u64) -> Self {
        let radius = (f64::from(geometry.width.min(geometry.height)) * 0.1).max(2.0);
        Self {
            geometry,
            background_intensity: 0.6,
            pupil_intensity: 0.1,
            pupil_radius: radius,
            contrast_threshold: 0.3,
            noise_rate: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.background_intensity > 0.0 && self.background_intensity <= 1.0) {
            return bad("background_intensity must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.pupil_intensity) {
            return bad("pupil_intensity must lie in [0, 1)");
        }
        if self.pupil_intensity >= self.background_intensity {
            return bad("pupil must be darker than the background");
        }
        if !(self.contrast_threshold > 0.0) {
            return bad("contrast_threshold must be positive");
        }
        if !(self.pupil_radius > 0.0) {
            return bad("pupil_radius must be positive");
        }
        if !(self.noise_rate >= 0.0) {
            return bad("noise_rate must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub duration: Micros,
    pub fixation_mean: Micros,
    pub saccade_duration: Micros,
    /// Box the pupil centre stays inside.
    pub bounds: Rect,
    /// Amplitude in pixels of the smooth tremor added to the path; 0 disables it.
    pub jitter: f64,
    pub seed: u64,
}

impl TrajectoryConfig {
    /// Default dynamics with the pupil kept `margin` pixels away from the sensor edge.
    pub fn new(geometry: SensorGeometry, duration: Micros, margin: f64, seed: u64) -> Self {
        Self {
            duration,
            fixation_mean: 300_000,
            saccade_duration: 40_000,
            bounds: Rect::inset(geometry, margin),
            jitter: 0.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() {
            return Err(Error::Config("trajectory bounds box is empty".into()));
        }
        if self.duration == 0 || self.fixation_mean == 0 || self.saccade_duration == 0 {
            return Err(Error::Config(
                "duration, fixation_mean and saccade_duration must be positive".into(),
            ));
        }
        if !(self.jitter >= 0.0) {
            return Err(Error::Config("jitter must be non-negative".into()));
        }
        let b = self.bounds;
        if b.x_max - b.x_min < 2.0 * self.jitter || b.y_max - b.y_min < 2.0 * self.jitter {
            return Err(Error::Config("bounds box smaller than the jitter amplitude".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Fixation {
    start: Micros,
    end: Micros,
    at: Point2,
}

/// Continuous pupil path: fixations joined by smooth-step saccades.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    duration: Micros,
    fixations: Vec<Fixation>,
    jitter: f64,
    tremor_phase: [f64; 2],
    bounds: Rect,
}

const TREMOR_HZ: [f64; 2] = [7.0, 11.0];

fn smooth_step(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

/// Generates a seeded fixation/saccade path over `[0, cfg.duration]`.
pub fn gen_trajectory(cfg: &TrajectoryConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let b = cfg.bounds;
    let j = cfg.jitter;
    let pick = |rng: &mut ChaCha8Rng| {
        Point2::new(
            rng.random_range(b.x_min + j..=b.x_max - j),
            rng.random_range(b.y_min + j..=b.y_max - j),
        )
    };
    let tremor_phase = [
        rng.random_range(0.0..std::f64::consts::TAU),
        rng.random_range(0.0..std::f64::consts::TAU),
    ];
    let mut fixations = Vec::new();
    let mut t: Micros = 0;
    let mut at = pick(&mut rng);
    loop {
        let scale: f64 = rng.random_range(0.5..1.5);
        let hold = ((cfg.fixation_mean as f64 * scale).round() as Micros).max(1);
        fixations.push(Fixation {
            start: t,
            end: t + hold,
            at,
        });
        t += hold + cfg.saccade_duration;
        if t - cfg.saccade_duration >= cfg.duration {
            break;
        }
        at = pick(&mut rng);
    }
    Ok(Trajectory {
        duration: cfg.duration,
        fixations,
        jitter: cfg.jitter,
        tremor_phase,
        bounds: cfg.bounds,
    })
}

impl Trajectory {
    pub fn duration(&self) -> Micros {
        self.duration
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    /// Number of saccades that start before the end of the recording.
    pub fn saccade_count(&self) -> usize {
        let n = self.fixations.len() - 1;
        self.fixations[..n]
            .iter()
            .filter(|f| f.end < self.duration)
            .count()
    }

    /// Pupil centre at time `t` (µs).
    pub fn position(&self, t: Micros) -> Point2 {
        let idx = self.fixations.partition_point(|f| f.start <= t).saturating_sub(1);
        let fix = self.fixations[idx];
        let base = if t < fix.end {
            fix.at
        } else {
            match self.fixations.get(idx + 1) {
                Some(next) => {
                    let s = (t - fix.end) as f64 / (next.start - fix.end) as f64;
                    fix.at.lerp(next.at, smooth_step(s))
                }
                None => fix.at,
            }
        };
        if self.jitter == 0.0 {
            return base;
        }
        let secs = t as f64 * 1e-6;
        let wobble = |k: usize| {
            self.jitter * (std::f64::consts::TAU * TREMOR_HZ[k] * secs + self.tremor_phase[k]).sin()
        };
        Point2::new(base.x + wobble(0), base.y + wobble(1))
    }

    /// Samples the path at `(n + 1) * period` for every sample that fits
    /// inside the recording, so sample `n` describes the end of bin `n`.
    pub fn sample(&self, period: Micros) -> Result<CentroidTrack> {
        if period == 0 {
            return Err(Error::Config("sampling period must be positive".into()));
        }
        let count = self.duration / period;
        let samples = (0..count)
            .map(|n| {
                let t = (n + 1) * period;
                let p = self.position(t);
                CentroidSample { t, cx: p.x, cy: p.y }
            })
            .collect();
        CentroidTrack::new(period, self.bounds, samples)
    }
}

/// Scene intensity at pixel `(u, v)` with the pupil centred on `center`.
/// The disk edge is blended linearly over one pixel, so a pixel exactly on
/// the rim gets the midpoint of the two intensities.
pub fn render_intensity(cfg: &SceneConfig, center: Point2, u: u32, v: u32) -> f64 {
    let d = Point2::new(f64::from(u), f64::from(v)).dist(center);
    let w = (d - cfg.pupil_radius + 0.5).clamp(0.0, 1.0);
    cfg.pupil_intensity + (cfg.background_intensity - cfg.pupil_intensity) * w
}

pub fn log_intensity(i: f64) -> f64 {
    i.max(LOG_EPS).ln()
}

/// Per-pixel contrast-threshold state.
#[derive(Debug, Clone, Copy)]
pub struct PixelState {
    /// Log intensity at the last tick.
    pub level: f64,
    /// Log intensity at which the last event fired.
    pub reference: f64,
}

impl PixelState {
    pub fn new(level: f64) -> Self {
        Self {
            level,
            reference: level,
        }
    }

    /// Advances the pixel from its last level to `next`, linearly between
    /// `t0` and `t0 + dt`, calling `emit(t, polarity)` once per crossed threshold.
    pub fn advance(&mut self, next: f64, t0: Micros, dt: Micros, threshold: f64, mut emit: impl FnMut(Micros, u8)) {
        let prev = self.level;
        let delta = next - prev;
        if delta != 0.0 {
            loop {
                let (target, p) = if next >= self.reference + threshold {
                    (self.reference + threshold, ON)
                } else if next <= self.reference - threshold {
                    (self.reference - threshold, OFF)
                } else {
                    break;
                };
                let frac = ((target - prev) / delta).clamp(0.0, 1.0);
                emit(t0 + (frac * dt as f64).round() as Micros, p);
                self.reference = target;
            }
        }
        self.level = next;
    }
}

/// Runs the contrast-threshold model over `path` at 1 ms ticks and returns
/// the sorted event stream (ties ordered by `y`, `x`, `p`).
pub fn gen_events(cfg: &SceneConfig, path: &Trajectory) -> Result<EventStream> {
    gen_events_threaded(cfg, path, 1)
}

/// [`gen_events`] with pixel rows split across `threads` workers. The
/// output is identical for every thread count.
pub fn gen_events_threaded(cfg: &SceneConfig, path: &Trajectory, threads: usize) -> Result<EventStream> {
    cfg.validate()?;
    let geo = cfg.geometry;
    let threads = threads.clamp(1, geo.height as usize);
    let rows_per = (geo.height as usize).div_ceil(threads);
    let mut events: Vec<Event> = if threads == 1 {
        simulate_rows(cfg, path, 0, geo.height)
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|k| {
                    let y0 = (k * rows_per) as u32;
                    let y1 = (((k + 1) * rows_per) as u32).min(geo.height);
                    scope.spawn(move || simulate_rows(cfg, path, y0, y1))
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("event worker panicked"))
                .collect()
        })
    };
    add_noise(cfg, path.duration(), &mut events);
    events.sort_unstable_by_key(|e| (e.t, e.y, e.x, e.p));
    Ok(EventStream::from_raw(geo, events))
}

fn simulate_rows(cfg: &SceneConfig, path: &Trajectory, y0: u32, y1: u32) -> Vec<Event> {
    let geo = cfg.geometry;
    let w = geo.width as usize;
    let mut center = path.position(0);
    let mut state: Vec<PixelState> = (y0..y1)
        .flat_map(|v| (0..geo.width).map(move |u| (u, v)))
        .map(|(u, v)| PixelState::new(log_intensity(render_intensity(cfg, center, u, v))))
        .collect();
    let mut out = Vec::new();
    let reach = cfg.pupil_radius + 1.0;
    let ticks = path.duration() / SIM_TICK;
    for k in 1..=ticks {
        let t0 = (k - 1) * SIM_TICK;
        let next_center = path.position(k * SIM_TICK);
        // Only pixels inside either disk's blend zone can change intensity.
        let lo_x = (center.x.min(next_center.x) - reach).floor().max(0.0) as u32;
        let hi_x = ((center.x.max(next_center.x) + reach).ceil().max(0.0) as u32).min(geo.width - 1);
        let lo_y = ((center.y.min(next_center.y) - reach).floor().max(0.0) as u32).max(y0);
        let hi_y = ((center.y.max(next_center.y) + reach).ceil().max(0.0) as u32).min(y1.saturating_sub(1));
        if y0 < y1 && lo_y <= hi_y {
            for v in lo_y..=hi_y {
                for u in lo_x..=hi_x {
                    let px = &mut state[(v - y0) as usize * w + u as usize];
                    let next = log_intensity(render_intensity(cfg, next_center, u, v));
                    px.advance(next, t0, SIM_TICK, cfg.contrast_threshold, |t, p| {
                        out.push(Event::new(u as u16, v as u16, t, p))
                    });
                }
            }
        }
        center = next_center;
    }
    out
}

fn add_noise(cfg: &SceneConfig, duration: Micros, events: &mut Vec<Event>) {
    if cfg.noise_rate <= 0.0 || duration == 0 {
        return;
    }
    let geo = cfg.geometry;
    let lambda = cfg.noise_rate * geo.pixel_count() as f64 * duration as f64 * 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6e6f_6973_6520_6576);
    let count = Poisson::new(lambda).map(|d| d.sample(&mut rng) as u64).unwrap_or(0);
    for _ in 0..count {
        events.push(Event::new(
            rng.random_range(0..geo.width) as u16,
            rng.random_range(0..geo.height) as u16,
            rng.random_range(0..=duration),
            rng.random_range(0..=1u8),
        ));
    }
}

/// Renders the full scene with the pupil at `center`.
pub fn render_frame(cfg: &SceneConfig, center: Point2, t: Micros) -> GrayscaleFrame {
    let geo = cfg.geometry;
    let pixels = (0..geo.height)
        .flat_map(|v| (0..geo.width).map(move |u| (u, v)))
        .map(|(u, v)| render_intensity(cfg, center, u, v) as f32)
        .collect();
    GrayscaleFrame {
        t,
        width: geo.width,
        height: geo.height,
        pixels,
    }
}

/// Grayscale guide frames at a uniform `1 / fps` period starting at 0;
/// `floor(duration * fps) + 1` frames.
pub fn sample_gray_frames(cfg: &SceneConfig, path: &Trajectory, fps: f64) -> Result<Vec<GrayscaleFrame>> {
    if !(0.5..=30.0).contains(&fps) {
        return Err(Error::Config(format!("fps {fps} outside [0.5, 30]")));
    }
    let seconds = path.duration() as f64 * 1e-6;
    let count = (seconds * fps + 1e-9).floor() as u64 + 1;
    Ok((0..count)
        .map(|i| {
            let t = ((i as f64 * 1e6 / fps).round() as Micros).min(path.duration());
            render_frame(cfg, path.position(t), t)
        })
        .collect())
}

/// Everything one simulated recording produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub duration: Micros,
    pub events: EventStream,
    pub gray_frames: Vec<GrayscaleFrame>,
    pub truth: CentroidTrack,
}

/// Generates the path, events, guide frames and ground truth for one recording.
pub fn simulate(scene: &SceneConfig, traj: &TrajectoryConfig, fps: f64, threads: usize) -> Result<SimOutput> {
    scene.validate()?;
    let path = gen_trajectory(traj)?;
    let gray_frames = sample_gray_frames(scene, &path, fps)?;
    let events = gen_events_threaded(scene, &path, threads)?;
    let truth = path.sample(TRUTH_PERIOD)?;
    Ok(SimOutput {
        duration: traj.duration,
        events,
        gray_frames,
        truth,
    })
}
