//! Shared data model: DVS events, event streams, grayscale guide frames,
//! ground-truth centroid tracks and gaze vectors.
//!
//! Timestamps are integer microseconds everywhere. Conversion to a real
//! time axis only happens inside [`normalize_timestamps`].

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Timestamp in microseconds.
pub type Micros = u64;

/// Polarity value of a brightness decrease.
pub const OFF: u8 = 0;
/// Polarity value of a brightness increase.
pub const ON: u8 = 1;

/// Sensor resolution in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorGeometry {
    pub width: u32,
    pub height: u32,
}

impl SensorGeometry {
    pub const MIN_SIDE: u32 = 8;

    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width < Self::MIN_SIDE || height < Self::MIN_SIDE {
            return Err(Error::Config(format!(
                "sensor geometry {width}x{height} below minimum {0}x{0}",
                Self::MIN_SIDE
            )));
        }
        Ok(Self { width, height })
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height
    }
}

impl Default for SensorGeometry {
    /// DAVIS 346 resolution.
    fn default() -> Self {
        Self {
            width: 346,
            height: 260,
        }
    }
}

/// One DVS spike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    pub t: Micros,
    /// 0 (OFF) or 1 (ON).
    pub p: u8,
}

impl Event {
    pub fn new(x: u16, y: u16, t: Micros, p: u8) -> Self {
        Self { x, y, t, p }
    }
}

/// A time-ordered sequence of events on a known sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    geometry: SensorGeometry,
    events: Vec<Event>,
}

impl EventStream {
    /// Sorts the events by timestamp (stable on ties) and checks bounds and polarity.
    pub fn new(geometry: SensorGeometry, mut events: Vec<Event>) -> Result<Self> {
        events.sort_by_key(|e| e.t);
        let stream = Self { geometry, events };
        let violations = validate_stream(&stream);
        if let Some(first) = violations.first() {
            return Err(Error::InvalidStream {
                count: violations.len(),
                first: first.to_string(),
            });
        }
        Ok(stream)
    }

    /// Wraps events as given, without sorting or checking. Use
    /// [`validate_stream`] to inspect the result.
    pub fn from_raw(geometry: SensorGeometry, events: Vec<Event>) -> Self {
        Self { geometry, events }
    }

    pub fn empty(geometry: SensorGeometry) -> Self {
        Self {
            geometry,
            events: Vec::new(),
        }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn timestamps(&self) -> Vec<Micros> {
        self.events.iter().map(|e| e.t).collect()
    }

    /// Time range `(first, last)` of the stream, `None` when empty.
    pub fn span(&self) -> Option<(Micros, Micros)> {
        Some((self.events.first()?.t, self.events.last()?.t))
    }
}

/// Maps timestamps onto `[0, 1]` by their min/max span. A zero span maps
/// every timestamp to 0.
pub fn normalize_timestamps(ts: &[Micros]) -> Result<Vec<f64>> {
    let (&first, rest) = ts
        .split_first()
        .ok_or_else(|| Error::EmptyInput("normalize_timestamps".into()))?;
    let (min, max) = rest
        .iter()
        .fold((first, first), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    if max == min {
        return Ok(vec![0.0; ts.len()]);
    }
    let span = (max - min) as f64;
    Ok(ts.iter().map(|&t| (t - min) as f64 / span).collect())
}

/// Events with `start <= t < end`, in stream order.
pub fn slice_by_time(stream: &EventStream, start: Micros, end: Micros) -> EventStream {
    let end = end.max(start);
    let lo = stream.events.partition_point(|e| e.t < start);
    let hi = stream.events.partition_point(|e| e.t < end);
    EventStream {
        geometry: stream.geometry,
        events: stream.events[lo..hi].to_vec(),
    }
}


/// Compatibility slicing: locates the indices whose timestamps are nearest
/// to `start` and `end` (first index on ties) and returns `events[s..e]`.
/// Unlike [`slice_by_time`], consecutive windows may share or drop
/// boundary events.
pub fn slice_nearest(stream: &EventStream, start: Micros, end: Micros) -> EventStream {
    let nearest = |target: Micros| -> usize {
        let mut best = 0;
        let mut best_d = u64::MAX;
        for (i, e) in stream.events.iter().enumerate() {
            let d = e.t.abs_diff(target);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    };
    if stream.events.is_empty() {
        return EventStream::empty(stream.geometry);
    }
    let s = nearest(start);
    let e = nearest(end).max(s);
    EventStream {
        geometry: stream.geometry,
        events: stream.events[s..e].to_vec(),
    }
}


/// What is wrong with an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    XOutOfBounds { x: u16, width: u32 },
    YOutOfBounds { y: u16, height: u32 },
    Polarity { p: u8 },
    TimestampInversion { previous: Micros, t: Micros },
}

/// A single invariant violation, tagged with the offending event index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::XOutOfBounds { x, width } => {
                write!(f, "event {}: field x = {x} outside width {width}", self.index)
            }
            ViolationKind::YOutOfBounds { y, height } => {
                write!(f, "event {}: field y = {y} outside height {height}", self.index)
            }
            ViolationKind::Polarity { p } => {
                write!(f, "event {}: field p = {p} is not 0 or 1", self.index)
            }
            ViolationKind::TimestampInversion { previous, t } => write!(
                f,
                "event {}: field t = {t} precedes previous timestamp {previous}",
                self.index
            ),
        }
    }
}

/// Reports every out-of-bounds coordinate, non-binary polarity and
/// timestamp inversion. An empty result means the stream is valid.
pub fn validate_stream(stream: &EventStream) -> Vec<Violation> {
    let geo = stream.geometry;
    let mut out = Vec::new();
    let mut previous: Option<Micros> = None;
    for (index, e) in stream.events.iter().enumerate() {
        if u32::from(e.x) >= geo.width {
            out.push(Violation {
                index,
                kind: ViolationKind::XOutOfBounds {
                    x: e.x,
                    width: geo.width,
                },
            });
        }
        if u32::from(e.y) >= geo.height {
            out.push(Violation {
                index,
                kind: ViolationKind::YOutOfBounds {
                    y: e.y,
                    height: geo.height,
                },
            });
        }
        if e.p > ON {
            out.push(Violation {
                index,
                kind: ViolationKind::Polarity { p: e.p },
            });
        }
        if let Some(prev) = previous {
            if e.t < prev {
                out.push(Violation {
                    index,
                    kind: ViolationKind::TimestampInversion { previous: prev, t: e.t },
                });
            }
        }
        previous = Some(e.t);
    }
    out
}

/// Intensity image in `[0, 1]`, row-major, captured at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayscaleFrame {
    pub t: Micros,
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<f32>,
}

impl GrayscaleFrame {
    pub fn new(t: Micros, width: u32, height: u32, pixels: Vec<f32>) -> Result<Self> {
        if pixels.len() != width as usize * height as usize {
            return Err(Error::Shape(format!(
                "grayscale frame {width}x{height} needs {} pixels, got {}",
                width as usize * height as usize,
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("grayscale value {v} outside [0, 1]")));
        }
        Ok(Self {
            t,
            width,
            height,
            pixels,
        })
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }
}

/// One ground-truth sample: pupil centre at time `t`, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentroidSample {
    pub t: Micros,
    pub cx: f64,
    pub cy: f64,
}

impl CentroidSample {
    pub fn point(&self) -> Point2 {
        Point2::new(self.cx, self.cy)
    }
}

/// Uniformly sampled ground-truth centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidTrack {
    pub period: Micros,
    pub bounds: Rect,
    pub samples: Vec<CentroidSample>,
}

impl CentroidTrack {
    pub fn new(period: Micros, bounds: Rect, samples: Vec<CentroidSample>) -> Result<Self> {
        if period == 0 {
            return Err(Error::Config("centroid track period must be positive".into()));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(Error::Domain(format!(
                    "centroid timestamps not strictly increasing at index {}",
                    i + 1
                )));
            }
        }
        if let Some(s) = samples.iter().find(|s| !bounds.contains(s.point())) {
            return Err(Error::Domain(format!(
                "centroid ({}, {}) at t = {} outside stimulus box",
                s.cx, s.cy, s.t
            )));
        }
        Ok(Self {
            period,
            bounds,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Axis-aligned box, inclusive on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    /// The sensor area shrunk by `margin` pixels on every side.
    pub fn inset(geometry: SensorGeometry, margin: f64) -> Self {
        Self::new(
            margin,
            margin,
            f64::from(geometry.width) - 1.0 - margin,
            f64::from(geometry.height) - 1.0 - margin,
        )
    }

    pub fn is_empty(&self) -> bool {
        !(self.x_min <= self.x_max && self.y_min <= self.y_max)
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }
}

/// A real-valued 2-D point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn sub(self, other: Point2) -> Point2 {
        Point2::new(self.x - other.x, self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn lerp(self, other: Point2, s: f64) -> Point2 {
        Point2::new(self.x + (other.x - self.x) * s, self.y + (other.y - self.y) * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Ordered centroid pair: where the gaze was, then where it went.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeVector {
    pub start: Point2,
    pub end: Point2,
}

impl GazeVector {
    pub fn new(start: Point2, end: Point2) -> Self {
        Self { start, end }
    }

    pub fn direction(&self) -> Point2 {
        self.end.sub(self.start)
    }

    pub fn midpoint(&self) -> Point2 {
        self.start.lerp(self.end, 0.5)
    }

    pub fn is_finite(&self) -> bool {
        self.start.is_finite() && self.end.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geo() -> SensorGeometry {
        SensorGeometry::new(16, 16).unwrap()
    }

    fn stream_at(ts: &[Micros]) -> EventStream {
        let events = ts.iter().map(|&t| Event::new(1, 1, t, ON)).collect();
        EventStream::new(geo(), events).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_timestamps(&[0, 50, 100]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_timestamps(&[7, 7, 7]).unwrap(), vec![0.0, 0.0, 0.0]);
        let v = normalize_timestamps(&[10, 20, 40]).unwrap();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(v[2], 1.0);
    }

    #[test]
    fn normalize_empty_is_error() {
        assert!(matches!(normalize_timestamps(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn slice_half_open() {
        let s = stream_at(&[0, 33, 66]);
        assert_eq!(slice_by_time(&s, 0, 33).timestamps(), vec![0]);
        assert_eq!(slice_by_time(&s, 0, 67).timestamps(), vec![0, 33, 66]);
        assert!(slice_by_time(&s, 100, 200).is_empty());
    }

    #[test]
    fn nearest_slice_can_share_boundary_events() {
        let s = stream_at(&[0, 10, 20, 30, 40]);
        let a = slice_nearest(&s, 0, 21);
        let b = slice_nearest(&s, 19, 41);
        // index 2 (t = 20) is nearest to both 19 and 21
        assert_eq!(a.timestamps(), vec![0, 10]);
        assert_eq!(b.timestamps(), vec![20, 30]);
        assert!(slice_nearest(&EventStream::empty(geo()), 0, 10).is_empty());
    }

    #[test]
    fn validate_reports_each_violation() {
        assert!(validate_stream(&stream_at(&[1, 2, 3])).is_empty());

        let bad_p = EventStream::from_raw(geo(), vec![Event::new(0, 0, 0, 1), Event::new(0, 0, 1, 2)]);
        let v = validate_stream(&bad_p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].index, 1);
        assert_eq!(v[0].kind, ViolationKind::Polarity { p: 2 });
        assert!(v[0].to_string().contains("field p"));

        let inverted = EventStream::from_raw(geo(), vec![Event::new(0, 0, 5, 0), Event::new(0, 0, 3, 0)]);
        let v = validate_stream(&inverted);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].index, 1);
        assert!(matches!(v[0].kind, ViolationKind::TimestampInversion { .. }));

        let oob = EventStream::from_raw(geo(), vec![Event::new(16, 20, 0, 0)]);
        assert_eq!(validate_stream(&oob).len(), 2);
    }

    #[test]
    fn new_sorts_stably_and_rejects_bad_events() {
        let s = EventStream::new(
            geo(),
            vec![Event::new(2, 0, 9, 0), Event::new(0, 0, 3, 0), Event::new(1, 0, 9, 1)],
        )
        .unwrap();
        let xs: Vec<u16> = s.events().iter().map(|e| e.x).collect();
        assert_eq!(xs, vec![0, 2, 1]);
        assert!(EventStream::new(geo(), vec![Event::new(99, 0, 0, 0)]).is_err());
    }

    #[test]
    fn geometry_minimum() {
        assert!(SensorGeometry::new(7, 64).is_err());
        assert!(SensorGeometry::new(8, 8).is_ok());
        assert_eq!(SensorGeometry::default(), SensorGeometry::new(346, 260).unwrap());
    }

    #[test]
    fn track_rejects_non_increasing() {
        let b = Rect::new(0.0, 0.0, 10.0, 10.0);
        let s = |t| CentroidSample { t, cx: 1.0, cy: 1.0 };
        assert!(CentroidTrack::new(10, b, vec![s(0), s(10)]).is_ok());
        assert!(CentroidTrack::new(10, b, vec![s(10), s(10)]).is_err());
        let outside = CentroidSample { t: 0, cx: 11.0, cy: 1.0 };
        assert!(CentroidTrack::new(10, b, vec![outside]).is_err());
    }

    proptest! {
        #[test]
        fn normalize_bounded_and_monotone(mut ts in proptest::collection::vec(0u64..1_000_000, 1..200)) {
            ts.sort_unstable();
            let n = normalize_timestamps(&ts).unwrap();
            prop_assert!(n.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(n.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn consecutive_slices_partition(mut ts in proptest::collection::vec(0u64..10_000, 0..300), bin in 1u64..2_000) {
            ts.sort_unstable();
            let s = stream_at(&ts);
            let (lo, hi) = s.span().unwrap_or((0, 0));
            let mut rebuilt = Vec::new();
            let mut start = lo;
            while start < hi + 1 {
                let end = (start + bin).min(hi + 1);
                rebuilt.extend_from_slice(slice_by_time(&s, start, end).events());
                start = end;
            }
            prop_assert_eq!(rebuilt, s.events().to_vec());
        }
    }
}
