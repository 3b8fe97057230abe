//! Rate-coded event-to-image encoding and temporal fusion with grayscale
//! guide frames.
//!
//! Within a bin, event timestamps are normalized to `[0, 1]` and each event
//! paints its pixel with an `(r, g, b)` triple that fades from red (early)
//! to blue (late). OFF events go to channels 0..3, ON events to 3..6.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{
    normalize_timestamps, slice_by_time, slice_nearest, CentroidTrack, EventStream,
    GrayscaleFrame, Micros, Point2, ON,
};

pub const CHANNELS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorCode {
    /// Decay rate of the red and blue ramps.
    pub alpha: f64,
}

impl ColorCode {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { alpha })
    }
}

impl Default for ColorCode {
    fn default() -> Self {
        Self { alpha: 5.0 }
    }
}

/// How a bin's events are cut out of the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceMode {
    /// `[start, end)`; consecutive bins partition the stream.
    #[default]
    HalfOpen,
    /// Nearest-index search on both bin edges. Boundary events may be
    /// shared by or missing from adjacent bins.
    NearestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingConfig {
    /// Temporal bin width in microseconds.
    pub bin: Micros,
    pub color: ColorCode,
    #[serde(default)]
    pub slice_mode: SliceMode,
}

impl EncodingConfig {
    pub fn new(bin: Micros, alpha: f64) -> Result<Self> {
        if bin == 0 {
            return Err(Error::Config("bin width must be positive".into()));
        }
        Ok(Self {
            bin,
            color: ColorCode::new(alpha)?,
            slice_mode: SliceMode::HalfOpen,
        })
    }
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            bin: 33_000,
            color: ColorCode::default(),
            slice_mode: SliceMode::HalfOpen,
        }
    }
}

/// Six-channel image, channel-major (`[c][y][x]`), all values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedFrame {
    pub t_end: Micros,
    pub width: u32,
    pub height: u32,
    pub channels: Vec<f32>,
}

impl EncodedFrame {
    pub fn blank(width: u32, height: u32, t_end: Micros) -> Self {
        Self {
            t_end,
            width,
            height,
            channels: vec![0.0; CHANNELS * width as usize * height as usize],
        }
    }

    /// Copies the grayscale image into both RGB triplets.
    pub fn from_gray(gray: &GrayscaleFrame, t_end: Micros) -> Self {
        let plane = gray.pixels.len();
        let mut channels = Vec::with_capacity(CHANNELS * plane);
        for _ in 0..CHANNELS {
            channels.extend_from_slice(&gray.pixels);
        }
        Self {
            t_end,
            width: gray.width,
            height: gray.height,
            channels,
        }
    }

    pub fn plane_len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn get(&self, c: usize, x: u32, y: u32) -> f32 {
        self.channels[c * self.plane_len() + y as usize * self.width as usize + x as usize]
    }

    /// The six values at one pixel.
    pub fn pixel(&self, x: u32, y: u32) -> [f32; CHANNELS] {
        std::array::from_fn(|c| self.get(c, x, y))
    }

    fn set_rgb(&mut self, first_channel: usize, x: u32, y: u32, rgb: [f64; 3]) {
        let plane = self.plane_len();
        let offset = y as usize * self.width as usize + x as usize;
        for (k, v) in rgb.into_iter().enumerate() {
            self.channels[(first_channel + k) * plane + offset] = v as f32;
        }
    }
}

/// Colour triple for a normalized timestamp:
/// `r = e^{-at}`, `b = e^{a(t-1)}`, `g = r + b - e^{-a}`.
pub fn eta_color(t_norm: f64, code: ColorCode) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&t_norm) {
        return Err(Error::Domain(format!("normalized time {t_norm} outside [0, 1]")));
    }
    let a = code.alpha;
    let r = (-a * t_norm).exp();
    let b = (a * (t_norm - 1.0)).exp();
    let g = r + b - (-a).exp();
    Ok([r, g, b])
}

/// Paints one bin of events onto `canvas` in time order, later events
/// overwriting earlier ones at the same pixel and polarity.
pub fn encode_bin_into(canvas: &mut EncodedFrame, events: &EventStream, code: ColorCode) -> Result<()> {
    if events.is_empty() {
        return Ok(());
    }
    let geo = events.geometry();
    if geo.width != canvas.width || geo.height != canvas.height {
        return Err(Error::Shape(format!(
            "events on {}x{} sensor, canvas is {}x{}",
            geo.width, geo.height, canvas.width, canvas.height
        )));
    }
    let times = normalize_timestamps(&events.timestamps())?;
    for (e, t) in events.events().iter().zip(times) {
        if !geo.contains(u32::from(e.x), u32::from(e.y)) {
            return Err(Error::Domain(format!("event at ({}, {}) outside sensor", e.x, e.y)));
        }
        let first = if e.p == ON { 3 } else { 0 };
        canvas.set_rgb(first, u32::from(e.x), u32::from(e.y), eta_color(t, code)?);
    }
    Ok(())
}

/// [`encode_bin_into`] on an owned base frame.
pub fn encode_bin(events: &EventStream, mut base: EncodedFrame, code: ColorCode) -> Result<EncodedFrame> {
    encode_bin_into(&mut base, events, code)?;
    Ok(base)
}

/// Index of the guide frame closest in time to `t`; the earlier frame wins ties.
pub fn nearest_gray(frames: &[GrayscaleFrame], t: Micros) -> Result<usize> {
    if frames.is_empty() {
        return Err(Error::EmptyInput("nearest_gray".into()));
    }
    let mut best = 0;
    let mut best_d = u64::MAX;
    for (i, f) in frames.iter().enumerate() {
        let d = f.t.abs_diff(t);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    Ok(best)
}

/// Encoded frames paired index-to-index with ground-truth centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSequence {
    pub frames: Vec<Arc<EncodedFrame>>,
    pub centroids: CentroidTrack,
    /// Number of events that fell in each bin.
    pub bin_event_counts: Vec<usize>,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Bin layout for a set of guide frames.
///
/// Bins of width `bin` tile the guide span contiguously from the first
/// guide frame, so bin `n` ends at `t0 + (n + 1) * bin`. Each guide frame
/// starts a period at the first bin beginning at or after its timestamp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinLayout {
    pub t0: Micros,
    pub bin: Micros,
    pub bins: usize,
    /// `(first bin, guide frame index)` of every period, in order.
    pub resets: Vec<(usize, usize)>,
}

impl BinLayout {
    pub fn new(gray: &[GrayscaleFrame], bin: Micros) -> Result<Self> {
        let (first, last) = match gray {
            [first, .., last] => (first.t, last.t),
            _ => {
                return Err(Error::Alignment {
                    what: "grayscale frames".into(),
                    have: gray.len(),
                    need: 2,
                })
            }
        };
        if bin == 0 {
            return Err(Error::Config("bin width must be positive".into()));
        }
        if gray.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::Config("guide frame timestamps must be strictly increasing".into()));
        }
        let bins = ((last - first) / bin) as usize;
        if bins == 0 {
            return Err(Error::Config(format!(
                "bin of {bin} us is longer than the guide-frame span of {} us",
                last - first
            )));
        }
        let mut resets: Vec<(usize, usize)> = Vec::new();
        for (j, g) in gray.iter().enumerate() {
            let n = (g.t - first).div_ceil(bin) as usize;
            if n >= bins {
                break;
            }
            match resets.last_mut() {
                // Several guide frames before one bin start: keep the latest.
                Some(last) if last.0 == n => last.1 = j,
                _ => resets.push((n, j)),
            }
        }
        Ok(Self { t0: first, bin, bins, resets })
    }

    pub fn total_bins(&self) -> usize {
        self.bins
    }

    /// `[start, end)` of bin `n`.
    pub fn bin_range(&self, n: usize) -> (Micros, Micros) {
        let start = self.t0 + n as u64 * self.bin;
        (start, start + self.bin)
    }

    /// Guide frame index whose period contains bin `n`.
    pub fn period_of(&self, n: usize) -> usize {
        let k = self.resets.partition_point(|&(first, _)| first <= n);
        self.resets[k.saturating_sub(1)].1
    }
}

/// Fuses events with guide frames into one encoded frame per bin.
///
/// At the first bin of each period the canvas restarts from that period's
/// guide frame, replicated into both triplets, and the bin's events are
/// taken from the guide timestamp onwards so no motion after the guide is
/// lost. Every slice holding more than one event is painted onto the
/// running canvas, and a snapshot is emitted after each bin together with
/// the ground-truth centroid at the bin end.
pub fn fuse_sequence(
    events: &EventStream,
    gray: &[GrayscaleFrame],
    truth: &CentroidTrack,
    cfg: &EncodingConfig,
) -> Result<EncodedSequence> {
    let layout = BinLayout::new(gray, cfg.bin)?;
    if truth.period != cfg.bin {
        return Err(Error::Config(format!(
            "truth period {} us differs from bin width {} us",
            truth.period, cfg.bin
        )));
    }
    let total = layout.total_bins();
    // Truth sample `k` is taken at the end of bin `k - offset`.
    let offset = truth.samples.partition_point(|c| c.t < layout.t0 + cfg.bin);
    let usable = truth.len() - offset;
    if usable < total {
        return Err(Error::Alignment {
            what: "truth track".into(),
            have: usable,
            need: total,
        });
    }
    let geo = events.geometry();
    if let Some(g) = gray.iter().find(|g| g.width != geo.width || g.height != geo.height) {
        return Err(Error::Shape(format!(
            "guide frame at t = {} is {}x{}, sensor is {}x{}",
            g.t, g.width, g.height, geo.width, geo.height
        )));
    }

    let slice = |start, end| match cfg.slice_mode {
        SliceMode::HalfOpen => slice_by_time(events, start, end),
        SliceMode::NearestIndex => slice_nearest(events, start, end),
    };
    let mut frames = Vec::with_capacity(total);
    let mut counts = Vec::with_capacity(total);
    let mut resets = layout.resets.iter().peekable();
    let mut canvas = EncodedFrame::blank(geo.width, geo.height, 0);
    for n in 0..total {
        let (start, end) = layout.bin_range(n);
        let mut from = start;
        if let Some(&(_, j)) = resets.next_if(|r| r.0 == n) {
            canvas = EncodedFrame::from_gray(&gray[j], 0);
            from = gray[j].t;
        }
        let painted = slice(from, end);
        if painted.len() > 1 {
            encode_bin_into(&mut canvas, &painted, cfg.color)?;
        }
        counts.push(if from == start { painted.len() } else { slice(start, end).len() });
        canvas.t_end = end;
        frames.push(Arc::new(canvas.clone()));
    }
    let centroids = CentroidTrack {
        period: truth.period,
        bounds: truth.bounds,
        samples: truth.samples[offset..offset + total].to_vec(),
    };
    Ok(EncodedSequence {
        frames,
        centroids,
        bin_event_counts: counts,
    })
}

/// Two consecutive encoded frames and their centroids, normalized by the
/// sensor size.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub frame_a: Arc<EncodedFrame>,
    pub frame_b: Arc<EncodedFrame>,
    /// `(C_i, C_{i+1})` with coordinates divided by width and height.
    pub target: [Point2; 2],
    /// Indices of the two frames in their sequence.
    pub source: (usize, usize),
}

impl SamplePair {
    pub fn width(&self) -> u32 {
        self.frame_a.width
    }

    pub fn height(&self) -> u32 {
        self.frame_a.height
    }
}

pub fn normalize_point(p: Point2, width: u32, height: u32) -> Point2 {
    Point2::new(p.x / f64::from(width), p.y / f64::from(height))
}

pub fn denormalize_point(p: Point2, width: u32, height: u32) -> Point2 {
    Point2::new(p.x * f64::from(width), p.y * f64::from(height))
}

/// Sliding window of width 2, stride 1 over the sequence.
pub fn make_sample_pairs(seq: &EncodedSequence) -> Result<Vec<SamplePair>> {
    if seq.len() < 2 {
        return Err(Error::Alignment {
            what: "encoded sequence".into(),
            have: seq.len(),
            need: 2,
        });
    }
    if seq.centroids.len() < seq.len() {
        return Err(Error::Alignment {
            what: "sequence centroids".into(),
            have: seq.centroids.len(),
            need: seq.len(),
        });
    }
    let (w, h) = (seq.frames[0].width, seq.frames[0].height);
    Ok((0..seq.len() - 1)
        .map(|i| SamplePair {
            frame_a: Arc::clone(&seq.frames[i]),
            frame_b: Arc::clone(&seq.frames[i + 1]),
            target: [
                normalize_point(seq.centroids.samples[i].point(), w, h),
                normalize_point(seq.centroids.samples[i + 1].point(), w, h),
            ],
            source: (i, i + 1),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{CentroidSample, Event, Rect, SensorGeometry};
    use proptest::prelude::*;

    const FIVE: ColorCode = ColorCode { alpha: 5.0 };

    fn geo() -> SensorGeometry {
        SensorGeometry::new(8, 8).unwrap()
    }

    #[test]
    fn eta_endpoints_and_midpoint() {
        let e5 = (-5.0f64).exp();
        let [r, g, b] = eta_color(0.0, FIVE).unwrap();
        assert_eq!(r, 1.0);
        assert!((g - 1.0).abs() < 1e-12);
        assert!((b - e5).abs() < 1e-15);
        let [r, g, b] = eta_color(1.0, FIVE).unwrap();
        assert!((r - e5).abs() < 1e-15);
        assert_eq!(b, 1.0);
        assert!((g - 1.0).abs() < 1e-12);
        let [r, g, b] = eta_color(0.5, FIVE).unwrap();
        assert!((r - 0.082085).abs() < 1e-6 && (b - 0.082085).abs() < 1e-6);
        assert!((g - 0.157432).abs() < 1e-6);
        assert!(eta_color(1.01, FIVE).is_err());
        assert!(eta_color(-0.01, FIVE).is_err());
    }

    #[test]
    fn eta_ramps_are_monotone() {
        let grid: Vec<[f64; 3]> = (0..=1000).map(|i| eta_color(i as f64 / 1000.0, FIVE).unwrap()).collect();
        assert!(grid.windows(2).all(|w| w[1][0] < w[0][0] && w[1][2] > w[0][2]));
        assert!(grid.iter().flatten().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn encode_empty_is_identity() {
        let mut base = EncodedFrame::blank(8, 8, 7);
        base.channels.iter_mut().enumerate().for_each(|(i, v)| *v = (i % 10) as f32 / 10.0);
        let out = encode_bin(&EventStream::empty(geo()), base.clone(), FIVE).unwrap();
        assert_eq!(out, base);
    }

    #[test]
    fn encode_single_on_event() {
        let s = EventStream::new(geo(), vec![Event::new(3, 4, 100, 1)]).unwrap();
        let out = encode_bin(&s, EncodedFrame::blank(8, 8, 0), FIVE).unwrap();
        let want = eta_color(0.0, FIVE).unwrap();
        let px = out.pixel(3, 4);
        for k in 0..3 {
            assert_eq!(px[k], 0.0);
            assert_eq!(px[3 + k], want[k] as f32);
        }
    }

    #[test]
    fn encode_last_write_wins() {
        let s = EventStream::new(geo(), vec![Event::new(2, 2, 10, 0), Event::new(2, 2, 20, 0)]).unwrap();
        let out = encode_bin(&s, EncodedFrame::blank(8, 8, 0), FIVE).unwrap();
        let want = eta_color(1.0, FIVE).unwrap();
        assert_eq!(&out.pixel(2, 2)[..3], &want.map(|v| v as f32));
    }

    #[test]
    fn encode_rejects_geometry_mismatch() {
        let s = EventStream::new(geo(), vec![Event::new(0, 0, 0, 0)]).unwrap();
        assert!(encode_bin(&s, EncodedFrame::blank(9, 8, 0), FIVE).is_err());
    }

    fn linear_scan_nearest(ts: &[Micros], t: Micros) -> usize {
        let d: Vec<u64> = ts.iter().map(|&x| x.abs_diff(t)).collect();
        let m = *d.iter().min().unwrap();
        d.iter().position(|&v| v == m).unwrap()
    }

    fn grays(ts: &[Micros]) -> Vec<GrayscaleFrame> {
        ts.iter().map(|&t| GrayscaleFrame::new(t, 8, 8, vec![0.5; 64]).unwrap()).collect()
    }

    #[test]
    fn nearest_gray_examples() {
        let f = grays(&[0, 500_000]);
        assert_eq!(nearest_gray(&f, 120_000).unwrap(), 0);
        assert_eq!(nearest_gray(&f, 400_000).unwrap(), 1);
        assert_eq!(nearest_gray(&f, 250_000).unwrap(), 0);
        assert_eq!(linear_scan_nearest(&[0, 500_000], 250_000), 0);
        assert!(nearest_gray(&[], 0).is_err());
    }

    fn flat_truth(n: usize, period: Micros) -> CentroidTrack {
        let samples = (0..n)
            .map(|i| CentroidSample {
                t: (i as u64 + 1) * period,
                cx: 4.0,
                cy: 4.0,
            })
            .collect();
        CentroidTrack::new(period, Rect::new(0.0, 0.0, 7.0, 7.0), samples).unwrap()
    }

    #[test]
    fn fuse_counts_and_alignment_error() {
        let gray = grays(&[0, 500_000, 1_000_000]);
        let cfg = EncodingConfig::default();
        let seq = fuse_sequence(&EventStream::empty(geo()), &gray, &flat_truth(30, 33_000), &cfg).unwrap();
        // floor(1_000_000 / 33_000) = 30 bins over the guide span
        assert_eq!(seq.len(), 30);
        assert_eq!(seq.centroids.len(), 30);
        assert!(seq.frames.iter().all(|f| f.channels.iter().all(|&v| v == 0.5)));

        match fuse_sequence(&EventStream::empty(geo()), &gray, &flat_truth(29, 33_000), &cfg) {
            Err(Error::Alignment { have, need, .. }) => assert_eq!((have, need), (29, 30)),
            other => panic!("expected alignment error, got {other:?}"),
        }
        assert!(fuse_sequence(&EventStream::empty(geo()), &gray, &flat_truth(30, 10_000), &cfg).is_err());
    }

    #[test]
    fn fuse_accumulates_within_period_and_resets_after() {
        let gray = grays(&[0, 500_000, 1_000_000]);
        let layout = BinLayout::new(&gray, 33_000).unwrap();
        // ceil(500_000 / 33_000) = 16: the second period starts at 528 ms.
        assert_eq!(layout.resets, vec![(0, 0), (16, 1)]);
        assert_eq!((layout.period_of(15), layout.period_of(16)), (0, 1));
        let events = EventStream::new(
            geo(),
            vec![
                Event::new(1, 1, 1_000, 1),
                Event::new(2, 1, 5_000, 0),
                Event::new(5, 5, 495_000, 1),
                Event::new(5, 5, 497_000, 1),
                Event::new(6, 6, 510_000, 1),
                Event::new(6, 6, 512_000, 1),
            ],
        )
        .unwrap();
        let seq = fuse_sequence(&events, &gray, &flat_truth(30, 33_000), &EncodingConfig::default()).unwrap();
        for k in 1..15 {
            assert_eq!(seq.frames[k].channels, seq.frames[0].channels);
            assert_eq!(seq.frames[k].t_end, (k as u64 + 1) * 33_000);
        }
        assert_ne!(seq.frames[0].get(3, 1, 1), 0.5);
        assert_ne!(seq.frames[15].get(3, 5, 5), 0.5);
        assert_eq!(seq.frames[15].get(3, 1, 1), seq.frames[0].get(3, 1, 1));
        // Fresh canvas: only events after the 500 ms guide frame survive.
        let reset = &seq.frames[16];
        assert_eq!(reset.get(3, 1, 1), 0.5);
        assert_eq!(reset.get(3, 5, 5), 0.5);
        assert_ne!(reset.get(3, 6, 6), 0.5);
        assert_eq!(seq.bin_event_counts[0], 2);
        assert_eq!(seq.bin_event_counts[15], 4);
        assert_eq!(seq.bin_event_counts[16], 0);
        assert_eq!(seq.bin_event_counts.iter().sum::<usize>(), events.len());
    }

    #[test]
    fn fuse_skips_single_event_bins() {
        let gray = grays(&[0, 500_000, 1_000_000]);
        let events = EventStream::new(geo(), vec![Event::new(1, 1, 1_000, 1)]).unwrap();
        let seq = fuse_sequence(&events, &gray, &flat_truth(30, 33_000), &EncodingConfig::default()).unwrap();
        assert!(seq.frames[0].channels.iter().all(|&v| v == 0.5));
        assert_eq!(seq.bin_event_counts[0], 1);
    }

    #[test]
    fn pairs_window() {
        let gray = grays(&[0, 500_000, 1_000_000]);
        let seq = fuse_sequence(&EventStream::empty(geo()), &gray, &flat_truth(30, 33_000), &EncodingConfig::default()).unwrap();
        let pairs = make_sample_pairs(&seq).unwrap();
        assert_eq!(pairs.len(), 29);
        assert_eq!(pairs[0].target[0], normalize_point(seq.centroids.samples[0].point(), 8, 8));
        assert_eq!(pairs[0].target[1], normalize_point(seq.centroids.samples[1].point(), 8, 8));
        assert_eq!(pairs[3].source, (3, 4));

        let two = EncodedSequence {
            frames: seq.frames[..2].to_vec(),
            centroids: seq.centroids.clone(),
            bin_event_counts: vec![0, 0],
        };
        assert_eq!(make_sample_pairs(&two).unwrap().len(), 1);
        let one = EncodedSequence {
            frames: seq.frames[..1].to_vec(),
            ..two
        };
        assert!(make_sample_pairs(&one).is_err());
    }

    proptest! {
        #[test]
        fn distinct_pixel_order_does_not_matter(perm in Just((0..16usize).collect::<Vec<_>>()).prop_shuffle()) {
            // timestamps repeat, so the stable sort keeps the shuffled order within each tie
            let events: Vec<Event> = (0..16u16)
                .map(|i| Event::new(i % 8, i / 8, u64::from(i % 3) * 10, (i % 2) as u8))
                .collect();
            let shuffled: Vec<Event> = perm.iter().map(|&k| events[k]).collect();
            let a = encode_bin(&EventStream::new(geo(), events).unwrap(), EncodedFrame::blank(8, 8, 0), FIVE).unwrap();
            let b = encode_bin(&EventStream::new(geo(), shuffled).unwrap(), EncodedFrame::blank(8, 8, 0), FIVE).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn eta_in_unit_interval(t in 0.0f64..=1.0, alpha in 0.1f64..20.0) {
            let c = eta_color(t, ColorCode::new(alpha).unwrap()).unwrap();
            prop_assert!(c.iter().all(|&v| v > 0.0 && v <= 1.0 + 1e-12));
        }
    }
}
