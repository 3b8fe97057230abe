//! On-disk formats for every pipeline artifact.
//!
//! | artifact        | format                                              |
//! |-----------------|-----------------------------------------------------|
//! | events          | CSV, header `x,y,t,p`                               |
//! | guide frames    | binary PGM (P5, maxval 255) + `frames.csv` index    |
//! | ground truth    | CSV, header `t,cx,cy`                               |
//! | encoded frames  | `EVG6` binary + `encoded.csv` index                 |
//! | sample pairs    | CSV, header `index,frame_a,frame_b,cx0,cy0,cx1,cy1` |
//! | manifest        | JSON, root index of a dataset directory             |

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{EncodedFrame, EncodingConfig, SamplePair, CHANNELS};
use crate::error::{Error, Result};
use crate::events::{
    validate_stream, CentroidSample, CentroidTrack, Event, EventStream, GrayscaleFrame, Micros,
    Point2, Rect, SensorGeometry,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;
pub const ENCODED_MAGIC: &[u8; 4] = b"EVG6";
pub const ENCODED_VERSION: u32 = 1;
/// magic + version + width + height
pub const ENCODED_HEADER_LEN: usize = 16;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{kind:?}"),
        },
    }
}

fn csv_reader(path: &Path, header: &[&str]) -> Result<csv::Reader<BufReader<File>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(open(path)?);
    let found = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        });
    }
    Ok(rdr)
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    Ok(w)
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut rdr = csv_reader(path, header)?;
    rdr.deserialize().map(|r| r.map_err(|e| csv_error(path, e))).collect()
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv_writer(path, header)?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const EVENTS_HEADER: [&str; 4] = ["x", "y", "t", "p"];

pub fn write_events_csv(path: &Path, stream: &EventStream) -> Result<()> {
    write_rows(path, &EVENTS_HEADER, stream.events())
}

/// Reads events in file order. Out-of-bounds, polarity and ordering
/// problems are logged as warnings; inspect them with [`validate_stream`].
pub fn read_events_csv(path: &Path, geometry: SensorGeometry) -> Result<EventStream> {
    let events: Vec<Event> = read_rows(path, &EVENTS_HEADER)?;
    let stream = EventStream::from_raw(geometry, events);
    let violations = validate_stream(&stream);
    if let Some(first) = violations.first() {
        log::warn!("{}: {} invalid events, first: {first}", path.display(), violations.len());
    }
    Ok(stream)
}

const TRUTH_HEADER: [&str; 3] = ["t", "cx", "cy"];

pub fn write_truth_csv(path: &Path, track: &CentroidTrack) -> Result<()> {
    write_rows(path, &TRUTH_HEADER, &track.samples)
}

pub fn read_truth_csv(path: &Path, period: Micros, bounds: Rect) -> Result<CentroidTrack> {
    let samples: Vec<CentroidSample> = read_rows(path, &TRUTH_HEADER)?;
    CentroidTrack::new(period, bounds, samples)
}

/// Quantizes to `round(v * 255)`.
pub fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_pgm(path: &Path, frame: &GrayscaleFrame) -> Result<()> {
    let mut w = create(path)?;
    let bytes: Vec<u8> = frame.pixels.iter().map(|&v| quantize(v)).collect();
    write!(w, "P5\n{} {}\n255\n", frame.width, frame.height)
        .and_then(|_| w.write_all(&bytes))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Parses the whitespace/comment-separated header fields of a netpbm file.
fn pnm_header(path: &Path, data: &[u8], fields: usize) -> Result<(Vec<String>, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while out.len() < fields {
        while i < data.len() && (data[i].is_ascii_whitespace() || data[i] == b'#') {
            if data[i] == b'#' {
                while i < data.len() && data[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < data.len() && !data[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::Format {
                path: path.to_path_buf(),
                msg: "truncated header".into(),
            });
        }
        out.push(String::from_utf8_lossy(&data[start..i]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    Ok((out, i + 1))
}

pub fn read_pgm(path: &Path, t: Micros) -> Result<GrayscaleFrame> {
    let mut data = Vec::new();
    open(path)?.read_to_end(&mut data).map_err(|e| Error::io(path, e))?;
    let format_err = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };
    if !data.starts_with(b"P5") {
        return Err(format_err(format!(
            "expected P5 magic, found {:?}",
            String::from_utf8_lossy(&data[..data.len().min(2)])
        )));
    }
    let (fields, offset) = pnm_header(path, &data, 4)?;
    let num = |s: &str| s.parse::<u32>().map_err(|_| format_err(format!("bad header field `{s}`")));
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval != 255 {
        return Err(format_err(format!("unsupported maxval {maxval}")));
    }
    let n = width as usize * height as usize;
    let raster = data.get(offset..).unwrap_or(&[]);
    if raster.len() != n {
        return Err(format_err(format!("expected {n} raster bytes, found {}", raster.len())));
    }
    let pixels = raster.iter().map(|&b| f32::from(b) / 255.0).collect();
    GrayscaleFrame::new(t, width, height, pixels)
}

/// Binary PPM (P6) of interleaved RGB bytes.
pub fn write_ppm(path: &Path, width: u32, height: u32, rgb: &[u8]) -> Result<()> {
    if rgb.len() != 3 * width as usize * height as usize {
        return Err(Error::Shape(format!("{} RGB bytes for a {width}x{height} image", rgb.len())));
    }
    let mut w = create(path)?;
    write!(w, "P6\n{width} {height}\n255\n")
        .and_then(|_| w.write_all(rgb))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Reads a P6 file back as `(width, height, rgb)`.
pub fn read_ppm(path: &Path) -> Result<(u32, u32, Vec<u8>)> {
    let mut data = Vec::new();
    open(path)?.read_to_end(&mut data).map_err(|e| Error::io(path, e))?;
    if !data.starts_with(b"P6") {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: "expected P6 magic".into(),
        });
    }
    let (fields, offset) = pnm_header(path, &data, 4)?;
    let w: u32 = fields[1].parse().unwrap_or(0);
    let h: u32 = fields[2].parse().unwrap_or(0);
    let raster = data.get(offset..).unwrap_or(&[]).to_vec();
    if raster.len() != 3 * w as usize * h as usize {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("expected {} raster bytes, found {}", 3 * w as usize * h as usize, raster.len()),
        });
    }
    Ok((w, h, raster))
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameIndexRow {
    index: usize,
    t: Micros,
    filename: String,
}

const FRAME_INDEX_HEADER: [&str; 3] = ["index", "t", "filename"];

/// Writes `gray/frame_NNNNNN.pgm` files plus the `frames.csv` index under
/// `dir`, returning the index path relative to `dir`.
pub fn write_gray_frames(dir: &Path, frames: &[GrayscaleFrame]) -> Result<String> {
    let mut rows = Vec::with_capacity(frames.len());
    for (index, f) in frames.iter().enumerate() {
        let filename = format!("gray/frame_{index:06}.pgm");
        write_pgm(&dir.join(&filename), f)?;
        rows.push(FrameIndexRow {
            index,
            t: f.t,
            filename,
        });
    }
    write_rows(&dir.join("frames.csv"), &FRAME_INDEX_HEADER, rows)?;
    Ok("frames.csv".into())
}

pub fn read_gray_frames(index_path: &Path) -> Result<Vec<GrayscaleFrame>> {
    let base = index_path.parent().unwrap_or(Path::new("."));
    let rows: Vec<FrameIndexRow> = read_rows(index_path, &FRAME_INDEX_HEADER)?;
    rows.iter().map(|r| read_pgm(&base.join(&r.filename), r.t)).collect()
}

pub fn write_encoded(path: &Path, frame: &EncodedFrame) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    w.write_all(ENCODED_MAGIC).map_err(io)?;
    w.write_u32::<LittleEndian>(ENCODED_VERSION).map_err(io)?;
    w.write_u32::<LittleEndian>(frame.width).map_err(io)?;
    w.write_u32::<LittleEndian>(frame.height).map_err(io)?;
    w.write_u64::<LittleEndian>(frame.t_end).map_err(io)?;
    for &v in &frame.channels {
        w.write_f32::<LittleEndian>(v).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Total byte length of an `EVG6` file for the given frame size.
pub fn encoded_file_len(width: u32, height: u32) -> usize {
    ENCODED_HEADER_LEN + 8 + 4 * CHANNELS * width as usize * height as usize
}

pub fn read_encoded(path: &Path) -> Result<EncodedFrame> {
    let mut data = Vec::new();
    open(path)?.read_to_end(&mut data).map_err(|e| Error::io(path, e))?;
    let format_err = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };
    if data.len() < ENCODED_HEADER_LEN + 8 {
        return Err(format_err(format!(
            "truncated header: expected at least {} bytes, found {}",
            ENCODED_HEADER_LEN + 8,
            data.len()
        )));
    }
    if &data[..4] != ENCODED_MAGIC {
        return Err(format_err(format!("bad magic {:?}", &data[..4])));
    }
    let mut cur = &data[4..];
    let version = cur.read_u32::<LittleEndian>().expect("length checked");
    let width = cur.read_u32::<LittleEndian>().expect("length checked");
    let height = cur.read_u32::<LittleEndian>().expect("length checked");
    let t_end = cur.read_u64::<LittleEndian>().expect("length checked");
    if version != ENCODED_VERSION {
        return Err(format_err(format!("unsupported version {version}")));
    }
    let expected = encoded_file_len(width, height);
    if data.len() != expected {
        return Err(format_err(format!(
            "shape {width}x{height} needs {expected} bytes, file has {}",
            data.len()
        )));
    }
    let mut channels = vec![0.0f32; CHANNELS * width as usize * height as usize];
    cur.read_f32_into::<LittleEndian>(&mut channels).expect("length checked");
    Ok(EncodedFrame {
        t_end,
        width,
        height,
        channels,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct EncodedIndexRow {
    index: usize,
    t_end: Micros,
    filename: String,
}

const ENCODED_INDEX_HEADER: [&str; 3] = ["index", "t_end", "filename"];

/// Writes `encoded/frame_NNNNNN.evg6` files plus the `encoded.csv` index.
pub fn write_encoded_frames(dir: &Path, frames: &[Arc<EncodedFrame>]) -> Result<String> {
    let mut rows = Vec::with_capacity(frames.len());
    for (index, f) in frames.iter().enumerate() {
        let filename = format!("encoded/frame_{index:06}.evg6");
        write_encoded(&dir.join(&filename), f)?;
        rows.push(EncodedIndexRow {
            index,
            t_end: f.t_end,
            filename,
        });
    }
    write_rows(&dir.join("encoded.csv"), &ENCODED_INDEX_HEADER, rows)?;
    Ok("encoded.csv".into())
}

pub fn read_encoded_frames(index_path: &Path) -> Result<Vec<Arc<EncodedFrame>>> {
    let base = index_path.parent().unwrap_or(Path::new("."));
    let rows: Vec<EncodedIndexRow> = read_rows(index_path, &ENCODED_INDEX_HEADER)?;
    rows.iter()
        .map(|r| {
            let f = read_encoded(&base.join(&r.filename))?;
            if f.t_end != r.t_end {
                return Err(Error::Manifest(format!(
                    "{}: t_end {} disagrees with index value {}",
                    r.filename, f.t_end, r.t_end
                )));
            }
            Ok(Arc::new(f))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub index: usize,
    pub frame_a: usize,
    pub frame_b: usize,
    pub cx0: f64,
    pub cy0: f64,
    pub cx1: f64,
    pub cy1: f64,
}

const PAIRS_HEADER: [&str; 7] = ["index", "frame_a", "frame_b", "cx0", "cy0", "cx1", "cy1"];

pub fn write_pairs_csv(path: &Path, pairs: &[SamplePair]) -> Result<()> {
    let rows = pairs.iter().enumerate().map(|(index, p)| PairRow {
        index,
        frame_a: p.source.0,
        frame_b: p.source.1,
        cx0: p.target[0].x,
        cy0: p.target[0].y,
        cx1: p.target[1].x,
        cy1: p.target[1].y,
    });
    write_rows(path, &PAIRS_HEADER, rows)
}

/// Rebuilds sample pairs from the pairs index and the encoded frames it refers to.
pub fn read_pairs_csv(path: &Path, frames: &[Arc<EncodedFrame>]) -> Result<Vec<SamplePair>> {
    let rows: Vec<PairRow> = read_rows(path, &PAIRS_HEADER)?;
    rows.into_iter()
        .map(|r| {
            let get = |i: usize| {
                frames.get(i).cloned().ok_or_else(|| {
                    Error::Manifest(format!("pair {} refers to missing frame {i}", r.index))
                })
            };
            let (frame_a, frame_b) = (get(r.frame_a)?, get(r.frame_b)?);
            if frame_b.t_end <= frame_a.t_end {
                return Err(Error::Manifest(format!("pair {} frames are not in time order", r.index)));
            }
            let target = [Point2::new(r.cx0, r.cy0), Point2::new(r.cx1, r.cy1)];
            if target.iter().any(|p| !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y)) {
                return Err(Error::Manifest(format!("pair {} target outside [0, 1]", r.index)));
            }
            Ok(SamplePair {
                frame_a,
                frame_b,
                target,
                source: (r.frame_a, r.frame_b),
            })
        })
        .collect()
}

/// Deterministic shuffled split; `round(n * fraction)` items (at least one
/// on each side) go to the first set.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction {fraction} outside (0, 1)")));
    }
    if n < 2 {
        return Err(Error::Alignment {
            what: "items to split".into(),
            have: n,
            need: 2,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let test = idx.split_off(k);
    Ok((idx, test))
}

/// Splits `items` into `(train, test)`. Adjacent pairs share a frame, so
/// neighbours of a test pair may sit in the training set.
pub fn split<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let (a, b) = split_indices(items.len(), fraction, seed)?;
    Ok((
        a.into_iter().map(|i| items[i].clone()).collect(),
        b.into_iter().map(|i| items[i].clone()).collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub events: String,
    pub gray_index: String,
    pub truth: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoded_index: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub losses: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCounts {
    pub events: usize,
    pub gray_frames: usize,
    pub truth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoded_frames: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
}

/// Test-split parameters recorded by training so evaluation sees the same split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub fraction: f64,
    pub seed: u64,
}

/// Root index of a dataset directory. Paths are relative to the directory
/// holding `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub geometry: SensorGeometry,
    pub seed: u64,
    pub duration: Micros,
    pub fps: f64,
    pub truth_period: Micros,
    pub truth_bounds: Rect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding: Option<EncodingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitRecord>,
    pub files: ManifestFiles,
    pub counts: ManifestCounts,
}

fn count_csv_rows(path: &Path) -> Result<usize> {
    let reader = open(path)?;
    let mut n = 0usize;
    for line in reader.lines() {
        if !line.map_err(|e| Error::io(path, e))?.is_empty() {
            n += 1;
        }
    }
    Ok(n.saturating_sub(1))
}

impl Manifest {
    pub fn path(dir: &Path) -> PathBuf {
        dir.join(MANIFEST_FILE)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = Self::path(dir);
        let mut w = create(&path)?;
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))
    }

    /// Loads and verifies the manifest: every referenced file must exist
    /// and every recorded count must match the file it describes.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = Self::path(dir);
        let m: Manifest = serde_json::from_reader(open(&path)?)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Manifest(format!("unsupported manifest version {}", m.version)));
        }
        let mut checks: Vec<(&str, &String, Option<usize>)> = vec![
            ("events", &m.files.events, Some(m.counts.events)),
            ("gray frames", &m.files.gray_index, Some(m.counts.gray_frames)),
            ("truth", &m.files.truth, Some(m.counts.truth)),
        ];
        if let Some(f) = &m.files.encoded_index {
            checks.push(("encoded frames", f, m.counts.encoded_frames));
        }
        if let Some(f) = &m.files.pairs {
            checks.push(("pairs", f, m.counts.pairs));
        }
        for (what, rel, count) in checks {
            let p = dir.join(rel);
            if !p.is_file() {
                return Err(Error::Manifest(format!("{what} file {} is missing", p.display())));
            }
            let expected = count.ok_or_else(|| Error::Manifest(format!("no count recorded for {what}")))?;
            let found = count_csv_rows(&p)?;
            if found != expected {
                return Err(Error::Manifest(format!(
                    "{what}: manifest records {expected} rows, {} has {found}",
                    p.display()
                )));
            }
        }
        for rel in [&m.files.checkpoint, &m.files.losses].into_iter().flatten() {
            if !dir.join(rel).is_file() {
                return Err(Error::Manifest(format!("{} is missing", dir.join(rel).display())));
            }
        }
        Ok(m)
    }

    pub fn load_events(&self, dir: &Path) -> Result<EventStream> {
        read_events_csv(&dir.join(&self.files.events), self.geometry)
    }

    pub fn load_gray(&self, dir: &Path) -> Result<Vec<GrayscaleFrame>> {
        read_gray_frames(&dir.join(&self.files.gray_index))
    }

    pub fn load_truth(&self, dir: &Path) -> Result<CentroidTrack> {
        read_truth_csv(&dir.join(&self.files.truth), self.truth_period, self.truth_bounds)
    }

    pub fn load_pairs(&self, dir: &Path) -> Result<Vec<SamplePair>> {
        let (Some(enc), Some(pairs)) = (&self.files.encoded_index, &self.files.pairs) else {
            return Err(Error::Manifest("dataset has not been encoded".into()));
        };
        let frames = read_encoded_frames(&dir.join(enc))?;
        read_pairs_csv(&dir.join(pairs), &frames)
    }
}

/// Groups pairs by the identity of their frame allocations, so each encoded
/// frame is processed once. Returns per-pair `(a, b)` positions into the
/// returned frame list.
pub fn unique_frames(pairs: &[SamplePair]) -> (Vec<Arc<EncodedFrame>>, Vec<(usize, usize)>) {
    let mut seen: HashMap<*const EncodedFrame, usize> = HashMap::new();
    let mut frames = Vec::new();
    let mut slot = |f: &Arc<EncodedFrame>| {
        *seen.entry(Arc::as_ptr(f)).or_insert_with(|| {
            frames.push(Arc::clone(f));
            frames.len() - 1
        })
    };
    let idx = pairs
        .iter()
        .map(|p| (slot(&p.frame_a), slot(&p.frame_b)))
        .collect();
    (frames, idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tempfile::tempdir;

    fn geo() -> SensorGeometry {
        SensorGeometry::new(8, 8).unwrap()
    }

    #[test]
    fn events_csv_format() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("ev.csv");
        write_events_csv(&p, &EventStream::new(geo(), vec![Event::new(3, 4, 10, 1)]).unwrap()).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "x,y,t,p\n3,4,10,1\n");
        write_events_csv(&p, &EventStream::empty(geo())).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "x,y,t,p\n");
        assert!(read_events_csv(&p, geo()).unwrap().is_empty());
    }

    #[test]
    fn events_csv_parse_error_names_line() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("ev.csv");
        fs::write(&p, "x,y,t,p\n1,1,0,0\n1,oops,5,1\n").unwrap();
        match read_events_csv(&p, geo()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        fs::write(&p, "a,b,c,d\n").unwrap();
        assert!(matches!(read_events_csv(&p, geo()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn events_csv_keeps_unsorted_order() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("ev.csv");
        fs::write(&p, "x,y,t,p\n1,1,9,0\n1,1,5,1\n").unwrap();
        let s = read_events_csv(&p, geo()).unwrap();
        assert_eq!(s.timestamps(), vec![9, 5]);
        assert_eq!(validate_stream(&s).len(), 1);
    }

    #[test]
    fn pgm_bytes_and_quantization() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("f.pgm");
        write_pgm(&p, &GrayscaleFrame::new(0, 2, 2, vec![1.0; 4]).unwrap()).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[..11], b"P5\n2 2\n255\n");
        assert_eq!(&bytes[11..], &[255; 4]);
        assert_eq!(quantize(0.5), 128);

        let vals: Vec<f32> = (0..64).map(|i| i as f32 / 63.0).collect();
        write_pgm(&p, &GrayscaleFrame::new(42, 8, 8, vals.clone()).unwrap()).unwrap();
        let back = read_pgm(&p, 42).unwrap();
        assert_eq!(back.t, 42);
        for (a, b) in vals.iter().zip(&back.pixels) {
            assert!((a - b).abs() <= 1.0 / 510.0 + 1e-7);
        }
    }

    #[test]
    fn pgm_rejects_other_magic() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("f.pgm");
        fs::write(&p, b"P2\n2 2\n255\n0 0 0 0\n").unwrap();
        assert!(matches!(read_pgm(&p, 0), Err(Error::Format { .. })));
    }

    #[test]
    fn encoded_size_and_errors() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("f.evg6");
        write_encoded(&p, &EncodedFrame::blank(4, 4, 99)).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 16 + 8 + 384);
        assert_eq!(&bytes[..4], b"EVG6");
        assert_eq!(read_encoded(&p).unwrap(), EncodedFrame::blank(4, 4, 99));

        fs::write(&p, &bytes[..bytes.len() - 4]).unwrap();
        let msg = read_encoded(&p).unwrap_err().to_string();
        assert!(msg.contains("408") && msg.contains("404"), "{msg}");

        let mut bad = bytes.clone();
        bad[0] = b'X';
        fs::write(&p, &bad).unwrap();
        assert!(matches!(read_encoded(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn split_examples() {
        let items: Vec<usize> = (0..100).collect();
        let (a, b) = split(&items, 0.8, 7).unwrap();
        assert_eq!((a.len(), b.len()), (80, 20));
        assert_eq!(split(&items, 0.8, 7).unwrap(), (a.clone(), b.clone()));
        let mut all: Vec<usize> = a.into_iter().chain(b).collect();
        all.sort_unstable();
        assert_eq!(all, items);
        assert!(split(&[1], 0.5, 0).is_err());
        assert!(split(&items, 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn events_round_trip(raw in proptest::collection::vec((0u16..8, 0u16..8, 0u64..1_000_000, 0u8..2), 0..200)) {
            let dir = tempdir().unwrap();
            let p = dir.path().join("ev.csv");
            let s = EventStream::new(geo(), raw.into_iter().map(|(x, y, t, p)| Event::new(x, y, t, p)).collect()).unwrap();
            write_events_csv(&p, &s).unwrap();
            prop_assert_eq!(read_events_csv(&p, geo()).unwrap(), s);
        }

        #[test]
        fn encoded_round_trip_bit_exact(vals in proptest::collection::vec(0.0f32..=1.0, 6 * 9 * 8), t in any::<u64>()) {
            let dir = tempdir().unwrap();
            let p = dir.path().join("f.evg6");
            let f = EncodedFrame { t_end: t, width: 9, height: 8, channels: vals };
            write_encoded(&p, &f).unwrap();
            let back = read_encoded(&p).unwrap();
            prop_assert!(back.channels.iter().zip(&f.channels).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(back.t_end, t);
        }
    }
}
