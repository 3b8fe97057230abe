//! PPM visualizations: encoded-frame previews, trajectory and prediction overlays.

use std::path::Path;

use crate::dataset::{quantize, write_ppm};
use crate::encoder::EncodedFrame;
use crate::error::Result;
use crate::events::{GazeVector, GrayscaleFrame, Point2};

pub const BLUE: [u8; 3] = [0, 0, 255];
pub const RED: [u8; 3] = [255, 0, 0];
pub const GREEN: [u8; 3] = [0, 255, 0];

/// Interleaved 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; 3 * width as usize * height as usize],
        }
    }

    pub fn from_gray(frame: &GrayscaleFrame) -> Self {
        let data = frame.pixels.iter().flat_map(|&v| [quantize(v); 3]).collect();
        Self {
            width: frame.width,
            height: frame.height,
            data,
        }
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        3 * (y as usize * self.width as usize + x as usize)
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let o = self.offset(x, y);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let o = self.offset(x, y);
        self.data[o..o + 3].copy_from_slice(&rgb);
    }

    /// Sets the pixel nearest to `p` if it is inside the image.
    pub fn plot(&mut self, p: Point2, rgb: [u8; 3]) {
        if let Some((x, y)) = self.pixel_of(p) {
            self.set(x, y, rgb);
        }
    }

    fn pixel_of(&self, p: Point2) -> Option<(u32, u32)> {
        let (x, y) = (p.x.round(), p.y.round());
        (x >= 0.0 && y >= 0.0 && x < f64::from(self.width) && y < f64::from(self.height)).then_some((x as u32, y as u32))
    }

    /// Draws segment `a`–`b`; `color(s)` gives the colour at parameter `s ∈ [0, 1]`.
    pub fn line_with(&mut self, a: Point2, b: Point2, mut color: impl FnMut(f64) -> [u8; 3]) {
        let pts = line_points(a, b);
        let n = pts.len().saturating_sub(1).max(1) as f64;
        for (i, p) in pts.into_iter().enumerate() {
            self.plot(p, color(i as f64 / n));
        }
    }

    pub fn line(&mut self, a: Point2, b: Point2, rgb: [u8; 3]) {
        self.line_with(a, b, |_| rgb);
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_ppm(path, self.width, self.height, &self.data)
    }
}

/// Sample points of a segment, one per pixel step along its major axis.
pub fn line_points(a: Point2, b: Point2) -> Vec<Point2> {
    let d = b.sub(a);
    let steps = d.x.abs().max(d.y.abs()).ceil().max(0.0) as usize;
    if steps == 0 {
        return vec![a];
    }
    (0..=steps).map(|i| a.lerp(b, i as f64 / steps as f64)).collect()
}

/// Polarity-0 RGB on the left, polarity-1 RGB on the right.
pub fn preview_frame(frame: &EncodedFrame) -> RgbImage {
    let (w, h) = (frame.width, frame.height);
    let mut img = RgbImage::new(2 * w, h);
    for y in 0..h {
        for x in 0..w {
            let px = frame.pixel(x, y);
            img.set(x, y, [quantize(px[0]), quantize(px[1]), quantize(px[2])]);
            img.set(w + x, y, [quantize(px[3]), quantize(px[4]), quantize(px[5])]);
        }
    }
    img
}

/// Linear blend from blue at `s = 0` to red at `s = 1`.
pub fn time_color(s: f64) -> [u8; 3] {
    let s = s.clamp(0.0, 1.0);
    let mix = |a: u8, b: u8| (f64::from(a) + s * (f64::from(b) - f64::from(a))).round() as u8;
    [mix(BLUE[0], RED[0]), mix(BLUE[1], RED[1]), mix(BLUE[2], RED[2])]
}

/// Path through `points` in pixel coordinates, coloured by sample order from
/// blue (first) to red (last), over `base`.
pub fn trajectory_overlay(base: RgbImage, points: &[Point2]) -> RgbImage {
    let mut img = base;
    let n = points.len();
    if n == 0 {
        return img;
    }
    let span = (n - 1).max(1) as f64;
    for (i, w) in points.windows(2).enumerate() {
        img.line_with(w[0], w[1], |s| time_color((i as f64 + s) / span));
    }
    for (i, &p) in points.iter().enumerate() {
        img.plot(p, time_color(i as f64 / span));
    }
    img
}

/// Target vector in green and predicted vector in red (drawn last) over `base`.
pub fn prediction_overlay(base: RgbImage, target: &GazeVector, predicted: &GazeVector) -> RgbImage {
    let mut img = base;
    img.line(target.start, target.end, GREEN);
    img.line(predicted.start, predicted.end, RED);
    img
}

/// Mean of the six channels as a grey backdrop.
pub fn frame_backdrop(frame: &EncodedFrame) -> RgbImage {
    let mut img = RgbImage::new(frame.width, frame.height);
    for y in 0..frame.height {
        for x in 0..frame.width {
            let v = quantize(frame.pixel(x, y).iter().sum::<f32>() / 6.0);
            img.set(x, y, [v; 3]);
        }
    }
    img
}
