//! Pixel-radius accuracy of predicted gaze vectors.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::denormalize_point;
use crate::error::{Error, Result};
use crate::events::{GazeVector, Point2, SensorGeometry};
use crate::model::loss::FIXATION_EPS;

/// Radii of the default accuracy table, in pixels.
pub const DEFAULT_RADII: [f64; 5] = [100.0, 90.0, 75.0, 50.0, 25.0];

/// Target and predicted gaze vectors in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub target: GazeVector,
    pub predicted: GazeVector,
}

impl Trial {
    pub fn new(target: GazeVector, predicted: GazeVector) -> Result<Self> {
        if !target.is_finite() || !predicted.is_finite() {
            return Err(Error::NonFinite("trial coordinates".into()));
        }
        Ok(Self { target, predicted })
    }

    /// Builds a trial from normalized `[start, end]` pairs.
    pub fn from_normalized(target: [Point2; 2], predicted: [Point2; 2], geometry: SensorGeometry) -> Result<Self> {
        let px = |p: [Point2; 2]| {
            GazeVector::new(
                denormalize_point(p[0], geometry.width, geometry.height),
                denormalize_point(p[1], geometry.width, geometry.height),
            )
        };
        Self::new(px(target), px(predicted))
    }
}

/// Where the success circles are centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircleCenter {
    /// One circle per target endpoint.
    #[default]
    Endpoints,
    /// A single circle at the target midpoint.
    Midpoint,
}

/// Both predicted endpoints lie within `radius` of their target endpoints
/// (boundary inclusive). In midpoint mode the predicted midpoint must lie
/// within `radius` of the target midpoint.
pub fn strat1_success_with(trial: &Trial, radius: f64, center: CircleCenter) -> bool {
    let (t, p) = (&trial.target, &trial.predicted);
    match center {
        CircleCenter::Endpoints => p.start.dist(t.start) <= radius && p.end.dist(t.end) <= radius,
        CircleCenter::Midpoint => p.midpoint().dist(t.midpoint()) <= radius,
    }
}

pub fn strat1_success(trial: &Trial, radius: f64) -> bool {
    strat1_success_with(trial, radius, CircleCenter::Endpoints)
}

/// Distance from `c` to the closest point of segment `a`–`b`.
pub fn segment_point_distance(a: Point2, b: Point2, c: Point2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return a.dist(c);
    }
    let s = (c.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    a.lerp(b, s).dist(c)
}

/// The predicted segment touches the closed disk of `radius` around either
/// target endpoint (or the target midpoint in midpoint mode).
pub fn strat2_success_with(trial: &Trial, radius: f64, center: CircleCenter) -> bool {
    let p = &trial.predicted;
    let hits = |c: Point2| segment_point_distance(p.start, p.end, c) <= radius;
    match center {
        CircleCenter::Endpoints => hits(trial.target.start) || hits(trial.target.end),
        CircleCenter::Midpoint => hits(trial.target.midpoint()),
    }
}

pub fn strat2_success(trial: &Trial, radius: f64) -> bool {
    strat2_success_with(trial, radius, CircleCenter::Endpoints)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub radius: f64,
    /// Percent of trials passing strategy 1.
    pub strat1: f64,
    /// Percent of trials passing strategy 2.
    pub strat2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub rows: Vec<AccuracyRow>,
    pub trials: usize,
}

fn percent(hits: usize, n: usize) -> f64 {
    100.0 * hits as f64 / n as f64
}

pub fn accuracy_table_with(trials: &[Trial], radii: &[f64], center: CircleCenter) -> Result<AccuracyTable> {
    if trials.is_empty() {
        return Err(Error::EmptyInput("accuracy table needs at least one trial".into()));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::Config(format!("radius must be positive and finite, got {r}")));
    }
    let rows = radii
        .iter()
        .map(|&radius| {
            let s1 = trials.iter().filter(|t| strat1_success_with(t, radius, center)).count();
            let s2 = trials.iter().filter(|t| strat2_success_with(t, radius, center)).count();
            AccuracyRow {
                radius,
                strat1: percent(s1, trials.len()),
                strat2: percent(s2, trials.len()),
            }
        })
        .collect();
    Ok(AccuracyTable {
        rows,
        trials: trials.len(),
    })
}

pub fn accuracy_table(trials: &[Trial], radii: &[f64]) -> Result<AccuracyTable> {
    accuracy_table_with(trials, radii, CircleCenter::Endpoints)
}

impl AccuracyTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("radius,strat1_acc,strat2_acc\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.2},{:.2}\n", r.radius, r.strat1, r.strat2));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(self.to_csv().as_bytes()))
            .map_err(|e| Error::io(path, e))
    }

    /// Row for `radius`, if the table has one.
    pub fn row(&self, radius: f64) -> Option<&AccuracyRow> {
        self.rows.iter().find(|r| r.radius == radius)
    }
}

impl fmt::Display for AccuracyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>12} | {:>12} | {:>12}", "Radius (px)", "Strategy 1", "Strategy 2")?;
        writeln!(f, "{:-<12}-+-{:-<12}-+-{:-<12}", "", "", "")?;
        for r in &self.rows {
            writeln!(f, "{:>12} | {:>11.2}% | {:>11.2}%", r.radius, r.strat1, r.strat2)?;
        }
        Ok(())
    }
}

/// Angle statistics over the non-fixation trials, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularStats {
    /// `None` when every trial was a fixation.
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
    pub counted: usize,
    pub fixations: usize,
}

/// Angle between unit target and predicted directions. Trials whose target
/// direction is shorter than [`FIXATION_EPS`] are counted as fixations and
/// skipped; a degenerate predicted direction scores π/2.
pub fn angular_error_stats(trials: &[Trial]) -> Result<AngularStats> {
    if trials.is_empty() {
        return Err(Error::EmptyInput("angular statistics need at least one trial".into()));
    }
    let mut angles = Vec::with_capacity(trials.len());
    let mut fixations = 0;
    for t in trials {
        let dt = t.target.direction();
        let dp = t.predicted.direction();
        let (nt, np) = (dt.norm(), dp.norm());
        if nt < FIXATION_EPS {
            fixations += 1;
            continue;
        }
        let angle = if np < FIXATION_EPS {
            std::f64::consts::FRAC_PI_2
        } else {
            (dt.dot(dp) / (nt * np)).clamp(-1.0, 1.0).acos()
        };
        angles.push(angle);
    }
    if angles.is_empty() {
        return Ok(AngularStats {
            mean: None,
            median: None,
            max: None,
            counted: 0,
            fixations,
        });
    }
    angles.sort_by(f64::total_cmp);
    let n = angles.len();
    let median = if n % 2 == 1 {
        angles[n / 2]
    } else {
        0.5 * (angles[n / 2 - 1] + angles[n / 2])
    };
    Ok(AngularStats {
        mean: Some(angles.iter().sum::<f64>() / n as f64),
        median: Some(median),
        max: angles.last().copied(),
        counted: n,
        fixations,
    })
}

impl fmt::Display for AngularStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.mean, self.median, self.max) {
            (Some(mean), Some(median), Some(max)) => write!(
                f,
                "angular error over {} trials ({} fixations skipped): mean {:.4} rad, median {:.4} rad, max {:.4} rad",
                self.counted, self.fixations, mean, median, max
            ),
            _ => write!(f, "angular error undefined: all {} trials are fixations", self.fixations),
        }
    }
}

/// Parses `100,90,75` style radius lists.
pub fn parse_radii(s: &str) -> Result<Vec<f64>> {
    let radii = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|r| *r > 0.0 && r.is_finite())
                .ok_or_else(|| Error::Config(format!("invalid radius {p:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if radii.is_empty() {
        return Err(Error::Config("no radii given".into()));
    }
    Ok(radii)
}
