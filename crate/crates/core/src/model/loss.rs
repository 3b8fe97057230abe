//! Centroid and gaze-angle losses with their analytic gradients.
//!
//! Gradients are returned w.r.t. the flattened prediction
//! `[P_i.x, P_i.y, P_{i+1}.x, P_{i+1}.y]`.

use serde::{Deserialize, Serialize};

use crate::events::Point2;

/// The cosine is clamped to `[-1 + ACOS_CLAMP, 1 - ACOS_CLAMP]`.
pub const ACOS_CLAMP: f64 = 1e-7;
/// Directions shorter than this count as fixations and contribute no angle.
pub const FIXATION_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    Centroid,
    CentroidTheta,
}

/// Per-point distance used by the centroid term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidMetric {
    /// `|dx| + |dy|`
    #[default]
    L1,
    /// `sqrt(dx² + dy²)`
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub mode: LossMode,
    /// Weight of the angle term in `centroid + weight * theta`.
    pub theta_weight: f64,
    #[serde(default)]
    pub metric: CentroidMetric,
}

impl LossConfig {
    pub fn new(mode: LossMode) -> Self {
        Self {
            mode,
            theta_weight: 1.0,
            metric: CentroidMetric::L1,
        }
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self::new(LossMode::CentroidTheta)
    }
}

/// Loss value split into its terms. `theta` is reported in both modes;
/// it only enters `total` in [`LossMode::CentroidTheta`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub centroid: f64,
    pub theta: f64,
}

impl LossBreakdown {
    pub fn accumulate(&mut self, other: &LossBreakdown, weight: f64) {
        self.total += weight * other.total;
        self.centroid += weight * other.centroid;
        self.theta += weight * other.theta;
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.centroid.is_finite() && self.theta.is_finite()
    }
}

fn point_distance(d: Point2, metric: CentroidMetric) -> (f64, [f64; 2]) {
    match metric {
        CentroidMetric::L1 => (d.x.abs() + d.y.abs(), [sign(d.x), sign(d.y)]),
        CentroidMetric::Euclidean => {
            let n = d.norm();
            if n == 0.0 {
                (0.0, [0.0, 0.0])
            } else {
                (n, [d.x / n, d.y / n])
            }
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `|P_i - C_i| + |P_{i+1} - C_{i+1}|` for one sample, with gradient.
pub fn centroid_term(target: &[Point2; 2], pred: &[Point2; 2], metric: CentroidMetric) -> (f64, [f64; 4]) {
    let (l0, g0) = point_distance(pred[0].sub(target[0]), metric);
    let (l1, g1) = point_distance(pred[1].sub(target[1]), metric);
    (l0 + l1, [g0[0], g0[1], g1[0], g1[1]])
}

/// Centroid L1 loss of one sample.
pub fn loss_centroid(target: &[Point2; 2], pred: &[Point2; 2]) -> f64 {
    centroid_term(target, pred, CentroidMetric::L1).0
}

/// Batch mean of [`loss_centroid`].
pub fn batch_loss_centroid(targets: &[[Point2; 2]], preds: &[[Point2; 2]]) -> f64 {
    let n = targets.len().min(preds.len());
    if n == 0 {
        return 0.0;
    }
    targets.iter().zip(preds).map(|(c, p)| loss_centroid(c, p)).sum::<f64>() / n as f64
}

/// Angle between the unit target and predicted directions, with gradient.
/// Fixations (either direction shorter than [`FIXATION_EPS`]) give 0.
pub fn theta_term(target: &[Point2; 2], pred: &[Point2; 2]) -> (f64, [f64; 4]) {
    let dt = target[1].sub(target[0]);
    let dp = pred[1].sub(pred[0]);
    let (nt, np) = (dt.norm(), dp.norm());
    if nt < FIXATION_EPS || np < FIXATION_EPS {
        return (0.0, [0.0; 4]);
    }
    let ut = Point2::new(dt.x / nt, dt.y / nt);
    let up = Point2::new(dp.x / np, dp.y / np);
    let cos = ut.dot(up);
    let lo = -1.0 + ACOS_CLAMP;
    let hi = 1.0 - ACOS_CLAMP;
    if cos <= lo || cos >= hi {
        return (cos.clamp(lo, hi).acos(), [0.0; 4]);
    }
    let theta = cos.acos();
    let dtheta_dcos = -1.0 / (1.0 - cos * cos).sqrt();
    let gx = dtheta_dcos * (ut.x - cos * up.x) / np;
    let gy = dtheta_dcos * (ut.y - cos * up.y) / np;
    (theta, [-gx, -gy, gx, gy])
}

/// Angle loss of one sample, radians.
pub fn loss_theta(target: &[Point2; 2], pred: &[Point2; 2]) -> f64 {
    theta_term(target, pred).0
}

/// Loss and gradient for one sample under `cfg`.
pub fn sample_loss(target: &[Point2; 2], pred: &[Point2; 2], cfg: &LossConfig) -> (LossBreakdown, [f64; 4]) {
    let (c, mut g) = centroid_term(target, pred, cfg.metric);
    let (theta, gt) = theta_term(target, pred);
    let total = match cfg.mode {
        LossMode::Centroid => c,
        LossMode::CentroidTheta => {
            for (a, b) in g.iter_mut().zip(gt) {
                *a += cfg.theta_weight * b;
            }
            c + cfg.theta_weight * theta
        }
    };
    (
        LossBreakdown {
            total,
            centroid: c,
            theta,
        },
        g,
    )
}
