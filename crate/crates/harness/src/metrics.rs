//! Per-trial outcome records and trajectory statistics.

use thiserror::Error;

use warpgrid_core::Vec2;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("trajectory has fewer than 3 points")]
    TooShort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Collision,
    Timeout,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
        }
    }
}

/// Everything measured in one trial.
#[derive(Debug, Clone)]
pub struct TrialMetrics {
    pub outcome: Outcome,
    /// Length of the traversed polyline, centimeters.
    pub path_length_cm: f64,
    /// Absolute per-vertex heading change, degrees.
    pub turning_angles_deg: Vec<f64>,
    pub ticks_elapsed: u64,
    pub seed: u64,
}

impl TrialMetrics {
    pub fn max_turn_deg(&self) -> f64 {
        self.turning_angles_deg.iter().copied().fold(0.0, f64::max)
    }
}

/// Polyline length in meters.
pub fn path_length_m(trajectory: &[Vec2]) -> f64 {
    trajectory.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Absolute heading change at each interior vertex, degrees.
pub fn turning_angles_deg(trajectory: &[Vec2]) -> Vec<f64> {
    trajectory
        .windows(3)
        .map(|w| {
            let a = w[1] - w[0];
            let b = w[2] - w[1];
            if a.norm_sq() == 0.0 || b.norm_sq() == 0.0 {
                return 0.0;
            }
            let cos = (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0);
            cos.acos().to_degrees()
        })
        .collect()
}

pub const HISTOGRAM_BINS: usize = 36;

/// Turning angles binned into fixed 5-degree bins over `[0, 180]`.
/// Counts sum to `len - 2`.
pub fn turning_angle_histogram(trajectory: &[Vec2]) -> Result<[u32; HISTOGRAM_BINS], MetricsError> {
    if trajectory.len() < 3 {
        return Err(MetricsError::TooShort);
    }
    let mut bins = [0u32; HISTOGRAM_BINS];
    for angle in turning_angles_deg(trajectory) {
        let bin = ((angle / 5.0) as usize).min(HISTOGRAM_BINS - 1);
        bins[bin] += 1;
    }
    Ok(bins)
}
