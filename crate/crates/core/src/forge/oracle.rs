//! Brute-force motion classifier used to check generated tracks.
//!
//! Deliberately shares no code with [`crate::track`]: it reads raw corners,
//! classifies direction with an explicit sector table and bins speed and
//! scale by direct comparison against the configured cutoffs.

use crate::motion::{Direction, MotionDescriptor, Scale, Speed};
use crate::track::{MotionConfig, Track};

/// Half-open angular sectors in degrees, counterclockwise from east with
/// north pointing up the image. West wraps around +-180.
const SECTORS: [(f64, f64, Direction); 9] = [
    (-22.5, 22.5, Direction::E),
    (22.5, 67.5, Direction::NE),
    (67.5, 112.5, Direction::N),
    (112.5, 157.5, Direction::NW),
    (157.5, f64::INFINITY, Direction::W),
    (f64::NEG_INFINITY, -157.5, Direction::W),
    (-157.5, -112.5, Direction::SW),
    (-112.5, -67.5, Direction::S),
    (-67.5, -22.5, Direction::SE),
];

/// Raw quantities the oracle classifies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReading {
    /// Path length per second over mean diagonal.
    pub speed: f64,
    /// `ln(last area) - ln(first area)`.
    pub log_ratio: f64,
    /// Heading of last minus first centroid, `None` when they coincide.
    pub heading_degrees: Option<f64>,
    pub descriptor: MotionDescriptor,
}

fn center(c: [f64; 4]) -> [f64; 2] {
    [0.5 * (c[0] + c[2]), 0.5 * (c[1] + c[3])]
}

pub fn oracle_read(track: &Track, cfg: &MotionConfig) -> OracleReading {
    let corners: Vec<[f64; 4]> = track.samples().iter().map(|s| s.bbox.corners()).collect();
    let times: Vec<f64> = track.samples().iter().map(|s| s.t).collect();
    let n = corners.len();

    let mut path = 0.0;
    for i in 1..n {
        let a = center(corners[i - 1]);
        let b = center(corners[i]);
        path += ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    }
    let mut diag_sum = 0.0;
    for c in &corners {
        diag_sum += ((c[2] - c[0]).powi(2) + (c[3] - c[1]).powi(2)).sqrt();
    }
    let elapsed = times[n - 1] - times[0];
    let speed = if n < 2 || elapsed <= 0.0 {
        0.0
    } else {
        path / elapsed / (diag_sum / n as f64)
    };

    let area = |c: [f64; 4]| (c[2] - c[0]) * (c[3] - c[1]);
    let log_ratio = area(corners[n - 1]).ln() - area(corners[0]).ln();

    let first = center(corners[0]);
    let last = center(corners[n - 1]);
    let (dx, dy) = (last[0] - first[0], last[1] - first[1]);
    let heading_degrees = if dx == 0.0 && dy == 0.0 {
        None
    } else {
        Some((-dy).atan2(dx) * 180.0 / std::f64::consts::PI)
    };

    let speed_bin = if speed < cfg.stationary_speed_threshold {
        Speed::Stationary
    } else if speed < cfg.slow_moderate_threshold {
        Speed::Slow
    } else if speed < cfg.moderate_fast_threshold {
        Speed::Moderate
    } else {
        Speed::Fast
    };

    let direction = match (speed_bin, heading_degrees) {
        (Speed::Stationary, _) | (_, None) => Direction::Stat,
        (_, Some(theta)) => SECTORS
            .iter()
            .find(|(lo, hi, _)| theta >= *lo && theta < *hi)
            .map(|s| s.2)
            .unwrap_or(Direction::W),
    };
    let speed_bin = if direction == Direction::Stat {
        Speed::Stationary
    } else {
        speed_bin
    };

    let scale = if log_ratio > cfg.scale_stable_log_threshold {
        Scale::Approaching
    } else if log_ratio < -cfg.scale_stable_log_threshold {
        Scale::Receding
    } else {
        Scale::Stable
    };

    OracleReading {
        speed,
        log_ratio,
        heading_degrees,
        descriptor: MotionDescriptor::new(direction, speed_bin, scale),
    }
}

pub fn oracle_classify(track: &Track, cfg: &MotionConfig) -> MotionDescriptor {
    oracle_read(track, cfg).descriptor
}

/// Smallest relative distance of `value` to any of `thresholds`.
pub fn relative_margin(value: f64, thresholds: &[f64]) -> f64 {
    thresholds
        .iter()
        .map(|t| (value - t).abs() / t.abs())
        .fold(f64::INFINITY, f64::min)
}
