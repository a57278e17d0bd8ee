//! Turning a bounding-box track into a discrete motion descriptor.
//!
//! Direction comes from the net centroid displacement (the magnitude-weighted
//! sum of per-step displacements), speed from centroid path length per second
//! in units of the track's mean box diagonal, and scale from the log ratio of
//! last to first box area.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::BBox;
use crate::motion::{Direction, MotionDescriptor, Scale, Speed};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("track needs at least {needed} samples, got {len}")]
    TrackTooShort { len: usize, needed: usize },
    #[error("track spans zero time")]
    ZeroDuration,
    #[error("zero displacement cannot be assigned a compass direction")]
    ZeroVector,
    #[error("timestamps must be finite and strictly increasing (sample {index})")]
    Unordered { index: usize },
    #[error("invalid motion config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    #[serde(rename = "box")]
    pub bbox: BBox,
}

impl Sample {
    pub fn new(t: f64, bbox: BBox) -> Self {
        Self { t, bbox }
    }
}

/// Time-ordered observations of one object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Track {
    object_name: String,
    samples: Vec<Sample>,
}

impl Track {
    pub fn new(object_name: impl Into<String>, samples: Vec<Sample>) -> Result<Self, GeometryError> {
        if samples.is_empty() {
            return Err(GeometryError::TrackTooShort { len: 0, needed: 1 });
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() {
                return Err(GeometryError::Unordered { index: i });
            }
            if i > 0 && samples[i - 1].t >= s.t {
                return Err(GeometryError::Unordered { index: i });
            }
        }
        Ok(Self {
            object_name: object_name.into(),
            samples,
        })
    }

    pub fn from_pairs(
        object_name: impl Into<String>,
        pairs: impl IntoIterator<Item = (f64, BBox)>,
    ) -> Result<Self, GeometryError> {
        Track::new(
            object_name,
            pairs.into_iter().map(|(t, b)| Sample::new(t, b)).collect(),
        )
    }

    pub fn object_name(&self) -> &str {
        &self.object_name
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].t - self.samples[0].t
    }

    fn require(&self, needed: usize) -> Result<(), GeometryError> {
        if self.samples.len() < needed {
            Err(GeometryError::TrackTooShort {
                len: self.samples.len(),
                needed,
            })
        } else {
            Ok(())
        }
    }
}

/// Bin cutoffs. Speeds are in box diagonals per second, the scale threshold
/// in nats of area ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionConfig {
    pub stationary_speed_threshold: f64,
    pub slow_moderate_threshold: f64,
    pub moderate_fast_threshold: f64,
    pub scale_stable_log_threshold: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            stationary_speed_threshold: 0.05,
            slow_moderate_threshold: 0.5,
            moderate_fast_threshold: 1.5,
            scale_stable_log_threshold: 1.2f64.ln(),
        }
    }
}

impl MotionConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let ok = self.stationary_speed_threshold > 0.0
            && self.stationary_speed_threshold < self.slow_moderate_threshold
            && self.slow_moderate_threshold < self.moderate_fast_threshold
            && self.moderate_fast_threshold.is_finite()
            && self.scale_stable_log_threshold > 0.0
            && self.scale_stable_log_threshold.is_finite();
        if ok {
            Ok(())
        } else {
            Err(GeometryError::InvalidConfig(format!(
                "need 0 < {} < {} < {} and scale threshold {} > 0",
                self.stationary_speed_threshold,
                self.slow_moderate_threshold,
                self.moderate_fast_threshold,
                self.scale_stable_log_threshold
            )))
        }
    }

    /// Speed cutoffs in ascending order.
    pub fn speed_thresholds(&self) -> [f64; 3] {
        [
            self.stationary_speed_threshold,
            self.slow_moderate_threshold,
            self.moderate_fast_threshold,
        ]
    }
}

pub fn centroid(bbox: &BBox) -> (f64, f64) {
    bbox.centroid()
}

pub fn box_area(bbox: &BBox) -> f64 {
    bbox.area()
}

pub fn box_diagonal(bbox: &BBox) -> f64 {
    bbox.diagonal()
}

fn step_displacements(track: &Track) -> impl Iterator<Item = (f64, f64)> + '_ {
    track.samples.windows(2).map(|w| {
        let (ax, ay) = w[0].bbox.centroid();
        let (bx, by) = w[1].bbox.centroid();
        (bx - ax, by - ay)
    })
}

/// Sum of per-step centroid displacements; telescopes to last minus first.
pub fn net_displacement(track: &Track) -> Result<(f64, f64), GeometryError> {
    track.require(2)?;
    let first = track.samples[0].bbox.centroid();
    let last = track.samples[track.len() - 1].bbox.centroid();
    Ok((last.0 - first.0, last.1 - first.1))
}

/// Compass bin of an image-space displacement (y grows downward). Bins are
/// 45 degrees wide, centered on the compass points, closed at their lower edge.
pub fn quantize_direction(displacement: (f64, f64), is_stationary: bool) -> Result<Direction, GeometryError> {
    if is_stationary {
        return Ok(Direction::Stat);
    }
    let (dx, dy) = displacement;
    if dx == 0.0 && dy == 0.0 {
        return Err(GeometryError::ZeroVector);
    }
    let theta = (-dy).atan2(dx).to_degrees();
    let sector = ((theta + 22.5) / 45.0).floor() as i64;
    Ok(Direction::from_compass_index(sector.rem_euclid(8) as usize))
}

/// Centroid path length per second, in mean box diagonals.
pub fn normalized_speed(track: &Track) -> Result<f64, GeometryError> {
    track.require(2)?;
    let duration = track.duration();
    if duration <= 0.0 {
        return Err(GeometryError::ZeroDuration);
    }
    let path: f64 = step_displacements(track).map(|(dx, dy)| dx.hypot(dy)).sum();
    let mean_diagonal =
        track.samples.iter().map(|s| s.bbox.diagonal()).sum::<f64>() / track.len() as f64;
    Ok(path / duration / mean_diagonal)
}

pub fn bin_speed(speed: f64, cfg: &MotionConfig) -> Speed {
    if speed < cfg.stationary_speed_threshold {
        Speed::Stationary
    } else if speed < cfg.slow_moderate_threshold {
        Speed::Slow
    } else if speed < cfg.moderate_fast_threshold {
        Speed::Moderate
    } else {
        Speed::Fast
    }
}

/// `ln(last_area / first_area)`.
pub fn scale_log_ratio(track: &Track) -> Result<f64, GeometryError> {
    track.require(2)?;
    let first = track.samples[0].bbox.area();
    let last = track.samples[track.len() - 1].bbox.area();
    Ok((last / first).ln())
}

pub fn bin_scale(log_ratio: f64, cfg: &MotionConfig) -> Scale {
    if log_ratio > cfg.scale_stable_log_threshold {
        Scale::Approaching
    } else if log_ratio < -cfg.scale_stable_log_threshold {
        Scale::Receding
    } else {
        Scale::Stable
    }
}

pub fn motion_descriptor(track: &Track, cfg: &MotionConfig) -> Result<MotionDescriptor, GeometryError> {
    let speed = bin_speed(normalized_speed(track)?, cfg);
    let stationary = speed == Speed::Stationary;
    let direction = quantize_direction(net_displacement(track)?, stationary)
        // a closed loop can have path length but no net displacement
        .or_else(|e| match e {
            GeometryError::ZeroVector => Ok(Direction::Stat),
            other => Err(other),
        })?;
    let speed = if direction == Direction::Stat {
        Speed::Stationary
    } else {
        speed
    };
    let scale = bin_scale(scale_log_ratio(track)?, cfg);
    Ok(MotionDescriptor::new(direction, speed, scale))
}
