//! Seeded synthetic tracks with known motion bins.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::oracle::{oracle_read, relative_margin};
use super::ForgeError;
use crate::bbox::BBox;
use crate::motion::{Direction, MotionDescriptor, Scale, Speed};
use crate::track::{MotionConfig, Sample, Track};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionKind {
    Linear,
    Stationary,
    Approach,
    Recede,
    Arc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub motion_kind: MotionKind,
    pub target_direction: Direction,
    pub target_speed: Speed,
    pub target_scale: Scale,
    pub sample_count: usize,
    /// Minimum relative distance of speed and log area ratio from every
    /// threshold, and of the heading from every sector edge (as a fraction
    /// of the half-sector width).
    pub margin: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn target(&self) -> MotionDescriptor {
        MotionDescriptor::new(self.target_direction, self.target_speed, self.target_scale)
    }

    /// A motion kind that can realize `target`.
    pub fn natural_kind(target: &MotionDescriptor, curved: bool) -> MotionKind {
        match (target.direction, target.scale) {
            (Direction::Stat, _) => MotionKind::Stationary,
            _ if curved => MotionKind::Arc,
            (_, Scale::Approaching) => MotionKind::Approach,
            (_, Scale::Receding) => MotionKind::Recede,
            _ => MotionKind::Linear,
        }
    }

    fn check(&self, cfg: &MotionConfig) -> Result<(), ForgeError> {
        let infeasible = |msg: String| Err(ForgeError::InfeasibleSpec(msg));
        if self.sample_count < 2 {
            return infeasible(format!("sample_count {} < 2", self.sample_count));
        }
        if !(self.margin.is_finite() && (0.0..0.5).contains(&self.margin)) {
            return infeasible(format!("margin {} outside [0, 0.5)", self.margin));
        }
        if !self.target().is_coupled() {
            return infeasible(format!("{} breaks the STAT/stationary coupling", self.target()));
        }
        let moving = self.target_direction != Direction::Stat;
        let ok = match self.motion_kind {
            MotionKind::Stationary => !moving,
            MotionKind::Linear | MotionKind::Arc => moving,
            MotionKind::Approach => self.target_scale == Scale::Approaching,
            MotionKind::Recede => self.target_scale == Scale::Receding,
        };
        if !ok {
            return infeasible(format!("{:?} cannot produce {}", self.motion_kind, self.target()));
        }
        cfg.validate().map_err(ForgeError::from)
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Result<f64, ForgeError> {
    if lo < hi {
        Ok(rng.random_range(lo..hi))
    } else {
        Err(ForgeError::InfeasibleSpec(format!(
            "empty sampling interval [{lo}, {hi}); margin too large for the configured thresholds"
        )))
    }
}

fn speed_value(rng: &mut ChaCha8Rng, bin: Speed, m: f64, cfg: &MotionConfig) -> Result<f64, ForgeError> {
    let [s0, s1, s2] = cfg.speed_thresholds();
    match bin {
        Speed::Stationary => Ok(0.0),
        Speed::Slow => uniform(rng, s0 * (1.0 + m), s1 * (1.0 - m)),
        Speed::Moderate => uniform(rng, s1 * (1.0 + m), s2 * (1.0 - m)),
        Speed::Fast => uniform(rng, s2 * (1.0 + m), 2.0 * s2 * (1.0 + m)),
    }
}

fn log_ratio_value(rng: &mut ChaCha8Rng, bin: Scale, m: f64, cfg: &MotionConfig) -> Result<f64, ForgeError> {
    let th = cfg.scale_stable_log_threshold;
    let far = th * (1.0 + m);
    match bin {
        Scale::Stable => {
            let near = th * (1.0 - m);
            uniform(rng, -near, near)
        }
        Scale::Approaching => uniform(rng, far, far + 0.7),
        Scale::Receding => uniform(rng, far, far + 0.7).map(|r| -r),
    }
}

/// Builds a track whose oracle classification equals the spec's targets,
/// with every raw quantity at least `margin` away from its bin edges.
pub fn generate_synthetic(spec: &SyntheticSpec, cfg: &MotionConfig) -> Result<(Track, MotionDescriptor), ForgeError> {
    spec.check(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.sample_count;
    let m = spec.margin;

    let speed = speed_value(&mut rng, spec.target_speed, m, cfg)?;
    let log_ratio = log_ratio_value(&mut rng, spec.target_scale, m, cfg)?;
    let heading = match spec.target_direction.center_degrees() {
        Some(center) => {
            let half = 22.5 * (1.0 - m);
            Some(center + uniform(&mut rng, -half, half)?)
        }
        None => None,
    };

    let w0 = rng.random_range(0.05..0.12);
    let h0 = rng.random_range(0.05..0.12);
    let progress: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    // side lengths grow geometrically so the area ratio is exp(log_ratio)
    let sizes: Vec<(f64, f64)> = progress
        .iter()
        .map(|s| {
            let f = (0.5 * log_ratio * s).exp();
            (w0 * f, h0 * f)
        })
        .collect();

    let centers: Vec<(f64, f64)> = match heading {
        None => vec![(0.5, 0.5); n],
        Some(deg) => {
            let a = deg.to_radians();
            // image y grows downward
            let (ux, uy) = (a.cos(), -a.sin());
            let (px, py) = (-uy, ux);
            let chord = if spec.motion_kind == MotionKind::Arc {
                rng.random_range(0.1..0.3)
            } else {
                rng.random_range(0.1..0.4)
            };
            let bulge = if spec.motion_kind == MotionKind::Arc {
                let phi: f64 = rng.random_range(20.0f64..90.0).to_radians();
                let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                Some((phi, side))
            } else {
                None
            };
            progress
                .iter()
                .map(|s| {
                    let (along, across) = match bulge {
                        None => (s * chord, 0.0),
                        Some((phi, side)) => {
                            let radius = chord / (2.0 * (phi / 2.0).sin());
                            let rise = radius * (phi / 2.0).cos();
                            let alpha = PI / 2.0 + phi / 2.0 - s * phi;
                            (chord / 2.0 + radius * alpha.cos(), side * (radius * alpha.sin() - rise))
                        }
                    };
                    let along = along - chord / 2.0;
                    (0.5 + along * ux + across * px, 0.5 + along * uy + across * py)
                })
                .collect()
        }
    };

    let path: f64 = centers
        .windows(2)
        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
        .sum();
    let mean_diagonal = sizes.iter().map(|(w, h)| w.hypot(*h)).sum::<f64>() / n as f64;
    let duration = if speed > 0.0 && path > 0.0 {
        path / (speed * mean_diagonal)
    } else {
        rng.random_range(0.2..1.0) * (n - 1) as f64
    };

    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let (cx, cy) = centers[i];
        let (w, h) = sizes[i];
        let bbox = BBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
            .map_err(|e| ForgeError::InfeasibleSpec(format!("generated box left the image: {e}")))?;
        samples.push(Sample::new(progress[i] * duration, bbox));
    }
    let track = Track::new("synthetic", samples)?;

    let reading = oracle_read(&track, cfg);
    let target = spec.target();
    if reading.descriptor != target {
        return Err(ForgeError::InfeasibleSpec(format!(
            "generated track reads as {} instead of {target}",
            reading.descriptor
        )));
    }
    let speed_ok = spec.target_speed == Speed::Stationary
        || relative_margin(reading.speed, &cfg.speed_thresholds()) >= m * (1.0 - 1e-9);
    let th = cfg.scale_stable_log_threshold;
    let scale_ok = relative_margin(reading.log_ratio, &[th, -th]) >= m * (1.0 - 1e-9);
    if !(speed_ok && scale_ok) {
        return Err(ForgeError::InfeasibleSpec(format!(
            "generated track violates the {m} margin (speed {}, log ratio {})",
            reading.speed, reading.log_ratio
        )));
    }
    Ok((track, target))
}
