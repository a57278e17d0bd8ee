//! Closed vocabularies for motion attributes and the descriptor triple.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{value}` is not a valid {kind} (expected one of: {expected})")]
pub struct VocabError {
    pub kind: &'static str,
    pub value: String,
    pub expected: &'static str,
}

/// Compass direction in image space (north is decreasing `y`), or `Stat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
    #[serde(rename = "STAT")]
    Stat,
}

impl Direction {
    /// The eight moving directions, counterclockwise from east.
    pub const COMPASS: [Direction; 8] = [
        Direction::E,
        Direction::NE,
        Direction::N,
        Direction::NW,
        Direction::W,
        Direction::SW,
        Direction::S,
        Direction::SE,
    ];

    pub const ALL: [Direction; 9] = [
        Direction::N,
        Direction::NE,
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
        Direction::Stat,
    ];

    /// Position on the counterclockwise compass cycle starting at east; `None` for `Stat`.
    pub fn compass_index(self) -> Option<usize> {
        Direction::COMPASS.iter().position(|d| *d == self)
    }

    pub fn from_compass_index(index: usize) -> Direction {
        Direction::COMPASS[index % 8]
    }

    /// Bin center in degrees, counterclockwise from east.
    pub fn center_degrees(self) -> Option<f64> {
        self.compass_index().map(|i| i as f64 * 45.0)
    }

    pub fn opposite(self) -> Direction {
        match self.compass_index() {
            Some(i) => Direction::from_compass_index(i + 4),
            None => Direction::Stat,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::N => "N",
            Direction::NE => "NE",
            Direction::E => "E",
            Direction::SE => "SE",
            Direction::S => "S",
            Direction::SW => "SW",
            Direction::W => "W",
            Direction::NW => "NW",
            Direction::Stat => "STAT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speed {
    Stationary,
    Slow,
    Moderate,
    Fast,
}

impl Speed {
    pub const ALL: [Speed; 4] = [Speed::Stationary, Speed::Slow, Speed::Moderate, Speed::Fast];

    pub fn rank(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Speed::Stationary => "stationary",
            Speed::Slow => "slow",
            Speed::Moderate => "moderate",
            Speed::Fast => "fast",
        }
    }
}

/// Area trend: `Approaching` means the box grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Approaching,
    Stable,
    Receding,
}

impl Scale {
    pub const ALL: [Scale; 3] = [Scale::Approaching, Scale::Stable, Scale::Receding];

    pub fn rank(self) -> usize {
        self as usize
    }

    pub fn reversed(self) -> Scale {
        match self {
            Scale::Approaching => Scale::Receding,
            Scale::Stable => Scale::Stable,
            Scale::Receding => Scale::Approaching,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scale::Approaching => "approaching",
            Scale::Stable => "stable",
            Scale::Receding => "receding",
        }
    }
}

macro_rules! vocab_impls {
    ($ty:ty, $kind:literal, $expected:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = VocabError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <$ty>::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str() == s)
                    .ok_or_else(|| VocabError {
                        kind: $kind,
                        value: s.to_string(),
                        expected: $expected,
                    })
            }
        }
    };
}

vocab_impls!(Direction, "direction", "N, NE, E, SE, S, SW, W, NW, STAT");
vocab_impls!(Speed, "speed", "stationary, slow, moderate, fast");
vocab_impls!(Scale, "scale", "approaching, stable, receding");

/// Discrete (direction, speed, scale) summary of a track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MotionDescriptor {
    #[serde(rename = "dir")]
    pub direction: Direction,
    pub speed: Speed,
    pub scale: Scale,
}

impl MotionDescriptor {
    pub fn new(direction: Direction, speed: Speed, scale: Scale) -> Self {
        Self { direction, speed, scale }
    }

    /// `STAT` direction and `stationary` speed must occur together.
    pub fn is_coupled(&self) -> bool {
        (self.direction == Direction::Stat) == (self.speed == Speed::Stationary)
    }

    /// Every descriptor satisfying the STAT coupling.
    pub fn feasible() -> impl Iterator<Item = MotionDescriptor> {
        Direction::ALL.into_iter().flat_map(|d| {
            Speed::ALL.into_iter().flat_map(move |s| {
                Scale::ALL
                    .into_iter()
                    .map(move |c| MotionDescriptor::new(d, s, c))
            })
        })
        .filter(MotionDescriptor::is_coupled)
    }
}

impl fmt::Display for MotionDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.direction, self.speed, self.scale)
    }
}
