//! Normalized axis-aligned bounding boxes.
//!
//! Coordinates live in `[0, 1]` image space with `x` growing rightward and
//! `y` growing downward.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoxError {
    #[error("box coordinate {value} is not finite")]
    NotFinite { value: f64 },
    #[error("box coordinate {value} lies outside [0, 1]")]
    OutOfRange { value: f64 },
    #[error("box [{x1}, {y1}, {x2}, {y2}] has zero or negative extent")]
    Degenerate { x1: f64, y1: f64, x2: f64, y2: f64 },
}

/// A normalized box `[x1, y1, x2, y2]` with `0 <= x1 < x2 <= 1` and
/// `0 <= y1 < y2 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, BoxError> {
        for value in [x1, y1, x2, y2] {
            if !value.is_finite() {
                return Err(BoxError::NotFinite { value });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(BoxError::OutOfRange { value });
            }
        }
        if x1 >= x2 || y1 >= y2 {
            return Err(BoxError::Degenerate { x1, y1, x2, y2 });
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn centroid(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    /// Intersection over union; always in `[0, 1]`.
    pub fn iou(&self, other: &BBox) -> f64 {
        let iw = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let ih = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        let inter = iw * ih;
        if inter <= 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        (inter / union).clamp(0.0, 1.0)
    }

    /// Corner-wise linear blend, `alpha = 0` gives `self`, `alpha = 1` gives `other`.
    pub fn lerp(&self, other: &BBox, alpha: f64) -> BBox {
        let mix = |a: f64, b: f64| (1.0 - alpha) * a + alpha * b;
        BBox {
            x1: mix(self.x1, other.x1),
            y1: mix(self.y1, other.y1),
            x2: mix(self.x2, other.x2),
            y2: mix(self.y2, other.y2),
        }
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = BoxError;

    fn try_from(c: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.corners()
    }
}
