use num_complex::Complex64;
use serde::Serialize;

use crate::dispersion::{MIN_IMAG, POLE_EXCLUSION_RADIUS};
use crate::error::{Error, Result};
use crate::model::Model;

/// A disk the evaluator must never enter. Its zero/pole content is measured
/// once by a winding around the surrounding square of half-width
/// `GUARD_FACTOR`·radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

pub const GUARD_FACTOR: f64 = 1.5;

impl Disk {
    pub fn guard(&self) -> Rect {
        let h = GUARD_FACTOR * self.radius;
        Rect {
            re_min: self.center.re - h,
            re_max: self.center.re + h,
            im_min: self.center.im - h,
            im_max: self.center.im + h,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() <= self.radius
    }
}

/// Closed axis-aligned rectangle in the λ plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Inside,
    Outside,
    Cut,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Rect> {
        let all = [re_min, re_max, im_min, im_max];
        if all.iter().any(|v| !v.is_finite()) || re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidRegion(format!(
                "need re_min < re_max and im_min < im_max, got [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Rect { re_min, re_max, im_min, im_max })
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn dilate(&self, by: f64) -> Rect {
        Rect {
            re_min: self.re_min - by,
            re_max: self.re_max + by,
            im_min: self.im_min - by,
            im_max: self.im_max + by,
        }
    }

    /// Corners in counterclockwise order starting at the lower left.
    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    pub fn place(&self, other: &Rect) -> Placement {
        if other.re_min > self.re_min
            && other.re_max < self.re_max
            && other.im_min > self.im_min
            && other.im_max < self.im_max
        {
            Placement::Inside
        } else if other.re_max < self.re_min
            || other.re_min > self.re_max
            || other.im_max < self.im_min
            || other.im_min > self.im_max
        {
            Placement::Outside
        } else {
            Placement::Cut
        }
    }

    /// Splits along the longer side at the given fraction of its extent.
    pub fn split(&self, fraction: f64) -> (Rect, Rect) {
        if self.width() >= self.height() {
            let x = self.re_min + fraction * self.width();
            (Rect { re_max: x, ..*self }, Rect { re_min: x, ..*self })
        } else {
            let y = self.im_min + fraction * self.height();
            (Rect { im_max: y, ..*self }, Rect { im_min: y, ..*self })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchRegion {
    pub rect: Rect,
    pub exclusions: Vec<Disk>,
    /// Initial number of samples spread over the whole boundary.
    pub boundary_samples_min: usize,
    /// Largest gap between initial boundary samples, tied to the fastest
    /// oscillation of the dispersion function.
    pub max_step: f64,
    pub max_depth: u32,
}

impl SearchRegion {
    /// A region with the circuit pole disk registered. Every exclusion disk
    /// must lie strictly inside or strictly outside the rectangle.
    pub fn new(rect: Rect, model: &Model) -> Result<SearchRegion> {
        if rect.im_min < MIN_IMAG {
            return Err(Error::InvalidRegion(format!("im_min must be at least {MIN_IMAG}")));
        }
        let region = SearchRegion {
            rect,
            exclusions: vec![Disk { center: model.params.pole(), radius: POLE_EXCLUSION_RADIUS }],
            boundary_samples_min: 64,
            max_step: 0.25 / model.derived.c1.max(model.derived.c3).max(1.0),
            max_depth: 40,
        };
        region.check_disks(&rect)?;
        Ok(region)
    }

    /// Re ∈ [0.3, 120], Im ∈ [−0.5, 8].
    pub fn default_window(model: &Model) -> Result<SearchRegion> {
        SearchRegion::new(Rect::new(0.3, 120.0, -0.5, 8.0)?, model)
    }

    pub fn with_exclusion(mut self, disk: Disk) -> Result<SearchRegion> {
        self.exclusions.push(disk);
        self.check_disks(&self.rect)?;
        Ok(self)
    }

    pub fn check_disks(&self, rect: &Rect) -> Result<()> {
        for d in &self.exclusions {
            if rect.place(&d.guard()) == Placement::Cut {
                return Err(Error::InvalidRegion(format!(
                    "boundary passes through the exclusion disk at {} (radius {})",
                    d.center, d.radius
                )));
            }
        }
        Ok(())
    }

    pub fn in_exclusion(&self, z: Complex64) -> bool {
        self.exclusions.iter().any(|d| (z - d.center).norm() <= GUARD_FACTOR * d.radius)
    }
}
