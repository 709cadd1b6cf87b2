//! Zero counting by the argument principle with adaptive boundary sampling.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::region::{Placement, Rect, SearchRegion};
use crate::dispersion::dispersion_function;
use crate::error::{Error, Result};
use crate::model::Model;

/// A function value together with the magnitude scale it should be judged
/// against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: Complex64,
    pub scale: f64,
}

impl Sample {
    pub fn relative(&self) -> f64 {
        self.value.norm() / self.scale
    }
}

pub trait Evaluator: Sync {
    fn eval(&self, z: Complex64) -> Result<Sample>;
}

/// A closed-form analytic function, judged on an absolute scale of 1.
pub struct Analytic<F>(pub F);

impl<F: Fn(Complex64) -> Complex64 + Sync> Evaluator for Analytic<F> {
    fn eval(&self, z: Complex64) -> Result<Sample> {
        Ok(Sample { value: (self.0)(z), scale: 1.0 })
    }
}

/// The rescaled dispersion determinant, judged against its Leibniz scale.
pub struct DispersionEvaluator<'a> {
    pub model: &'a Model,
}

impl Evaluator for DispersionEvaluator<'_> {
    fn eval(&self, z: Complex64) -> Result<Sample> {
        let v = dispersion_function(z, self.model)?;
        Ok(Sample { value: v.value, scale: v.condition })
    }
}

/// Per-edge cap on evaluations before giving up.
pub const EDGE_BUDGET: usize = 1 << 18;
/// Consecutive samples must differ in phase by less than this.
pub const MAX_PHASE_STEP: f64 = PI / 3.0;
/// ... and in log-magnitude by less than this.
pub const MAX_LOG_STEP: f64 = 1.5;
/// Segments shorter than this fraction of the contour size mean a zero sits
/// on the contour.
pub const MIN_SEGMENT: f64 = 1e-9;
pub const DILATION: f64 = 1e-6;
pub const DILATION_RETRIES: usize = 3;

struct EdgeWalker<'a, E: Evaluator + ?Sized> {
    f: &'a E,
    a: Complex64,
    b: Complex64,
    min_len: f64,
    used: usize,
}

impl<E: Evaluator + ?Sized> EdgeWalker<'_, E> {
    fn point(&self, t: f64) -> Complex64 {
        self.a + (self.b - self.a) * t
    }

    fn value(&mut self, t: f64) -> Result<Complex64> {
        self.used += 1;
        if self.used > EDGE_BUDGET {
            return Err(Error::PhaseUndersampled { budget: EDGE_BUDGET });
        }
        let s = self.f.eval(self.point(t))?;
        if s.value == Complex64::new(0.0, 0.0) || !s.value.is_finite() {
            return Err(Error::BoundaryZero);
        }
        Ok(s.value)
    }

    /// Phase change from t0 to t1, refining until each step is small.
    fn phase(&mut self, t0: f64, v0: Complex64, t1: f64, v1: Complex64) -> Result<f64> {
        let mut total = 0.0;
        let mut stack = vec![(t0, v0, t1, v1)];
        while let Some((s0, w0, s1, w1)) = stack.pop() {
            let small = |q: Complex64| q.arg().abs() < MAX_PHASE_STEP && q.norm().ln().abs() < MAX_LOG_STEP;
            let q = w1 / w0;
            if (s1 - s0) * (self.b - self.a).norm() < self.min_len {
                return Err(Error::BoundaryZero);
            }
            let sm = 0.5 * (s0 + s1);
            let wm = self.value(sm)?;
            // The midpoint guards against a full turn hiding between samples.
            let (qa, qb) = (wm / w0, w1 / wm);
            if small(q) && small(qa) && small(qb) && (qa.arg() + qb.arg() - q.arg()).abs() < 1e-9 {
                total += q.arg();
                continue;
            }
            // Second half goes on first so that the first half is walked first.
            stack.push((sm, wm, s1, w1));
            stack.push((s0, w0, sm, wm));
        }
        Ok(total)
    }
}

/// Winding number of f around the rectangle boundary, without dilation.
/// Each edge starts with at least its share of `samples_min` points and no
/// gap wider than `max_step`.
pub fn winding_number<E: Evaluator + ?Sized>(rect: &Rect, f: &E, samples_min: usize, max_step: f64) -> Result<i64> {
    let corners = rect.corners();
    let perimeter = 2.0 * (rect.width() + rect.height());
    let min_len = MIN_SEGMENT * rect.diameter().max(1.0);
    let mut total = 0.0;
    for k in 0..4 {
        let a = corners[k];
        let b = corners[(k + 1) % 4];
        let len = (b - a).norm();
        let pieces = ((samples_min as f64 * len / perimeter).ceil() as usize)
            .max((len / max_step).ceil() as usize)
            .max(4);
        let mut w = EdgeWalker { f, a, b, min_len, used: 0 };
        let mut t0 = 0.0;
        let mut v0 = w.value(0.0)?;
        for j in 1..=pieces {
            let t1 = j as f64 / pieces as f64;
            let v1 = w.value(t1)?;
            total += w.phase(t0, v0, t1, v1)?;
            t0 = t1;
            v0 = v1;
        }
    }
    let turns = total / (2.0 * PI);
    let k = turns.round();
    if (turns - k).abs() > 1e-6 {
        return Err(Error::PhaseUndersampled { budget: EDGE_BUDGET });
    }
    Ok(k as i64)
}

/// Winding number with up to three outward dilations when the contour runs
/// through a zero.
pub fn winding_with_retry<E: Evaluator + ?Sized>(rect: &Rect, f: &E, samples_min: usize, max_step: f64) -> Result<i64> {
    let mut r = *rect;
    let step = DILATION * rect.diameter().max(1.0);
    let mut last = Error::BoundaryZero;
    for _ in 0..=DILATION_RETRIES {
        match winding_number(&r, f, samples_min, max_step) {
            Err(Error::BoundaryZero) => {
                last = Error::BoundaryZero;
                r = r.dilate(step);
            }
            other => return other,
        }
    }
    Err(last)
}

/// Net zero count of the region: the boundary winding minus the winding
/// index of every exclusion disk the region encloses.
pub fn count_zeros<E: Evaluator + ?Sized>(region: &SearchRegion, f: &E) -> Result<i64> {
    settle_region(region, f).map(|(_, _, count)| count)
}

/// Counts zeros of the whole region, dilating its rectangle outward (at most
/// three times) when the boundary runs through a zero. Returns the rectangle
/// actually used, the disk indices and the net count.
pub fn settle_region<E: Evaluator + ?Sized>(region: &SearchRegion, f: &E) -> Result<(Rect, Vec<i64>, i64)> {
    let indices = disk_indices(region, f)?;
    let step = DILATION * region.rect.diameter().max(1.0);
    let mut rect = region.rect;
    for _ in 0..=DILATION_RETRIES {
        match count_in_rect(&rect, region, f, &indices) {
            Err(Error::BoundaryZero) => rect = rect.dilate(step),
            Err(e) => return Err(e),
            Ok(count) => return Ok((rect, indices, count)),
        }
    }
    Err(Error::BoundaryZero)
}

/// Winding index of each exclusion disk, measured on its guard square.
pub fn disk_indices<E: Evaluator + ?Sized>(region: &SearchRegion, f: &E) -> Result<Vec<i64>> {
    region
        .exclusions
        .iter()
        .map(|d| {
            if region.rect.place(&d.guard()) == Placement::Inside {
                winding_with_retry(&d.guard(), f, 32, region.max_step)
            } else {
                Ok(0)
            }
        })
        .collect()
}

/// Net count inside a rectangle, given the disk indices. No dilation is
/// attempted, so sub-rectangles keep tiling their parent.
pub fn count_in_rect<E: Evaluator + ?Sized>(
    rect: &Rect,
    region: &SearchRegion,
    f: &E,
    indices: &[i64],
) -> Result<i64> {
    region.check_disks(rect)?;
    let raw = winding_number(rect, f, region.boundary_samples_min, region.max_step)?;
    let inside: i64 = region
        .exclusions
        .iter()
        .zip(indices)
        .filter(|(d, _)| rect.place(&d.guard()) == Placement::Inside)
        .map(|(_, k)| k)
        .sum();
    Ok(raw - inside)
}
