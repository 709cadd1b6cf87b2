//! Recursive isolation of dispersion zeros, refinement, mirroring and branch
//! labelling.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::muller::{refine_root, MullerOptions};
use super::region::{Rect, SearchRegion};
use super::winding::{count_in_rect, settle_region, DispersionEvaluator, Evaluator};
use crate::asymptotics::{
    local_spacing, perturbed_branch1, perturbed_branch2, unperturbed_branch, AdmissibilityOptions, Branch,
    NewtonOptions,
};
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Determinant,
    Collocation,
    Asymptotic1,
    Asymptotic2,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Determinant => "determinant",
            Method::Collocation => "collocation",
            Method::Asymptotic1 => "asymptotic1",
            Method::Asymptotic2 => "asymptotic2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenvalueRecord {
    pub value: Complex64,
    pub method: Method,
    pub branch: Option<Branch>,
    pub n: Option<u32>,
    pub residual: f64,
    pub multiplicity: u32,
    pub admissible: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnresolvedBox {
    pub rect: Rect,
    pub count: i64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub records: Vec<EigenvalueRecord>,
    pub unresolved: Vec<UnresolvedBox>,
    /// Net zero count of the (possibly dilated) search rectangle.
    pub total_count: i64,
    pub rect_used: Rect,
    pub exclusion_indices: Vec<i64>,
    pub conservation_violations: usize,
}

impl SpectrumResult {
    pub fn is_partial(&self, tol: f64) -> bool {
        !self.unresolved.is_empty() || self.records.iter().any(|r| !(r.residual <= tol))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub muller: MullerOptions,
    pub dedup_rel: f64,
    /// Matching radius as a fraction of the local branch spacing.
    pub match_radius: f64,
    pub mirror: bool,
    pub admissibility: AdmissibilityOptions,
    pub newton: NewtonOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            muller: MullerOptions::default(),
            dedup_rel: 1e-8,
            match_radius: 0.2,
            mirror: true,
            admissibility: AdmissibilityOptions::default(),
            newton: NewtonOptions::default(),
        }
    }
}

/// Split positions tried in turn when a split line hits a zero or a disk.
const SPLIT_FRACTIONS: [f64; 5] = [0.5, 0.46, 0.54, 0.42, 0.58];

#[derive(Debug, Clone, Copy)]
struct Found {
    lambda: Complex64,
    residual: f64,
    multiplicity: u32,
}

#[derive(Default)]
struct Partial {
    found: Vec<Found>,
    unresolved: Vec<UnresolvedBox>,
    violations: usize,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        self.found.extend(other.found);
        self.unresolved.extend(other.unresolved);
        self.violations += other.violations;
        self
    }
}

struct Ctx<'a, E: Evaluator> {
    region: &'a SearchRegion,
    f: &'a E,
    indices: &'a [i64],
    muller: MullerOptions,
}

impl<E: Evaluator> Ctx<'_, E> {
    fn try_refine(&self, rect: &Rect) -> Option<Found> {
        let seed = rect.center();
        if self.region.in_exclusion(seed) {
            return None;
        }
        let opts = MullerOptions {
            step_limit: rect.diameter(),
            spread: (rect.diameter() / 8.0).min(self.muller.spread.max(1e-6)),
            ..self.muller
        };
        let r = refine_root(seed, self.f, &opts).ok()?;
        (r.converged && rect.contains(r.lambda) && !self.region.in_exclusion(r.lambda))
            .then_some(Found { lambda: r.lambda, residual: r.residual, multiplicity: 1 })
    }

    fn solve(&self, rect: Rect, count: i64, depth: u32) -> Partial {
        let unresolved = |reason: String| Partial {
            unresolved: vec![UnresolvedBox { rect, count, reason }],
            ..Default::default()
        };
        match count.cmp(&1) {
            Ordering::Less if count == 0 => return Partial::default(),
            Ordering::Less => return unresolved("negative net count".into()),
            Ordering::Equal => {
                if let Some(found) = self.try_refine(&rect) {
                    return Partial { found: vec![found], ..Default::default() };
                }
            }
            Ordering::Greater => {}
        }
        let tiny = rect.diameter() <= 1e-9 * rect.center().norm().max(1.0);
        if depth >= self.region.max_depth || tiny {
            if tiny {
                if let Some(mut found) = self.try_refine(&rect) {
                    found.multiplicity = count as u32;
                    return Partial { found: vec![found], ..Default::default() };
                }
            }
            return unresolved(format!("still {count} zeros at depth {depth}"));
        }
        let mut violations = 0;
        let mut last = String::from("no admissible split line");
        for frac in SPLIT_FRACTIONS {
            let (a, b) = rect.split(frac);
            let ca = count_in_rect(&a, self.region, self.f, self.indices);
            let cb = count_in_rect(&b, self.region, self.f, self.indices);
            match (ca, cb) {
                (Ok(ca), Ok(cb)) if ca + cb == count => {
                    let (pa, pb) = rayon::join(|| self.solve(a, ca, depth + 1), || self.solve(b, cb, depth + 1));
                    let mut out = pa.merge(pb);
                    out.violations += violations;
                    return out;
                }
                (Ok(ca), Ok(cb)) => {
                    violations += 1;
                    last = format!("children count {ca} + {cb} != {count}");
                }
                (Err(e), _) | (_, Err(e)) => last = e.to_string(),
            }
        }
        let mut out = unresolved(last);
        out.violations = violations;
        out
    }
}

/// Orders by real part, then imaginary part.
pub fn sort_records(records: &mut [EigenvalueRecord]) {
    records.sort_by(|a, b| {
        a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im))
    });
}

/// Leading-order prediction, corrected at second order when that is
/// available.
pub fn branch_prediction(branch: Branch, n: u32, model: &Model, opts: &SpectrumOptions) -> Option<(Complex64, Option<bool>)> {
    match branch {
        Branch::One => match perturbed_branch1(n, &opts.admissibility, model) {
            Ok(b) if !b.flagged => Some((b.lambda_perturbed, b.admissible)),
            Ok(b) => Some((b.lambda_unperturbed, b.admissible)),
            Err(_) => unperturbed_branch(Branch::One, n, model).ok().map(|l| (l, Some(false))),
        },
        Branch::Two => match perturbed_branch2(n, &opts.newton, model) {
            Ok(b) => Some((b.lambda_perturbed, None)),
            Err(_) => unperturbed_branch(Branch::Two, n, model).ok().map(|l| (l, None)),
        },
    }
}

fn candidate_indices(branch: Branch, z: Complex64, model: &Model) -> Vec<u32> {
    let d = &model.derived;
    let centre = match branch {
        Branch::One => z.re.max(0.0) * d.c1 / PI,
        Branch::Two => z.re.max(0.0).sqrt() * d.c3 / PI + 0.25,
    };
    let n0 = centre.round() as i64;
    let lowest = if branch == Branch::One { 0 } else { 1 };
    ((n0 - 1).max(lowest)..=(n0 + 1).max(lowest)).map(|n| n as u32).collect()
}

/// Assigns (branch, n) labels by greedy nearest match to the asymptotic
/// predictions. Points with negative real part are matched through −λ̄;
/// each prediction is used at most once per half plane.
pub fn classify(values: &[Complex64], model: &Model, opts: &SpectrumOptions) -> Vec<Option<(Branch, u32, Option<bool>)>> {
    let mut pairs: Vec<(f64, usize, Branch, u32, Option<bool>)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let z = if v.re >= 0.0 { v } else { -v.conj() };
        for branch in [Branch::One, Branch::Two] {
            for n in candidate_indices(branch, z, model) {
                if let Some((pred, adm)) = branch_prediction(branch, n, model, opts) {
                    let dist = (z - pred).norm();
                    if dist <= opts.match_radius * local_spacing(branch, n, model) {
                        pairs.push((dist, i, branch, n, adm));
                    }
                }
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut labels = vec![None; values.len()];
    let mut taken = std::collections::HashSet::new();
    for (_, i, branch, n, adm) in pairs {
        let side = values[i].re >= 0.0;
        if labels[i].is_none() && taken.insert((branch, n, side)) {
            labels[i] = Some((branch, n, adm));
        }
    }
    labels
}

fn dedup(mut found: Vec<Found>, rel: f64) -> Vec<Found> {
    found.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    let mut out: Vec<Found> = Vec::with_capacity(found.len());
    for f in found {
        let dup = out
            .iter_mut()
            .find(|g| (g.lambda - f.lambda).norm() <= rel * g.lambda.norm().max(1.0));
        match dup {
            Some(g) if f.residual < g.residual => *g = f,
            Some(_) => {}
            None => out.push(f),
        }
    }
    out
}

/// All dispersion zeros in the region as determinant records.
pub fn find_spectrum(region: &SearchRegion, model: &Model, opts: &SpectrumOptions) -> Result<SpectrumResult> {
    let f = DispersionEvaluator { model };
    let (rect, indices, total) = settle_region(region, &f)?;
    let ctx = Ctx { region, f: &f, indices: &indices, muller: opts.muller };
    let partial = ctx.solve(rect, total, 0);
    let mut found = dedup(partial.found, opts.dedup_rel);
    if opts.mirror && region.rect.re_min >= 0.0 {
        let mirrors: Vec<Found> = found
            .iter()
            .filter(|r| r.lambda.re > 0.0)
            .map(|r| {
                let m = -r.lambda.conj();
                let residual = f.eval(m).map(|s| s.relative()).unwrap_or(f64::NAN);
                Found { lambda: m, residual, multiplicity: r.multiplicity }
            })
            .collect();
        found.extend(mirrors);
    }
    let values: Vec<Complex64> = found.iter().map(|r| r.lambda).collect();
    let labels = classify(&values, model, opts);
    let mut records: Vec<EigenvalueRecord> = found
        .iter()
        .zip(labels)
        .map(|(r, label)| EigenvalueRecord {
            value: r.lambda,
            method: Method::Determinant,
            branch: label.map(|l| l.0),
            n: label.map(|l| l.1),
            residual: r.residual,
            multiplicity: r.multiplicity,
            admissible: label.and_then(|l| l.2),
        })
        .collect();
    sort_records(&mut records);
    Ok(SpectrumResult {
        records,
        unresolved: partial.unresolved,
        total_count: total,
        rect_used: rect,
        exclusion_indices: indices,
        conservation_violations: partial.violations,
    })
}

/// Refines the eigenvalue of the given branch and index from its asymptotic
/// prediction, then certifies it by a winding count of 1 in a box around it.
pub fn track_branch_root(branch: Branch, n: u32, model: &Model, opts: &SpectrumOptions) -> Result<EigenvalueRecord> {
    let (pred, adm) = branch_prediction(branch, n, model, opts)
        .ok_or_else(|| Error::InvalidArgument(format!("no prediction for branch {} n = {n}", branch.number())))?;
    let spacing = local_spacing(branch, n, model);
    let f = DispersionEvaluator { model };
    let mopts = MullerOptions {
        step_limit: 0.25 * spacing,
        spread: 1e-3 * pred.norm().max(1.0),
        ..opts.muller
    };
    let r = refine_root(pred, &f, &mopts)?.into_result(pred)?;
    let mut h = (0.25 * spacing).min(0.4 * PI / model.derived.c1);
    for _ in 0..7 {
        let rect = Rect {
            re_min: r.lambda.re - h,
            re_max: r.lambda.re + h,
            im_min: (r.lambda.im - h).max(-0.9),
            im_max: r.lambda.im + h,
        };
        if let Ok(region) = SearchRegion::new(rect, model) {
            if let Ok(1) = super::winding::count_zeros(&region, &f) {
                return Ok(EigenvalueRecord {
                    value: r.lambda,
                    method: Method::Determinant,
                    branch: Some(branch),
                    n: Some(n),
                    residual: r.residual,
                    multiplicity: 1,
                    admissible: adm,
                });
            }
        }
        h *= 0.5;
    }
    Err(Error::CertificationFailed { lambda: r.lambda })
}
