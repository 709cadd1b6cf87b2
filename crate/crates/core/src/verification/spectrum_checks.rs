//! Structural checks on a computed spectrum.

use num_complex::Complex64;
use serde::Serialize;

use crate::asymptotics::{perturbed_branch1, perturbed_branch2, AdmissibilityOptions, Branch, NewtonOptions};
use crate::dispersion::POLE_EXCLUSION_RADIUS;
use crate::eigensolver::region::Disk;
use crate::eigensolver::winding::{winding_with_retry, DispersionEvaluator};
use crate::eigensolver::EigenvalueRecord;
use crate::model::{Model, PiezoParameters};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumCheckReport {
    pub checks: Vec<CheckEntry>,
    /// Records with Re ≠ 0 whose mirror −λ̄ is missing.
    pub mirror_orphans: Vec<Complex64>,
    /// Records with Im ≤ 0 (only filled for balanced coupling).
    pub nonpositive_imag: Vec<Complex64>,
    pub pole_disk_index: Option<i64>,
    pub records_in_pole_disk: Vec<Complex64>,
    pub piezo_mismatches: Vec<(Branch, u32)>,
    pub min_spacing: f64,
}

impl SpectrumCheckReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumCheckOptions {
    /// Relative tolerance for mirror partners.
    pub mirror_tol: f64,
    /// Refinement tolerance in λ; minimum spacing must exceed ten times this.
    pub refinement_tol: f64,
    /// Alternative piezo set for the invariance replay.
    pub alt_piezo: Option<PiezoParameters>,
}

impl Default for SpectrumCheckOptions {
    fn default() -> Self {
        SpectrumCheckOptions { mirror_tol: 1e-8, refinement_tol: 1e-8, alt_piezo: None }
    }
}

/// Winding index of the rescaled determinant around the circuit pole when no
/// eigenvalue hides in the exclusion disk: the pole is simple.
pub const POLE_ORDER: i64 = -1;

fn entry(name: &str, passed: bool, measured: f64, tolerance: f64, detail: String) -> CheckEntry {
    CheckEntry { name: name.into(), passed, measured, tolerance, detail }
}

/// Mirror closure, positivity of imaginary parts under balanced coupling,
/// the pole disk, piezo invariance of the second-order predictions and
/// discreteness.
pub fn spectrum_property_check(
    records: &[EigenvalueRecord],
    model: &Model,
    opts: &SpectrumCheckOptions,
) -> SpectrumCheckReport {
    let mut checks = Vec::new();

    let mirror_orphans: Vec<Complex64> = records
        .iter()
        .map(|r| r.value)
        .filter(|v| v.re != 0.0)
        .filter(|v| {
            let m = -v.conj();
            !records.iter().any(|s| (s.value - m).norm() <= opts.mirror_tol * v.norm().max(1.0))
        })
        .collect();
    checks.push(entry(
        "mirror_closure",
        mirror_orphans.is_empty(),
        mirror_orphans.len() as f64,
        0.0,
        format!("{} records without a mirror partner", mirror_orphans.len()),
    ));

    let balanced = model.params.is_balanced();
    let nonpositive_imag: Vec<Complex64> = if balanced {
        records.iter().map(|r| r.value).filter(|v| v.im <= 0.0).collect()
    } else {
        Vec::new()
    };
    let min_im = records.iter().map(|r| r.value.im).fold(f64::INFINITY, f64::min);
    checks.push(entry(
        "positive_imaginary_part",
        nonpositive_imag.is_empty(),
        min_im,
        0.0,
        if balanced {
            format!("{} records with Im <= 0", nonpositive_imag.len())
        } else {
            "not applicable: CI != -CD".into()
        },
    ));

    let pole = model.params.pole();
    let disk = Disk { center: pole, radius: POLE_EXCLUSION_RADIUS };
    let f = DispersionEvaluator { model };
    let step = 0.25 / model.derived.c1.max(model.derived.c3).max(1.0);
    let pole_disk_index = winding_with_retry(&disk.guard(), &f, 32, step).ok();
    let records_in_pole_disk: Vec<Complex64> =
        records.iter().map(|r| r.value).filter(|v| disk.contains(*v)).collect();
    checks.push(entry(
        "pole_disk",
        pole_disk_index == Some(POLE_ORDER) && records_in_pole_disk.is_empty(),
        pole_disk_index.map_or(f64::NAN, |k| k as f64),
        0.0,
        match pole_disk_index {
            Some(k) => format!(
                "winding index {k} around the exclusion disk at {pole}, so {} zeros hide inside",
                k - POLE_ORDER
            ),
            None => "winding around the exclusion disk could not be measured".into(),
        },
    ));

    let alt = opts.alt_piezo.unwrap_or_else(|| {
        let p = model.raw().piezo();
        PiezoParameters { Cp: 2.0 * p.Cp, R: 3.0 * p.R, CD: 2.0 * p.CD, CI: 2.0 * p.CI }
    });
    let mut piezo_mismatches = Vec::new();
    match model.with_piezo(alt) {
        Ok(other) => {
            let mut pairs: Vec<(Branch, u32)> = records
                .iter()
                .filter_map(|r| Some((r.branch?, r.n?)))
                .collect();
            if pairs.is_empty() {
                pairs = (1..=10).flat_map(|n| [(Branch::One, n), (Branch::Two, n)]).collect();
            }
            pairs.sort();
            pairs.dedup();
            let adm = AdmissibilityOptions::default();
            let nt = NewtonOptions::default();
            for (b, n) in pairs {
                let same = match b {
                    Branch::One => perturbed_branch1(n, &adm, model).ok().map(|x| x.lambda_perturbed)
                        == perturbed_branch1(n, &adm, &other).ok().map(|x| x.lambda_perturbed),
                    Branch::Two => perturbed_branch2(n, &nt, model).ok().map(|x| x.lambda_perturbed)
                        == perturbed_branch2(n, &nt, &other).ok().map(|x| x.lambda_perturbed),
                };
                if !same {
                    piezo_mismatches.push((b, n));
                }
            }
            checks.push(entry(
                "piezo_invariance",
                piezo_mismatches.is_empty(),
                piezo_mismatches.len() as f64,
                0.0,
                "second-order predictions compared bit for bit under a piezo change".into(),
            ));
        }
        Err(e) => checks.push(entry("piezo_invariance", false, f64::NAN, 0.0, e.to_string())),
    }

    let mut min_spacing = f64::INFINITY;
    for (i, a) in records.iter().enumerate() {
        for b in &records[i + 1..] {
            min_spacing = min_spacing.min((a.value - b.value).norm());
        }
    }
    let floor = 10.0 * opts.refinement_tol;
    checks.push(entry(
        "discreteness",
        min_spacing > floor,
        min_spacing,
        floor,
        "minimum distance between distinct records".into(),
    ));

    SpectrumCheckReport {
        checks,
        mirror_orphans,
        nonpositive_imag,
        pole_disk_index,
        records_in_pole_disk,
        piezo_mismatches,
        min_spacing,
    }
}
