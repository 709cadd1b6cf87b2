//! Eigenvalue shifts under changes of the piezo parameters, compared with the
//! size of the second-order asymptotic corrections.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{perturbed_branch1, perturbed_branch2, Branch};
use crate::eigensolver::{find_spectrum, EigenvalueRecord, SearchRegion, SpectrumOptions};
use crate::error::{Error, Result};
use crate::fit::{fit_power_law, PowerFit};
use crate::model::{Model, PiezoParameters};

/// Fewest matched pairs per branch for a meaningful exponent fit.
pub const MIN_PAIRS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationPair {
    pub n: u32,
    pub base: Complex64,
    pub perturbed: Complex64,
    pub shift: f64,
    /// |w λ̃| at index n for the baseline parameters.
    pub second_order_mag: f64,
    pub ratio: f64,
    pub admissible: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPerturbation {
    pub branch: Branch,
    pub pairs: Vec<PerturbationPair>,
    pub shift_fit: Option<PowerFit>,
    pub second_order_fit: Option<PowerFit>,
    pub ratio_fit: Option<PowerFit>,
}

impl BranchPerturbation {
    /// Shift/second-order ratio decays with n (negative fitted slope).
    pub fn ratio_decreasing(&self) -> bool {
        self.ratio_fit.is_some_and(|f| f.exponent < 0.0)
    }

    /// Shift exponent at least `margin` below the second-order exponent.
    pub fn dominated_by(&self, margin: f64) -> bool {
        match (self.shift_fit, self.second_order_fit) {
            (Some(s), Some(c)) => s.exponent <= c.exponent - margin,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub baseline: PiezoParameters,
    pub perturbed: PiezoParameters,
    pub branches: Vec<BranchPerturbation>,
}

fn second_order_mag(branch: Branch, n: u32, model: &Model, opts: &SpectrumOptions) -> Option<(f64, Option<bool>)> {
    let b = match branch {
        Branch::One => perturbed_branch1(n, &opts.admissibility, model).ok()?,
        Branch::Two => perturbed_branch2(n, &opts.newton, model).ok()?,
    };
    Some(((b.correction_w * b.lambda_unperturbed).norm(), b.admissible))
}

fn positive_labelled(records: &[EigenvalueRecord], branch: Branch) -> Vec<&EigenvalueRecord> {
    records.iter().filter(|r| r.value.re > 0.0 && r.branch == Some(branch)).collect()
}

/// Pairs base and perturbed roots that carry the same (branch, n) label and
/// are mutual nearest neighbours among the labelled roots of that branch.
fn match_branch(
    branch: Branch,
    base: &[EigenvalueRecord],
    pert: &[EigenvalueRecord],
    model: &Model,
    opts: &SpectrumOptions,
) -> BranchPerturbation {
    let b = positive_labelled(base, branch);
    let p = positive_labelled(pert, branch);
    let nearest = |z: Complex64, set: &[&EigenvalueRecord]| {
        set.iter().min_by(|x, y| (x.value - z).norm().total_cmp(&(y.value - z).norm())).map(|r| r.value)
    };
    let mut pairs = Vec::new();
    for rb in &b {
        let Some(n) = rb.n else { continue };
        let Some(rp) = p.iter().find(|r| r.n == Some(n)) else { continue };
        if nearest(rb.value, &p) != Some(rp.value) || nearest(rp.value, &b) != Some(rb.value) {
            continue;
        }
        let Some((mag, admissible)) = second_order_mag(branch, n, model, opts) else { continue };
        let shift = (rp.value - rb.value).norm();
        pairs.push(PerturbationPair {
            n,
            base: rb.value,
            perturbed: rp.value,
            shift,
            second_order_mag: mag,
            ratio: shift / mag,
            admissible,
        });
    }
    pairs.sort_by_key(|q| q.n);
    let xs: Vec<f64> = pairs.iter().map(|q| q.n as f64).collect();
    let col = |f: fn(&PerturbationPair) -> f64| -> Option<PowerFit> {
        let ys: Vec<f64> = pairs.iter().map(f).collect();
        fit_power_law(&xs, &ys).ok()
    };
    BranchPerturbation {
        branch,
        shift_fit: col(|q| q.shift),
        second_order_fit: col(|q| q.second_order_mag),
        ratio_fit: col(|q| q.ratio),
        pairs,
    }
}

/// Compares the spectrum of the base model with the spectra obtained by
/// swapping in each piezo set. Fails with `MatchingFailed` when a branch of
/// some set has fewer than `MIN_PAIRS` matched pairs.
pub fn perturbation_sweep(
    base: &Model,
    piezo_sets: &[PiezoParameters],
    region: &SearchRegion,
    opts: &SpectrumOptions,
) -> Result<Vec<PerturbationReport>> {
    let base_spec = find_spectrum(region, base, opts)?;
    piezo_sets
        .par_iter()
        .map(|set| {
            let model = base.with_piezo(*set)?;
            let mut reg = region.clone();
            reg.exclusions[0].center = model.params.pole();
            reg.check_disks(&reg.rect)?;
            let spec = find_spectrum(&reg, &model, opts)?;
            let branches: Vec<BranchPerturbation> = [Branch::One, Branch::Two]
                .into_iter()
                .map(|b| match_branch(b, &base_spec.records, &spec.records, base, opts))
                .collect();
            for b in &branches {
                if b.pairs.len() < MIN_PAIRS {
                    return Err(Error::MatchingFailed { pairs: b.pairs.len(), required: MIN_PAIRS });
                }
            }
            Ok(PerturbationReport { baseline: base.raw().piezo(), perturbed: *set, branches })
        })
        .collect()
}
