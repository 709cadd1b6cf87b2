//! The combined operator-setting and spectrum checks behind `harvester checks`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::energy::{energy_inner_product, norm_constants, norm_equivalence_sweep, product_norm1, NormSweep};
use super::spectrum_checks::{spectrum_property_check, CheckEntry, SpectrumCheckOptions, SpectrumCheckReport};
use super::state::StateFunction;
use crate::dispersion::dispersion_function;
use crate::eigensolver::inverse::{apply_inverse, apply_operator, inverse_power_iteration, right_end_defects};
use crate::eigensolver::{find_spectrum, SearchRegion, SpectrumOptions};
use crate::error::Result;
use crate::model::{BeamParameters, Model};

pub const SESQUILINEAR_TOL: f64 = 1e-12;
pub const INVERSE_RESIDUAL_TOL: f64 = 1e-7;
pub const INVERSE_GRID: usize = 512;
pub const DOMAIN_DEFECT_TOL: f64 = 1e-8;
pub const ROOT_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChecksReport {
    pub checks: Vec<CheckEntry>,
    pub norm_sweep: NormSweep,
    pub spectrum: SpectrumCheckReport,
}

impl ChecksReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, passed: bool, measured: f64, tolerance: f64, detail: impl Into<String>) -> CheckEntry {
    CheckEntry { name: name.into(), passed, measured, tolerance, detail: detail.into() }
}

fn random_scalar(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn inner_product_checks(p: &BeamParameters, pairs: usize, seed: u64) -> Result<Vec<CheckEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut min_energy, mut asym, mut lin, mut cs) = (f64::INFINITY, 0.0f64, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..pairs {
        let f = StateFunction::random_admissible(&mut rng, p.L, 32, 12);
        let g = StateFunction::random_admissible(&mut rng, p.L, 32, 12);
        let h = StateFunction::random_admissible(&mut rng, p.L, 32, 12);
        let (a, b) = (random_scalar(&mut rng), random_scalar(&mut rng));
        let ff = energy_inner_product(&f, &f, p)?.re;
        let gg = energy_inner_product(&g, &g, p)?.re;
        let fg = energy_inner_product(&f, &g, p)?;
        let gf = energy_inner_product(&g, &f, p)?;
        min_energy = min_energy.min(ff / product_norm1(&f)?);
        asym = asym.max((fg - gf.conj()).norm());
        let combo = f.combine(a, &g, b)?;
        let lhs = energy_inner_product(&combo, &h, p)?;
        let rhs = a * energy_inner_product(&f, &h, p)? + b * energy_inner_product(&g, &h, p)?;
        let scale = (a.norm() + b.norm()) * (ff.max(gg)).sqrt() * energy_inner_product(&h, &h, p)?.re.sqrt();
        lin = lin.max((lhs - rhs).norm() / scale);
        cs = cs.max(fg.norm_sqr() / (ff * gg) - 1.0);
    }
    Ok(vec![
        check("energy_positive", min_energy > 0.0, min_energy, 0.0, "min <f,f>/|f|_1^2 over random states"),
        check("conjugate_symmetry", asym == 0.0, asym, 0.0, "max |<f,g> - conj <g,f>|"),
        check("sesquilinearity", lin <= SESQUILINEAR_TOL, lin, SESQUILINEAR_TOL, "relative defect of additivity and homogeneity in the first slot"),
        check("cauchy_schwarz", cs <= SESQUILINEAR_TOL, cs, SESQUILINEAR_TOL, "max |<f,g>|^2 / (<f,f><g,g>) - 1"),
    ])
}

fn norm_checks(p: &BeamParameters, sweep: &NormSweep) -> Vec<CheckEntry> {
    let k = norm_constants(p);
    let limit = p.m.min(p.J);
    let along_ray: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|h| norm_constants(&BeamParameters { S: limit - h, ..*p }).lower / h)
        .collect();
    let linear = (along_ray[1] - along_ray[2]).abs() <= 1e-9 * along_ray[2];
    vec![
        check(
            "norm_equivalence",
            sweep.violations.is_empty(),
            sweep.violations.len() as f64,
            0.0,
            format!("{} samples, c = {}, C = {}, observed ratios in [{}, {}]", sweep.samples, k.lower, k.upper, sweep.min_ratio, sweep.max_ratio),
        ),
        check(
            "lower_constant_vanishes_linearly",
            linear,
            along_ray[2],
            1e-9,
            "c / (min(m,J) - S) along S -> min(m,J)",
        ),
    ]
}

fn inverse_checks(model: &Model, samples: usize, seed: u64) -> Result<Vec<CheckEntry>> {
    let p = model.raw();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (mut worst, mut defect) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let g = StateFunction::random_admissible(&mut rng, p.L, INVERSE_GRID, 24);
        let f = apply_inverse(&g, model)?;
        let res = apply_operator(&f, model).combine(Complex64::new(1.0, 0.0), &g, Complex64::new(-1.0, 0.0))?;
        worst = worst.max((product_norm1(&res)? / product_norm1(&g)?).sqrt());
        defect = defect.max(f.membership_defect());
        for d in right_end_defects(&f, model) {
            defect = defect.max(d.norm());
        }
    }
    let pi = inverse_power_iteration(model, 64, 300, seed)?;
    let root = dispersion_function(pi.lambda, model).map(|d| d.relative()).unwrap_or(f64::INFINITY);
    Ok(vec![
        check("inverse_residual", worst <= INVERSE_RESIDUAL_TOL, worst, INVERSE_RESIDUAL_TOL, format!("|A f - g|_1 / |g|_1 on {INVERSE_GRID} grid points")),
        check("inverse_domain", defect <= DOMAIN_DEFECT_TOL, defect, DOMAIN_DEFECT_TOL, "boundary conditions of A^-1 g"),
        check(
            "inverse_power_iteration",
            root <= ROOT_RESIDUAL_TOL,
            root,
            ROOT_RESIDUAL_TOL,
            format!("lowest eigenvalue {} is a dispersion zero", pi.lambda),
        ),
    ])
}

/// Runs every check on the model. `samples` random states feed the norm
/// sweep; a tenth of them (at least one) feed the inverse residual test.
pub fn run_checks(model: &Model, samples: usize, seed: u64, region: &SearchRegion) -> Result<ChecksReport> {
    let p = model.raw();
    let sweep = norm_equivalence_sweep(samples, p, seed)?;
    let mut checks = norm_checks(p, &sweep);
    checks.extend(inner_product_checks(p, samples.div_ceil(2), seed.wrapping_add(1))?);
    checks.extend(inverse_checks(model, (samples / 10).max(1), seed)?);
    let spec = find_spectrum(region, model, &SpectrumOptions::default())?;
    let worst = spec.records.iter().map(|r| r.residual).fold(0.0, f64::max);
    checks.push(check(
        "determinant_residuals",
        worst <= ROOT_RESIDUAL_TOL && spec.unresolved.is_empty(),
        worst,
        ROOT_RESIDUAL_TOL,
        format!("{} records, {} unresolved boxes", spec.records.len(), spec.unresolved.len()),
    ));
    let spectrum = spectrum_property_check(&spec.records, model, &SpectrumCheckOptions::default());
    checks.extend(spectrum.checks.iter().cloned());
    Ok(ChecksReport { checks, norm_sweep: sweep, spectrum })
}
