//! The `harvester` command line.
//!
//! Exit codes: 0 success, 1 a run that completed but failed its own checks
//! or could not write output, 2 partial results (unresolved boxes or
//! refinements that did not converge), 3 invalid input.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::asymptotics::{
    unperturbed_branch, AdmissibilityOptions, Branch, BranchEigenvalue,
    NewtonOptions,
};
use crate::charroots::{characteristic_roots_asymptotic, characteristic_roots_exact, sextic_residual, ASYMPTOTIC_FLOOR};
use crate::dispersion::{dispersion_function, POLE_EXCLUSION_RADIUS};
use crate::eigensolver::collocation::collocation_eigenvalues;
use crate::eigensolver::inverse::{apply_inverse, apply_operator, right_end_defects};
use crate::eigensolver::spectrum::branch_prediction;
use crate::eigensolver::{find_spectrum, track_branch_root, EigenvalueRecord, Rect, SearchRegion, SpectrumOptions};
use crate::error::Error;
use crate::fit::fit_power_law;
use crate::model::{BeamParameters, Model, PiezoParameters, Strictness};
use crate::output::{self, render, Cell, Format, Header, Table};
use crate::verification::energy::product_norm1;
use crate::verification::perturbation::perturbation_sweep;
use crate::verification::state::StateFunction;
use crate::verification::suite::{run_checks, DOMAIN_DEFECT_TOL, INVERSE_RESIDUAL_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

/// Environment variable capping the worker threads (0 or unset means one
/// per core).
pub const THREADS_ENV: &str = "HARVESTER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "harvester", version, about = "Spectrum of the piezoelectric bending-torsion beam harvester")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BranchArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

impl BranchArg {
    fn branches(self) -> Vec<Branch> {
        match self {
            BranchArg::One => vec![Branch::One],
            BranchArg::Two => vec![Branch::Two],
            BranchArg::Both => vec![Branch::One, Branch::Two],
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// Parameter file with one `key = value` line per constant.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Reject parameter sets with CI != -CD.
    #[arg(long)]
    require_balanced: bool,
    /// Reject parameter sets with k2 <= sqrt(GJ).
    #[arg(long)]
    require_branch1: bool,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Also write a gnuplot script next to the output file.
    #[arg(long)]
    gnuplot_script: bool,
}

#[derive(Debug, Args)]
struct Tolerances {
    /// Lower bound on |g2| for admissible branch-1 indices.
    #[arg(long, default_value = "0.1", value_parser = positive)]
    delta_g2: f64,
    /// Residual tolerance of the branch-2 Newton iteration.
    #[arg(long, default_value = "1e-12", value_parser = positive)]
    newton_tol: f64,
}

impl Tolerances {
    fn admissibility(&self) -> AdmissibilityOptions {
        AdmissibilityOptions { delta: self.delta_g2, ..Default::default() }
    }

    fn newton(&self) -> NewtonOptions {
        NewtonOptions { tol: self.newton_tol, ..Default::default() }
    }

    fn spectrum(&self) -> SpectrumOptions {
        SpectrumOptions { admissibility: self.admissibility(), newton: self.newton(), ..Default::default() }
    }

    fn record(&self, h: &mut Header) {
        h.set_float("delta_g2", self.delta_g2);
        h.set_float("newton_tol", self.newton_tol);
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a parameter set and print the derived constants.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// The six characteristic roots at one lambda.
    Roots {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = complex, allow_hyphen_values = true, value_name = "RE,IM")]
        lambda: Complex64,
        /// Also list the large-lambda expansions.
        #[arg(long)]
        asymptotic: bool,
    },
    /// The rescaled dispersion determinant at one point or on a grid.
    Dispersion {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = complex, allow_hyphen_values = true, value_name = "RE,IM", conflicts_with = "region")]
        lambda: Option<Complex64>,
        #[arg(long, value_parser = rect, allow_hyphen_values = true, value_name = "A,B,C,D")]
        region: Option<Rect>,
        /// Grid points along the real and imaginary axes.
        #[arg(long, value_parser = steps, default_value = "41,41", value_name = "NX,NY")]
        steps: (usize, usize),
    },
    /// Unperturbed and perturbed branch eigenvalues.
    Asymptotic {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "both")]
        branch: BranchArg,
        #[arg(long, default_value = "1", value_parser = clap::value_parser!(u32).range(1..))]
        n_min: u32,
        #[arg(long, default_value = "40", value_parser = clap::value_parser!(u32).range(1..))]
        n_max: u32,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Every eigenvalue in a rectangle, by the argument principle.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = rect, allow_hyphen_values = true, default_value = "0.3,120,-0.5,8", value_name = "A,B,C,D")]
        region: Rect,
        /// Largest relative determinant residual of an accepted root.
        #[arg(long, default_value = "1e-8", value_parser = positive)]
        residual_tol: f64,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Asymptotic predictions against tracked determinant roots.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "both")]
        branch: BranchArg,
        #[arg(long, default_value = "1", value_parser = clap::value_parser!(u32).range(1..))]
        n_min: u32,
        #[arg(long, default_value = "40", value_parser = clap::value_parser!(u32).range(1..))]
        n_max: u32,
        /// Skip the collocation cross-check.
        #[arg(long)]
        no_collocation: bool,
        /// Coarse collocation grid; the fine grid has 5/4 as many points.
        #[arg(long, default_value = "128", value_parser = clap::value_parser!(u32).range(32..))]
        collocation_n: u32,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Eigenvalue shifts under changes of the piezo parameters.
    Perturb {
        #[command(flatten)]
        common: Common,
        /// Lines of `Cp R CD CI`; defaults to one set (2Cp, 3R, 2CD, 2CI).
        #[arg(long, value_name = "FILE")]
        piezo_grid: Option<PathBuf>,
        #[arg(long, value_parser = rect, allow_hyphen_values = true, default_value = "0.3,700,-0.5,8", value_name = "A,B,C,D")]
        region: Rect,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Operator-setting and spectrum checks, written as a JSON report.
    Checks {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "100", value_parser = clap::value_parser!(u32).range(1..))]
        samples: u32,
        #[arg(long, default_value = "0")]
        seed: u64,
        #[arg(long, value_parser = rect, allow_hyphen_values = true, default_value = "0.3,120,-0.5,8", value_name = "A,B,C,D")]
        region: Rect,
    },
    /// Residual of the explicit inverse on random smooth states.
    InverseCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "512", value_parser = clap::value_parser!(u32).range(16..))]
        grid: u32,
        #[arg(long, default_value = "10", value_parser = clap::value_parser!(u32).range(1..))]
        samples: u32,
        /// Chebyshev degree of the random states.
        #[arg(long, default_value = "24", value_parser = clap::value_parser!(u32).range(2..))]
        degree: u32,
        #[arg(long, default_value = "0")]
        seed: u64,
    },
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn numbers(s: &str, count: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != count {
        return Err(format!("expected {count} comma-separated numbers, got `{s}`"));
    }
    parts
        .iter()
        .map(|p| match p.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("`{p}` is not a finite number")),
        })
        .collect()
}

fn complex(s: &str) -> Result<Complex64, String> {
    let v = numbers(s, 2)?;
    Ok(Complex64::new(v[0], v[1]))
}

fn rect(s: &str) -> Result<Rect, String> {
    let v = numbers(s, 4)?;
    Rect::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())
}

fn steps(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => match (a.trim().parse::<usize>(), b.trim().parse::<usize>()) {
            (Ok(x), Ok(y)) if x >= 1 && y >= 1 => Ok((x, y)),
            _ => Err(format!("expected two positive integers, got `{s}`")),
        },
        _ => Err(format!("expected NX,NY, got `{s}`")),
    }
}

fn rect_text(r: &Rect) -> String {
    [r.re_min, r.re_max, r.im_min, r.im_max].map(output::float_text).join(",")
}

fn complex_text(z: Complex64) -> String {
    format!("{},{}", output::float_text(z.re), output::float_text(z.im))
}

/// How a run ended, before it becomes an exit code.
#[derive(Debug)]
enum Outcome {
    Done(String),
    Partial(String),
    Failed(String),
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Partial(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Partial(_) => EXIT_PARTIAL,
            Failure::Runtime(_) => EXIT_FAILED,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Partial(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::NotConverged { .. }
            | Error::CertificationFailed { .. }
            | Error::NewtonDivergence { .. }
            | Error::ResolutionInsufficient
            | Error::MatchingFailed { .. }
            | Error::PhaseUndersampled { .. } => Failure::Partial(m),
            Error::Io { .. }
            | Error::GridTooCoarse { .. }
            | Error::GridMismatch
            | Error::DegenerateDenominator(_) => Failure::Runtime(m),
            _ => Failure::Usage(m),
        }
    }
}

type Run = std::result::Result<Outcome, Failure>;

fn load_model(common: &Common) -> std::result::Result<Model, Failure> {
    let raw = match &common.config {
        Some(p) => BeamParameters::from_file(p).map_err(|e| Failure::Usage(format!("--config: {e}")))?,
        None => BeamParameters::default(),
    };
    let flags = Strictness { require_balanced: common.require_balanced, require_branch1: common.require_branch1 };
    Model::new(raw, flags).map_err(|e| Failure::Usage(format!("--config: {e}")))
}

fn format_of(common: &Common) -> Format {
    match common.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    }
}

/// Renders the tables to `--out` (atomically) or standard output, plus the
/// optional gnuplot script plotting column `y` against `x`.
fn emit(common: &Common, header: &Header, tables: &[Table], plot: Option<(&str, &str)>) -> std::result::Result<(), Failure> {
    emit_to(common, common.out.as_deref(), header, tables, plot)
}

fn emit_to(
    common: &Common,
    out: Option<&Path>,
    header: &Header,
    tables: &[Table],
    plot: Option<(&str, &str)>,
) -> std::result::Result<(), Failure> {
    let text = render(header, tables, format_of(common));
    if common.gnuplot_script {
        let out = out
            .ok_or_else(|| Failure::Usage("--gnuplot-script needs --out".into()))?;
        if format_of(common) != Format::Csv {
            return Err(Failure::Usage("--gnuplot-script needs --format csv".into()));
        }
        let (x, y) = plot.ok_or_else(|| {
            Failure::Usage(format!("--gnuplot-script is not available for {}", header.subcommand))
        })?;
        let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let script = output::gnuplot_script(&name, &tables[0], x, y).expect("plot columns exist");
        let mut gp = out.as_os_str().to_owned();
        gp.push(".gp");
        output::write_atomic(Path::new(&gp), &script)?;
    }
    match out {
        Some(p) => output::write_atomic(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn validate(common: &Common) -> Run {
    let model = load_model(common)?;
    let header = Header::new("validate", *model.raw());
    let mut t = Table::new(&["name", "re", "im"]);
    let r = model.raw();
    for key in crate::model::PARAMETER_KEYS {
        t.push(vec![key.into(), r.get(key).unwrap().into(), 0.0.into()]);
    }
    let d = &model.derived;
    let real = [
        ("D", d.D),
        ("alpha", d.alpha),
        ("beta", d.beta),
        ("gamma", d.gamma),
        ("a1", d.a1),
        ("a2", d.a2),
        ("a3", d.a3),
        ("a4", d.a4),
        ("c1", d.c1),
        ("c2", d.c2),
        ("c3", d.c3),
        ("c4", d.c4),
    ];
    for (k, v) in real {
        t.push(vec![k.into(), v.into(), 0.0.into()]);
    }
    let b = &model.boundary;
    let cplx = [
        ("d1", b.d1),
        ("dhat2", b.dhat2),
        ("d2", b.d2),
        ("r11", b.r11),
        ("rhat11", b.rhat11),
        ("rtilde11", b.rtilde11),
        ("r12", b.r12),
        ("rhat12", b.rhat12),
        ("rhat13", b.rhat13),
        ("r21", b.r21),
        ("r22", b.r22),
        ("rhat22", b.rhat22),
        ("r23", b.r23),
        ("pole", model.params.pole()),
    ];
    for (k, v) in cplx {
        t.push(vec![k.into(), v.re.into(), v.im.into()]);
    }
    t.notes.push(format!("balanced (CI = -CD): {}", model.params.is_balanced()));
    t.notes.push(format!("branch 1 exists (k2 > sqrt(GJ)): {}", model.params.satisfies_branch1()));
    emit(common, &header, &[t], None)?;
    Ok(Outcome::Done(format!("validate: parameters valid, D = {}", output::float_text(d.D))))
}

fn roots(common: &Common, lambda: Complex64, asymptotic: bool) -> Run {
    let model = load_model(common)?;
    let mut header = Header::new("roots", *model.raw());
    header.set("lambda", complex_text(lambda));
    header.set("asymptotic", asymptotic);
    let exact = characteristic_roots_exact(lambda, &model.derived).map_err(|e| Failure::Usage(format!("--lambda: {e}")))?;
    let mut sets = vec![("exact", exact)];
    if asymptotic {
        let a = characteristic_roots_asymptotic(lambda, &model.derived, ASYMPTOTIC_FLOOR)
            .map_err(|e| Failure::Usage(format!("--lambda: {e}")))?;
        sets.push(("asymptotic", a));
    }
    let mut t = Table::new(&["kind", "j", "re", "im", "residual"]);
    let mut worst: f64 = 0.0;
    for (kind, roots) in &sets {
        for j in 1..=6 {
            let z = roots.get(j);
            let (value, scale) = sextic_residual(z, lambda, &model);
            let rel = value / scale;
            if *kind == "exact" {
                worst = worst.max(rel);
            }
            t.push(vec![(*kind).into(), (j as u32).into(), z.re.into(), z.im.into(), rel.into()]);
        }
    }
    t.notes.push(format!("label confidence {}", output::float_text(exact.label_confidence)));
    t.notes.push(format!("degenerate cubic roots: {}", exact.degenerate));
    emit(common, &header, &[t], Some(("re", "im")))?;
    Ok(Outcome::Done(format!("roots: six roots at {lambda}, worst relative sextic residual {worst:.2e}")))
}

fn dispersion(common: &Common, lambda: Option<Complex64>, region: Option<Rect>, steps: (usize, usize)) -> Run {
    let model = load_model(common)?;
    let mut header = Header::new("dispersion", *model.raw());
    let points: Vec<Complex64> = match (lambda, region) {
        (Some(z), _) => {
            header.set("lambda", complex_text(z));
            vec![z]
        }
        (None, Some(r)) => {
            header.set("region", rect_text(&r));
            header.set("steps", format!("{},{}", steps.0, steps.1));
            let at = |lo: f64, hi: f64, k: usize, m: usize| if m == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * k as f64 / (m - 1) as f64 };
            (0..steps.1)
                .flat_map(|j| (0..steps.0).map(move |i| (i, j)))
                .map(|(i, j)| Complex64::new(at(r.re_min, r.re_max, i, steps.0), at(r.im_min, r.im_max, j, steps.1)))
                .collect()
        }
        (None, None) => return Err(Failure::Usage("dispersion needs --lambda or --region".into())),
    };
    let values: Vec<_> = points.par_iter().map(|&z| (z, dispersion_function(z, &model))).collect();
    if let [(_, Err(e))] = values.as_slice() {
        return Err(Failure::Usage(format!("--lambda: {e}")));
    }
    let pole = model.params.pole();
    let mut t = Table::new(&["re(lambda)", "im(lambda)", "re(value)", "im(value)", "abs(value)", "condition", "near_pole"]);
    let mut failed = Vec::new();
    for (z, v) in &values {
        match v {
            Ok(d) => t.push(vec![
                z.re.into(),
                z.im.into(),
                d.value.re.into(),
                d.value.im.into(),
                d.value.norm().into(),
                d.condition.into(),
                d.near_pole.into(),
            ]),
            Err(e) => {
                let near = (z - pole).norm() < POLE_EXCLUSION_RADIUS;
                t.push(vec![z.re.into(), z.im.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), near.into()]);
                failed.push(format!("{}: {e}", complex_text(*z)));
            }
        }
    }
    for f in &failed {
        t.notes.push(format!("not evaluated at {f}"));
    }
    emit(common, &header, &[t], Some(("re(lambda)", "abs(value)")))?;
    Ok(Outcome::Done(format!("dispersion: {} points, {} not evaluated", values.len(), failed.len())))
}

fn branch_row(branch: Branch, n: u32, res: &crate::Result<BranchEigenvalue>, model: &Model) -> Vec<Cell> {
    match res {
        Ok(b) => vec![
            (branch.number() as u32).into(),
            n.into(),
            b.lambda_unperturbed.re.into(),
            b.lambda_unperturbed.im.into(),
            b.correction_w.re.into(),
            b.correction_w.im.into(),
            b.lambda_perturbed.re.into(),
            b.lambda_perturbed.im.into(),
            b.admissible.into(),
        ],
        Err(e) => {
            let lt = unperturbed_branch(branch, n, model).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            let adm = match e {
                Error::G2TooSmall { .. } => Some(false),
                _ => None,
            };
            let nan = f64::NAN;
            vec![
                (branch.number() as u32).into(),
                n.into(),
                lt.re.into(),
                lt.im.into(),
                nan.into(),
                nan.into(),
                nan.into(),
                nan.into(),
                adm.into(),
            ]
        }
    }
}

fn check_range(n_min: u32, n_max: u32) -> std::result::Result<(), Failure> {
    if n_min > n_max {
        return Err(Failure::Usage(format!("--n-min {n_min} exceeds --n-max {n_max}")));
    }
    Ok(())
}

fn asymptotic(common: &Common, branch: BranchArg, n_min: u32, n_max: u32, tol: &Tolerances) -> Run {
    check_range(n_min, n_max)?;
    let model = load_model(common)?;
    let mut header = Header::new("asymptotic", *model.raw());
    header.set("branch", format!("{branch:?}").to_lowercase());
    header.set("n", format!("{n_min}..{n_max}"));
    tol.record(&mut header);
    let mut t = Table::new(&["branch", "n", "re_unpert", "im_unpert", "re_w", "im_w", "re_pert", "im_pert", "admissible"]);
    let (adm, newton) = (tol.admissibility(), tol.newton());
    let mut diverged = 0;
    for b in branch.branches() {
        let rows = crate::asymptotics::branch_sweep(b, n_min..=n_max, &adm, &newton, &model);
        for (n, res) in &rows {
            t.push(branch_row(b, *n, res, &model));
            if let Err(e) = res {
                if matches!(e, Error::NewtonDivergence { .. }) {
                    diverged += 1;
                }
                t.notes.push(format!("branch {} n = {n}: {e}", b.number()));
            }
        }
    }
    emit(common, &header, &[t], Some(("re_pert", "im_pert")))?;
    let msg = format!("asymptotic: {} indices, {diverged} corrections did not converge", branch.branches().len() * (n_max - n_min + 1) as usize);
    Ok(if diverged > 0 { Outcome::Partial(msg) } else { Outcome::Done(msg) })
}

fn record_row(r: &EigenvalueRecord) -> Vec<Cell> {
    vec![
        r.method.label().into(),
        r.branch.map(|b| b.number() as u32).into(),
        r.n.into(),
        r.value.re.into(),
        r.value.im.into(),
        r.residual.into(),
        r.admissible.into(),
        r.multiplicity.into(),
    ]
}

fn search_region(rect: Rect, model: &Model) -> std::result::Result<SearchRegion, Failure> {
    SearchRegion::new(rect, model).map_err(|e| Failure::Usage(format!("--region: {e}")))
}

fn solve(common: &Common, region: Rect, residual_tol: f64, tol: &Tolerances) -> Run {
    let model = load_model(common)?;
    let mut header = Header::new("solve", *model.raw());
    header.set("region", rect_text(&region));
    header.set_float("residual_tol", residual_tol);
    tol.record(&mut header);
    let reg = search_region(region, &model)?;
    let res = find_spectrum(&reg, &model, &tol.spectrum())?;
    let mut t = Table::new(&["method", "branch", "n", "re", "im", "residual", "admissible", "multiplicity"]);
    for r in &res.records {
        t.push(record_row(r));
    }
    t.notes.push(format!("zero count {} in {}", res.total_count, rect_text(&res.rect_used)));
    t.notes.push(format!("exclusion disk indices {:?}", res.exclusion_indices));
    t.notes.push(format!("conservation violations {}", res.conservation_violations));
    for u in &res.unresolved {
        t.notes.push(format!("unresolved box {} with {} zeros: {}", rect_text(&u.rect), u.count, u.reason));
    }
    emit(common, &header, &[t], Some(("re", "im")))?;
    let msg = format!(
        "solve: {} eigenvalues, {} unresolved boxes, zero count {}",
        res.records.len(),
        res.unresolved.len(),
        res.total_count
    );
    Ok(if res.is_partial(residual_tol) { Outcome::Partial(msg) } else { Outcome::Done(msg) })
}

struct CompareRow {
    branch: Branch,
    n: u32,
    tracked: crate::Result<EigenvalueRecord>,
    first: Option<Complex64>,
    second: Option<(Complex64, Option<bool>)>,
}

fn fit_note(label: &str, xs: &[f64], ys: &[f64]) -> String {
    match fit_power_law(xs, ys) {
        Ok(f) => format!(
            "{label}: exponent {} prefactor {} r2 {} over {} points",
            output::float_text(f.exponent),
            output::float_text(f.prefactor),
            output::float_text(f.r_squared),
            f.points
        ),
        Err(e) => format!("{label}: no fit ({e})"),
    }
}

#[allow(clippy::too_many_arguments)]
fn compare(
    common: &Common,
    branch: BranchArg,
    n_min: u32,
    n_max: u32,
    no_collocation: bool,
    collocation_n: u32,
    tol: &Tolerances,
) -> Run {
    check_range(n_min, n_max)?;
    let model = load_model(common)?;
    let mut header = Header::new("compare", *model.raw());
    header.set("branch", format!("{branch:?}").to_lowercase());
    header.set("n", format!("{n_min}..{n_max}"));
    header.set("collocation_n", if no_collocation { "off".to_string() } else { collocation_n.to_string() });
    tol.record(&mut header);
    let opts = tol.spectrum();
    let jobs: Vec<(Branch, u32)> =
        branch.branches().into_iter().flat_map(|b| (n_min..=n_max).map(move |n| (b, n))).collect();
    let (rows, colloc) = rayon::join(
        || {
            jobs.par_iter()
                .map(|&(b, n)| CompareRow {
                    branch: b,
                    n,
                    tracked: track_branch_root(b, n, &model, &opts),
                    first: unperturbed_branch(b, n, &model).ok(),
                    second: branch_prediction(b, n, &model, &opts),
                })
                .collect::<Vec<_>>()
        },
        || (!no_collocation).then(|| collocation_eigenvalues(&model, collocation_n as usize)),
    );
    let colloc: Option<Vec<Complex64>> = match colloc {
        Some(Ok(v)) => Some(v),
        Some(Err(e)) => return Err(e.into()),
        None => None,
    };
    let mut t = Table::new(&[
        "branch",
        "n",
        "re_num",
        "im_num",
        "residual",
        "admissible",
        "re_first",
        "im_first",
        "re_second",
        "im_second",
        "err_first",
        "err_second",
        "err_collocation",
    ]);
    let mut failures = 0;
    type FitColumns = (Branch, Vec<f64>, Vec<f64>, Vec<f64>);
    let mut fits: Vec<FitColumns> = Vec::new();
    for b in branch.branches() {
        fits.push((b, Vec::new(), Vec::new(), Vec::new()));
    }
    for row in &rows {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        let first = row.first.unwrap_or(nan);
        let (second, adm) = row.second.unwrap_or((nan, None));
        let (num, residual) = match &row.tracked {
            Ok(r) => (r.value, r.residual),
            Err(e) => {
                failures += 1;
                t.notes.push(format!("branch {} n = {}: {e}", row.branch.number(), row.n));
                (nan, f64::NAN)
            }
        };
        let scale = first.norm();
        let err_first = (num - first).norm() / scale;
        let err_second = (num - second).norm() / scale;
        let err_colloc = colloc.as_ref().and_then(|c| {
            let near = c.iter().copied().min_by(|a, b| (a - num).norm().total_cmp(&(b - num).norm()))?;
            let spacing = crate::asymptotics::local_spacing(row.branch, row.n, &model);
            ((near - num).norm() < 0.25 * spacing).then(|| (near - num).norm() / num.norm())
        });
        if row.branch == Branch::Two || adm == Some(true) {
            let f = fits.iter_mut().find(|f| f.0 == row.branch).unwrap();
            f.1.push(row.n as f64);
            f.2.push(err_first);
            f.3.push(err_second);
        }
        t.push(vec![
            (row.branch.number() as u32).into(),
            row.n.into(),
            num.re.into(),
            num.im.into(),
            residual.into(),
            adm.into(),
            first.re.into(),
            first.im.into(),
            second.re.into(),
            second.im.into(),
            err_first.into(),
            err_second.into(),
            err_colloc.into(),
        ]);
    }
    for (b, xs, e1, e2) in &fits {
        let set = if *b == Branch::One { "admissible n" } else { "all n" };
        t.notes.push(fit_note(&format!("branch {} first-order error fit ({set})", b.number()), xs, e1));
        t.notes.push(fit_note(&format!("branch {} second-order error fit ({set})", b.number()), xs, e2));
    }
    if let Some(c) = &colloc {
        t.notes.push(format!("collocation eigenvalues kept by the two-grid filter: {}", c.len()));
    }
    emit(common, &header, &[t], Some(("n", "err_second")))?;
    let msg = format!("compare: {} indices, {failures} roots not tracked", rows.len());
    Ok(if failures > 0 { Outcome::Partial(msg) } else { Outcome::Done(msg) })
}

fn parse_piezo_grid(path: &Path) -> std::result::Result<Vec<PiezoParameters>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("--piezo-grid {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Failure::Usage(format!("--piezo-grid line {}: expected four numbers", i + 1)))?;
        if v.len() != 4 {
            return Err(Failure::Usage(format!("--piezo-grid line {}: expected Cp R CD CI", i + 1)));
        }
        out.push(PiezoParameters { Cp: v[0], R: v[1], CD: v[2], CI: v[3] });
    }
    if out.is_empty() {
        return Err(Failure::Usage("--piezo-grid: no parameter sets".into()));
    }
    Ok(out)
}

fn piezo_text(p: &PiezoParameters) -> String {
    format!(
        "Cp={} R={} CD={} CI={}",
        output::float_text(p.Cp),
        output::float_text(p.R),
        output::float_text(p.CD),
        output::float_text(p.CI)
    )
}

fn perturb(common: &Common, piezo_grid: Option<&Path>, region: Rect, tol: &Tolerances) -> Run {
    let model = load_model(common)?;
    let sets = match piezo_grid {
        Some(p) => parse_piezo_grid(p)?,
        None => {
            let p = model.raw().piezo();
            vec![PiezoParameters { Cp: 2.0 * p.Cp, R: 3.0 * p.R, CD: 2.0 * p.CD, CI: 2.0 * p.CI }]
        }
    };
    for (k, s) in sets.iter().enumerate() {
        model.with_piezo(*s).map_err(|e| Failure::Usage(format!("--piezo-grid set {}: {e}", k + 1)))?;
    }
    let mut header = Header::new("perturb", *model.raw());
    header.set("region", rect_text(&region));
    header.set("piezo_sets", sets.len());
    tol.record(&mut header);
    let reg = search_region(region, &model)?;
    let reports = perturbation_sweep(&model, &sets, &reg, &tol.spectrum())?;
    let mut tables = Vec::new();
    let mut verdicts = Vec::new();
    for rep in &reports {
        let mut t = Table::new(&[
            "branch",
            "n",
            "re_base",
            "im_base",
            "re_pert",
            "im_pert",
            "shift",
            "second_order_mag",
            "ratio",
        ]);
        t.label = Some(format!("piezo set {}", piezo_text(&rep.perturbed)));
        for b in &rep.branches {
            for p in &b.pairs {
                t.push(vec![
                    (b.branch.number() as u32).into(),
                    p.n.into(),
                    p.base.re.into(),
                    p.base.im.into(),
                    p.perturbed.re.into(),
                    p.perturbed.im.into(),
                    p.shift.into(),
                    p.second_order_mag.into(),
                    p.ratio.into(),
                ]);
            }
            let e = |f: Option<crate::fit::PowerFit>| f.map_or("nan".to_string(), |f| output::float_text(f.exponent));
            let dominated = b.dominated_by(0.4);
            let decreasing = b.ratio_decreasing();
            verdicts.push(dominated && decreasing);
            t.notes.push(format!(
                "branch {}: {} pairs, shift exponent {}, second-order exponent {}, ratio exponent {}, dominated {dominated}, ratio decreasing {decreasing}",
                b.branch.number(),
                b.pairs.len(),
                e(b.shift_fit),
                e(b.second_order_fit),
                e(b.ratio_fit)
            ));
        }
        tables.push(t);
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("perturbation.csv"));
    emit_to(common, Some(&out), &header, &tables, Some(("n", "ratio")))?;
    let held = verdicts.iter().filter(|v| **v).count();
    Ok(Outcome::Done(format!(
        "perturb: {} piezo sets, {held} of {} branch comparisons dominated by the second-order terms",
        reports.len(),
        verdicts.len()
    )))
}

fn checks(common: &Common, samples: u32, seed: u64, region: Rect) -> Run {
    let model = load_model(common)?;
    let mut header = Header::new("checks", *model.raw());
    header.set("samples", samples);
    header.set("seed", seed);
    header.set("region", rect_text(&region));
    let reg = search_region(region, &model)?;
    let rep = run_checks(&model, samples as usize, seed, &reg)?;
    let body = serde_json::to_value(&rep).expect("report serializes");
    let path = common.out.clone().unwrap_or_else(|| PathBuf::from("checks_report.json"));
    output::write_atomic(&path, &output::render_json_report(&header, "report", body))?;
    let width = rep.checks.iter().map(|c| c.name.len()).max().unwrap_or(4);
    println!("{:width$}  {:6}  {:>24}  {:>10}", "check", "result", "measured", "tolerance");
    for c in &rep.checks {
        println!(
            "{:width$}  {:6}  {:>24}  {:>10}",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            output::float_text(c.measured),
            output::float_text(c.tolerance)
        );
    }
    let failed = rep.checks.iter().filter(|c| !c.passed).count();
    let msg = format!("checks: {} of {} passed, report in {}", rep.checks.len() - failed, rep.checks.len(), path.display());
    Ok(if failed == 0 { Outcome::Done(msg) } else { Outcome::Failed(msg) })
}

fn inverse_check(common: &Common, grid: u32, samples: u32, degree: u32, seed: u64) -> Run {
    let model = load_model(common)?;
    let mut header = Header::new("inverse-check", *model.raw());
    header.set("grid", grid);
    header.set("samples", samples);
    header.set("degree", degree);
    header.set("seed", seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = model.raw().L;
    let mut t = Table::new(&["sample", "residual", "domain_defect", "passed"]);
    let mut failed = 0;
    for k in 0..samples {
        let g = StateFunction::random_admissible(&mut rng, l, grid as usize, degree as usize);
        let f = apply_inverse(&g, &model)?;
        let res = apply_operator(&f, &model).combine(Complex64::new(1.0, 0.0), &g, Complex64::new(-1.0, 0.0))?;
        let residual = (product_norm1(&res)? / product_norm1(&g)?).sqrt();
        let defect = right_end_defects(&f, &model).iter().map(|d| d.norm()).fold(f.membership_defect(), f64::max);
        let ok = residual <= INVERSE_RESIDUAL_TOL && defect <= DOMAIN_DEFECT_TOL;
        if !ok {
            failed += 1;
        }
        t.push(vec![k.into(), residual.into(), defect.into(), ok.into()]);
    }
    t.notes.push(format!(
        "tolerances: residual {} domain defect {}",
        output::float_text(INVERSE_RESIDUAL_TOL),
        output::float_text(DOMAIN_DEFECT_TOL)
    ));
    emit(common, &header, &[t], Some(("sample", "residual")))?;
    let msg = format!("inverse-check: {} of {samples} samples within tolerance", samples - failed);
    Ok(if failed == 0 { Outcome::Done(msg) } else { Outcome::Failed(msg) })
}

fn dispatch(cli: Cli) -> Run {
    match cli.command {
        Command::Validate { common } => validate(&common),
        Command::Roots { common, lambda, asymptotic } => roots(&common, lambda, asymptotic),
        Command::Dispersion { common, lambda, region, steps } => dispersion(&common, lambda, region, steps),
        Command::Asymptotic { common, branch, n_min, n_max, tol } => asymptotic(&common, branch, n_min, n_max, &tol),
        Command::Solve { common, region, residual_tol, tol } => solve(&common, region, residual_tol, &tol),
        Command::Compare { common, branch, n_min, n_max, no_collocation, collocation_n, tol } => {
            compare(&common, branch, n_min, n_max, no_collocation, collocation_n, &tol)
        }
        Command::Perturb { common, piezo_grid, region, tol } => perturb(&common, piezo_grid.as_deref(), region, &tol),
        Command::Checks { common, samples, seed, region } => checks(&common, samples, seed, region),
        Command::InverseCheck { common, grid, samples, degree, seed } => inverse_check(&common, grid, samples, degree, seed),
    }
}

fn thread_count() -> std::result::Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| Failure::Usage(format!("{THREADS_ENV}={s} is not a non-negative integer"))),
    }
}

fn report_failure(f: &Failure) -> i32 {
    eprintln!("harvester: error: {}", f.message());
    f.code()
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Output files are written atomically; a one-line
/// summary goes to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = match thread_count() {
        Ok(n) => n,
        Err(f) => return report_failure(&f),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => return report_failure(&Failure::Runtime(e.to_string())),
    };
    match pool.install(|| dispatch(cli)) {
        Ok(Outcome::Done(msg)) => {
            eprintln!("{msg}");
            EXIT_OK
        }
        Ok(Outcome::Partial(msg)) => {
            eprintln!("{msg} (partial)");
            EXIT_PARTIAL
        }
        Ok(Outcome::Failed(msg)) => {
            eprintln!("{msg}");
            EXIT_FAILED
        }
        Err(f) => report_failure(&f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_parser_checks_order() {
        assert!(rect("0.3,120,-0.5,8").is_ok());
        assert!(rect("5,1,0,1").is_err());
        assert!(rect("1,2,3").is_err());
        assert!(rect("1,2,a,4").is_err());
    }

    #[test]
    fn usage_errors_exit_3() {
        assert_eq!(run(["harvester", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["harvester", "solve", "--region", "1,0,0,1"]), EXIT_USAGE);
        assert_eq!(run(["harvester", "asymptotic", "--newton-tol", "-1"]), EXIT_USAGE);
        assert_eq!(run(["harvester", "asymptotic", "--n-min", "5", "--n-max", "2"]), EXIT_USAGE);
        assert_eq!(run(["harvester", "validate", "--config", "/nonexistent/cfg"]), EXIT_USAGE);
    }

    #[test]
    fn help_and_version_exit_0() {
        assert_eq!(run(["harvester", "--version"]), EXIT_OK);
        assert_eq!(run(["harvester", "solve", "--help"]), EXIT_OK);
    }

    #[test]
    fn error_classes() {
        assert_eq!(Failure::from(Error::ZeroLambda).code(), EXIT_USAGE);
        assert_eq!(Failure::from(Error::ResolutionInsufficient).code(), EXIT_PARTIAL);
        assert_eq!(Failure::from(Error::GridMismatch).code(), EXIT_FAILED);
    }
}
