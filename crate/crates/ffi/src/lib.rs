//! C interface to `harvester_core`.
//!
//! Models and spectra are opaque heap handles owned by the caller and freed
//! with the matching `*_free` function. Every fallible call returns a
//! [`HarvesterStatus`]; on failure the message is kept per thread and can be
//! read with [`harvester_last_error_message`]. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use harvester_core::asymptotics::{
    perturbed_branch1, perturbed_branch2, unperturbed_branch, AdmissibilityOptions, Branch, NewtonOptions,
};
use harvester_core::charroots::characteristic_roots_exact;
use harvester_core::dispersion::dispersion_function;
use harvester_core::eigensolver::{find_spectrum, Rect, SearchRegion, SpectrumOptions, SpectrumResult};
use harvester_core::error::Error;
use harvester_core::model::{BeamParameters, Model, Strictness};
use harvester_core::Complex64;

/// Result codes. Zero is success; the others group the library errors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarvesterStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidArgument = 3,
    Singular = 4,
    NotConverged = 5,
    OutOfRange = 6,
    Internal = 7,
}

impl From<&Error> for HarvesterStatus {
    fn from(e: &Error) -> Self {
        use Error::*;
        match e {
            NonFinite { .. }
            | NonPositiveParameter { .. }
            | WrongSign { .. }
            | CouplingTooStrong { .. }
            | BalancedPiezoViolated { .. }
            | Branch1ConditionViolated { .. }
            | ParameterFile { .. }
            | MissingKey(_) => HarvesterStatus::InvalidParameter,
            ZeroLambda | BelowAsymptoticFloor { .. } | InvalidRegion(_) | InvalidArgument(_) => {
                HarvesterStatus::InvalidArgument
            }
            DegenerateDenominator(_) | SingularA1(_) | SingularA3(_) | PoleProximity { .. } | G2TooSmall { .. } => {
                HarvesterStatus::Singular
            }
            NewtonDivergence { .. }
            | NotConverged { .. }
            | CertificationFailed { .. }
            | ResolutionInsufficient
            | MatchingFailed { .. }
            | PhaseUndersampled { .. }
            | BoundaryZero => HarvesterStatus::NotConverged,
            GridTooCoarse { .. } | GridMismatch | Io { .. } => HarvesterStatus::Internal,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HarvesterComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for HarvesterComplex {
    fn from(z: Complex64) -> Self {
        HarvesterComplex { re: z.re, im: z.im }
    }
}

impl From<HarvesterComplex> for Complex64 {
    fn from(z: HarvesterComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarvesterParams {
    pub m: f64,
    pub j: f64,
    pub s: f64,
    pub e: f64,
    pub g: f64,
    pub l: f64,
    pub k1: f64,
    pub k2: f64,
    pub cp: f64,
    pub r: f64,
    pub cd: f64,
    pub ci: f64,
}

impl From<BeamParameters> for HarvesterParams {
    fn from(p: BeamParameters) -> Self {
        HarvesterParams {
            m: p.m,
            j: p.J,
            s: p.S,
            e: p.E,
            g: p.G,
            l: p.L,
            k1: p.k1,
            k2: p.k2,
            cp: p.Cp,
            r: p.R,
            cd: p.CD,
            ci: p.CI,
        }
    }
}

impl From<HarvesterParams> for BeamParameters {
    fn from(p: HarvesterParams) -> Self {
        BeamParameters {
            m: p.m,
            J: p.j,
            S: p.s,
            E: p.e,
            G: p.g,
            L: p.l,
            k1: p.k1,
            k2: p.k2,
            Cp: p.cp,
            R: p.r,
            CD: p.cd,
            CI: p.ci,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HarvesterDerived {
    pub d: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HarvesterDispersion {
    pub value: HarvesterComplex,
    /// Magnitude scale of the determinant; `|value| / condition` is scale free.
    pub condition: f64,
    /// Nonzero when lambda sits near the circuit pole.
    pub near_pole: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HarvesterBranchEigenvalue {
    pub unperturbed: HarvesterComplex,
    pub correction: HarvesterComplex,
    pub perturbed: HarvesterComplex,
    /// 1 admissible, 0 not admissible, -1 not applicable (branch 2).
    pub admissible: i32,
}

/// One eigenvalue of a computed spectrum.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HarvesterEigenvalue {
    pub value: HarvesterComplex,
    pub residual: f64,
    /// 1 or 2, or 0 when the root matched no asymptotic branch.
    pub branch: u32,
    /// Branch index, or 0 when unmatched.
    pub n: u32,
    pub multiplicity: u32,
    /// 1 admissible, 0 not admissible, -1 unknown.
    pub admissible: i32,
}

/// A validated model.
pub struct HarvesterModel {
    inner: Model,
}

/// The result of a spectrum search.
pub struct HarvesterSpectrum {
    inner: SpectrumResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, recording any error or panic message for the calling thread.
fn guard(f: impl FnOnce() -> Result<(), HarvesterFailure>) -> HarvesterStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HarvesterStatus::Ok,
        Ok(Err(HarvesterFailure::Null(what))) => {
            set_error(format!("null pointer passed as {what}"));
            HarvesterStatus::NullPointer
        }
        Ok(Err(HarvesterFailure::OutOfRange(msg))) => {
            set_error(msg);
            HarvesterStatus::OutOfRange
        }
        Ok(Err(HarvesterFailure::Lib(e))) => {
            set_error(e.to_string());
            HarvesterStatus::from(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            HarvesterStatus::Internal
        }
    }
}

enum HarvesterFailure {
    Null(&'static str),
    OutOfRange(String),
    Lib(Error),
}

impl From<Error> for HarvesterFailure {
    fn from(e: Error) -> Self {
        HarvesterFailure::Lib(e)
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, HarvesterFailure> {
    p.as_ref().ok_or(HarvesterFailure::Null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, HarvesterFailure> {
    p.as_mut().ok_or(HarvesterFailure::Null(what))
}

fn branch(b: u32) -> Result<Branch, HarvesterFailure> {
    u8::try_from(b)
        .ok()
        .and_then(Branch::from_number)
        .ok_or_else(|| Error::InvalidArgument(format!("branch must be 1 or 2, got {b}")).into())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn harvester_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn harvester_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// The reference parameter set.
#[no_mangle]
pub extern "C" fn harvester_params_default() -> HarvesterParams {
    BeamParameters::default().into()
}

/// Validates `params` and stores a new model in `*out`. The two flags are
/// treated as booleans and enable the optional checks CI = -CD and
/// k2 > sqrt(GJ).
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn harvester_model_new(
    params: *const HarvesterParams,
    require_balanced: i32,
    require_branch1: i32,
    out: *mut *mut HarvesterModel,
) -> HarvesterStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let flags = Strictness { require_balanced: require_balanced != 0, require_branch1: require_branch1 != 0 };
        let model = Model::new((*p).into(), flags)?;
        *out = Box::into_raw(Box::new(HarvesterModel { inner: model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`harvester_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn harvester_model_free(model: *mut HarvesterModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn harvester_derived_constants(
    model: *const HarvesterModel,
    out: *mut HarvesterDerived,
) -> HarvesterStatus {
    guard(|| {
        let d = deref(model, "model")?.inner.derived;
        *deref_mut(out, "out")? = HarvesterDerived {
            d: d.D,
            alpha: d.alpha,
            beta: d.beta,
            gamma: d.gamma,
            a1: d.a1,
            a2: d.a2,
            a3: d.a3,
            a4: d.a4,
            c1: d.c1,
            c2: d.c2,
            c3: d.c3,
            c4: d.c4,
        };
        Ok(())
    })
}

/// Evaluates the dispersion determinant at `lambda`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn harvester_dispersion(
    model: *const HarvesterModel,
    lambda: HarvesterComplex,
    out: *mut HarvesterDispersion,
) -> HarvesterStatus {
    guard(|| {
        let m = &deref(model, "model")?.inner;
        let out = deref_mut(out, "out")?;
        let v = dispersion_function(lambda.into(), m)?;
        *out = HarvesterDispersion { value: v.value.into(), condition: v.condition, near_pole: v.near_pole as i32 };
        Ok(())
    })
}

/// Writes the six characteristic roots at `lambda` to `out[0..6]`.
///
/// # Safety
/// `model` must be a live handle and `out` must point to six writable values.
#[no_mangle]
pub unsafe extern "C" fn harvester_characteristic_roots(
    model: *const HarvesterModel,
    lambda: HarvesterComplex,
    out: *mut HarvesterComplex,
) -> HarvesterStatus {
    guard(|| {
        let m = &deref(model, "model")?.inner;
        if out.is_null() {
            return Err(HarvesterFailure::Null("out"));
        }
        let roots = characteristic_roots_exact(lambda.into(), &m.derived)?;
        let out = std::slice::from_raw_parts_mut(out, 6);
        for (o, z) in out.iter_mut().zip(roots.zeta) {
            *o = z.into();
        }
        Ok(())
    })
}

/// Leading-order eigenvalue of branch 1 or 2 with index `n`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn harvester_unperturbed_branch(
    model: *const HarvesterModel,
    branch_number: u32,
    n: u32,
    out: *mut HarvesterComplex,
) -> HarvesterStatus {
    guard(|| {
        let m = &deref(model, "model")?.inner;
        let out = deref_mut(out, "out")?;
        *out = unperturbed_branch(branch(branch_number)?, n, m)?.into();
        Ok(())
    })
}

/// First-order corrected eigenvalue of branch 1 or 2 with index `n`, using
/// the default admissibility and Newton settings.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn harvester_perturbed_branch(
    model: *const HarvesterModel,
    branch_number: u32,
    n: u32,
    out: *mut HarvesterBranchEigenvalue,
) -> HarvesterStatus {
    guard(|| {
        let m = &deref(model, "model")?.inner;
        let out = deref_mut(out, "out")?;
        let e = match branch(branch_number)? {
            Branch::One => perturbed_branch1(n, &AdmissibilityOptions::default(), m)?,
            Branch::Two => perturbed_branch2(n, &NewtonOptions::default(), m)?,
        };
        *out = HarvesterBranchEigenvalue {
            unperturbed: e.lambda_unperturbed.into(),
            correction: e.correction_w.into(),
            perturbed: e.lambda_perturbed.into(),
            admissible: e.admissible.map_or(-1, i32::from),
        };
        Ok(())
    })
}

/// Finds every eigenvalue in the rectangle `[re_min, re_max] × [im_min,
/// im_max]` with default solver settings. Roots left of the imaginary axis
/// are added by mirroring when `re_min >= 0`. A search that leaves boxes
/// unresolved still succeeds; check [`harvester_spectrum_unresolved`].
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn harvester_find_spectrum(
    model: *const HarvesterModel,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    out: *mut *mut HarvesterSpectrum,
) -> HarvesterStatus {
    guard(|| {
        let m = &deref(model, "model")?.inner;
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let rect = Rect::new(re_min, re_max, im_min, im_max)?;
        let region = SearchRegion::new(rect, m)?;
        let result = find_spectrum(&region, m, &SpectrumOptions::default())?;
        *out = Box::into_raw(Box::new(HarvesterSpectrum { inner: result }));
        Ok(())
    })
}

/// Number of eigenvalues in a spectrum; 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn harvester_spectrum_len(spectrum: *const HarvesterSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.inner.records.len())
}

/// Number of boxes the search could not resolve; 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn harvester_spectrum_unresolved(spectrum: *const HarvesterSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.inner.unresolved.len())
}

/// # Safety
/// `spectrum` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn harvester_spectrum_get(
    spectrum: *const HarvesterSpectrum,
    index: usize,
    out: *mut HarvesterEigenvalue,
) -> HarvesterStatus {
    guard(|| {
        let s = &deref(spectrum, "spectrum")?.inner;
        let out = deref_mut(out, "out")?;
        let r = s
            .records
            .get(index)
            .ok_or_else(|| HarvesterFailure::OutOfRange(format!("index {index} but only {} eigenvalues", s.records.len())))?;
        *out = HarvesterEigenvalue {
            value: r.value.into(),
            residual: r.residual,
            branch: r.branch.map_or(0, |b| b.number() as u32),
            n: r.n.unwrap_or(0),
            multiplicity: r.multiplicity,
            admissible: r.admissible.map_or(-1, i32::from),
        };
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn harvester_spectrum_free(spectrum: *mut HarvesterSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}
