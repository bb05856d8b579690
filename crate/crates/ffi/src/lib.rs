//! C ABI over `atomlab`.
//!
//! Every fallible function returns an `AtomlabStatus` and writes results
//! through out-pointers. On failure the message is available from
//! `atomlab_last_error_message` on the same thread. Handles are opaque and
//! released with their `_free` function; strings returned by the library are
//! released with `atomlab_string_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use atomlab::atoms::{haar_decompose, AtomicFunction, DyadicSamples, SpecialAtom};
use atomlab::extension::{self, ExtensionProvider, Mode, QuadratureSpec, SampledFunction};
use atomlab::geometry::{parse_cube, parse_pattern};
use atomlab::weights::parse_product_weight;
use atomlab::{kernels, report, Error};
use num_complex::Complex64;

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    DimensionMismatch = 5,
    /// A point lies on or outside the unit circle.
    Domain = 6,
    /// Quadrature, convergence or integrability failure.
    Numerical = 7,
    /// The operation needs a checkerboard sign pattern.
    Unsupported = 8,
    PreconditionFailed = 9,
    Panic = 10,
}

/// `w(ξ)` weighting of the disc integral.
pub const ATOMLAB_MODE_ANGULAR: c_int = 0;
/// `w(1 - r)/(1 - r)` weighting of the disc integral.
pub const ATOMLAB_MODE_RADIAL: c_int = 1;

/// Atomic function `Σ α_k a_k`.
pub struct AtomlabFunction {
    inner: AtomicFunction,
}

/// Extension of an atomic function to the polydisc.
pub struct AtomlabProvider {
    inner: ExtensionProvider,
}

/// Quadrature resolution.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomlabQuadrature {
    pub angular_order: usize,
    pub radial_levels: usize,
    pub radial_order: usize,
    pub tolerance: f64,
}

/// Result of a weighted analytic norm.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomlabNorm {
    pub value: f64,
    pub error_indicator: f64,
    pub cells: f64,
    pub f0: f64,
}

impl From<QuadratureSpec> for AtomlabQuadrature {
    fn from(q: QuadratureSpec) -> Self {
        AtomlabQuadrature {
            angular_order: q.angular_order,
            radial_levels: q.radial_levels,
            radial_order: q.radial_order,
            tolerance: q.tolerance,
        }
    }
}

impl AtomlabQuadrature {
    fn spec(&self) -> Result<QuadratureSpec, Failure> {
        Ok(QuadratureSpec::new(self.angular_order, self.radial_levels, self.radial_order, self.tolerance)?)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: AtomlabStatus,
    message: String,
}

impl Failure {
    fn new(status: AtomlabStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse(_) => AtomlabStatus::Parse,
            Error::InvalidCube(_) | Error::InvalidPattern(_) | Error::InvalidWeight(_) | Error::InvalidArgument(_) => {
                AtomlabStatus::InvalidArgument
            }
            Error::DimensionMismatch { .. } => AtomlabStatus::DimensionMismatch,
            Error::Domain { .. } => AtomlabStatus::Domain,
            Error::PatternUnsupported => AtomlabStatus::Unsupported,
            Error::PreconditionFailed(_) => AtomlabStatus::PreconditionFailed,
            Error::NonIntegrable(_)
            | Error::NonZeroMean { .. }
            | Error::ToleranceNotMet { .. }
            | Error::NoConvergence { .. }
            | Error::NonIntegrableWeight(_) => AtomlabStatus::Numerical,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> AtomlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AtomlabStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(&e.message);
            e.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            AtomlabStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::new(AtomlabStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(AtomlabStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// `[re_0, im_0, re_1, im_1, …]` as complex numbers.
fn complex_pairs(values: &[f64], d: usize) -> Result<Vec<Complex64>, Failure> {
    if values.len() != 2 * d {
        return Err(Error::DimensionMismatch {
            expected: 2 * d,
            got: values.len(),
        }
        .into());
    }
    Ok(values.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(AtomlabStatus::InvalidArgument, "output contains NUL"))
}

fn function_dim(f: &AtomicFunction) -> usize {
    f.dim().unwrap_or(0)
}

fn parse_mode(mode: c_int) -> Result<Mode, Failure> {
    match mode {
        ATOMLAB_MODE_ANGULAR => Ok(Mode::Angular),
        ATOMLAB_MODE_RADIAL => Ok(Mode::Radial),
        m => Err(Failure::new(AtomlabStatus::InvalidArgument, format!("unknown mode {m}"))),
    }
}

// ------------------------------------------------------------------ misc

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn atomlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn atomlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn atomlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default quadrature resolution.
#[no_mangle]
pub extern "C" fn atomlab_quadrature_default() -> AtomlabQuadrature {
    QuadratureSpec::default().into()
}

/// `(e^{iξ} + z) / (e^{iξ} - z)`.
///
/// # Safety
/// `out_re` and `out_im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_poisson_factor(
    z_re: f64,
    z_im: f64,
    xi: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> AtomlabStatus {
    guard(|| {
        let (re, im) = (out_arg(out_re, "out_re")?, out_arg(out_im, "out_im")?);
        let v = kernels::poisson_factor(Complex64::new(z_re, z_im), xi)?;
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

// ------------------------------------------------------------- functions

fn emit_function(f: AtomicFunction, out: *mut *mut AtomlabFunction) -> Result<(), Failure> {
    let out = unsafe { out_arg(out, "out")? };
    *out = Box::into_raw(Box::new(AtomlabFunction { inner: f }));
    Ok(())
}

/// One special atom with coefficient `coef`. `cube` is `a1,..,ad:h1,..,hd`;
/// `pattern` (NULL for checkerboard) is `checkerboard`, `axis:J`,
/// `parity:MASK` or `positive:K1,K2,..`; `weight` (NULL for Lebesgue) is one
/// factor spec for every axis or `d` specs separated by `;`.
///
/// # Safety
/// String arguments must be NULL or NUL-terminated; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_function_new_atom(
    cube: *const c_char,
    pattern: *const c_char,
    weight: *const c_char,
    coef: f64,
    out: *mut *mut AtomlabFunction,
) -> AtomlabStatus {
    guard(|| {
        let cube = parse_cube(str_arg(cube, "cube")?)?;
        let d = cube.dim();
        let pattern = parse_pattern(opt_str_arg(pattern, "pattern")?.unwrap_or("checkerboard"), d)?;
        let weight = parse_product_weight(opt_str_arg(weight, "weight")?.unwrap_or("lebesgue"), d)?;
        let atom = SpecialAtom::new(cube, pattern, weight)?;
        emit_function(AtomicFunction::single(coef, atom), out)
    })
}

/// Atomic function from its JSON form.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_function_from_json(json: *const c_char, out: *mut *mut AtomlabFunction) -> AtomlabStatus {
    guard(|| {
        let f: AtomicFunction = serde_json::from_str(str_arg(json, "json")?)
            .map_err(|e| Failure::new(AtomlabStatus::Parse, format!("atomic function JSON: {e}")))?;
        emit_function(f, out)
    })
}

/// JSON form of `f`; release with `atomlab_string_free`.
///
/// # Safety
/// `f` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_function_to_json(f: *const AtomlabFunction, out: *mut *mut c_char) -> AtomlabStatus {
    guard(|| {
        let f = handle(f, "f")?;
        let out = out_arg(out, "out")?;
        *out = into_c_string(report::to_json_compact(&f.inner)?)?;
        Ok(())
    })
}

/// Haar decomposition of `2^{d m}` zero-mean samples on the dyadic grid of
/// `[0, 2π)^d` (axis 0 fastest).
///
/// # Safety
/// `values` must hold `len` doubles; `weight` must be NULL or
/// NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_haar_decompose(
    d: usize,
    m: u32,
    values: *const f64,
    len: usize,
    weight: *const c_char,
    out: *mut *mut AtomlabFunction,
) -> AtomlabStatus {
    guard(|| {
        let samples = DyadicSamples::new(d, m, slice_arg(values, len, "values")?.to_vec())?;
        let weight = parse_product_weight(opt_str_arg(weight, "weight")?.unwrap_or("lebesgue"), d)?;
        emit_function(haar_decompose(&samples, &weight)?, out)
    })
}

/// Releases a function handle. NULL is ignored.
///
/// # Safety
/// `f` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn atomlab_function_free(f: *mut AtomlabFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Dimension of `f` and its number of terms.
///
/// # Safety
/// `f` must be a live handle; out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_function_shape(
    f: *const AtomlabFunction,
    out_dim: *mut usize,
    out_terms: *mut usize,
) -> AtomlabStatus {
    guard(|| {
        let f = handle(f, "f")?;
        *out_arg(out_dim, "out_dim")? = function_dim(&f.inner);
        *out_arg(out_terms, "out_terms")? = f.inner.len();
        Ok(())
    })
}

/// `f(ξ)` at a point of `[0, 2π)^d`.
///
/// # Safety
/// `f` must be a live handle; `point` must hold `len` doubles; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_function_eval(
    f: *const AtomlabFunction,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> AtomlabStatus {
    guard(|| {
        let f = handle(f, "f")?;
        let p = slice_arg(point, len, "point")?;
        let d = function_dim(&f.inner);
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() }.into());
        }
        *out_arg(out, "out")? = f.inner.eval(p);
        Ok(())
    })
}

/// Upper bound `Σ|α_k|` of the atomic norm.
///
/// # Safety
/// `f` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_function_bw_upper(f: *const AtomlabFunction, out: *mut f64) -> AtomlabStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(f, "f")?.inner.bw_norm_upper();
        Ok(())
    })
}

// ------------------------------------------------------------- providers

/// Extension of `f`. With `quadrature` NULL the closed form is used;
/// otherwise the generic quadrature extension at that resolution. The
/// provider keeps its own copy of `f`.
///
/// # Safety
/// `f` must be a live handle; `quadrature` must be NULL or valid; `out` must
/// be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_provider_new(
    f: *const AtomlabFunction,
    quadrature: *const AtomlabQuadrature,
    out: *mut *mut AtomlabProvider,
) -> AtomlabStatus {
    guard(|| {
        let f = handle(f, "f")?.inner.clone();
        let inner = match quadrature.as_ref() {
            None => ExtensionProvider::closed(f)?,
            Some(q) => ExtensionProvider::quadrature(SampledFunction::from_atomic(&f)?, q.spec()?)?,
        };
        *out_arg(out, "out")? = Box::into_raw(Box::new(AtomlabProvider { inner }));
        Ok(())
    })
}

/// Releases a provider handle. NULL is ignored.
///
/// # Safety
/// `p` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn atomlab_provider_free(p: *mut AtomlabProvider) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// `F(z)` with `z` given as `d` interleaved `(re, im)` pairs.
///
/// # Safety
/// `p` must be a live handle; `z` must hold `len` doubles; out-pointers must
/// be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_provider_value(
    p: *const AtomlabProvider,
    z: *const f64,
    len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> AtomlabStatus {
    guard(|| {
        let p = handle(p, "provider")?;
        let z = complex_pairs(slice_arg(z, len, "z")?, p.inner.dim())?;
        let v = p.inner.value(&z)?;
        *out_arg(out_re, "out_re")? = v.re;
        *out_arg(out_im, "out_im")? = v.im;
        Ok(())
    })
}

/// `∂F/∂z_j` for every `j`, written as `d` interleaved `(re, im)` pairs into
/// `out`, which must hold `out_len = 2d` doubles.
///
/// # Safety
/// `p` must be a live handle; `z` must hold `len` doubles; `out` must be
/// valid for `out_len` writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_provider_gradient(
    p: *const AtomlabProvider,
    z: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> AtomlabStatus {
    guard(|| {
        let p = handle(p, "provider")?;
        let d = p.inner.dim();
        let z = complex_pairs(slice_arg(z, len, "z")?, d)?;
        if out_len != 2 * d {
            return Err(Error::DimensionMismatch {
                expected: 2 * d,
                got: out_len,
            }
            .into());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let g = p.inner.gradient(&z)?;
        let out = std::slice::from_raw_parts_mut(out, out_len);
        for (slot, v) in out.chunks_mut(2).zip(g) {
            slot[0] = v.re;
            slot[1] = v.im;
        }
        Ok(())
    })
}

/// `lim_{r→1} Re F(r e^{iξ})` along `r = 1 - 2^{-k}`, `k = k0..=k1`, with
/// the observed contraction ratio of the last step.
///
/// # Safety
/// `p` must be a live handle; `xi` must hold `len` doubles; out-pointers
/// must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_radial_limit(
    p: *const AtomlabProvider,
    xi: *const f64,
    len: usize,
    k0: u32,
    k1: u32,
    out_limit: *mut f64,
    out_ratio: *mut f64,
) -> AtomlabStatus {
    guard(|| {
        let p = handle(p, "provider")?;
        let l = extension::radial_limit(&p.inner, slice_arg(xi, len, "xi")?, k0, k1)?;
        *out_arg(out_limit, "out_limit")? = l.limit;
        *out_arg(out_ratio, "out_ratio")? = l.ratio;
        Ok(())
    })
}

/// Weighted analytic norm `|F(0)| + (2π)^{-d} ∫ |F'|^p w`. `weight` uses the
/// same syntax as in `atomlab_function_new_atom`; `quadrature` NULL means
/// the default resolution.
///
/// # Safety
/// `p` must be a live handle; `weight` must be NUL-terminated;
/// `quadrature` must be NULL or valid; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_aw_norm(
    p: *const AtomlabProvider,
    weight: *const c_char,
    mode: c_int,
    exponent: f64,
    quadrature: *const AtomlabQuadrature,
    out: *mut AtomlabNorm,
) -> AtomlabStatus {
    guard(|| {
        let p = handle(p, "provider")?;
        let weight = parse_product_weight(str_arg(weight, "weight")?, p.inner.dim())?;
        let q = match quadrature.as_ref() {
            Some(q) => q.spec()?,
            None => QuadratureSpec::default(),
        };
        let n = extension::aw_norm(&p.inner, &weight, parse_mode(mode)?, exponent, &q)?;
        *out_arg(out, "out")? = AtomlabNorm {
            value: n.value,
            error_indicator: n.error_indicator,
            cells: n.cells,
            f0: n.f0,
        };
        Ok(())
    })
}

// ---------------------------------------------------------------- reports

/// Runs the command-line front end on `args` and hands back its output.
fn run_cli(args: &[&str]) -> Result<(String, c_int), Failure> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = atomlab::cli::run_with(std::iter::once("atomlab").chain(args.iter().copied()), &mut out, &mut err);
    match code {
        atomlab::cli::EXIT_OK | atomlab::cli::EXIT_CHECK_FAILED => {
            Ok((String::from_utf8_lossy(&out).into_owned(), code))
        }
        c => Err(Failure::new(
            if c == atomlab::cli::EXIT_NUMERICAL {
                AtomlabStatus::Numerical
            } else {
                AtomlabStatus::InvalidArgument
            },
            String::from_utf8_lossy(&err).trim().to_string(),
        )),
    }
}

/// JSON report of a verify suite (`all`, `k-bounds`, `lemma3`, `lemma4`,
/// `lemma5`, `main`, `inclusion`), identical to `atomlab verify SUITE --seed
/// SEED --json`. `out_pass` receives 1 if every check passed, else 0.
///
/// # Safety
/// `suite` must be NUL-terminated; out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_verify(
    suite: *const c_char,
    seed: u64,
    out_json: *mut *mut c_char,
    out_pass: *mut c_int,
) -> AtomlabStatus {
    guard(|| {
        let suite = str_arg(suite, "suite")?;
        let out_json = out_arg(out_json, "out_json")?;
        let out_pass = out_arg(out_pass, "out_pass")?;
        let seed = seed.to_string();
        let (json, code) = run_cli(&["verify", suite, "--seed", &seed, "--json"])?;
        *out_json = into_c_string(json)?;
        *out_pass = c_int::from(code == atomlab::cli::EXIT_OK);
        Ok(())
    })
}

/// JSON array of class reports for a one-dimensional weight; `classes` is a
/// comma-separated list such as `dini:1,bn:2,calbp:2,doubling,ap:2`, or NULL
/// for that default list.
///
/// # Safety
/// String arguments must be NULL (for `classes`) or NUL-terminated;
/// `out_json` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn atomlab_weight_classify(
    weight: *const c_char,
    classes: *const c_char,
    out_json: *mut *mut c_char,
) -> AtomlabStatus {
    guard(|| {
        let weight = str_arg(weight, "weight")?;
        let out_json = out_arg(out_json, "out_json")?;
        let mut args = vec!["weight", "classify", "--weight", weight];
        if let Some(c) = opt_str_arg(classes, "classes")? {
            args.extend(["--class", c]);
        }
        let (json, _) = run_cli(&args)?;
        *out_json = into_c_string(json)?;
        Ok(())
    })
}
