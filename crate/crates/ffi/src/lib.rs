//! C ABI over `trawl-core`.
//!
//! Objects are opaque heap handles created by `trawl_*_new_*` and released
//! by the matching `trawl_*_free`. Every fallible call returns a
//! [`TrawlStatus`] and writes results through out-pointers; the message of
//! the most recent failure on the calling thread is available from
//! [`trawl_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use trawl_core::cumulant::{integral_components, integrated_cumulant};
use trawl_core::simulator::{discrete_sum_variance, empirical_acf, run_ensemble, Ensemble, EnsembleConfig};
use trawl_core::{SeedSpec, TrawlError, TrawlGeometry, TrawlSpec};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrawlStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    UnsupportedFamily = 3,
    Quadrature = 4,
    Budget = 5,
    InsufficientData = 6,
    Config = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Opaque trawl geometry.
pub struct TrawlGeom {
    inner: TrawlGeometry,
}

/// Opaque Lévy seed.
pub struct TrawlSeed {
    inner: SeedSpec,
}

/// Opaque simulated ensemble.
pub struct TrawlEnsemble {
    inner: Ensemble,
}

/// The four pieces `I1..I4` of the integrated-process cumulant.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrawlComponents {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(TrawlStatus, String);

impl From<TrawlError> for Failure {
    fn from(e: TrawlError) -> Self {
        let status = match e {
            TrawlError::Domain(_) => TrawlStatus::Domain,
            TrawlError::UnsupportedFamily(_) => TrawlStatus::UnsupportedFamily,
            TrawlError::Quadrature { .. } => TrawlStatus::Quadrature,
            TrawlError::Budget { .. } => TrawlStatus::Budget,
            TrawlError::InsufficientData(_) => TrawlStatus::InsufficientData,
            TrawlError::Config(_) => TrawlStatus::Config,
            TrawlError::Io(_) => TrawlStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(TrawlStatus::NullPointer, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TrawlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TrawlStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            TrawlStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn boxed<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length excluding the
/// terminator; returns 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn trawl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn trawl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn new_geometry(spec: trawl_core::Result<TrawlSpec>, out: *mut *mut TrawlGeom) -> TrawlStatus {
    guard(|| {
        let inner = TrawlGeometry::new(spec?)?;
        unsafe { boxed(out, TrawlGeom { inner }) }
    })
}

/// Gamma trawl `g(x) = (1 + x)^(-alpha-1)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trawl_geometry_new_gamma(alpha: f64, out: *mut *mut TrawlGeom) -> TrawlStatus {
    new_geometry(TrawlSpec::gamma(alpha), out)
}

/// Exponential trawl `g(x) = exp(-lambda x)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trawl_geometry_new_exponential(lambda: f64, out: *mut *mut TrawlGeom) -> TrawlStatus {
    new_geometry(TrawlSpec::exponential(lambda), out)
}

/// # Safety
/// `geom` must be null or a handle from `trawl_geometry_new_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trawl_geometry_free(geom: *mut TrawlGeom) {
    if !geom.is_null() {
        drop(Box::from_raw(geom));
    }
}

/// `Leb(A)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn trawl_geometry_leb(geom: *const TrawlGeom, out: *mut f64) -> TrawlStatus {
    guard(|| write(out, deref(geom, "geom")?.inner.leb_a(), "out"))
}

/// `G(h)`, the measure of `A ∩ A_h`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn trawl_geometry_tail_mass(geom: *const TrawlGeom, h: f64, out: *mut f64) -> TrawlStatus {
    guard(|| write(out, deref(geom, "geom")?.inner.tail_mass(h)?, "out"))
}

/// `r(h) = G(h) / G(0)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn trawl_geometry_correlation(geom: *const TrawlGeom, h: f64, out: *mut f64) -> TrawlStatus {
    guard(|| write(out, deref(geom, "geom")?.inner.correlation(h)?, "out"))
}

fn new_seed(seed: trawl_core::Result<SeedSpec>, centered: bool, out: *mut *mut TrawlSeed) -> TrawlStatus {
    guard(|| {
        let inner = seed?.with_centering(centered);
        unsafe { boxed(out, TrawlSeed { inner }) }
    })
}

/// Poisson seed with intensity `nu`. For every seed constructor, `centered`
/// subtracts the mean from the integrated process `X*`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trawl_seed_new_poisson(nu: f64, centered: bool, out: *mut *mut TrawlSeed) -> TrawlStatus {
    new_seed(SeedSpec::poisson(nu), centered, out)
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trawl_seed_new_gamma(
    shape: f64,
    rate: f64,
    centered: bool,
    out: *mut *mut TrawlSeed,
) -> TrawlStatus {
    new_seed(SeedSpec::gamma(shape, rate), centered, out)
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trawl_seed_new_gaussian(
    mean: f64,
    variance: f64,
    centered: bool,
    out: *mut *mut TrawlSeed,
) -> TrawlStatus {
    new_seed(SeedSpec::gaussian(mean, variance), centered, out)
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trawl_seed_new_inverse_gaussian(
    delta: f64,
    gamma: f64,
    centered: bool,
    out: *mut *mut TrawlSeed,
) -> TrawlStatus {
    new_seed(SeedSpec::inverse_gaussian(delta, gamma), centered, out)
}

/// # Safety
/// `seed` must be null or a handle from `trawl_seed_new_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trawl_seed_free(seed: *mut TrawlSeed) {
    if !seed.is_null() {
        drop(Box::from_raw(seed));
    }
}

/// Raw cumulant `kappa_L^(m)` of the seed.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn trawl_seed_cumulant(seed: *const TrawlSeed, m: u32, out: *mut f64) -> TrawlStatus {
    guard(|| write(out, deref(seed, "seed")?.inner.cumulant(m), "out"))
}

/// `I1..I4` for order `m` at horizon `t`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn trawl_integral_components(
    geom: *const TrawlGeom,
    m: u32,
    t: f64,
    out: *mut TrawlComponents,
) -> TrawlStatus {
    guard(|| {
        let c = integral_components(&deref(geom, "geom")?.inner, m, t)?;
        write(
            out,
            TrawlComponents {
                i1: c.i1,
                i2: c.i2,
                i3: c.i3,
                i4: c.i4,
            },
            "out",
        )
    })
}

/// `kappa^(m)` of `X*(t)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn trawl_integrated_cumulant(
    geom: *const TrawlGeom,
    seed: *const TrawlSeed,
    m: u32,
    t: f64,
    out: *mut f64,
) -> TrawlStatus {
    guard(|| {
        let v = integrated_cumulant(&deref(geom, "geom")?.inner, &deref(seed, "seed")?.inner, m, t)?;
        write(out, v, "out")
    })
}

/// Exact variance of the Riemann sum `delta * sum_{j<k} X(t_j)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn trawl_discrete_sum_variance(
    geom: *const TrawlGeom,
    seed: *const TrawlSeed,
    delta: f64,
    k: usize,
    out: *mut f64,
) -> TrawlStatus {
    guard(|| {
        let v = discrete_sum_variance(&deref(geom, "geom")?.inner, &deref(seed, "seed")?.inner, delta, k)?;
        write(out, v, "out")
    })
}

/// Simulates `replications` trajectories on `t_k = k * delta`, `k = 0..=n`.
/// `threads = 0` uses the default pool. Results depend only on the
/// arguments, never on `threads`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn trawl_ensemble_run(
    geom: *const TrawlGeom,
    seed: *const TrawlSeed,
    delta: f64,
    n: usize,
    replications: usize,
    master_seed: u64,
    threads: usize,
    out: *mut *mut TrawlEnsemble,
) -> TrawlStatus {
    guard(|| {
        let config = EnsembleConfig {
            trawl: *deref(geom, "geom")?.inner.spec(),
            seed: deref(seed, "seed")?.inner,
            delta,
            n,
            replications,
            master_seed,
            cell_budget: trawl_core::simulator::DEFAULT_CELL_BUDGET,
        };
        let inner = run_ensemble(&config, (threads > 0).then_some(threads))?;
        boxed(out, TrawlEnsemble { inner })
    })
}

/// # Safety
/// `ens` must be null or a handle from `trawl_ensemble_run` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trawl_ensemble_free(ens: *mut TrawlEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

/// Number of replications (rows) and grid points (columns).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn trawl_ensemble_shape(
    ens: *const TrawlEnsemble,
    rows: *mut usize,
    cols: *mut usize,
) -> TrawlStatus {
    guard(|| {
        let e = &deref(ens, "ens")?.inner;
        write(rows, e.replications(), "rows")?;
        write(cols, e.cols(), "cols")
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < src.len() {
        return Err(Failure(
            TrawlStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies `X` row-major (`rows * cols` values) into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn trawl_ensemble_copy_x(ens: *const TrawlEnsemble, buf: *mut f64, len: usize) -> TrawlStatus {
    guard(|| copy_out(deref(ens, "ens")?.inner.x_values(), buf, len))
}

/// Copies the centred Riemann sums `X*` row-major into `buf`.
///
/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn trawl_ensemble_copy_xstar(
    ens: *const TrawlEnsemble,
    buf: *mut f64,
    len: usize,
) -> TrawlStatus {
    guard(|| copy_out(deref(ens, "ens")?.inner.xstar_values(), buf, len))
}

/// Pooled sample autocorrelation at `lag` grid steps with its standard error.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn trawl_ensemble_acf(
    ens: *const TrawlEnsemble,
    lag: usize,
    value: *mut f64,
    stderr: *mut f64,
) -> TrawlStatus {
    guard(|| {
        let est = empirical_acf(&deref(ens, "ens")?.inner, lag)?;
        write(value, est.value, "value")?;
        write(stderr, est.stderr, "stderr")
    })
}
