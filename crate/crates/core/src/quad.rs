//! Adaptive Gauss–Kronrod (10/21 point) quadrature.
//!
//! Closed forms are the primary route for every trawl quantity; this module is
//! the cross-check and the fallback for families without one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, TrawlError};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Tolerances and subdivision limit for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl QuadSettings {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        QuadSettings {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }
}

/// Integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
}

/// One 21-point Kronrod evaluation over `[a, b]`, returning the value and the
/// QUADPACK-style rescaled error estimate.
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);

    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive integration of `f` over the finite interval `[a, b]`.
///
/// Bisects the segment with the largest error until the summed error is
/// below `max(abs_tol, rel_tol * |I|)`. Fails with
/// [`TrawlError::Quadrature`] carrying the achieved error when the
/// subdivision limit is hit first.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, settings: &QuadSettings) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            abs_err: 0.0,
        });
    }
    let (value, err) = gk21(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, err });
    let mut total = value;
    let mut total_err = err;

    loop {
        let requested = settings.abs_tol.max(settings.rel_tol * total.abs());
        if total_err <= requested {
            break;
        }
        if heap.len() >= settings.max_subdivisions {
            return Err(TrawlError::Quadrature {
                achieved: total_err,
                requested,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine resolution
            return Err(TrawlError::Quadrature {
                achieved: total_err,
                requested,
            });
        }
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, err: e2 });
    }

    // re-sum to shed accumulated update rounding
    let (value, abs_err) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err));
    Ok(Estimate { value, abs_err })
}

/// Integral of `f` over `[a, ∞)` via the map `x = a + (1 - u) / u`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, settings: &QuadSettings) -> Result<Estimate> {
    integrate(
        |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let x = a + (1.0 - u) / u;
            f(x) / (u * u)
        },
        0.0,
        1.0,
        settings,
    )
}

/// Integral of `f` over `[a, ∞)` for slowly (power-law) decaying integrands.
///
/// Uses `x = a + expm1(y)` followed by `y = (1 - u) / u`, which turns a
/// regularly varying tail into an exponentially decaying one.
pub fn integrate_heavy_tail<F: Fn(f64) -> f64>(f: F, a: f64, settings: &QuadSettings) -> Result<Estimate> {
    integrate_to_infinity(
        |y: f64| {
            if y > 700.0 {
                return 0.0;
            }
            let ey = y.exp();
            let v = f(a + y.exp_m1()) * ey;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        settings,
    )
}
