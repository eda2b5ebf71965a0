//! Invariant suite behind `trawl verify`: partition identities, the kernel
//! double integral against the component formula, and Monte Carlo checks of
//! marginal cumulants, autocorrelation, stationarity and Riemann-sum
//! variance.

use std::cell::RefCell;
use std::fmt::Write as _;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::cumulant::{integral_components, kernel_h};
use crate::error::{Result, TrawlError};
use crate::quad::{self, Estimate, QuadSettings};
use crate::seed::SeedFamily;
use crate::simulator::{
    discrete_sum_variance, empirical_acf, mean_with_se, run_ensemble, sample_variance, Ensemble, EnsembleConfig,
    SlicePartition, StatEstimate,
};
use crate::trawl::TrawlGeometry;

/// Tolerance of the partition coverage identity.
pub const COVERAGE_TOLERANCE: f64 = 1e-10;

/// `∬ h_A(ξ, s, t)^m dξ ds` by nested adaptive quadrature of [`kernel_h`].
///
/// The inner integral over `ξ` is split where the kernel changes branch,
/// at `g(t - s)`; the outer integral is split at `s = 0` and the half-line
/// `s ≤ 0` goes through the heavy-tail map.
pub fn kernel_route_integral(geom: &TrawlGeometry, m: u32, t: f64, rel_tol: f64) -> Result<Estimate> {
    if m == 0 || !(t > 0.0) {
        return Err(TrawlError::Domain(format!("kernel integral needs m >= 1 and t > 0, got m={m}, t={t}")));
    }
    let inner_rel = (rel_tol * 1e-2).max(1e-14);
    let outer_settings = QuadSettings {
        abs_tol: 0.0,
        rel_tol,
        max_subdivisions: 2000,
    };
    let failure: RefCell<Option<TrawlError>> = RefCell::new(None);
    let inner = |s: f64| -> f64 {
        let split = geom.g_unchecked(t - s);
        let top = if s <= 0.0 { geom.g_unchecked(-s) } else { geom.g_max() };
        let f = |xi: f64| kernel_h(geom, xi, s, t).powi(m as i32);
        // far in the past `g⁻¹(ξ) + s` cancels, so the inner tolerance is
        // taken relative to the slice scale `t^m g(-s)` rather than the value
        let inner_settings = QuadSettings {
            abs_tol: inner_rel * t.powi(m as i32) * top,
            rel_tol: inner_rel,
            max_subdivisions: 400,
        };
        let mut total = 0.0;
        for (a, b) in [(0.0, split), (split, top)] {
            match quad::integrate(f, a, b, &inner_settings) {
                Ok(e) => total += e.value,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    return 0.0;
                }
            }
        }
        total
    };
    let forward = quad::integrate(inner, 0.0, t, &outer_settings)?;
    let backward = quad::integrate_heavy_tail(|x| inner(-x), 0.0, &outer_settings)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(Estimate {
        value: forward.value + backward.value,
        abs_err: forward.abs_err + backward.abs_err,
    })
}

/// One row of the verification table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub target: f64,
    /// Allowed deviation: absolute, relative or in standard errors, per `detail`.
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn absolute(name: String, value: f64, target: f64, tol: f64) -> Self {
        let dev = (value - target).abs();
        Check {
            name,
            passed: dev <= tol,
            value,
            target,
            tolerance: tol,
            detail: format!("|diff| = {dev:.3e} (abs tol)"),
        }
    }

    fn relative(name: String, value: f64, target: f64, tol: f64) -> Self {
        let dev = ((value - target) / target).abs();
        Check {
            name,
            passed: dev <= tol,
            value,
            target,
            tolerance: tol,
            detail: format!("rel diff = {dev:.3e} (rel tol)"),
        }
    }

    fn statistical(name: String, est: StatEstimate, target: f64, z: f64) -> Self {
        let score = (est.value - target).abs() / est.stderr;
        Check {
            name,
            passed: est.within(target, z),
            value: est.value,
            target,
            tolerance: z,
            detail: format!("{score:.2} SE (SE = {:.3e})", est.stderr),
        }
    }

    fn failed(name: String, err: &TrawlError) -> Self {
        Check {
            name,
            passed: false,
            value: f64::NAN,
            target: f64::NAN,
            tolerance: f64::NAN,
            detail: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:<6}  {:>24}  {:>24}  detail", "check", "status", "value", "target");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<width$}  {:<6}  {:>24.16e}  {:>24.16e}  {}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.value,
                c.target,
                c.detail
            );
        }
        out
    }
}

fn partition_checks(geom: &TrawlGeometry, delta: f64, n: usize) -> Result<Vec<Check>> {
    let part = SlicePartition::build(geom, delta, n)?;
    let worst = (0..=n)
        .map(|k| (part.coverage(k) - geom.leb_a()).abs())
        .fold(0.0, f64::max);
    let min_measure = part.cells().map(|c| part.measure(c)).fold(f64::INFINITY, f64::min);
    Ok(vec![
        Check::absolute(
            format!("partition coverage (n={n})"),
            geom.leb_a() + worst,
            geom.leb_a(),
            COVERAGE_TOLERANCE,
        ),
        Check {
            name: "partition cell measures nonnegative".into(),
            passed: min_measure >= 0.0,
            value: min_measure,
            target: 0.0,
            tolerance: 0.0,
            detail: "minimum cell measure".into(),
        },
    ])
}

fn kernel_checks(geom: &TrawlGeometry, cfg: &ExperimentConfig) -> Vec<Check> {
    let v = &cfg.verify;
    let mut out = Vec::new();
    for &m in &v.kernel_orders {
        for &t in &v.kernel_times {
            let name = format!("kernel vs components m={m} t={t}");
            let result = kernel_route_integral(geom, m, t, v.quadrature_tolerance)
                .and_then(|k| Ok((k.value, integral_components(geom, m, t)?.total())));
            out.push(match result {
                Ok((kernel, lemma)) => Check::relative(name, kernel, lemma, v.kernel_tolerance),
                Err(e) => Check::failed(name, &e),
            });
        }
    }
    out
}

/// Per-replication least-squares slope of `f(X(t_k))` against `k`.
fn trend(ens: &Ensemble, f: impl Fn(f64) -> f64) -> StatEstimate {
    let cols = ens.cols();
    let kbar = (cols - 1) as f64 / 2.0;
    let skk: f64 = (0..cols).map(|k| (k as f64 - kbar).powi(2)).sum();
    let slopes: Vec<f64> = (0..ens.replications())
        .map(|r| {
            ens.x_row(r)
                .iter()
                .enumerate()
                .map(|(k, &x)| (k as f64 - kbar) * f(x))
                .sum::<f64>()
                / skk
        })
        .collect();
    mean_with_se(&slopes)
}

fn ensemble_checks(geom: &TrawlGeometry, cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<Check>> {
    let v = &cfg.verify;
    let ens_cfg = EnsembleConfig {
        n: v.n,
        replications: v.replications,
        ..cfg.ensemble_config()
    };
    let ens = run_ensemble(&ens_cfg, threads)?;
    let seed = &cfg.seed;
    let leb = geom.leb_a();
    let z = v.z;
    let mut out = vec![
        Check::statistical("marginal cumulant m=1".into(), ens.pooled_mean(), leb * seed.cumulant(1), z),
        Check::statistical("marginal cumulant m=2".into(), ens.pooled_variance(), leb * seed.cumulant(2), z),
    ];
    if matches!(seed.family, SeedFamily::Poisson { .. }) {
        out.push(Check::statistical(
            "marginal cumulant m=3".into(),
            ens.pooled_central_moment(3),
            leb * seed.cumulant(3),
            z,
        ));
    }
    for d in [1usize, 2, 5, 10] {
        let h = d as f64 * ens_cfg.delta;
        match empirical_acf(&ens, d) {
            Ok(est) => out.push(Check::statistical(format!("acf lag {d}"), est, geom.correlation(h)?, z)),
            Err(e) => out.push(Check::failed(format!("acf lag {d}"), &e)),
        }
    }
    let mu = ens.pooled_mean().value;
    out.push(Check::statistical("stationarity of mean".into(), trend(&ens, |x| x), 0.0, z));
    out.push(Check::statistical(
        "stationarity of variance".into(),
        trend(&ens, |x| (x - mu).powi(2)),
        0.0,
        z,
    ));
    let n = ens_cfg.n;
    let last = ens.xstar_column(n);
    let drift = if seed.centered { 0.0 } else { ens.time(n) * leb * seed.cumulant(1) };
    out.push(Check::statistical(format!("Xstar mean at k={n}"), mean_with_se(&last), drift, z));
    out.push(Check::statistical(
        format!("Xstar variance at k={n}"),
        sample_variance(&last),
        discrete_sum_variance(geom, seed, ens_cfg.delta, n)?,
        z,
    ));
    Ok(out)
}

/// Runs every check. Configuration and budget problems are errors; failed
/// checks, including quadrature that cannot meet its tolerance, are rows.
pub fn run_verify(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<VerifyReport> {
    cfg.validate()?;
    let geom = TrawlGeometry::new(cfg.trawl)?;
    let mut checks = partition_checks(&geom, cfg.grid.delta, cfg.verify.n)?;
    checks.extend(kernel_checks(&geom, cfg));
    checks.extend(ensemble_checks(&geom, cfg, threads)?);
    Ok(VerifyReport { checks })
}
