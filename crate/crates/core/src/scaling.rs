//! Scaling function `τ(q) = lim log E|Y(t)|^q / log t`, estimated by log-log
//! regression from ensembles or analytic moment curves, and the intermittency
//! test built on it.

use rayon::prelude::*;
use serde::Serialize;

use crate::cumulant::{critical_order, integrated_moment};
use crate::error::{domain, Result, TrawlError};
use crate::seed::SeedSpec;
use crate::simulator::{Ensemble, StatEstimate};
use crate::trawl::TrawlGeometry;

/// Minimum number of points in a fit window.
pub const MIN_FIT_POINTS: usize = 8;

/// Floor on the combined standard error used by [`intermittency_check`], so
/// that curves with vanishing fit error still need a real gap.
pub const RATIO_TOLERANCE_FLOOR: f64 = 1e-9;

/// Relative allowance for rounding in the shape checks.
const ROUNDING: f64 = 1e-12;

/// Number of replication groups for the delete-one-group jackknife.
pub const JACKKNIFE_GROUPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSource {
    MonteCarlo,
    Analytic,
}

impl CurveSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveSource::MonteCarlo => "monte_carlo",
            CurveSource::Analytic => "analytic",
        }
    }
}

/// `E|v|^q` over the sample with its jackknife standard error.
pub fn absolute_moment(values: &[f64], q: f64) -> Result<StatEstimate> {
    if !(q > 0.0) {
        return domain(format!("moment order must be positive, got {q}"));
    }
    if values.len() < 2 {
        return Err(TrawlError::InsufficientData("moment needs at least two values".into()));
    }
    let n = values.len() as f64;
    let powers: Vec<f64> = values.iter().map(|v| v.abs().powf(q)).collect();
    let total: f64 = powers.iter().sum();
    let full = total / n;
    // leave-one-out means and the jackknife variance (n-1)/n Σ (θ_i - θ̄)²
    let loo_mean = full;
    let ss: f64 = powers.iter().map(|p| ((total - p) / (n - 1.0) - loo_mean).powi(2)).sum();
    if !full.is_finite() {
        return Err(TrawlError::InsufficientData(format!("non-finite moment of order {q}")));
    }
    Ok(StatEstimate {
        value: full,
        stderr: ((n - 1.0) / n * ss).sqrt(),
    })
}

/// `E|X*(t_k)|^q` across the replications of an ensemble.
pub fn empirical_moment(ens: &Ensemble, q: f64, k: usize) -> Result<StatEstimate> {
    if k > ens.config.n {
        return Err(TrawlError::InsufficientData(format!("grid index {k} exceeds {}", ens.config.n)));
    }
    absolute_moment(&ens.xstar_column(k), q)
}

/// Result of one log-log regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauFit {
    pub q: f64,
    pub tau_hat: f64,
    pub stderr: f64,
    pub r2: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

struct Ols {
    slope: f64,
    stderr: f64,
    r2: f64,
}

fn ols(x: &[f64], y: &[f64]) -> Ols {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ols {
        slope,
        stderr: (sse / (n - 2.0) / sxx).sqrt(),
        r2,
    }
}

/// Indices of the points with `t ≥ t_max / 10^decades`. The whole curve must
/// hold at least [`MIN_FIT_POINTS`] points over one decade, and so must the
/// window.
fn window(t: &[f64], decades: f64) -> Result<Vec<usize>> {
    if !(decades >= 1.0) {
        return domain(format!("fit window must span at least one decade, got {decades}"));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) || t.first().is_none_or(|&t0| !(t0 > 0.0)) {
        return domain("fit needs strictly increasing positive times");
    }
    let t_max = *t.last().expect("non-empty");
    let span = (t_max / t[0]).log10();
    let cut = t_max / 10f64.powf(decades) * (1.0 - 1e-12);
    let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= cut).collect();
    if idx.len() < MIN_FIT_POINTS || span < 1.0 - 1e-9 {
        return Err(TrawlError::InsufficientData(format!(
            "{} points spanning {span:.3} decades with {} in the fit window; need {MIN_FIT_POINTS} over one decade",
            t.len(),
            idx.len()
        )));
    }
    Ok(idx)
}

/// OLS slope of `log moment` against `log t` over the top `decades` of `t`.
pub fn fit_tau(t: &[f64], moments: &[f64], q: f64, decades: f64) -> Result<TauFit> {
    if t.len() != moments.len() {
        return domain("times and moments differ in length");
    }
    let idx = window(t, decades)?;
    if idx.iter().any(|&i| !(moments[i] > 0.0 && moments[i].is_finite())) {
        return Err(TrawlError::InsufficientData(format!(
            "moment curve of order {q} has non-positive or non-finite values"
        )));
    }
    let x: Vec<f64> = idx.iter().map(|&i| t[i].ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| moments[i].ln()).collect();
    let fit = ols(&x, &y);
    Ok(TauFit {
        q,
        tau_hat: fit.slope,
        stderr: fit.stderr,
        r2: fit.r2,
        t_min: t[idx[0]],
        t_max: t[*idx.last().expect("non-empty")],
        points: idx.len(),
    })
}

/// Estimated `τ` over a grid of orders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingCurve {
    pub source: CurveSource,
    pub fits: Vec<TauFit>,
}

impl ScalingCurve {
    pub fn q_grid(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.q).collect()
    }

    pub fn tau_hat(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.tau_hat).collect()
    }

    pub fn fit(&self, q: f64) -> Option<&TauFit> {
        self.fits.iter().find(|f| f.q == q)
    }

    /// Midpoint convexity over every ordered triple, with `3σ` slack.
    pub fn is_convex(&self) -> bool {
        let f = &self.fits;
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                for k in j + 1..f.len() {
                    let lam = (f[k].q - f[j].q) / (f[k].q - f[i].q);
                    let chord = lam * f[i].tau_hat + (1.0 - lam) * f[k].tau_hat;
                    let slack = 3.0 * (f[i].stderr.powi(2) + f[j].stderr.powi(2) + f[k].stderr.powi(2)).sqrt()
                        + ROUNDING * (1.0 + chord.abs());
                    if f[j].tau_hat > chord + slack {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `τ(q)/q` non-decreasing, with `3σ` slack.
    pub fn ratio_is_monotone(&self) -> bool {
        let f = &self.fits;
        (0..f.len()).all(|i| {
            (i + 1..f.len()).all(|j| {
                let (a, b) = (f[i].tau_hat / f[i].q, f[j].tau_hat / f[j].q);
                b >= a - 3.0 * ratio_stderr(&f[i], &f[j]) - ROUNDING * (1.0 + a.abs())
            })
        })
    }
}

fn ratio_stderr(a: &TauFit, b: &TauFit) -> f64 {
    ((a.stderr / a.q).powi(2) + (b.stderr / b.q).powi(2)).sqrt()
}

fn check_q_grid(q_grid: &[f64]) -> Result<()> {
    if q_grid.is_empty() || q_grid.iter().any(|q| !(*q > 0.0)) || q_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("q grid must be non-empty, positive and strictly increasing");
    }
    Ok(())
}

/// `τ` from the exact moments `E[X*(t)^q]`; only even integer orders have an
/// analytic route.
pub fn analytic_scaling_curve(
    geom: &TrawlGeometry,
    seed: &SeedSpec,
    q_grid: &[f64],
    t_grid: &[f64],
    decades: f64,
) -> Result<ScalingCurve> {
    check_q_grid(q_grid)?;
    let fits = q_grid
        .par_iter()
        .map(|&q| {
            if q.fract() != 0.0 || !(q as u32).is_multiple_of(2) {
                return domain(format!("analytic moments need even integer q, got {q}"));
            }
            let moments = t_grid
                .iter()
                .map(|&t| integrated_moment(geom, seed, q as u32, t))
                .collect::<Result<Vec<_>>>()?;
            fit_tau(t_grid, &moments, q, decades)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingCurve {
        source: CurveSource::Analytic,
        fits,
    })
}

fn moment_curve(ens: &Ensemble, rows: impl Iterator<Item = usize> + Clone, q: f64, ks: &[usize]) -> Vec<f64> {
    let count = rows.clone().count() as f64;
    ks.iter()
        .map(|&k| rows.clone().map(|r| ens.xstar_row(r)[k].abs().powf(q)).sum::<f64>() / count)
        .collect()
}

/// `τ̂` from the ensemble's `X*(t_k)`, `k ≥ 1`. The standard error is the
/// larger of the OLS error and a delete-one-group jackknife over
/// replications, since moments at different `t` share trajectories.
pub fn ensemble_scaling_curve(ens: &Ensemble, q_grid: &[f64], decades: f64) -> Result<ScalingCurve> {
    check_q_grid(q_grid)?;
    let reps = ens.replications();
    if reps < 2 * JACKKNIFE_GROUPS {
        return Err(TrawlError::InsufficientData(format!(
            "ensemble scaling needs at least {} replications",
            2 * JACKKNIFE_GROUPS
        )));
    }
    let ks: Vec<usize> = (1..=ens.config.n).collect();
    let t: Vec<f64> = ks.iter().map(|&k| ens.time(k)).collect();
    let groups = JACKKNIFE_GROUPS;
    let fits = q_grid
        .par_iter()
        .map(|&q| {
            let full = moment_curve(ens, 0..reps, q, &ks);
            let mut fit = fit_tau(&t, &full, q, decades)?;
            let slopes = (0..groups)
                .map(|g| {
                    let rows = (0..reps).filter(move |r| r % groups != g);
                    fit_tau(&t, &moment_curve(ens, rows, q, &ks), q, decades).map(|f| f.tau_hat)
                })
                .collect::<Result<Vec<_>>>()?;
            let gf = groups as f64;
            let mean = slopes.iter().sum::<f64>() / gf;
            let jack = ((gf - 1.0) / gf * slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>()).sqrt();
            fit.stderr = fit.stderr.max(jack);
            Ok(fit)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingCurve {
        source: CurveSource::MonteCarlo,
        fits,
    })
}

/// Intermittency verdict; `witness` is the first pair `(p, r)` found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub intermittent: bool,
    pub witness: Option<[f64; 2]>,
    pub q_star: f64,
}

/// Looks for `p < r`, both `≥ q*`, with
/// `τ(p)/p + 3σ < τ(r)/r`, where `σ` combines both fit errors.
pub fn intermittency_check(curve: &ScalingCurve, q_star: f64) -> Result<Verdict> {
    let eligible: Vec<&TauFit> = curve.fits.iter().filter(|f| f.q >= q_star).collect();
    if eligible.len() < 2 {
        return Err(TrawlError::InsufficientData(format!(
            "intermittency check needs two orders at or above q* = {q_star}"
        )));
    }
    for (i, p) in eligible.iter().enumerate() {
        for r in &eligible[i + 1..] {
            let sigma = ratio_stderr(p, r).max(RATIO_TOLERANCE_FLOOR);
            if p.tau_hat / p.q + 3.0 * sigma < r.tau_hat / r.q {
                return Ok(Verdict {
                    intermittent: true,
                    witness: Some([p.q, r.q]),
                    q_star,
                });
            }
        }
    }
    Ok(Verdict {
        intermittent: false,
        witness: None,
        q_star,
    })
}

/// [`intermittency_check`] with `q*` taken from the trawl.
pub fn intermittency_for(curve: &ScalingCurve, geom: &TrawlGeometry) -> Result<Verdict> {
    let alpha = geom.alpha().ok_or_else(|| {
        TrawlError::UnsupportedFamily(format!("no critical order for the {} trawl", geom.spec().name()))
    })?;
    intermittency_check(curve, critical_order(alpha))
}
