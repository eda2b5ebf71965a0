//! Cumulants of the integrated process `X*(t) = ∫_0^t X(u) du`.
//!
//! `κ_{X*}^{(m)}(t) = κ_L^{(m)} ∬ h_A(ξ, s, t)^m dξ ds` and the double integral
//! splits into four pieces that reduce to the one-dimensional moment
//! integrals `J_p(t) = ∫_0^t u^p g(u) du`:
//!
//! * `I₁ = t^m G(t)`
//! * `I₂ = I₃ = J_m(t)`
//! * `I₄ = t m J_{m-1}(t) - (m+1) J_m(t)`

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result, TrawlError};
use crate::quad::{self, QuadSettings};
use crate::seed::SeedSpec;
use crate::trawl::{TrawlGeometry, TrawlSpec};

/// `ε` reported for the `m = α + 1` growth bound.
pub const BOUNDARY_EPSILON: f64 = 0.01;

/// `h_A(ξ, s, t) = ∫_0^t 1_A(ξ, s - u) du`, the time the point `(ξ, s)`
/// spends inside the moving trawl during `[0, t]`.
pub fn kernel_h(geom: &TrawlGeometry, xi: f64, s: f64, t: f64) -> f64 {
    if !(xi >= 0.0) || xi > geom.g_max() || s > t || t <= 0.0 {
        return 0.0;
    }
    let floor = geom.g_unchecked(t - s);
    if s <= 0.0 {
        if xi <= floor {
            t
        } else if xi <= geom.g_unchecked(-s) {
            geom.g_inverse_unchecked(xi) + s
        } else {
            0.0
        }
    } else if xi <= floor {
        t - s
    } else {
        geom.g_inverse_unchecked(xi)
    }
}

fn moment_quad_settings(geom: &TrawlGeometry) -> QuadSettings {
    QuadSettings {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        ..*geom.quad_settings()
    }
}

/// `J_p(t) = ∫_0^t u^p g(u) du`.
///
/// For the gamma trawl the part beyond `u = 1` is evaluated in closed form
/// by expanding `u^p = (w - 1)^p` in `w = 1 + u`; the head `[0, min(t, 1)]`,
/// where that expansion cancels badly, and every other family go through
/// adaptive quadrature.
pub fn moment_integral(geom: &TrawlGeometry, p: u32, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("moment integral needs t >= 0, got {t}"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    match *geom.spec() {
        TrawlSpec::Gamma { alpha } if t > 1.0 => {
            let head = moment_integral_quadrature(geom, p, 1.0)?;
            Ok(head + gamma_moment_tail(alpha, p, t))
        }
        _ => moment_integral_quadrature(geom, p, t),
    }
}

/// `J_p(t)` by adaptive quadrature only.
pub fn moment_integral_quadrature(geom: &TrawlGeometry, p: u32, t: f64) -> Result<f64> {
    let settings = moment_quad_settings(geom);
    let f = |u: f64| u.powi(p as i32) * geom.g_unchecked(u);
    Ok(quad::integrate(f, 0.0, t, &settings)?.value)
}

/// `∫_1^t u^p (1+u)^{-α-1} du` for `t > 1`.
fn gamma_moment_tail(alpha: f64, p: u32, t: f64) -> f64 {
    // ∫_2^{1+t} (w-1)^p w^{-α-1} dw = Σ_k C(p,k) (-1)^{p-k} ∫_2^{1+t} w^{k-α-1} dw
    let log_ratio = ((1.0 + t) / 2.0).ln();
    let mut binom = 1.0;
    let mut total = 0.0;
    for k in 0..=p {
        if k > 0 {
            binom *= f64::from(p - k + 1) / f64::from(k);
        }
        let c = f64::from(k) - alpha;
        // ∫_2^W w^{c-1} dw = 2^c (exp(c ln(W/2)) - 1) / c
        let piece = if c == 0.0 {
            log_ratio
        } else {
            2f64.powf(c) * (c * log_ratio).exp_m1() / c
        };
        let sign = if (p - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * binom * piece;
    }
    total
}

/// The four pieces of `∬ h_A^m dξ ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralComponents {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
}

impl IntegralComponents {
    pub fn total(&self) -> f64 {
        self.i1 + self.i2 + self.i3 + self.i4
    }
}

pub fn integral_components(geom: &TrawlGeometry, m: u32, t: f64) -> Result<IntegralComponents> {
    if m < 1 {
        return domain("cumulant order must be >= 1");
    }
    if !(t > 0.0) {
        return domain(format!("integral components need t > 0, got {t}"));
    }
    let mf = f64::from(m);
    let j_m = moment_integral(geom, m, t)?;
    let j_prev = moment_integral(geom, m - 1, t)?;
    Ok(IntegralComponents {
        i1: t.powi(m as i32) * geom.tail_mass_unchecked(t),
        i2: j_m,
        i3: j_m,
        i4: t * mf * j_prev - (mf + 1.0) * j_m,
    })
}

/// `κ_{X*}^{(m)}(t)`; the first cumulant vanishes for a centred seed.
pub fn integrated_cumulant(geom: &TrawlGeometry, seed: &SeedSpec, m: u32, t: f64) -> Result<f64> {
    let kappa_l = seed.effective_cumulant(m);
    if kappa_l == 0.0 {
        return Ok(0.0);
    }
    Ok(kappa_l * integral_components(geom, m, t)?.total())
}

/// `κ_{X*}^{(m)}` over a grid of horizons, with the component breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulantCurve {
    pub m: u32,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub components: Vec<IntegralComponents>,
}

pub fn cumulant_curve(geom: &TrawlGeometry, seed: &SeedSpec, m: u32, t_grid: &[f64]) -> Result<CumulantCurve> {
    let kappa_l = seed.effective_cumulant(m);
    let components = t_grid
        .par_iter()
        .map(|&t| integral_components(geom, m, t))
        .collect::<Result<Vec<_>>>()?;
    let values = components
        .iter()
        .map(|c| if kappa_l == 0.0 { 0.0 } else { kappa_l * c.total() })
        .collect();
    Ok(CumulantCurve {
        m,
        t_grid: t_grid.to_vec(),
        values,
        components,
    })
}

/// Large-`t` behaviour of `κ_{X*}^{(m)}(t)` for a regularly varying trawl.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CumulantGrowth {
    /// `κ^{(m)}(t) ~ constant · t^exponent` (`m > α + 1`).
    PowerLaw { exponent: f64, constant: f64 },
    /// `|κ^{(m)}(t)| ≤ C t` (`m < α + 1`).
    LinearBound,
    /// `|κ^{(m)}(t)| ≤ C t^{1+ε}` (`m = α + 1`, integer α).
    NearLinearBound { epsilon: f64 },
}

impl CumulantGrowth {
    pub fn exponent(&self) -> f64 {
        match *self {
            CumulantGrowth::PowerLaw { exponent, .. } => exponent,
            CumulantGrowth::LinearBound => 1.0,
            CumulantGrowth::NearLinearBound { epsilon } => 1.0 + epsilon,
        }
    }
}

/// `C_m = 1/α + 2/(m-α) + (α+1)/((m-α-1)(m-α))`, the limit of
/// `(I₁+I₂+I₃+I₄) / (L(t) t^{m-α})` for `m > α + 1`.
pub fn asymptotic_constant(alpha: f64, m: u32) -> f64 {
    let m = f64::from(m);
    1.0 / alpha + 2.0 / (m - alpha) + (alpha + 1.0) / ((m - alpha - 1.0) * (m - alpha))
}

pub fn asymptotic_cumulant(geom: &TrawlGeometry, seed: &SeedSpec, m: u32) -> Result<CumulantGrowth> {
    if m < 2 {
        return domain("asymptotic growth is only defined for m >= 2");
    }
    let alpha = regular_variation_index(geom)?;
    let mf = f64::from(m);
    let boundary = alpha + 1.0;
    if (mf - boundary).abs() <= 1e-12 * boundary {
        Ok(CumulantGrowth::NearLinearBound {
            epsilon: BOUNDARY_EPSILON,
        })
    } else if mf > boundary {
        // the gamma trawl's slowly varying factor tends to 1
        Ok(CumulantGrowth::PowerLaw {
            exponent: mf - alpha,
            constant: asymptotic_constant(alpha, m) * seed.cumulant(m),
        })
    } else {
        Ok(CumulantGrowth::LinearBound)
    }
}

fn regular_variation_index(geom: &TrawlGeometry) -> Result<f64> {
    geom.alpha().ok_or_else(|| {
        TrawlError::UnsupportedFamily(format!(
            "{} trawl is not regularly varying at infinity",
            geom.spec().name()
        ))
    })
}

/// Raw moments `E[Y^1..=m]` from cumulants `κ^{(1..=m)}` by
/// `E[Y^p] = Σ_{j=1}^p C(p-1, j-1) κ^{(j)} E[Y^{p-j}]`.
pub fn moments_from_cumulants(cumulants: &[f64]) -> Vec<f64> {
    let mut moments = vec![1.0];
    for p in 1..=cumulants.len() {
        let mut binom = 1.0; // C(p-1, j-1)
        let mut acc = 0.0;
        for j in 1..=p {
            if j > 1 {
                binom *= (p - j + 1) as f64 / (j - 1) as f64;
            }
            acc += binom * cumulants[j - 1] * moments[p - j];
        }
        moments.push(acc);
    }
    moments.remove(0);
    moments
}

/// `E[X*(t)^p]` for integer `p` from the analytic cumulants.
pub fn integrated_moment(geom: &TrawlGeometry, seed: &SeedSpec, p: u32, t: f64) -> Result<f64> {
    let kappas = (1..=p)
        .map(|m| integrated_cumulant(geom, seed, m, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(*moments_from_cumulants(&kappas).last().unwrap_or(&1.0))
}

/// Smallest even integer strictly greater than `2α`.
pub fn critical_order(alpha: f64) -> f64 {
    2.0 * (alpha.floor() + 1.0)
}

/// What the intermittency theorem says about `τ(q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TauPrediction {
    /// `τ(q) = q - α`.
    Exact { tau: f64, q_star: f64 },
    /// `q < q*`: not determined.
    Unspecified { q_star: f64 },
}

impl TauPrediction {
    pub fn value(&self) -> Option<f64> {
        match *self {
            TauPrediction::Exact { tau, .. } => Some(tau),
            TauPrediction::Unspecified { .. } => None,
        }
    }

    pub fn q_star(&self) -> f64 {
        match *self {
            TauPrediction::Exact { q_star, .. } | TauPrediction::Unspecified { q_star } => q_star,
        }
    }
}

pub fn theoretical_tau(geom: &TrawlGeometry, q: f64) -> Result<TauPrediction> {
    if !(q > 0.0) {
        return domain(format!("q must be positive, got {q}"));
    }
    let alpha = regular_variation_index(geom)?;
    let q_star = critical_order(alpha);
    if q >= q_star {
        Ok(TauPrediction::Exact { tau: q - alpha, q_star })
    } else {
        Ok(TauPrediction::Unspecified { q_star })
    }
}
