//! Trawl functions and the deterministic geometry of the trawl set
//! `A = {(ξ, s) : 0 ≤ ξ ≤ g(-s), s ≤ 0}`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, TrawlError};
use crate::quad::{self, Estimate, QuadSettings};

/// Parametric trawl function `g : [0, ∞) → (0, g(0)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrawlSpec {
    /// `g(x) = (1 + x)^{-α-1}`, regularly varying with index `-(α+1)`.
    Gamma { alpha: f64 },
    /// `g(x) = exp(-λ x)`, short memory.
    Exponential { lambda: f64 },
}

impl TrawlSpec {
    pub fn gamma(alpha: f64) -> Result<Self> {
        let spec = TrawlSpec::Gamma { alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exponential(lambda: f64) -> Result<Self> {
        let spec = TrawlSpec::Exponential { lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TrawlSpec::Gamma { alpha } if !(alpha.is_finite() && alpha > 0.0) => {
                domain(format!("gamma trawl needs alpha > 0, got {alpha}"))
            }
            TrawlSpec::Exponential { lambda } if !(lambda.is_finite() && lambda > 0.0) => {
                domain(format!("exponential trawl needs lambda > 0, got {lambda}"))
            }
            _ => Ok(()),
        }
    }

    /// Index α of regular variation of `g` (as `g(x) = L(x) x^{-α-1}`), if any.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            TrawlSpec::Gamma { alpha } => Some(alpha),
            TrawlSpec::Exponential { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TrawlSpec::Gamma { .. } => "gamma",
            TrawlSpec::Exponential { .. } => "exponential",
        }
    }
}

/// A validated trawl with its cached Lebesgue measure `Leb(A) = G(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrawlGeometry {
    spec: TrawlSpec,
    leb_a: f64,
    quad: QuadSettings,
}

impl TrawlGeometry {
    pub fn new(spec: TrawlSpec) -> Result<Self> {
        spec.validate()?;
        let mut geom = TrawlGeometry {
            spec,
            leb_a: 0.0,
            quad: QuadSettings::default(),
        };
        geom.leb_a = geom.tail_mass_unchecked(0.0);
        Ok(geom)
    }

    pub fn with_quad_settings(mut self, quad: QuadSettings) -> Self {
        self.quad = quad;
        self
    }

    pub fn spec(&self) -> &TrawlSpec {
        &self.spec
    }

    pub fn quad_settings(&self) -> &QuadSettings {
        &self.quad
    }

    /// `Leb(A) = ∫_0^∞ g`.
    pub fn leb_a(&self) -> f64 {
        self.leb_a
    }

    pub fn alpha(&self) -> Option<f64> {
        self.spec.alpha()
    }

    /// `g(0)`, the height of the trawl.
    pub fn g_max(&self) -> f64 {
        1.0
    }

    /// `g(x)`.
    pub fn g(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return domain(format!("g is defined on [0, ∞), got x = {x}"));
        }
        Ok(self.g_unchecked(x))
    }

    pub(crate) fn g_unchecked(&self, x: f64) -> f64 {
        match self.spec {
            TrawlSpec::Gamma { alpha } => (-(alpha + 1.0) * x.ln_1p()).exp(),
            TrawlSpec::Exponential { lambda } => (-lambda * x).exp(),
        }
    }

    /// `g⁻¹(ξ)` for `ξ ∈ (0, g(0)]`.
    pub fn g_inverse(&self, xi: f64) -> Result<f64> {
        if !(xi > 0.0 && xi <= self.g_max()) {
            return domain(format!("g inverse is defined on (0, {}], got xi = {xi}", self.g_max()));
        }
        Ok(self.g_inverse_unchecked(xi))
    }

    pub(crate) fn g_inverse_unchecked(&self, xi: f64) -> f64 {
        match self.spec {
            TrawlSpec::Gamma { alpha } => (-xi.ln() / (alpha + 1.0)).exp_m1(),
            TrawlSpec::Exponential { lambda } => -xi.ln() / lambda,
        }
    }

    /// Tail mass `G(h) = ∫_h^∞ g(x) dx`, closed form.
    pub fn tail_mass(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return domain(format!("tail mass needs h >= 0, got {h}"));
        }
        Ok(self.tail_mass_unchecked(h))
    }

    pub(crate) fn tail_mass_unchecked(&self, h: f64) -> f64 {
        match self.spec {
            TrawlSpec::Gamma { alpha } => (-alpha * h.ln_1p()).exp() / alpha,
            TrawlSpec::Exponential { lambda } => (-lambda * h).exp() / lambda,
        }
    }

    /// `G(h)` by adaptive quadrature, independent of the closed form.
    pub fn tail_mass_quadrature(&self, h: f64) -> Result<Estimate> {
        if !(h >= 0.0) {
            return domain(format!("tail mass needs h >= 0, got {h}"));
        }
        // relative control only: G(h) can be far below the absolute tolerance
        let settings = QuadSettings {
            abs_tol: 0.0,
            ..self.quad
        };
        quad::integrate_heavy_tail(|x| self.g_unchecked(x), h, &settings)
    }

    /// Correlation `r(h) = G(h) / G(0)`.
    pub fn correlation(&self, h: f64) -> Result<f64> {
        Ok(self.tail_mass(h)? / self.leb_a)
    }

    /// Karamata asymptote of the correlation, `L(h) h^{-α} / (α Leb(A))`,
    /// with `L(h) = h^{α+1} g(h)`.
    pub fn karamata_asymptote(&self, h: f64) -> Result<f64> {
        let alpha = self.alpha().ok_or_else(|| {
            TrawlError::UnsupportedFamily(format!(
                "{} trawl is not regularly varying at infinity",
                self.spec.name()
            ))
        })?;
        if !(h > 0.0) {
            return domain(format!("karamata asymptote needs h > 0, got {h}"));
        }
        let slowly_varying = ((alpha + 1.0) * h.ln()).exp() * self.g_unchecked(h);
        Ok(slowly_varying * (-alpha * h.ln()).exp() / (alpha * self.leb_a))
    }
}
