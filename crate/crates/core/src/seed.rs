//! Infinitely divisible seed laws: cumulant functions, cumulants and exact
//! samplers for `Λ(C)` over a cell of given Lebesgue measure.
//!
//! Every admitted family is closed under convolution, so `Λ(C)` for a cell of
//! measure `leb` is drawn directly from the same family with `leb`-scaled
//! parameters.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, TrawlError};

fn law_error<E: std::fmt::Display>(e: E) -> TrawlError {
    TrawlError::Domain(e.to_string())
}

/// Family and parameters of the law of `L(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedFamily {
    Poisson { nu: f64 },
    Gamma { shape: f64, rate: f64 },
    Gaussian { mean: f64, variance: f64 },
    /// `IG(δ, γ)` with cumulant function `δ (γ - sqrt(γ² - 2iζ))`.
    InverseGaussian { delta: f64, gamma: f64 },
}

/// A Lévy seed: the family plus whether trajectories are centred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedSpec {
    #[serde(flatten)]
    pub family: SeedFamily,
    #[serde(default = "default_centered")]
    pub centered: bool,
}

fn default_centered() -> bool {
    true
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        domain(format!("{name} must be positive and finite, got {v}"))
    }
}

impl SeedSpec {
    pub fn new(family: SeedFamily, centered: bool) -> Result<Self> {
        let seed = SeedSpec { family, centered };
        seed.validate()?;
        Ok(seed)
    }

    pub fn poisson(nu: f64) -> Result<Self> {
        Self::new(SeedFamily::Poisson { nu }, true)
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::new(SeedFamily::Gamma { shape, rate }, true)
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        Self::new(SeedFamily::Gaussian { mean, variance }, true)
    }

    pub fn inverse_gaussian(delta: f64, gamma: f64) -> Result<Self> {
        Self::new(SeedFamily::InverseGaussian { delta, gamma }, true)
    }

    pub fn with_centering(mut self, centered: bool) -> Self {
        self.centered = centered;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            SeedFamily::Poisson { nu } => positive("poisson nu", nu),
            SeedFamily::Gamma { shape, rate } => {
                positive("gamma shape", shape)?;
                positive("gamma rate", rate)
            }
            SeedFamily::Gaussian { mean, variance } => {
                if !mean.is_finite() {
                    return domain(format!("gaussian mean must be finite, got {mean}"));
                }
                // b = 0 is a valid (degenerate) triplet
                if !(variance.is_finite() && variance >= 0.0) {
                    return domain(format!("gaussian variance must be >= 0, got {variance}"));
                }
                Ok(())
            }
            SeedFamily::InverseGaussian { delta, gamma } => {
                positive("inverse gaussian delta", delta)?;
                positive("inverse gaussian gamma", gamma)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            SeedFamily::Poisson { .. } => "poisson",
            SeedFamily::Gamma { .. } => "gamma",
            SeedFamily::Gaussian { .. } => "gaussian",
            SeedFamily::InverseGaussian { .. } => "inverse_gaussian",
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.family, SeedFamily::Gaussian { .. })
    }

    /// True when `Λ(C) ≥ 0` almost surely.
    pub fn is_nonnegative(&self) -> bool {
        !self.is_gaussian()
    }

    /// Cumulant function `κ(ζ) = log E exp(iζ L(1))`.
    pub fn cumulant_function(&self, zeta: f64) -> Complex64 {
        let i = Complex64::i();
        match self.family {
            SeedFamily::Poisson { nu } => nu * ((i * zeta).exp() - 1.0),
            SeedFamily::Gamma { shape, rate } => -shape * (Complex64::new(1.0, -zeta / rate)).ln(),
            SeedFamily::Gaussian { mean, variance } => Complex64::new(-0.5 * variance * zeta * zeta, mean * zeta),
            SeedFamily::InverseGaussian { delta, gamma } => {
                delta * (gamma - Complex64::new(gamma * gamma, -2.0 * zeta).sqrt())
            }
        }
    }

    /// m-th cumulant of the uncentred `L(1)`.
    pub fn cumulant(&self, m: u32) -> f64 {
        assert!(m >= 1, "cumulant order starts at 1");
        match self.family {
            SeedFamily::Poisson { nu } => nu,
            SeedFamily::Gamma { shape, rate } => {
                let fact: f64 = (1..m).map(f64::from).product();
                shape * fact / rate.powi(m as i32)
            }
            SeedFamily::Gaussian { mean, variance } => match m {
                1 => mean,
                2 => variance,
                _ => 0.0,
            },
            SeedFamily::InverseGaussian { delta, gamma } => {
                // (2m-3)!! δ γ^{1-2m}, with (-1)!! = 1
                let double_fact: f64 = (1..m.saturating_sub(1)).map(|k| f64::from(2 * k + 1)).product();
                delta * double_fact * gamma.powi(1 - 2 * m as i32)
            }
        }
    }

    /// Cumulant of the law actually driving trajectories: order 1 vanishes
    /// for a centred seed.
    pub fn effective_cumulant(&self, m: u32) -> f64 {
        if m == 1 && self.centered {
            0.0
        } else {
            self.cumulant(m)
        }
    }

    /// κ^{(1..=m)} of the uncentred seed.
    pub fn cumulants(&self, m: u32) -> CumulantVector {
        CumulantVector {
            values: (1..=m).map(|k| self.cumulant(k)).collect(),
        }
    }

    /// `E Λ(C) = leb · κ^{(1)}`.
    pub fn patch_mean(&self, leb: f64) -> f64 {
        leb * self.cumulant(1)
    }

    /// Prepared sampler for `Λ(C)` with `Leb(C) = leb`.
    pub fn patch_sampler(&self, leb: f64) -> Result<PatchSampler> {
        if !(leb >= 0.0 && leb.is_finite()) {
            return domain(format!("cell measure must be finite and >= 0, got {leb}"));
        }
        if leb == 0.0 {
            return Ok(PatchSampler::Zero);
        }
        let sampler = match self.family {
            SeedFamily::Poisson { nu } => {
                PatchSampler::Poisson(Poisson::new(nu * leb).map_err(law_error)?)
            }
            SeedFamily::Gamma { shape, rate } => PatchSampler::Gamma(
                Gamma::new(shape * leb, 1.0 / rate).map_err(law_error)?,
            ),
            SeedFamily::Gaussian { mean, variance } => {
                if variance == 0.0 {
                    PatchSampler::Constant(mean * leb)
                } else {
                    PatchSampler::Normal(
                        Normal::new(mean * leb, (variance * leb).sqrt())
                            .map_err(law_error)?,
                    )
                }
            }
            SeedFamily::InverseGaussian { delta, gamma } => {
                let d = delta * leb;
                PatchSampler::InverseGaussian(InverseGaussianSampler {
                    mean: d / gamma,
                    shape: d * d,
                })
            }
        };
        Ok(sampler)
    }

    /// One draw of `Λ(C)` for a cell of measure `leb` (uncentred).
    pub fn sample_patch<R: Rng + ?Sized>(&self, leb: f64, rng: &mut R) -> Result<f64> {
        Ok(self.patch_sampler(leb)?.sample(rng))
    }
}

/// Cumulants `κ^{(1)}, …, κ^{(m)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantVector {
    pub values: Vec<f64>,
}

impl CumulantVector {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// κ^{(m)}, 1-based.
    pub fn get(&self, m: usize) -> f64 {
        self.values[m - 1]
    }
}

/// A sampler for one cell measure, built once and reused across draws.
#[derive(Debug, Clone, Copy)]
pub enum PatchSampler {
    Zero,
    Constant(f64),
    Poisson(Poisson<f64>),
    Gamma(Gamma<f64>),
    Normal(Normal<f64>),
    InverseGaussian(InverseGaussianSampler),
}

impl PatchSampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            PatchSampler::Zero => 0.0,
            PatchSampler::Constant(c) => *c,
            PatchSampler::Poisson(d) => d.sample(rng),
            PatchSampler::Gamma(d) => d.sample(rng),
            PatchSampler::Normal(d) => d.sample(rng),
            PatchSampler::InverseGaussian(d) => d.sample(rng),
        }
    }
}

/// Michael–Schucany–Haas sampler for `IG(mean, shape)`, with the root
/// written in a cancellation-free form so very skewed cells stay positive.
#[derive(Debug, Clone, Copy)]
pub struct InverseGaussianSampler {
    mean: f64,
    shape: f64,
}

impl InverseGaussianSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mu = self.mean;
        let v: f64 = rng.sample(StandardNormal);
        let y = mu * v * v;
        // x = mu + (mu / 2λ)(y - sqrt(y² + 4λy)), rationalised
        let root = y + (y * y + 4.0 * self.shape * y).sqrt();
        let x = if y > 0.0 { 4.0 * mu * self.shape * y / (root * root) } else { mu };
        let u: f64 = rng.random();
        if u <= mu / (mu + x) {
            x
        } else {
            mu * mu / x
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_seeds() -> Vec<SeedSpec> {
        vec![
            SeedSpec::poisson(1.3).unwrap(),
            SeedSpec::gamma(2.0, 1.5).unwrap(),
            SeedSpec::gaussian(0.4, 2.0).unwrap(),
            SeedSpec::inverse_gaussian(1.2, 1.1).unwrap(),
        ]
    }

    /// Fornberg weights for the m-th derivative at 0 on nodes `xs`.
    fn fd_weights(xs: &[f64], m: usize) -> Vec<f64> {
        let n = xs.len();
        let mut c = vec![vec![0.0; m + 1]; n];
        c[0][0] = 1.0;
        let mut c1 = 1.0;
        let mut c4 = xs[0];
        for i in 1..n {
            let mn = i.min(m);
            let mut c2 = 1.0;
            let c5 = c4;
            c4 = xs[i];
            for j in 0..i {
                let c3 = xs[i] - xs[j];
                c2 *= c3;
                if j == i - 1 {
                    for k in (1..=mn).rev() {
                        c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                    }
                    c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
                }
                for k in (1..=mn).rev() {
                    c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
                }
                c[j][0] = c4 * c[j][0] / c3;
            }
            c1 = c2;
        }
        c.iter().map(|row| row[m]).collect()
    }

    fn fd_cumulant(seed: &SeedSpec, m: usize) -> f64 {
        let h = 0.04;
        let xs: Vec<f64> = (-6..=6).map(|k| k as f64 * h).collect();
        let w = fd_weights(&xs, m);
        let deriv: Complex64 = xs.iter().zip(&w).map(|(x, w)| *w * seed.cumulant_function(*x)).sum();
        // κ^{(m)} = (-i)^m d^m κ / dζ^m
        (Complex64::new(0.0, -1.0).powi(m as i32) * deriv).re
    }

    #[test]
    fn cumulant_function_examples() {
        for seed in all_seeds() {
            assert_eq!(seed.cumulant_function(0.0).norm(), 0.0);
        }
        let p = SeedSpec::poisson(1.0).unwrap().cumulant_function(std::f64::consts::PI);
        assert!((p.re + 2.0).abs() < 1e-15 && p.im.abs() < 1e-15);
        let g = SeedSpec::gaussian(0.0, 1.0).unwrap().cumulant_function(2.0);
        assert_eq!(g, Complex64::new(-2.0, 0.0));
    }

    #[test]
    fn poisson_cumulant_function_matches_empirical_characteristic_function() {
        let seed = SeedSpec::poisson(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let zeta = std::f64::consts::PI;
        let ecf: Complex64 = (0..n)
            .map(|_| (Complex64::i() * zeta * seed.sample_patch(1.0, &mut rng).unwrap()).exp())
            .sum::<Complex64>()
            / n as f64;
        let exact = seed.cumulant_function(zeta).exp();
        // |e^{iζN}| = 1 so each component has SE <= 1/sqrt(n)
        assert!((ecf - exact).norm() < 4.0 * 2f64.sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn real_part_is_nonpositive() {
        for seed in all_seeds() {
            for k in -50..=50 {
                let z = k as f64 * 0.37;
                assert!(seed.cumulant_function(z).re <= 1e-15, "{seed:?} at {z}");
            }
        }
    }

    #[test]
    fn cumulant_examples() {
        assert_eq!(SeedSpec::poisson(1.0).unwrap().cumulant(4), 1.0);
        assert_eq!(SeedSpec::gamma(2.0, 1.0).unwrap().cumulant(3), 4.0);
        assert_eq!(SeedSpec::gaussian(0.0, 1.0).unwrap().cumulant(3), 0.0);
        let ig = SeedSpec::inverse_gaussian(2.0, 0.5).unwrap();
        assert!((ig.cumulant(1) - 4.0).abs() < 1e-14);
        assert!((ig.cumulant(2) - 16.0).abs() < 1e-12);
        assert!((ig.cumulant(3) - 3.0 * 2.0 * 0.5f64.powi(-5)).abs() < 1e-10);
    }

    #[test]
    fn cumulants_match_finite_differences() {
        for seed in all_seeds() {
            for m in 1..=4u32 {
                let exact = seed.cumulant(m);
                let fd = fd_cumulant(&seed, m as usize);
                if exact == 0.0 {
                    assert!(fd.abs() < 1e-7, "{seed:?} m={m}: {fd}");
                } else {
                    assert!((fd - exact).abs() / exact.abs() < 1e-5, "{seed:?} m={m}: {fd} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn gamma_third_cumulant_by_finite_differences() {
        let seed = SeedSpec::gamma(2.0, 1.0).unwrap();
        assert!((fd_cumulant(&seed, 3) - 4.0).abs() < 4e-5);
    }

    #[test]
    fn cumulant_growth_is_geometric() {
        for seed in all_seeds() {
            let roots: Vec<f64> = (1..=12).map(|m| seed.cumulant(m).abs().powf(1.0 / m as f64)).collect();
            // |κ^{(m)}|^{1/m} grows at most linearly in m for an analytic κ
            for (m, r) in roots.iter().enumerate() {
                assert!(r.is_finite() && *r <= 10.0 * (m + 1) as f64, "{seed:?}: {roots:?}");
            }
        }
    }

    #[test]
    fn patch_mean_examples() {
        assert_eq!(SeedSpec::poisson(1.0).unwrap().patch_mean(5.0), 5.0);
        assert_eq!(SeedSpec::gaussian(0.0, 1.0).unwrap().patch_mean(3.7), 0.0);
        assert_eq!(SeedSpec::gamma(2.0, 4.0).unwrap().patch_mean(2.0), 1.0);
    }

    #[test]
    fn empty_cell_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for seed in all_seeds() {
            assert_eq!(seed.sample_patch(0.0, &mut rng).unwrap(), 0.0);
        }
        assert!(SeedSpec::poisson(1.0).unwrap().sample_patch(-1.0, &mut rng).is_err());
    }

    fn sample(seed: &SeedSpec, leb: f64, n: usize, stream: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        rng.set_stream(stream);
        let s = seed.patch_sampler(leb).unwrap();
        (0..n).map(|_| s.sample(&mut rng)).collect()
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn poisson_patch_mean() {
        let xs = sample(&SeedSpec::poisson(2.0).unwrap(), 3.0, 100_000, 0);
        let (m, _) = mean_var(&xs);
        assert!((m - 6.0).abs() < 4.0 * (6.0f64 / 1e5).sqrt());
    }

    #[test]
    fn gamma_patch_variance() {
        let xs = sample(&SeedSpec::gamma(1.0, 1.0).unwrap(), 2.0, 100_000, 0);
        let (m, v) = mean_var(&xs);
        let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / xs.len() as f64;
        let se = ((m4 - v * v) / xs.len() as f64).sqrt();
        assert!((v - 2.0).abs() < 4.0 * se, "{v} ± {se}");
    }

    #[test]
    fn inverse_gaussian_patch_moments() {
        let seed = SeedSpec::inverse_gaussian(1.0, 2.0).unwrap();
        for leb in [0.01, 1.0, 5.0] {
            let xs = sample(&seed, leb, 100_000, 3);
            assert!(xs.iter().all(|x| *x >= 0.0));
            let (m, v) = mean_var(&xs);
            let mean = leb * seed.cumulant(1);
            assert!((m - mean).abs() < 4.0 * (v / xs.len() as f64).sqrt(), "leb={leb}: {m} vs {mean}");
            let var = leb * seed.cumulant(2);
            let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / xs.len() as f64;
            let se = ((m4 - v * v) / xs.len() as f64).sqrt();
            assert!((v - var).abs() < 4.0 * se, "leb={leb}: {v} vs {var} ± {se}");
        }
    }

    /// First four k-statistics with delete-one-free normal-theory SEs from
    /// the sample itself (moment estimates of Var k_j).
    fn sample_cumulants(xs: &[f64]) -> [f64; 4] {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let c = |p: i32| xs.iter().map(|x| (x - m).powi(p)).sum::<f64>() / n;
        let (m2, m3, m4) = (c(2), c(3), c(4));
        [m, m2, m3, m4 - 3.0 * m2 * m2]
    }

    #[test]
    fn convolution_closure() {
        let n = 100_000;
        for seed in all_seeds() {
            let whole = sample(&seed, 1.5, n, 10);
            let a = sample(&seed, 0.5, n, 11);
            let b = sample(&seed, 1.0, n, 12);
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let cw = sample_cumulants(&whole);
            let cs = sample_cumulants(&sum);
            // SE of each sample cumulant by batching into 50 groups
            for j in 0..4 {
                let batch = |xs: &[f64]| -> f64 {
                    let vals: Vec<f64> = xs.chunks(n / 50).map(|ch| sample_cumulants(ch)[j]).collect();
                    let (_, v) = mean_var(&vals);
                    (v / vals.len() as f64).sqrt()
                };
                let se = (batch(&whole).powi(2) + batch(&sum).powi(2)).sqrt();
                assert!(
                    (cw[j] - cs[j]).abs() < 4.0 * se + 1e-12,
                    "{seed:?} cumulant {}: {} vs {} (se {se})",
                    j + 1,
                    cw[j],
                    cs[j]
                );
            }
        }
    }
}
