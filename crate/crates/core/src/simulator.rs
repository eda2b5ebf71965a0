//! Exact simulation of `X(t_0), …, X(t_n)` on the grid `t_k = kΔ`.
//!
//! A point `(ξ, s)` lies in `A_{t_k}` iff `s ≤ t_k ≤ s + g⁻¹(ξ)`, so the grid
//! points it covers form a contiguous run of indices. Grouping points by run
//! splits `∪_k A_{t_k}` into finitely many disjoint cells:
//!
//! * interior cells entered at step `j ≥ 1` that leave after step `j + d`,
//!   of measure `m_d = G(dΔ) - 2G((d+1)Δ) + G((d+2)Δ)`;
//! * interior survivors entered at step `j` and still present at `t_n`,
//!   of measure `v_j = G((n-j)Δ) - G((n-j+1)Δ)`;
//! * boundary cells (`s ≤ t_0`) leaving after step `l`, of measure
//!   `b_l = G(lΔ) - G((l+1)Δ)`;
//! * the boundary survivor, of measure `G(nΔ)`.
//!
//! `Λ` is independent across cells, so one draw per cell gives the grid
//! values exactly in law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, TrawlError};
use crate::seed::{PatchSampler, SeedSpec};
use crate::trawl::{TrawlGeometry, TrawlSpec};

/// Default limit on `n² · R`.
pub const DEFAULT_CELL_BUDGET: u128 = 1 << 33;

/// One cell of the slice partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    /// Entered at step `start ≥ 1`, covers `start..=start + span`.
    Interior { start: usize, span: usize },
    /// Entered at step `start ≥ 1`, covers `start..=n`.
    InteriorSurvivor { start: usize },
    /// `s ≤ t_0`, covers `0..=last`.
    BoundaryExit { last: usize },
    /// `s ≤ t_0`, covers `0..=n`.
    BoundarySurvivor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlicePartition {
    delta: f64,
    n: usize,
    interior: Vec<f64>,
    boundary_exit: Vec<f64>,
    boundary_survivor: f64,
    interior_survivor: Vec<f64>,
}

impl SlicePartition {
    pub fn build(geom: &TrawlGeometry, delta: f64, n: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return domain(format!("grid step must be positive, got {delta}"));
        }
        let tail: Vec<f64> = (0..=n + 1).map(|d| geom.tail_mass_unchecked(d as f64 * delta)).collect();
        // first differences D_d = G(dΔ) - G((d+1)Δ)
        let diff: Vec<f64> = tail.windows(2).map(|w| w[0] - w[1]).collect();
        let interior: Vec<f64> = diff.windows(2).take(n).map(|w| (w[0] - w[1]).max(0.0)).collect();
        let boundary_exit = diff[..n].to_vec();
        let interior_survivor = (1..=n).map(|j| diff[n - j]).collect();
        Ok(SlicePartition {
            delta,
            n,
            interior,
            boundary_exit,
            boundary_survivor: tail[n],
            interior_survivor,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    /// `m_d`, `d = 0..n`.
    pub fn interior_measures(&self) -> &[f64] {
        &self.interior
    }

    /// `b_l`, `l = 0..n`.
    pub fn boundary_exit_measures(&self) -> &[f64] {
        &self.boundary_exit
    }

    pub fn boundary_survivor_measure(&self) -> f64 {
        self.boundary_survivor
    }

    /// `v_j` for `j = 1..=n`, stored at index `j - 1`.
    pub fn interior_survivor_measures(&self) -> &[f64] {
        &self.interior_survivor
    }

    pub fn measure(&self, cell: Cell) -> f64 {
        match cell {
            Cell::Interior { span, .. } => self.interior[span],
            Cell::InteriorSurvivor { start } => self.interior_survivor[start - 1],
            Cell::BoundaryExit { last } => self.boundary_exit[last],
            Cell::BoundarySurvivor => self.boundary_survivor,
        }
    }

    /// Grid indices covered by a cell, inclusive.
    pub fn run(&self, cell: Cell) -> (usize, usize) {
        match cell {
            Cell::Interior { start, span } => (start, start + span),
            Cell::InteriorSurvivor { start } => (start, self.n),
            Cell::BoundaryExit { last } => (0, last),
            Cell::BoundarySurvivor => (0, self.n),
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let n = self.n;
        std::iter::once(Cell::BoundarySurvivor)
            .chain((0..n).map(|last| Cell::BoundaryExit { last }))
            .chain((1..=n).flat_map(move |start| {
                std::iter::once(Cell::InteriorSurvivor { start })
                    .chain((0..n - start).map(move |span| Cell::Interior { start, span }))
            }))
    }

    pub fn cell_count(&self) -> usize {
        1 + self.n + self.n * (self.n + 1) / 2
    }

    /// The cell containing the point `(ξ, s)`, if it covers any grid point.
    pub fn classify(&self, geom: &TrawlGeometry, xi: f64, s: f64) -> Option<Cell> {
        if !(xi > 0.0 && xi <= geom.g_max()) {
            return None;
        }
        let reach = s + geom.g_inverse_unchecked(xi);
        if reach < 0.0 {
            return None;
        }
        let last = (reach / self.delta).floor();
        let survives = last >= self.n as f64;
        if s <= 0.0 {
            return Some(if survives {
                Cell::BoundarySurvivor
            } else {
                Cell::BoundaryExit { last: last as usize }
            });
        }
        let start = (s / self.delta).ceil() as usize;
        if start > self.n || (start as f64) > last {
            return None;
        }
        Some(if survives {
            Cell::InteriorSurvivor { start }
        } else {
            Cell::Interior {
                start,
                span: last as usize - start,
            }
        })
    }

    /// Total measure of the cells whose run contains grid index `k`; equals
    /// `Leb(A)` for every `k`.
    pub fn coverage(&self, k: usize) -> f64 {
        assert!(k <= self.n);
        let boundary = self.boundary_survivor + self.boundary_exit[k..].iter().sum::<f64>();
        let interior: f64 = (1..=k)
            .map(|j| self.interior_survivor[j - 1] + self.interior[k - j..self.n - j].iter().sum::<f64>())
            .sum();
        boundary + interior
    }
}

/// Samplers for every cell of a partition, prepared once per ensemble.
#[derive(Debug, Clone)]
pub struct TrajectorySampler {
    n: usize,
    interior: Vec<PatchSampler>,
    boundary_exit: Vec<PatchSampler>,
    boundary_survivor: PatchSampler,
    interior_survivor: Vec<PatchSampler>,
}

impl TrajectorySampler {
    pub fn new(part: &SlicePartition, seed: &SeedSpec) -> Result<Self> {
        let prep = |ms: &[f64]| ms.iter().map(|&m| seed.patch_sampler(m)).collect::<Result<Vec<_>>>();
        Ok(TrajectorySampler {
            n: part.n,
            interior: prep(&part.interior)?,
            boundary_exit: prep(&part.boundary_exit)?,
            boundary_survivor: seed.patch_sampler(part.boundary_survivor)?,
            interior_survivor: prep(&part.interior_survivor)?,
        })
    }

    /// Fills `out[0..=n]` with one trajectory. Draw order is fixed: boundary
    /// survivor, boundary exits by `l`, then per entry step `j` the survivor
    /// followed by interior cells from the longest span down.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let n = self.n;
        assert_eq!(out.len(), n + 1);
        let mut acc = self.boundary_survivor.sample(rng);
        let exits: Vec<f64> = self.boundary_exit.iter().map(|s| s.sample(rng)).collect();
        out[n] = acc;
        for k in (0..n).rev() {
            acc += exits[k];
            out[k] = acc;
        }
        for j in 1..=n {
            let mut acc = self.interior_survivor[j - 1].sample(rng);
            out[n] += acc;
            for k in (j..n).rev() {
                acc += self.interior[k - j].sample(rng);
                out[k] += acc;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 1];
        self.sample_into(rng, &mut out);
        out
    }
}

/// One draw of `(X(t_0), …, X(t_n))`.
pub fn simulate_trajectory<R: Rng + ?Sized>(part: &SlicePartition, seed: &SeedSpec, rng: &mut R) -> Result<Vec<f64>> {
    Ok(TrajectorySampler::new(part, seed)?.sample(rng))
}

/// Left Riemann sums `X*(t_k) = Δ Σ_{j<k} (X(t_j) - μ)`, with `μ = Leb(A) κ^{(1)}`
/// when the seed is centred and `0` otherwise.
pub fn integrate_trajectory(x: &[f64], seed: &SeedSpec, geom: &TrawlGeometry, delta: f64) -> Vec<f64> {
    let mu = if seed.centered { geom.leb_a() * seed.cumulant(1) } else { 0.0 };
    integrate_with_offset(x, mu, delta)
}

fn integrate_with_offset(x: &[f64], mu: f64, delta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for v in &x[..x.len().saturating_sub(1)] {
        acc += v - mu;
        out.push(delta * acc);
    }
    out
}

/// `Var(Δ Σ_{j<k} X(t_j)) = κ₂ Δ² Σ_{i,j<k} G(|i-j|Δ)`.
pub fn discrete_sum_variance(geom: &TrawlGeometry, seed: &SeedSpec, delta: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return domain("discrete sum variance needs k >= 1");
    }
    if !(delta > 0.0) {
        return domain(format!("grid step must be positive, got {delta}"));
    }
    let mut lag_sum = k as f64 * geom.tail_mass_unchecked(0.0);
    for d in 1..k {
        lag_sum += 2.0 * (k - d) as f64 * geom.tail_mass_unchecked(d as f64 * delta);
    }
    Ok(seed.cumulant(2) * delta * delta * lag_sum)
}

/// Everything needed to reproduce an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub trawl: TrawlSpec,
    pub seed: SeedSpec,
    pub delta: f64,
    pub n: usize,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default = "default_budget")]
    pub cell_budget: u128,
}

fn default_budget() -> u128 {
    DEFAULT_CELL_BUDGET
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.trawl.validate()?;
        self.seed.validate()?;
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return domain(format!("grid step must be positive, got {}", self.delta));
        }
        if self.replications == 0 {
            return domain("ensemble needs at least one replication");
        }
        let cells = (self.n as u128).pow(2) * self.replications as u128;
        if cells > self.cell_budget {
            let suggested_n = ((self.cell_budget / self.replications as u128) as f64).sqrt().floor() as usize;
            return Err(TrawlError::Budget {
                cells,
                limit: self.cell_budget,
                suggested_n,
            });
        }
        Ok(())
    }
}

/// The random stream of replication `r`: a ChaCha8 key derived from the
/// master seed, with `r` as the stream id.
pub fn replication_rng(master_seed: u64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replication as u64);
    rng
}

/// `R` replications of grid trajectories and their Riemann sums, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub config: EnsembleConfig,
    x: Vec<f64>,
    xstar: Vec<f64>,
}

impl Ensemble {
    /// Wraps precomputed rows; `x` and `xstar` are `rows × (n+1)` row-major.
    pub fn from_rows(config: EnsembleConfig, x: Vec<f64>, xstar: Vec<f64>) -> Result<Self> {
        let cols = config.n + 1;
        if x.len() != xstar.len() || x.is_empty() || !x.len().is_multiple_of(cols) {
            return Err(TrawlError::InsufficientData(format!(
                "ensemble rows must be non-empty multiples of {cols}"
            )));
        }
        Ok(Ensemble { config, x, xstar })
    }

    pub fn replications(&self) -> usize {
        self.x.len() / self.cols()
    }

    pub fn cols(&self) -> usize {
        self.config.n + 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.config.delta
    }

    pub fn x_row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.x[r * c..(r + 1) * c]
    }

    pub fn xstar_row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.xstar[r * c..(r + 1) * c]
    }

    pub fn x_column(&self, k: usize) -> Vec<f64> {
        (0..self.replications()).map(|r| self.x_row(r)[k]).collect()
    }

    pub fn xstar_column(&self, k: usize) -> Vec<f64> {
        (0..self.replications()).map(|r| self.xstar_row(r)[k]).collect()
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x
    }

    pub fn xstar_values(&self) -> &[f64] {
        &self.xstar
    }

    /// Mean of `X(t_k)` pooled over `k` and replications; the standard error
    /// comes from the spread of per-replication means.
    pub fn pooled_mean(&self) -> StatEstimate {
        let per_rep: Vec<f64> = (0..self.replications()).map(|r| mean(self.x_row(r))).collect();
        mean_with_se(&per_rep)
    }

    /// Pooled `j`-th central moment of `X(t_k)` about the grand mean.
    pub fn pooled_central_moment(&self, j: i32) -> StatEstimate {
        let mu = mean(&self.x);
        let per_rep: Vec<f64> = (0..self.replications())
            .map(|r| self.x_row(r).iter().map(|v| (v - mu).powi(j)).sum::<f64>() / self.cols() as f64)
            .collect();
        mean_with_se(&per_rep)
    }

    pub fn pooled_variance(&self) -> StatEstimate {
        self.pooled_central_moment(2)
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatEstimate {
    pub value: f64,
    pub stderr: f64,
}

impl StatEstimate {
    /// `|value - target| ≤ z · stderr`.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.value - target).abs() <= z * self.stderr
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean with its classical standard error.
pub fn mean_with_se(xs: &[f64]) -> StatEstimate {
    let n = xs.len() as f64;
    let m = mean(xs);
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    StatEstimate {
        value: m,
        stderr: (var / n).sqrt(),
    }
}

/// Unbiased sample variance with standard error `sqrt((m₄ - s⁴) / R)`.
pub fn sample_variance(xs: &[f64]) -> StatEstimate {
    let n = xs.len() as f64;
    let m = mean(xs);
    let s2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    StatEstimate {
        value: s2,
        stderr: ((m4 - s2 * s2).max(0.0) / n).sqrt(),
    }
}

/// Pooled sample autocorrelation at lag `lag` grid steps.
///
/// Cross products about the grand mean are averaged within each replication
/// and across replications; the standard error is the delta-method error of
/// the ratio, computed from the independent replications.
pub fn empirical_acf(ens: &Ensemble, lag: usize) -> Result<StatEstimate> {
    let n = ens.config.n;
    if lag > n {
        return Err(TrawlError::InsufficientData(format!("lag {lag} exceeds grid length {n}")));
    }
    if lag == 0 {
        return Ok(StatEstimate { value: 1.0, stderr: 0.0 });
    }
    let mu = mean(ens.x_values());
    let reps = ens.replications();
    let mut cross = Vec::with_capacity(reps);
    let mut var = Vec::with_capacity(reps);
    for r in 0..reps {
        let row = ens.x_row(r);
        let c = row[..=n - lag]
            .iter()
            .zip(&row[lag..])
            .map(|(a, b)| (a - mu) * (b - mu))
            .sum::<f64>()
            / (n - lag + 1) as f64;
        cross.push(c);
        var.push(row.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n + 1) as f64);
    }
    let c_bar = mean(&cross);
    let v_bar = mean(&var);
    if !(v_bar > 0.0) {
        return Err(TrawlError::InsufficientData("ensemble has zero variance".into()));
    }
    let acf = c_bar / v_bar;
    let linearised: Vec<f64> = cross.iter().zip(&var).map(|(c, v)| (c - acf * v) / v_bar).collect();
    Ok(StatEstimate {
        value: acf,
        stderr: mean_with_se(&linearised).stderr,
    })
}

/// Runs `R` independent replications. Replication `r` always uses
/// [`replication_rng`]`(master_seed, r)`, so the result is bit-identical for
/// any thread count or scheduling order.
pub fn run_ensemble(config: &EnsembleConfig, threads: Option<usize>) -> Result<Ensemble> {
    config.validate()?;
    let geom = TrawlGeometry::new(config.trawl)?;
    let part = SlicePartition::build(&geom, config.delta, config.n)?;
    let sampler = TrajectorySampler::new(&part, &config.seed)?;
    let cols = config.n + 1;
    let mu = if config.seed.centered {
        geom.leb_a() * config.seed.cumulant(1)
    } else {
        0.0
    };
    let mut x = vec![0.0; cols * config.replications];
    let mut xstar = vec![0.0; cols * config.replications];

    let fill = |x: &mut [f64], xstar: &mut [f64]| {
        x.par_chunks_mut(cols)
            .zip(xstar.par_chunks_mut(cols))
            .enumerate()
            .for_each(|(r, (row, star))| {
                let mut rng = replication_rng(config.master_seed, r);
                sampler.sample_into(&mut rng, row);
                star.copy_from_slice(&integrate_with_offset(row, mu, config.delta));
            });
    };
    match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| TrawlError::Config(format!("thread pool: {e}")))?;
            pool.install(|| fill(&mut x, &mut xstar));
        }
        None => fill(&mut x, &mut xstar),
    }
    Ensemble::from_rows(config.clone(), x, xstar)
}
