//! Statistical checks of simulated ensembles against exact oracles. Every
//! band is four standard errors wide and every seed is fixed.

use trawl_core::cumulant::integrated_cumulant;
use trawl_core::scaling::{empirical_moment, ensemble_scaling_curve, fit_tau};
use trawl_core::simulator::{
    discrete_sum_variance, empirical_acf, mean_with_se, run_ensemble, sample_variance, Ensemble, EnsembleConfig,
    DEFAULT_CELL_BUDGET,
};
use trawl_core::{SeedSpec, TrawlGeometry, TrawlSpec};

fn ensemble(trawl: TrawlSpec, seed: SeedSpec, delta: f64, n: usize, reps: usize, master: u64) -> Ensemble {
    run_ensemble(
        &EnsembleConfig {
            trawl,
            seed,
            delta,
            n,
            replications: reps,
            master_seed: master,
            cell_budget: DEFAULT_CELL_BUDGET,
        },
        None,
    )
    .unwrap()
}

#[test]
fn poisson_marginal_cumulants() {
    let ens = ensemble(
        TrawlSpec::gamma(1.0).unwrap(),
        SeedSpec::poisson(1.0).unwrap(),
        0.5,
        10,
        10_000,
        1,
    );
    // G(0) = 1 for α = 1, so every marginal cumulant equals ν = 1
    assert!(ens.pooled_mean().within(1.0, 4.0), "{:?}", ens.pooled_mean());
    assert!(ens.pooled_variance().within(1.0, 4.0), "{:?}", ens.pooled_variance());
    let k3 = ens.pooled_central_moment(3);
    assert!(k3.within(1.0, 4.0), "{k3:?}");
}

#[test]
fn gaussian_marginal_variance() {
    let ens = ensemble(
        TrawlSpec::gamma(0.5).unwrap(),
        SeedSpec::gaussian(0.0, 1.0).unwrap(),
        0.2,
        20,
        5_000,
        2,
    );
    assert!(ens.pooled_variance().within(2.0, 4.0), "{:?}", ens.pooled_variance());
    assert!(ens.pooled_mean().within(0.0, 4.0));
}

#[test]
fn gamma_and_inverse_gaussian_seeds() {
    for (seed, master) in [
        (SeedSpec::gamma(2.0, 3.0).unwrap(), 3),
        (SeedSpec::inverse_gaussian(1.5, 2.0).unwrap(), 4),
    ] {
        let ens = ensemble(TrawlSpec::exponential(2.0).unwrap(), seed, 0.1, 20, 5_000, master);
        let leb = 0.5;
        assert!(ens.pooled_mean().within(leb * seed.cumulant(1), 4.0), "{seed:?}");
        assert!(ens.pooled_variance().within(leb * seed.cumulant(2), 4.0), "{seed:?}");
        assert!(ens.x_values().iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn centred_riemann_sum_has_zero_mean() {
    let ens = ensemble(
        TrawlSpec::gamma(0.5).unwrap(),
        SeedSpec::poisson(1.0).unwrap(),
        0.05,
        100,
        10_000,
        5,
    );
    let last = mean_with_se(&ens.xstar_column(100));
    assert!(last.within(0.0, 4.0), "{last:?}");
}

#[test]
fn exponential_acf() {
    let ens = ensemble(
        TrawlSpec::exponential(1.0).unwrap(),
        SeedSpec::poisson(1.0).unwrap(),
        0.1,
        50,
        10_000,
        6,
    );
    for d in [1, 2, 5, 10] {
        let acf = empirical_acf(&ens, d).unwrap();
        let h = d as f64 * 0.1;
        assert!(acf.within((-h).exp(), 4.0), "lag {d}: {acf:?}");
    }
}

#[test]
fn riemann_sum_second_moment_matches_oracle() {
    let geom = TrawlGeometry::new(TrawlSpec::gamma(0.5).unwrap()).unwrap();
    let seed = SeedSpec::poisson(1.0).unwrap();
    let ens = ensemble(*geom.spec(), seed, 0.05, 200, 10_000, 7);
    for k in [1, 10, 50, 200] {
        let oracle = discrete_sum_variance(&geom, &seed, 0.05, k).unwrap();
        let m2 = empirical_moment(&ens, 2.0, k).unwrap();
        assert!(m2.within(oracle, 4.0), "k={k}: {m2:?} vs {oracle}");
        let var = sample_variance(&ens.xstar_column(k));
        assert!(var.within(oracle, 4.0), "k={k}: {var:?} vs {oracle}");
    }
}

#[test]
fn riemann_variance_converges_to_integrated_cumulant() {
    let geom = TrawlGeometry::new(TrawlSpec::gamma(0.5).unwrap()).unwrap();
    let seed = SeedSpec::poisson(1.0).unwrap();
    let t = 4.0;
    let exact = integrated_cumulant(&geom, &seed, 2, t).unwrap();
    let gaps: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&d| (discrete_sum_variance(&geom, &seed, d, (t / d).round() as usize).unwrap() - exact).abs())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] / exact < 0.05);
}

#[test]
fn analytic_and_monte_carlo_tau_agree_at_q2() {
    let geom = TrawlGeometry::new(TrawlSpec::gamma(0.5).unwrap()).unwrap();
    let seed = SeedSpec::poisson(1.0).unwrap();
    let ens = ensemble(*geom.spec(), seed, 0.05, 400, 4_000, 8);
    let mc = ensemble_scaling_curve(&ens, &[2.0], 1.0).unwrap();
    let fit = mc.fits[0];
    let t: Vec<f64> = (1..=400).map(|k| ens.time(k)).collect();
    let kappa: Vec<f64> = t.iter().map(|&t| integrated_cumulant(&geom, &seed, 2, t).unwrap()).collect();
    let analytic = fit_tau(&t, &kappa, 2.0, 1.0).unwrap();
    assert_eq!((analytic.t_min, analytic.t_max), (fit.t_min, fit.t_max));
    let combined = (fit.stderr.powi(2) + analytic.stderr.powi(2)).sqrt();
    assert!(
        (fit.tau_hat - analytic.tau_hat).abs() <= 3.0 * combined,
        "mc {fit:?} analytic {analytic:?}"
    );
    assert!(mc.is_convex() && mc.ratio_is_monotone());
}

#[test]
fn monte_carlo_scaling_shape_invariants() {
    let ens = ensemble(
        TrawlSpec::gamma(0.5).unwrap(),
        SeedSpec::poisson(1.0).unwrap(),
        0.05,
        200,
        2_000,
        9,
    );
    let curve = ensemble_scaling_curve(&ens, &[1.0, 2.0, 3.0, 4.0], 1.0).unwrap();
    assert!(curve.is_convex(), "{curve:?}");
    assert!(curve.ratio_is_monotone(), "{curve:?}");
    assert!(curve.fits.iter().all(|f| f.stderr > 0.0 && f.r2 > 0.9));
}
