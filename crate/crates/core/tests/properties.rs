use proptest::prelude::*;

use trawl_core::cumulant::{
    critical_order, integral_components, integrated_cumulant, kernel_h, moments_from_cumulants, theoretical_tau,
    TauPrediction,
};
use trawl_core::scaling::{fit_tau, CurveSource, ScalingCurve, TauFit};
use trawl_core::simulator::{integrate_trajectory, replication_rng, SlicePartition, TrajectorySampler};
use trawl_core::{SeedSpec, TrawlGeometry, TrawlSpec};

fn any_trawl() -> impl Strategy<Value = TrawlGeometry> {
    prop_oneof![
        (0.1f64..3.0).prop_map(|a| TrawlGeometry::new(TrawlSpec::gamma(a).unwrap()).unwrap()),
        (0.1f64..5.0).prop_map(|l| TrawlGeometry::new(TrawlSpec::exponential(l).unwrap()).unwrap()),
    ]
}

fn any_seed() -> impl Strategy<Value = SeedSpec> {
    prop_oneof![
        (0.1f64..5.0).prop_map(|nu| SeedSpec::poisson(nu).unwrap()),
        (0.1f64..5.0, 0.1f64..5.0).prop_map(|(k, r)| SeedSpec::gamma(k, r).unwrap()),
        (-2.0f64..2.0, 0.0f64..3.0).prop_map(|(m, v)| SeedSpec::gaussian(m, v).unwrap()),
        (0.1f64..3.0, 0.1f64..3.0).prop_map(|(d, g)| SeedSpec::inverse_gaussian(d, g).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_coverage_and_positivity(geom in any_trawl(), delta in 0.01f64..2.0, n in 1usize..60) {
        let part = SlicePartition::build(&geom, delta, n).unwrap();
        for c in part.cells() {
            prop_assert!(part.measure(c) >= 0.0);
        }
        for k in 0..=n {
            prop_assert!((part.coverage(k) - geom.leb_a()).abs() <= 1e-10);
        }
    }

    #[test]
    fn classified_points_lie_in_their_run(
        geom in any_trawl(), delta in 0.05f64..1.0, n in 1usize..20, u in 1e-6f64..1.0, s in -10.0f64..10.0,
    ) {
        let part = SlicePartition::build(&geom, delta, n).unwrap();
        let xi = u * geom.g_max();
        if let Some(cell) = part.classify(&geom, xi, s) {
            let (a, b) = part.run(cell);
            for k in a..=b {
                let t = k as f64 * delta;
                prop_assert!(s <= t + 1e-12 && xi <= geom.g(t - s).unwrap() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn trajectories_are_reproducible(geom in any_trawl(), seed in any_seed(), master in any::<u64>(), r in 0usize..1000) {
        let part = SlicePartition::build(&geom, 0.1, 12).unwrap();
        let sampler = TrajectorySampler::new(&part, &seed).unwrap();
        let a = sampler.sample(&mut replication_rng(master, r));
        let b = sampler.sample(&mut replication_rng(master, r));
        prop_assert_eq!(&a, &b);
        if seed.is_nonnegative() {
            prop_assert!(a.iter().all(|v| *v >= 0.0));
        }
        let xs = integrate_trajectory(&a, &seed, &geom, 0.1);
        prop_assert_eq!(xs[0], 0.0);
        prop_assert_eq!(xs.len(), a.len());
    }

    #[test]
    fn kernel_is_bounded_by_horizon(geom in any_trawl(), u in 0.0f64..1.2, s in -50.0f64..50.0, t in 0.0f64..30.0) {
        let h = kernel_h(&geom, u * geom.g_max(), s, t);
        prop_assert!((0.0..=t).contains(&h));
        if s > t || u > 1.0 {
            prop_assert_eq!(h, 0.0);
        }
    }

    #[test]
    fn even_cumulant_curves_increase(geom in any_trawl(), m in 1u32..4, t in 0.1f64..500.0, r in 1.01f64..3.0) {
        let seed = SeedSpec::poisson(1.0).unwrap();
        let a = integrated_cumulant(&geom, &seed, 2 * m, t).unwrap();
        let b = integrated_cumulant(&geom, &seed, 2 * m, t * r).unwrap();
        prop_assert!(a > 0.0 && b >= a);
    }

    #[test]
    fn first_component_sum_is_mean_area(geom in any_trawl(), t in 0.01f64..1e3) {
        let total = integral_components(&geom, 1, t).unwrap().total();
        prop_assert!((total - t * geom.leb_a()).abs() <= 1e-9 * t * geom.leb_a());
    }

    #[test]
    fn moment_recursion_matches_gaussian(mu in -3.0f64..3.0, var in 0.0f64..4.0) {
        let m = moments_from_cumulants(&[mu, var, 0.0, 0.0]);
        prop_assert!((m[1] - (var + mu * mu)).abs() < 1e-12);
        let m4 = mu.powi(4) + 6.0 * mu * mu * var + 3.0 * var * var;
        prop_assert!((m[3] - m4).abs() < 1e-10 * (1.0 + m4));
    }

    #[test]
    fn power_law_fits_exactly(beta in -3.0f64..5.0, c in 1e-3f64..1e3, lo in 1e-2f64..1e3, n in 8usize..60) {
        let t: Vec<f64> = (0..n).map(|i| lo * 10f64.powf(i as f64 / (n - 1) as f64)).collect();
        let y: Vec<f64> = t.iter().map(|t| c * t.powf(beta)).collect();
        let fit = fit_tau(&t, &y, 1.0, 1.0).unwrap();
        prop_assert!((fit.tau_hat - beta).abs() < 1e-9);
        prop_assert!(fit.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn theoretical_tau_shape(alpha in 0.05f64..5.0, q in 0.1f64..12.0) {
        let geom = TrawlGeometry::new(TrawlSpec::gamma(alpha).unwrap()).unwrap();
        let qs = critical_order(alpha);
        prop_assert!(qs > 2.0 * alpha && qs <= 2.0 * alpha + 2.0 && qs % 2.0 == 0.0);
        match theoretical_tau(&geom, q).unwrap() {
            TauPrediction::Exact { tau, .. } => prop_assert!(q >= qs && (tau - (q - alpha)).abs() < 1e-12),
            TauPrediction::Unspecified { .. } => prop_assert!(q < qs),
        }
    }

    #[test]
    fn linear_tau_curves_pass_shape_checks(h in 0.1f64..2.0, qs in prop::collection::btree_set(1u32..10, 3..6)) {
        let fits = qs.iter().map(|&q| TauFit {
            q: f64::from(q),
            tau_hat: h * f64::from(q),
            stderr: 0.0,
            r2: 1.0,
            t_min: 1.0,
            t_max: 10.0,
            points: 10,
        }).collect();
        let curve = ScalingCurve { source: CurveSource::Analytic, fits };
        prop_assert!(curve.is_convex() && curve.ratio_is_monotone());
    }
}
