use proptest::prelude::*;
use traplab::model::{DeepTrapIndex, Depths, Environment, ModelParams, ScaleExponents};
use traplab::rng::CounterRng;
use traplab::stable::{arcsine_cdf, arcsine_cdf_quadrature, overshoot_cdf, sample_subordinator, undershoot_cdf};
use traplab::stats::{ks_two_sample, wilson_interval, Ecdf};
use traplab::walk::simulate_to_site;

fn ints(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-40i32..40).prop_map(f64::from), 1..len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ks_is_symmetric_and_rank_based(a in ints(60), b in ints(60)) {
        let d = ks_two_sample(&a, &b).unwrap();
        prop_assert_eq!(d, ks_two_sample(&b, &a).unwrap());
        let exp = |v: &[f64]| v.iter().map(|x| (x / 4.0).exp()).collect::<Vec<_>>();
        prop_assert_eq!(d, ks_two_sample(&exp(&a), &exp(&b)).unwrap());
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn ecdf_at_sample_points_is_rank_over_n(a in ints(80)) {
        let e = Ecdf::new(&a).unwrap();
        let n = a.len() as f64;
        for &x in &a {
            let rank = a.iter().filter(|&&y| y <= x).count() as f64;
            prop_assert_eq!(e.eval(x), rank / n);
        }
        prop_assert_eq!(e.eval(f64::NEG_INFINITY), 0.0);
        prop_assert_eq!(e.eval(f64::INFINITY), 1.0);
    }

    #[test]
    fn wilson_brackets_the_proportion(trials in 1u64..5000, frac in 0.0f64..=1.0) {
        let k = (frac * trials as f64).round() as u64;
        let ci = wilson_interval(k, trials, 0.95).unwrap();
        prop_assert!(0.0 <= ci.lower && ci.lower <= ci.estimate);
        prop_assert!(ci.estimate <= ci.upper && ci.upper <= 1.0);
    }

    #[test]
    fn depths_do_not_depend_on_query_order(seed in any::<u64>(), lo in -1000i64..0, len in 1i64..300) {
        let env = Environment::pareto(0.5, seed).unwrap();
        let hi = lo + len;
        let forward = env.window(lo, hi);
        let again = Environment::pareto(0.5, seed).unwrap();
        let backward: Vec<f64> = (lo..=hi).rev().map(|x| again.depth(x)).collect();
        let backward: Vec<f64> = backward.into_iter().rev().collect();
        prop_assert!(forward.iter().zip(&backward).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert!(forward.iter().all(|&d| d >= 1.0));
    }

    #[test]
    fn star_traps_form_a_spread_subsequence(seed in any::<u64>()) {
        let env = Environment::pareto(0.5, seed).unwrap();
        let idx = DeepTrapIndex::build(&env, 20_000, ScaleExponents::default()).unwrap();
        let nu = idx.nu as i64;
        prop_assert_eq!(idx.theta as usize, idx.deltas.len());
        prop_assert!(idx.deltas.iter().all(|&d| (0..=20_000).contains(&d) && env.depth(d) >= idx.g));
        prop_assert!(idx.star_deltas.iter().all(|d| idx.deltas.contains(d)));
        prop_assert!(idx.star_deltas.first().is_none_or(|&d| d >= nu));
        prop_assert!(idx.star_deltas.windows(2).all(|w| w[1] - w[0] > 2 * nu));
        prop_assert_eq!(idx.e_star, idx.theta == idx.star_theta);
    }

    #[test]
    fn trajectories_are_reproducible_and_well_formed(env_seed in any::<u64>(), noise in any::<u64>(), eps in 0.05f64..0.5) {
        let p = ModelParams::new(0.5, eps).unwrap();
        let env = Environment::pareto(0.5, env_seed).unwrap();
        let a = simulate_to_site(&env, &p, 60, noise).unwrap();
        let b = simulate_to_site(&env, &p, 60, noise).unwrap();
        let (ys, cs) = (a.positions(), a.clocks());
        prop_assert_eq!(&ys, &b.positions());
        prop_assert!(cs.iter().zip(b.clocks()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert_eq!(ys[0], 0);
        prop_assert_eq!(cs[0], 0.0);
        prop_assert!(ys.windows(2).all(|w| (w[1] - w[0]).abs() == 1));
        prop_assert!(cs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn time_change_matches_replay(env_seed in any::<u64>(), noise in any::<u64>(), fracs in prop::collection::vec(0.0f64..1.0, 1..40)) {
        let p = ModelParams::new(0.5, 0.25).unwrap();
        let env = Environment::pareto(0.5, env_seed).unwrap();
        let traj = simulate_to_site(&env, &p, 40, noise).unwrap();
        let (ys, cs) = (traj.positions(), traj.clocks());
        let end = *cs.last().unwrap();
        for f in fracs {
            let t = f * end;
            let k = cs.iter().rposition(|&s| s <= t).unwrap();
            prop_assert_eq!(traj.position_at_time(t).unwrap(), ys[k]);
        }
    }

    #[test]
    fn arcsine_is_a_cdf(alpha in 0.05f64..0.95, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let (a, b) = (arcsine_cdf(alpha, lo).unwrap(), arcsine_cdf(alpha, hi).unwrap());
        prop_assert!(0.0 <= a && a <= b + 1e-15 && b <= 1.0);
        let u = undershoot_cdf(alpha, x).unwrap();
        prop_assert!((u - (1.0 - arcsine_cdf(alpha, 1.0 - x).unwrap())).abs() < 1e-14);
    }

    #[test]
    fn overshoot_mass_is_additive(alpha in 0.1f64..0.9, a in 0.0f64..5.0, da in 0.0f64..5.0, db in 0.0f64..5.0) {
        let (b, c) = (a + da, a + da + db);
        let sum = overshoot_cdf(alpha, a, b).unwrap() + overshoot_cdf(alpha, b, c).unwrap();
        prop_assert!((sum - overshoot_cdf(alpha, a, c).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn inverse_path_crossing_identity(seed in any::<u64>(), level in 0.01f64..3.0) {
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 / 100.0).collect();
        let path = sample_subordinator(0.5, &grid, &mut CounterRng::new(seed)).unwrap();
        if let Ok(inv) = path.inverse_at(level) {
            for (&u, &v) in grid.iter().zip(path.values()) {
                prop_assert_eq!(inv > u, v < level, "u {} V(u) {} inverse {}", u, v, inv);
            }
        }
        prop_assert!(path.values().windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn arcsine_routes_agree_and_increase() {
    for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let mut prev = 0.0;
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let v = arcsine_cdf(alpha, x).unwrap();
            assert!(v >= prev - 1e-15, "alpha {alpha}, x {x}");
            prev = v;
            if i % 50 == 25 {
                let q = arcsine_cdf_quadrature(alpha, x).unwrap();
                assert!((v - q).abs() < 1e-9, "alpha {alpha}, x {x}: {v} vs {q}");
            }
        }
    }
}

#[test]
fn wilson_shrinks_with_trials() {
    let widths: Vec<f64> = [100u64, 10_000, 1_000_000]
        .iter()
        .map(|&n| {
            let ci = wilson_interval(n * 3 / 10, n, 0.95).unwrap();
            ci.upper - ci.lower
        })
        .collect();
    assert!(widths[0] > widths[1] && widths[1] > widths[2], "{widths:?}");
}

#[test]
fn pareto_tail_at_several_levels() {
    let env = Environment::pareto(0.5, 31).unwrap();
    let m = 1_000_000;
    let depths = env.window(0, m - 1);
    for u in [2.0f64, 10.0, 100.0] {
        let p = u.powf(-0.5);
        let hits = depths.iter().filter(|&&d| d >= u).count() as f64;
        let se = (p * (1.0 - p) / m as f64).sqrt();
        assert!(
            (hits / m as f64 - p).abs() <= 4.0 * se,
            "u {u}: {} vs {p}",
            hits / m as f64
        );
    }
}
