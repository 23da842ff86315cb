use std::f64::consts::{E, PI};
use std::sync::Arc;

use proptest::prelude::*;
use sg_core::warp::*;
use statrs::function::gamma::gamma;

fn beta_fn(a: f64, b: f64) -> f64 {
    gamma(a) * gamma(b) / gamma(a + b)
}

#[test]
fn cf_conical_is_pi() {
    let w = make_power_warp(1.0, 1.5).unwrap();
    let cf = compute_cf(&w, 1e-10).unwrap();
    assert!((cf.value - PI).abs() < 1e-8);
    assert_eq!(cf.source, CfSource::ClosedForm);
}

#[test]
fn cf_power_matches_beta_function() {
    for alpha in [1.5, 2.0, 3.0, 5.0] {
        let w = make_power_warp(alpha, 1.0).unwrap();
        let cf = compute_cf(&w, 1e-10).unwrap().value;
        let want = beta_fn(1.0 - 0.5 / alpha, 0.5);
        assert!((cf - want).abs() < 1e-8, "alpha {alpha}: {cf} vs {want}");
    }
    let two = compute_cf(&make_power_warp(2.0, 1.0).unwrap(), 1e-10)
        .unwrap()
        .value;
    assert!((two - 2.39628).abs() < 1e-5);
}

#[test]
fn cf_exponential_families_equal_two() {
    let a = make_exp_warp(ExpFamily::ExpInversePower { beta: 1.0 }, 0.5).unwrap();
    let b = make_exp_warp(ExpFamily::LogPower { mu: 1.5 }, 0.3).unwrap();
    for w in [a, b] {
        assert!((compute_cf(&w, 1e-10).unwrap().value - 2.0).abs() < 1e-6);
    }
}

#[test]
fn oscillating_ladder_verdicts() {
    let w = make_oscillating_warp(0.5, 9.0).unwrap();
    let odd = estimate_frak(&w, PI.exp(), LadderParams::default()).unwrap();
    assert!(
        matches!(odd.verdict, FrakVerdict::Oscillating(a) if a > 0.05),
        "{:?}",
        odd.verdict
    );
    let sigma = (2.0 * PI).exp();
    let even = estimate_frak(&w, sigma, LadderParams::default()).unwrap();
    match even.verdict {
        FrakVerdict::Converged(v) => {
            assert!((v - sigma.powf(-0.5)).abs() < 1e-9 * sigma.powf(-0.5) + 1e-12)
        }
        other => panic!("{other:?}"),
    }
    assert!((sigma.powf(-0.5) - (-PI).exp()).abs() < 1e-15);
}

#[test]
fn oscillating_cf_fails_non_oscillation() {
    let w = make_oscillating_warp(0.5, 9.0).unwrap();
    let err = compute_cf(&w, 1e-8).unwrap_err();
    assert!(err.to_string().contains("non-oscillation condition fails"));
}

#[test]
fn monotonicity_orders_power_families() {
    let r = check_cf_monotonicity(
        &make_power_warp(3.0, 1.0).unwrap(),
        &make_power_warp(2.0, 1.0).unwrap(),
    )
    .unwrap();
    assert!(r.passed);
    assert!(r.cf_small < r.cf_big);
    let want_small = beta_fn(1.0 - 1.0 / 6.0, 0.5);
    assert!((r.cf_small - want_small).abs() < 1e-8);
}

#[test]
fn monotonicity_exp_below_power() {
    let e = make_exp_warp(ExpFamily::ExpInversePower { beta: 1.0 }, 0.5).unwrap();
    let p = make_power_warp(5.0, 0.5).unwrap();
    assert!(check_cf_monotonicity(&e, &p).unwrap().passed);
}

#[test]
fn monotonicity_reflexive() {
    let p = make_power_warp(2.0, 1.0).unwrap();
    let r = check_cf_monotonicity(&p, &p).unwrap();
    assert!(r.passed);
    assert_eq!(r.cf_small, r.cf_big);
}

#[test]
fn monotonicity_rejects_wrong_order() {
    let a = make_power_warp(2.0, 1.0).unwrap();
    let b = make_power_warp(3.0, 1.0).unwrap();
    assert!(check_cf_monotonicity(&a, &b).is_err());
}

#[test]
fn square_profile_behaves_like_square() {
    let w = profile_to_warp(Arc::new(PowerProfile { alpha: 2.0 }), 1.0, 4096).unwrap();
    assert_eq!(w.kind(), WarpKind::Cuspidal);
    let r = 1e-3;
    assert!((w.f(r) / (r * r) - 1.0).abs() < 1e-2);
    let rep = w.check_invariants().unwrap();
    assert!(rep.convex);
}

#[test]
fn square_profile_arclength_matches_closed_form() {
    // r(z) = (z sqrt(1+4z²) + asinh(2z)/2) / 2
    let w = profile_to_warp(Arc::new(PowerProfile { alpha: 2.0 }), 1.0, 1024).unwrap();
    let p = w.profile().unwrap();
    for &z in &[1e-6f64, 0.01, 0.3, 1.0] {
        let want = 0.5 * (z * (1.0 + 4.0 * z * z).sqrt() + 0.5 * (2.0 * z).asinh());
        assert!((p.arclength(z) / want - 1.0).abs() < 1e-12, "z = {z}");
        assert!((w.f(want) / (z * z) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn line_profile_from_closures() {
    let w = profile_to_warp(Arc::new(FnProfile::new("z", |z| z, |_| 1.0)), 2.0, 256).unwrap();
    for &r in &[1e-5, 0.1, 1.0, 2.5] {
        assert!((w.f(r) / (r / 2f64.sqrt()) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn sqrt_profile_closed_form_ln() {
    let w = make_concave_sqrt_warp(1.0).unwrap();
    assert_eq!(w.inverse(0.5), 0.25);
    assert_eq!(w.f_prime(0.25), 1.0);
}

#[test]
fn exp_admissible_radius_reported() {
    let err = make_exp_warp(ExpFamily::LogPower { mu: 2.0 }, 0.5).unwrap_err();
    assert!(err.to_string().contains(&format!("{}", 1.0 / E)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn power_round_trip_and_ratio_bound(alpha in 1.0f64..6.0, radius in 0.1f64..3.0) {
        let w = make_power_warp(alpha, radius).unwrap();
        let rep = w.check_invariants().unwrap();
        prop_assert!(rep.ratio_bound_holds);
        prop_assert!(rep.roundtrip_max_rel < 1e-12);
    }

    #[test]
    fn exp_families_valid(beta in 0.3f64..3.0, mu in 1.1f64..3.0, frac in 0.2f64..1.0) {
        let fam = ExpFamily::ExpInversePower { beta };
        let w = make_exp_warp(fam, frac * fam.max_convex_radius()).unwrap();
        prop_assert!(w.check_invariants().unwrap().ratio_bound_holds);
        let fam = ExpFamily::LogPower { mu };
        let w = make_exp_warp(fam, frac * fam.max_convex_radius()).unwrap();
        prop_assert!(w.check_invariants().unwrap().ratio_bound_holds);
    }

    #[test]
    fn converged_ladder_values_within_lemma_bounds(alpha in 1.0f64..6.0, lsig in 0.0f64..12.0) {
        let w = make_power_warp(alpha, 1.0).unwrap();
        let sigma = lsig.exp();
        let e = estimate_frak(&w, sigma, LadderParams::default()).unwrap();
        if let FrakVerdict::Converged(v) = e.verdict {
            prop_assert!(v >= 1.0 / sigma - 1e-6 && v <= 1.0 + 1e-6);
        } else {
            prop_assert!(false, "power ladder did not converge");
        }
    }

    #[test]
    fn cf_within_bounds(alpha in 1.0f64..20.0) {
        let w = make_power_warp(alpha, 1.0).unwrap();
        let cf = compute_cf(&w, 1e-8).unwrap().value;
        prop_assert!((2.0 - 1e-8..=PI + 1e-8).contains(&cf));
    }

    #[test]
    fn oscillating_round_trip(alpha in 0.2f64..0.8, extra in 0.0f64..5.0, x in 1e-6f64..0.99) {
        let c = oscillating_threshold(alpha) + extra;
        let w = make_oscillating_warp(alpha, c).unwrap();
        let rho = w.f(x);
        prop_assert!((w.inverse(rho) / x - 1.0).abs() < 1e-12);
    }
}
