//! Randomised invariants of the kernel, checked with proptest.

use apdecay::certify::{build_ledger, scalar_chain_check, sl3_decay_bound, sp2_decay_bound, ConstantsLedger};
use apdecay::coupling::{circle_witness, hyperbola_witness, sl3_witness, solve_betagamma, solve_st, WITNESS_TOL};
use apdecay::gelfand::{eval_multiplier, CompactMultiplier, CosetPoint};
use apdecay::groups::{
    dmat_sp2, random_k_with, random_so3_with, rng_from_seed, sl3_chamber, sl3_dmat, sp2_chamber, ChamberSl3, ChamberSp2,
};
use apdecay::orthopoly::{legendre, spherical_u2u1, PairId};
use num_complex::Complex64;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 128, ..ProptestConfig::default() }
}

/// `beta >= gamma >= 0` with `beta <= max`.
fn chamber(max: f64) -> impl Strategy<Value = (f64, f64)> {
    (0.0..=max, 0.0..=1.0f64).prop_map(|(b, frac)| (b, b * frac))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn sp2_chamber_is_k_bi_invariant((beta, gamma) in chamber(12.0), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let g = random_k_with(&mut rng).mul(&dmat_sp2(ChamberSp2::new(beta, gamma).unwrap())).mul(&random_k_with(&mut rng));
        let c = sp2_chamber(&g).unwrap();
        prop_assert!((c.beta - beta).abs() <= 1e-6 && (c.gamma - gamma).abs() <= 1e-6, "{c:?} vs ({beta}, {gamma})");
    }

    #[test]
    fn sl3_chamber_is_so3_bi_invariant(s in 0.0..12.0f64, t in 0.0..12.0f64, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let g = random_so3_with(&mut rng).mul(&sl3_dmat(ChamberSl3::new(s, t).unwrap())).mul(&random_so3_with(&mut rng));
        let c = sl3_chamber(&g).unwrap();
        prop_assert!((c.s - s).abs() <= 1e-6 && (c.t - t).abs() <= 1e-6, "{c:?} vs ({s}, {t})");
    }

    #[test]
    fn coupling_round_trip(s in 0.0..15.0f64, frac in 0.0..=1.0f64) {
        let t = s * frac;
        let c = solve_betagamma(s, t).unwrap();
        prop_assert!(c.beta >= c.gamma);
        let back = solve_st(c.beta, c.gamma).unwrap();
        prop_assert!((back.s - s).abs() <= 1e-10 && (back.t - t).abs() <= 1e-10, "{back:?} vs ({s}, {t})");
    }

    #[test]
    fn coupling_lower_bounds_and_residuals((beta, gamma) in chamber(60.0)) {
        let sol = solve_st(beta, gamma).unwrap();
        prop_assert!(sol.s >= beta / 4.0 - 1e-12 && sol.t >= gamma / 2.0 - 1e-12, "{sol:?}");
        prop_assert!(sol.residuals.iter().all(|r| *r <= 1e-10), "{sol:?}");
    }

    #[test]
    fn coupling_is_monotone_in_gamma(beta in 0.0..30.0f64, f1 in 0.0..=1.0f64, f2 in 0.0..=1.0f64) {
        let (g1, g2) = (beta * f1.min(f2), beta * f1.max(f2));
        let (a, b) = (solve_st(beta, g1).unwrap(), solve_st(beta, g2).unwrap());
        prop_assert!(a.s <= b.s + 1e-12 && a.t <= b.t + 1e-12);
    }

    #[test]
    fn witnesses_land_on_their_targets((beta, gamma) in chamber(12.0), r in 0.01..10.0f64, theta in 0.0..std::f64::consts::PI) {
        if beta > 0.0 {
            let w = circle_witness(beta, gamma).unwrap();
            prop_assert!(w.membership_residual <= WITNESS_TOL);
        }
        if gamma >= 2.0 {
            let w = hyperbola_witness(beta, gamma).unwrap();
            prop_assert!(w.membership_residual <= WITNESS_TOL);
        }
        prop_assert!(sl3_witness(r, theta).unwrap().membership_residual <= WITNESS_TOL);
    }

    #[test]
    fn scalar_chains_hold((beta, gamma) in chamber(40.0)) {
        let r = scalar_chain_check(beta, gamma).unwrap();
        prop_assert!(r.passed(), "{:?}", r.violations);
    }

    #[test]
    fn sp2_bound_decreases_along_rays(beta in 0.0..200.0f64, step in 0.01..50.0f64, ratio in 0.0..=1.0f64, norm in 0.1..10.0f64) {
        let l = build_ledger(1.0).unwrap();
        let a = sp2_decay_bound(beta, ratio * beta, norm, &l).unwrap();
        let b2 = beta + step;
        let b = sp2_decay_bound(b2, ratio * b2, norm, &l).unwrap();
        prop_assert!(b.final_bound < a.final_bound);
        for c in [&a, &b] {
            let sum: f64 = c.steps.iter().map(|s| s.value).sum();
            prop_assert!((sum - c.final_bound).abs() <= 1e-12 * c.final_bound);
            prop_assert!(c.pre_bound <= c.final_bound * (1.0 + 1e-12));
            prop_assert!(c.holds());
        }
    }

    #[test]
    fn sl3_bound_decreases_in_the_chamber_sum(s in 0.0..100.0f64, t in 0.0..100.0f64, extra in 0.01..20.0f64) {
        let a = sl3_decay_bound(s, t, 1.0).unwrap();
        let b = sl3_decay_bound(s + extra, t, 1.0).unwrap();
        prop_assert!(b.final_bound < a.final_bound);
        let sum: f64 = a.steps.iter().map(|s| s.value).sum();
        prop_assert!((sum - a.final_bound).abs() <= 1e-12 * a.final_bound);
        prop_assert!(a.pre_bound <= a.final_bound && a.holds());
    }

    #[test]
    fn ledger_recomputes_and_survives_json(c_hat in 0.01..10.0f64) {
        let l = build_ledger(c_hat).unwrap();
        prop_assert!(l.verify().passed());
        let back: ConstantsLedger = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
        prop_assert_eq!(back, l);
    }

    #[test]
    fn legendre_bounds(n in 0usize..400, x in -1.0..=1.0f64, y in -0.5..=0.5f64, z in -0.5..=0.5f64) {
        prop_assert!(legendre(n, x).unwrap().abs() <= 1.0 + 1e-12);
        let d = (legendre(n, y).unwrap() - legendre(n, z).unwrap()).abs();
        prop_assert!(d <= 4.0 * (y - z).abs().sqrt() + 1e-12);
        if n >= 2 {
            prop_assert!(legendre(n, y).unwrap().abs() <= 2.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn spherical_functions_are_bounded_by_one(p in 0u32..40, q in 0u32..40, r in 0.0..=1.0f64, arg in 0.0..6.3f64) {
        let v = spherical_u2u1(p, q, Complex64::from_polar(r, arg)).unwrap();
        prop_assert!(v.norm() <= 1.0 + 1e-10, "{v}");
    }

    #[test]
    fn normalised_multipliers_are_bounded(degree in 0u32..25, seed in any::<u64>(), r in 0.0..=1.0f64, arg in 0.0..6.3f64) {
        let m = CompactMultiplier::random(PairId::U2U1, degree, seed);
        prop_assert!((m.l1_norm() - 1.0).abs() < 1e-12);
        let v = eval_multiplier(&m, CosetPoint::Disc(Complex64::from_polar(r, arg))).unwrap();
        prop_assert!(v.norm() <= 1.0 + 1e-10);
        let legendre_m = CompactMultiplier::random(PairId::SO3SO2, degree, seed);
        let w = eval_multiplier(&legendre_m, CosetPoint::Interval(2.0 * r - 1.0)).unwrap();
        prop_assert!(w.norm() <= 1.0 + 1e-10);
    }
}
