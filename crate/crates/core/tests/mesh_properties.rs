#![allow(clippy::excessive_precision)]

use proptest::prelude::*;
use tpfem::mesh::{
    lemma_refinement_study, DEFAULT_LEMMA_CEILING, LEMMA_DIFF_WEIGHTED, LEMMA_FIRST_INTERVAL, LEMMA_H_BOUND,
};
use tpfem::{bracket, build_mesh, kappa, phi, MeshParams};

fn log_range(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..=hi.ln()).prop_map(f64::exp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn phi_is_odd(alpha in log_range(1e-10, 1.0), eps in log_range(1e-16, 1.0), xi in 0.0f64..=1.0) {
        let p = MeshParams::new(4, alpha, eps).unwrap();
        prop_assert_eq!(phi(-xi, &p).unwrap(), -phi(xi, &p).unwrap());
    }

    #[test]
    fn phi_is_increasing(
        alpha in log_range(1e-10, 1.0),
        eps in log_range(1e-16, 1.0),
        a in -1.0f64..=1.0,
        b in -1.0f64..=1.0,
    ) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let p = MeshParams::new(4, alpha, eps).unwrap();
        prop_assert!(phi(lo, &p).unwrap() < phi(hi, &p).unwrap());
    }

    #[test]
    fn phi_stays_in_domain(alpha in log_range(1e-10, 1.0), eps in log_range(1e-16, 1.0), xi in 0.0f64..=1.0) {
        let p = MeshParams::new(4, alpha, eps).unwrap();
        let y = phi(xi, &p).unwrap();
        prop_assert!((0.0..=1.0 + 1e-15).contains(&y));
    }

    #[test]
    fn kappa_two_sided_bound(alpha in log_range(1e-12, 1.0), eps in log_range(1e-16, 1.0)) {
        let k = kappa(alpha, eps).unwrap();
        let upper = (1.0 / alpha).min(1.0 + (0.5 * eps.log2()).abs());
        prop_assert!(k >= std::f64::consts::LN_2 * (1.0 - 1e-12), "kappa = {}", k);
        prop_assert!(k <= upper * (1.0 + 1e-12), "kappa = {} > {}", k, upper);
    }

    #[test]
    fn mesh_is_symmetric_and_ordered(n in 2usize..300, alpha in log_range(1e-8, 1.0), eps in log_range(1e-14, 1.0)) {
        let mesh = build_mesh(MeshParams::new(n, alpha, eps).unwrap()).unwrap();
        let n = n as isize;
        prop_assert_eq!((mesh.x(-n), mesh.x(0), mesh.x(n)), (-1.0, 0.0, 1.0));
        for i in 1..=n {
            prop_assert_eq!(mesh.x(-i), -mesh.x(i));
            prop_assert!(mesh.h(i) > 0.0);
        }
        let total: f64 = mesh.intervals().iter().sum();
        prop_assert!((total - 2.0).abs() < 1e-13);
    }
}

#[test]
fn bracket_small_exponent_matches_extended_precision() {
    // 50-digit reference values of (1+sqrt(eps))^alpha - eps^(alpha/2)
    let cases = [
        (1e-6, 1e-12, 1.3815416124237274552e-5),
        (1e-10, 1e-8, 9.2104403627349975578e-10),
        (0.0025, 1e-14, 0.039494181863269359794),
        (0.5, 0.25, 0.5176380902050415247),
    ];
    for (alpha, eps, expected) in cases {
        let got = bracket(alpha, eps).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-13, "{alpha} {eps}: {got} vs {expected}");
        let k = kappa(alpha, eps).unwrap();
        assert!(((k - expected / alpha) / k).abs() < 1e-13);
    }
}

#[test]
fn phi_matches_extended_precision() {
    let p = MeshParams::new(4, 0.5, 0.25).unwrap();
    assert!((phi(0.5, &p).unwrap() - 0.43301270189221932338).abs() < 1e-15);
    let p = MeshParams::new(4, 0.01, 1e-10).unwrap();
    let got = phi(0.3, &p).unwrap();
    assert!(((got - 3.5421162926106151988e-4) / got).abs() < 1e-12, "{got}");
}

#[test]
fn first_interval_shrinks_like_n_to_minus_k() {
    // eps <= h^{2/alpha}: x_1 <= (2h)^{1/alpha} <= 2^{1/alpha} h^k for alpha <= 1/k
    for alpha in [0.25, 0.125] {
        for n in [8, 16, 32, 64] {
            for eps in [1e-14, 1e-30, 1e-60] {
                let h = 1.0 / n as f64;
                if eps > h.powf(2.0 / alpha) {
                    continue;
                }
                let mesh = build_mesh(MeshParams::new(n, alpha, eps).unwrap()).unwrap();
                let fitted = mesh.x(1) / h.powi(4);
                assert!(fitted <= 2f64.powf(1.0 / alpha), "alpha={alpha} N={n} eps={eps:e}: {fitted}");
            }
        }
    }
    // larger eps: the weighted first-interval bound takes over
    let study = lemma_refinement_study(0.125, 1e-8, 0.5, 4, &[64, 128, 256], 1e4).unwrap();
    for r in study.ratios(LEMMA_FIRST_INTERVAL) {
        assert!((0.5..=2.0).contains(&r), "{r}");
    }
    assert!(study.failures().is_empty(), "{:?}", study.failures());
}

#[test]
fn lemma_constants_stable_under_doubling() {
    let study = lemma_refinement_study(0.25, 1e-8, 0.5, 2, &[64, 128, 256], DEFAULT_LEMMA_CEILING).unwrap();
    assert!(study.failures().is_empty(), "{:?}", study.failures());
    for name in [LEMMA_H_BOUND, LEMMA_DIFF_WEIGHTED] {
        for r in study.ratios(name) {
            assert!((0.5..=2.0).contains(&r), "{name}: {r}");
        }
    }
}

#[test]
fn lemma_hypothesis_violation_is_not_a_failure() {
    let mesh = build_mesh(MeshParams::new(64, 0.75, 1e-6).unwrap()).unwrap();
    let report = tpfem::verify_mesh_lemmas(&mesh, 0.1, 3, DEFAULT_LEMMA_CEILING).unwrap();
    assert!(report.failures().is_empty());
    assert!(report.checks.iter().any(|c| c.fitted().is_none()));
}
