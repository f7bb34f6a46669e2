use fracac_core::kernels::{
    kernel_distance, quadrature_weights, relaxation_distance_closed_form, staggered_weights,
};
use fracac_core::quad::{integrate, Tolerance};
use fracac_core::{Kernel, LimitRegime};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn sample_kernels() -> Vec<Kernel> {
    vec![
        Kernel::abel(1.0, 0.5).unwrap(),
        Kernel::abel(0.3, 0.2).unwrap(),
        Kernel::abel(2.0, 0.9).unwrap(),
        Kernel::mittag_leffler(0.1, 1.0, 1.0, 0.5, 1.0).unwrap(),
        Kernel::mittag_leffler(1.0, 0.01, 1.0, 0.5, 0.75).unwrap(),
        Kernel::mittag_leffler(1.0, 0.05, 2.0, 0.75, 0.5).unwrap(),
        Kernel::mittag_leffler(1.0, 0.2, 1.0, 1.0, 0.5).unwrap(),
        Kernel::mittag_leffler(0.5, 0.1, 1.0, 0.4, 0.4).unwrap(),
        Kernel::mittag_leffler(1.0, 1.0, 1.0, 1.0, 1.0).unwrap(),
    ]
}

#[test]
fn ml_density_against_closed_form_oracle() {
    // 2^{-1/2} / 0.5 · e^{2} erfc(√2)
    let k = Kernel::mittag_leffler(1.0, 0.5, 1.0, 0.5, 1.0).unwrap();
    assert!(rel(k.eval(1.0).unwrap(), 0.475464259983732969198) < 1e-8);
}

#[test]
fn antiderivative_matches_quadrature_of_density() {
    for k in sample_kernels() {
        for i in 1..=20 {
            let t = 0.05 * i as f64;
            let q = integrate(
                |s| k.eval(s).unwrap(),
                0.0,
                t,
                Tolerance {
                    abs: 1e-14,
                    rel: 1e-11,
                    max_intervals: 20_000,
                },
            )
            .unwrap()
            .value;
            let c = k.conv_one(t).unwrap();
            assert!(rel(c, q) < 1e-8, "{k} at t = {t}: {c} vs {q}");
        }
    }
}

#[test]
fn relaxation_kernels_with_a_above_b_change_sign() {
    let k = Kernel::mittag_leffler(1.0, 0.05, 1.0, 0.75, 0.5).unwrap();
    assert!(!k.is_nonnegative());
    assert!(k.eval(0.01).unwrap() > 0.0);
    assert!(k.eval(1.0).unwrap() < 0.0);
}

#[test]
fn antiderivative_is_nondecreasing() {
    for k in sample_kernels().into_iter().filter(Kernel::is_nonnegative) {
        let mut prev = 0.0;
        for i in 0..=500 {
            let t = 2.0 * i as f64 / 500.0;
            let c = k.conv_one(t).unwrap();
            assert!(c >= prev, "{k} at {t}");
            prev = c;
        }
    }
}

#[test]
fn abel_antiderivative_differentiates_back() {
    let k = Kernel::abel(1.3, 0.4).unwrap();
    let h = 1e-6;
    for &t in &[0.1, 0.5, 1.0, 2.0] {
        let fd = (k.conv_one(t + h).unwrap() - k.conv_one(t).unwrap()) / h;
        assert!(rel(fd, k.eval(t).unwrap()) < 1e-4);
    }
}

#[test]
fn weights_sum_to_antiderivative() {
    for k in sample_kernels() {
        for &(dt, n) in &[(1e-3, 1000usize), (0.01, 37), (0.1, 1)] {
            let w = quadrature_weights(&k, dt, n).unwrap();
            assert_eq!(w.len(), n);
            if k.is_nonnegative() {
                assert!(w.iter().all(|&x| x >= 0.0));
            }
            let total = k.conv_one(n as f64 * dt).unwrap();
            let s: f64 = w.iter().sum();
            assert!(rel(s, total) <= 1e-12, "{k}: {s} vs {total}");
            let ws = staggered_weights(&k, dt, n).unwrap();
            let s: f64 = ws.iter().sum();
            assert!(rel(s, k.conv_one((n as f64 - 0.5) * dt).unwrap()) <= 1e-12);
        }
    }
    assert!(quadrature_weights(&Kernel::Zero, 0.1, 4)
        .unwrap()
        .iter()
        .all(|&w| w == 0.0));
}

#[test]
fn distance_to_zero_of_scaled_abel() {
    let c = 0.7;
    for &(eps, alpha) in &[(1e-2, 0.5), (0.3, 0.25), (1.0, 0.9)] {
        let k = Kernel::abel(eps * c, alpha).unwrap();
        let t: f64 = 1.7;
        let expected =
            eps * c * t.powf(1.0 + alpha) / fracac_core::special_fn::gamma(2.0 + alpha).unwrap();
        let d = kernel_distance(&k, &Kernel::Zero, t).unwrap();
        assert!(rel(d, expected) < 1e-8, "{d} vs {expected}");
    }
    let k = Kernel::abel(1.0, 0.5).unwrap();
    assert_eq!(kernel_distance(&k, &k, 1.0).unwrap(), 0.0);
}

#[test]
fn relaxation_distance_closed_form_agrees() {
    for &tau in &[1e-1, 1e-2, 1e-3] {
        let k = Kernel::mittag_leffler(1.0, tau, 1.0, 0.5, 0.75).unwrap();
        let lim = k.limit_kernel(LimitRegime::VanishingRelaxation).unwrap();
        assert_eq!(lim, Kernel::abel(1.0, 0.25).unwrap());
        // kernel_distance itself cross-checks the closed form to 1e-6
        let d = kernel_distance(&k, &lim, 1.0).unwrap();
        let closed = relaxation_distance_closed_form(&k, 1.0).unwrap();
        assert!(rel(d, closed) < 1e-6);
    }
    // a = b = 1 against the Dirac limit: δτ(1 - e^{-T/τ})
    let tau: f64 = 0.05;
    let k = Kernel::mittag_leffler(2.0, tau, 1.0, 1.0, 1.0).unwrap();
    let lim = k.limit_kernel(LimitRegime::VanishingRelaxation).unwrap();
    let d = kernel_distance(&lim, &k, 1.0).unwrap();
    assert!(rel(d, 2.0 * tau * (1.0 - (-1.0 / tau).exp())) < 1e-8);
    // scaling time enters as τ_θ^{a-b}
    let k = Kernel::mittag_leffler(1.0, 0.01, 4.0, 0.5, 0.75).unwrap();
    let lim = k.limit_kernel(LimitRegime::VanishingRelaxation).unwrap();
    let d = kernel_distance(&k, &lim, 1.0).unwrap();
    let d1 = relaxation_distance_closed_form(
        &Kernel::mittag_leffler(1.0, 0.01, 1.0, 0.5, 0.75).unwrap(),
        1.0,
    )
    .unwrap();
    assert!(rel(d, d1 * 4f64.powf(-0.25)) < 1e-6);
}

fn kernel_strategy() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        (0.0f64..3.0, 0.05f64..0.95).prop_map(|(c, a)| Kernel::abel(c, a).unwrap()),
        (0.01f64..2.0, 0.01f64..1.0, 0.2f64..1.0, 0.2f64..1.0)
            .prop_map(|(d, t, a, b)| Kernel::mittag_leffler(d, t, 1.0, a, b).unwrap()),
        (0.0f64..1.0).prop_map(|w| Kernel::dirac(w).unwrap()),
        Just(Kernel::Zero),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distance_is_a_metric(k1 in kernel_strategy(), k2 in kernel_strategy(), k3 in kernel_strategy()) {
        let t = 1.0;
        let d12 = kernel_distance(&k1, &k2, t).unwrap();
        let d21 = kernel_distance(&k2, &k1, t).unwrap();
        let d13 = kernel_distance(&k1, &k3, t).unwrap();
        let d32 = kernel_distance(&k3, &k2, t).unwrap();
        prop_assert!((d12 - d21).abs() <= 1e-9 + 1e-7 * d12);
        prop_assert!(d12 <= d13 + d32 + 1e-9 + 1e-7 * d12);
    }

    #[test]
    fn abel_distance_scales_linearly(c in 0.1f64..3.0, a in 0.05f64..0.95, eps in 1e-4f64..1.0) {
        let k = Kernel::abel(c, a).unwrap();
        let d = kernel_distance(&k, &Kernel::Zero, 1.0).unwrap();
        let de = kernel_distance(&k.scale(eps), &Kernel::Zero, 1.0).unwrap();
        prop_assert!(rel(de, eps * d) < 1e-10);
    }
}
