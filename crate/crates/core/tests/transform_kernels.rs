mod common;

use common::*;
use proptest::prelude::*;
use pscatter::green::{Coupling, SpectralFunctionHandle};
use pscatter::maass::{CriticalEvaluator, CriticalParams};
use pscatter::special::psi_scaled;
use pscatter::transform::*;
use std::sync::OnceLock;

fn critical() -> &'static CriticalEvaluator {
    static E: OnceLock<CriticalEvaluator> = OnceLock::new();
    E.get_or_init(|| {
        let h = SpectralFunctionHandle::new(&pt(0.0, 2.0), Coupling::Finite(1.0), 11.0).unwrap();
        CriticalEvaluator::new(&h, &dataset(), CriticalParams::default()).unwrap()
    })
}

#[test]
fn gaussian_basics() {
    let h = TestFunction::gaussian(1.0).unwrap();
    assert_eq!(h.h(c(0.0, 0.0)), c(1.0, 0.0));
    assert_eq!(h.dh(c(0.0, 0.0)), c(0.0, 0.0));
    let r = c(2.3, -0.4);
    assert!((h.h(r) - h.h(-r)).norm() < 1e-15);
    let sigma: f64 = 1.0;
    let bound = (sigma * sigma).exp() * (-25.0f64).exp();
    assert!(h.h(c(5.0, -sigma)).norm() <= bound * (1.0 + 1e-12));
    assert!(TestFunction::gaussian(0.0).is_err());
    assert!(TestFunction::gaussian(-1.0).is_err());
    assert_eq!(h.sigma_max(), f64::INFINITY);
}

#[test]
fn derivative_matches_finite_difference() {
    let h = TestFunction::with_prefactor(1.3, vec![1.0, -0.2, 0.05]).unwrap();
    let r = c(0.7, -0.3);
    let e = 1e-5;
    let fd = (h.h(r + e) - h.h(r - e)) / (2.0 * e);
    assert!((fd - h.dh(r)).norm() < 1e-9);
}

#[test]
fn find_nu_examples() {
    assert_eq!(find_nu(0.0, 1, 2.0).unwrap(), NuChoice { nu: 0.0, zero_location: None });
    // |ψ| on the segment (1/2, 1/2 + σ) is bounded by its endpoint values.
    let sigma = 2.0;
    let psi_max = (0..=200)
        .map(|i| psi_scaled(c(0.5 + 1e-3 + sigma * i as f64 / 200.0, 0.0), 0).unwrap().re.abs())
        .fold(0.0, f64::max);
    let tiny = 0.5 / psi_max;
    assert!(find_nu(tiny, 1, sigma).unwrap().zero_location.is_none());
    let beta = -1.0 / psi_scaled(c(0.8, 0.0), 0).unwrap().re;
    let nu = find_nu(beta, 1, sigma).unwrap();
    assert!((nu.zero_location.unwrap() - 0.3).abs() < 1e-10);
    assert!((nu.nu - 0.3 - NU_MARGIN).abs() < 1e-10);
    assert!(find_nu(1.0, 1, 0.5).is_err());
}

#[test]
fn denominator_bounded_away_from_zero_on_chosen_contour() {
    for beta in [1.0466, -0.5, 0.2, -1.0 / psi_scaled(c(0.8, 0.0), 0).unwrap().re] {
        let nu = find_nu(beta, 1, 2.0).unwrap();
        let min = (0..=400)
            .map(|i| denominator(beta, 1, c(-10.0 + 0.05 * i as f64, -nu.nu)).unwrap().norm())
            .fold(f64::INFINITY, f64::min);
        assert!(min > 1e-3, "beta {beta}: {min}");
    }
}

#[test]
fn g_transform_contour_independence_and_reality() {
    let h = TestFunction::gaussian(1.0).unwrap();
    let q = LineQuad::default();
    for beta in [1.0466, 0.2] {
        let nu = find_nu(beta, 1, 2.0).unwrap();
        let shifted = NuChoice { nu: nu.nu + 0.1, ..nu };
        for k in 1..=3 {
            let a = g_transform(beta, 1, k, 2.0, &h, &nu, &q).unwrap();
            let b = g_transform(beta, 1, k, 2.0, &h, &shifted, &q).unwrap();
            assert!((a - b).norm() < 1e-8, "beta {beta} k {k}: {a} {b}");
            assert!(a.im.abs() < 1e-10);
        }
    }
    // Planted zero: the contour must pass below it.
    let beta = -1.0 / psi_scaled(c(0.8, 0.0), 0).unwrap().re;
    let nu = find_nu(beta, 1, 2.0).unwrap();
    let a = g_transform(beta, 1, 1, 2.0, &h, &nu, &q).unwrap();
    let b = g_transform(beta, 1, 1, 2.0, &h, &NuChoice { nu: nu.nu + 0.1, ..nu }, &q).unwrap();
    assert!((a - b).norm() < 1e-8);
}

#[test]
fn g_transform_linearity_and_decay() {
    let q = LineQuad::default();
    let h1 = TestFunction::gaussian(1.0).unwrap();
    let h2 = TestFunction::with_prefactor(1.0, vec![0.0, 0.3]).unwrap();
    let sum = TestFunction::with_prefactor(1.0, vec![1.0, 0.3]).unwrap();
    let beta = 0.2;
    let nu = find_nu(beta, 1, 2.0).unwrap();
    let g = |h: &TestFunction, k: u32, t: f64| g_transform(beta, 1, k, t, h, &nu, &q).unwrap();
    assert!((g(&sum, 1, 1.5) - g(&h1, 1, 1.5) - g(&h2, 1, 1.5)).norm() < 1e-12);
    for k in [1, 2] {
        assert!(g(&h1, k, 4.0).norm() < g(&h1, k, 1.0).norm());
    }
    assert!(g_transform(beta, 1, 0, 1.0, &h1, &nu, &q).is_err());
}

#[test]
fn contour_through_a_zero_is_a_contract_violation() {
    let beta = -1.0 / psi_scaled(c(0.8, 0.0), 0).unwrap().re;
    let bad = NuChoice { nu: 0.3, zero_location: Some(0.3) };
    let h = TestFunction::gaussian(1.0).unwrap();
    assert!(g_transform(beta, 1, 1, 1.0, &h, &bad, &LineQuad::default()).is_err());
}

#[test]
fn smooth_term_routes() {
    let h = TestFunction::gaussian(1.0).unwrap();
    let q = LineQuad::default();
    assert_eq!(smooth_term(&h, 0.0, 1, &find_nu(0.0, 1, 2.0).unwrap(), &q).unwrap(), 0.0);
    for beta in [1.0466, -1.0 / psi_scaled(c(0.8, 0.0), 0).unwrap().re] {
        let nu = find_nu(beta, 1, 2.0).unwrap();
        let a = smooth_term(&h, beta, 1, &nu, &q).unwrap();
        let b = smooth_term(&h, beta, 1, &NuChoice { nu: nu.nu + 0.1, ..nu }, &q).unwrap();
        let c = smooth_term_by_parts(&h, beta, 1, &nu, &q).unwrap();
        assert!((a - b).abs() < 1e-8 && (a - c).abs() < 1e-8, "{a} {b} {c}");
    }
}

#[test]
fn doubling_nodes_is_stable() {
    let h = TestFunction::gaussian(1.0).unwrap();
    let q = LineQuad::default();
    let beta = 1.0466;
    let nu = find_nu(beta, 1, 2.0).unwrap();
    let a = g_transform(beta, 1, 2, 3.0, &h, &nu, &q).unwrap();
    let b = g_transform(beta, 1, 2, 3.0, &h, &nu, &q.refined()).unwrap();
    assert!((a - b).norm() < 1e-12);
    let sa = smooth_term(&h, beta, 1, &nu, &q).unwrap();
    let sb = smooth_term(&h, beta, 1, &nu, &q.refined()).unwrap();
    assert!((sa - sb).abs() < 1e-12);
}

#[test]
fn scattering_term_properties() {
    let h = TestFunction::gaussian(1.0).unwrap();
    let ev = critical();
    let full = scattering_term(&h, ev, None).unwrap();
    assert!(full.value.is_finite() && full.value.abs() < 1.0);
    let short = scattering_term(&h, ev, Some(3.0)).unwrap();
    let long = scattering_term(&h, ev, Some(6.0)).unwrap();
    assert!((short.value - long.value).abs() <= short.tail_estimate, "{} {}", (short.value - long.value).abs(), short.tail_estimate);
    let weak = scattering_term(&h, &ev.with_inv_alpha(1e6), None).unwrap();
    assert!(weak.value.abs() < 1e-3 * full.value.abs().max(1e-3), "{}", weak.value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gaussian_is_even(re in -6.0f64..6.0, im in -2.0f64..2.0, a in 0.3f64..3.0) {
        let h = TestFunction::with_prefactor(a, vec![1.0, 0.5]).unwrap();
        let r = c(re, im);
        prop_assert!((h.h(r) - h.h(-r)).norm() <= 1e-14 * h.h(r).norm().max(1e-300));
        prop_assert!((h.dh(r) + h.dh(-r)).norm() <= 1e-14 * h.dh(r).norm().max(1e-300));
    }
}
