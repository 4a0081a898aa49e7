mod common;

use common::*;
use pscatter::green::{Coupling, SpectralFunctionHandle};
use pscatter::orbits::LengthGroup;
use pscatter::quad::integrate_real;
use pscatter::trace::*;
use pscatter::transform::{LineQuad, TestFunction};
use std::sync::OnceLock;

fn handle() -> &'static SpectralFunctionHandle {
    static H: OnceLock<SpectralFunctionHandle> = OnceLock::new();
    H.get_or_init(|| SpectralFunctionHandle::new(&pt(0.0, 2.0), Coupling::Finite(1.0), 11.0).unwrap())
}

fn sigma() -> &'static SigmaChoice {
    static S: OnceLock<SigmaChoice> = OnceLock::new();
    S.get_or_init(|| choose_sigma(handle()).unwrap())
}

fn gauss() -> TestFunction {
    TestFunction::gaussian(1.0).unwrap()
}

fn log_side() -> &'static LogSide {
    static L: OnceLock<LogSide> = OnceLock::new();
    L.get_or_init(|| {
        let h = handle();
        log_derivative_side(&gauss(), h, &h.lengths, sigma().sigma, &LineQuad::default(), SeriesMode::Corrected).unwrap()
    })
}

fn residual(kmax: u32, lmax: f64) -> f64 {
    let p = DiffractiveParams::for_test_function(&gauss(), kmax, lmax);
    let d = diffractive_side(&gauss(), handle(), sigma(), p, &LineQuad::default()).unwrap();
    (log_side().value - d.total).abs()
}

#[test]
fn sigma_choice_at_reference_point() {
    let s = sigma();
    assert!(s.margin <= SIGMA_RATIO);
    assert!(s.sigma.is_finite());
    // Ladder rungs below the accepted one were rejected.
    assert!(s.tested.iter().take(s.tested.len() - 1).all(|(_, r)| *r > SIGMA_RATIO));
    let next = sample_ratio(handle(), s.sigma + 1.0, 40.0, 200).unwrap();
    assert!(next <= SIGMA_RATIO && next <= s.margin, "{next}");
}

#[test]
fn sigma_choice_for_zero_coupling() {
    let mut h = handle().clone();
    h.beta = 0.0;
    let s = choose_sigma(&h).unwrap();
    assert_eq!(s.sigma, 1.0);
    let p = DiffractiveParams::for_test_function(&gauss(), 3, 6.0);
    let d = diffractive_side(&gauss(), &h, &s, p, &LineQuad::default()).unwrap();
    assert_eq!(d.total, 0.0);
    assert_eq!(d.smooth, 0.0);
}

#[test]
fn log_side_vanishes_for_weak_coupling() {
    let h = handle().with_alpha(Coupling::Finite(1e-8)).unwrap();
    let s = choose_sigma(&h).unwrap();
    let v = log_derivative_side(&gauss(), &h, &h.lengths, s.sigma, &LineQuad::default(), SeriesMode::Corrected).unwrap();
    assert!(v.value.abs() < 1e-6, "{}", v.value);
}

#[test]
fn log_side_is_real_and_sigma_stable() {
    let a = log_side();
    assert!(a.imag.abs() < 1e-9, "{}", a.imag);
    let h = handle();
    let b = log_derivative_side(&gauss(), h, &h.lengths, sigma().sigma + 0.5, &LineQuad::default(), SeriesMode::Corrected).unwrap();
    assert!((a.value - b.value).abs() < 1e-7, "{} {}", a.value, b.value);
}

#[test]
fn geometric_identity_and_convergence() {
    let r_base = residual(6, 9.0);
    let r_k = residual(7, 9.0);
    let r_l = residual(6, 11.0);
    let r_both = residual(7, 11.0);
    assert!(r_k < r_base && r_l < r_base && r_both < r_k.min(r_l), "{r_base} {r_k} {r_l} {r_both}");
    let check = geometric_identity_check(&gauss(), handle(), sigma(), DiffractiveParams::for_test_function(&gauss(), 6, 11.0), &LineQuad::default()).unwrap();
    assert!(check.residual < 1e-4 && check.passed, "{}", check.residual);
}

#[test]
fn first_term_two_routes() {
    let h = handle();
    let p = DiffractiveParams { kmax: 1, ..DiffractiveParams::for_test_function(&gauss(), 1, 11.0) };
    let d = diffractive_side(&gauss(), h, sigma(), p, &LineQuad::default()).unwrap();
    let direct = first_term_direct(&gauss(), h, 11.0, sigma().sigma, &LineQuad::default()).unwrap();
    assert!((d.terms[0] - direct).abs() < 1e-6, "{} {}", d.terms[0], direct);
    // Shortest orbit only.
    let l1 = h.lengths.groups[0].length;
    let p1 = DiffractiveParams { lmax: l1, ..p };
    let d1 = diffractive_side(&gauss(), h, sigma(), p1, &LineQuad::default()).unwrap();
    let direct1 = first_term_direct(&gauss(), h, l1, sigma().sigma, &LineQuad::default()).unwrap();
    assert!((d1.terms[0] - direct1).abs() < 1e-6);
}

#[test]
fn kernel_matches_direct_quadrature() {
    let l = 1.2;
    let f = |t: f64| (-t * t / 4.0).exp();
    let kg = KernelGrid::new(&[LengthGroup { length: l, multiplicity: 2 }], 12.0 / 1400.0, 12.0).unwrap();
    let vals: Vec<f64> = kg.grid().iter().map(|&t| f(t)).collect();
    let grid = kg.apply(&vals)[0];
    let oracle = integrate_real(
        |u| {
            let tau = l + u * u;
            let d = tau.cosh() - l.cosh();
            let w = if u == 0.0 { 2.0 / l.sinh().sqrt() } else { 2.0 * u / d.sqrt() };
            2.0 * w * f(tau)
        },
        0.0,
        4.0,
        1e-14,
        1e-13,
        8,
        4000,
    )
    .value
    .re;
    assert!((grid - oracle).abs() < 1e-7 * oracle.abs(), "{grid} {oracle}");
}

#[test]
fn tuple_sums_are_symmetric() {
    let dt = 10.0 / 1000.0;
    let k1 = KernelGrid::new(&[LengthGroup { length: 1.3, multiplicity: 1 }], dt, 10.0).unwrap();
    let k2 = KernelGrid::new(&[LengthGroup { length: 2.1, multiplicity: 1 }], dt, 10.0).unwrap();
    let g: Vec<f64> = k1.grid().iter().map(|t| (-t * t / 3.0).exp() * (1.0 + t)).collect();
    let a = k1.apply(&k2.apply(&g))[0];
    let b = k2.apply(&k1.apply(&g))[0];
    assert!((a - b).abs() < 1e-12 * a.abs(), "{a} {b}");
}

#[test]
fn delta_rule_and_override() {
    let ds = dataset();
    assert!(ds.forms.iter().all(|f| f.r != 0.0));
    assert_eq!(delta_gamma_auto(handle(), Some(&ds)).unwrap(), 0);
    let q = LineQuad::default();
    let params = TraceParams { delta: Some(1), ..Default::default() };
    let r = trace_report(&gauss(), handle(), None, params, &q).unwrap();
    assert_eq!(r.delta, 1);
    assert_eq!(r.delta_term, 0.5);
    assert!(r.lhs.is_none() && r.rhs.is_none() && r.passed().is_none());
    assert!(r.note.contains("unavailable"));
}

#[test]
fn full_trace_report() {
    let ds = dataset();
    let r = trace_report(&gauss(), handle(), Some(&ds), TraceParams::default(), &LineQuad::default()).unwrap();
    let lhs = r.lhs.as_ref().unwrap();
    assert_eq!(r.delta, 0);
    let unp = &lhs.unperturbed[0];
    assert_eq!(unp.lambda, 0.0);
    assert_eq!(unp.h, gauss().h(c(0.0, 0.5)).re);
    assert_eq!(r.rhs.unwrap(), r.smooth_term + r.delta_term + r.scattering_term.unwrap() + r.diffractive_sum);
    assert_eq!(r.diffractive_sum, r.diffractive_terms.iter().sum::<f64>());
    assert_eq!(lhs.total, lhs.perturbed_sum - lhs.unperturbed_sum);
    assert!(r.budget.estimated && r.budget.total > 0.0);
    assert!(r.relative_budget.unwrap() <= 5e-2);
    assert_eq!(r.passed(), Some(true), "residual {:?} budget {}", r.residual, r.budget.total);
}
