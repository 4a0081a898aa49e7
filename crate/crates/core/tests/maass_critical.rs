mod common;

use common::*;
use pscatter::eisenstein::{eisenstein, phi_scatter};
use pscatter::error::Error;
use pscatter::geometry::{mobius_apply, GroupElement};
use pscatter::green::{Coupling, SpectralFunctionHandle};
use pscatter::maass::*;
use pscatter::C64;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn handle() -> &'static SpectralFunctionHandle {
    static H: OnceLock<SpectralFunctionHandle> = OnceLock::new();
    H.get_or_init(|| SpectralFunctionHandle::new(&pt(0.0, 2.0), Coupling::Finite(1.0), 11.0).unwrap())
}

fn critical() -> &'static CriticalEvaluator {
    static E: OnceLock<CriticalEvaluator> = OnceLock::new();
    E.get_or_init(|| CriticalEvaluator::new(handle(), &dataset(), CriticalParams::default()).unwrap())
}

/// Sample points in `(0, 40)` kept away from the tabulated `ρ_j`.
fn samples(n: usize) -> Vec<f64> {
    let ev = critical();
    (0..n)
        .map(|i| 0.3 + 39.0 * i as f64 / n as f64)
        .map(|r| {
            let mut r = r;
            while ev.weights.iter().any(|(rj, w)| *w > 1e-30 && (r - rj).abs() < 0.1) {
                r += 0.07;
            }
            r
        })
        .collect()
}

#[test]
fn argument_lies_in_upper_half_plane() {
    let ev = critical();
    let mut violations = 0;
    for r in samples(50) {
        let v = ev.s_alpha_critical(c(r, 0.0)).unwrap().value;
        let arg = v.arg();
        if !(0.0..=PI).contains(&arg) {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn log_ratio_bound() {
    let ev = critical();
    let mut violations = 0;
    for r in samples(50) {
        let plus = ev.s_alpha_critical(c(r, 0.0)).unwrap().value;
        let minus = ev.s_alpha_critical(c(-r, 0.0)).unwrap().value;
        assert!((minus - plus.conj()).norm() < 1e-10 * plus.norm().max(1.0), "r={r} {plus} {minus}");
        if (minus / plus).ln().norm() > 2.0 * PI {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn theta_has_unit_modulus_on_the_critical_line() {
    let sf = SpectralFunction::new(handle().clone(), Some(critical().clone()));
    for r in [2.0, 3.0, 7.5] {
        let (theta, phi_a) = sf.theta_phi_alpha(c(0.5, r)).unwrap();
        assert!((theta.norm() - 1.0).abs() < 1e-8, "{theta}");
        assert!((phi_a.norm() - 1.0).abs() < 1e-8);
    }
    let s = c(0.5, 3.0);
    let (t1, _) = sf.theta_phi_alpha(s).unwrap();
    let (t2, _) = sf.theta_phi_alpha(1.0 - s).unwrap();
    assert!((t1 * t2 - 1.0).norm() < 1e-10);
}

#[test]
fn theta_is_continuous_in_the_coupling() {
    let sf = SpectralFunction::new(handle().clone(), Some(critical().clone()));
    let near = SpectralFunction::new(handle().with_alpha(Coupling::Finite(1.0001)).unwrap(), Some(critical().with_inv_alpha(1.0 / 1.0001)));
    let s = c(0.5, 4.0);
    let a = sf.theta_phi_alpha(s).unwrap().0;
    let b = near.theta_phi_alpha(s).unwrap().0;
    assert!((a - b).norm() < 1e-3);
}

#[test]
fn pole_proximity_is_rejected() {
    let ev = critical();
    let (rj, _) = ev.weights.iter().find(|(_, w)| *w > 1e-6).copied().unwrap();
    assert!(matches!(ev.s_alpha_critical(c(rj + 0.01, 0.0)), Err(Error::PoleProximity { .. })));
}

#[test]
fn dataset_round_trip_is_bit_exact() {
    let ds = dataset();
    let dir = std::env::temp_dir().join(format!("maass_rt_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join("ds.json");
    ds.save(&p).unwrap();
    let back = load_maass_dataset(&p, 50).unwrap();
    assert_eq!(back.forms, ds.forms);
    assert_eq!(back.residual, ds.residual);
    assert!(ds.forms.len() >= 20 && ds.r_max() <= 30.0);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn dataset_validation() {
    let ds = dataset();
    let mut dup = ds.clone();
    dup.forms[1].r = dup.forms[0].r;
    assert!(MaassDataset::from_json(&dup.to_json().unwrap(), 50).is_err());
    let minimal = MaassDataset::new("residual only", vec![]);
    let back = MaassDataset::from_json(&minimal.to_json().unwrap(), 50).unwrap();
    assert!(back.is_degraded());
    let mut raw: serde_json::Value = serde_json::from_str(&ds.to_json().unwrap()).unwrap();
    raw.as_object_mut().unwrap().remove("residual");
    assert!(matches!(MaassDataset::from_json(&raw.to_string(), 50), Err(Error::Data(_))));
    assert!(MaassDataset::from_json(&ds.to_json().unwrap(), 1000).is_err());
    assert!(MaassDataset::from_json("{not json", 50).is_err());
}

#[test]
fn form_values_are_automorphic() {
    let ds = dataset();
    let z = pt(0.13, 1.05);
    let sz = mobius_apply(&GroupElement::S, &z);
    let tz = pt(z.x + 1.0, z.y);
    for f in ds.forms.iter().take(8) {
        let a = maass_value_at(f, &z);
        let b = maass_value_at(f, &sz);
        let t = maass_value_at(f, &tz);
        assert!((a.value - t.value).abs() < 1e-10);
        assert!((a.value - b.value).abs() < 1e-6 + a.truncation_bound + b.truncation_bound, "r={}: {} vs {}", f.r, a.value, b.value);
    }
    let odd = ds.forms.iter().find(|f| f.parity == Parity::Odd).unwrap();
    assert!(maass_value_at(odd, &pt(0.0, 1.3)).value.abs() < 1e-15);
}

#[test]
fn perturbed_eisenstein_series() {
    let sf = SpectralFunction::new(handle().clone(), None);
    let s = c(1.5, 0.0);
    let theta = handle().s_alpha_reflected(s).unwrap() / handle().s_alpha(s).unwrap();
    let phi_a = phi_scatter(s).unwrap() * theta;
    let mut prev = f64::INFINITY;
    for y in [8.0, 12.0, 16.0] {
        let z = pt(0.17, y);
        let v = sf.perturbed_eisenstein(&z, s).unwrap();
        let main = c(y, 0.0).powc(s) + phi_a * c(y, 0.0).powc(1.0 - s);
        let d = (v - main).norm();
        assert!(d < 10.0 * (-2.0 * PI * y).exp().max(1e-12) * y.powf(1.5), "y={y}: {d}");
        assert!(d <= prev);
        prev = d;
    }
    let weak = SpectralFunction::new(handle().with_alpha(Coupling::Finite(1e-6)).unwrap(), None);
    let z = pt(0.1, 1.3);
    let e = eisenstein(&z, s).unwrap();
    assert!((weak.perturbed_eisenstein(&z, s).unwrap() - e).norm() < 1e-4);
    assert!(sf.perturbed_eisenstein(&pt(0.0, 2.0), s).is_err());
    assert!(sf.perturbed_eisenstein(&z, c(0.8, 0.0)).is_err());
}

#[test]
fn planted_small_eigenvalue() {
    let h = handle();
    let v0 = 1.3;
    let rest = h.s_alpha(c(0.5 + v0, 0.0)).unwrap().re - h.inv_beta();
    // 1/β = 1/α - c0, so this α places the zero at v0.
    let inv_alpha = h.c0 - rest;
    let planted = h.with_alpha(Coupling::Finite(1.0 / inv_alpha)).unwrap();
    let roots = find_small_eigenvalues(&planted, 0.6, 5.0, 40).unwrap();
    assert_eq!(roots.len(), 1);
    assert!((roots[0].v - v0).abs() < 1e-10, "{}", roots[0].v);
}

#[test]
fn live_roots_have_small_residual_and_brackets() {
    for alpha in [1.0, -1.0, -0.3, 5.0] {
        let h = handle().with_alpha(Coupling::Finite(alpha)).unwrap();
        for root in find_small_eigenvalues(&h, 0.52, 8.0, 60).unwrap() {
            let s = |v: f64| h.s_alpha(c(0.5 + v, 0.0)).unwrap().re;
            assert!(s(root.v).abs() < 1e-10);
            assert!(root.bracket.0 <= root.v && root.v <= root.bracket.1);
            assert!(s(root.bracket.0).signum() != s(root.bracket.1).signum() || root.bracket.0 == root.bracket.1);
        }
    }
    let strong = handle().with_alpha(Coupling::Finite(1e-3)).unwrap();
    assert!(find_small_eigenvalues(&strong, 0.6, 5.0, 40).unwrap().is_empty());
    assert!(find_small_eigenvalues(handle(), 0.4, 5.0, 40).is_err());
}

#[test]
fn critical_zero_scan_is_generically_empty() {
    let ev = critical();
    assert!(critical_zero_scan(ev, 0.0, 15.0, 300, 1e-3, 1e-3).unwrap().is_empty());
    assert!(critical_zero_scan(ev, 0.0, 15.0, 300, 0.0, 0.0).unwrap().is_empty());
    let loose = critical_zero_scan(ev, 0.0, 15.0, 300, 1e3, 1e3).unwrap();
    let mid = critical_zero_scan(ev, 0.0, 15.0, 300, 1e3, 0.5).unwrap();
    assert!(mid.iter().all(|r| loose.contains(r)));
    assert!(!loose.is_empty());
}

#[test]
fn spectral_function_dispatch() {
    let sf = SpectralFunction::new(handle().clone(), None);
    assert!(sf.eval(c(0.5, 3.0)).is_err());
    let s = c(1.3, 1.0);
    assert_eq!(sf.eval(s).unwrap(), handle().s_alpha(s).unwrap());
    let _: C64 = sf.eval(c(-0.3, 1.0)).unwrap();
}
