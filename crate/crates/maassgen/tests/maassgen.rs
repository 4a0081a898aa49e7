use maassgen::*;
use pscatter::maass::load_maass_dataset;
use std::path::PathBuf;

fn dataset_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/maass_psl2z.json")
}

#[test]
fn first_eigenvalue() {
    let r = refine(9.52, 9.54, Parity::Odd, 1e-10).unwrap();
    assert!((r - 9.53369526).abs() < 1e-7, "{r}");
}

#[test]
fn spurious_bracket_is_rejected_or_absent() {
    assert!(refine(9.0, 9.2, Parity::Odd, 1e-10).is_none());
}

#[test]
fn dataset_forms_are_hecke_eigenforms() {
    let ds = load_maass_dataset(&dataset_path(), 50).unwrap();
    assert!(ds.forms.len() >= 20);
    for f in &ds.forms {
        assert!(hecke_defect(&f.coeffs, 50) < 1e-6, "r = {}", f.r);
    }
    let known = [9.53369526, 12.17300832, 13.77975135, 14.35850951];
    for (f, k) in ds.forms.iter().zip(known) {
        assert!((f.r - k).abs() < 1e-7, "{} vs {k}", f.r);
    }
}

#[test]
fn coefficient_solve_reproduces_dataset() {
    let ds = load_maass_dataset(&dataset_path(), 50).unwrap();
    let f = &ds.forms[0];
    // A different collocation height than the generator's.
    let m = 60;
    let y = (f.r + 30.0) / (2.0 * std::f64::consts::PI * m as f64);
    assert!(terms_needed(f.r, y, 30.0) <= m);
    let a = solve_coefficients(f.r, f.parity, y, m, m + 16).unwrap();
    for n in 0..10 {
        assert!((a[n] - f.coeffs[n]).abs() < 1e-8, "a_{} {} {}", n + 1, a[n], f.coeffs[n]);
    }
}
