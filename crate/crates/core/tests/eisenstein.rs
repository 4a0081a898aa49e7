mod common;

use common::*;
use proptest::prelude::*;
use pscatter::eisenstein::*;
use pscatter::special::completed_zeta;

#[test]
fn phi_identities() {
    let s = c(0.8, 5.0);
    assert!((phi_scatter(s).unwrap() * phi_scatter(1.0 - s).unwrap() - 1.0).norm() < 1e-10);
    assert!((phi_scatter(c(0.5, 0.0)).unwrap() + 1.0).norm() < 1e-8);
    let expect = completed_zeta(c(3.0, 0.0)).unwrap() / completed_zeta(c(4.0, 0.0)).unwrap();
    assert!((phi_scatter(c(2.0, 0.0)).unwrap() - expect).norm() < 1e-13);
    assert!(phi_scatter(c(1.0, 0.0)).is_err());
}

#[test]
fn phi_near_half_is_continuous() {
    for e in [1e-3, 1e-6, 1e-9] {
        let a = phi_scatter(c(0.5 + e, 0.3 * e)).unwrap();
        assert!((a + 1.0).norm() < 10.0 * e);
    }
}

#[test]
fn functional_equation_examples() {
    let z = pt(0.2, 1.1);
    let s = c(0.7, 3.0);
    let tol = 1e-10;
    let a = eisenstein_eval(&z, s, tol).unwrap();
    let b = eisenstein_eval(&z, 1.0 - s, tol).unwrap();
    assert!(a.tail_bound <= tol && b.tail_bound <= tol);
    let phi = phi_scatter(s).unwrap();
    assert!((a.value - phi * b.value).norm() < 2.0 * tol * (1.0 + phi.norm()));
}

#[test]
fn functional_equation_20_points() {
    let tol = 1e-10;
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let z = pt(-0.5 + 0.05 * i as f64, 0.3 + 0.2 * i as f64);
        let s = c(0.05 + 1.4 * ((i * 7) % 20) as f64 / 19.0, -20.0 + 40.0 * ((i * 11) % 20) as f64 / 19.0);
        if (s - 1.0).norm() < 0.05 || s.norm() < 0.05 || (s - 0.5).norm() < 1e-3 {
            continue;
        }
        let e = eisenstein_eval(&z, s, tol).unwrap().value;
        let r = phi_scatter(s).unwrap() * eisenstein_eval(&z, 1.0 - s, tol).unwrap().value;
        worst = worst.max((e - r).norm() / e.norm().max(1.0));
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn cusp_asymptotics_and_reality() {
    let v = eisenstein_eval(&pt(0.0, 10.0), c(2.0, 0.0), 1e-14).unwrap().value;
    let phi = phi_scatter(c(2.0, 0.0)).unwrap();
    assert!((v - (100.0 + phi * 0.1)).norm() < 1e-12);
    let e = eisenstein(&pt(0.0, 2.0), c(1.5, 0.0)).unwrap();
    assert!(e.im.abs() < 1e-12);
}

#[test]
fn invariant_under_the_group() {
    let z = pt(0.23, 1.4);
    let s = c(0.8, 4.0);
    let a = eisenstein(&z, s).unwrap();
    let zs = pscatter::geometry::mobius_apply(&pscatter::geometry::GroupElement::S, &z);
    let zt = pt(z.x + 3.0, z.y);
    assert!((eisenstein(&zs, s).unwrap() - a).norm() < 1e-10 * a.norm());
    assert!((eisenstein(&zt, s).unwrap() - a).norm() < 1e-10 * a.norm());
}

#[test]
fn defining_sum_agrees_with_fourier_expansion() {
    let cases = [(pt(0.1, 1.2), c(3.0, 0.0)), (pt(-0.3, 1.0), c(3.0, 2.0)), (pt(0.45, 0.95), c(2.5, -1.0)), (pt(0.0, 1.7), c(4.0, 5.0)), (pt(0.2, 1.05), c(3.5, 0.5))];
    for (z, s) in cases {
        assert!(s.re >= 1.2);
        let (d, tail) = eisenstein_direct_sum(&z, s, 1200.0);
        let f = eisenstein_eval(&z, s, 1e-13).unwrap().value;
        assert!(tail < 5e-9, "tail {tail}");
        assert!((d - f).norm() < 1e-8, "{z:?} {s}: {d} vs {f}");
    }
}

#[test]
fn defining_sum_near_abscissa() {
    // The direct sum converges like M^{2-2 Re s}; compare within its certified tail.
    let z = pt(0.1, 1.2);
    let s = c(1.2, 0.0);
    let (d, tail) = eisenstein_direct_sum(&z, s, 2000.0);
    let f = eisenstein(&z, s).unwrap();
    assert!((d - f).norm() <= tail, "{} > {tail}", (d - f).norm());
}

#[test]
fn rejects_bad_tolerance() {
    assert!(eisenstein_eval(&pt(0.0, 1.0), c(2.0, 0.0), 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn conjugation_symmetry(x in -0.5f64..0.5, y in 0.9f64..3.0, re in 0.05f64..2.0, im in 0.1f64..20.0) {
        let z = pt(x, y);
        let s = c(re, im);
        let a = eisenstein(&z, s.conj()).unwrap();
        let b = eisenstein(&z, s).unwrap().conj();
        prop_assert!((a - b).norm() < 1e-10 * b.norm().max(1.0));
    }
}
