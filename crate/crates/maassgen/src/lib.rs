//! Hejhal's method for Maass cusp forms on the modular group.
//!
//! A form of eigenvalue `1/4 + r^2` is expanded as
//! `f(x+iy) = Σ a_n √y K_{ir}(2πny) cs(2πnx)` with `cs = cos` (even) or `sin` (odd)
//! and `a_1 = 1`. Bessel values are scaled by `e^{πr/2}` throughout.

use nalgebra::{DMatrix, DVector};
use pscatter::geometry::{reduce_fund_domain, Point};
pub use pscatter::maass::Parity;
use pscatter::special::kbessel;
use pscatter::C64;
use std::f64::consts::PI;

/// `e^{πr/2} K_{ir}(x)`.
pub fn kscaled(r: f64, x: f64) -> f64 {
    let k = kbessel(C64::new(0.0, r), x).expect("K-Bessel evaluation");
    k.re * (0.5 * PI * r).exp()
}

/// Number of terms so that the neglected Bessel factors are below `e^{-margin}`.
pub fn terms_needed(r: f64, y: f64, margin: f64) -> usize {
    ((r + margin) / (2.0 * PI * y)).ceil() as usize
}

/// Solve the collocation system at height `y` with `m` coefficients and `q` points.
/// Returns `a_1 .. a_m` with `a_1 = 1`.
pub fn solve_coefficients(r: f64, parity: Parity, y: f64, m: usize, q: usize) -> Option<Vec<f64>> {
    assert!(y < 0.5 * 3f64.sqrt() && q > m && m >= 2);
    let mut v = DMatrix::<f64>::zeros(m, m);
    for l in 1..=m {
        v[(l - 1, l - 1)] += y.sqrt() * kscaled(r, 2.0 * PI * l as f64 * y);
    }
    for j in 1..=q {
        let xm = (j as f64 - 0.5) / (2.0 * q as f64);
        let (zs, _) = reduce_fund_domain(&Point { x: xm, y });
        let kn: Vec<f64> = (1..=m).map(|n| zs.y.sqrt() * kscaled(r, 2.0 * PI * n as f64 * zs.y) * parity.cs(2.0 * PI * n as f64 * zs.x)).collect();
        for l in 1..=m {
            let w = 2.0 / q as f64 * parity.cs(2.0 * PI * l as f64 * xm);
            for n in 1..=m {
                v[(l - 1, n - 1)] -= w * kn[n - 1];
            }
        }
    }
    let sub = v.view((1, 1), (m - 1, m - 1)).into_owned();
    let rhs = -DVector::from_iterator(m - 1, (1..m).map(|l| v[(l, 0)]));
    let sol = sub.lu().solve(&rhs)?;
    let mut out = vec![1.0];
    out.extend(sol.iter());
    Some(out)
}

/// Heights used for eigenvalue detection.
pub const SCAN_Y: (f64, f64) = (0.82, 0.71);

/// `a_2(Y_1) - a_2(Y_2)`: vanishes at eigenvalues of the given parity.
pub fn mismatch(r: f64, parity: Parity, margin: f64) -> f64 {
    let (y1, y2) = SCAN_Y;
    let m = terms_needed(r, y2, margin).max(4);
    let a = solve_coefficients(r, parity, y1, m, m + 10);
    let b = solve_coefficients(r, parity, y2, m, m + 10);
    match (a, b) {
        (Some(a), Some(b)) => a[1] - b[1],
        _ => f64::NAN,
    }
}

/// Sign-change brackets of `mismatch` on a uniform grid.
pub fn scan(r_lo: f64, r_hi: f64, step: f64, parity: Parity) -> Vec<(f64, f64)> {
    let n = ((r_hi - r_lo) / step).ceil() as usize;
    let mut out = Vec::new();
    let mut prev = (r_lo, mismatch(r_lo, parity, 18.0));
    for i in 1..=n {
        let r = r_lo + i as f64 * step;
        let h = mismatch(r, parity, 18.0);
        if prev.1.is_finite() && h.is_finite() && prev.1.signum() != h.signum() {
            out.push((prev.0, r));
        }
        prev = (r, h);
    }
    out
}

/// Refine a bracket by Illinois regula falsi; `None` if it is a pole rather than a root.
pub fn refine(lo: f64, hi: f64, parity: Parity, tol: f64) -> Option<f64> {
    let f = |r: f64| mismatch(r, parity, 30.0);
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if !(fa.signum() != fb.signum()) {
        return None;
    }
    let mut side = 0;
    for _ in 0..100 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < tol || fc == 0.0 {
            break;
        }
    }
    let root = 0.5 * (a + b);
    if f(root).abs() < 1e-6 {
        Some(root)
    } else {
        None
    }
}

/// Deviation from multiplicativity: max over `n <= limit` of the Hecke relations.
pub fn hecke_defect(a: &[f64], limit: usize) -> f64 {
    let get = |n: usize| a[n - 1];
    let mut worst: f64 = 0.0;
    for m in 2..=limit {
        for n in 2..=limit / m {
            let g = gcd(m, n);
            // a_m a_n = Σ_{d | gcd(m,n)} a_{mn/d^2}
            let rhs: f64 = (1..=g).filter(|d| g % d == 0).map(|d| get(m * n / (d * d))).sum();
            worst = worst.max((get(m) * get(n) - rhs).abs());
        }
    }
    worst
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Gauss-Legendre nodes mapped to `[a, b]` in `panels` equal pieces.
fn panels(a: f64, b: f64, count: usize, order: usize) -> Vec<(f64, f64)> {
    pscatter::quad::composite_nodes(a, b, count, order)
}

/// `∫ cs(2πnx) cs(2πkx) dx` over `[x0, 1/2]`.
fn overlap(parity: Parity, n: usize, k: usize, x0: f64) -> f64 {
    let c = |j: i64| -> f64 {
        if j == 0 {
            0.5 - x0
        } else {
            -(2.0 * PI * j as f64 * x0).sin() / (2.0 * PI * j as f64)
        }
    };
    let (n, k) = (n as i64, k as i64);
    match parity {
        Parity::Even => 0.5 * (c(n - k) + c(n + k)),
        Parity::Odd => 0.5 * (c(n - k) - c(n + k)),
    }
}

/// L² norm squared over the fundamental domain of the series with `e^{πr/2}`-scaled Bessel factors.
pub fn scaled_norm_sq(r: f64, parity: Parity, a: &[f64]) -> f64 {
    let y_top = (r + 45.0) / (2.0 * PI);
    let nmax = a.len().min(terms_needed(r, 0.5 * 3f64.sqrt(), 45.0));
    let coeffs = |y: f64| -> Vec<f64> { (1..=nmax).map(|n| a[n - 1] * y.sqrt() * kscaled(r, 2.0 * PI * n as f64 * y)).collect() };
    let mut total = 0.0;
    // y = cos θ on the arc part, where x runs over [sin θ, 1/2].
    for (th, w) in panels(0.0, PI / 6.0, 8, 12) {
        let y = th.cos();
        let b = coeffs(y);
        let x0 = th.sin();
        let mut inner = 0.0;
        for n in 0..nmax {
            for k in 0..nmax {
                inner += b[n] * b[k] * overlap(parity, n + 1, k + 1, x0);
            }
        }
        total += w * th.sin() * inner / (y * y);
    }
    let count = ((y_top - 1.0) / 0.05).ceil() as usize;
    for (y, w) in panels(1.0, y_top, count, 10) {
        let b = coeffs(y);
        total += w * 0.25 * b.iter().map(|v| v * v).sum::<f64>() / (y * y);
    }
    2.0 * total
}
