//! Eisenstein series of the modular group via its Fourier expansion
//!
//! `E(z,s) = y^s + φ(s) y^{1-s}
//!          + (4/Λ(2s)) √y Σ_{n≥1} n^{s-1/2} σ_{1-2s}(n) K_{s-1/2}(2πny) cos(2πnx)`.

use crate::error::{Error, Result};
use crate::geometry::{reduce_fund_domain, Point};
use crate::special::{completed_zeta, divisor_sigma, kbessel, lambda_pole_log_slope};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Below this `|2s - 1|` the pole pair of Λ at 0 and 1 is resolved analytically.
const NEAR_HALF: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EisensteinValue {
    pub value: C64,
    pub truncation_n: usize,
    pub tail_bound: f64,
}

/// Scattering coefficient `φ(s) = Λ(2s-1)/Λ(2s)`.
pub fn phi_scatter(s: C64) -> Result<C64> {
    let eps = s * 2.0 - 1.0;
    if eps.norm() < NEAR_HALF {
        // εΛ(1+ε) = exp(c ε + O(ε²)), so φ = -exp(-2cε + O(ε³)).
        let c = lambda_pole_log_slope();
        return Ok(-(-eps * (2.0 * c)).exp());
    }
    if (s - 1.0).norm() == 0.0 {
        return Err(Error::Pole { func: "phi_scatter", at: "1".into() });
    }
    let num = completed_zeta(eps)?;
    let den = completed_zeta(s * 2.0)?;
    let v = num / den;
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::Pole { func: "phi_scatter", at: format!("{s}") });
    }
    Ok(v)
}

/// `1/Λ(2s)`, finite (zero) at `s = 1/2`.
fn inv_lambda_2s(s: C64) -> Result<C64> {
    let eps = s * 2.0 - 1.0;
    if eps.norm() < NEAR_HALF {
        let c = lambda_pole_log_slope();
        return Ok(eps * (-eps * c).exp());
    }
    Ok(completed_zeta(s * 2.0)?.inv())
}

/// Upper bound for the magnitude of the `n`-th Fourier term.
fn term_bound(pref: f64, sigma: f64, y: f64, n: f64) -> f64 {
    let mu = (sigma - 0.5).abs();
    let x = 2.0 * PI * n * y;
    let kb = (PI / (2.0 * x)).sqrt() * (-x + mu * mu / (2.0 * x)).exp();
    let div = 2.0 * n.sqrt() * n.powf((1.0 - 2.0 * sigma).max(0.0));
    pref * n.powf(sigma - 0.5) * div * kb
}

/// Certified bound on `Σ_{n>N}` of the term bounds.
fn tail_after(pref: f64, sigma: f64, y: f64, n0: usize) -> f64 {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut n = n0 + 1;
    loop {
        let b = term_bound(pref, sigma, y, n as f64);
        sum += b;
        let q = b / prev;
        if n > n0 + 5 && q < 1.0 && b < 1e-3 * sum {
            // Remaining terms decay at least geometrically with ratio q.
            return sum + b * q / (1.0 - q);
        }
        if b == 0.0 {
            return sum;
        }
        prev = b;
        n += 1;
    }
}

/// Evaluate `E(z, s)` with a certified Fourier tail below `tol`.
pub fn eisenstein_eval(z: &Point, s: C64, tol: f64) -> Result<EisensteinValue> {
    if !(tol > 0.0) {
        return Err(Error::domain("eisenstein_eval", "tolerance must be positive"));
    }
    let (zr, _) = reduce_fund_domain(z);
    let (x, y) = (zr.x, zr.y);
    let phi = phi_scatter(s)?;
    let inv_l = inv_lambda_2s(s)?;
    let one = C64::new(1.0, 0.0);
    let ly = y.ln();
    let constant = (s * ly).exp() + phi * ((one - s) * ly).exp();
    let coef = inv_l * 4.0 * y.sqrt();
    let pref = coef.norm();
    let sigma = s.re;
    if pref == 0.0 {
        return Ok(EisensteinValue { value: constant, truncation_n: 0, tail_bound: 0.0 });
    }
    let mut n_trunc = 0usize;
    let cap = 10_000usize;
    let mut tail = tail_after(pref, sigma, y, 0);
    while tail > 0.5 * tol {
        n_trunc = if n_trunc < 8 { n_trunc + 1 } else { n_trunc + n_trunc / 4 };
        if n_trunc > cap {
            return Err(Error::Tolerance { requested: tol, achieved: tail });
        }
        tail = tail_after(pref, sigma, y, n_trunc);
    }
    let nu = s - 0.5;
    let mut sum = C64::new(0.0, 0.0);
    for n in 1..=n_trunc {
        let nf = n as f64;
        let k = kbessel(nu, 2.0 * PI * nf * y)?;
        let dsum = divisor_sigma(one - s * 2.0, n as u64);
        sum += (nu * nf.ln()).exp() * dsum * k * (2.0 * PI * nf * x).cos();
    }
    Ok(EisensteinValue { value: constant + coef * sum, truncation_n: n_trunc, tail_bound: tail })
}

/// `E(z, s)` with a default tolerance of 1e-12 relative to the constant term.
pub fn eisenstein(z: &Point, s: C64) -> Result<C64> {
    let (zr, _) = reduce_fund_domain(z);
    let scale = zr.y.powf(s.re.max(1.0 - s.re)).max(1.0);
    Ok(eisenstein_eval(z, s, 1e-13 * scale)?.value)
}
