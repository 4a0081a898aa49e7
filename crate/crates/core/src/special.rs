//! Complex special functions: log-gamma, digamma (with the `1/(2π)`
//! normalisation used for the spectral function), completed zeta, K-Bessel,
//! Legendre functions of the second kind and divisor sums.

use crate::error::{Error, Result};
use crate::quad::integrate;
use crate::{c64, C64};
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `B_{2k} / (2k)!` for k = 1..=20, via `(-1)^{k+1} 2 ζ(2k) / (2π)^{2k}`.
fn bernoulli_over_factorial() -> &'static [f64; 20] {
    static T: std::sync::OnceLock<[f64; 20]> = std::sync::OnceLock::new();
    T.get_or_init(|| {
        let mut t = [0.0; 20];
        let mut fact = 1.0;
        for k in 1..=20 {
            let p = 2 * k as i32;
            fact *= (p - 1) as f64 * p as f64;
            if k <= 10 {
                t[k - 1] = B2K[k - 1] / fact;
                continue;
            }
            let z: f64 = (1..60).map(|n| (n as f64).powi(-p)).sum();
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t[k - 1] = sign * 2.0 * z / (2.0 * PI).powi(p);
        }
        t
    })
}

const B2K: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

fn is_nonpositive_integer(s: C64) -> bool {
    s.im == 0.0 && s.re <= 0.0 && s.re == s.re.round()
}

/// Principal-branch-free log-gamma: `exp(ln_gamma(s)) = Γ(s)`.
pub fn ln_gamma(s: C64) -> Result<C64> {
    if is_nonpositive_integer(s) {
        return Err(Error::Pole { func: "ln_gamma", at: format!("{s}") });
    }
    if s.re < 0.5 {
        // Reflection: Γ(s)Γ(1-s) = π / sin(πs).
        let sin = (s * PI).sin();
        return Ok(c64(PI.ln(), 0.0) - sin.ln() - ln_gamma(C64::new(1.0, 0.0) - s)?);
    }
    let mut z = s;
    let mut prod = C64::new(1.0, 0.0);
    let mut shift = C64::new(0.0, 0.0);
    while z.norm() < 15.0 || z.re < 8.0 {
        prod *= z;
        if prod.norm() > 1e200 {
            shift += prod.ln();
            prod = C64::new(1.0, 0.0);
        }
        z += 1.0;
    }
    shift += prod.ln();
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = C64::new(0.0, 0.0);
    let mut pw = inv;
    for (k, b) in B2K.iter().enumerate() {
        let kk = (k + 1) as f64;
        series += pw * (b / (2.0 * kk * (2.0 * kk - 1.0)));
        pw *= inv2;
    }
    Ok((z - 0.5) * z.ln() - z + LN_SQRT_2PI + series - shift)
}

pub fn gamma(s: C64) -> Result<C64> {
    Ok(ln_gamma(s)?.exp())
}

/// Standard digamma `Γ'/Γ`.
pub fn digamma(s: C64) -> Result<C64> {
    if is_nonpositive_integer(s) {
        return Err(Error::Pole { func: "digamma", at: format!("{s}") });
    }
    let mut z = s;
    let mut acc = C64::new(0.0, 0.0);
    while z.norm() < 15.0 || z.re < 8.0 {
        acc -= z.inv();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = C64::new(0.0, 0.0);
    let mut pw = inv2;
    for (k, b) in B2K.iter().enumerate() {
        series += pw * (b / (2.0 * (k + 1) as f64));
        pw *= inv2;
    }
    Ok(acc + z.ln() - inv * 0.5 - series)
}

/// Standard trigamma `d/ds Γ'/Γ`.
pub fn trigamma(s: C64) -> Result<C64> {
    if is_nonpositive_integer(s) {
        return Err(Error::Pole { func: "trigamma", at: format!("{s}") });
    }
    let mut z = s;
    let mut acc = C64::new(0.0, 0.0);
    while z.norm() < 15.0 || z.re < 8.0 {
        acc += (z * z).inv();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = C64::new(0.0, 0.0);
    let mut pw = inv2 * inv;
    for b in B2K.iter() {
        series += pw * *b;
        pw *= inv2;
    }
    Ok(acc + inv + inv2 * 0.5 + series)
}

/// Digamma normalised by `1/(2π)`; `order = 1` gives its derivative.
pub fn psi_scaled(s: C64, order: u8) -> Result<C64> {
    match order {
        0 => Ok(digamma(s)? / (2.0 * PI)),
        1 => Ok(trigamma(s)? / (2.0 * PI)),
        _ => Err(Error::domain("psi_scaled", "order must be 0 or 1")),
    }
}

/// Riemann zeta via Euler–Maclaurin, valid for `Re s >= 1/2`, `s != 1`.
fn zeta_em(s: C64) -> C64 {
    let n = ((0.5 * s.norm()).ceil() as usize + 15).max(20);
    let nf = n as f64;
    let mut sum = C64::new(0.0, 0.0);
    for k in 1..n {
        sum += (-s * (k as f64).ln()).exp();
    }
    let n_pow = (-s * nf.ln()).exp();
    sum += n_pow * nf / (s - 1.0) + n_pow * 0.5;
    let b = bernoulli_over_factorial();
    let mut rising = s;
    let mut npow = n_pow / nf;
    for (k, bk) in b.iter().enumerate().take(16) {
        let term = rising * npow * *bk;
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
        let kk = (k + 1) as f64;
        rising *= (s + (2.0 * kk - 1.0)) * (s + 2.0 * kk);
        npow /= nf * nf;
    }
    sum
}

/// Riemann zeta function.
pub fn zeta(s: C64) -> Result<C64> {
    if s == C64::new(1.0, 0.0) {
        return Err(Error::Pole { func: "zeta", at: "1".into() });
    }
    if s.re >= 0.5 {
        return Ok(zeta_em(s));
    }
    // ζ(s) = Λ(1-s) / (π^{-s/2} Γ(s/2)).
    if is_nonpositive_integer(s * 0.5) {
        if s == C64::new(0.0, 0.0) {
            return Ok(C64::new(-0.5, 0.0));
        }
        return Ok(C64::new(0.0, 0.0));
    }
    let lam = completed_zeta(C64::new(1.0, 0.0) - s)?;
    Ok(lam / (-(s * 0.5) * PI.ln() + ln_gamma(s * 0.5)?).exp())
}

/// Completed zeta `Λ(s) = π^{-s/2} Γ(s/2) ζ(s)`, symmetric under `s -> 1-s`.
pub fn completed_zeta(s: C64) -> Result<C64> {
    if s == C64::new(0.0, 0.0) || s == C64::new(1.0, 0.0) {
        return Err(Error::Pole { func: "completed_zeta", at: format!("{s}") });
    }
    let w = if s.re < 0.5 { C64::new(1.0, 0.0) - s } else { s };
    let pref = (-(w * 0.5) * PI.ln() + ln_gamma(w * 0.5)?).exp();
    Ok(pref * zeta_em(w))
}

/// `ε Λ(1+ε)` near ε = 0 is `exp(c1 ε + O(ε²))`; this returns `c1`.
pub(crate) fn lambda_pole_log_slope() -> f64 {
    let psi_half = -EULER_GAMMA - 2.0 * 2f64.ln();
    -0.5 * PI.ln() + 0.5 * psi_half + EULER_GAMMA
}

/// `Σ_{d | n} d^a`.
pub fn divisor_sigma(a: C64, n: u64) -> C64 {
    assert!(n >= 1, "divisor_sigma requires n >= 1");
    let mut sum = C64::new(0.0, 0.0);
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            sum += (a * (d as f64).ln()).exp();
            let e = n / d;
            if e != d {
                sum += (a * (e as f64).ln()).exp();
            }
        }
        d += 1;
    }
    sum
}

/// Modified Bessel function `K_ν(x)` for complex order and real `x > 0`.
///
/// Uses `K_ν(x) = ½∫ exp(-x cosh t + ν t) dt` along `Im t = θ`, with θ moved
/// toward the saddle point so the integrand does not oscillate wildly.
pub fn kbessel(nu: C64, x: f64) -> Result<C64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("kbessel", format!("argument {x} must be positive")));
    }
    let mut v = nu;
    if v.re < 0.0 {
        v = -v;
    }
    let conj = v.im < 0.0;
    if conj {
        v = v.conj();
    }
    if v.re == 0.0 {
        let k = kbessel_imag(v.im, x)?;
        return Ok(C64::new(k, 0.0));
    }
    Ok(kbessel_line(v, x, conj))
}

/// Modified Bessel function `I_ν(x)` by its power series; intended for `x <~ 60`.
pub fn ibessel(nu: C64, x: f64) -> Result<C64> {
    if !(x >= 0.0) {
        return Err(Error::domain("ibessel", format!("argument {x} must be non-negative")));
    }
    if x == 0.0 {
        return Ok(if nu == C64::new(0.0, 0.0) { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    }
    let q = 0.25 * x * x;
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (nu + k));
        sum += term;
        if term.norm() < 1e-17 * sum.norm() && k > q.sqrt() {
            break;
        }
    }
    Ok(sum * (nu * (0.5 * x).ln() - ln_gamma(nu + 1.0)?).exp())
}

/// `K_{ia}(x)` for real `a >= 0`; real valued.
fn kbessel_imag(a: f64, x: f64) -> Result<f64> {
    if a == 0.0 || x >= a {
        return Ok(kbessel_imag_descent(a, x));
    }
    if x * x <= 20.0 * a || x < 2.0 {
        return kbessel_imag_series(a, x);
    }
    Ok(kbessel_line(C64::new(0.0, a), x, false).re)
}

/// Steepest-descent form for `x >= a`: along `t = u + i v(u)` with
/// `sin v = a u / (x sinh u)` the integrand is positive and decreasing.
fn kbessel_imag_descent(a: f64, x: f64) -> f64 {
    let v_of = |u: f64| {
        let q = if u.abs() < 1e-4 { 1.0 - u * u / 6.0 } else { u / u.sinh() };
        (a / x * q).min(1.0).asin()
    };
    let v0 = v_of(0.0);
    let p0 = x * v0.cos() + a * v0;
    // Phase increment above the saddle, arranged to avoid cancellation.
    let rise = |u: f64| {
        let v = v_of(u);
        let sh = (0.5 * u).sinh();
        let dv = v - v0;
        x * (2.0 * sh * sh * v.cos() - 2.0 * (0.5 * (v + v0)).sin() * (0.5 * dv).sin()) + a * dv
    };
    let mut hi = 0.5;
    while rise(hi) < 46.0 {
        hi += 0.5;
    }
    let panels = ((hi / 0.5) as usize).max(2);
    let r = integrate(|u| C64::new((-rise(u)).exp(), 0.0), 0.0, hi, 0.0, 2e-15, panels, 400);
    r.value.re * (-p0).exp()
}

/// Power series `K_{ia}(x) = -π Im I_{ia}(x) / sinh(πa)`.
fn kbessel_imag_series(a: f64, x: f64) -> Result<f64> {
    let nu = C64::new(1.0, a);
    let q = 0.25 * x * x;
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (nu + (k - 1.0)));
        sum += term;
        if term.norm() < 1e-17 * sum.norm() && k > q {
            break;
        }
    }
    let lead = (C64::new(0.0, a * (0.5 * x).ln()) - ln_gamma(nu)?).exp();
    let im = (lead * sum).im;
    // -π / sinh(πa) computed without overflow for large a.
    let scale = if a > 20.0 {
        -2.0 * PI * (-PI * a).exp() / (1.0 - (-2.0 * PI * a).exp())
    } else {
        -PI / (PI * a).sinh()
    };
    Ok(scale * im)
}

fn kbessel_line(v: C64, x: f64, conj: bool) -> C64 {
    let b = v.im;
    let a = v.re;
    let theta = if b == 0.0 {
        0.0
    } else {
        let ts = (v / x).asinh();
        // Staying δ below π/2 costs about exp((b - x) δ) in cancellation but
        // buys decay exp(-x δ cosh u); balance the two.
        let delta = if b > x {
            let loss = |d: f64| b * d - x * d.sin();
            if loss(1.5) <= 4.0 {
                1.5
            } else {
                let (mut lo, mut hi) = (0.0, 1.5);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if loss(mid) <= 4.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo.max(1.0 / (1.0 + b))
            }
        } else {
            1.0 / (1.0 + b)
        };
        let cap = std::f64::consts::FRAC_PI_2 - delta;
        ts.im.clamp(0.0, cap.max(0.0))
    };
    let ct = theta.cos();
    // Real part of the exponent along the shifted line (constant -bθ dropped).
    let expo = |u: f64| -x * u.cosh() * ct + a * u;
    let umax = (a / (x * ct)).asinh();
    let peak = expo(umax);
    let drop = 46.0;
    let step = 0.25;
    let mut hi = umax;
    while expo(hi) > peak - drop {
        hi += step;
    }
    let mut lo = umax;
    while expo(lo) > peak - drop {
        lo -= step;
    }
    let f = |u: f64| {
        let t = c64(u, theta);
        let e = -t.cosh() * x + v * t;
        // Shift by the peak to avoid overflow/underflow.
        (e - peak).exp()
    };
    let panels = (((hi - lo) / 0.5).ceil() as usize).max(4);
    let r = integrate(f, lo, hi, 0.0, 2e-15, panels, 20_000);
    let mut val = r.value * 0.5 * peak.exp();
    if conj {
        val = val.conj();
    }
    val
}

/// `Q_ν(cosh t)` by quadrature of
/// `∫_t^∞ e^{-(ν+1/2)u} (2cosh u - 2cosh t)^{-1/2} du` after `u = t + w²`.
pub fn legendre_q(nu: C64, t: f64) -> Result<C64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain("legendre_q", format!("t = {t} must be positive")));
    }
    if nu.re <= -1.0 {
        return Err(Error::domain("legendre_q", format!("Re ν = {} must exceed -1", nu.re)));
    }
    let mu = nu + 0.5;
    let f = move |w: f64| {
        let w2 = w * w;
        let y = t + 0.5 * w2;
        let ln_sinh_y = y + (-(-2.0 * y).exp_m1()).ln() - 2f64.ln();
        let half = 0.5 * w2;
        let sinhc = if half < 1e-4 { 1.0 + half * half / 6.0 } else { half.sinh() / half };
        let ln_den = 0.5 * (ln_sinh_y + (0.5 * sinhc).ln());
        (-mu * (t + w2) - ln_den).exp()
    };
    // Decay of the integrand is like exp(-(Re ν + 1) w²).
    let wmax = (48.0 / (nu.re + 1.0)).sqrt();
    let osc = (nu.im.abs() * wmax * wmax / PI).ceil() as usize;
    let panels = (8 + osc).min(4000);
    let r = integrate(f, 0.0, wmax, 0.0, 1e-14, panels, 50_000);
    if !r.converged {
        return Err(Error::Tolerance { requested: 1e-14 * r.abs_integral, achieved: r.error });
    }
    Ok(r.value)
}

/// Hypergeometric evaluator for `Q_ν(z)`, `z = cosh t > 1`, sharing all
/// `ν`-dependent work across many arguments:
/// `Q_ν(z) = √π Γ(ν+1)/Γ(ν+3/2) (2z)^{-ν-1} ₂F₁((ν+1)/2, (ν+2)/2; ν+3/2; z^{-2})`.
#[derive(Debug, Clone)]
pub struct LegendreQSeries {
    nu: C64,
    prefactor: C64,
    coeffs: Vec<C64>,
}

impl LegendreQSeries {
    /// Coefficients sized for arguments `z >= z_min`.
    pub fn new(nu: C64, z_min: f64) -> Result<Self> {
        let np1 = nu + 1.0;
        if is_nonpositive_integer(np1) || is_nonpositive_integer(nu + 1.5) {
            return Err(Error::Pole { func: "LegendreQSeries", at: format!("{nu}") });
        }
        let prefactor = (ln_gamma(np1)? - ln_gamma(nu + 1.5)?).exp() * PI.sqrt();
        let a = np1 * 0.5;
        let b = (nu + 2.0) * 0.5;
        let c = nu + 1.5;
        let w = 1.0 / (z_min * z_min);
        let mut coeffs = vec![C64::new(1.0, 0.0)];
        let mut term = C64::new(1.0, 0.0);
        let mut k = 0usize;
        loop {
            let kf = k as f64;
            term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0));
            coeffs.push(term);
            k += 1;
            let tail_small = term.norm() * w.powi(k as i32) < 1e-18 * coeffs[0].norm();
            if (tail_small && k > 4) || k > 4000 {
                break;
            }
        }
        Ok(LegendreQSeries { nu, prefactor, coeffs })
    }

    /// `Q_ν(z)` for real `z` at least the `z_min` given at construction.
    pub fn eval(&self, z: f64) -> C64 {
        let w = 1.0 / (z * z);
        let mut sum = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            sum = sum * w + c;
        }
        let pw = (-(self.nu + 1.0) * (2.0 * z).ln()).exp();
        self.prefactor * pw * sum
    }
}
