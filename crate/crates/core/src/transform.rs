//! Test functions, the contour transform `g_{β,k}`, and the smooth and scattering terms.

use crate::error::{Error, Result};
use crate::maass::CriticalEvaluator;
use crate::quad::{composite_nodes, integrate_real};
use crate::special::psi_scaled;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Gap kept between the contour and the zero of `1 + mβψ`.
pub const NU_MARGIN: f64 = 0.05;

/// `h(ρ) = P(ρ²) exp(-ρ²/a²)` with `P(x) = Σ c_k x^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub a: f64,
    pub prefactor: Vec<f64>,
}

impl TestFunction {
    pub fn gaussian(a: f64) -> Result<Self> {
        Self::with_prefactor(a, vec![1.0])
    }

    pub fn with_prefactor(a: f64, prefactor: Vec<f64>) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::domain("TestFunction", format!("width a = {a} must be positive")));
        }
        if prefactor.is_empty() || prefactor.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("TestFunction", "prefactor needs finite coefficients"));
        }
        Ok(TestFunction { a, prefactor })
    }

    /// Entire, so analytic in every strip.
    pub fn sigma_max(&self) -> f64 {
        f64::INFINITY
    }

    fn poly(&self, x: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for (k, c) in self.prefactor.iter().enumerate().rev() {
            p = p * x + *c;
            if k > 0 {
                dp = dp * x + *c * k as f64;
            }
        }
        (p, dp)
    }

    pub fn h(&self, rho: C64) -> C64 {
        let x = rho * rho;
        self.poly(x).0 * (-x / (self.a * self.a)).exp()
    }

    pub fn dh(&self, rho: C64) -> C64 {
        let x = rho * rho;
        let (p, dp) = self.poly(x);
        (dp - p / (self.a * self.a)) * rho * 2.0 * (-x / (self.a * self.a)).exp()
    }

    /// `|Re ρ|` beyond which `|h|` and `|h'|` on `Im ρ = -nu` stay below `tol` times their size at the axis.
    pub fn cutoff(&self, nu: f64, tol: f64) -> f64 {
        let scale = self.h(C64::new(0.0, -nu)).norm().max(self.dh(C64::new(0.5 * self.a, -nu)).norm()).max(1e-300);
        let mut x = self.a;
        while self.h(C64::new(x, -nu)).norm().max(self.dh(C64::new(x, -nu)).norm()) > tol * scale {
            x += 0.25 * self.a;
        }
        x
    }
}

/// `1 + mβψ(1/2 + iρ)`.
pub fn denominator(beta: f64, m: usize, rho: C64) -> Result<C64> {
    let s = C64::new(0.5, 0.0) + C64::new(0.0, 1.0) * rho;
    Ok(psi_scaled(s, 0)? * (m as f64 * beta) + 1.0)
}

/// Contour height `ν` and the zero `v_β` of `1 + mβψ(1/2+v)` on `(0, σ)` if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuChoice {
    pub nu: f64,
    pub zero_location: Option<f64>,
}

pub fn find_nu(beta: f64, m: usize, sigma: f64) -> Result<NuChoice> {
    if !(sigma > 0.5) {
        return Err(Error::domain("find_nu", format!("sigma = {sigma} must exceed 1/2")));
    }
    let f = |v: f64| -> Result<f64> { Ok(1.0 + m as f64 * beta * psi_scaled(C64::new(0.5 + v, 0.0), 0)?.re) };
    if beta == 0.0 {
        return Ok(NuChoice { nu: 0.0, zero_location: None });
    }
    // ψ is increasing on (1/2, ∞), so the function is monotone and has at most one sign change.
    let (mut lo, mut hi) = (0.0, sigma);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() || flo == 0.0 {
        return Ok(NuChoice { nu: 0.0, zero_location: None });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)?.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let v = 0.5 * (lo + hi);
    Ok(NuChoice { nu: v + NU_MARGIN, zero_location: Some(v) })
}

/// Composite Gauss-Legendre rule along a horizontal line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineQuad {
    pub panel: f64,
    pub order: usize,
    /// Relative size of the truncated Gaussian tails.
    pub tail_tol: f64,
}

impl Default for LineQuad {
    fn default() -> Self {
        LineQuad { panel: 0.25, order: 20, tail_tol: 1e-18 }
    }
}

impl LineQuad {
    pub fn refined(&self) -> Self {
        LineQuad { panel: 0.5 * self.panel, ..*self }
    }

    /// Panels no wider than the gap to the zero of the denominator near `x = 0`.
    fn near_zero(&self, nu: &NuChoice) -> Result<Self> {
        match nu.zero_location {
            Some(v) if !(nu.nu - v > 1e-8) => {
                Err(Error::Contract(format!("contour height {} is not below the zero at -i{v}", nu.nu)))
            }
            Some(v) => Ok(LineQuad { panel: self.panel.min(nu.nu - v), ..*self }),
            None => Ok(*self),
        }
    }

    /// Nodes `x` and weights on `[lo, hi]`.
    pub fn nodes(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let panels = ((hi - lo) / self.panel).ceil().max(1.0) as usize;
        composite_nodes(lo, hi, panels, self.order)
    }
}

/// Values of `w(ρ) = h'(ρ) / (1 + mβψ)^k` on the line `Im ρ = -ν`, with nodes.
struct LineData {
    rho: Vec<C64>,
    weight: Vec<f64>,
    w: Vec<C64>,
}

fn line_data(h: &TestFunction, beta: f64, m: usize, k: u32, nu: &NuChoice, q: &LineQuad) -> Result<LineData> {
    let q = q.near_zero(nu)?;
    let nu = nu.nu;
    let x_max = h.cutoff(nu, q.tail_tol);
    let mut out = LineData { rho: Vec::new(), weight: Vec::new(), w: Vec::new() };
    for (x, wt) in q.nodes(-x_max, x_max) {
        let rho = C64::new(x, -nu);
        let d = denominator(beta, m, rho)?;
        if d.norm() < 1e-8 {
            return Err(Error::Contract(format!("contour Im rho = {} passes a zero of 1 + m beta psi at {rho}", -nu)));
        }
        out.rho.push(rho);
        out.weight.push(wt);
        out.w.push(h.dh(rho) / d.powi(k as i32));
    }
    Ok(out)
}

/// `g_{β,k}(t)` as a complex number; the imaginary part vanishes in exact arithmetic.
pub fn g_transform(beta: f64, m: usize, k: u32, t: f64, h: &TestFunction, nu: &NuChoice, q: &LineQuad) -> Result<C64> {
    Ok(g_transform_grid(beta, m, k, &[t], h, nu, q)?[0])
}

/// `g_{β,k}` at many `t`, sharing the contour data.
pub fn g_transform_grid(beta: f64, m: usize, k: u32, ts: &[f64], h: &TestFunction, nu: &NuChoice, q: &LineQuad) -> Result<Vec<C64>> {
    if k == 0 {
        return Err(Error::domain("g_transform", "k must be at least 1"));
    }
    let ld = line_data(h, beta, m, k, nu, q)?;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let pref = C64::new(0.0, 2.0 * PI * k as f64).inv() * sign;
    let i = C64::new(0.0, 1.0);
    Ok(ts
        .iter()
        .map(|&t| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..ld.rho.len() {
                acc += ld.w[j] * (-i * ld.rho[j] * t).exp() * ld.weight[j];
            }
            acc * pref
        })
        .collect())
}

/// `(1/2π)∫ h(ρ) mβψ'(1/2+iρ) / (1 + mβψ(1/2+iρ)) dρ` along `Im ρ = -ν`.
pub fn smooth_term(h: &TestFunction, beta: f64, m: usize, nu: &NuChoice, q: &LineQuad) -> Result<f64> {
    if beta == 0.0 {
        return Ok(0.0);
    }
    let q = q.near_zero(nu)?;
    let x_max = h.cutoff(nu.nu, q.tail_tol);
    let mut acc = C64::new(0.0, 0.0);
    for (x, wt) in q.nodes(-x_max, x_max) {
        let rho = C64::new(x, -nu.nu);
        let s = C64::new(0.5, 0.0) + C64::new(0.0, 1.0) * rho;
        let d = denominator(beta, m, rho)?;
        if d.norm() < 1e-8 {
            return Err(Error::Contract(format!("contour passes a zero of 1 + m beta psi at {rho}")));
        }
        acc += h.h(rho) * psi_scaled(s, 1)? * (m as f64 * beta) / d * wt;
    }
    Ok(acc.re / (2.0 * PI))
}

/// The same term as `-(1/2πi)∫ h'(ρ) log(1 + mβψ(1/2+iρ)) dρ`.
pub fn smooth_term_by_parts(h: &TestFunction, beta: f64, m: usize, nu: &NuChoice, q: &LineQuad) -> Result<f64> {
    if beta == 0.0 {
        return Ok(0.0);
    }
    let q = q.near_zero(nu)?;
    let x_max = h.cutoff(nu.nu, q.tail_tol);
    // log(-D) is continuous when D < 0 on the axis; the constant iπ integrates to zero against h'.
    let flip = denominator(beta, m, C64::new(0.0, -nu.nu))?.re < 0.0;
    let mut acc = C64::new(0.0, 0.0);
    for (x, wt) in q.nodes(-x_max, x_max) {
        let rho = C64::new(x, -nu.nu);
        let d = denominator(beta, m, rho)?;
        let l = if flip { (-d).ln() } else { d.ln() };
        acc += h.dh(rho) * l * wt;
    }
    Ok((acc / C64::new(0.0, -2.0 * PI)).re)
}

/// Scattering term with its truncation and bridging error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringValue {
    pub value: f64,
    pub tail_estimate: f64,
    pub quadrature_error: f64,
    /// Phase error from the spectral-expansion truncation, `∫|h'| err/|S|` (estimate).
    pub dataset_error: f64,
    /// Upper limit of the `ρ` integral.
    pub cutoff: f64,
}

/// `(1/4π)∫ h θ'_α/θ_α dρ = (1/π)∫_0^∞ h'(ρ) [A(ρ) - A(0)] dρ` where `A = arg S(1/2+iρ)`
/// plus `π` for every pole of `S` passed, so that `A` is continuous.
pub fn scattering_term(h: &TestFunction, ev: &CriticalEvaluator, cutoff: Option<f64>) -> Result<ScatteringValue> {
    let p = cutoff.unwrap_or_else(|| h.cutoff(0.0, 1e-17));
    let poles: Vec<f64> = ev.weights.iter().filter(|(_, w)| *w > 1e-30).map(|(r, _)| *r).collect();
    let margin = ev.params.pole_margin * 1.01;
    let s0 = ev.s_alpha_critical(C64::new(0.0, 0.0))?.value;
    let a0 = if s0.re < 0.0 { PI } else { 0.0 };
    let phase = |rho: f64| -> Result<f64> {
        let v = ev.s_alpha_critical(C64::new(rho, 0.0))?.value;
        let passed = poles.iter().filter(|&&r| r < rho).count() as f64;
        Ok(v.im.atan2(v.re).rem_euclid(2.0 * PI).min(PI) + PI * passed - a0)
    };
    // Split [0, p] around the poles; bridge each window linearly.
    let mut edges = vec![0.0];
    for &r in poles.iter().filter(|&&r| r - margin < p) {
        edges.push(r - margin);
        edges.push(r + margin);
    }
    edges.push(p);
    let mut value = 0.0;
    let mut qerr = 0.0;
    for (idx, win) in edges.windows(2).enumerate() {
        let (lo, hi) = (win[0], win[1].min(p));
        if hi <= lo {
            continue;
        }
        if idx % 2 == 0 {
            let err_cell = std::cell::RefCell::new(None);
            let r = integrate_real(
                |x| match phase(x) {
                    Ok(a) => h.dh(C64::new(x, 0.0)).re * a,
                    Err(e) => {
                        err_cell.borrow_mut().get_or_insert(e);
                        0.0
                    }
                },
                lo,
                hi,
                1e-13,
                1e-11,
                8,
                4000,
            );
            if let Some(e) = err_cell.into_inner() {
                return Err(e);
            }
            value += r.value.re;
            qerr += r.error;
        } else {
            let (al, ah) = (phase(lo)?, phase(hi)?);
            let mid = 0.5 * (lo + hi);
            value += h.dh(C64::new(mid, 0.0)).re * 0.5 * (al + ah) * (hi - lo);
            qerr += h.dh(C64::new(mid, 0.0)).norm() * PI * (hi - lo);
        }
    }
    // |A| grows at most like π(2 + ρ²/12) from the arg bound plus the counted poles.
    let tail = integrate_real(|x| h.dh(C64::new(x, 0.0)).norm() * (2.0 + x * x / 12.0), p, p + 20.0 * h.a, 0.0, 1e-8, 8, 400).value.re;
    let samples = 400;
    let mut dataset_error = 0.0;
    for i in 0..samples {
        let x = (i as f64 + 0.5) * p / samples as f64;
        if poles.iter().any(|r| (x - r).abs() < margin) {
            continue;
        }
        let v = ev.s_alpha_critical(C64::new(x, 0.0))?;
        let err = v.discrete_truncation_error + v.continuous_truncation_error;
        dataset_error += h.dh(C64::new(x, 0.0)).norm() * (err / v.value.norm()).min(PI) * p / samples as f64;
    }
    Ok(ScatteringValue { value: value / PI, tail_estimate: tail, quadrature_error: qerr / PI, dataset_error: dataset_error / PI, cutoff: p })
}
