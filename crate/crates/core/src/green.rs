//! Green's functions and the spectral function in its orbit-sum form.
//!
//! Conventions: `G_s(l) = -(1/2π) Q_{s-1}(cosh l)` and, for `Re s > 1`,
//! `S(s) = 1/β + m ψ(s) + Σ_{γ ∉ I} G_s(l_γ)` with `ψ = Γ'/(2πΓ)`.

use crate::error::{Error, Result};
use crate::geometry::{mobius_apply, reduce_fund_domain, Point};
use crate::orbits::{enumerate_orbits, enumerate_pairs, LengthGroup, OrbitTable, DEFAULT_CAP};
use crate::special::{legendre_q, psi_scaled, LegendreQSeries};
use crate::{c64, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Arguments `cosh l` at or above this use the hypergeometric series.
const SERIES_SWITCH: f64 = 1.5;
/// Window below the radius used for the self-consistency error estimate.
const ESTIMATE_WINDOW: f64 = 1.5;

/// Deficiency parameter: the root of `t(1-t) = i` with `Re t > 1/2`.
pub fn t_parameter() -> C64 {
    let disc = c64(1.0, -4.0).sqrt();
    let t = (disc + 1.0) * 0.5;
    if t.re > 0.5 {
        t
    } else {
        c64(1.0, 0.0) - t
    }
}

/// Free-space Green's function `-(1/2π) Q_{s-1}(cosh l)`.
pub fn free_green(s: C64, l: f64) -> Result<C64> {
    if !(l > 0.0) {
        return Err(Error::domain("free_green", format!("distance {l} must be positive")));
    }
    if s.re <= 0.0 {
        return Err(Error::domain("free_green", format!("Re s = {} must be positive", s.re)));
    }
    Ok(legendre_q(s - 1.0, l)? * (-1.0 / (2.0 * PI)))
}

/// Coupling constant `α`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coupling {
    Finite(f64),
    Infinite,
}

impl Coupling {
    pub fn inverse(&self) -> f64 {
        match self {
            Coupling::Finite(a) => 1.0 / a,
            Coupling::Infinite => 0.0,
        }
    }
}

impl std::fmt::Display for Coupling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coupling::Finite(a) => write!(f, "{a}"),
            Coupling::Infinite => write!(f, "inf"),
        }
    }
}

/// Renormalised coupling `β = α/(1 - c0 α)`, `β = -1/c0` for infinite `α`.
pub fn beta_of_alpha(alpha: Coupling, c0: f64) -> Result<f64> {
    match alpha {
        Coupling::Infinite => {
            if c0 == 0.0 {
                return Err(Error::SingularCoupling(f64::INFINITY));
            }
            Ok(-1.0 / c0)
        }
        Coupling::Finite(a) => {
            if a == 0.0 || !a.is_finite() {
                return Err(Error::domain("beta_of_alpha", "alpha must be finite and nonzero"));
            }
            let den = 1.0 - c0 * a;
            if den.abs() < 1e-14 {
                return Err(Error::SingularCoupling(a));
            }
            Ok(a / den)
        }
    }
}

/// Orbit-sum value with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSumValue {
    /// Truncated sum (plus any exact terms).
    pub value: C64,
    /// Rigorous bound on the dropped tail, given the counting hypothesis.
    pub tail_bound: f64,
    /// Asymptotic estimate of the dropped tail from the lattice-point main term.
    pub tail_correction: C64,
    /// Estimated error of `value + tail_correction`.
    pub corrected_error: f64,
}

impl OrbitSumValue {
    pub fn corrected(&self) -> C64 {
        self.value + self.tail_correction
    }
}

/// Lengths with multiplicities plus counting data for tail control.
#[derive(Debug, Clone)]
pub struct LengthSpectrum {
    pub groups: Vec<LengthGroup>,
    pub radius: f64,
    /// Elements with displacement `<= radius`, stabilizer included.
    pub count_at_radius: usize,
    /// Constant with `N(l) <= κ (cosh l - 1)`, fitted on `[R/2, R]` with margin.
    pub kappa: f64,
}

impl LengthSpectrum {
    pub fn from_table(table: &OrbitTable) -> Self {
        let groups = table.length_groups();
        let m = table.stabilizer_order;
        Self::from_groups(groups, table.radius, m)
    }

    pub fn from_groups(groups: Vec<LengthGroup>, radius: f64, base: usize) -> Self {
        let mut n = base;
        let mut ratio: f64 = 6.0;
        for g in &groups {
            n += g.multiplicity;
            if g.length >= 0.5 * radius && g.length > 1.0 {
                ratio = ratio.max(n as f64 / (g.length.cosh() - 1.0));
            }
        }
        LengthSpectrum { groups, radius, count_at_radius: n, kappa: 1.25 * ratio }
    }

    /// `Σ mult · G_s(l)` with tail bound, tail correction and error estimate.
    pub fn green_sum(&self, s: C64) -> Result<OrbitSumValue> {
        if s.re <= 1.0 {
            return Err(Error::Mode(format!("orbit sum requires Re s > 1, got {s}")));
        }
        let nu = s - 1.0;
        let series = LegendreQSeries::new(nu, SERIES_SWITCH)?;
        let cut = self.radius - ESTIMATE_WINDOW;
        let mut inner = C64::new(0.0, 0.0);
        let mut outer = C64::new(0.0, 0.0);
        // Sum from long to short so small terms accumulate first.
        for g in self.groups.iter().rev() {
            let z = g.length.cosh();
            let q = if z >= SERIES_SWITCH { series.eval(z) } else { legendre_q(nu, g.length)? };
            let term = q * g.multiplicity as f64;
            if g.length > cut {
                outer += term;
            } else {
                inner += term;
            }
        }
        let f = -1.0 / (2.0 * PI);
        let value = (inner + outer) * f;
        let corr_r = self.main_term_tail(s, self.radius)?;
        let corr_cut = if cut > 1.0 { self.main_term_tail(s, cut)? } else { corr_r };
        let corrected_error = (outer * f + corr_r - corr_cut).norm();
        Ok(OrbitSumValue {
            value,
            tail_bound: self.tail_bound(s.re),
            tail_correction: corr_r,
            corrected_error,
        })
    }

    /// `∫_R^∞ G_s(l) 6 sinh l dl = -(3/π)(Q_{s-2}(Z) - Q_s(Z))/(2s-1)`, `Z = cosh R`.
    pub fn main_term_tail(&self, s: C64, r: f64) -> Result<C64> {
        let z = r.cosh();
        let qm = LegendreQSeries::new(s - 2.0, z)?.eval(z);
        let qp = LegendreQSeries::new(s, z)?.eval(z);
        Ok((qm - qp) / (s * 2.0 - 1.0) * (-3.0 / PI))
    }

    /// Bound on `Σ_{l > R} |G_s(l)|` for `Re s = sigma > 1`.
    pub fn tail_bound(&self, sigma: f64) -> f64 {
        let r = self.radius;
        if r <= 0.0 || sigma <= 1.0 {
            return f64::INFINITY;
        }
        let c = (PI / (sigma - 0.5)).sqrt() / (2.0 * PI);
        let f_r = c * (-(sigma - 0.5) * r).exp() / (2.0 * r.sinh()).sqrt();
        let boundary = (self.kappa * (r.cosh() - 1.0) - self.count_at_radius as f64).max(0.0) * f_r;
        let integral = c * self.kappa * (-(sigma - 1.0) * r).exp() / (2.0 * (sigma - 1.0));
        boundary + integral
    }
}

/// Scatterer data: reduced position, coupling, stabilizer order and `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScattererConfig {
    pub z0: Point,
    pub alpha: Coupling,
    pub m: usize,
    pub t: C64,
}

/// Which representation of `S` a handle evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralMode {
    OrbitSum,
    Reflected,
    SpectralExpansion,
    Synthetic,
}

/// Evaluator for the spectral function built from an orbit table.
#[derive(Debug, Clone)]
pub struct SpectralFunctionHandle {
    pub config: ScattererConfig,
    pub mode: SpectralMode,
    pub table: Arc<OrbitTable>,
    pub lengths: Arc<LengthSpectrum>,
    pub beta: f64,
    pub c0: f64,
    /// Estimated error of `c0` from the orbit-sum truncation.
    pub c0_error: f64,
    /// `m ψ(t) + Σ G_t` (tail-corrected).
    pub regular_at_t: C64,
}

impl SpectralFunctionHandle {
    /// Build a handle: reduce `z0`, enumerate orbits to `radius`, compute `c0`, `β`.
    pub fn new(z0: &Point, alpha: Coupling, radius: f64) -> Result<Self> {
        let (zr, _) = reduce_fund_domain(z0);
        let table = enumerate_orbits(&zr, radius)?;
        Self::from_table(Arc::new(table), alpha)
    }

    pub fn from_table(table: Arc<OrbitTable>, alpha: Coupling) -> Result<Self> {
        let lengths = Arc::new(LengthSpectrum::from_table(&table));
        let t = t_parameter();
        let m = table.stabilizer_order;
        let gs = lengths.green_sum(t)?;
        let regular_at_t = psi_scaled(t, 0)? * m as f64 + gs.corrected();
        let c0 = regular_at_t.re;
        let beta = beta_of_alpha(alpha, c0)?;
        let config = ScattererConfig { z0: table.z0, alpha, m, t };
        Ok(SpectralFunctionHandle {
            config,
            mode: SpectralMode::OrbitSum,
            table,
            lengths,
            beta,
            c0,
            c0_error: gs.corrected_error,
            regular_at_t,
        })
    }

    /// Same orbit data with a different coupling.
    pub fn with_alpha(&self, alpha: Coupling) -> Result<Self> {
        let beta = beta_of_alpha(alpha, self.c0)?;
        let mut h = self.clone();
        h.config.alpha = alpha;
        h.beta = beta;
        Ok(h)
    }

    pub fn inv_beta(&self) -> f64 {
        1.0 / self.beta
    }

    /// `S(s)` for `Re s > 1`; `value` is the raw truncated sum.
    pub fn s_alpha_orbit(&self, s: C64) -> Result<OrbitSumValue> {
        if s.re <= 1.0 {
            return Err(Error::Mode(format!("orbit-sum mode needs Re s > 1, got {s}")));
        }
        let g = self.lengths.green_sum(s)?;
        let exact = psi_scaled(s, 0)? * self.config.m as f64 + self.inv_beta();
        Ok(OrbitSumValue { value: exact + g.value, ..g })
    }

    /// Tail-corrected `S(s)` for `Re s > 1`.
    pub fn s_alpha(&self, s: C64) -> Result<C64> {
        Ok(self.s_alpha_orbit(s)?.corrected())
    }

    /// `S(1-s)` for `Re s > 1` via `S(1-s) = S(s) - E(z0,s)E(z0,1-s)/(1-2s)`.
    pub fn s_alpha_reflected(&self, s: C64) -> Result<C64> {
        let direct = self.s_alpha(s)?;
        Ok(direct - reflection_term(&self.config.z0, s)?)
    }

    /// `cot(φ/2) = -α Im[m ψ(t) + Σ G_t]`; returns `φ ∈ (-π, π)`.
    pub fn coupling_phase(&self) -> f64 {
        let im = self.regular_at_t.im;
        match self.config.alpha {
            Coupling::Infinite => 0.0,
            Coupling::Finite(a) => {
                let cot = -a * im;
                2.0 * (1.0 / cot).atan()
            }
        }
    }
}

/// `E(z0,s) E(z0,1-s) / (1-2s)`.
pub fn reflection_term(z0: &Point, s: C64) -> Result<C64> {
    let one = C64::new(1.0, 0.0);
    let e1 = crate::eisenstein::eisenstein(z0, s)?;
    let e2 = crate::eisenstein::eisenstein(z0, one - s)?;
    Ok(e1 * e2 / (one - s * 2.0))
}

/// `c0 = m Re ψ(t) + Re Σ G_t` from an orbit table.
pub fn c0_const(table: &OrbitTable) -> Result<f64> {
    let lengths = LengthSpectrum::from_table(table);
    let t = t_parameter();
    let g = lengths.green_sum(t)?;
    Ok(table.stabilizer_order as f64 * psi_scaled(t, 0)?.re + g.corrected().re)
}

/// `Σ_γ G_s(d(z, γw))` over all `γ` with displacement `<= radius`.
pub fn automorphic_green(s: C64, z: &Point, w: &Point, radius: f64) -> Result<OrbitSumValue> {
    if s.re <= 1.0 {
        return Err(Error::Mode(format!("automorphic Green sum needs Re s > 1, got {s}")));
    }
    let entries = enumerate_pairs(z, w, radius, DEFAULT_CAP)?;
    if entries.first().map_or(false, |e| e.length < 1e-9) {
        return Err(Error::domain("automorphic_green", "z lies on the orbit of w"));
    }
    let mut groups: Vec<LengthGroup> = Vec::new();
    for e in &entries {
        match groups.last_mut() {
            Some(g) if (e.length - g.length).abs() <= 1e-12 * g.length.max(1.0) => g.multiplicity += 1,
            _ => groups.push(LengthGroup { length: e.length, multiplicity: 1 }),
        }
    }
    let spec = LengthSpectrum::from_groups(groups, radius, 0);
    spec.green_sum(s)
}

/// Cosets of `Γ_∞ \ Γ` with `Im γw >= eps`, as the points `γw`.
pub fn coset_images(w: &Point, eps: f64) -> Vec<Point> {
    let mut out = vec![*w];
    let bound = w.y / eps;
    let c_max = (1.0 / (w.y * eps).sqrt()).floor() as i64;
    for c in 1..=c_max {
        let cf = c as f64;
        let rad2 = bound - cf * cf * w.y * w.y;
        if rad2 < 0.0 {
            continue;
        }
        let rad = rad2.sqrt();
        let lo = (-cf * w.x - rad).ceil() as i64;
        let hi = (-cf * w.x + rad).floor() as i64;
        for d in lo..=hi {
            if gcd(c, d) != 1 {
                continue;
            }
            let a = modinv(d, c);
            let b = (a * d - 1) / c;
            let g = crate::geometry::GroupElement { a, b, c, d };
            out.push(mobius_apply(&g, w));
        }
    }
    out
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `d` modulo `c` in `[0, c)`; `c >= 1`.
fn modinv(d: i64, c: i64) -> i64 {
    if c == 1 {
        return 0;
    }
    let (mut r0, mut r1) = (c, d.rem_euclid(c));
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    t0.rem_euclid(c)
}

/// `G^Γ_s(z, w)` from its Fourier expansion in the cusp, valid for `Im z > max Im γw`.
///
/// `y^{1-s}E(w,s)/(1-2s) - Σ_{k≠0} √y K_ν(2π|k|y) e(kx) Σ_γ √(Im γw) I_ν(2π|k| Im γw) e(-k Re γw)`
/// with `ν = s - 1/2`; cosets with `Im γw < eps` are dropped and estimated.
pub fn automorphic_green_cusp(s: C64, z: &Point, w: &Point, eps: f64) -> Result<OrbitSumValue> {
    if s.re <= 1.0 {
        return Err(Error::Mode(format!("cusp expansion needs Re s > 1, got {s}")));
    }
    let (wr, _) = reduce_fund_domain(w);
    if z.y <= wr.y {
        return Err(Error::domain("automorphic_green_cusp", "z must lie above the orbit of w"));
    }
    let one = C64::new(1.0, 0.0);
    let e_w = crate::eisenstein::eisenstein(&wr, s)?;
    let mut value = C64::new(z.y, 0.0).powc(one - s) * e_w / (one - s * 2.0);
    let images = coset_images(&wr, eps);
    let nu = s - 0.5;
    let mut first = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let kz = crate::special::kbessel(nu, 2.0 * PI * kf * z.y)? * z.y.sqrt();
        if kz.norm() == 0.0 {
            break;
        }
        let mut pk_plus = C64::new(0.0, 0.0);
        let mut pk_minus = C64::new(0.0, 0.0);
        for p in &images {
            let amp = crate::special::ibessel(nu, 2.0 * PI * kf * p.y)? * p.y.sqrt();
            let ph = C64::from_polar(1.0, -2.0 * PI * kf * p.x);
            pk_plus += amp * ph;
            pk_minus += amp * ph.conj();
        }
        let ex = C64::from_polar(1.0, 2.0 * PI * kf * z.x);
        let term = kz * (ex * pk_plus + ex.conj() * pk_minus);
        value -= term;
        if k == 1 {
            first = term.norm();
        }
        if term.norm() < 1e-17 * value.norm() {
            break;
        }
    }
    // Dropped cosets: Σ_{Im γw < eps} (Im γw)^σ <~ (3/π) σ/(σ-1) eps^{σ-1}, relative to the k = 1 term.
    let sig = s.re;
    let dropped = 3.0 / PI * sig / (sig - 1.0) * eps.powf(sig - 1.0);
    let scale = first / images.iter().map(|p| p.y.powf(sig)).sum::<f64>().max(1e-300);
    Ok(OrbitSumValue {
        value,
        tail_bound: f64::INFINITY,
        tail_correction: C64::new(0.0, 0.0),
        corrected_error: dropped * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_root() {
        let t = t_parameter();
        assert!((t * (c64(1.0, 0.0) - t) - c64(0.0, 1.0)).norm() < 1e-14);
        assert!(t.re > 1.0 && t.im < 0.0);
    }

    #[test]
    fn beta_map() {
        assert_eq!(beta_of_alpha(Coupling::Infinite, 0.5).unwrap(), -2.0);
        let b = beta_of_alpha(Coupling::Finite(0.7), 0.3).unwrap();
        assert!((1.0 / b - 1.0 / 0.7 + 0.3).abs() < 1e-14);
        assert!(beta_of_alpha(Coupling::Finite(0.0), 0.3).is_err());
        assert!(matches!(beta_of_alpha(Coupling::Finite(2.0), 0.5), Err(Error::SingularCoupling(_))));
    }

    #[test]
    fn free_green_passthrough() {
        let s = c64(1.3, 0.4);
        let g = free_green(s, 2.0).unwrap();
        let q = legendre_q(s - 1.0, 2.0).unwrap();
        assert_eq!(g, q * (-1.0 / (2.0 * PI)));
        assert!(free_green(s, 0.0).is_err());
    }
}
