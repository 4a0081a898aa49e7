//! Maass cusp form data for the modular group and the spectral side of `S`.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::special::kbessel;
use crate::C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::Path;

pub const DATASET_VERSION: u32 = 1;
/// Normalisation tag: `a_1 = 1`, `factor` gives unit L² norm on the fundamental domain.
pub const NORMALIZATION_TAG: &str = "a1=1;l2-factor";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// `cos` for even forms, `sin` for odd forms.
    pub fn cs(self, t: f64) -> f64 {
        match self {
            Parity::Even => t.cos(),
            Parity::Odd => t.sin(),
        }
    }
}

/// One cusp form: `φ(x+iy) = factor Σ a_n √y K_{ir}(2πny) cs(2πnx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaassForm {
    pub r: f64,
    pub parity: Parity,
    pub coeffs: Vec<f64>,
    pub normalization: f64,
}

/// The constant eigenfunction `1/√Vol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualForm {
    pub lambda: f64,
    pub value: f64,
}

impl ResidualForm {
    pub fn modular() -> Self {
        ResidualForm { lambda: 0.0, value: (3.0 / PI).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaassDataset {
    pub version: u32,
    pub source: String,
    pub normalization_tag: String,
    pub residual: ResidualForm,
    pub forms: Vec<MaassForm>,
    /// SHA-256 of the file contents; filled in by the loader, never serialised.
    #[serde(skip)]
    pub digest: String,
}

impl MaassDataset {
    pub fn new(source: impl Into<String>, forms: Vec<MaassForm>) -> Self {
        MaassDataset {
            version: DATASET_VERSION,
            source: source.into(),
            normalization_tag: NORMALIZATION_TAG.into(),
            residual: ResidualForm::modular(),
            forms,
            digest: String::new(),
        }
    }

    /// Largest spectral parameter covered.
    pub fn r_max(&self) -> f64 {
        self.forms.last().map_or(0.0, |f| f.r)
    }

    /// True when only the residual form is present.
    pub fn is_degraded(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn validate(&self, min_coeffs: usize) -> Result<()> {
        if self.version != DATASET_VERSION {
            return Err(Error::Data(format!("unsupported dataset version {}", self.version)));
        }
        if self.normalization_tag != NORMALIZATION_TAG {
            return Err(Error::Data(format!("unknown normalization tag {:?}", self.normalization_tag)));
        }
        let res = ResidualForm::modular();
        if self.residual.lambda != 0.0 || (self.residual.value - res.value).abs() > 1e-12 {
            return Err(Error::Data("residual form must have lambda 0 and value 1/sqrt(vol)".into()));
        }
        let mut prev = 0.0;
        for (i, f) in self.forms.iter().enumerate() {
            if !(f.r > prev) || !f.r.is_finite() {
                return Err(Error::Data(format!("form {i}: r = {} not strictly increasing", f.r)));
            }
            prev = f.r;
            if f.coeffs.len() < min_coeffs {
                return Err(Error::Data(format!("form {i}: {} coefficients, need {min_coeffs}", f.coeffs.len())));
            }
            if f.coeffs[0] != 1.0 {
                return Err(Error::Data(format!("form {i}: a_1 = {} but tag requires 1", f.coeffs[0])));
            }
            if !(f.normalization > 0.0) || !f.normalization.is_finite() {
                return Err(Error::Data(format!("form {i}: bad normalization {}", f.normalization)));
            }
            if f.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Data(format!("form {i}: non-finite coefficient")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str, min_coeffs: usize) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        if raw.get("residual").is_none() {
            return Err(Error::Data("missing residual form".into()));
        }
        let mut ds: MaassDataset = serde_json::from_value(raw)?;
        ds.validate(min_coeffs)?;
        ds.digest = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Load and validate a dataset, requiring `min_coeffs` coefficients per form.
pub fn load_maass_dataset(path: &Path, min_coeffs: usize) -> Result<MaassDataset> {
    let text = std::fs::read_to_string(path)?;
    MaassDataset::from_json(&text, min_coeffs)
}

/// Cusp form value with a bound on the dropped Fourier tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaassValue {
    pub value: f64,
    pub truncation_bound: f64,
}

/// `Σ_{n>N} n^{1/4} e^{-2πny}`, from `|a_n| <= 2√n n^{1/4}` and `|K_{ir}(x)| <= √(π/2x) e^{-x}`.
fn maass_tail(n0: usize, y: f64) -> f64 {
    let q = (-2.0 * PI * y).exp();
    let mut total = 0.0;
    let mut n = n0 + 1;
    loop {
        let t = (n as f64).powf(0.25) * q.powi(n as i32);
        total += t;
        if t < 1e-20 * total.max(1e-300) || n > n0 + 10_000 {
            break;
        }
        n += 1;
    }
    total
}

/// Value of an L²-normalised form from its Fourier series at `z` as given.
/// Accuracy is best for reduced `z`; the bound reports the dropped tail.
pub fn maass_value_at(form: &MaassForm, z: &Point) -> MaassValue {
    let w = *z;
    let mut sum = 0.0;
    for (i, a) in form.coeffs.iter().enumerate() {
        let n = (i + 1) as f64;
        let k = kbessel(C64::new(0.0, form.r), 2.0 * PI * n * w.y).map(|k| k.re).unwrap_or(0.0);
        sum += a * k * form.parity.cs(2.0 * PI * n * w.x);
    }
    MaassValue {
        value: form.normalization * w.y.sqrt() * sum,
        truncation_bound: form.normalization * maass_tail(form.coeffs.len(), w.y),
    }
}

/// As [`maass_value_at`] but fails when the truncation bound exceeds `tol`.
pub fn maass_value_checked(form: &MaassForm, z: &Point, tol: f64) -> Result<f64> {
    let v = maass_value_at(form, z);
    if v.truncation_bound > tol {
        return Err(Error::Tolerance { requested: tol, achieved: v.truncation_bound });
    }
    Ok(v.value)
}

/// Spectral-expansion value of `S` near the critical line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub value: C64,
    pub discrete_truncation_error: f64,
    pub continuous_truncation_error: f64,
}

/// Quadrature settings for the Eisenstein integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalParams {
    /// Cutoff of the stored `|E|²` grid.
    pub r_cut: f64,
    pub panel_width: f64,
    pub order: usize,
    /// Minimum distance to a tabulated `ρ_j`.
    pub pole_margin: f64,
}

impl Default for CriticalParams {
    fn default() -> Self {
        CriticalParams { r_cut: 60.0, panel_width: 0.25, order: 16, pole_margin: 0.05 }
    }
}

/// `S(1/2 + iρ)` from the regularised spectral expansion at a fixed scatterer.
#[derive(Debug, Clone)]
pub struct CriticalEvaluator {
    pub z0: Point,
    pub inv_alpha: f64,
    pub m: usize,
    pub params: CriticalParams,
    /// `(ρ_j, |φ_j(z0)|²)` for the cusp forms.
    pub weights: Vec<(f64, f64)>,
    /// Spectral cutoff used for the Weyl-law tail.
    pub weyl_cut: f64,
    /// `(r, w, |E(z0, 1/2+ir)|²)` on the quadrature grid.
    nodes: Vec<(f64, f64, f64)>,
    /// Mean of `|E|²` over the last stretch of the grid.
    tail_level: f64,
    pub dataset_digest: String,
}

/// `ρ_t² = -1/4 + i` for the deficiency parameter `t`.
pub fn rho_t_sq() -> C64 {
    C64::new(-0.25, 1.0)
}

fn eis_sq(z0: &Point, r: f64) -> Result<f64> {
    Ok(crate::eisenstein::eisenstein(z0, C64::new(0.5, r))?.norm_sqr())
}

impl CriticalEvaluator {
    pub fn new(h: &crate::green::SpectralFunctionHandle, ds: &MaassDataset, params: CriticalParams) -> Result<Self> {
        let z0 = h.config.z0;
        let mut weights = Vec::with_capacity(ds.forms.len());
        for f in &ds.forms {
            let v = maass_value_at(f, &z0);
            weights.push((f.r, v.value * v.value));
        }
        let panels = (params.r_cut / params.panel_width).round() as usize;
        let grid = crate::quad::composite_nodes(0.0, params.r_cut, panels, params.order);
        let nodes = grid
            .into_iter()
            .map(|(r, w)| Ok((r, w, eis_sq(&z0, r)?)))
            .collect::<Result<Vec<_>>>()?;
        let last: Vec<&(f64, f64, f64)> = nodes.iter().filter(|n| n.0 > params.r_cut - 10.0).collect();
        let tail_level = last.iter().map(|n| n.1 * n.2).sum::<f64>() / last.iter().map(|n| n.1).sum::<f64>();
        let r_max = ds.r_max();
        let weyl_cut = if r_max > 0.0 { r_max + 3.0 / r_max } else { 0.0 };
        Ok(CriticalEvaluator {
            z0,
            inv_alpha: h.config.alpha.inverse(),
            m: h.config.m,
            params,
            weights,
            weyl_cut,
            nodes,
            tail_level,
            dataset_digest: ds.digest.clone(),
        })
    }

    /// Same data with a different coupling.
    pub fn with_inv_alpha(&self, inv_alpha: f64) -> Self {
        CriticalEvaluator { inv_alpha, ..self.clone() }
    }

    /// Regularised kernel `1/(ρ² - x) - Re 1/(ρ_t² - x)` at `x = r²`.
    fn kernel(rho2: C64, x: f64) -> C64 {
        (rho2 - x).inv() - (rho_t_sq() - x).inv().re
    }

    /// `S(1/2 + iρ)`; `Im ρ > 0` is handled through the functional equation.
    pub fn s_alpha_critical(&self, rho: C64) -> Result<CriticalValue> {
        if rho.im > 0.0 {
            let s = C64::new(0.5, 0.0) + C64::new(0.0, 1.0) * (-rho);
            let direct = self.s_alpha_critical(-rho)?;
            let refl = crate::green::reflection_term(&self.z0, s)?;
            return Ok(CriticalValue { value: direct.value - refl, ..direct });
        }
        for &(rj, _) in self.weights.iter().filter(|(_, w)| *w > 1e-30) {
            let gap = (rho - rj).norm().min((rho + rj).norm());
            if gap < self.params.pole_margin {
                return Err(Error::PoleProximity { pole: rj, margin: gap });
            }
        }
        let rho2 = rho * rho;
        let mut value = C64::new(self.inv_alpha, 0.0);
        value += (rho2 + 0.25).inv() * (3.0 / PI);
        for &(rj, w) in self.weights.iter().rev() {
            value += Self::kernel(rho2, rj * rj) * w;
        }
        let weyl = if self.weyl_cut > 0.0 {
            let r2 = self.weyl_cut * self.weyl_cut;
            let arg = C64::new(r2, 0.0) - rho2;
            // Real ρ is the limit from Im ρ < 0.
            let lg = if rho.im == 0.0 && arg.re < 0.0 { C64::new((-arg.re).ln(), PI * rho.re.signum()) } else { arg.ln() };
            (lg - (C64::new(r2, 0.0) - rho_t_sq()).ln().re) * (self.m as f64 / (4.0 * PI))
        } else {
            C64::new(0.0, 0.0)
        };
        value += weyl;
        let (cont, cont_err) = self.continuous(rho)?;
        value += cont;
        let dk = Self::kernel(rho2, self.weyl_cut * self.weyl_cut).norm();
        let disc_err = 0.25 * weyl.norm() + 3.0 * self.m as f64 / PI * dk * self.weyl_cut.max(1.0);
        Ok(CriticalValue { value, discrete_truncation_error: disc_err, continuous_truncation_error: cont_err })
    }

    /// `(1/2π)∫_0^∞ |E|² kernel dr` with the value at `Re ρ` subtracted and restored exactly.
    fn continuous(&self, rho: C64) -> Result<(C64, f64)> {
        let a = rho.re.abs();
        let fa = if a > 0.0 { eis_sq(&self.z0, a)? } else { 0.0 };
        let rho2 = rho * rho;
        // ∫_0^∞ dr/(ρ² - r²) = πi/(2ρ) for Im ρ < 0, taken as the limit on the real axis.
        let i = C64::new(0.0, 1.0);
        let rho_eff = if rho.im == 0.0 { C64::new(rho.re, -0.0) } else { rho };
        let rt = -(i * (crate::green::t_parameter() - 0.5));
        let exact = if fa > 0.0 {
            (i * PI / (rho_eff * 2.0) - (i * PI / (rt * 2.0)).re) * fa
        } else {
            C64::new(0.0, 0.0)
        };
        let mut acc = C64::new(0.0, 0.0);
        for &(r, w, f) in &self.nodes {
            let num = f - fa;
            let k = Self::kernel(rho2, r * r);
            acc += k * (num * w);
        }
        // Tail beyond the grid with |E|² replaced by its mean level.
        let rc = self.params.r_cut;
        let tail_int = |q: C64| -> C64 { -((C64::new(rc, 0.0) + q) / (C64::new(rc, 0.0) - q)).ln() / (q * 2.0) };
        let tail_k = tail_int(rho_eff) - tail_int(rt).re;
        let tail = tail_k * (self.tail_level - fa);
        acc += tail;
        let err = 0.5 * tail.norm() + 1e-10;
        Ok(((exact + acc) / (2.0 * PI), err / (2.0 * PI)))
    }
}

/// Orbit-sum handle plus an optional spectral-expansion evaluator, dispatching on `Re s`.
#[derive(Debug, Clone)]
pub struct SpectralFunction {
    pub handle: crate::green::SpectralFunctionHandle,
    pub critical: Option<CriticalEvaluator>,
}

/// Orbit sums are used for `Re s >= ORBIT_MIN_RE`, reflected orbit sums below `1 - ORBIT_MIN_RE`.
pub const ORBIT_MIN_RE: f64 = 1.1;

impl SpectralFunction {
    pub fn new(handle: crate::green::SpectralFunctionHandle, critical: Option<CriticalEvaluator>) -> Self {
        SpectralFunction { handle, critical }
    }

    pub fn eval(&self, s: C64) -> Result<C64> {
        if s.re >= ORBIT_MIN_RE {
            return self.handle.s_alpha(s);
        }
        if s.re <= 1.0 - ORBIT_MIN_RE {
            return self.handle.s_alpha_reflected(C64::new(1.0, 0.0) - s);
        }
        let ev = self
            .critical
            .as_ref()
            .ok_or_else(|| Error::Mode(format!("S at {s} needs the spectral expansion, but no dataset is loaded")))?;
        let rho = C64::new(0.0, -1.0) * (s - 0.5);
        Ok(ev.s_alpha_critical(rho)?.value)
    }

    /// `θ_α(s) = S(1-s)/S(s)` and `φ_α(s) = φ(s) θ_α(s)`.
    pub fn theta_phi_alpha(&self, s: C64) -> Result<(C64, C64)> {
        let direct = self.eval(s)?;
        if direct.norm() < 1e-14 {
            return Err(Error::Division { func: "theta_phi_alpha", msg: format!("S vanishes at {s}") });
        }
        let theta = self.eval(C64::new(1.0, 0.0) - s)? / direct;
        Ok((theta, crate::eisenstein::phi_scatter(s)? * theta))
    }

    /// `E^α(z,s) = E(z,s) - E(z0,s) G^Γ_s(z,z0) / S(s)` for `Re s > 1`.
    pub fn perturbed_eisenstein(&self, z: &Point, s: C64) -> Result<C64> {
        if s.re <= 1.0 {
            return Err(Error::Mode(format!("perturbed Eisenstein series needs Re s > 1, got {s}")));
        }
        let z0 = self.handle.config.z0;
        let (zr, _) = crate::geometry::reduce_fund_domain(z);
        if crate::geometry::hyp_distance(&zr, &z0) < 1e-9 {
            return Err(Error::domain("perturbed_eisenstein", "z is the scatterer position"));
        }
        let e = crate::eisenstein::eisenstein(&zr, s)?;
        let e0 = crate::eisenstein::eisenstein(&z0, s)?;
        if e0 == C64::new(0.0, 0.0) {
            return Ok(e);
        }
        let sa = self.handle.s_alpha(s)?;
        if sa.norm() < 1e-14 {
            return Err(Error::Division { func: "perturbed_eisenstein", msg: format!("S vanishes at {s}") });
        }
        let g = if zr.y >= z0.y + 0.25 {
            crate::green::automorphic_green_cusp(s, &zr, &z0, 1e-4)?.value
        } else {
            crate::green::automorphic_green(s, &zr, &z0, self.handle.table.radius.min(11.0))?.corrected()
        };
        Ok(e - e0 * g / sa)
    }
}

/// A real root of `S(1/2 + v)` with its sign-change bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallRoot {
    pub v: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
    /// False if bisection saw values larger than both bracket ends.
    pub monotone: bool,
}

/// Sign-change roots of a real function on `[lo, hi]` sampled at `grid + 1` points, bisected to `|f| < tol`.
pub fn find_real_roots<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, grid: usize, tol: f64) -> Result<Vec<SmallRoot>> {
    if !(hi > lo) || grid == 0 {
        return Err(Error::domain("find_real_roots", "empty range or grid"));
    }
    let step = (hi - lo) / grid as f64;
    let mut roots = Vec::new();
    let mut a = lo;
    let mut fa = f(a)?;
    for i in 1..=grid {
        let b = lo + step * i as f64;
        let fb = f(b)?;
        if fa == 0.0 {
            roots.push(SmallRoot { v: a, bracket: (a, a), residual: 0.0, monotone: true });
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            let cap = fa.abs().max(fb.abs());
            let mut monotone = true;
            let (mut xm, mut fm);
            loop {
                xm = 0.5 * (x0 + x1);
                fm = f(xm)?;
                if fm.abs() > cap {
                    monotone = false;
                }
                if fm.abs() < tol || x1 - x0 <= 4.0 * f64::EPSILON * xm.abs().max(1.0) {
                    break;
                }
                if fm.signum() == f0.signum() {
                    x0 = xm;
                    f0 = fm;
                } else {
                    x1 = xm;
                }
            }
            roots.push(SmallRoot { v: xm, bracket: (x0, x1), residual: fm.abs(), monotone });
        }
        a = b;
        fa = fb;
    }
    Ok(roots)
}

/// Zeros of `S(1/2+v)` for `v` in `(lo, hi)`, `lo > 1/2`, from the orbit sum.
pub fn find_small_eigenvalues(h: &crate::green::SpectralFunctionHandle, lo: f64, hi: f64, grid: usize) -> Result<Vec<SmallRoot>> {
    if lo <= 0.5 {
        return Err(Error::Mode(format!("orbit sums need v > 1/2, got {lo}")));
    }
    find_real_roots(|v| Ok(h.s_alpha(C64::new(0.5 + v, 0.0))?.re), lo, hi, grid, 1e-10)
}

/// Points `r` where `|E(z0,1/2+ir)| < e_tol` and `|Re S(1/2+ir)| < re_tol` on a uniform grid.
pub fn critical_zero_scan(ev: &CriticalEvaluator, lo: f64, hi: f64, points: usize, e_tol: f64, re_tol: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..=points {
        let r = lo + (hi - lo) * i as f64 / points.max(1) as f64;
        if r <= 0.0 {
            continue;
        }
        let e = crate::eisenstein::eisenstein(&ev.z0, C64::new(0.5, r))?.norm();
        if !(e < e_tol) {
            continue;
        }
        match ev.s_alpha_critical(C64::new(r, 0.0)) {
            Ok(v) if v.value.re.abs() < re_tol => out.push(r),
            Ok(_) | Err(Error::PoleProximity { .. }) => {}
            Err(err) => return Err(err),
        }
    }
    Ok(out)
}
