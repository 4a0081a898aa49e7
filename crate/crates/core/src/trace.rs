//! Both sides of the trace identity and the geometric expansion of the log-derivative term.

use crate::error::{Error, Result};
use crate::green::{LengthSpectrum, SpectralFunctionHandle};
use crate::maass::{find_real_roots, find_small_eigenvalues, CriticalEvaluator, MaassDataset};
use crate::orbits::LengthGroup;
use crate::quad::gl_cached;
use crate::special::psi_scaled;
use crate::transform::{find_nu, g_transform_grid, scattering_term, smooth_term, LineQuad, NuChoice, TestFunction};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Acceptance threshold for `|β ΣG| / |1 + mβψ|` on the contour.
pub const SIGMA_RATIO: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaChoice {
    pub sigma: f64,
    /// Largest sampled ratio on the accepted line.
    pub margin: f64,
    /// Every tested `(σ, ratio)`.
    pub tested: Vec<(f64, f64)>,
}

impl LengthSpectrum {
    /// Lengths `<= l` only.
    pub fn truncated(&self, l: f64, base: usize) -> LengthSpectrum {
        let groups: Vec<LengthGroup> = self.groups.iter().filter(|g| g.length <= l).cloned().collect();
        LengthSpectrum::from_groups(groups, l.min(self.radius), base)
    }
}

/// `max |ΣG_s| / |1/β + mψ(s)|` over `s = 1/2 + σ + ix`, `0 <= x <= x_max`.
pub fn sample_ratio(handle: &SpectralFunctionHandle, sigma: f64, x_max: f64, samples: usize) -> Result<f64> {
    let m = handle.config.m as f64;
    let mut worst: f64 = 0.0;
    for i in 0..=samples {
        let s = C64::new(0.5 + sigma, x_max * i as f64 / samples as f64);
        let g = handle.lengths.green_sum(s)?.value;
        let d = psi_scaled(s, 0)? * m + handle.inv_beta();
        worst = worst.max(g.norm() / d.norm());
    }
    Ok(worst)
}

/// Smallest `σ` on the ladder `1, 2, 4, 8, 16` whose sampled ratio is at most [`SIGMA_RATIO`].
pub fn choose_sigma(handle: &SpectralFunctionHandle) -> Result<SigmaChoice> {
    if handle.beta == 0.0 {
        return Ok(SigmaChoice { sigma: 1.0, margin: 0.0, tested: vec![(1.0, 0.0)] });
    }
    let mut tested = Vec::new();
    for sigma in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let r = sample_ratio(handle, sigma, 40.0, 200)?;
        tested.push((sigma, r));
        if r <= SIGMA_RATIO {
            return Ok(SigmaChoice { sigma, margin: r, tested });
        }
    }
    Err(Error::Exhausted(16.0))
}

/// Which orbit sum enters `S` on the contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesMode {
    /// Raw sum over the given length set.
    Truncated,
    /// Raw sum plus the main-term tail correction.
    Corrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSide {
    pub value: f64,
    /// Should vanish by symmetry.
    pub imag: f64,
    pub sigma: f64,
    pub nodes: usize,
    /// Difference against a lower-order rule on the same panels.
    pub quadrature_error: f64,
    /// Effect of the orbit-sum tail on the integral (estimate).
    pub series_error: f64,
}

fn s_on_line(handle: &SpectralFunctionHandle, lengths: &LengthSpectrum, s: C64, mode: SeriesMode) -> Result<(C64, f64)> {
    let g = lengths.green_sum(s)?;
    let base = psi_scaled(s, 0)? * handle.config.m as f64 + handle.inv_beta();
    Ok(match mode {
        SeriesMode::Truncated => (base + g.value, 0.0),
        SeriesMode::Corrected => (base + g.corrected(), g.corrected_error),
    })
}

fn log_line(h: &TestFunction, handle: &SpectralFunctionHandle, lengths: &LengthSpectrum, sigma: f64, q: &LineQuad, mode: SeriesMode) -> Result<(C64, f64, usize)> {
    let x_max = h.cutoff(sigma, q.tail_tol);
    let nodes = q.nodes(-x_max, x_max);
    let s_of = |x: f64| C64::new(0.5 + sigma, x);
    let (s0, _) = s_on_line(handle, lengths, s_of(0.0), mode)?;
    let flip = s0.re < 0.0;
    // Walk outward from x = 0 in both directions, unwrapping the argument.
    let mid = nodes.partition_point(|(x, _)| *x < 0.0);
    let mut acc = C64::new(0.0, 0.0);
    let mut series = 0.0;
    for dir in [1i64, -1] {
        let mut prev = 0.0;
        let mut idx = if dir == 1 { mid as i64 } else { mid as i64 - 1 };
        while idx >= 0 && (idx as usize) < nodes.len() {
            let (x, w) = nodes[idx as usize];
            let (v, err) = s_on_line(handle, lengths, s_of(x), mode)?;
            let v = if flip { -v } else { v };
            let mut arg = v.im.atan2(v.re);
            arg += 2.0 * PI * ((prev - arg) / (2.0 * PI)).round();
            if (arg - prev).abs() > 0.5 * PI {
                return Err(Error::Contract(format!("log S: argument jump {:.3} at x = {x}; refine the rule", arg - prev)));
            }
            prev = arg;
            let rho = C64::new(x, -sigma);
            let dh = h.dh(rho);
            acc += dh * C64::new(v.norm().ln(), arg) * w;
            series += dh.norm() * err / v.norm() * w;
            idx += dir;
        }
    }
    Ok((acc / C64::new(0.0, -2.0 * PI), series / (2.0 * PI), nodes.len()))
}

/// `-(1/2πi)∫_{Im ρ = -σ} h'(ρ) log S(1/2 + iρ) dρ` with the argument tracked from `ρ = -iσ`.
pub fn log_derivative_side(h: &TestFunction, handle: &SpectralFunctionHandle, lengths: &LengthSpectrum, sigma: f64, q: &LineQuad, mode: SeriesMode) -> Result<LogSide> {
    if sigma <= 0.5 {
        return Err(Error::domain("log_derivative_side", format!("sigma = {sigma} must exceed 1/2")));
    }
    let (v, series, n) = log_line(h, handle, lengths, sigma, q, mode)?;
    let coarse = LineQuad { order: (q.order * 2 / 3).max(4), ..*q };
    let (vc, _, _) = log_line(h, handle, lengths, sigma, &coarse, mode)?;
    Ok(LogSide { value: v.re, imag: v.im, sigma, nodes: n, quadrature_error: (v - vc).norm(), series_error: series })
}

/// Uniform grid on `[0, t_max]` carrying product-integration weights for
/// `(Kf)(t) = ∫_0^∞ W(τ) f(t+τ) dτ`, `W(τ) = Σ mult / sqrt(cosh τ - cosh l)`.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub dt: f64,
    pub n: usize,
    pub weights: Vec<f64>,
}

const NEAR_CELLS: usize = 4;

fn lagrange_coeffs(xs: [f64; 4]) -> [[f64; 4]; 4] {
    // Monomial coefficients of each Lagrange basis polynomial.
    let mut out = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut poly = vec![1.0];
        let mut denom = 1.0;
        for (m, &xm) in xs.iter().enumerate() {
            if m == j {
                continue;
            }
            let mut next = vec![0.0; poly.len() + 1];
            for (p, c) in poly.iter().enumerate() {
                next[p + 1] += c;
                next[p] -= c * xm;
            }
            poly = next;
            denom *= xs[j] - xm;
        }
        for p in 0..4 {
            out[j][p] = poly[p] / denom;
        }
    }
    out
}

impl KernelGrid {
    pub fn new(lengths: &[LengthGroup], dt: f64, t_max: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_max > 4.0 * dt) {
            return Err(Error::domain("KernelGrid", "need dt > 0 and t_max > 4 dt"));
        }
        let n = (t_max / dt).ceil() as usize;
        let cells = n;
        // moments[c][p] = ∫_cell W(τ) x^p dτ, x = (τ - τ_c)/dt.
        let mut moments = vec![[0.0f64; 4]; cells];
        let (gx, gw) = gl_cached(10);
        let mut sorted: Vec<&LengthGroup> = lengths.iter().filter(|g| g.length < t_max).collect();
        sorted.sort_by(|a, b| a.length.total_cmp(&b.length));
        let cosh_l: Vec<f64> = sorted.iter().map(|g| g.length.cosh()).collect();
        let cell_of = |l: f64| (l / dt).floor() as usize;
        // Far part: lengths at least NEAR_CELLS cells below the cell.
        let mut far = 0usize;
        for c in 0..cells {
            while far < sorted.len() && cell_of(sorted[far].length) + NEAR_CELLS <= c {
                far += 1;
            }
            if far == 0 {
                continue;
            }
            let t0 = c as f64 * dt;
            for (xi, wi) in gx.iter().zip(gw.iter()) {
                let x = 0.5 * (xi + 1.0);
                let tau = t0 + x * dt;
                let ct = tau.cosh();
                let mut w = 0.0;
                for j in (0..far).rev() {
                    w += sorted[j].multiplicity as f64 / (ct - cosh_l[j]).sqrt();
                }
                let wt = 0.5 * wi * dt * w;
                let mut xp = 1.0;
                for p in 0..4 {
                    moments[c][p] += wt * xp;
                    xp *= x;
                }
            }
        }
        // Near part: substitute τ = l + u² to absorb the inverse square root.
        for g in &sorted {
            let l = g.length;
            let cl = cell_of(l);
            for c in cl..(cl + NEAR_CELLS).min(cells) {
                let t0 = c as f64 * dt;
                let lo = (t0.max(l) - l).sqrt();
                let hi = (t0 + dt - l).sqrt();
                if hi <= lo {
                    continue;
                }
                for (xi, wi) in gx.iter().zip(gw.iter()) {
                    let u = lo + 0.5 * (xi + 1.0) * (hi - lo);
                    let tau = l + u * u;
                    let d = 2.0 * (0.5 * (tau + l)).sinh() * (0.5 * u * u).sinh();
                    let f = if u == 0.0 { 2.0 / l.sinh().sqrt() } else { 2.0 * u / d.sqrt() };
                    let wt = 0.5 * wi * (hi - lo) * f * g.multiplicity as f64;
                    let x = (tau - t0) / dt;
                    let mut xp = 1.0;
                    for p in 0..4 {
                        moments[c][p] += wt * xp;
                        xp *= x;
                    }
                }
            }
        }
        let first = lagrange_coeffs([0.0, 1.0, 2.0, 3.0]);
        let inner = lagrange_coeffs([-1.0, 0.0, 1.0, 2.0]);
        let mut weights = vec![0.0; cells + 3];
        for (c, mo) in moments.iter().enumerate() {
            let (coef, start) = if c == 0 { (&first, 0) } else { (&inner, c - 1) };
            for j in 0..4 {
                weights[start + j] += (0..4).map(|p| coef[j][p] * mo[p]).sum::<f64>();
            }
        }
        Ok(KernelGrid { dt, n, weights })
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.n).map(|i| i as f64 * self.dt).collect()
    }

    /// `(Kf)_i = Σ_j w_j f_{i+j}`, with `f = 0` past the grid.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..f.len())
            .map(|i| self.weights.iter().zip(&f[i..]).map(|(w, v)| w * v).sum())
            .collect()
    }
}

/// `-1/(2π sqrt 2)`, from `G_s(l) = c ∫_l^∞ e^{-(s-1/2)τ} / sqrt(cosh τ - cosh l) dτ`.
pub fn green_kernel_constant() -> f64 {
    -1.0 / (2.0 * PI * 2f64.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffractiveParams {
    pub kmax: u32,
    /// Longest orbit length kept.
    pub lmax: f64,
    pub dt: f64,
    pub t_max: f64,
}

impl DiffractiveParams {
    pub fn for_test_function(h: &TestFunction, kmax: u32, lmax: f64) -> Self {
        let t_max = 2.0 * 45f64.sqrt() / h.a;
        DiffractiveParams { kmax, lmax, dt: t_max / 1400.0, t_max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffractiveSide {
    pub smooth: f64,
    /// `β^k c^k (K^k g_{β,k})(0)` for `k = 1..K`.
    pub terms: Vec<f64>,
    pub total: f64,
    /// Geometric bound on the dropped `k > K` terms from the sampled ratio (estimate).
    pub k_tail_estimate: f64,
    /// Orbit lengths above `L` (estimate through the orbit-sum tail bound).
    pub l_tail_estimate: f64,
    pub nu: NuChoice,
    pub params: DiffractiveParams,
}

/// Smooth term plus the orbit expansion up to `k = K`, orbits up to length `L`.
pub fn diffractive_side(h: &TestFunction, handle: &SpectralFunctionHandle, sigma: &SigmaChoice, params: DiffractiveParams, q: &LineQuad) -> Result<DiffractiveSide> {
    let m = handle.config.m;
    let beta = handle.beta;
    let nu = find_nu(beta, m, sigma.sigma)?;
    if beta == 0.0 {
        return Ok(DiffractiveSide { smooth: 0.0, terms: vec![0.0; params.kmax as usize], total: 0.0, k_tail_estimate: 0.0, l_tail_estimate: 0.0, nu, params });
    }
    let smooth = smooth_term(h, beta, m, &nu, q)?;
    let lengths = handle.lengths.truncated(params.lmax, m);
    let kg = KernelGrid::new(&lengths.groups, params.dt, params.t_max)?;
    let ts = kg.grid();
    let c = green_kernel_constant();
    let mut terms = Vec::new();
    for k in 1..=params.kmax {
        let g: Vec<f64> = g_transform_grid(beta, m, k, &ts, h, &nu, q)?.iter().map(|z| z.re).collect();
        let mut f = g;
        for _ in 0..k {
            f = kg.apply(&f);
        }
        terms.push((beta * c).powi(k as i32) * f[0]);
    }
    let total = smooth + terms.iter().sum::<f64>();
    let x_max = h.cutoff(sigma.sigma, q.tail_tol);
    let abs_dh: f64 = q.nodes(-x_max, x_max).iter().map(|(x, w)| h.dh(C64::new(*x, -sigma.sigma)).norm() * w).sum();
    let r = sigma.margin;
    let kp1 = params.kmax as f64 + 1.0;
    let k_tail = abs_dh / (2.0 * PI) * r.powf(kp1) / (kp1 * (1.0 - r));
    let l_tail = abs_dh / (2.0 * PI) * lengths.tail_bound(0.5 + sigma.sigma) * beta.abs() / (1.0 - r);
    Ok(DiffractiveSide { smooth, terms, total, k_tail_estimate: k_tail, l_tail_estimate: l_tail, nu, params })
}

/// The `k = 1` term computed directly as `-(1/2πi)∫ h' βΣG/(1 + mβψ) dρ` on `Im ρ = -σ`.
pub fn first_term_direct(h: &TestFunction, handle: &SpectralFunctionHandle, lmax: f64, sigma: f64, q: &LineQuad) -> Result<f64> {
    let m = handle.config.m;
    let beta = handle.beta;
    let lengths = handle.lengths.truncated(lmax, m);
    let x_max = h.cutoff(sigma, q.tail_tol);
    let mut acc = C64::new(0.0, 0.0);
    for (x, w) in q.nodes(-x_max, x_max) {
        let rho = C64::new(x, -sigma);
        let s = C64::new(0.5 + sigma, x);
        let g = lengths.green_sum(s)?.value;
        let d = psi_scaled(s, 0)? * (m as f64 * beta) + 1.0;
        acc += h.dh(rho) * g * beta / d * w;
    }
    Ok((acc / C64::new(0.0, -2.0 * PI)).re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricCheck {
    pub sigma: SigmaChoice,
    pub log_side: LogSide,
    pub diffractive: DiffractiveSide,
    pub residual: f64,
    pub budget: f64,
    pub passed: bool,
}

/// `|log_derivative_side - diffractive_side|` against the combined error budget.
pub fn geometric_identity_check(h: &TestFunction, handle: &SpectralFunctionHandle, sigma: &SigmaChoice, params: DiffractiveParams, q: &LineQuad) -> Result<GeometricCheck> {
    let log_side = log_derivative_side(h, handle, &handle.lengths, sigma.sigma, q, SeriesMode::Corrected)?;
    let diffractive = diffractive_side(h, handle, sigma, params, q)?;
    let residual = (log_side.value - diffractive.total).abs();
    let budget = log_side.quadrature_error + log_side.series_error + diffractive.k_tail_estimate + diffractive.l_tail_estimate;
    Ok(GeometricCheck { sigma: sigma.clone(), residual, budget, passed: residual <= budget.max(1e-4), log_side, diffractive })
}

/// `δ_Γ`: 1 when `S` has a pole at `s = 1/2`, which needs `E(z0, 1/2) ≠ 0` and `1/4` not an eigenvalue.
pub fn delta_gamma_auto(handle: &SpectralFunctionHandle, dataset: Option<&MaassDataset>) -> Result<u8> {
    let e = crate::eisenstein::eisenstein(&handle.config.z0, C64::new(0.5, 0.0))?;
    let quarter = dataset.map_or(false, |d| d.forms.iter().any(|f| f.r == 0.0));
    Ok(if e.norm() < 1e-10 || quarter { 0 } else { 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    pub kmax: u32,
    pub lmax: Option<f64>,
    /// Overrides [`delta_gamma_auto`].
    pub delta: Option<u8>,
    pub sigma: Option<f64>,
}

impl Default for TraceParams {
    fn default() -> Self {
        TraceParams { kmax: 6, lmax: None, delta: None, sigma: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenContribution {
    /// `λ = 1/4 + ρ²`.
    pub lambda: f64,
    pub h: f64,
    /// Propagated root error (estimate).
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhsReport {
    pub perturbed: Vec<EigenContribution>,
    pub unperturbed: Vec<EigenContribution>,
    pub perturbed_sum: f64,
    pub unperturbed_sum: f64,
    /// Weyl-law estimate of `Σ h(r_j)` beyond the dataset range.
    pub missing_forms_estimate: f64,
    pub total: f64,
    pub dataset_digest: String,
    /// Critical-line points where `S` nearly vanishes (non-generic coupling).
    pub critical_zero_warnings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub lhs_roots: f64,
    pub lhs_dataset: f64,
    pub scattering_dataset: f64,
    pub scattering_quadrature: f64,
    pub diffractive_k_tail: f64,
    pub diffractive_l_tail: f64,
    /// Disagreement between the log-derivative line and its expansion.
    pub geometric_residual: f64,
    pub total: f64,
    /// Every entry above is an estimate, not a certified bound.
    pub estimated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub lhs: Option<LhsReport>,
    pub smooth_term: f64,
    pub delta: u8,
    pub delta_term: f64,
    pub scattering_term: Option<f64>,
    pub diffractive_terms: Vec<f64>,
    pub diffractive_sum: f64,
    pub log_side: f64,
    pub rhs: Option<f64>,
    pub residual: Option<f64>,
    pub budget: ErrorBudget,
    pub relative_budget: Option<f64>,
    pub sigma: f64,
    pub nu: f64,
    pub radius: f64,
    pub kmax: u32,
    pub lmax: f64,
    pub dataset_digest: Option<String>,
    pub note: String,
}

impl TraceReport {
    pub fn passed(&self) -> Option<bool> {
        self.residual.map(|r| r <= self.budget.total)
    }
}

fn lhs_side(h: &TestFunction, handle: &SpectralFunctionHandle, ev: &CriticalEvaluator, ds: &MaassDataset) -> Result<LhsReport> {
    let hv = |v: f64| h.h(C64::new(0.0, v)).re;
    let dhv = |v: f64| h.dh(C64::new(0.0, v)).im.abs();
    let mut perturbed = Vec::new();
    for root in find_small_eigenvalues(handle, 0.52, 8.0, 60)? {
        let s = C64::new(0.5 + root.v, 0.0);
        let slope = (handle.s_alpha(s + 1e-5)?.re - handle.s_alpha(s - 1e-5)?.re) / 2e-5;
        let err = handle.s_alpha_orbit(s)?.corrected_error / slope.abs() + (root.bracket.1 - root.bracket.0);
        perturbed.push(EigenContribution { lambda: 0.25 - root.v * root.v, h: hv(root.v), error: dhv(root.v) * err });
    }
    let crit = |v: f64| -> Result<f64> { Ok(ev.s_alpha_critical(C64::new(0.0, -v))?.value.re) };
    for root in find_real_roots(crit, 1e-3, 0.5 - 1e-3, 40, 1e-12)? {
        let cv = ev.s_alpha_critical(C64::new(0.0, -root.v))?;
        let slope = (crit(root.v + 1e-5)? - crit(root.v - 1e-5)?) / 2e-5;
        let err = (cv.discrete_truncation_error + cv.continuous_truncation_error) / slope.abs();
        perturbed.push(EigenContribution { lambda: 0.25 - root.v * root.v, h: hv(root.v), error: dhv(root.v) * err });
    }
    let mut unperturbed = vec![EigenContribution { lambda: 0.0, h: hv(0.5), error: 0.0 }];
    // Forms vanishing at z0 stay eigenvalues of both operators and cancel.
    for &(r, _) in ev.weights.iter().filter(|(_, w)| *w > 1e-30) {
        let v = h.h(C64::new(r, 0.0)).re;
        if v.abs() > 1e-16 * h.h(C64::new(0.0, 0.0)).norm() {
            unperturbed.push(EigenContribution { lambda: 0.25 + r * r, h: v, error: 0.0 });
        }
    }
    let r_max = ds.r_max();
    let missing = crate::quad::integrate_real(|r| h.h(C64::new(r, 0.0)).norm() * r / 12.0, r_max, r_max + 40.0 * h.a, 0.0, 1e-6, 8, 200).value.re;
    let perturbed_sum: f64 = perturbed.iter().map(|e| e.h).sum();
    let unperturbed_sum: f64 = unperturbed.iter().map(|e| e.h).sum();
    let critical_zero_warnings = crate::maass::critical_zero_scan(ev, 0.05, ds.r_max().min(20.0), 400, 1e-8, 1e-3)?;
    Ok(LhsReport {
        total: perturbed_sum - unperturbed_sum,
        perturbed,
        unperturbed,
        perturbed_sum,
        unperturbed_sum,
        missing_forms_estimate: missing,
        dataset_digest: ds.digest.clone(),
        critical_zero_warnings,
    })
}

/// Both sides of the trace identity with an error budget.
pub fn trace_report(h: &TestFunction, handle: &SpectralFunctionHandle, dataset: Option<&MaassDataset>, params: TraceParams, q: &LineQuad) -> Result<TraceReport> {
    let sigma = match params.sigma {
        Some(s) => SigmaChoice { sigma: s, margin: sample_ratio(handle, s, 40.0, 200)?, tested: vec![] },
        None => choose_sigma(handle)?,
    };
    let lmax = params.lmax.unwrap_or(handle.lengths.radius);
    let dparams = DiffractiveParams::for_test_function(h, params.kmax, lmax);
    let geo = geometric_identity_check(h, handle, &sigma, dparams, q)?;
    let delta = match params.delta {
        Some(d) => d,
        None => delta_gamma_auto(handle, dataset)?,
    };
    let delta_term = 0.5 * delta as f64 * h.h(C64::new(0.0, 0.0)).re;
    let d = &geo.diffractive;
    let diffractive_sum: f64 = d.terms.iter().sum();
    let mut budget = ErrorBudget {
        lhs_roots: 0.0,
        lhs_dataset: 0.0,
        scattering_dataset: 0.0,
        scattering_quadrature: 0.0,
        diffractive_k_tail: d.k_tail_estimate,
        diffractive_l_tail: d.l_tail_estimate,
        geometric_residual: geo.residual,
        total: 0.0,
        estimated: true,
    };
    let (lhs, scattering, digest) = match dataset {
        Some(ds) => {
            let ev = CriticalEvaluator::new(handle, ds, Default::default())?;
            let sc = scattering_term(h, &ev, None)?;
            let lhs = lhs_side(h, handle, &ev, ds)?;
            budget.lhs_roots = lhs.perturbed.iter().map(|e| e.error).sum();
            budget.lhs_dataset = lhs.missing_forms_estimate;
            budget.scattering_dataset = sc.dataset_error;
            budget.scattering_quadrature = sc.quadrature_error + sc.tail_estimate;
            (Some(lhs), Some(sc.value), Some(ds.digest.clone()))
        }
        None => (None, None, None),
    };
    budget.total = budget.lhs_roots
        + budget.lhs_dataset
        + budget.scattering_dataset
        + budget.scattering_quadrature
        + budget.diffractive_k_tail
        + budget.diffractive_l_tail
        + budget.geometric_residual;
    let rhs = scattering.map(|sc| d.smooth + delta_term + sc + diffractive_sum);
    let residual = match (&lhs, rhs) {
        (Some(l), Some(r)) => Some((l.total - r).abs()),
        _ => None,
    };
    let note = if lhs.is_some() {
        "lhs and scattering term limited by Maass dataset quality".to_string()
    } else {
        "lhs unavailable: no Maass dataset".to_string()
    };
    Ok(TraceReport {
        relative_budget: lhs.as_ref().map(|l| budget.total / l.total.abs().max(1e-300)),
        lhs,
        smooth_term: d.smooth,
        delta,
        delta_term,
        scattering_term: scattering,
        diffractive_terms: d.terms.clone(),
        diffractive_sum,
        log_side: geo.log_side.value,
        rhs,
        residual,
        budget,
        sigma: sigma.sigma,
        nu: d.nu.nu,
        radius: handle.lengths.radius,
        kmax: params.kmax,
        lmax,
        dataset_digest: digest,
        note,
    })
}
