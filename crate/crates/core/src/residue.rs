//! Contour integrals of `h · (log F)'` for meromorphic `F` with planted zeros and poles.

use crate::error::{Error, Result};
use crate::quad::integrate;
use crate::transform::TestFunction;
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `c · exp(P(ρ)) · Π (ρ - a)^k`, with `k > 0` a zero and `k < 0` a pole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meromorphic {
    pub points: Vec<(C64, i32)>,
    /// Coefficients of `P`, lowest degree first.
    pub exponent: Vec<C64>,
    pub constant: C64,
}

impl Meromorphic {
    pub fn new(points: Vec<(C64, i32)>, exponent: Vec<C64>) -> Self {
        let mut f = Meromorphic { points: Vec::new(), exponent, constant: C64::new(1.0, 0.0) };
        for (a, k) in points {
            f.push(a, k);
        }
        f
    }

    /// Merge coincident points; cancelled points disappear.
    fn push(&mut self, a: C64, k: i32) {
        if let Some(p) = self.points.iter_mut().find(|(b, _)| (*b - a).norm() < 1e-14) {
            p.1 += k;
        } else {
            self.points.push((a, k));
        }
        self.points.retain(|(_, k)| *k != 0);
    }

    fn poly(&self, z: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for (k, c) in self.exponent.iter().enumerate().rev() {
            p = p * z + c;
            if k > 0 {
                dp = dp * z + c * k as f64;
            }
        }
        (p, dp)
    }

    pub fn eval(&self, z: C64) -> C64 {
        let mut v = self.constant * self.poly(z).0.exp();
        for &(a, k) in &self.points {
            v *= (z - a).powi(k);
        }
        v
    }

    /// `F'/F`, analytic in the planted data.
    pub fn log_derivative(&self, z: C64) -> C64 {
        let mut v = self.poly(z).1;
        for &(a, k) in &self.points {
            v += (z - a).inv() * k as f64;
        }
        v
    }

    /// `ρ ↦ F(-ρ)`.
    pub fn reflected(&self) -> Self {
        let exponent = self.exponent.iter().enumerate().map(|(k, c)| if k % 2 == 1 { -c } else { *c }).collect();
        let sign: i32 = self.points.iter().map(|(_, k)| k).sum();
        let mut f = Meromorphic::new(self.points.iter().map(|&(a, k)| (-a, k)).collect(), exponent);
        f.constant = self.constant * if sign % 2 == 0 { 1.0 } else { -1.0 };
        f
    }

    pub fn product(&self, other: &Self) -> Self {
        let n = self.exponent.len().max(other.exponent.len());
        let get = |v: &Vec<C64>, i: usize| v.get(i).copied().unwrap_or_default();
        let exponent = (0..n).map(|i| get(&self.exponent, i) + get(&other.exponent, i)).collect();
        let mut f = Meromorphic::new(self.points.clone(), exponent);
        for &(a, k) in &other.points {
            f.push(a, k);
        }
        f.constant = self.constant * other.constant;
        f
    }

    pub fn reciprocal(&self) -> Self {
        Meromorphic {
            points: self.points.iter().map(|&(a, k)| (a, -k)).collect(),
            exponent: self.exponent.iter().map(|c| -c).collect(),
            constant: self.constant.inv(),
        }
    }
}

/// Oriented segment or counter-clockwise rectangle boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Contour {
    Segment { from: C64, to: C64 },
    Box { re: (f64, f64), im: (f64, f64) },
}

impl Contour {
    pub fn segments(&self) -> Vec<(C64, C64)> {
        match *self {
            Contour::Segment { from, to } => vec![(from, to)],
            Contour::Box { re: (x0, x1), im: (y0, y1) } => {
                let c = [C64::new(x0, y0), C64::new(x1, y0), C64::new(x1, y1), C64::new(x0, y1)];
                (0..4).map(|i| (c[i], c[(i + 1) % 4])).collect()
            }
        }
    }

    /// Strictly inside a box; segments enclose nothing.
    pub fn encloses(&self, z: C64) -> bool {
        match *self {
            Contour::Segment { .. } => false,
            Contour::Box { re, im } => z.re > re.0 && z.re < re.1 && z.im > im.0 && z.im < im.1,
        }
    }

    pub fn distance(&self, z: C64) -> f64 {
        self.segments()
            .iter()
            .map(|&(a, b)| {
                let d = b - a;
                let t = (((z - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
                (z - (a + d * t)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn describe(&self) -> String {
        match *self {
            Contour::Segment { from, to } => format!("segment {from} -> {to}"),
            Contour::Box { re, im } => format!("box [{}, {}] x [{}, {}]i", re.0, re.1, im.0, im.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourQuad {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Planted points closer than this to the contour are rejected.
    pub margin: f64,
}

impl Default for ContourQuad {
    fn default() -> Self {
        ContourQuad { abs_tol: 1e-13, rel_tol: 1e-13, margin: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourIntegral {
    /// `(1/2πi)∫ h (log F)' dρ`.
    pub value: C64,
    pub quadrature_error: f64,
    /// Accumulated `Δarg F / 2π`.
    pub winding: f64,
}

fn check_margin(f: &Meromorphic, c: &Contour, margin: f64) -> Result<()> {
    for &(a, k) in &f.points {
        let d = c.distance(a);
        if d < margin {
            return Err(Error::Contract(format!("planted point {a} (order {k}) within {d:.2e} of {}", c.describe())));
        }
    }
    Ok(())
}

fn arg_increment(f: &Meromorphic, a: C64, b: C64, fa: C64, fb: C64, depth: u32) -> Result<f64> {
    let d = (fb / fa).arg();
    if d.abs() <= 0.5 * PI {
        return Ok(d);
    }
    if depth > 40 {
        return Err(Error::Contract(format!("argument of F not resolvable between {a} and {b}")));
    }
    let m = 0.5 * (a + b);
    let fm = f.eval(m);
    Ok(arg_increment(f, a, m, fa, fm, depth + 1)? + arg_increment(f, m, b, fm, fb, depth + 1)?)
}

/// Accumulated argument of `F` along the contour, in turns.
pub fn winding(f: &Meromorphic, c: &Contour, nodes_per_segment: usize) -> Result<f64> {
    let mut total = 0.0;
    for (a, b) in c.segments() {
        let mut za = a;
        let mut fa = f.eval(a);
        for i in 1..=nodes_per_segment {
            let zb = a + (b - a) * (i as f64 / nodes_per_segment as f64);
            let fb = f.eval(zb);
            total += arg_increment(f, za, zb, fa, fb, 0)?;
            za = zb;
            fa = fb;
        }
    }
    Ok(total / (2.0 * PI))
}

/// `(1/2πi)∫_C h(ρ) (d/dρ) log F(ρ) dρ` with the winding of `F` along `C`.
pub fn contour_log_derivative_integral(f: &Meromorphic, h: &TestFunction, c: &Contour, q: &ContourQuad) -> Result<ContourIntegral> {
    check_margin(f, c, q.margin)?;
    let mut value = C64::new(0.0, 0.0);
    let mut err = 0.0;
    for (a, b) in c.segments() {
        let d = b - a;
        let r = integrate(|t| { let z = a + d * t; h.h(z) * f.log_derivative(z) * d }, 0.0, 1.0, q.abs_tol, q.rel_tol, 16, 20000);
        if !r.converged {
            return Err(Error::Tolerance { requested: q.abs_tol, achieved: r.error });
        }
        value += r.value;
        err += r.error;
    }
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    Ok(ContourIntegral { value: value / two_pi_i, quadrature_error: err / (2.0 * PI), winding: winding(f, c, 64)? })
}

/// `Σ k h(a)` over enclosed planted points.
pub fn predicted_residue_sum(f: &Meromorphic, h: &TestFunction, c: &Contour) -> C64 {
    f.points.iter().filter(|(a, _)| c.encloses(*a)).map(|&(a, k)| h.h(a) * k as f64).sum()
}

/// Enclosed zeros minus poles, with order.
pub fn predicted_winding(f: &Meromorphic, c: &Contour) -> i32 {
    f.points.iter().filter(|(a, _)| c.encloses(*a)).map(|(_, k)| k).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueReport {
    pub integral: C64,
    pub predicted: C64,
    pub residual: f64,
    pub contour: String,
}

impl ResidueReport {
    fn new(integral: C64, predicted: C64, contour: String) -> Self {
        ResidueReport { integral, predicted, residual: (integral - predicted).norm(), contour }
    }
}

/// Planted stand-in for `ρ ↦ S(1/2 + iρ)`.
///
/// Unperturbed eigenvalues are poles at `±ρ_j` (real or on the imaginary axis),
/// embedded perturbed eigenvalues are zeros at `±ρ^α_j`, small perturbed
/// eigenvalues are single zeros on `(0, -iσ)`, and resonances are poles (unperturbed)
/// or zeros (perturbed) with `0 < Im ρ < σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpectralFunction {
    pub unperturbed_eigen: Vec<C64>,
    pub perturbed_eigen: Vec<f64>,
    pub small_perturbed: Vec<f64>,
    pub unperturbed_resonances: Vec<C64>,
    pub perturbed_resonances: Vec<C64>,
    /// Order of the pole at `ρ = 0`: 0, 1 (`1/4` not an eigenvalue) or 2 (`1/4` an eigenvalue).
    pub pole_at_zero: u8,
    /// Even entire factor `exp(Σ c_k ρ^{2k})`.
    pub even_exponent: Vec<f64>,
}

impl SyntheticSpectralFunction {
    pub fn function(&self) -> Meromorphic {
        let mut pts = Vec::new();
        for &r in &self.unperturbed_eigen {
            pts.push((r, -1));
            pts.push((-r, -1));
        }
        for &r in &self.perturbed_eigen {
            pts.push((C64::new(r, 0.0), 1));
            pts.push((C64::new(-r, 0.0), 1));
        }
        for &v in &self.small_perturbed {
            pts.push((C64::new(0.0, -v), 1));
        }
        for &r in &self.unperturbed_resonances {
            pts.push((r, -1));
        }
        for &r in &self.perturbed_resonances {
            pts.push((r, 1));
        }
        if self.pole_at_zero > 0 {
            pts.push((C64::new(0.0, 0.0), -(self.pole_at_zero as i32)));
        }
        let mut exponent = Vec::new();
        for (k, c) in self.even_exponent.iter().enumerate() {
            exponent.resize(2 * k + 1, C64::new(0.0, 0.0));
            exponent[2 * k] = C64::new(*c, 0.0);
        }
        Meromorphic::new(pts, exponent)
    }

    /// `θ(ρ) = F(-ρ)/F(ρ)`.
    pub fn theta(&self) -> Meromorphic {
        let f = self.function();
        f.reflected().product(&f.reciprocal())
    }

    fn in_strip(&self, sigma: f64, t: f64) -> impl Fn(C64) -> bool {
        move |z: C64| z.re.abs() < t && z.im.abs() < sigma
    }
}

/// Resonance identity on the box `[-T, T] x [-σ, 0]`:
/// `-Σ h(r_j) + Σ h(r^α_j) - Σ h(ρ^α_j)` against the boundary integral of `h (log θ)'`.
pub fn verify_resonance_lemma(s: &SyntheticSpectralFunction, h: &TestFunction, sigma: f64, t: f64, q: &ContourQuad) -> Result<ResidueReport> {
    let inside = s.in_strip(sigma, t);
    let mut lhs = C64::new(0.0, 0.0);
    for &r in s.unperturbed_resonances.iter().filter(|r| inside(**r)) {
        lhs -= h.h(r);
    }
    for &r in s.perturbed_resonances.iter().filter(|r| inside(**r)) {
        lhs += h.h(r);
    }
    for &v in s.small_perturbed.iter().filter(|v| **v < sigma) {
        lhs -= h.h(C64::new(0.0, -v));
    }
    let theta = s.theta();
    let c = Contour::Box { re: (-t, t), im: (-sigma, 0.0) };
    let rhs = contour_log_derivative_integral(&theta, h, &c, q)?;
    Ok(ResidueReport::new(rhs.value, lhs, c.describe()))
}

/// Truncated trace identity: eigenvalue sums against three sides of the lower box for
/// `h (log S)'`, the `½δ h(0)` term, and half the real-line integral of `h (log θ)'`.
pub fn verify_truncated_formula(s: &SyntheticSpectralFunction, h: &TestFunction, sigma: f64, t: f64, delta: u8, q: &ContourQuad) -> Result<ResidueReport> {
    let inside = s.in_strip(sigma, t);
    let mut lhs = C64::new(0.0, 0.0);
    for &r in s.perturbed_eigen.iter().filter(|r| r.abs() < t) {
        lhs += h.h(C64::new(r, 0.0));
    }
    for &v in s.small_perturbed.iter().filter(|v| **v < sigma) {
        lhs += h.h(C64::new(0.0, -v));
    }
    for &r in s.unperturbed_eigen.iter().filter(|r| inside(**r)) {
        lhs -= h.h(r);
    }
    if s.pole_at_zero == 2 {
        lhs -= h.h(C64::new(0.0, 0.0));
    }
    let f = s.function();
    let mut rhs = C64::new(0.0, 0.0);
    let corners = [C64::new(-t, 0.0), C64::new(-t, -sigma), C64::new(t, -sigma), C64::new(t, 0.0)];
    for i in 0..3 {
        let seg = Contour::Segment { from: corners[i], to: corners[i + 1] };
        let r = contour_log_derivative_integral(&f, h, &seg, q)?;
        rhs += r.value;
    }
    rhs += h.h(C64::new(0.0, 0.0)) * (0.5 * delta as f64);
    let line = Contour::Segment { from: C64::new(-t, 0.0), to: C64::new(t, 0.0) };
    let th = contour_log_derivative_integral(&s.theta(), h, &line, q)?;
    rhs += th.value * 0.5;
    Ok(ResidueReport::new(rhs, lhs, format!("lower box sides, sigma = {sigma}, T = {t}")))
}

/// Random planted `F` with zeros and poles inside `[-2, 2] x [-2, 2]`, kept away from the box edge.
pub fn random_meromorphic(rng: &mut ChaCha8Rng, zeros: usize, poles: usize, max_order: i32) -> Meromorphic {
    let c = Contour::Box { re: (-2.0, 2.0), im: (-2.0, 2.0) };
    let mut pts: Vec<(C64, i32)> = Vec::new();
    while pts.len() < zeros + poles {
        let z = C64::new(rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5));
        if c.distance(z) < 0.1 || pts.iter().any(|(a, _)| (*a - z).norm() < 0.05) {
            continue;
        }
        let k = rng.gen_range(1..=max_order);
        pts.push((z, if pts.len() < zeros { k } else { -k }));
    }
    let exponent = (0..3).map(|_| C64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))).collect();
    Meromorphic::new(pts, exponent)
}

/// Random planted spectrum for the strip `|Im ρ| < σ`, `|Re ρ| < T`, with `σ = 1.5`, `T = 4`.
pub fn random_synthetic(rng: &mut ChaCha8Rng, pole_at_zero: u8) -> SyntheticSpectralFunction {
    let sigma: f64 = 1.5;
    let t: f64 = 4.0;
    let mut taken: Vec<f64> = vec![0.0];
    let mut fresh = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| loop {
        let x: f64 = rng.gen_range(lo..hi);
        if taken.iter().all(|y| (x.abs() - y.abs()).abs() > 0.05) {
            taken.push(x);
            return x;
        }
    };
    let unperturbed_eigen = vec![C64::new(0.0, 0.5), C64::new(fresh(rng, 0.2, t - 0.2), 0.0), C64::new(fresh(rng, 0.2, t - 0.2), 0.0)];
    let perturbed_eigen = vec![fresh(rng, 0.2, t - 0.2)];
    let small_perturbed = vec![rng.gen_range(0.6..sigma - 0.1)];
    let res = |rng: &mut ChaCha8Rng| C64::new(rng.gen_range(-t + 0.2..t - 0.2), rng.gen_range(0.1..sigma - 0.1));
    SyntheticSpectralFunction {
        unperturbed_eigen,
        perturbed_eigen,
        small_perturbed,
        unperturbed_resonances: (0..2).map(|_| res(rng)).collect(),
        perturbed_resonances: (0..2).map(|_| res(rng)).collect(),
        pole_at_zero,
        even_exponent: vec![0.0, rng.gen_range(-0.05..0.05)],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSuite {
    pub seed: u64,
    pub configurations: usize,
    pub max_contour_residual: f64,
    pub winding_mismatches: usize,
    pub max_lemma_residual: f64,
    pub max_truncated_residual: f64,
}

/// Seeded run over random planted configurations of all three identities.
pub fn run_synthetic_suite(seed: u64, configurations: usize) -> Result<SyntheticSuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = ContourQuad::default();
    let mut out = SyntheticSuite { seed, configurations, max_contour_residual: 0.0, winding_mismatches: 0, max_lemma_residual: 0.0, max_truncated_residual: 0.0 };
    for i in 0..configurations {
        let h = TestFunction::gaussian(rng.gen_range(1.0..3.0))?;
        let f = random_meromorphic(&mut rng, 5, 3, 3);
        let c = Contour::Box { re: (-2.0, 2.0), im: (-2.0, 2.0) };
        let r = contour_log_derivative_integral(&f, &h, &c, &q)?;
        out.max_contour_residual = out.max_contour_residual.max((r.value - predicted_residue_sum(&f, &h, &c)).norm());
        if (r.winding - predicted_winding(&f, &c) as f64).abs() > 1e-6 {
            out.winding_mismatches += 1;
        }
        let delta_pole = 1 + (i % 2) as u8;
        let s = random_synthetic(&mut rng, delta_pole);
        let lemma = verify_resonance_lemma(&s, &h, 1.5, 4.0, &q)?;
        out.max_lemma_residual = out.max_lemma_residual.max(lemma.residual);
        let tr = verify_truncated_formula(&s, &h, 1.5, 4.0, 2 - delta_pole, &q)?;
        out.max_truncated_residual = out.max_truncated_residual.max(tr.residual);
    }
    Ok(out)
}
