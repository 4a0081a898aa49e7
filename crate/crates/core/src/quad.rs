//! Quadrature rules: Gauss–Legendre nodes and adaptive Gauss–Kronrod for
//! complex-valued integrands.

use crate::C64;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Cached Gauss–Legendre rule.
pub fn gl_cached(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=64).map(gauss_legendre).collect());
    &rules[n.min(64)]
}

/// Composite Gauss–Legendre rule over `[a, b]` with `panels` equal panels.
pub fn composite_nodes(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gl_cached(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(w) {
            out.push((lo + 0.5 * h * (xi + 1.0), 0.5 * h * wi));
        }
    }
    out
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208467741461,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// One G10–K21 panel: (kronrod estimate, error estimate, integral of |f|).
fn gk21<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[10];
    let mut rg = C64::new(0.0, 0.0);
    let mut rabs = fc.norm() * WGK[10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        rk += (f1 + f2) * WGK[j];
        rabs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            rg += (f1 + f2) * WG[j / 2];
        }
    }
    let k = rk * h;
    let g = rg * h;
    (k, (k - g).norm(), rabs * h.abs())
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    /// Integral of |f|, a scale for relative tolerances.
    pub abs_integral: f64,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    val: C64,
    err: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Adaptive G10–K21 integration of `f` over `[a, b]`, starting from
/// `init_panels` equal panels and bisecting the worst panel until the summed
/// error estimate is below `max(abs_tol, rel_tol * |int f|)`.
pub fn integrate<F: Fn(f64) -> C64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    init_panels: usize,
    max_panels: usize,
) -> QuadResult {
    let n0 = init_panels.max(1);
    let h = (b - a) / n0 as f64;
    let mut heap = BinaryHeap::new();
    let mut total = C64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut abs = 0.0;
    for i in 0..n0 {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == n0 { b } else { lo + h };
        let (v, e, s) = gk21(&f, lo, hi);
        total += v;
        err += e;
        abs += s;
        heap.push(Panel { a: lo, b: hi, val: v, err: e, abs: s });
    }
    let mut count = n0;
    loop {
        let tol = abs_tol.max(rel_tol * abs);
        if err <= tol {
            return QuadResult { value: total, error: err, abs_integral: abs, converged: true };
        }
        if count >= max_panels {
            return QuadResult { value: total, error: err, abs_integral: abs, converged: false };
        }
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Panel below floating resolution; accept it.
            heap.push(Panel { err: 0.0, ..p });
            err -= p.err;
            continue;
        }
        let (v1, e1, s1) = gk21(&f, p.a, m);
        let (v2, e2, s2) = gk21(&f, m, p.b);
        total += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        abs += s1 + s2 - p.abs;
        heap.push(Panel { a: p.a, b: m, val: v1, err: e1, abs: s1 });
        heap.push(Panel { a: m, b: p.b, val: v2, err: e2, abs: s2 });
        count += 1;
        if count % 64 == 0 {
            // Resum to limit drift from incremental updates.
            total = heap.iter().map(|q| q.val).sum();
            err = heap.iter().map(|q| q.err).sum();
            abs = heap.iter().map(|q| q.abs).sum();
        }
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    init_panels: usize,
    max_panels: usize,
) -> QuadResult {
    integrate(|x| C64::new(f(x), 0.0), a, b, abs_tol, rel_tol, init_panels, max_panels)
}
