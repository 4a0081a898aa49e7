#![allow(dead_code)]

use pscatter::geometry::{canonicalize, hyp_distance, mobius_apply, GroupElement, Point};
use pscatter::maass::{load_maass_dataset, MaassDataset};
use pscatter::C64;
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::PathBuf;

pub fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y).unwrap()
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn dataset_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/maass_psl2z.json")
}

pub fn dataset() -> MaassDataset {
    load_maass_dataset(&dataset_path(), 50).unwrap()
}

/// Non-stabilizer displacements `<= r` from a scan over all integer matrices with bounded entries.
pub fn brute_force_lengths(z0: &Point, r: f64) -> (Vec<f64>, usize) {
    // |entries of γ| <= ||k|| ||k^{-1}|| sqrt(2 cosh R), k = (sqrt y, x/sqrt y; 0, 1/sqrt y).
    let kf = z0.y + (1.0 + z0.x * z0.x) / z0.y;
    let bound = (kf * (2.0 * r.cosh()).sqrt()).ceil() as i64 + 1;
    let mut seen = BTreeSet::new();
    for a in -bound..=bound {
        for b in -bound..=bound {
            for cc in -bound..=bound {
                let ds: Vec<i64> = if a != 0 {
                    if (1 + b * cc) % a == 0 { vec![(1 + b * cc) / a] } else { vec![] }
                } else if b * cc == -1 {
                    (-bound..=bound).collect()
                } else {
                    vec![]
                };
                for d in ds {
                    if d.abs() <= bound && a * d - b * cc == 1 {
                        seen.insert(canonicalize(a, b, cc, d).unwrap());
                    }
                }
            }
        }
    }
    let mut lengths = Vec::new();
    let mut stab = 0;
    for g in seen {
        let l = hyp_distance(z0, &mobius_apply(&g, z0));
        if l < 1e-9 {
            stab += 1;
        } else if l <= r {
            lengths.push(l);
        }
    }
    lengths.sort_by(f64::total_cmp);
    (lengths, stab)
}

pub fn all_elements_sorted(g: &[GroupElement]) -> Vec<GroupElement> {
    let mut v = g.to_vec();
    v.sort();
    v
}

pub fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// `E(z,s) = Σ_{(c,d)=1, mod ±} y^s / |cz+d|^{2s}` over `|cz+d| <= m`, with a lattice-cell tail bound.
pub fn eisenstein_direct_sum(z: &Point, s: C64, m: f64) -> (C64, f64) {
    let (x, y) = (z.x, z.y);
    let mut sum = c(0.0, 0.0);
    let cmax = (m / y).floor() as i64;
    for cc in 0..=cmax {
        let span = (m * m - (cc as f64 * y).powi(2)).max(0.0).sqrt();
        let lo = (-(cc as f64) * x - span).floor() as i64 - 1;
        let hi = (-(cc as f64) * x + span).ceil() as i64 + 1;
        for d in lo..=hi {
            if (cc == 0 && d != 1) || gcd(cc, d) != 1 {
                continue;
            }
            let w2 = (cc as f64 * x + d as f64).powi(2) + (cc as f64 * y).powi(2);
            if w2.sqrt() > m {
                continue;
            }
            sum += (-s * w2.ln()).exp();
        }
    }
    // Cell of the lattice Zz + Z: area y, diameter at most |z| + 1.
    let sigma = s.re;
    let dia = (x * x + y * y).sqrt() + 1.0;
    let tail = (1.0 + dia / m).powf(2.0 * sigma) / y * 2.0 * PI * (m - dia).powf(2.0 - 2.0 * sigma) / (2.0 * sigma - 2.0);
    let ys = (s * y.ln()).exp();
    (sum * ys, 0.5 * tail * y.powf(sigma))
}
