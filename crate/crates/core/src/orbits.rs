//! Enumeration of `PSL(2,Z)` elements by displacement of a base point.
//!
//! An element is determined by its bottom row `(c, d)` up to left
//! multiplication by translations. With `g_z` the affine map taking `i` to `z`,
//! `2 cosh d(z, γw) = ‖g_z⁻¹ γ g_w‖²_F`, which for a fixed bottom row is a
//! quadratic polynomial in the translation index. Enumerating admissible rows
//! and then solving the quadratic gives every element in the ball exactly once.

use crate::error::{Error, Result};
use crate::geometry::{hyp_distance, mobius_apply, GroupElement, Point};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

pub const DEFAULT_CAP: usize = 10_000_000;
/// Displacements below this count as fixing the point.
pub const STABILIZER_TOL: f64 = 1e-9;
const FORMAT_TAG: &str = "pscatter-orbit-table";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitEntry {
    pub g: GroupElement,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTable {
    pub z0: Point,
    pub radius: f64,
    pub stabilizer: Vec<GroupElement>,
    pub stabilizer_order: usize,
    /// Non-stabilizer elements sorted by `(length, matrix entries)`.
    pub entries: Vec<OrbitEntry>,
}

/// A set of entries sharing (numerically) the same length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthGroup {
    pub length: f64,
    pub multiplicity: usize,
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Integer `k` with `q(k) = A k² + 2 B k + C <= 0`, padded by one on each side.
fn k_range(qa: f64, qb: f64, qc: f64) -> Option<(i64, i64)> {
    let disc = qb * qb - qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let lo = (-qb - sq) / qa;
    let hi = (-qb + sq) / qa;
    Some((lo.floor() as i64 - 1, hi.ceil() as i64 + 1))
}

/// All group elements `γ` (including the identity) with `d(z, γw) <= radius`.
pub fn enumerate_pairs(z: &Point, w: &Point, radius: f64, cap: usize) -> Result<Vec<OrbitEntry>> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::domain("enumerate_pairs", format!("radius {radius}")));
    }
    let bound = 2.0 * radius.cosh() * (1.0 + 1e-12) + 1e-12;
    let (x, y, xp, yp) = (z.x, z.y, w.x, w.y);
    let count = AtomicUsize::new(0);
    let cmax = (bound / (y * yp)).sqrt().floor() as i64;

    let accept = |g: GroupElement, out: &mut Vec<OrbitEntry>| -> Result<()> {
        let p = mobius_apply(&g, w);
        let l = hyp_distance(z, &p);
        if l <= radius {
            out.push(OrbitEntry { g, length: l });
            if count.fetch_add(1, Ordering::Relaxed) + 1 > cap {
                return Err(Error::Capacity { cap, radius });
            }
        }
        Ok(())
    };

    let per_c = |c: i64| -> Result<Vec<OrbitEntry>> {
        let mut out = Vec::new();
        if c == 0 {
            // a = d = 1, b free: the quadratic in b.
            let rest = bound - yp / y - y / yp;
            if rest < 0.0 {
                return Ok(out);
            }
            let half = (rest * y * yp).sqrt();
            let lo = (x - xp - half).floor() as i64 - 1;
            let hi = (x - xp + half).ceil() as i64 + 1;
            for b in lo..=hi {
                accept(GroupElement { a: 1, b, c: 0, d: 1 }, &mut out)?;
            }
            return Ok(out);
        }
        let cf = c as f64;
        let rem_c = bound - cf * cf * y * yp;
        if rem_c < 0.0 {
            return Ok(out);
        }
        let dspan = (rem_c * yp / y).sqrt();
        let dlo = (-cf * xp - dspan).floor() as i64 - 1;
        let dhi = (-cf * xp + dspan).ceil() as i64 + 1;
        for d in dlo..=dhi {
            let (gcd, inv, _) = ext_gcd(d.rem_euclid(c), c);
            if gcd != 1 {
                continue;
            }
            let a0 = inv.rem_euclid(c);
            let b0 = (a0 * d - 1) / c;
            let df = d as f64;
            let dd = cf * xp + df;
            let rem = rem_c - dd * dd * y / yp;
            if rem < 0.0 {
                continue;
            }
            // u1 = p1 + k c, u2 = p2 + k dd.
            let p1 = a0 as f64 - x * cf;
            let p2 = a0 as f64 * xp + b0 as f64 - x * dd;
            let (s1, s2) = (yp / y, 1.0 / (y * yp));
            let qa = cf * cf * s1 + dd * dd * s2;
            let qb = p1 * cf * s1 + p2 * dd * s2;
            let qc = p1 * p1 * s1 + p2 * p2 * s2 - rem;
            if let Some((klo, khi)) = k_range(qa, qb, qc) {
                for k in klo..=khi {
                    let g = GroupElement { a: a0 + k * c, b: b0 + k * d, c, d };
                    accept(g, &mut out)?;
                }
            }
        }
        Ok(out)
    };

    // Cheap early refusal using the lattice-point asymptotics 6(cosh R - 1).
    let estimate = 6.0 * (radius.cosh() - 1.0);
    if estimate > 2.0 * cap as f64 {
        return Err(Error::Capacity { cap, radius });
    }
    let chunks: Vec<Result<Vec<OrbitEntry>>> = (0..=cmax).into_par_iter().map(per_c).collect();
    let mut all = Vec::new();
    for c in chunks {
        all.extend(c?);
    }
    all.par_sort_unstable_by(|p, q| p.length.total_cmp(&q.length).then(p.g.cmp(&q.g)));
    Ok(all)
}

/// Elements fixing `z0` (identity included) and their count.
pub fn stabilizer(z0: &Point) -> (Vec<GroupElement>, usize) {
    let near = enumerate_pairs(z0, z0, 1e-3, DEFAULT_CAP).unwrap_or_default();
    let mut st: Vec<GroupElement> =
        near.into_iter().filter(|e| e.length < STABILIZER_TOL).map(|e| e.g).collect();
    st.sort();
    let m = st.len();
    (st, m)
}

pub fn enumerate_orbits(z0: &Point, radius: f64) -> Result<OrbitTable> {
    enumerate_orbits_with_cap(z0, radius, DEFAULT_CAP)
}

pub fn enumerate_orbits_with_cap(z0: &Point, radius: f64, cap: usize) -> Result<OrbitTable> {
    let all = enumerate_pairs(z0, z0, radius.max(1e-3), cap)?;
    let mut stab = Vec::new();
    let mut entries = Vec::new();
    for e in all {
        if e.length < STABILIZER_TOL {
            stab.push(e.g);
        } else if e.length <= radius {
            entries.push(e);
        }
    }
    stab.sort();
    Ok(OrbitTable { z0: *z0, radius, stabilizer_order: stab.len(), stabilizer: stab, entries })
}

impl OrbitTable {
    /// Entries grouped by equal length (relative tolerance 1e-12).
    pub fn length_groups(&self) -> Vec<LengthGroup> {
        let mut out: Vec<LengthGroup> = Vec::new();
        for e in &self.entries {
            match out.last_mut() {
                Some(g) if (e.length - g.length).abs() <= 1e-12 * g.length.max(1.0) => {
                    g.multiplicity += 1
                }
                _ => out.push(LengthGroup { length: e.length, multiplicity: 1 }),
            }
        }
        out
    }

    /// Number of group elements (stabilizer included) with displacement `<= l`.
    pub fn counting(&self, l: f64) -> usize {
        self.stabilizer_order + self.entries.partition_point(|e| e.length <= l)
    }

    /// Restriction to displacements `<= radius`.
    pub fn truncated(&self, radius: f64) -> OrbitTable {
        let n = self.entries.partition_point(|e| e.length <= radius);
        OrbitTable {
            z0: self.z0,
            radius: radius.min(self.radius),
            stabilizer: self.stabilizer.clone(),
            stabilizer_order: self.stabilizer_order,
            entries: self.entries[..n].to_vec(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{FORMAT_TAG} v{FORMAT_VERSION}")?;
        writeln!(w, "code_version {}", crate::CODE_VERSION)?;
        writeln!(w, "z0 {:?} {:?}", self.z0.x, self.z0.y)?;
        writeln!(w, "radius {:?}", self.radius)?;
        writeln!(w, "stabilizer_order {}", self.stabilizer_order)?;
        writeln!(w, "count {}", self.entries.len())?;
        for g in &self.stabilizer {
            writeln!(w, "s {} {} {} {}", g.a, g.b, g.c, g.d)?;
        }
        for e in &self.entries {
            writeln!(w, "{} {} {} {} {:?}", e.g.a, e.g.b, e.g.c, e.g.d, e.length)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Parse a table, recomputing every length and checking it to 1e-12.
    pub fn read_from<R: BufRead>(r: R) -> Result<OrbitTable> {
        let bad = |m: &str| Error::Data(format!("orbit table: {m}"));
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines.next().ok_or_else(|| bad("unexpected end of file"))?.map_err(Error::from)
        };
        let head = next()?;
        if head != format!("{FORMAT_TAG} v{FORMAT_VERSION}") {
            return Err(bad(&format!("unsupported header {head:?}")));
        }
        let field = |line: String, key: &str| -> Result<Vec<String>> {
            let mut it = line.split_whitespace();
            if it.next() != Some(key) {
                return Err(bad(&format!("expected key {key}")));
            }
            Ok(it.map(str::to_owned).collect())
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s}")));
        let int = |s: &str| s.parse::<i64>().map_err(|_| bad(&format!("bad integer {s}")));
        let _ver = field(next()?, "code_version")?;
        let z = field(next()?, "z0")?;
        if z.len() != 2 {
            return Err(bad("z0 needs two components"));
        }
        let z0 = Point::new(num(&z[0])?, num(&z[1])?).map_err(|_| bad("invalid z0"))?;
        let radius = num(&field(next()?, "radius")?[0])?;
        let m = int(&field(next()?, "stabilizer_order")?[0])? as usize;
        let count = int(&field(next()?, "count")?[0])? as usize;
        let mut stabilizer = Vec::with_capacity(m);
        for _ in 0..m {
            let v = field(next()?, "s")?;
            let g = parse_element(&v[..4], &int)?;
            stabilizer.push(g);
        }
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let line = next()?;
            let v: Vec<&str> = line.split_whitespace().collect();
            if v.len() != 5 {
                return Err(bad("entry needs five fields"));
            }
            let owned: Vec<String> = v[..4].iter().map(|s| s.to_string()).collect();
            let g = parse_element(&owned, &int)?;
            let stored = num(v[4])?;
            let l = hyp_distance(&z0, &mobius_apply(&g, &z0));
            if (l - stored).abs() > 1e-12 {
                return Err(bad(&format!("length mismatch for {g}: stored {stored}, recomputed {l}")));
            }
            entries.push(OrbitEntry { g, length: stored });
        }
        Ok(OrbitTable { z0, radius, stabilizer, stabilizer_order: m, entries })
    }

    pub fn load(path: &Path) -> Result<OrbitTable> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn parse_element(v: &[String], int: &dyn Fn(&str) -> Result<i64>) -> Result<GroupElement> {
    let (a, b, c, d) = (int(&v[0])?, int(&v[1])?, int(&v[2])?, int(&v[3])?);
    let g = crate::geometry::canonicalize(a, b, c, d)
        .map_err(|_| Error::Data(format!("non-unimodular entry {a} {b} {c} {d}")))?;
    if g.as_tuple() != (a, b, c, d) {
        return Err(Error::Data(format!("non-canonical entry {a} {b} {c} {d}")));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_orbit_at_2i() {
        let z0 = Point::new(0.0, 2.0).unwrap();
        let t = enumerate_orbits(&z0, 0.1).unwrap();
        assert!(t.entries.is_empty());
        assert_eq!(t.stabilizer_order, 1);
        let t = enumerate_orbits(&z0, 1.0).unwrap();
        let l = t.entries[0].length;
        assert!((l - (1.0f64 + 1.0 / 8.0).acosh()).abs() < 1e-14);
        assert!(t.entries[..2].iter().any(|e| e.g == GroupElement::T));
    }

    #[test]
    fn stabilizer_orders() {
        let pts = [(0.0, 2.0, 1), (0.0, 1.0, 2), (0.5, 0.75f64.sqrt(), 3)];
        for (x, y, m) in pts {
            let (_, got) = stabilizer(&Point::new(x, y).unwrap());
            assert_eq!(got, m, "at {x}+{y}i");
        }
    }

    #[test]
    fn roundtrip_text_format() {
        let z0 = Point::new(-0.1, 1.3).unwrap();
        let t = enumerate_orbits(&z0, 3.0).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = OrbitTable::read_from(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(back, t);
    }
}
