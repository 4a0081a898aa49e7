//! Upper half-plane geometry for the modular group.

use crate::error::{Error, Result};
use crate::C64;
use serde::{Deserialize, Serialize};

/// A point `x + iy` of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || y <= 0.0 {
            return Err(Error::domain("Point::new", format!("invalid point {x} + {y}i")));
        }
        Ok(Point { x, y })
    }

    pub fn z(&self) -> C64 {
        C64::new(self.x, self.y)
    }

    pub fn from_complex(z: C64) -> Result<Self> {
        Point::new(z.re, z.im)
    }
}

/// A canonical representative of an element of `PSL(2,Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { a: 1, b: 0, c: 0, d: 1 };
    /// Inversion `z -> -1/z`.
    pub const S: GroupElement = GroupElement { a: 0, b: -1, c: 1, d: 0 };
    /// Translation `z -> z + 1`.
    pub const T: GroupElement = GroupElement { a: 1, b: 1, c: 0, d: 1 };

    pub fn translation(n: i64) -> Self {
        GroupElement { a: 1, b: n, c: 0, d: 1 }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// Matrix product `self * other`, canonicalised.
    pub fn compose(&self, o: &GroupElement) -> GroupElement {
        let m = (
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        );
        sign_normalize(m)
    }

    pub fn inverse(&self) -> GroupElement {
        sign_normalize((self.d, -self.b, -self.c, self.a))
    }

    pub fn as_tuple(&self) -> (i64, i64, i64, i64) {
        (self.a, self.b, self.c, self.d)
    }
}

impl std::fmt::Display for GroupElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({} {}; {} {})", self.a, self.b, self.c, self.d)
    }
}

fn sign_normalize((a, b, c, d): (i64, i64, i64, i64)) -> GroupElement {
    if c < 0 || (c == 0 && a < 0) {
        GroupElement { a: -a, b: -b, c: -c, d: -d }
    } else {
        GroupElement { a, b, c, d }
    }
}

/// Sign-normalise an integer matrix of determinant one.
pub fn canonicalize(a: i64, b: i64, c: i64, d: i64) -> Result<GroupElement> {
    let det = (a as i128) * (d as i128) - (b as i128) * (c as i128);
    if det != 1 {
        return Err(Error::domain("canonicalize", format!("determinant {det} != 1")));
    }
    Ok(sign_normalize((a, b, c, d)))
}

/// Möbius action `(az+b)/(cz+d)`.
pub fn mobius_apply(g: &GroupElement, z: &Point) -> Point {
    let (a, b, c, d) = (g.a as f64, g.b as f64, g.c as f64, g.d as f64);
    let den_re = c * z.x + d;
    let den_im = c * z.y;
    let den2 = den_re * den_re + den_im * den_im;
    let num_re = a * z.x + b;
    let num_im = a * z.y;
    let x = (num_re * den_re + num_im * den_im) / den2;
    // y' = y / |cz+d|^2 keeps the height exactly positive.
    let y = z.y / den2;
    Point { x, y }
}

/// `cosh d(z,w) - 1`, computed without cancellation.
pub fn cosh_distance_minus_one(z: &Point, w: &Point) -> f64 {
    let dx = z.x - w.x;
    let dy = z.y - w.y;
    (dx * dx + dy * dy) / (2.0 * z.y * w.y)
}

/// Hyperbolic distance, `2 asinh(|z-w| / (2 sqrt(Im z Im w)))`.
pub fn hyp_distance(z: &Point, w: &Point) -> f64 {
    let dx = z.x - w.x;
    let dy = z.y - w.y;
    let r = dx.hypot(dy) / (2.0 * (z.y * w.y).sqrt());
    2.0 * r.asinh()
}

/// Reduce to the standard fundamental domain `|Re z| <= 1/2, |z| >= 1`.
///
/// Returns `(z*, g)` with `g z = z*`. On the boundary the side with
/// `Re z* <= 0` is chosen.
pub fn reduce_fund_domain(z: &Point) -> (Point, GroupElement) {
    let mut g = GroupElement::IDENTITY;
    let mut p = *z;
    for _ in 0..10_000 {
        let n = (p.x + 0.5).floor();
        if n != 0.0 {
            let t = GroupElement::translation(-(n as i64));
            p = mobius_apply(&t, &p);
            g = t.compose(&g);
        }
        // Translation leaves x in [-1/2, 1/2).
        let r2 = p.x * p.x + p.y * p.y;
        if r2 < 1.0 {
            p = mobius_apply(&GroupElement::S, &p);
            g = GroupElement::S.compose(&g);
            continue;
        }
        break;
    }
    // Tie on the unit circle: map x > 0 to the mirror point with x < 0.
    let r2 = p.x * p.x + p.y * p.y;
    if r2 == 1.0 && p.x > 0.0 {
        p = mobius_apply(&GroupElement::S, &p);
        g = GroupElement::S.compose(&g);
    }
    (p, g)
}
