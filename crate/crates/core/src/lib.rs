//! Numerical machinery for a point scatterer (delta potential) on the modular
//! surface `PSL(2,Z)\H`.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] – upper half-plane points, Möbius action, reduction to the
//!   standard fundamental domain.
//! * [`orbits`] – enumeration of group elements by displacement of a base point.
//! * [`special`] – digamma, log-gamma, completed zeta, K-Bessel, Legendre Q.
//! * [`eisenstein`] – the Eisenstein series and scattering coefficient.
//! * [`green`] – Green's functions, the spectral function in its orbit-sum form,
//!   renormalised coupling and extension phase.
//! * [`maass`] – Maass form datasets, the spectral expansion on the critical line,
//!   perturbed Eisenstein series and eigenvalue location.
//! * [`transform`] – test functions and the integral transforms of the trace formula.
//! * [`residue`] – contour integration of logarithmic derivatives with planted spectra.
//! * [`trace`] – assembly of both sides of the trace formula with an error budget.

pub mod eisenstein;
pub mod error;
pub mod geometry;
pub mod green;
pub mod maass;
pub mod orbits;
pub mod quad;
pub mod residue;
pub mod special;
pub mod trace;
pub mod transform;

pub use error::{Error, Result};

/// Complex double used throughout.
pub type C64 = num_complex::Complex64;

/// Version tag mixed into cache keys and report headers.
pub const CODE_VERSION: &str = concat!("pscatter-", env!("CARGO_PKG_VERSION"), "-f1");

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
