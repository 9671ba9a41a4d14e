//! Exact-arithmetic and numerical-verification toolkit for the higher-order
//! Q-curvature problem.
//!
//! The crate computes, cross-checks and tabulates the constants, closed-form
//! integrals, operator expansions and asymptotic energy expansions that enter
//! the existence theory for the GJMS equation `P_{2k} u = f |u|^{2*_k - 2} u`,
//! and decides the existence criteria for user-supplied pointwise data.
//!
//! Modules:
//! - [`exactnum`]: rationals extended by half-integer powers of π, with
//!   Gamma/Beta at half-integer arguments, sphere volumes and Faulhaber sums.
//! - [`constants`]: the named constants `c(n,k,l)`, `C(n,k)`, `c(n,k)`,
//!   `b_{n,k}`, the mass coefficient and the curvature-trace table, plus an
//!   exhaustive positivity scanner.
//! - [`radial`]: closed-form radial calculus for the bubble
//!   `U(x) = (1+|x|²)^{-(n-2k)/2}`, moment integrals, sphere moments and
//!   δ-contraction combinatorics, with an adaptive quadrature oracle.
//! - [`opalg`]: a graded noncommutative rewriting engine that assembles
//!   `P_{2k}` from Juhl's formula and reduces it to Δ-leading normal form.
//! - [`energy`]: assembly of the asymptotic energy expansions, the sharp
//!   threshold `Λ(n,k)` and the existence certifier.
//! - [`sphere`]: GJMS spectra on the round sphere, coercivity, sharpness of
//!   the threshold and a zonal-series probe of Green's function positivity.
//!
//! See the book under `book/` for a guided tour.

pub mod constants;
pub mod energy;
pub mod error;
pub mod exactnum;
pub mod opalg;
pub mod quad;
pub mod radial;
pub mod sphere;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
