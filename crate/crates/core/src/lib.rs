//! Self-similar fundamental solution of the space-fractional diffusion
//! equation `u_t = d/dx D^alpha_C u` on the half-line, and numerical
//! verification of its decay estimates.
//!
//! Module map:
//! - [`profile`]: the profile function `Phi` (Mittag-Leffler series plus a
//!   weakly singular Volterra continuation) and its derivative.
//! - [`fracops`]: discrete Riemann–Liouville / Caputo operators.
//! - [`fundamental`]: normalization `a0` and evaluation of `E_t(x)`.
//! - [`representation`]: Dirichlet/Neumann solutions `w1`, `w2` and `L^p` norms.
//! - [`analysis`]: bound checks, weak-(1,1) level sets and decay-rate fits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod fracops;
pub mod fundamental;
pub mod grid;
pub mod io;
pub mod order;
pub mod profile;
pub mod quad;
pub mod representation;
pub mod special;
pub mod tail;

pub use error::{Error, Result};
pub use fracops::SampledFunction;
pub use fundamental::FundamentalSolution;
pub use grid::RadialGrid;
pub use order::FracOrder;
pub use profile::ProfileTable;
pub use representation::InitialDatum;

#[cfg(test)]
pub(crate) mod test_support;
