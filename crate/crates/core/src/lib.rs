//! Hermitian four-well mode model whose outer wells act as feedback-controlled
//! particle reservoirs, so that the two middle wells follow the dynamics of a
//! PT-symmetric (balanced gain/loss) double well.
//!
//! Units inside the library are dimensionless with ħ = 1. For the abstract
//! scenarios energies are measured in units of the middle tunneling amplitude;
//! when parameters come from the optical trap ([`physical_map`]) energies are
//! in `E_l = ħ²/(m l²)`, lengths in `l` and times in `t_l = ħ/E_l`.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod four_mode;
pub mod init;
pub mod ode;
pub mod par;
pub mod physical_map;
pub mod quadrature;
pub mod roots;
pub mod scenario;
pub mod series;
pub mod simplex;
pub mod two_mode;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Shorthand for a purely real complex number.
#[inline]
pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}
