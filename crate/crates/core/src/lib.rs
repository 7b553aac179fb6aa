//! Ranging sidelobe analysis for random communication-centric ISAC waveforms.
//!
//! A block of `N` i.i.d. constellation symbols `s` is spread over an
//! orthonormal signaling basis `U` to give the transmitted block `x = U s`.
//! Because the symbols are random, the auto-correlation of `x` is random too.
//! This crate computes its per-lag second moments three ways:
//!
//! - empirically, by seeded Monte Carlo over symbol draws ([`acf`]);
//! - in closed form, from the constellation kurtosis and the basis ([`closed_form`]);
//! - through a matched-filter two-target ranging experiment ([`ranging`]).
//!
//! [`optimality`] holds numerical checks of the OFDM/single-carrier optimality
//! results (complex-permutation structure, Doppler duality, and the geodesic
//! stationarity of OFDM for the aperiodic objective).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acf;
pub mod basis;
pub mod closed_form;
pub mod constellation;
pub mod dft;
mod error;
pub mod optimality;
pub mod ranging;
pub mod parse;
pub mod stats;

pub use acf::{AcfMode, AcfProfile, ProfileSource};
pub use basis::{Scheme, ShiftMatrix, UnitaryBasis};
pub use closed_form::ClosedFormReport;
pub use constellation::{Constellation, KurtosisClass, MomentMatrix, SymbolSource};
pub use error::{Error, Result};

pub use num_complex::Complex64;
