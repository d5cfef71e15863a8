//! Linear stability of steady ZND detonations through the Evans-Lopatinski
//! determinant.
//!
//! The determinant is evaluated by shooting in the reaction coordinate `y`,
//! where the reactant profile is exactly `Y(y) = Y0 e^{K y}` and the gas state
//! follows in closed form from the Rankine-Hugoniot relations. Three shooting
//! schemes are provided ([`evans::evans_neutral`], [`evans::evans_erpenbeck`],
//! [`evans::evans_lee_stewart`]); [`stability`] counts unstable modes by the
//! argument principle and follows roots under parameter changes, and
//! [`modelbench`] benchmarks the integration strategies on a two-dimensional
//! model problem with a known answer.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evans;
pub mod modelbench;
pub mod numerics;
pub mod spectral;
pub mod stability;
pub mod znd;

pub use error::{Error, Result};
