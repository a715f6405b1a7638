//! Sensitivity of a microwave-dressed Rydberg-atom electrometer read out with
//! coherent or squeezed light.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constants;
pub mod detection;
pub mod doppler;
pub mod engine;
pub mod error;
pub mod medium;
pub mod numeric;
pub mod spectrum;

pub use error::{Error, Result};
