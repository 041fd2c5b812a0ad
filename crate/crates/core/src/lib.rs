// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod config;
pub mod constants;
pub mod decoherence;
pub mod error;
pub mod fitter;
pub mod ion;
pub mod lsq;
pub mod magnon;
pub mod spectrum;

pub use error::{Error, Result};

/// Version of the configuration and output-file layout.
pub const SCHEMA_VERSION: u32 = 1;
