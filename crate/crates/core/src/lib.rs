// `!(x > 0.0)` is deliberate throughout: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod quadrature;

pub use error::{Error, Result};
pub mod hft;
pub mod filters;
pub mod spectral;
pub mod lattice;
pub mod fields;
pub mod frames;
pub mod concentration;
pub mod besov;
pub mod config;
pub mod report;
pub mod experiments;
