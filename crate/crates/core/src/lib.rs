//! Spectral lab for the kinetic Brownian motion generator on surfaces of
//! constant curvature, reduced to tridiagonal blocks indexed by a Laplace
//! eigenvalue `eta` of the base surface.

// NaN must fail range checks, so `!(x > 0.0)` is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod config;
pub mod eig;
pub mod error;
pub mod ladder;
pub mod operator;
pub mod perturb;
pub mod run;
pub mod spectra;

pub use error::{Error, Result};
