//! Dependent Dirichlet and Pitman-Yor process priors for multi-object
//! tracking, with collapsed Gibbs inference and OSPA scoring.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ddp;
pub mod dpy;
pub mod error;
pub mod experiment;
pub mod gibbs;
pub mod metrics;
pub mod models;
pub mod partition;
pub mod prior;
pub mod simulate;

pub use error::{Error, Result};
