//! Forced-response curves of nonlinear mechanical systems from two-dimensional
//! spectral submanifolds, with a periodic-orbit shooting oracle.

pub mod error;
pub mod forced;
pub mod io;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod response;
pub mod spectral;
pub mod ssm;

pub use error::{Error, Result};
