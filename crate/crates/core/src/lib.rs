//! Numerical toolkit for operational quantum theory: quantum operations in
//! Kraus and Choi form, purification and Stinespring dilation, Haar twirls,
//! falsification tests with an alternating-projection falsifier search, and
//! a small circuit language evaluated with the Born rule.

pub mod circuit;
pub mod cli;
pub mod dilation;
pub mod error;
pub mod falsification;
pub mod linalg;
pub mod model;
pub mod parallel;

pub use error::{Error, Result};
