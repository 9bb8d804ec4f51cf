//! Inexact regularized L-shaped method for two-stage stochastic linear
//! programs with fixed recourse.

pub mod bench;
pub mod bounds;
pub mod bundle;
pub mod instance;
pub mod linalg;
pub mod lp;
pub mod lshaped;
pub mod master;
pub mod oracle;
pub mod smps;
