pub mod bath;
pub mod error;
pub mod fcs;
pub mod model;
pub mod ode;
pub mod propagator;
pub mod selftest;
pub mod pulse;
pub mod steady;
pub mod sweep;
pub mod thermo;
pub mod units;
pub mod unravel;

pub use error::{Error, Result};
