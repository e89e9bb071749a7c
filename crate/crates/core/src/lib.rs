//! Semi-infinite Ising model with a wall and a decaying external field:
//! exact oracles, Monte Carlo samplers and graphical representations.

pub mod check;
pub mod error;
pub mod exact;
pub mod graphical;
pub mod io;
pub mod lattice;
pub mod model;
pub mod monotone;
pub mod quadrature;
pub mod rng;
pub mod spin_mc;
pub mod stats;
pub mod thermo;

pub use error::{Error, Result};
