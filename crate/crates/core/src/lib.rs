//! Graph neural Runge-Kutta surrogates for differential equations on graphs
//! and nonuniform grids, together with the classical explicit Runge-Kutta
//! machinery that produces their training data.

pub mod dataset;
pub mod domain;
pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod nn;
pub mod rng;
pub mod solver;
pub mod systems;

pub use error::{Error, Result};
