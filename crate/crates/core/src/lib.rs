//! Weighted randomized sparse Kaczmarz solvers for sparse solutions of
//! consistent linear systems `Ax = b`.

pub mod bench;
pub mod bregman;
pub mod error;
pub mod io;
pub mod linalg;
pub mod problem;
pub mod rng;
pub mod sampling;
pub mod solver;
pub mod theory;

pub use error::{Error, Result};
