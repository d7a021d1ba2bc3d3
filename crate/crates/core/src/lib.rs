//! Periodic orbits, ghost orbits and their integer weights.

pub mod census;
pub mod flow;
pub mod holonomy;
pub mod homotopy;
pub mod lefschetz;
pub mod linalg;
