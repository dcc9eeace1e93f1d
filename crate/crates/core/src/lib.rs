//! Synthesis of one-dimensional spring networks whose continuum limit is a
//! prescribed higher-gradient elastic medium, together with the numerical
//! machinery to check that limit: lattice operators, time integration,
//! continuum reference solutions and convergence sweeps.

pub mod continuum;
pub mod convergence;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod model;
pub mod scenario;
pub mod selftest;
pub mod synthesis;

pub use error::{Error, Result};
