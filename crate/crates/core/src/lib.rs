//! Equation-based steady-state initialization engine for thermo-fluid
//! power-plant models.
//!
//! Component models contribute residual equations with homotopy-simplified
//! counterparts to a flat nonlinear system; structural analysis (reduction,
//! matching, BLT sorting, tearing) splits it into small blocks, and an
//! adaptive homotopy continuation drives a scaled damped Newton solver from
//! the simplified system at lambda = 0 to the actual one at lambda = 1.

pub mod boundary;
pub mod config;
pub mod components;
pub mod eqsys;
pub mod media;
pub mod plant;
pub mod report;
pub mod run;
pub mod solver;
pub mod structure;
