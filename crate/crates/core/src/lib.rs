//! Spin-1/2 dynamics in double-well optical superlattices.

pub mod cli;
pub mod ed;
pub mod mps;
pub mod model;
pub mod observables;
pub mod purification;
pub mod simulation;
pub mod spin;
pub mod vbs;
