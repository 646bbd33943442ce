//! Simulation of a mirror levitated on three Fabry-Perot cavity optical
//! springs.
//!
//! A convex mirror floats on the radiation pressure of three tilted cavities
//! driven blue of resonance. This crate locates and characterizes the lattice
//! of stable radiation-pressure traps, computes the optical-spring mode
//! frequencies, integrates the mirror's motion (quasi-static and dynamic
//! cavity-field models), and evaluates the heating/cooling/noise budget and
//! gravimetric sensitivity of the levitated mirror.
//!
//! Entry points:
//! - [`model::SimulationConfig`] — parameters, config file I/O, defaults
//! - [`traps`] — equilibrium finder, lattice scan, extents, support power
//! - [`modes`] — stiffness eigenmodes and the frequency-vs-detuning sweep
//! - [`dynamics`] — trajectory integration
//! - [`budgets`] — gas, laser-noise, blackbody, cooling, gravimetry
//! - [`cli`] — the `levmirror` command-line front end
//!
//! The `examples/` directory has one runnable example per capability; start
//! with `cargo run --release --example find_trap`.

pub mod budgets;
pub mod cli;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod modes;
pub mod numerics;
pub mod optics;
pub mod potential;
pub mod traps;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use model::{
    BeamDrive, BeamParams, Environment, MirrorPose, MirrorSpec, SimulationConfig, TripodGeometry,
};
pub use traps::{Region, SolverOptions, TrapSite};
