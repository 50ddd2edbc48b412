//! High-order discontinuous Galerkin spectral element solver for the 3D
//! compressible Navier-Stokes equations.
//!
//! Two large-eddy-simulation formulations share one code base:
//!
//! * explicit LES: weak-form DGSEM on Gauss nodes with the Vreman
//!   eddy-viscosity model evaluated at every solution node;
//! * implicit LES: split-form flux differencing on Gauss-Lobatto nodes
//!   (summation-by-parts) built from Kennedy-Gruber two-point fluxes, with no
//!   explicit subgrid model.
//!
//! The crate also carries the supporting toolbox: curvilinear hexahedral
//! meshes with free-stream-preserving metric terms, BR1 viscous terms,
//! low-storage RK3 time integration, running turbulence statistics, surface
//! and force coefficients, Welch power spectral densities, and a CFL-ramp
//! benchmark harness.

pub mod basis;
pub mod bench;
pub mod error;
pub mod mesh;
pub mod physics;
pub mod solver;
pub mod spectral;
pub mod stats;
pub mod tensor;
pub mod vtk;

pub use error::{Error, Result};
