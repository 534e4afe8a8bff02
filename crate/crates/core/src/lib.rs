//! Small-amplitude doubly periodic gravity-capillary waves whose relative velocity is a
//! Beltrami field (`curl u = α u`), computed by Lyapunov–Schmidt reduction on a Fourier ×
//! Chebyshev discretisation.
//!
//! Layers, bottom up:
//! - [`model`] and [`spectral`]: constants, lattices, representations, transforms;
//! - [`dispersion`] and [`bifurcation`]: the dispersion relation and bifurcation points;
//! - [`modes`]: kernel elements of the linearised problem;
//! - [`flattened`]: the flattened nonlinear system, the curl inverse and the reduced
//!   surface operator `H(η, c)`;
//! - [`reduction`]: the nonlinear wave solver;
//! - [`two_half`]: 2½-dimensional waves and their stream functions.

pub mod bifurcation;
pub mod dispersion;
pub mod error;
pub mod flattened;
pub mod model;
pub mod modes;
pub mod reduction;
pub mod spectral;
pub mod two_half;

pub use error::{Error, Result};
pub use model::{Field3D, LaminarFlow, Lattice, PhysicalParams, SpectralModel, SurfaceProfile, Vec2};
