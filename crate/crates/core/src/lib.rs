//! Phase-space wave mechanics: complex fields `ψ(q, p)` transported along the
//! half-speed Hamiltonian flow, an operator calculus on them, harmonic-oscillator
//! stationary states, and a Crank–Nicolson Schrödinger solver for cross-checks.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod operators;
pub mod oracle;
pub mod polar;
pub mod scenarios;
pub mod separable;
pub mod stationary;
pub mod stencil;
pub mod wave;

pub use error::{QpError, Result};
pub use grid::{Axis, BoundaryMode, PhaseGrid};
pub use hamiltonian::{HamiltonianModel, Kinetic, Potential, TabulatedPotential};
pub use polar::{assemble_polar, decompose_polar, PolarDecomposition};
pub use wave::PhaseWaveFunction;
