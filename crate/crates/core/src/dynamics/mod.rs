//! Transport of phase-space wave functions along the half-speed Hamiltonian flow.

mod advect;
mod characteristics;
mod flow;
mod interp;

pub use advect::{
    advect_step, advect_step_with, edge_mass, evolve, EvolutionRecord, EvolveOptions,
    SemiLagrangian, Snapshot,
};
pub use characteristics::{orbit_period, rk4_step, trace_characteristic, PhasePoint};
pub use flow::{
    build_flow, build_relativistic_flow, divergence_max, phase_velocity_from_speed,
    relativistic_momentum, relativistic_phase_velocity, FlowRegime, Metric, PhaseFlowField,
};
pub use interp::Interpolation;
