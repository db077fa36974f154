//! Two degrees of freedom as a product `ψ(x, pₓ)·φ(y, p_y)` under `H = Hₓ + H_y`.

use crate::dynamics::{build_flow, evolve, EvolveOptions};
use crate::error::Result;
use crate::hamiltonian::HamiltonianModel;
use crate::operators::{quantum_force, ObservableField};
use crate::wave::PhaseWaveFunction;

#[derive(Debug, Clone)]
pub struct SeparableState {
    pub x: PhaseWaveFunction,
    pub y: PhaseWaveFunction,
}

#[derive(Debug, Clone)]
pub struct SeparableHamiltonian {
    pub x: HamiltonianModel,
    pub y: HamiltonianModel,
}

impl SeparableState {
    pub fn norm_squared(&self) -> f64 {
        self.x.norm_squared() * self.y.norm_squared()
    }

    pub fn normalize(&self) -> Result<Self> {
        Ok(Self {
            x: self.x.normalize()?,
            y: self.y.normalize()?,
        })
    }

    /// Each factor is transported by its own flow.
    pub fn evolve(
        &self,
        h: &SeparableHamiltonian,
        t_final: f64,
        dt: f64,
        opts: &EvolveOptions,
    ) -> Result<Self> {
        let quiet = EvolveOptions {
            keep_states: false,
            ..opts.clone()
        };
        let fx = build_flow(&h.x, self.x.grid());
        let fy = build_flow(&h.y, self.y.grid());
        let x = evolve(&self.x, &fx, t_final, dt, usize::MAX, &quiet)?.final_state;
        let y = evolve(&self.y, &fy, t_final, dt, usize::MAX, &quiet)?.final_state;
        Ok(Self { x, y })
    }

    /// Components of the quantum force. The quantum potential of a product state is a
    /// sum of one term per factor, so each component sees only its own factor.
    pub fn quantum_force(
        &self,
        h: &SeparableHamiltonian,
    ) -> Result<(ObservableField, ObservableField)> {
        Ok((quantum_force(&self.x, &h.x)?, quantum_force(&self.y, &h.y)?))
    }
}
