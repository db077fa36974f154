use ndarray::{Array2, Zip};

use crate::error::{QpError, Result};
use crate::grid::PhaseGrid;
use crate::hamiltonian::{HamiltonianModel, Kinetic, Potential};
use crate::stencil;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowRegime {
    NonRelativistic,
    Relativistic { c: f64, branch_sign: f64 },
}

/// Coordinate metric for the relativistic flow. Only unit Lamé coefficients are supported.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Cartesian,
    Lame(Vec<f64>),
}

#[derive(Debug, Clone)]
enum Source {
    Hamiltonian(HamiltonianModel),
    Nodal,
}

/// Advection velocity `V = (V_q, V_p)` sampled at the nodes, plus the closed form
/// used for off-node evaluation when one exists.
#[derive(Debug, Clone)]
pub struct PhaseFlowField {
    grid: PhaseGrid,
    vq: Array2<f64>,
    vp: Array2<f64>,
    regime: FlowRegime,
    source: Source,
    flagged_q_nodes: Vec<usize>,
}

/// `(√(c²p² + m₀²c⁴) − m₀c²)/p`, written without the cancellation. Zero at `p = 0`.
pub fn relativistic_phase_velocity(p: f64, rest_mass: f64, c: f64) -> Result<f64> {
    check_relativistic(rest_mass, c)?;
    let mc2 = rest_mass * c * c;
    Ok(c * c * p / ((c * c * p * p + mc2 * mc2).sqrt() + mc2))
}

/// The same quantity parametrised by particle speed: `c²(1 − √(1 − v²/c²))/v`.
pub fn phase_velocity_from_speed(v: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(QpError::InvalidParameter(format!(
            "c must be positive, got {c}"
        )));
    }
    if v.abs() >= c {
        return Err(QpError::InvalidParameter(format!(
            "|v| = {} must stay below c = {c}",
            v.abs()
        )));
    }
    let b = v / c;
    Ok(v / (1.0 + (1.0 - b * b).sqrt()))
}

/// Momentum of a particle with speed `v`.
pub fn relativistic_momentum(v: f64, rest_mass: f64, c: f64) -> Result<f64> {
    check_relativistic(rest_mass, c)?;
    if v.abs() >= c {
        return Err(QpError::InvalidParameter(format!(
            "|v| = {} must stay below c = {c}",
            v.abs()
        )));
    }
    Ok(rest_mass * v / (1.0 - (v / c).powi(2)).sqrt())
}

fn check_relativistic(m: f64, c: f64) -> Result<()> {
    if !(m > 0.0) {
        return Err(QpError::InvalidParameter(format!(
            "rest mass must be positive, got {m}"
        )));
    }
    if !(c > 0.0) {
        return Err(QpError::InvalidParameter(format!(
            "c must be positive, got {c}"
        )));
    }
    Ok(())
}

/// Half-speed Hamiltonian flow `V = (½∂H/∂p, −½∂H/∂q)`.
pub fn build_flow(h: &HamiltonianModel, grid: &PhaseGrid) -> PhaseFlowField {
    PhaseFlowField::from_hamiltonian(h.clone(), *grid, FlowRegime::NonRelativistic)
}

/// Flow whose q component is the relativistic phase velocity, times `branch_sign`.
pub fn build_relativistic_flow(
    h: &HamiltonianModel,
    grid: &PhaseGrid,
    branch_sign: f64,
    metric: &Metric,
) -> Result<PhaseFlowField> {
    if let Metric::Lame(g) = metric {
        if g.iter().any(|&gi| gi != 1.0) {
            return Err(QpError::Unsupported(
                "curvilinear metrics are not implemented".into(),
            ));
        }
    }
    if branch_sign != 1.0 && branch_sign != -1.0 {
        return Err(QpError::InvalidParameter(format!(
            "branch_sign must be ±1, got {branch_sign}"
        )));
    }
    let Kinetic::Relativistic { c } = h.kinetic else {
        return Err(QpError::InvalidParameter(
            "relativistic flow needs a relativistic kinetic term".into(),
        ));
    };
    Ok(PhaseFlowField::from_hamiltonian(
        h.clone(),
        *grid,
        FlowRegime::Relativistic { c, branch_sign },
    ))
}

impl PhaseFlowField {
    fn from_hamiltonian(h: HamiltonianModel, grid: PhaseGrid, regime: FlowRegime) -> Self {
        let mut vq = Array2::zeros(grid.shape());
        let mut vp = Array2::zeros(grid.shape());
        Zip::indexed(&mut vq)
            .and(&mut vp)
            .par_for_each(|(i, j), a, b| {
                let (x, y) = analytic_velocity(&h, regime, grid.q_at(i), grid.p_at(j));
                *a = x;
                *b = y;
            });
        let flagged_q_nodes = match &h.potential {
            Potential::Tabulated(t) => (0..grid.n_q())
                .filter(|&i| t.gradient_flagged(grid.q_at(i)))
                .collect(),
            _ => Vec::new(),
        };
        Self {
            grid,
            vq,
            vp,
            regime,
            source: Source::Hamiltonian(h),
            flagged_q_nodes,
        }
    }

    /// Flow given only by nodal values; off-node velocities are bilinear.
    pub fn from_nodal(grid: PhaseGrid, vq: Array2<f64>, vp: Array2<f64>) -> Result<Self> {
        if vq.dim() != grid.shape() || vp.dim() != grid.shape() {
            return Err(QpError::GridMismatch(
                "velocity arrays differ from grid shape".into(),
            ));
        }
        Ok(Self {
            grid,
            vq,
            vp,
            regime: FlowRegime::NonRelativistic,
            source: Source::Nodal,
            flagged_q_nodes: Vec::new(),
        })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn vq(&self) -> &Array2<f64> {
        &self.vq
    }

    pub fn vp(&self) -> &Array2<f64> {
        &self.vp
    }

    pub fn regime(&self) -> FlowRegime {
        self.regime
    }

    pub fn hamiltonian(&self) -> Option<&HamiltonianModel> {
        match &self.source {
            Source::Hamiltonian(h) => Some(h),
            Source::Nodal => None,
        }
    }

    /// q indices where the potential gradient came from a one-sided stencil or
    /// lies outside the tabulation.
    pub fn flagged_q_nodes(&self) -> &[usize] {
        &self.flagged_q_nodes
    }

    /// Velocity at an arbitrary point.
    pub fn velocity(&self, q: f64, p: f64) -> (f64, f64) {
        match &self.source {
            Source::Hamiltonian(h) => analytic_velocity(h, self.regime, q, p),
            Source::Nodal => (self.bilinear(&self.vq, q, p), self.bilinear(&self.vp, q, p)),
        }
    }

    /// Whether `velocity` is trustworthy at `(q, p)`.
    pub fn in_domain(&self, q: f64, p: f64) -> bool {
        match &self.source {
            Source::Hamiltonian(h) => h.in_domain(q),
            Source::Nodal => {
                let g = &self.grid;
                (g.is_periodic_q() || (q >= g.q.min && q <= g.q.max))
                    && p >= g.p.min
                    && p <= g.p.max
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        self.vq.iter().chain(self.vp.iter()).all(|&v| v == 0.0)
    }

    pub fn max_speed_cells(&self, dt: f64) -> f64 {
        let mq = self.vq.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mp = self.vp.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        (mq * dt / self.grid.dq()).max(mp * dt / self.grid.dp())
    }

    fn bilinear(&self, field: &Array2<f64>, q: f64, p: f64) -> f64 {
        let g = &self.grid;
        let (nq, np) = g.shape();
        let mut x = g.q.index_of(q);
        if g.is_periodic_q() {
            x = x.rem_euclid(nq as f64);
        } else {
            x = x.clamp(0.0, (nq - 1) as f64);
        }
        let y = g.p.index_of(p).clamp(0.0, (np - 1) as f64);
        let i = (x.floor() as usize).min(nq - 1);
        let j = (y.floor() as usize).min(np - 2);
        let i1 = if g.is_periodic_q() {
            (i + 1) % nq
        } else {
            (i + 1).min(nq - 1)
        };
        let (a, b) = (x - i as f64, y - j as f64);
        field[[i, j]] * (1.0 - a) * (1.0 - b)
            + field[[i1, j]] * a * (1.0 - b)
            + field[[i, j + 1]] * (1.0 - a) * b
            + field[[i1, j + 1]] * a * b
    }
}

fn analytic_velocity(h: &HamiltonianModel, regime: FlowRegime, q: f64, p: f64) -> (f64, f64) {
    let vp = -0.5 * h.dh_dq(q);
    let vq = match regime {
        FlowRegime::NonRelativistic => 0.5 * h.dh_dp(p),
        FlowRegime::Relativistic { c, branch_sign } => {
            let mc2 = h.mass * c * c;
            branch_sign * c * c * p / ((c * c * p * p + mc2 * mc2).sqrt() + mc2)
        }
    };
    (vq, vp)
}

/// Largest `|∂V_q/∂q + ∂V_p/∂p|` over nodes where both derivatives are centred.
pub fn divergence_max(flow: &PhaseFlowField) -> f64 {
    let g = flow.grid();
    let div = stencil::d_dq(flow.vq(), g) + stencil::d_dp(flow.vp(), g);
    let edge = stencil::one_sided_mask(g);
    div.iter()
        .zip(edge.iter())
        .filter(|(_, e)| !**e)
        .fold(0.0_f64, |m, (d, _)| m.max(d.abs()))
}
