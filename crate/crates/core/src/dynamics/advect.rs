use log::warn;
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{QpError, Result};
use crate::grid::PhaseGrid;
use crate::hamiltonian::Potential;
use crate::wave::PhaseWaveFunction;

use super::characteristics::rk4_displacement;
use super::flow::PhaseFlowField;
use super::interp::Interpolation;

/// Departure-point stencil of one node. Out-of-range entries carry zero weight.
#[derive(Debug, Clone, Copy, Default)]
struct NodeStencil {
    wq: [f64; 6],
    wp: [f64; 6],
    rows: [u32; 6],
    cols: [u32; 6],
}

/// Semi-Lagrangian stepper for a fixed flow and time step. Departure points and
/// interpolation weights are computed once and reused for every step.
#[derive(Debug, Clone)]
pub struct SemiLagrangian {
    grid: PhaseGrid,
    dt: f64,
    interpolation: Interpolation,
    len: usize,
    stencils: Vec<NodeStencil>,
}

fn axis_stencil(
    x: f64,
    n: usize,
    periodic: bool,
    kind: Interpolation,
) -> Option<([f64; 6], [u32; 6])> {
    let (offset, len) = kind.support();
    let last = (n - 1) as f64;
    let x = if periodic {
        x.rem_euclid(n as f64)
    } else {
        const SLACK: f64 = 1e-9;
        if x < -SLACK || x > last + SLACK {
            return None;
        }
        x.clamp(0.0, last)
    };
    let base = x.floor();
    let mut w = kind.weights(x - base);
    let mut idx = [0u32; 6];
    for k in 0..len {
        let m = base as isize + offset + k as isize;
        if periodic {
            idx[k] = m.rem_euclid(n as isize) as u32;
        } else if (0..n as isize).contains(&m) {
            idx[k] = m as u32;
        } else {
            w[k] = 0.0;
        }
    }
    Some((w, idx))
}

impl SemiLagrangian {
    pub fn new(flow: &PhaseFlowField, dt: f64, interpolation: Interpolation) -> Self {
        let grid = *flow.grid();
        let cells = flow.max_speed_cells(dt.abs());
        // Without a force the characteristics are straight and any step length is exact.
        let straight = flow
            .hamiltonian()
            .is_some_and(|h| matches!(h.potential, Potential::Zero | Potential::Constant(_)));
        if cells > 2.0 && !straight {
            warn!("departure points move up to {cells:.2} cells per step");
        }
        let (nq, np) = grid.shape();
        let (_, len) = interpolation.support();
        let stencils = (0..nq * np)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / np, k % np);
                let (dq, dp) = rk4_displacement(flow, (grid.q_at(i), grid.p_at(j)), -dt);
                let x = i as f64 + dq / grid.dq();
                let y = j as f64 + dp / grid.dp();
                match (
                    axis_stencil(x, nq, grid.is_periodic_q(), interpolation),
                    axis_stencil(y, np, false, interpolation),
                ) {
                    (Some((wq, rows)), Some((wp, cols))) => NodeStencil { wq, wp, rows, cols },
                    _ => NodeStencil::default(),
                }
            })
            .collect();
        Self {
            grid,
            dt,
            interpolation,
            len,
            stencils,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn step(&self, psi: &PhaseWaveFunction) -> PhaseWaveFunction {
        assert_eq!(
            psi.grid(),
            &self.grid,
            "state and stepper live on different grids"
        );
        let np = self.grid.n_p();
        let src = psi.values().as_standard_layout();
        let src = src.as_slice().expect("standard layout");
        let len = self.len;
        let mut out = vec![Complex64::new(0.0, 0.0); self.stencils.len()];
        out.par_chunks_mut(np).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                let s = &self.stencils[i * np + j];
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..len {
                    if s.wq[a] == 0.0 {
                        continue;
                    }
                    let base = s.rows[a] as usize * np;
                    let mut inner = Complex64::new(0.0, 0.0);
                    for b in 0..len {
                        inner += src[base + s.cols[b] as usize] * s.wp[b];
                    }
                    acc += inner * s.wq[a];
                }
                *v = acc;
            }
        });
        let values = Array2::from_shape_vec(self.grid.shape(), out).expect("shape");
        PhaseWaveFunction::from_parts_unchecked(self.grid, values, psi.hbar())
    }

    /// Runs `steps` steps, recording a snapshot every `snapshot_every` steps and at the end.
    pub fn evolve(
        &self,
        psi0: &PhaseWaveFunction,
        steps: usize,
        snapshot_every: usize,
        opts: &EvolveOptions,
    ) -> Result<EvolutionRecord> {
        let every = snapshot_every.max(1);
        let n0 = psi0.norm_squared();
        let mut norm2 = Vec::with_capacity(steps + 1);
        norm2.push(n0);
        let mut snapshots = vec![Snapshot::capture(0, 0.0, psi0, opts)];
        let mut psi = psi0.clone();
        for k in 1..=steps {
            psi = self.step(&psi);
            norm2.push(psi.norm_squared());
            if let Some(limit) = opts.leak_limit {
                let edge = edge_mass(&psi, opts.edge_cells);
                if edge > limit {
                    return Err(QpError::BoundaryLeak {
                        edge_mass: edge,
                        limit,
                    });
                }
            }
            if k % every == 0 || k == steps {
                snapshots.push(Snapshot::capture(k, k as f64 * self.dt, &psi, opts));
            }
        }
        Ok(EvolutionRecord {
            dt: self.dt,
            steps,
            snapshots,
            norm2,
            final_state: psi,
        })
    }
}

/// One semi-Lagrangian step with the default kernel.
pub fn advect_step(psi: &PhaseWaveFunction, flow: &PhaseFlowField, dt: f64) -> PhaseWaveFunction {
    SemiLagrangian::new(flow, dt, Interpolation::default()).step(psi)
}

pub fn advect_step_with(
    psi: &PhaseWaveFunction,
    flow: &PhaseFlowField,
    dt: f64,
    interpolation: Interpolation,
) -> PhaseWaveFunction {
    SemiLagrangian::new(flow, dt, interpolation).step(psi)
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub interpolation: Interpolation,
    /// Keep full states in the snapshots, not just their metrics.
    pub keep_states: bool,
    /// Width of the edge band used by the leak monitor.
    pub edge_cells: usize,
    /// Abort with [`QpError::BoundaryLeak`] when the edge band holds more than this fraction.
    pub leak_limit: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            interpolation: Interpolation::default(),
            keep_states: true,
            edge_cells: 3,
            leak_limit: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub norm2: f64,
    pub edge_mass: f64,
    pub state: Option<PhaseWaveFunction>,
}

impl Snapshot {
    fn capture(step: usize, time: f64, psi: &PhaseWaveFunction, opts: &EvolveOptions) -> Self {
        Self {
            step,
            time,
            norm2: psi.norm_squared(),
            edge_mass: edge_mass(psi, opts.edge_cells),
            state: opts.keep_states.then(|| psi.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    pub dt: f64,
    pub steps: usize,
    pub snapshots: Vec<Snapshot>,
    /// norm² after every step, starting with the initial state.
    pub norm2: Vec<f64>,
    pub final_state: PhaseWaveFunction,
}

impl EvolutionRecord {
    /// `max_k |n_k − n_0| / n_0` over every step.
    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.norm2[0];
        self.norm2
            .iter()
            .fold(0.0_f64, |m, n| m.max((n - n0).abs()))
            / n0
    }

    /// Relative drift at each snapshot.
    pub fn norm_drift(&self) -> Vec<f64> {
        let n0 = self.norm2[0];
        self.snapshots.iter().map(|s| (s.norm2 - n0) / n0).collect()
    }
}

/// Evolves `psi0` to `t_final`. The step is adjusted to `t_final / round(t_final / dt)`.
pub fn evolve(
    psi0: &PhaseWaveFunction,
    flow: &PhaseFlowField,
    t_final: f64,
    dt: f64,
    snapshot_every: usize,
    opts: &EvolveOptions,
) -> Result<EvolutionRecord> {
    if !(t_final > 0.0) || !(dt > 0.0) {
        return Err(QpError::InvalidParameter(format!(
            "need t_final > 0 and dt > 0, got {t_final}, {dt}"
        )));
    }
    psi0.grid().ensure_same(flow.grid())?;
    let steps = (t_final / dt).round().max(1.0) as usize;
    let h = t_final / steps as f64;
    if (h - dt).abs() > 1e-9 * dt {
        warn!("time step adjusted from {dt} to {h} to land on t_final");
    }
    SemiLagrangian::new(flow, h, opts.interpolation).evolve(psi0, steps, snapshot_every, opts)
}

/// Fraction of norm² held within `cells` nodes of a truncated edge.
pub fn edge_mass(psi: &PhaseWaveFunction, cells: usize) -> f64 {
    let g = psi.grid();
    let (nq, np) = g.shape();
    let total = psi.norm_squared();
    if total <= 0.0 {
        return 0.0;
    }
    let wq = g.q.weights();
    let wp = g.p.weights();
    let near = |k: usize, n: usize| k < cells || k + cells >= n;
    let mut edge = 0.0;
    for i in 0..nq {
        let q_edge = !g.is_periodic_q() && near(i, nq);
        for j in 0..np {
            if q_edge || near(j, np) {
                edge += psi.values()[[i, j]].norm_sqr() * wq[i] * wp[j];
            }
        }
    }
    edge / total
}
