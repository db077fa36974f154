//! Operators on phase-space wave functions and the fields derived from them.

use log::warn;
use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{QpError, Result};
use crate::hamiltonian::HamiltonianModel;
use crate::stencil;
use crate::wave::{integrate_complex, PhaseWaveFunction};

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseOperator {
    /// `iħ∂/∂t` from neighbouring snapshots.
    Energy,
    /// `−iħ∂/∂q`
    Momentum,
    /// `−iħ∂/∂p`
    Position,
    /// `Û = ½ṗ q̂ = (iħ/2)(∂H/∂q)∂/∂p`
    Virial(HamiltonianModel),
    /// `T̂ = ½q̇ p̂ = −(iħ/2)(∂H/∂p)∂/∂q`
    Kinetic(HamiltonianModel),
    /// `T̂ + Û`
    Composite(HamiltonianModel),
}

impl PhaseOperator {
    fn hermitian_expected(&self) -> bool {
        !matches!(self, PhaseOperator::Energy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeScheme {
    /// `iħ(ψ₊ − ψ₋)/(2Δt)`
    #[default]
    Centered,
    /// Local eigenphase `ħ·arg(ψ₋/ψ₊)/(2Δt)` times ψ; exact for stationary pairs.
    Eigenphase,
}

/// Snapshots at `t − dt` and `t + dt` around the state being operated on.
#[derive(Debug, Clone, Copy)]
pub struct TimeNeighbours<'a> {
    pub prev: &'a PhaseWaveFunction,
    pub next: &'a PhaseWaveFunction,
    pub dt: f64,
    pub scheme: TimeScheme,
}

pub fn apply(
    op: &PhaseOperator,
    psi: &PhaseWaveFunction,
    time: Option<&TimeNeighbours>,
) -> Result<Array2<Complex64>> {
    let g = psi.grid();
    let hbar = psi.hbar();
    let i_hbar = Complex64::new(0.0, hbar);
    match op {
        PhaseOperator::Momentum => Ok(stencil::d_dq(psi.values(), g).mapv(|d| -i_hbar * d)),
        PhaseOperator::Position => Ok(stencil::d_dp(psi.values(), g).mapv(|d| -i_hbar * d)),
        PhaseOperator::Kinetic(h) => {
            let mut d = stencil::d_dq(psi.values(), g);
            Zip::indexed(&mut d).par_for_each(|(_, j), v| *v *= -0.5 * i_hbar * h.dh_dp(g.p_at(j)));
            Ok(d)
        }
        PhaseOperator::Virial(h) => {
            let mut d = stencil::d_dp(psi.values(), g);
            Zip::indexed(&mut d).par_for_each(|(i, _), v| *v *= 0.5 * i_hbar * h.dh_dq(g.q_at(i)));
            Ok(d)
        }
        PhaseOperator::Composite(h) => {
            let t = apply(&PhaseOperator::Kinetic(h.clone()), psi, None)?;
            let u = apply(&PhaseOperator::Virial(h.clone()), psi, None)?;
            Ok(t + u)
        }
        PhaseOperator::Energy => {
            let n = time.ok_or(QpError::MissingSnapshots)?;
            if n.prev.grid() != g || n.next.grid() != g {
                return Err(QpError::GridMismatch(
                    "energy snapshots live on another grid".into(),
                ));
            }
            if !(n.dt > 0.0) {
                return Err(QpError::InvalidParameter(format!(
                    "snapshot spacing must be positive, got {}",
                    n.dt
                )));
            }
            let mut out = Array2::zeros(g.shape());
            match n.scheme {
                TimeScheme::Centered => {
                    let k = i_hbar / (2.0 * n.dt);
                    Zip::from(&mut out)
                        .and(n.prev.values())
                        .and(n.next.values())
                        .par_for_each(|o, a, b| {
                            *o = k * (b - a);
                        });
                }
                TimeScheme::Eigenphase => {
                    let k = hbar / (2.0 * n.dt);
                    Zip::from(&mut out)
                        .and(psi.values())
                        .and(n.prev.values())
                        .and(n.next.values())
                        .par_for_each(|o, v, a, b| *o = v * (k * (a * b.conj()).arg()));
                }
            }
            Ok(out)
        }
    }
}

/// Real nodal field with a validity mask.
#[derive(Debug, Clone)]
pub struct ObservableField {
    pub values: Array2<f64>,
    /// False where `|ψ|` is below the amplitude floor (or a stencil touched such a node).
    pub valid: Array2<bool>,
    /// True where a one-sided stencil was used.
    pub one_sided: Array2<bool>,
}

impl ObservableField {
    /// Largest `|value − f(q, p)|` over valid interior nodes.
    pub fn max_deviation<F: Fn(f64, f64) -> f64>(
        &self,
        grid: &crate::grid::PhaseGrid,
        f: F,
    ) -> f64 {
        let mut m = 0.0_f64;
        for ((i, j), v) in self.values.indexed_iter() {
            if self.valid[[i, j]] && !self.one_sided[[i, j]] {
                m = m.max((v - f(grid.q_at(i), grid.p_at(j))).abs());
            }
        }
        m
    }
}

fn above_floor(psi: &PhaseWaveFunction) -> Array2<bool> {
    let floor = psi.amplitude_floor();
    psi.values().mapv(|v| v.norm() > floor && v.norm() > 0.0)
}

/// `Re(L̂ψ/ψ)` on nodes above the amplitude floor.
pub fn observable(
    op: &PhaseOperator,
    psi: &PhaseWaveFunction,
    time: Option<&TimeNeighbours>,
) -> Result<ObservableField> {
    let l = apply(op, psi, time)?;
    let valid = above_floor(psi);
    let mut values = Array2::zeros(l.dim());
    Zip::from(&mut values)
        .and(&l)
        .and(psi.values())
        .and(&valid)
        .par_for_each(|o, a, v, ok| {
            if *ok {
                *o = (a / v).re;
            }
        });
    Ok(ObservableField {
        values,
        valid,
        one_sided: stencil::one_sided_mask(psi.grid()),
    })
}

/// `∬ψ*(L̂ψ) dq dp` including the imaginary part.
pub fn expectation_op_complex(
    op: &PhaseOperator,
    psi: &PhaseWaveFunction,
    time: Option<&TimeNeighbours>,
) -> Result<Complex64> {
    let l = apply(op, psi, time)?;
    let mut prod = Array2::zeros(l.dim());
    Zip::from(&mut prod)
        .and(psi.values())
        .and(&l)
        .par_for_each(|o, v, a| *o = v.conj() * a);
    Ok(integrate_complex(psi.grid(), &prod))
}

/// Real part of `∬ψ*(L̂ψ)`; warns when a Hermitian operator picks up an imaginary part.
pub fn expectation_op(
    op: &PhaseOperator,
    psi: &PhaseWaveFunction,
    time: Option<&TimeNeighbours>,
) -> Result<f64> {
    let n2 = psi.norm_squared();
    if (n2 - 1.0).abs() > 1e-6 {
        warn!("operator expectation on a state with norm² = {n2:.9}");
    }
    let z = expectation_op_complex(op, psi, time)?;
    if op.hermitian_expected() && z.im.abs() > 1e-8 {
        warn!("expectation of {op:?} has imaginary part {:.3e}", z.im);
    }
    Ok(z.re)
}

/// `U_q = Re((iħ/2)(∂H/∂q)∂_p ln ψ) − U(q)`.
pub fn quantum_potential(psi: &PhaseWaveFunction, h: &HamiltonianModel) -> Result<ObservableField> {
    let g = *psi.grid();
    let dp = stencil::d_dp(psi.values(), &g);
    let valid = above_floor(psi);
    let k = Complex64::new(0.0, 0.5 * psi.hbar());
    let mut values = Array2::zeros(g.shape());
    Zip::indexed(&mut values)
        .and(&dp)
        .and(psi.values())
        .and(&valid)
        .par_for_each(|(i, _), o, d, v, ok| {
            if *ok {
                let q = g.q_at(i);
                *o = (k * h.dh_dq(q) * (d / v)).re - h.potential_energy(q);
            }
        });
    Ok(ObservableField {
        values,
        valid,
        one_sided: stencil::one_sided_mask(&g),
    })
}

/// `F_q = −∂U_q/∂q`; a node is valid only if its whole q stencil is.
pub fn quantum_force(psi: &PhaseWaveFunction, h: &HamiltonianModel) -> Result<ObservableField> {
    let g = *psi.grid();
    let uq = quantum_potential(psi, h)?;
    let force = stencil::d_dq(&uq.values, &g).mapv(|d| -d);
    let (nq, np) = g.shape();
    let valid = Array2::from_shape_fn((nq, np), |(i, j)| {
        stencil::q_stencil_nodes(i, nq, g.is_periodic_q()).all(|m| uq.valid[[m, j]])
    });
    Ok(ObservableField {
        values: force,
        valid,
        one_sided: uq.one_sided,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumDiagnostic {
    /// `max |Re p̃|` with `p̃ = p̂ψ/ψ`.
    pub max_real: f64,
    /// `max |Im p̃|`.
    pub max_imag: f64,
    /// `max |(p̂²ψ)/ψ − (Re p̃)²|`.
    pub max_deviation: f64,
    /// `Re ∬ψ*(p̂²ψ)` normalised by `∬|ψ|²`.
    pub mean_square: f64,
    pub evaluated_nodes: usize,
}

/// Compares the double application `p̂(p̂ψ)` with the square of the momentum observable.
/// Evaluated on nodes above the amplitude floor whose two stencil passes were both centred.
pub fn momentum_consistency_diagnostic(psi: &PhaseWaveFunction) -> MomentumDiagnostic {
    let g = *psi.grid();
    let p1 = apply(&PhaseOperator::Momentum, psi, None).expect("momentum needs no snapshots");
    let tmp = PhaseWaveFunction::from_parts_unchecked(g, p1.clone(), psi.hbar());
    let p2 = apply(&PhaseOperator::Momentum, &tmp, None).expect("momentum needs no snapshots");
    let valid = above_floor(psi);
    let nq = g.n_q();
    let mut d = MomentumDiagnostic {
        max_real: 0.0,
        max_imag: 0.0,
        max_deviation: 0.0,
        mean_square: 0.0,
        evaluated_nodes: 0,
    };
    for ((i, j), v) in psi.values().indexed_iter() {
        let inside = g.is_periodic_q() || (i >= 4 && i + 4 < nq);
        if !inside || !valid[[i, j]] {
            continue;
        }
        let pt = p1[[i, j]] / v;
        let ratio = p2[[i, j]] / v;
        d.max_real = d.max_real.max(pt.re.abs());
        d.max_imag = d.max_imag.max(pt.im.abs());
        d.max_deviation = d.max_deviation.max((ratio - pt.re * pt.re).norm());
        d.evaluated_nodes += 1;
    }
    let mut prod = Array2::zeros(g.shape());
    Zip::from(&mut prod)
        .and(psi.values())
        .and(&p2)
        .for_each(|o, v, a| *o = v.conj() * a);
    d.mean_square = integrate_complex(&g, &prod).re / psi.norm_squared();
    d
}
