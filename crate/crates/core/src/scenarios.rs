//! Initial states: plane waves, Gaussian packets and two-slit superpositions.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{build_flow, EvolveOptions, SemiLagrangian};
use crate::error::{QpError, Result};
use crate::grid::{Axis, PhaseGrid};
use crate::hamiltonian::HamiltonianModel;
use crate::wave::PhaseWaveFunction;

/// Edge-band mass above which a two-slit run is aborted.
pub const LEAK_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveSpec {
    pub p0: f64,
    /// Width of the Gaussian momentum profile; three p cells when `None`.
    pub sigma_p: Option<f64>,
}

impl PlaneWaveSpec {
    pub fn new(p0: f64) -> Self {
        Self { p0, sigma_p: None }
    }

    pub fn profile_width(&self, grid: &PhaseGrid) -> f64 {
        self.sigma_p.unwrap_or(3.0 * grid.dp())
    }

    /// Momentum of the row the profile is centred on.
    pub fn row_momentum(&self, grid: &PhaseGrid) -> f64 {
        grid.p_at(grid.p.nearest(self.p0))
    }
}

fn check_plane_wave(spec: &PlaneWaveSpec, grid: &PhaseGrid, hbar: f64) -> Result<()> {
    let p0 = spec.p0;
    if !p0.is_finite() {
        return Err(QpError::InvalidParameter("p0 must be finite".into()));
    }
    if p0 != 0.0 && 2.0 * PI * hbar / p0.abs() < 4.0 * grid.dq() {
        return Err(QpError::InvalidParameter(format!(
            "wavelength {:.4} is shorter than four q cells ({:.4})",
            2.0 * PI * hbar / p0.abs(),
            4.0 * grid.dq()
        )));
    }
    if p0 < grid.p.min || p0 > grid.p.max {
        return Err(QpError::InvalidParameter(format!(
            "p0 = {p0} lies outside the momentum window"
        )));
    }
    if grid.is_periodic_q() {
        let cycles = p0 * grid.q.length() / (2.0 * PI * hbar);
        if (cycles - cycles.round()).abs() > 1e-9 * cycles.abs().max(1.0) {
            return Err(QpError::InvalidParameter(format!(
                "p0 = {p0} fits {cycles:.6} wavelengths in the periodic window; it must be a whole number"
            )));
        }
    }
    if let Some(s) = spec.sigma_p {
        if !(s > 0.0) {
            return Err(QpError::InvalidParameter(format!(
                "sigma_p must be positive, got {s}"
            )));
        }
    }
    Ok(())
}

/// `exp(ip₀q/ħ)` times a narrow Gaussian in p centred on the row nearest `p₀`; normalised.
pub fn plane_wave(spec: &PlaneWaveSpec, grid: &PhaseGrid, hbar: f64) -> Result<PhaseWaveFunction> {
    plane_wave_at(spec, grid, hbar, 1.0, 0.0)
}

/// The plane-wave state transported by the free flow for time `t`:
/// `g(p)·exp(ip₀(q − pt/2m)/ħ)`, with the same normalisation as [`plane_wave`].
pub fn plane_wave_at(
    spec: &PlaneWaveSpec,
    grid: &PhaseGrid,
    hbar: f64,
    mass: f64,
    t: f64,
) -> Result<PhaseWaveFunction> {
    check_plane_wave(spec, grid, hbar)?;
    let pc = spec.row_momentum(grid);
    let s = spec.profile_width(grid);
    let p0 = spec.p0;
    let psi = PhaseWaveFunction::from_fn(*grid, hbar, |q, p| {
        let x = (p - pc) / s;
        Complex64::from_polar(
            (-0.25 * x * x).exp(),
            p0 * (q - p * t / (2.0 * mass)) / hbar,
        )
    })?;
    let n2 = PhaseWaveFunction::from_fn(*grid, hbar, |_, p| {
        let x = (p - pc) / s;
        Complex64::new((-0.25 * x * x).exp(), 0.0)
    })?
    .norm_squared();
    Ok(psi.scaled(1.0 / n2.sqrt()))
}

/// `exp(ipq/ħ)` on every row: each row is a momentum eigenfunction with its own `p`.
pub fn momentum_rows(grid: &PhaseGrid, hbar: f64) -> Result<PhaseWaveFunction> {
    PhaseWaveFunction::from_fn(*grid, hbar, |q, p| Complex64::from_polar(1.0, p * q / hbar))
}

/// `exp(iqp/ħ)` on every column: each column is a position eigenfunction with its own `q`.
pub fn position_columns(grid: &PhaseGrid, hbar: f64) -> Result<PhaseWaveFunction> {
    momentum_rows(grid, hbar)
}

/// Phase convention for Gaussian packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PacketPhase {
    /// `S = p₀(q − q₀)`: one carrier momentum across the packet.
    #[default]
    Carrier,
    /// `S = p(q − q₀)`: the free action evaluated at each node's own momentum.
    Action,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    pub q0: f64,
    pub p0: f64,
    pub sigma_q: f64,
    pub sigma_p: f64,
    pub phase: PacketPhase,
}

impl PacketSpec {
    pub fn new(q0: f64, p0: f64, sigma_q: f64, sigma_p: f64) -> Self {
        Self {
            q0,
            p0,
            sigma_q,
            sigma_p,
            phase: PacketPhase::Carrier,
        }
    }

    /// Minimum-uncertainty packet with `σ_qσ_p = ħ/2`.
    pub fn minimal(q0: f64, p0: f64, sigma_q: f64, hbar: f64) -> Self {
        Self::new(q0, p0, sigma_q, hbar / (2.0 * sigma_q))
    }

    pub fn with_phase(mut self, phase: PacketPhase) -> Self {
        self.phase = phase;
        self
    }
}

const SUPPORT_SIGMAS: f64 = 4.0;

fn fits(axis: &Axis, centre: f64, sigma: f64) -> bool {
    axis.periodic
        || (centre - SUPPORT_SIGMAS * sigma >= axis.min
            && centre + SUPPORT_SIGMAS * sigma <= axis.max)
}

/// Gaussian amplitude with standard deviations `σ_q`, `σ_p` in `|ψ|²`; normalised.
pub fn gaussian_packet(
    spec: &PacketSpec,
    grid: &PhaseGrid,
    hbar: f64,
) -> Result<PhaseWaveFunction> {
    let PacketSpec {
        q0,
        p0,
        sigma_q,
        sigma_p,
        phase,
    } = *spec;
    if !(sigma_q > 0.0 && sigma_p > 0.0) {
        return Err(QpError::InvalidParameter(
            "packet widths must be positive".into(),
        ));
    }
    if sigma_q * sigma_p < 0.5 * hbar * (1.0 - 1e-12) {
        return Err(QpError::InvalidParameter(format!(
            "σ_q·σ_p = {} is below ħ/2 = {}",
            sigma_q * sigma_p,
            0.5 * hbar
        )));
    }
    if !fits(&grid.q, q0, sigma_q) || !fits(&grid.p, p0, sigma_p) {
        return Err(QpError::InvalidParameter(format!(
            "packet at ({q0}, {p0}) does not fit in the grid within {SUPPORT_SIGMAS} widths"
        )));
    }
    let period = grid.q.length();
    let periodic = grid.is_periodic_q();
    PhaseWaveFunction::from_fn(*grid, hbar, |q, p| {
        let mut x = q - q0;
        if periodic {
            x -= period * (x / period).round();
        }
        let y = p - p0;
        let amp = (-x * x / (4.0 * sigma_q * sigma_q) - y * y / (4.0 * sigma_p * sigma_p)).exp();
        let s = match phase {
            PacketPhase::Carrier => p0 * x,
            PacketPhase::Action => p * x,
        };
        Complex64::from_polar(amp, s / hbar)
    })?
    .normalize()
}

/// Two Gaussian slit packets at `±d/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitSpec {
    /// Separation `d` between slit centres.
    pub separation: f64,
    /// Position width `σ_slit` of each slit packet.
    pub slit_width: f64,
    /// Momentum width of each slit packet.
    pub momentum_width: f64,
    pub p0: f64,
    /// Distance `L` to the screen.
    pub screen_distance: f64,
}

impl SlitSpec {
    pub fn validate(&self, hbar: f64) -> Result<()> {
        let s = self;
        if !(s.slit_width > 0.0 && s.momentum_width > 0.0) {
            return Err(QpError::InvalidParameter(
                "slit widths must be positive".into(),
            ));
        }
        if !(s.separation > 0.0) || !(s.screen_distance > 0.0) {
            return Err(QpError::InvalidParameter(
                "slit separation and screen distance must be positive".into(),
            ));
        }
        if s.p0 == 0.0 || !s.p0.is_finite() {
            return Err(QpError::InvalidParameter(
                "slit momentum p0 must be nonzero".into(),
            ));
        }
        if s.slit_width * s.momentum_width < 0.5 * hbar * (1.0 - 1e-12) {
            return Err(QpError::InvalidParameter(
                "slit packet is narrower than ħ/2 allows".into(),
            ));
        }
        if s.separation < 2.0 * s.slit_width {
            warn!(
                "slits overlap: d = {} < 2σ = {}",
                s.separation,
                2.0 * s.slit_width
            );
        }
        Ok(())
    }

    /// Time for the packet centre to travel `L` at the transport speed `p₀/2m`.
    pub fn screen_time(&self, mass: f64) -> f64 {
        2.0 * mass * self.screen_distance / self.p0.abs()
    }

    /// `2πħt/(2m d)` at the screen time, i.e. `2πħL/(|p₀| d)`.
    pub fn predicted_spacing(&self, mass: f64, hbar: f64) -> f64 {
        2.0 * PI * hbar * self.screen_time(mass) / (2.0 * mass * self.separation)
    }

    pub fn packets(&self) -> [PacketSpec; 2] {
        let half = 0.5 * self.separation;
        [-half, half].map(|q0| {
            PacketSpec::new(q0, self.p0, self.slit_width, self.momentum_width)
                .with_phase(PacketPhase::Action)
        })
    }
}

#[derive(Debug, Clone)]
pub struct TwoSlitStates {
    pub psi1: PhaseWaveFunction,
    pub psi2: PhaseWaveFunction,
    /// `ψ₁ + ψ₂`, unnormalised.
    pub sum: PhaseWaveFunction,
    /// `(ψ₁ + ψ₂)/‖ψ₁ + ψ₂‖`.
    pub superposed: PhaseWaveFunction,
    /// `1/‖ψ₁ + ψ₂‖`.
    pub scale: f64,
}

pub fn two_slit_superpose(spec: &SlitSpec, grid: &PhaseGrid, hbar: f64) -> Result<TwoSlitStates> {
    spec.validate(hbar)?;
    let [a, b] = spec.packets();
    let psi1 = gaussian_packet(&a, grid, hbar)?;
    let psi2 = gaussian_packet(&b, grid, hbar)?;
    let sum = &psi1 + &psi2;
    let n2 = sum.norm_squared();
    if !(n2 > 0.0) {
        return Err(QpError::DegenerateState);
    }
    let scale = 1.0 / n2.sqrt();
    let superposed = sum.scaled(scale);
    Ok(TwoSlitStates {
        psi1,
        psi2,
        sum,
        superposed,
        scale,
    })
}

#[derive(Debug, Clone)]
pub struct InterferencePattern {
    pub time: f64,
    pub q: Vec<f64>,
    /// `∫|ψ_sup|² dp` after evolution.
    pub total: Vec<f64>,
    /// `∫(|ψ₁|² + |ψ₂|²) dp`, scaled like `ψ_sup`.
    pub direct: Vec<f64>,
    /// `∫2Re(ψ₁*ψ₂) dp`, scaled like `ψ_sup`.
    pub cross: Vec<f64>,
    /// `max |total − direct − cross|`.
    pub identity_error: f64,
    /// `max |U(ψ_sup) − s·(U(ψ₁) + U(ψ₂))|` over nodes.
    pub linearity_error: f64,
    pub edge_mass: f64,
    pub norm_drift: f64,
    /// `ψ_sup` at the screen.
    pub final_state: PhaseWaveFunction,
}

/// Evolves the superposition and each slit packet under free transport to `t_screen`.
pub fn interference_pattern(
    states: &TwoSlitStates,
    mass: f64,
    t_screen: f64,
    dt: f64,
    opts: &EvolveOptions,
) -> Result<InterferencePattern> {
    if !(t_screen > 0.0 && dt > 0.0) {
        return Err(QpError::InvalidParameter(
            "need t_screen > 0 and dt > 0".into(),
        ));
    }
    let grid = *states.superposed.grid();
    let flow = build_flow(&HamiltonianModel::free(mass)?, &grid);
    let steps = (t_screen / dt).round().max(1.0) as usize;
    let stepper = SemiLagrangian::new(&flow, t_screen / steps as f64, opts.interpolation);
    let run_opts = EvolveOptions {
        keep_states: false,
        leak_limit: Some(LEAK_LIMIT),
        ..opts.clone()
    };
    let sup = stepper.evolve(&states.superposed, steps, steps, &run_opts)?;
    let quiet = EvolveOptions {
        leak_limit: None,
        ..run_opts
    };
    let e1 = stepper
        .evolve(&states.psi1, steps, steps, &quiet)?
        .final_state;
    let e2 = stepper
        .evolve(&states.psi2, steps, steps, &quiet)?
        .final_state;

    let s = states.scale;
    let s2 = s * s;
    let wp = grid.p.weights();
    let (v1, v2, vs) = (e1.values(), e2.values(), sup.final_state.values());
    let rows: Vec<(f64, f64, f64)> = (0..grid.n_q())
        .into_par_iter()
        .map(|i| {
            let mut direct = 0.0;
            let mut cross = 0.0;
            let mut lin = 0.0_f64;
            for (j, w) in wp.iter().enumerate() {
                let (a, b) = (v1[[i, j]], v2[[i, j]]);
                direct += (a.norm_sqr() + b.norm_sqr()) * w;
                cross += 2.0 * (a.conj() * b).re * w;
                lin = lin.max((vs[[i, j]] - (a + b) * s).norm());
            }
            (direct * s2, cross * s2, lin)
        })
        .collect();
    let total = sup.final_state.marginal_q();
    let direct: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let cross: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let identity_error = (0..total.len())
        .map(|i| (total[i] - direct[i] - cross[i]).abs())
        .fold(0.0, f64::max);
    let linearity_error = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(InterferencePattern {
        time: t_screen,
        q: grid.q.nodes(),
        total,
        direct,
        cross,
        identity_error,
        linearity_error,
        edge_mass: crate::dynamics::edge_mass(&sup.final_state, opts.edge_cells),
        norm_drift: sup.max_norm_drift(),
        final_state: sup.final_state,
    })
}
