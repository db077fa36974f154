//! Harmonic-oscillator stationary states and residual checks.

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{QpError, Result};
use crate::grid::{BoundaryMode, PhaseGrid};
use crate::hamiltonian::HamiltonianModel;
use crate::stencil;
use crate::wave::PhaseWaveFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `E = (n + ½)ħω`, odd `n̄`.
    Cosine,
    /// `E = nħω` with `n ≥ 1`, even `n̄`.
    Sine,
}

/// How the angular factor is realised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HoForm {
    /// `exp(i n̄ θ)`: an exact solution of the stationary equation at `E`.
    #[default]
    Travelling,
    /// `cos(n̄θ)` or `sin(n̄θ)` by branch: the real combination of the `±n̄` pair.
    Standing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoStationaryState {
    pub mass: f64,
    pub omega: f64,
    pub hbar: f64,
    pub branch: Branch,
    pub n: u32,
    pub beta: f64,
}

impl HoStationaryState {
    pub fn new(
        mass: f64,
        omega: f64,
        hbar: f64,
        branch: Branch,
        n: u32,
        beta: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("mass", mass),
            ("omega", omega),
            ("hbar", hbar),
            ("beta", beta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(QpError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if branch == Branch::Sine && n == 0 {
            return Err(QpError::InvalidParameter(
                "sine branch starts at n = 1".into(),
            ));
        }
        Ok(Self {
            mass,
            omega,
            hbar,
            branch,
            n,
            beta,
        })
    }

    /// Cosine-branch ground state with `β = ħω`.
    pub fn ground(mass: f64, omega: f64, hbar: f64) -> Result<Self> {
        Self::new(mass, omega, hbar, Branch::Cosine, 0, hbar * omega)
    }

    pub fn energy(&self) -> f64 {
        match self.branch {
            Branch::Cosine => (self.n as f64 + 0.5) * self.hbar * self.omega,
            Branch::Sine => self.n as f64 * self.hbar * self.omega,
        }
    }

    /// `n̄ = 2E/(ħω)`.
    pub fn n_bar(&self) -> u32 {
        match self.branch {
            Branch::Cosine => 2 * self.n + 1,
            Branch::Sine => 2 * self.n,
        }
    }

    /// Angle of `(mωq, p)` measured from the +p axis; 0 at the origin.
    pub fn theta(&self, q: f64, p: f64) -> f64 {
        (self.mass * self.omega * q).atan2(p)
    }

    pub fn gaussian(&self, q: f64, p: f64) -> f64 {
        let m = self.mass;
        (-(m * self.omega * self.omega * q * q + p * p / m) / (2.0 * self.beta)).exp()
    }

    /// Unnormalised value at `(q, p)`.
    pub fn value(&self, q: f64, p: f64, form: HoForm) -> Complex64 {
        let arg = self.n_bar() as f64 * self.theta(q, p);
        let g = self.gaussian(q, p);
        match (form, self.branch) {
            (HoForm::Travelling, _) => Complex64::from_polar(g, arg),
            (HoForm::Standing, Branch::Cosine) => Complex64::new(g * arg.cos(), 0.0),
            (HoForm::Standing, Branch::Sine) => Complex64::new(g * arg.sin(), 0.0),
        }
    }

    /// Oscillator lengths `(√(ħ/mω), √(mħω))` along q and p.
    pub fn oscillator_lengths(&self) -> (f64, f64) {
        let mw = self.mass * self.omega;
        ((self.hbar / mw).sqrt(), (mw * self.hbar).sqrt())
    }

    /// Ellipse of `radius` oscillator lengths around the phase vortex at the origin.
    pub fn vortex_core(&self, radius: f64) -> Ellipse {
        let (lq, lp) = self.oscillator_lengths();
        Ellipse {
            q0: 0.0,
            p0: 0.0,
            half_q: radius * lq,
            half_p: radius * lp,
        }
    }

    pub fn hamiltonian(&self) -> HamiltonianModel {
        HamiltonianModel::harmonic(self.mass, self.omega).expect("validated parameters")
    }
}

/// Normalised state on `grid`. The Gaussian factor must have decayed to 1e−10 on truncated edges.
pub fn ho_wavefunction(
    state: &HoStationaryState,
    grid: &PhaseGrid,
    form: HoForm,
) -> Result<PhaseWaveFunction> {
    let mut edge = state
        .gaussian(0.0, grid.p.min)
        .max(state.gaussian(0.0, grid.p.max));
    if grid.boundary == BoundaryMode::Truncate {
        edge = edge
            .max(state.gaussian(grid.q.min, 0.0))
            .max(state.gaussian(grid.q.max, 0.0));
    }
    if edge > 1e-10 {
        return Err(QpError::InvalidGrid(format!(
            "oscillator state reaches {edge:.2e} of its peak on the grid edge"
        )));
    }
    PhaseWaveFunction::from_fn(*grid, state.hbar, |q, p| state.value(q, p, form))?.normalize()
}

/// Axis-aligned ellipse `((q−q0)/half_q)² + ((p−p0)/half_p)² < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub q0: f64,
    pub p0: f64,
    pub half_q: f64,
    pub half_p: f64,
}

impl Ellipse {
    pub fn contains(&self, q: f64, p: f64) -> bool {
        let x = (q - self.q0) / self.half_q;
        let y = (p - self.p0) / self.half_p;
        x * x + y * y < 1.0
    }
}

#[derive(Debug, Clone, Default)]
pub struct ResidualOptions {
    /// Regions left out of the supremum, typically phase-vortex cores.
    pub exclude: Vec<Ellipse>,
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// `sup |Ĥψ − Eψ| / max|ψ|` over the evaluated nodes.
    pub residual: f64,
    pub evaluated_nodes: usize,
    /// Plaquette centres with nonzero phase winding, with the winding number.
    pub vortices: Vec<(f64, f64, i32)>,
}

/// `Ĥψ = −(iħ/2)(∂H/∂p·∂ψ/∂q − ∂H/∂q·∂ψ/∂p)`.
pub fn apply_hamiltonian(psi: &PhaseWaveFunction, h: &HamiltonianModel) -> Array2<Complex64> {
    let g = psi.grid();
    let dq = stencil::d_dq(psi.values(), g);
    let dp = stencil::d_dp(psi.values(), g);
    let k = Complex64::new(0.0, -0.5 * psi.hbar());
    let mut out = Array2::zeros(g.shape());
    Zip::indexed(&mut out)
        .and(&dq)
        .and(&dp)
        .par_for_each(|(i, j), o, a, b| {
            *o = k * (*a * h.dh_dp(g.p_at(j)) - *b * h.dh_dq(g.q_at(i)));
        });
    out
}

pub fn stationary_residual(
    psi: &PhaseWaveFunction,
    h: &HamiltonianModel,
    energy: f64,
    opts: &ResidualOptions,
) -> ResidualReport {
    stationary_residual_with(psi, h, |_, _| energy, opts)
}

/// Residual with a node-dependent energy, e.g. `p²/2m` for a family of plane-wave rows.
pub fn stationary_residual_with<E>(
    psi: &PhaseWaveFunction,
    h: &HamiltonianModel,
    energy: E,
    opts: &ResidualOptions,
) -> ResidualReport
where
    E: Fn(f64, f64) -> f64,
{
    let g = *psi.grid();
    let hpsi = apply_hamiltonian(psi, h);
    let edge = stencil::one_sided_mask(&g);
    let floor = psi.amplitude_floor();
    let scale = psi.max_abs();
    let mut sup = 0.0_f64;
    let mut count = 0;
    for ((i, j), v) in psi.values().indexed_iter() {
        let (q, p) = (g.q_at(i), g.p_at(j));
        if edge[[i, j]] || v.norm() <= floor || opts.exclude.iter().any(|e| e.contains(q, p)) {
            continue;
        }
        count += 1;
        sup = sup.max((hpsi[[i, j]] - v * energy(q, p)).norm());
    }
    ResidualReport {
        residual: if scale > 0.0 { sup / scale } else { 0.0 },
        evaluated_nodes: count,
        vortices: find_vortices(psi),
    }
}

/// Phase windings around each grid plaquette whose corners are all above the amplitude floor.
pub fn find_vortices(psi: &PhaseWaveFunction) -> Vec<(f64, f64, i32)> {
    let g = psi.grid();
    let v = psi.values();
    let floor = psi.amplitude_floor();
    let (nq, np) = g.shape();
    let wrap = |d: f64| {
        let t = std::f64::consts::TAU;
        d - t * (d / t).round()
    };
    let mut out = Vec::new();
    for i in 0..nq - 1 {
        for j in 0..np - 1 {
            let c = [v[[i, j]], v[[i + 1, j]], v[[i + 1, j + 1]], v[[i, j + 1]]];
            if c.iter().any(|z| z.norm() <= floor) {
                continue;
            }
            let total: f64 = (0..4)
                .map(|k| wrap(c[(k + 1) % 4].arg() - c[k].arg()))
                .sum();
            let w = (total / std::f64::consts::TAU).round() as i32;
            if w != 0 {
                out.push((g.q_at(i) + 0.5 * g.dq(), g.p_at(j) + 0.5 * g.dp(), w));
            }
        }
    }
    out
}

/// Position where the kinetic energy vanishes: `a = √(2E/(mω²))`.
pub fn turning_point(energy: f64, h: &HamiltonianModel) -> Result<f64> {
    let omega = h.omega().ok_or_else(|| {
        QpError::InvalidParameter("turning point needs a harmonic Hamiltonian".into())
    })?;
    if !(energy > 0.0) {
        return Err(QpError::InvalidParameter(format!(
            "energy must be positive, got {energy}"
        )));
    }
    Ok((2.0 * energy / (h.mass * omega * omega)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedLevel {
    pub n: u32,
    pub energy: f64,
    pub turning_point: f64,
    /// `|ψ(a, 0)| / max|ψ|` for the standing form of the level.
    pub boundary_ratio: f64,
}

/// Levels `n ≤ n_max` of a branch, each re-checked against the turning-point condition.
pub fn quantize_ho(
    branch: Branch,
    n_max: u32,
    mass: f64,
    omega: f64,
    hbar: f64,
) -> Result<Vec<QuantizedLevel>> {
    let first = if branch == Branch::Sine { 1 } else { 0 };
    let h = HamiltonianModel::harmonic(mass, omega)?;
    (first..=n_max)
        .map(|n| {
            let state = HoStationaryState::new(mass, omega, hbar, branch, n, hbar * omega)?;
            let energy = state.energy();
            let a = turning_point(energy, &h)?;
            let at_boundary = state.value(a, 0.0, HoForm::Standing).norm();
            Ok(QuantizedLevel {
                n,
                energy,
                turning_point: a,
                boundary_ratio: at_boundary / standing_peak(&state),
            })
        })
        .collect()
}

/// Largest `|ψ|` of the standing form, sampled on a 401² window of ±8 Gaussian widths.
fn standing_peak(state: &HoStationaryState) -> f64 {
    let wq = (state.beta / (state.mass * state.omega * state.omega)).sqrt();
    let wp = (state.beta * state.mass).sqrt();
    let n = 401;
    let mut peak = 0.0_f64;
    for i in 0..n {
        let q = -8.0 * wq + 16.0 * wq * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let p = -8.0 * wp + 16.0 * wp * j as f64 / (n - 1) as f64;
            peak = peak.max(state.value(q, p, HoForm::Standing).norm());
        }
    }
    peak
}

/// `G[a][b] = ⟨ψ_a, ψ_b⟩`.
pub fn gram_matrix(states: &[PhaseWaveFunction]) -> Result<Array2<Complex64>> {
    let n = states.len();
    let mut g = Array2::zeros((n, n));
    for a in 0..n {
        for b in 0..n {
            g[[a, b]] = states[a].inner(&states[b])?;
        }
    }
    Ok(g)
}
