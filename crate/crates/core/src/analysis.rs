//! Derived metrics: moments, the continuity/energy split, fringes and virial ratios.

use ndarray::{Array2, Zip};

use crate::dynamics::PhaseFlowField;
use crate::error::{QpError, Result};
use crate::hamiltonian::HamiltonianModel;
use crate::operators::{expectation_op, PhaseOperator};
use crate::stationary::Ellipse;
use crate::stencil;
use crate::wave::{integrate, integrate_complex, sample_real, PhaseWaveFunction};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyReport {
    pub mean_q: f64,
    pub mean_p: f64,
    /// Central second moment `⟨(q − ⟨q⟩)²⟩`.
    pub var_q: f64,
    pub var_p: f64,
    /// `√var_q · √var_p`
    pub product: f64,
    /// `product − ħ/2`
    pub margin: f64,
}

fn raw_moment<F: Fn(f64, f64) -> f64 + Sync>(psi: &PhaseWaveFunction, f: F) -> f64 {
    let g = psi.grid();
    integrate(g, &(sample_real(g, f) * &psi.density()))
}

pub fn uncertainty_product(psi: &PhaseWaveFunction) -> UncertaintyReport {
    let n2 = psi.norm_squared();
    let mean_q = raw_moment(psi, |q, _| q) / n2;
    let mean_p = raw_moment(psi, |_, p| p) / n2;
    let var_q = raw_moment(psi, |q, _| (q - mean_q) * (q - mean_q)) / n2;
    let var_p = raw_moment(psi, |_, p| (p - mean_p) * (p - mean_p)) / n2;
    let product = var_q.sqrt() * var_p.sqrt();
    UncertaintyReport {
        mean_q,
        mean_p,
        var_q,
        var_p,
        product,
        margin: product - 0.5 * psi.hbar(),
    }
}

/// Same position moments, but the momentum spread is taken from `p̂ = −iħ∂/∂q`:
/// `⟨p̂²⟩ = ħ²∬|∂ψ/∂q|²`. This is the form the Schwarz-inequality bound applies to.
/// States carrying a phase vortex have a grid-dependent (log-divergent) `⟨p̂²⟩`.
pub fn operator_uncertainty_product(psi: &PhaseWaveFunction) -> UncertaintyReport {
    let g = psi.grid();
    let hbar = psi.hbar();
    let n2 = psi.norm_squared();
    let mean_q = raw_moment(psi, |q, _| q) / n2;
    let var_q = raw_moment(psi, |q, _| (q - mean_q) * (q - mean_q)) / n2;
    let d = stencil::d_dq(psi.values(), g);
    let cross = Zip::from(psi.values())
        .and(&d)
        .map_collect(|a, b| a.conj() * b);
    let mean_p = (integrate_complex(g, &cross) * Complex64::new(0.0, -hbar)).re / n2;
    let p2 = hbar * hbar * integrate(g, &d.mapv(|z| z.norm_sqr())) / n2;
    let var_p = (p2 - mean_p * mean_p).max(0.0);
    let product = var_q.sqrt() * var_p.sqrt();
    UncertaintyReport {
        mean_q,
        mean_p,
        var_q,
        var_p,
        product,
        margin: product - 0.5 * hbar,
    }
}

#[derive(Debug, Clone, Default)]
pub struct StructureOptions {
    pub exclude: Vec<Ellipse>,
}

#[derive(Debug, Clone)]
pub struct StructureReport {
    /// `|∂ρ/∂t + V·∇ρ|`
    pub continuity: Array2<f64>,
    /// `(ρ/ρ_max)·|V·∇S + ∂S/∂t|`
    pub energy: Array2<f64>,
    pub valid: Array2<bool>,
    pub continuity_max: f64,
    pub energy_max: f64,
}

/// Splits the transport equation into its amplitude (continuity) and phase (energy)
/// parts, using snapshots `dt` before and after `curr`.
pub fn structure_split(
    prev: &PhaseWaveFunction,
    curr: &PhaseWaveFunction,
    next: &PhaseWaveFunction,
    dt: f64,
    flow: &PhaseFlowField,
    opts: &StructureOptions,
) -> Result<StructureReport> {
    let g = *curr.grid();
    if prev.grid() != &g || next.grid() != &g || flow.grid() != &g {
        return Err(QpError::GridMismatch(
            "structure split inputs live on different grids".into(),
        ));
    }
    if !(dt > 0.0) {
        return Err(QpError::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let hbar = curr.hbar();
    let rho = curr.density();
    let rho_max = rho.iter().cloned().fold(0.0, f64::max);
    let drho_q = stencil::d_dq(&rho, &g);
    let drho_p = stencil::d_dp(&rho, &g);
    let dpsi_q = stencil::d_dq(curr.values(), &g);
    let dpsi_p = stencil::d_dp(curr.values(), &g);
    let floor = [prev, curr, next]
        .iter()
        .map(|s| s.amplitude_floor())
        .fold(0.0, f64::max);
    let edge = stencil::one_sided_mask(&g);

    let shape = g.shape();
    let mut continuity = Array2::zeros(shape);
    let mut energy = Array2::zeros(shape);
    let mut valid = Array2::from_elem(shape, false);
    Zip::indexed(&mut continuity)
        .and(&mut energy)
        .and(&mut valid)
        .par_for_each(|(i, j), c, e, ok| {
            let (q, p) = (g.q_at(i), g.p_at(j));
            let v = curr.values()[[i, j]];
            let (a, b) = (prev.values()[[i, j]], next.values()[[i, j]]);
            if edge[[i, j]]
                || v.norm() <= floor
                || a.norm() <= floor
                || b.norm() <= floor
                || opts.exclude.iter().any(|el| el.contains(q, p))
            {
                return;
            }
            *ok = true;
            let (vq, vp) = (flow.vq()[[i, j]], flow.vp()[[i, j]]);
            let drho_t = (b.norm_sqr() - a.norm_sqr()) / (2.0 * dt);
            *c = (drho_t + vq * drho_q[[i, j]] + vp * drho_p[[i, j]]).abs();
            let ds_q = hbar * (dpsi_q[[i, j]] / v).im;
            let ds_p = hbar * (dpsi_p[[i, j]] / v).im;
            let ds_t = hbar * (b * a.conj()).arg() / (2.0 * dt);
            *e = rho[[i, j]] / rho_max * (vq * ds_q + vp * ds_p + ds_t).abs();
        });
    let sup = |f: &Array2<f64>| {
        f.iter()
            .zip(valid.iter())
            .filter(|(_, ok)| **ok)
            .fold(0.0_f64, |m, (x, _)| m.max(*x))
    };
    let continuity_max = sup(&continuity);
    let energy_max = sup(&energy);
    Ok(StructureReport {
        continuity,
        energy,
        valid,
        continuity_max,
        energy_max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeReport {
    pub maxima: Vec<f64>,
    /// Mean spacing of consecutive maxima; `None` with fewer than three.
    pub spacing: Option<f64>,
    /// `(I_max − I_min)/(I_max + I_min)` between the outermost maxima.
    pub visibility: f64,
}

/// Fraction of the global maximum a peak must exceed to count.
pub const FRINGE_THRESHOLD: f64 = 0.05;

/// Local maxima of a sampled profile, refined by a parabola through three nodes.
pub fn fringe_extract(values: &[f64], q: &[f64]) -> Result<FringeReport> {
    if values.len() != q.len() || values.len() < 3 {
        return Err(QpError::GridMismatch(
            "profile and coordinates must match and hold 3+ points".into(),
        ));
    }
    let n = values.len();
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut maxima = Vec::new();
    let mut first = None;
    let mut last = 0;
    for i in 1..n - 1 {
        let (l, c, r) = (values[i - 1], values[i], values[i + 1]);
        if c > l && c >= r && c > FRINGE_THRESHOLD * top {
            let curv = l - 2.0 * c + r;
            let shift = if curv != 0.0 {
                0.5 * (l - r) / curv
            } else {
                0.0
            };
            maxima.push(q[i] + shift * (q[i + 1] - q[i]));
            first.get_or_insert(i);
            last = i;
        }
    }
    let spacing = (maxima.len() >= 3)
        .then(|| (maxima[maxima.len() - 1] - maxima[0]) / (maxima.len() - 1) as f64);
    let window = match first {
        Some(f) if last > f => &values[f..=last],
        _ => values,
    };
    let low = window.iter().cloned().fold(f64::INFINITY, f64::min);
    let visibility = if top + low != 0.0 {
        (top - low) / (top + low)
    } else {
        0.0
    };
    Ok(FringeReport {
        maxima,
        spacing,
        visibility,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirialReport {
    pub kinetic: f64,
    pub virial: f64,
    /// `⟨T̂⟩/⟨Û⟩`; `None` when `|⟨Û⟩| < 1e−12`.
    pub ratio: Option<f64>,
}

pub fn virial_report(psi: &PhaseWaveFunction, h: &HamiltonianModel) -> Result<VirialReport> {
    let kinetic = expectation_op(&PhaseOperator::Kinetic(h.clone()), psi, None)?;
    let virial = expectation_op(&PhaseOperator::Virial(h.clone()), psi, None)?;
    let ratio = (virial.abs() >= 1e-12).then(|| kinetic / virial);
    Ok(VirialReport {
        kinetic,
        virial,
        ratio,
    })
}
