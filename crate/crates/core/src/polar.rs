//! Amplitude/action form `ψ = ψ₀·exp(iS/ħ)`.

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{QpError, Result};
use crate::grid::PhaseGrid;
use crate::wave::PhaseWaveFunction;

#[derive(Debug, Clone)]
pub struct PolarDecomposition {
    pub amplitude: Array2<f64>,
    /// Action in `(−πħ, πħ]`; zero where `defined` is false.
    pub action: Array2<f64>,
    pub defined: Array2<bool>,
    pub floor: f64,
    pub hbar: f64,
}

pub fn assemble_polar(
    grid: PhaseGrid,
    amplitude: &Array2<f64>,
    action: &Array2<f64>,
    hbar: f64,
) -> Result<PhaseWaveFunction> {
    if amplitude.dim() != grid.shape() || action.dim() != grid.shape() {
        return Err(QpError::GridMismatch(
            "amplitude/action shape differs from grid".into(),
        ));
    }
    if let Some(a) = amplitude.iter().find(|a| !(**a >= 0.0)) {
        return Err(QpError::InvalidParameter(format!(
            "amplitude must be nonnegative, found {a}"
        )));
    }
    let mut values = Array2::zeros(grid.shape());
    Zip::from(&mut values)
        .and(amplitude)
        .and(action)
        .for_each(|v, &a, &s| *v = Complex64::from_polar(a, s / hbar));
    PhaseWaveFunction::new(grid, values, hbar)
}

pub fn decompose_polar(psi: &PhaseWaveFunction) -> PolarDecomposition {
    let hbar = psi.hbar();
    let floor = psi.amplitude_floor();
    let shape = psi.values().dim();
    let mut amplitude = Array2::zeros(shape);
    let mut action = Array2::zeros(shape);
    let mut defined = Array2::from_elem(shape, false);
    Zip::from(&mut amplitude)
        .and(&mut action)
        .and(&mut defined)
        .and(psi.values())
        .for_each(|a, s, d, v| {
            *a = v.norm();
            if *a > floor && *a > 0.0 {
                let mut phase = v.arg();
                if phase <= -PI {
                    phase = PI;
                }
                *s = hbar * phase;
                *d = true;
            }
        });
    PolarDecomposition {
        amplitude,
        action,
        defined,
        floor,
        hbar,
    }
}
