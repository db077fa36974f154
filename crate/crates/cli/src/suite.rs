//! The fixed state corpus for the uncertainty survey.

use num_complex::Complex64;
use qphase_core::scenarios::{gaussian_packet, PacketSpec};
use qphase_core::stationary::{ho_wavefunction, Branch, HoForm, HoStationaryState};
use qphase_core::{PhaseGrid, PhaseWaveFunction, Result};

pub struct CorpusState {
    pub label: String,
    pub psi: PhaseWaveFunction,
    /// Expected to sit exactly on `ħ/2`.
    pub saturates: bool,
}

/// Twenty states: Gaussian packets, oscillator levels `n ≤ 3` of both branches and
/// superpositions. Lengths scale with `√(ħ/mω)` and momenta with `√(mħω)`.
pub fn uncertainty_corpus(
    grid: &PhaseGrid,
    hbar: f64,
    mass: f64,
    omega: f64,
) -> Result<Vec<CorpusState>> {
    let lq = (hbar / (mass * omega)).sqrt();
    let lp = (mass * hbar * omega).sqrt();
    let packet = |q0: f64, p0: f64, sq: f64, k: f64| {
        let sigma_q = sq * lq;
        gaussian_packet(
            &PacketSpec::new(q0 * lq, p0 * lp, sigma_q, k * hbar / (2.0 * sigma_q)),
            grid,
            hbar,
        )
    };
    let level = |branch, n| {
        let s = HoStationaryState::new(mass, omega, hbar, branch, n, hbar * omega)?;
        ho_wavefunction(&s, grid, HoForm::Travelling)
    };
    let mix = |a: &PhaseWaveFunction, b: &PhaseWaveFunction, phase: f64| {
        (a + &(b * Complex64::from_polar(1.0, phase))).normalize()
    };

    let mut out = Vec::new();
    let mut push = |label: &str, psi: PhaseWaveFunction, saturates: bool| {
        out.push(CorpusState {
            label: label.to_string(),
            psi,
            saturates,
        });
    };
    push("gauss_min_origin", packet(0.0, 0.0, 1.0, 1.0)?, true);
    push("gauss_min_shifted", packet(1.5, -0.7, 0.6, 1.0)?, true);
    push("gauss_min_wide", packet(-2.0, 1.0, 1.3, 1.0)?, true);
    push("gauss_min_narrow", packet(0.5, 0.5, 0.8, 1.0)?, true);
    push("gauss_x1.5", packet(0.0, 0.0, 1.0, 1.5)?, false);
    push("gauss_x2", packet(1.0, -1.0, 0.8, 2.0)?, false);
    push("gauss_x1.2", packet(-1.0, 0.5, 1.2, 1.2)?, false);
    for n in 0..=3 {
        push(
            &format!("ho_cosine_n{n}"),
            level(Branch::Cosine, n)?,
            n == 0,
        );
    }
    for n in 1..=3 {
        push(&format!("ho_sine_n{n}"), level(Branch::Sine, n)?, false);
    }
    let c0 = level(Branch::Cosine, 0)?;
    let c1 = level(Branch::Cosine, 1)?;
    let c2 = level(Branch::Cosine, 2)?;
    let s1 = level(Branch::Sine, 1)?;
    push("ho_nbar1+nbar3", mix(&c0, &c1, 0.0)?, false);
    push("ho_nbar1+nbar2", mix(&c0, &s1, 0.0)?, false);
    push("ho_nbar3+nbar5", mix(&c1, &c2, 0.5)?, false);
    let left = packet(-1.5, 0.0, 1.0, 1.0)?;
    let right = packet(1.5, 0.0, 1.0, 1.0)?;
    push("gauss_pair", mix(&left, &right, 0.0)?, false);
    let fast = packet(1.5, 1.0, 0.8, 1.3)?;
    push(
        "gauss_pair_moving",
        mix(&left, &fast, std::f64::consts::FRAC_PI_2)?,
        false,
    );
    let off = packet(2.0, -0.5, 0.9, 1.0)?;
    push("ho_ground+gauss", mix(&c0, &off, 1.0)?, false);
    Ok(out)
}
