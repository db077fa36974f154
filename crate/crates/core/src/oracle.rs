//! Configuration-space Schrödinger solver used as an independent reference.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{QpError, Result};
use crate::grid::Axis;
use crate::wave::integrate_axis;

/// `ψ(q)` on a 1-D axis, with Dirichlet zeros implied at the two end nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigWaveFunction {
    pub axis: Axis,
    pub values: Vec<Complex64>,
    pub hbar: f64,
    pub mass: f64,
}

impl ConfigWaveFunction {
    pub fn from_fn(axis: Axis, hbar: f64, mass: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        if !(hbar > 0.0 && mass > 0.0) {
            return Err(QpError::InvalidParameter(
                "hbar and mass must be positive".into(),
            ));
        }
        let values: Vec<Complex64> = axis.nodes().into_iter().map(f).collect();
        if values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(QpError::InvalidParameter(
                "non-finite wave-function value".into(),
            ));
        }
        Ok(Self {
            axis,
            values,
            hbar,
            mass,
        })
    }

    /// `exp(−(q−q₀)²/(4σ²) + ip₀q/ħ)`, normalised.
    pub fn gaussian(
        axis: Axis,
        hbar: f64,
        mass: f64,
        q0: f64,
        p0: f64,
        sigma: f64,
    ) -> Result<Self> {
        Self::from_fn(axis, hbar, mass, |q| {
            let x = q - q0;
            Complex64::from_polar((-x * x / (4.0 * sigma * sigma)).exp(), p0 * q / hbar)
        })?
        .normalize()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn norm_squared(&self) -> f64 {
        integrate_axis(&self.axis, &self.density())
    }

    pub fn normalize(mut self) -> Result<Self> {
        let n2 = self.norm_squared();
        if !(n2 > 0.0) {
            return Err(QpError::DegenerateState);
        }
        let s = 1.0 / n2.sqrt();
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(self)
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        let w = self.axis.weights();
        self.values
            .iter()
            .zip(&other.values)
            .zip(&w)
            .map(|((a, b), w)| a.conj() * b * w)
            .sum()
    }
}

/// Crank–Nicolson propagator `(1 + iΔtH/2ħ)ψ⁺ = (1 − iΔtH/2ħ)ψ` with a factorised
/// left-hand side, so each step is one tridiagonal sweep.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    n: usize,
    dt: f64,
    /// Off-diagonal of the right-hand side operator.
    rhs_off: Complex64,
    rhs_diag: Vec<Complex64>,
    lhs_off: Complex64,
    /// Thomas-algorithm modified super-diagonal and inverse pivots.
    c_prime: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
}

impl CrankNicolson {
    pub fn new(axis: &Axis, potential: &[f64], dt: f64, hbar: f64, mass: f64) -> Result<Self> {
        let n = axis.n;
        if potential.len() != n {
            return Err(QpError::GridMismatch(format!(
                "{} potential samples for {n} nodes",
                potential.len()
            )));
        }
        if !(dt > 0.0) {
            return Err(QpError::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let h = axis.spacing;
        let kappa = hbar * hbar / (2.0 * mass * h * h);
        let tau = Complex64::new(0.0, dt / (2.0 * hbar));
        let m = n - 2;
        let lhs_off = -tau * kappa;
        let rhs_off = tau * kappa;
        let lhs_diag: Vec<Complex64> = (1..=m)
            .map(|i| 1.0 + tau * (2.0 * kappa + potential[i]))
            .collect();
        let rhs_diag = (1..=m)
            .map(|i| 1.0 - tau * (2.0 * kappa + potential[i]))
            .collect();
        let mut c_prime = vec![Complex64::new(0.0, 0.0); m];
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..m {
            let pivot = if k == 0 {
                lhs_diag[0]
            } else {
                lhs_diag[k] - lhs_off * c_prime[k - 1]
            };
            if pivot.norm() < 1e-300 {
                return Err(QpError::SingularSystem(k + 1));
            }
            inv_pivot[k] = 1.0 / pivot;
            c_prime[k] = lhs_off * inv_pivot[k];
        }
        Ok(Self {
            n,
            dt,
            rhs_off,
            rhs_diag,
            lhs_off,
            c_prime,
            inv_pivot,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, psi: &ConfigWaveFunction) -> ConfigWaveFunction {
        assert_eq!(
            psi.values.len(),
            self.n,
            "state does not match the propagator grid"
        );
        let v = &psi.values;
        let m = self.n - 2;
        let mut d = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..m {
            let i = k + 1;
            d[k] = self.rhs_diag[k] * v[i] + self.rhs_off * (v[i - 1] + v[i + 1]);
        }
        // forward sweep
        d[0] *= self.inv_pivot[0];
        for k in 1..m {
            d[k] = (d[k] - self.lhs_off * d[k - 1]) * self.inv_pivot[k];
        }
        for k in (0..m - 1).rev() {
            d[k] = d[k] - self.c_prime[k] * d[k + 1];
        }
        let mut values = vec![Complex64::new(0.0, 0.0); self.n];
        values[1..=m].copy_from_slice(&d);
        ConfigWaveFunction {
            values,
            ..psi.clone()
        }
    }

    pub fn run(&self, psi: &ConfigWaveFunction, steps: usize) -> ConfigWaveFunction {
        let mut out = psi.clone();
        for _ in 0..steps {
            out = self.step(&out);
        }
        out
    }
}

/// One Crank–Nicolson step.
pub fn cn_step(psi: &ConfigWaveFunction, potential: &[f64], dt: f64) -> Result<ConfigWaveFunction> {
    Ok(CrankNicolson::new(&psi.axis, potential, dt, psi.hbar, psi.mass)?.step(psi))
}

/// `√(mω/πħ)·exp(−mωq²/ħ)`; the axis must reach ±6 oscillator lengths.
pub fn ho_ground_density(axis: &Axis, mass: f64, omega: f64, hbar: f64) -> Result<Vec<f64>> {
    if !(mass > 0.0 && omega > 0.0 && hbar > 0.0) {
        return Err(QpError::InvalidParameter(
            "mass, omega and hbar must be positive".into(),
        ));
    }
    let reach = 6.0 * (hbar / (mass * omega)).sqrt();
    if axis.min > -reach || axis.max < reach {
        return Err(QpError::InvalidGrid(format!("axis must cover ±{reach:.4}")));
    }
    let a = mass * omega / hbar;
    let c = (a / PI).sqrt();
    Ok(axis
        .nodes()
        .into_iter()
        .map(|q| c * (-a * q * q).exp())
        .collect())
}

/// Mean and variance of a density on an axis.
pub fn moments(axis: &Axis, density: &[f64]) -> (f64, f64) {
    let q = axis.nodes();
    let n0 = integrate_axis(axis, density);
    let f1: Vec<f64> = density.iter().zip(&q).map(|(r, x)| r * x).collect();
    let mean = integrate_axis(axis, &f1) / n0;
    let f2: Vec<f64> = density
        .iter()
        .zip(&q)
        .map(|(r, x)| r * (x - mean) * (x - mean))
        .collect();
    (mean, integrate_axis(axis, &f2) / n0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityComparison {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// Centroid of `b` minus centroid of `a`.
    pub centroid_difference: f64,
}

pub fn compare_densities(a: &[f64], b: &[f64], axis: &Axis) -> Result<DensityComparison> {
    if a.len() != axis.n || b.len() != axis.n {
        return Err(QpError::GridMismatch(format!(
            "densities of length {} and {} on an axis of {} nodes",
            a.len(),
            b.len(),
            axis.n
        )));
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
    Ok(DensityComparison {
        l1: integrate_axis(axis, &diff),
        l2: integrate_axis(axis, &sq).sqrt(),
        linf: diff.iter().cloned().fold(0.0, f64::max),
        centroid_difference: moments(axis, b).0 - moments(axis, a).0,
    })
}
