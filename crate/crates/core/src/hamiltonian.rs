//! Separable Hamiltonians `H(q, p) = T(p) + U(q)`.

use crate::error::{QpError, Result};
use crate::grid::Axis;
use crate::stencil;

#[derive(Debug, Clone, PartialEq)]
pub enum Kinetic {
    /// `p²/2m`
    Classical,
    /// `√(c²p² + m₀²c⁴) − m₀c²`
    Relativistic { c: f64 },
    /// No kinetic term.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    Constant(f64),
    Harmonic { omega: f64 },
    Tabulated(TabulatedPotential),
}

/// Potential samples on a uniform q axis. The gradient is precomputed with the
/// 4th-order stencil; the two end nodes on each side use one-sided formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    q_min: f64,
    spacing: f64,
    samples: Vec<f64>,
    gradient: Vec<f64>,
}

impl TabulatedPotential {
    pub fn new(q_min: f64, spacing: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 5 {
            return Err(QpError::InvalidParameter(
                "tabulated potential needs at least 5 samples".into(),
            ));
        }
        if !(spacing > 0.0) {
            return Err(QpError::InvalidParameter(
                "tabulated spacing must be positive".into(),
            ));
        }
        if samples.iter().any(|u| !u.is_finite()) {
            return Err(QpError::InvalidParameter(
                "tabulated potential has non-finite samples".into(),
            ));
        }
        let gradient = stencil::derivative_1d(&samples, spacing, false);
        Ok(Self {
            q_min,
            spacing,
            samples,
            gradient,
        })
    }

    /// Samples a function on a grid axis (the axis must not be periodic).
    pub fn on_axis(axis: &Axis, u: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            axis.min,
            axis.spacing,
            axis.nodes().into_iter().map(u).collect(),
        )
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn q_max(&self) -> f64 {
        self.q_min + (self.samples.len() - 1) as f64 * self.spacing
    }

    pub fn contains(&self, q: f64) -> bool {
        q >= self.q_min && q <= self.q_max()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// True where the gradient leans on a one-sided stencil or `q` is off the table.
    pub fn gradient_flagged(&self, q: f64) -> bool {
        let x = (q - self.q_min) / self.spacing;
        let last = (self.samples.len() - 1) as f64;
        !(2.0 - 1e-9..=last - 2.0 + 1e-9).contains(&x)
    }

    fn lerp(&self, table: &[f64], q: f64) -> f64 {
        let n = table.len();
        let x = ((q - self.q_min) / self.spacing).clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n - 2);
        let a = x - i as f64;
        table[i] * (1.0 - a) + table[i + 1] * a
    }

    pub fn value(&self, q: f64) -> f64 {
        self.lerp(&self.samples, q)
    }

    pub fn derivative(&self, q: f64) -> f64 {
        self.lerp(&self.gradient, q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianModel {
    /// Mass, or rest mass for the relativistic kinetic term.
    pub mass: f64,
    pub kinetic: Kinetic,
    pub potential: Potential,
}

impl HamiltonianModel {
    pub fn new(mass: f64, kinetic: Kinetic, potential: Potential) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(QpError::InvalidParameter(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if let Kinetic::Relativistic { c } = kinetic {
            if !(c > 0.0 && c.is_finite()) {
                return Err(QpError::InvalidParameter(format!(
                    "c must be positive, got {c}"
                )));
            }
        }
        if let Potential::Harmonic { omega } = potential {
            if !(omega > 0.0 && omega.is_finite()) {
                return Err(QpError::InvalidParameter(format!(
                    "omega must be positive, got {omega}"
                )));
            }
        }
        Ok(Self {
            mass,
            kinetic,
            potential,
        })
    }

    pub fn free(mass: f64) -> Result<Self> {
        Self::new(mass, Kinetic::Classical, Potential::Zero)
    }

    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        Self::new(mass, Kinetic::Classical, Potential::Harmonic { omega })
    }

    pub fn tabulated(mass: f64, table: TabulatedPotential) -> Result<Self> {
        Self::new(mass, Kinetic::Classical, Potential::Tabulated(table))
    }

    pub fn relativistic(rest_mass: f64, c: f64, potential: Potential) -> Result<Self> {
        Self::new(rest_mass, Kinetic::Relativistic { c }, potential)
    }

    /// `H ≡ E`, which generates no motion at all.
    pub fn constant(energy: f64) -> Self {
        Self {
            mass: 1.0,
            kinetic: Kinetic::None,
            potential: Potential::Constant(energy),
        }
    }

    pub fn omega(&self) -> Option<f64> {
        match self.potential {
            Potential::Harmonic { omega } => Some(omega),
            _ => None,
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.potential, Potential::Tabulated(_))
    }

    pub fn kinetic_energy(&self, p: f64) -> f64 {
        let m = self.mass;
        match self.kinetic {
            Kinetic::Classical => p * p / (2.0 * m),
            Kinetic::Relativistic { c } => {
                // √(c²p² + m²c⁴) − mc² without cancellation
                let mc2 = m * c * c;
                let cp = c * p;
                cp * cp / ((cp * cp + mc2 * mc2).sqrt() + mc2)
            }
            Kinetic::None => 0.0,
        }
    }

    pub fn potential_energy(&self, q: f64) -> f64 {
        match &self.potential {
            Potential::Zero => 0.0,
            Potential::Constant(e) => *e,
            Potential::Harmonic { omega } => 0.5 * self.mass * omega * omega * q * q,
            Potential::Tabulated(t) => t.value(q),
        }
    }

    pub fn energy(&self, q: f64, p: f64) -> f64 {
        self.kinetic_energy(p) + self.potential_energy(q)
    }

    /// `∂H/∂p`, which depends on p only.
    pub fn dh_dp(&self, p: f64) -> f64 {
        let m = self.mass;
        match self.kinetic {
            Kinetic::Classical => p / m,
            Kinetic::Relativistic { c } => c * c * p / (c * c * p * p + m * m * c.powi(4)).sqrt(),
            Kinetic::None => 0.0,
        }
    }

    /// `∂H/∂q`, which depends on q only.
    pub fn dh_dq(&self, q: f64) -> f64 {
        match &self.potential {
            Potential::Zero | Potential::Constant(_) => 0.0,
            Potential::Harmonic { omega } => self.mass * omega * omega * q,
            Potential::Tabulated(t) => t.derivative(q),
        }
    }

    /// False only for tabulated potentials evaluated off their table.
    pub fn in_domain(&self, q: f64) -> bool {
        match &self.potential {
            Potential::Tabulated(t) => t.contains(q),
            _ => true,
        }
    }

    pub fn describe(&self) -> String {
        let kin = match self.kinetic {
            Kinetic::Classical => "classical".to_string(),
            Kinetic::Relativistic { c } => format!("relativistic(c={c})"),
            Kinetic::None => "none".to_string(),
        };
        let pot = match &self.potential {
            Potential::Zero => "zero".to_string(),
            Potential::Constant(e) => format!("constant({e})"),
            Potential::Harmonic { omega } => format!("harmonic(omega={omega})"),
            Potential::Tabulated(t) => format!("tabulated({} samples)", t.samples().len()),
        };
        format!("m={} kinetic={kin} potential={pot}", self.mass)
    }
}
