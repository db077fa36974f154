//! Uniform rectangular phase-space grids.

use crate::error::{QpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryMode {
    /// Values outside the window read as zero.
    Truncate,
    /// The q axis wraps with period `q_max - q_min`; p is still truncated.
    PeriodicQ,
}

/// One uniformly spaced axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub spacing: f64,
    pub periodic: bool,
}

impl Axis {
    fn new(min: f64, max: f64, n: usize, periodic: bool, name: &str) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(QpError::InvalidGrid(format!(
                "{name} bounds must satisfy min < max, got [{min}, {max}]"
            )));
        }
        if n < 4 {
            return Err(QpError::InvalidGrid(format!(
                "n_{name} = {n}, need at least 4 nodes"
            )));
        }
        let spacing = if periodic {
            (max - min) / n as f64
        } else {
            (max - min) / (n - 1) as f64
        };
        Ok(Self {
            min,
            max,
            n,
            spacing,
            periodic,
        })
    }

    /// Non-periodic axis with nodes at both ends.
    pub fn bounded(min: f64, max: f64, n: usize) -> Result<Self> {
        Self::new(min, max, n, false, "q")
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    /// Quadrature weights: trapezoid on a bounded axis, rectangle on a periodic one.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![self.spacing; self.n];
        if !self.periodic {
            w[0] *= 0.5;
            w[self.n - 1] *= 0.5;
        }
        w
    }

    /// Fractional index of coordinate `x`.
    #[inline]
    pub fn index_of(&self, x: f64) -> f64 {
        (x - self.min) / self.spacing
    }

    /// Index of the node closest to `x`, clamped to the axis.
    pub fn nearest(&self, x: f64) -> usize {
        let k = self.index_of(x).round();
        k.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub q: Axis,
    pub p: Axis,
    pub boundary: BoundaryMode,
}

impl PhaseGrid {
    pub fn new(
        q_min: f64,
        q_max: f64,
        p_min: f64,
        p_max: f64,
        n_q: usize,
        n_p: usize,
        boundary: BoundaryMode,
    ) -> Result<Self> {
        let q = Axis::new(q_min, q_max, n_q, boundary == BoundaryMode::PeriodicQ, "q")?;
        let p = Axis::new(p_min, p_max, n_p, false, "p")?;
        Ok(Self { q, p, boundary })
    }

    pub fn n_q(&self) -> usize {
        self.q.n
    }

    pub fn n_p(&self) -> usize {
        self.p.n
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.q.n, self.p.n)
    }

    pub fn len(&self) -> usize {
        self.q.n * self.p.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dq(&self) -> f64 {
        self.q.spacing
    }

    pub fn dp(&self) -> f64 {
        self.p.spacing
    }

    pub fn cell_area(&self) -> f64 {
        self.q.spacing * self.p.spacing
    }

    #[inline]
    pub fn q_at(&self, i: usize) -> f64 {
        self.q.node(i)
    }

    #[inline]
    pub fn p_at(&self, j: usize) -> f64 {
        self.p.node(j)
    }

    pub fn is_periodic_q(&self) -> bool {
        self.boundary == BoundaryMode::PeriodicQ
    }

    pub(crate) fn ensure_same(&self, other: &PhaseGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(QpError::GridMismatch(
                "fields live on different phase grids".into(),
            ))
        }
    }
}
