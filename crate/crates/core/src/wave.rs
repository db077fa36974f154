//! Complex fields on a phase grid.

use std::ops::{Add, Mul, Sub};

use log::warn;
use ndarray::{Array2, Axis as NdAxis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{QpError, Result};
use crate::grid::PhaseGrid;

/// Phase values below this fraction of `max|ψ|` are treated as undefined.
pub const AMPLITUDE_FLOOR_RATIO: f64 = 1e-12;

/// A complex field `ψ(q, p)`, stored as `values[[i_q, j_p]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseWaveFunction {
    grid: PhaseGrid,
    values: Array2<Complex64>,
    hbar: f64,
}

impl PhaseWaveFunction {
    pub fn new(grid: PhaseGrid, values: Array2<Complex64>, hbar: f64) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(QpError::GridMismatch(format!(
                "values have shape {:?}, grid is {:?}",
                values.dim(),
                grid.shape()
            )));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(QpError::InvalidParameter(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        let psi = Self { grid, values, hbar };
        psi.check_finite()?;
        Ok(psi)
    }

    pub fn zeros(grid: PhaseGrid, hbar: f64) -> Self {
        Self {
            grid,
            values: Array2::zeros(grid.shape()),
            hbar,
        }
    }

    /// Samples `f(q, p)` at every node.
    pub fn from_fn<F>(grid: PhaseGrid, hbar: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let values = sample(&grid, f);
        Self::new(grid, values, hbar)
    }

    pub(crate) fn from_parts_unchecked(
        grid: PhaseGrid,
        values: Array2<Complex64>,
        hbar: f64,
    ) -> Self {
        Self { grid, values, hbar }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<Complex64> {
        self.values
    }

    pub fn check_finite(&self) -> Result<()> {
        for ((i, j), v) in self.values.indexed_iter() {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(QpError::NonFinite(i, j));
            }
        }
        Ok(())
    }

    /// `ρ = |ψ|²` at every node.
    pub fn density(&self) -> Array2<f64> {
        let mut rho = Array2::zeros(self.values.dim());
        Zip::from(&mut rho)
            .and(&self.values)
            .par_for_each(|r, v| *r = v.norm_sqr());
        rho
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    pub fn amplitude_floor(&self) -> f64 {
        AMPLITUDE_FLOOR_RATIO * self.max_abs()
    }

    pub fn norm_squared(&self) -> f64 {
        integrate(&self.grid, &self.density())
    }

    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_squared();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(QpError::DegenerateState);
        }
        Ok(self.scaled(1.0 / n2.sqrt()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.mapv(|v| v * s),
            hbar: self.hbar,
        }
    }

    /// `ρ_q(q) = ∫|ψ|² dp`.
    pub fn marginal_q(&self) -> Vec<f64> {
        let wp = self.grid.p.weights();
        self.values
            .axis_iter(NdAxis(0))
            .into_par_iter()
            .map(|row| row.iter().zip(&wp).map(|(v, w)| v.norm_sqr() * w).sum())
            .collect()
    }

    /// `ρ_p(p) = ∫|ψ|² dq`.
    pub fn marginal_p(&self) -> Vec<f64> {
        let wq = self.grid.q.weights();
        self.values
            .axis_iter(NdAxis(1))
            .into_par_iter()
            .map(|col| col.iter().zip(&wq).map(|(v, w)| v.norm_sqr() * w).sum())
            .collect()
    }

    /// `∬ψ* F ψ dq dp` for a real field `F` given as a function of the node coordinates.
    pub fn expectation<F>(&self, f: F) -> f64
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        self.warn_if_unnormalized();
        let g = self.grid;
        let rho = self.density();
        let weighted = sample_real(&g, f) * &rho;
        integrate(&g, &weighted)
    }

    /// Same as [`expectation`](Self::expectation) for a field already sampled on the grid.
    pub fn expectation_field(&self, field: &Array2<f64>) -> Result<f64> {
        if field.dim() != self.grid.shape() {
            return Err(QpError::GridMismatch(
                "field shape differs from grid".into(),
            ));
        }
        self.warn_if_unnormalized();
        Ok(integrate(&self.grid, &(field * &self.density())))
    }

    /// `⟨self, other⟩ = ∬ self* other dq dp`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        let mut prod = Array2::<Complex64>::zeros(self.values.dim());
        Zip::from(&mut prod)
            .and(&self.values)
            .and(&other.values)
            .par_for_each(|r, a, b| *r = a.conj() * b);
        Ok(integrate_complex(&self.grid, &prod))
    }

    fn warn_if_unnormalized(&self) {
        let n2 = self.norm_squared();
        if (n2 - 1.0).abs() > 1e-6 {
            warn!("expectation taken on a state with norm² = {n2:.9}");
        }
    }
}

impl Add for &PhaseWaveFunction {
    type Output = PhaseWaveFunction;
    fn add(self, rhs: Self) -> PhaseWaveFunction {
        assert_eq!(self.grid, rhs.grid, "adding fields on different grids");
        PhaseWaveFunction {
            grid: self.grid,
            values: &self.values + &rhs.values,
            hbar: self.hbar,
        }
    }
}

impl Sub for &PhaseWaveFunction {
    type Output = PhaseWaveFunction;
    fn sub(self, rhs: Self) -> PhaseWaveFunction {
        assert_eq!(self.grid, rhs.grid, "subtracting fields on different grids");
        PhaseWaveFunction {
            grid: self.grid,
            values: &self.values - &rhs.values,
            hbar: self.hbar,
        }
    }
}

impl Mul<Complex64> for &PhaseWaveFunction {
    type Output = PhaseWaveFunction;
    fn mul(self, rhs: Complex64) -> PhaseWaveFunction {
        PhaseWaveFunction {
            grid: self.grid,
            values: self.values.mapv(|v| v * rhs),
            hbar: self.hbar,
        }
    }
}

pub(crate) fn sample<F>(grid: &PhaseGrid, f: F) -> Array2<Complex64>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    let mut out = Array2::zeros(grid.shape());
    Zip::indexed(&mut out).par_for_each(|(i, j), v| *v = f(grid.q_at(i), grid.p_at(j)));
    out
}

pub fn sample_real<F>(grid: &PhaseGrid, f: F) -> Array2<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let mut out = Array2::zeros(grid.shape());
    Zip::indexed(&mut out).par_for_each(|(i, j), v| *v = f(grid.q_at(i), grid.p_at(j)));
    out
}

/// Quadrature of a real nodal field. Rows are summed in parallel and combined in order.
pub fn integrate(grid: &PhaseGrid, field: &Array2<f64>) -> f64 {
    let wq = grid.q.weights();
    let wp = grid.p.weights();
    let rows: Vec<f64> = field
        .axis_iter(NdAxis(0))
        .into_par_iter()
        .map(|row| row.iter().zip(&wp).map(|(v, w)| v * w).sum::<f64>())
        .collect();
    rows.iter().zip(&wq).map(|(r, w)| r * w).sum()
}

pub fn integrate_complex(grid: &PhaseGrid, field: &Array2<Complex64>) -> Complex64 {
    let wq = grid.q.weights();
    let wp = grid.p.weights();
    let rows: Vec<Complex64> = field
        .axis_iter(NdAxis(0))
        .into_par_iter()
        .map(|row| row.iter().zip(&wp).map(|(v, w)| v * w).sum::<Complex64>())
        .collect();
    rows.iter().zip(&wq).map(|(r, w)| r * w).sum()
}

/// 1-D quadrature matching the grid axis rule.
pub fn integrate_axis(axis: &crate::grid::Axis, values: &[f64]) -> f64 {
    axis.weights().iter().zip(values).map(|(w, v)| w * v).sum()
}
