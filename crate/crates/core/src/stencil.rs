//! Fourth-order finite differences on uniform axes.

use std::ops::{Add, Mul, Sub};

use ndarray::{Array2, ArrayView1, ArrayViewMut1, Axis, Zip};
use num_complex::Complex64;
use num_traits::Zero;

use crate::grid::PhaseGrid;

pub trait Scalar:
    Copy + Send + Sync + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}
impl Scalar for f64 {}
impl Scalar for Complex64 {}

fn lane_derivative<T: Scalar>(f: ArrayView1<T>, mut out: ArrayViewMut1<T>, h: f64, periodic: bool) {
    let n = f.len();
    let c = 1.0 / (12.0 * h);
    let centred = |a: T, b: T, d: T, e: T| (a - e + (d - b) * 8.0) * c;
    if periodic {
        for i in 0..n {
            let at = |k: isize| f[((i as isize + k).rem_euclid(n as isize)) as usize];
            out[i] = centred(at(-2), at(-1), at(1), at(2));
        }
        return;
    }
    if n < 5 {
        let c2 = 0.5 / h;
        out[0] = (f[0] * -3.0 + f[1] * 4.0 - f[2]) * c2;
        for i in 1..n - 1 {
            out[i] = (f[i + 1] - f[i - 1]) * c2;
        }
        out[n - 1] = (f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) * c2;
        return;
    }
    out[0] = (f[0] * -25.0 + f[1] * 48.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0) * c;
    out[1] = (f[0] * -3.0 - f[1] * 10.0 + f[2] * 18.0 - f[3] * 6.0 + f[4]) * c;
    for i in 2..n - 2 {
        out[i] = centred(f[i - 2], f[i - 1], f[i + 1], f[i + 2]);
    }
    let m = n - 1;
    out[m - 1] = (f[m] * 3.0 + f[m - 1] * 10.0 - f[m - 2] * 18.0 + f[m - 3] * 6.0 - f[m - 4]) * c;
    out[m] =
        (f[m] * 25.0 - f[m - 1] * 48.0 + f[m - 2] * 36.0 - f[m - 3] * 16.0 + f[m - 4] * 3.0) * c;
}

pub fn derivative_1d<T: Scalar>(f: &[T], h: f64, periodic: bool) -> Vec<T> {
    let mut out = vec![T::zero(); f.len()];
    lane_derivative(
        ArrayView1::from(f),
        ArrayViewMut1::from(out.as_mut_slice()),
        h,
        periodic,
    );
    out
}

fn along<T: Scalar>(field: &Array2<T>, axis: usize, h: f64, periodic: bool) -> Array2<T> {
    let mut out = Array2::zeros(field.dim());
    Zip::from(out.lanes_mut(Axis(axis)))
        .and(field.lanes(Axis(axis)))
        .par_for_each(|o, f| lane_derivative(f, o, h, periodic));
    out
}

/// `∂f/∂q`, periodic when the grid wraps in q.
pub fn d_dq<T: Scalar>(field: &Array2<T>, grid: &PhaseGrid) -> Array2<T> {
    along(field, 0, grid.dq(), grid.is_periodic_q())
}

/// `∂f/∂p`.
pub fn d_dp<T: Scalar>(field: &Array2<T>, grid: &PhaseGrid) -> Array2<T> {
    along(field, 1, grid.dp(), false)
}

/// Nodes read by the derivative stencil at index `i` of an axis with `n` nodes.
pub fn q_stencil_nodes(i: usize, n: usize, periodic: bool) -> impl Iterator<Item = usize> {
    let (lo, hi): (isize, isize) = if periodic {
        (i as isize - 2, i as isize + 2)
    } else if n < 5 {
        let lo = (i as isize - 1).clamp(0, n as isize - 3);
        (lo, lo + 2)
    } else {
        let lo = (i as isize - 2).clamp(0, n as isize - 5);
        (lo, lo + 4)
    };
    (lo..=hi).map(move |m| m.rem_euclid(n as isize) as usize)
}

/// True at nodes where at least one derivative used a one-sided stencil.
pub fn one_sided_mask(grid: &PhaseGrid) -> Array2<bool> {
    let (nq, np) = grid.shape();
    let edge = |k: usize, n: usize| k < 2 || k + 2 >= n;
    Array2::from_shape_fn((nq, np), |(i, j)| {
        (!grid.is_periodic_q() && edge(i, nq)) || edge(j, np)
    })
}

/// True at nodes at least `depth` cells away from every truncated edge.
pub fn interior_mask(grid: &PhaseGrid, depth: usize) -> Array2<bool> {
    let (nq, np) = grid.shape();
    let inside = |k: usize, n: usize| k >= depth && k + depth < n;
    Array2::from_shape_fn((nq, np), |(i, j)| {
        (grid.is_periodic_q() || inside(i, nq)) && inside(j, np)
    })
}
