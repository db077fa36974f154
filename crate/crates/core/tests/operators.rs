use std::f64::consts::PI;

use approx::assert_relative_eq;
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use qphase_core::operators::*;
use qphase_core::scenarios::{gaussian_packet, momentum_rows, PacketSpec};
use qphase_core::separable::{SeparableHamiltonian, SeparableState};
use qphase_core::stationary::{ho_wavefunction, HoForm, HoStationaryState};
use qphase_core::stencil;
use qphase_core::*;

/// q periodic on one 2π window with 512 cells, p on [−2, 2] with integer momenta on nodes.
fn eigen_grid() -> PhaseGrid {
    PhaseGrid::new(-PI, PI, -2.0, 2.0, 512, 401, BoundaryMode::PeriodicQ).unwrap()
}

fn ho_grid(n: usize) -> PhaseGrid {
    PhaseGrid::new(-8.0, 8.0, -8.0, 8.0, n, n, BoundaryMode::Truncate).unwrap()
}

#[test]
fn momentum_eigenrelation_on_rows() {
    let g = eigen_grid();
    let psi = momentum_rows(&g, 1.0).unwrap();
    let out = apply(&PhaseOperator::Momentum, &psi, None).unwrap();
    let mut worst = 0.0_f64;
    for j in 0..g.n_p() {
        let p = g.p_at(j);
        // Whole momenta only (periodic rows), resolved to ≥ 512 nodes per wavelength.
        if (p - p.round()).abs() > 1e-12 || p.abs() > 1.0 {
            continue;
        }
        for i in 0..g.n_q() {
            worst = worst.max((out[[i, j]] - psi.values()[[i, j]] * p).norm());
        }
    }
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn position_eigenrelation_on_columns() {
    let g = eigen_grid();
    let psi = momentum_rows(&g, 1.0).unwrap();
    let out = apply(&PhaseOperator::Position, &psi, None).unwrap();
    let one_sided = stencil::one_sided_mask(&g);
    let mut worst = 0.0_f64;
    for ((i, j), v) in out.indexed_iter() {
        let q = g.q_at(i);
        if q.abs() <= 1.0 && !one_sided[[i, j]] {
            worst = worst.max((v - psi.values()[[i, j]] * q).norm());
        }
    }
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn momentum_of_real_gaussian_is_imaginary() {
    let g = ho_grid(129);
    let psi = PhaseWaveFunction::from_fn(g, 1.0, |q, p| {
        Complex64::new((-q * q / 2.0 - p * p / 2.0).exp(), 0.0)
    })
    .unwrap();
    let out = apply(&PhaseOperator::Momentum, &psi, None).unwrap();
    assert!(out.iter().all(|v| v.re == 0.0));
    assert!(out.iter().any(|v| v.im.abs() > 0.1));
}

#[test]
fn observables_of_polar_family() {
    let g = PhaseGrid::new(-6.0, 6.0, -6.0, 6.0, 481, 481, BoundaryMode::Truncate).unwrap();
    // ψ₀ real and smooth, phase pq/ħ.
    let psi = PhaseWaveFunction::from_fn(g, 1.0, |q, p| {
        Complex64::from_polar((-(q * q + p * p) / 8.0).exp(), p * q)
    })
    .unwrap();
    let inner = |q: f64, p: f64| q.abs() <= 2.0 && p.abs() <= 2.0;
    let mom = observable(&PhaseOperator::Momentum, &psi, None).unwrap();
    let pos = observable(&PhaseOperator::Position, &psi, None).unwrap();
    for ((i, j), v) in mom.values.indexed_iter() {
        let (q, p) = (g.q_at(i), g.p_at(j));
        if inner(q, p) {
            assert!((v - p).abs() < 1e-5, "p̃ at ({q}, {p})");
            assert!((pos.values[[i, j]] - q).abs() < 1e-5, "q̃ at ({q}, {p})");
        }
    }
}

#[test]
fn energy_observable_of_stationary_pair() {
    let g = ho_grid(33);
    let phi = gaussian_packet(&PacketSpec::minimal(0.0, 0.0, 1.0, 1.0), &g, 1.0).unwrap();
    let (e, dt) = (0.7, 1e-3);
    let prev = &phi * Complex64::from_polar(1.0, e * dt);
    let next = &phi * Complex64::from_polar(1.0, -e * dt);
    for (scheme, tol) in [
        (TimeScheme::Eigenphase, 1e-12),
        (TimeScheme::Centered, 1e-6),
    ] {
        let tn = TimeNeighbours {
            prev: &prev,
            next: &next,
            dt,
            scheme,
        };
        let obs = observable(&PhaseOperator::Energy, &phi, Some(&tn)).unwrap();
        assert!(obs.max_deviation(&g, |_, _| e) <= tol, "{scheme:?}");
    }
    assert!(matches!(
        apply(&PhaseOperator::Energy, &phi, None),
        Err(QpError::MissingSnapshots)
    ));
}

#[test]
fn momentum_expectation_of_real_state_vanishes() {
    let g = ho_grid(129);
    let psi = gaussian_packet(&PacketSpec::minimal(0.3, 0.0, 1.0, 1.0), &g, 1.0).unwrap();
    assert!(
        expectation_op(&PhaseOperator::Momentum, &psi, None)
            .unwrap()
            .abs()
            <= 1e-10
    );
}

#[test]
fn virial_expectations_on_ho_ground() {
    let h = HamiltonianModel::harmonic(1.0, 1.0).unwrap();
    let state = HoStationaryState::ground(1.0, 1.0, 1.0).unwrap();
    let mut prev_err = f64::INFINITY;
    for n in [129, 257] {
        let psi = ho_wavefunction(&state, &ho_grid(n), HoForm::Travelling).unwrap();
        let t = expectation_op(&PhaseOperator::Kinetic(h.clone()), &psi, None).unwrap();
        let u = expectation_op(&PhaseOperator::Virial(h.clone()), &psi, None).unwrap();
        assert!((t - u).abs() <= 1e-6);
        let err = (t - 0.25).abs();
        assert!(err <= 2e-3, "⟨T̂⟩ = {t}");
        assert!(err < prev_err);
        prev_err = err;
        let total = expectation_op(&PhaseOperator::Composite(h.clone()), &psi, None).unwrap();
        assert_relative_eq!(total, t + u, max_relative = 1e-12);
    }
}

#[test]
fn free_quantum_potential_and_force_vanish() {
    let g = ho_grid(65);
    let h = HamiltonianModel::free(1.0).unwrap();
    let psi = gaussian_packet(&PacketSpec::new(0.5, 1.0, 1.0, 1.0), &g, 1.0).unwrap();
    let uq = quantum_potential(&psi, &h).unwrap();
    let f = quantum_force(&psi, &h).unwrap();
    assert!(uq.values.iter().all(|&v| v == 0.0));
    assert!(f.values.iter().all(|&v| v == 0.0));
}

fn ho_uq_error(n: usize) -> (f64, usize) {
    let g = ho_grid(n);
    let h = HamiltonianModel::harmonic(1.0, 1.0).unwrap();
    let state = HoStationaryState::ground(1.0, 1.0, 1.0).unwrap();
    let psi = ho_wavefunction(&state, &g, HoForm::Travelling).unwrap();
    let uq = quantum_potential(&psi, &h).unwrap();
    let f = quantum_force(&psi, &h).unwrap();
    assert!(f
        .values
        .iter()
        .zip(&f.valid)
        .all(|(v, ok)| !ok || v.is_finite()));
    let core = state.vortex_core(1.5);
    let mut worst = 0.0_f64;
    let mut count = 0;
    for ((i, j), v) in uq.values.indexed_iter() {
        let (q, p) = (g.q_at(i), g.p_at(j));
        if !uq.valid[[i, j]] || uq.one_sided[[i, j]] || core.contains(q, p) || q * q + p * p > 25.0
        {
            continue;
        }
        // (ħω/2)ξ²/r² − ½mω²q² with m = ω = ħ = 1
        let exact = 0.5 * q * q / (q * q + p * p) - 0.5 * q * q;
        worst = worst.max((v - exact).abs());
        count += 1;
    }
    (worst, count)
}

#[test]
fn ho_quantum_potential_matches_closed_form() {
    let (coarse, n1) = ho_uq_error(257);
    let (fine, n2) = ho_uq_error(513);
    assert!(n1 > 1000 && n2 > n1);
    assert!(coarse <= 2e-4 && fine <= 1e-5, "{coarse} {fine}");
    let slope = (coarse / fine).log2();
    assert!((slope - 4.0).abs() <= 0.3, "slope {slope}");
}

#[test]
fn separable_force_has_no_homogeneous_component() {
    let g = ho_grid(97);
    let x = gaussian_packet(&PacketSpec::new(0.5, 0.3, 1.0, 0.8), &g, 1.0).unwrap();
    let y = gaussian_packet(&PacketSpec::new(-0.5, 0.5, 1.0, 0.8), &g, 1.0).unwrap();
    let state = SeparableState { x, y };
    let h = SeparableHamiltonian {
        x: HamiltonianModel::harmonic(1.0, 1.0).unwrap(),
        y: HamiltonianModel::free(1.0).unwrap(),
    };
    let (fx, fy) = state.quantum_force(&h).unwrap();
    assert!(fy.values.iter().all(|&v| v == 0.0));
    assert!(fx.values.iter().any(|&v| v != 0.0));
}

#[test]
fn momentum_diagnostic_examples() {
    let g = eigen_grid();
    let pw = momentum_rows(&g, 1.0).unwrap();
    // Keep only whole-momentum rows so every evaluated row is periodic.
    let mut rows = pw.clone();
    for j in 0..g.n_p() {
        let p = g.p_at(j);
        if (p - p.round()).abs() > 1e-12 || p.abs() > 1.0 {
            rows.values_mut()
                .column_mut(j)
                .fill(Complex64::new(0.0, 0.0));
        }
    }
    let d = momentum_consistency_diagnostic(&rows);
    assert!(d.evaluated_nodes > 0);
    assert!(d.max_imag <= 1e-8 && d.max_deviation <= 1e-8, "{d:?}");

    let g = PhaseGrid::new(-10.0, 10.0, -3.0, 3.0, 401, 61, BoundaryMode::Truncate).unwrap();
    let sigma = 1.0;
    let real = PhaseWaveFunction::from_fn(g, 1.0, |q, p| {
        Complex64::new((-q * q / (4.0 * sigma * sigma) - p * p / 2.0).exp(), 0.0)
    })
    .unwrap();
    let d = momentum_consistency_diagnostic(&real);
    assert_eq!(d.max_real, 0.0);
    assert!(d.max_deviation > 0.1);
    assert!(d.mean_square > 0.0);

    let dev = |w: f64| {
        let psi = PhaseWaveFunction::from_fn(g, 1.0, |q, p| {
            Complex64::from_polar((-q * q / (4.0 * w * w) - p * p / 2.0).exp(), 1.0 * q)
        })
        .unwrap();
        let i0 = g.q.nearest(0.0);
        let j0 = g.p.nearest(0.0);
        let p1 = apply(&PhaseOperator::Momentum, &psi, None).unwrap();
        let tmp = PhaseWaveFunction::new(g, p1.clone(), 1.0).unwrap();
        let p2 = apply(&PhaseOperator::Momentum, &tmp, None).unwrap();
        let v = psi.values()[[i0, j0]];
        ((p2[[i0, j0]] / v) - (p1[[i0, j0]] / v).re.powi(2)).norm()
    };
    assert!(dev(2.0) < dev(1.0));
}

#[test]
fn stencils_converge_at_fourth_order() {
    let f = |x: f64| (x * x * x - x) * (-x * x).exp();
    let df = |x: f64| (3.0 * x * x - 1.0 - 2.0 * x * (x * x * x - x)) * (-x * x).exp();
    let err = |n: usize| {
        let h = 10.0 / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| -5.0 + i as f64 * h).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let d = stencil::derivative_1d(&vals, h, false);
        xs.iter()
            .zip(&d)
            .map(|(x, v)| (v - df(*x)).abs())
            .fold(0.0, f64::max)
    };
    let (a, b, c) = (err(101), err(201), err(401));
    for s in [(a / b).log2(), (b / c).log2()] {
        assert!((s - 4.0).abs() <= 0.3, "slope {s}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn apply_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, k in 0usize..5) {
        let g = ho_grid(48);
        let h = HamiltonianModel::harmonic(1.0, 1.3).unwrap();
        let op = [
            PhaseOperator::Momentum,
            PhaseOperator::Position,
            PhaseOperator::Kinetic(h.clone()),
            PhaseOperator::Virial(h.clone()),
            PhaseOperator::Composite(h),
        ][k].clone();
        let x = gaussian_packet(&PacketSpec::new(1.0, 0.5, 1.0, 1.0), &g, 1.0).unwrap();
        let y = gaussian_packet(&PacketSpec::new(-0.5, -1.0, 0.8, 1.0), &g, 1.0).unwrap();
        let (ca, cb) = (Complex64::new(a, 0.5), Complex64::new(0.2, b));
        let lhs = apply(&op, &(&(&x * ca) + &(&y * cb)), None).unwrap();
        let rhs: Array2<Complex64> =
            apply(&op, &x, None).unwrap().mapv(|v| v * ca) + apply(&op, &y, None).unwrap().mapv(|v| v * cb);
        let d = (&lhs - &rhs).iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        prop_assert!(d <= 1e-12);
    }
}
