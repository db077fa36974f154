use std::f64::consts::PI;

use approx::assert_relative_eq;
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use qphase_core::dynamics::*;
use qphase_core::scenarios::{
    gaussian_packet, plane_wave, plane_wave_at, PacketSpec, PlaneWaveSpec,
};
use qphase_core::*;

fn square(l: f64, n: usize) -> PhaseGrid {
    PhaseGrid::new(-l, l, -l, l, n, n, BoundaryMode::Truncate).unwrap()
}

fn max_diff(a: &PhaseWaveFunction, b: &PhaseWaveFunction) -> f64 {
    (a.values() - b.values())
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.norm()))
}

fn l2_diff(a: &PhaseWaveFunction, b: &PhaseWaveFunction) -> f64 {
    (a - b).norm_squared().sqrt()
}

#[test]
fn build_flow_examples() {
    let g = square(4.0, 33);
    let free = build_flow(&HamiltonianModel::free(2.0).unwrap(), &g);
    let harm = build_flow(&HamiltonianModel::harmonic(1.5, 2.0).unwrap(), &g);
    let flat = build_flow(&HamiltonianModel::constant(3.0), &g);
    for i in 0..g.n_q() {
        for j in 0..g.n_p() {
            let (q, p) = (g.q_at(i), g.p_at(j));
            assert_eq!(free.vq()[[i, j]], p / 4.0);
            assert_eq!(free.vp()[[i, j]], 0.0);
            assert_relative_eq!(harm.vq()[[i, j]], p / 3.0, max_relative = 1e-15);
            assert_relative_eq!(
                harm.vp()[[i, j]],
                -1.5 * 4.0 * q / 2.0,
                max_relative = 1e-15
            );
            assert_eq!(flat.vp()[[i, j]], 0.0);
        }
    }
}

#[test]
fn tabulated_flow_flags_edges() {
    let g = square(4.0, 41);
    let table = TabulatedPotential::on_axis(&g.q, |q| 0.5 * q * q).unwrap();
    let flow = build_flow(&HamiltonianModel::tabulated(1.0, table).unwrap(), &g);
    assert_eq!(flow.flagged_q_nodes(), &[0, 1, 39, 40]);
    // Quadratic samples: the 4th-order stencil is exact in the interior.
    for i in 2..39 {
        assert!((flow.vp()[[i, 5]] + 0.5 * g.q_at(i)).abs() < 1e-12);
    }
}

#[test]
fn divergence_examples() {
    let g = square(5.0, 64);
    assert_eq!(
        divergence_max(&build_flow(&HamiltonianModel::free(1.0).unwrap(), &g)),
        0.0
    );
    assert!(
        divergence_max(&build_flow(
            &HamiltonianModel::harmonic(1.0, 1.0).unwrap(),
            &g
        )) <= 1e-10
    );
    let vq = Array2::from_shape_fn(g.shape(), |(i, _)| g.q_at(i));
    let synthetic = PhaseFlowField::from_nodal(g, vq, Array2::zeros(g.shape())).unwrap();
    assert_relative_eq!(divergence_max(&synthetic), 1.0, max_relative = 1e-12);
}

#[test]
fn harmonic_characteristic_stays_on_circle() {
    let g = square(4.0, 16);
    let flow = build_flow(&HamiltonianModel::harmonic(1.0, 1.0).unwrap(), &g);
    let path = trace_characteristic((1.0, 0.0), &flow, 4.0 * PI, 1e-3).unwrap();
    let r2 = |z: &PhasePoint| z.0 * z.0 + z.1 * z.1;
    let drift = path.iter().map(|z| (r2(z) - 1.0).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-10, "drift {drift}");
    let end = path.last().unwrap();
    assert!((end.0 - 1.0).abs() < 1e-9 && end.1.abs() < 1e-9);
}

#[test]
fn harmonic_orbit_period_is_doubled() {
    let g = square(4.0, 16);
    for omega in [1.0, 2.5] {
        let flow = build_flow(&HamiltonianModel::harmonic(1.0, omega).unwrap(), &g);
        let t = orbit_period((1.0, 0.3), &flow, 1e-3 / omega, 10.0 * PI / omega)
            .unwrap()
            .unwrap();
        assert_relative_eq!(t, 4.0 * PI / omega, max_relative = 1e-6);
    }
}

#[test]
fn free_characteristic_is_linear() {
    let g = square(4.0, 16);
    let flow = build_flow(&HamiltonianModel::free(2.0).unwrap(), &g);
    let path = trace_characteristic((0.0, 1.5), &flow, 2.5, 0.1).unwrap();
    let end = path.last().unwrap();
    assert_relative_eq!(end.0, 1.5 * 2.5 / 4.0, max_relative = 1e-14);
    assert_eq!(end.1, 1.5);
}

#[test]
fn rk4_converges_at_fourth_order() {
    let g = square(4.0, 16);
    let flow = build_flow(&HamiltonianModel::harmonic(1.0, 1.0).unwrap(), &g);
    let t = 4.0 * PI;
    let exact = |t: f64| ((t / 2.0).cos(), -(t / 2.0).sin());
    let dts = [0.4, 0.2, 0.1, 0.05];
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let path = trace_characteristic((1.0, 0.0), &flow, t, dt).unwrap();
            let z = path.last().unwrap();
            let e = exact(t);
            ((z.0 - e.0).powi(2) + (z.1 - e.1).powi(2)).sqrt()
        })
        .collect();
    for k in 1..errs.len() {
        let slope = (errs[k - 1] / errs[k]).ln() / (dts[k - 1] / dts[k]).ln();
        assert!((slope - 4.0).abs() <= 0.2, "slope {slope}");
    }
}

#[test]
fn tabulated_trace_leaving_grid_errors() {
    let g = square(2.0, 41);
    let table = TabulatedPotential::on_axis(&g.q, |_| 0.0).unwrap();
    let flow = build_flow(&HamiltonianModel::tabulated(1.0, table).unwrap(), &g);
    let r = trace_characteristic((1.5, 2.0), &flow, 10.0, 0.01);
    assert!(matches!(r, Err(QpError::OutOfDomain { .. })));
}

#[test]
fn plane_wave_row_picks_up_eigenphase() {
    let g = PhaseGrid::new(
        -4.0 * PI,
        4.0 * PI,
        -5.0,
        5.0,
        256,
        256,
        BoundaryMode::PeriodicQ,
    )
    .unwrap();
    let flow = build_flow(&HamiltonianModel::free(1.0).unwrap(), &g);
    let psi = qphase_core::scenarios::momentum_rows(&g, 1.0).unwrap();
    let dt = 0.01;
    let out = advect_step(&psi, &flow, dt);
    // Rows with p·L/2πħ whole are periodic eigenrows.
    for j in 0..g.n_p() {
        let p = g.p_at(j);
        let cycles = p * g.q.length() / (2.0 * PI);
        if (cycles - cycles.round()).abs() > 1e-9 || p.abs() > 1.5 {
            continue;
        }
        let phase = Complex64::from_polar(1.0, -p * p / 2.0 * dt);
        for i in 0..g.n_q() {
            assert!((out.values()[[i, j]] - psi.values()[[i, j]] * phase).norm() <= 1e-6);
        }
    }
}

#[test]
fn identity_flow_is_exact() {
    let g = square(6.0, 48);
    let flow = build_flow(&HamiltonianModel::constant(2.0), &g);
    assert!(flow.is_identity());
    let psi = gaussian_packet(&PacketSpec::minimal(0.5, -0.2, 0.8, 1.0), &g, 1.0).unwrap();
    for interp in [
        Interpolation::Hermite4,
        Interpolation::CatmullRom,
        Interpolation::Bilinear,
    ] {
        assert_eq!(
            advect_step_with(&psi, &flow, 0.3, interp).values(),
            psi.values()
        );
    }
    let rec = evolve(&psi, &flow, 1.0, 0.1, 5, &EvolveOptions::default()).unwrap();
    assert_eq!(rec.final_state.values(), psi.values());
}

#[test]
fn harmonic_revival_after_one_flow_period() {
    let g = square(8.0, 256);
    let flow = build_flow(&HamiltonianModel::harmonic(1.0, 1.0).unwrap(), &g);
    let psi =
        gaussian_packet(&PacketSpec::minimal(2.0, 0.0, 0.5_f64.sqrt(), 1.0), &g, 1.0).unwrap();
    let period = 4.0 * PI;
    let opts = EvolveOptions {
        keep_states: false,
        ..Default::default()
    };
    let rec = evolve(&psi, &flow, period, period / 1000.0, 1000, &opts).unwrap();
    let err = l2_diff(&rec.final_state, &psi);
    assert!(err <= 1e-3, "revival L2 error {err}");
    assert!(rec.max_norm_drift() <= 1e-4);
    // Half a period lands on the mirror point.
    let half = evolve(&psi, &flow, period / 2.0, period / 1000.0, 500, &opts).unwrap();
    let mirrored = gaussian_packet(
        &PacketSpec::minimal(-2.0, 0.0, 0.5_f64.sqrt(), 1.0),
        &g,
        1.0,
    )
    .unwrap();
    let rho_a = half.final_state.marginal_q();
    let rho_b = mirrored.marginal_q();
    let d = rho_a
        .iter()
        .zip(&rho_b)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(d < 1e-3);
}

#[test]
fn free_plane_wave_norm_and_exactness() {
    let g = PhaseGrid::new(
        -4.0 * PI,
        4.0 * PI,
        -5.0,
        5.0,
        256,
        256,
        BoundaryMode::PeriodicQ,
    )
    .unwrap();
    let spec = PlaneWaveSpec::new(1.0);
    let psi = plane_wave(&spec, &g, 1.0).unwrap();
    let flow = build_flow(&HamiltonianModel::free(1.0).unwrap(), &g);
    let opts = EvolveOptions {
        keep_states: false,
        ..Default::default()
    };
    let rec = evolve(&psi, &flow, 1.0, 1e-3, 100, &opts).unwrap();
    assert!(rec.max_norm_drift() <= 1e-6);
    let exact = plane_wave_at(&spec, &g, 1.0, 1.0, 1.0).unwrap();
    assert!(max_diff(&rec.final_state, &exact) <= 1e-4);
    assert_eq!(rec.snapshots.len(), 11);
    assert!(rec.snapshots.windows(2).all(|w| w[1].time > w[0].time));
}

#[test]
fn evolve_adjusts_step_to_land_on_final_time() {
    let g = square(6.0, 32);
    let flow = build_flow(&HamiltonianModel::free(1.0).unwrap(), &g);
    let psi = gaussian_packet(&PacketSpec::minimal(0.0, 0.0, 1.0, 1.0), &g, 1.0).unwrap();
    let rec = evolve(&psi, &flow, 1.0, 0.3, 1, &EvolveOptions::default()).unwrap();
    assert_eq!(rec.steps, 3);
    assert_relative_eq!(
        rec.snapshots.last().unwrap().time,
        1.0,
        max_relative = 1e-15
    );
    assert!(evolve(&psi, &flow, 0.0, 0.1, 1, &EvolveOptions::default()).is_err());
}

#[test]
fn leak_monitor_aborts() {
    let g = PhaseGrid::new(-4.0, 4.0, -4.0, 4.0, 64, 64, BoundaryMode::Truncate).unwrap();
    let flow = build_flow(&HamiltonianModel::free(1.0).unwrap(), &g);
    let psi = gaussian_packet(&PacketSpec::minimal(0.0, 1.5, 1.0, 1.0), &g, 1.0).unwrap();
    let opts = EvolveOptions {
        leak_limit: Some(1e-4),
        keep_states: false,
        ..Default::default()
    };
    let r = evolve(&psi, &flow, 10.0, 0.05, 10, &opts);
    assert!(matches!(r, Err(QpError::BoundaryLeak { .. })));
}

#[test]
fn relativistic_phase_velocity_examples() {
    let c = 1.0;
    for (v, expect) in [(0.01, 0.005000125006250391), (0.6, 1.0 / 3.0)] {
        let p = relativistic_momentum(v, 1.0, c).unwrap();
        let vp = relativistic_phase_velocity(p, 1.0, c).unwrap();
        assert_relative_eq!(vp, expect, max_relative = 1e-12);
        assert_relative_eq!(
            phase_velocity_from_speed(v, c).unwrap(),
            expect,
            max_relative = 1e-12
        );
    }
    let near_c = phase_velocity_from_speed(0.9999, c).unwrap();
    assert!((0.98..=1.0).contains(&near_c));
    assert_eq!(relativistic_phase_velocity(0.0, 1.0, c).unwrap(), 0.0);
    assert!(relativistic_phase_velocity(1.0, 0.0, c).is_err());
    assert!(relativistic_phase_velocity(1.0, 1.0, -1.0).is_err());
}

#[test]
fn relativistic_flow_limits() {
    let g = square(3.0, 31);
    let h = HamiltonianModel::relativistic(1.0, 1e3, Potential::Zero).unwrap();
    let plus = build_relativistic_flow(&h, &g, 1.0, &Metric::Cartesian).unwrap();
    let minus = build_relativistic_flow(&h, &g, -1.0, &Metric::Cartesian).unwrap();
    let nonrel = build_flow(&HamiltonianModel::free(1.0).unwrap(), &g);
    for ((i, j), v) in plus.vq().indexed_iter() {
        assert_eq!(minus.vq()[[i, j]], -v);
        let nr = nonrel.vq()[[i, j]];
        if g.p_at(j).abs() > 1.0 {
            continue;
        }
        if nr != 0.0 {
            assert!(((v - nr) / nr).abs() <= 1e-6);
        } else {
            assert_eq!(*v, 0.0);
        }
    }
    assert!(build_relativistic_flow(&h, &g, 1.0, &Metric::Lame(vec![1.0, 2.0, 1.0])).is_err());
    assert!(build_relativistic_flow(&h, &g, 0.5, &Metric::Cartesian).is_err());
    assert!(build_relativistic_flow(
        &HamiltonianModel::free(1.0).unwrap(),
        &g,
        1.0,
        &Metric::Cartesian
    )
    .is_err());
}

#[test]
fn nonrelativistic_limit_is_first_order_in_v2() {
    // Relative deviation from p/2m falls as 1/c².
    let dev = |c: f64| {
        let v = relativistic_phase_velocity(1.0, 1.0, c).unwrap();
        (v - 0.5).abs() / 0.5
    };
    let ratio = dev(100.0) / dev(1000.0);
    assert!((ratio - 100.0).abs() < 1.0, "ratio {ratio}");
}

#[test]
fn phase_velocity_is_monotone_and_bounded() {
    let mut prev = 0.0;
    for k in 1..=9999 {
        let v = k as f64 * 1e-4;
        let vp = phase_velocity_from_speed(v, 1.0).unwrap();
        assert!(vp > prev && vp <= 1.0);
        prev = vp;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// |ψ|² after one step equals |ψ|² at the departure point.
    #[test]
    fn liouville_property(q0 in -1.0..1.0f64, p0 in -1.0..1.0f64, s in 0.8..1.5f64, dt in 0.01..0.05f64) {
        let g = PhaseGrid::new(-7.5, 7.5, -5.5, 5.5, 512, 384, BoundaryMode::Truncate).unwrap();
        let flow = build_flow(&HamiltonianModel::harmonic(1.0, 1.0).unwrap(), &g);
        let spec = PacketSpec::new(q0, p0, s, 1.0);
        let psi = gaussian_packet(&spec, &g, 1.0).unwrap();
        let out = advect_step(&psi, &flow, dt);
        let rho = |q: f64, p: f64| {
            let x = q - q0;
            let y = p - p0;
            (-x * x / (2.0 * s * s) - y * y / 2.0).exp()
        };
        let (ic, jc) = (g.q.nearest(q0), g.p.nearest(p0));
        let rho_scale = psi.values()[[ic, jc]].norm_sqr() / rho(g.q_at(ic), g.p_at(jc));
        for i in (0..g.n_q()).step_by(7) {
            for j in (0..g.n_p()).step_by(7) {
                let (qd, pd) = rk4_step(&flow, (g.q_at(i), g.p_at(j)), -dt);
                if qd.abs() > 7.0 || pd.abs() > 5.0 {
                    continue;
                }
                let want = rho(qd, pd) * rho_scale;
                let got = out.values()[[i, j]].norm_sqr();
                prop_assert!((got - want).abs() <= 1e-8, "node ({}, {}): {} vs {}", i, j, got, want);
            }
        }
    }

    #[test]
    fn superposition_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let g = square(6.0, 64);
        let flow = build_flow(&HamiltonianModel::harmonic(1.0, 1.0).unwrap(), &g);
        let x = gaussian_packet(&PacketSpec::minimal(1.0, 0.0, 0.7, 1.0), &g, 1.0).unwrap();
        let y = gaussian_packet(&PacketSpec::minimal(-1.0, 0.5, 0.7, 1.0), &g, 1.0).unwrap();
        let ca = Complex64::new(a, 0.3);
        let cb = Complex64::new(b, -0.1);
        let lhs = advect_step(&(&(&x * ca) + &(&y * cb)), &flow, 0.05);
        let rhs = &(&advect_step(&x, &flow, 0.05) * ca) + &(&advect_step(&y, &flow, 0.05) * cb);
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12);
    }
}
