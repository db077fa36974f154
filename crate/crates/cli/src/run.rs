//! Scenario execution and result files.

use std::f64::consts::PI;
use std::io;
use std::path::Path;

use qphase_core::analysis::{
    fringe_extract, operator_uncertainty_product, uncertainty_product, virial_report,
};
use qphase_core::dynamics::{
    build_flow, build_relativistic_flow, evolve, relativistic_momentum,
    relativistic_phase_velocity, EvolutionRecord, EvolveOptions, Metric,
};
use qphase_core::oracle::{
    compare_densities, ho_ground_density, moments, ConfigWaveFunction, CrankNicolson,
};
use qphase_core::scenarios::{
    gaussian_packet, interference_pattern, plane_wave, plane_wave_at, two_slit_superpose,
    PacketSpec, PlaneWaveSpec, SlitSpec,
};
use qphase_core::stationary::{
    ho_wavefunction, quantize_ho, stationary_residual, HoForm, HoStationaryState, ResidualOptions,
};
use qphase_core::{HamiltonianModel, PhaseGrid, PhaseWaveFunction, Potential, QpError};
use thiserror::Error;

use crate::config::{RunConfig, Scenario};
use crate::output::Output;
use crate::suite::uncertainty_corpus;

/// Speeds listed by `relativistic_table`, as fractions of c.
pub const SPEEDS: [f64; 16] = [
    0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999, 0.9999,
];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] QpError),
    #[error("writing results: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: Scenario,
    /// Key results in the order they were produced.
    pub results: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn result(&self, key: &str) -> Option<&str> {
        self.results
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

struct Ctx<'a> {
    c: &'a RunConfig,
    out: Output,
    report: Report,
}

impl Ctx<'_> {
    fn put(&mut self, key: &str, value: impl Into<String>) {
        self.report.results.push((key.to_string(), value.into()));
    }

    fn put_num(&mut self, key: &str, x: f64) {
        let s = self.out.num(x);
        self.put(key, s);
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.report.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    fn grid(&self) -> Result<PhaseGrid, QpError> {
        let g = &self.c.grid;
        PhaseGrid::new(g.q_min, g.q_max, g.p_min, g.p_max, g.n_q, g.n_p, g.boundary)
    }

    fn evolve_opts(&self) -> EvolveOptions {
        EvolveOptions {
            interpolation: self.c.interpolation,
            keep_states: true,
            ..Default::default()
        }
    }

    fn steps(&self) -> usize {
        (self.c.time.t_final / self.c.time.dt).round().max(1.0) as usize
    }

    fn snapshot_every(&self) -> usize {
        match self.c.time.snapshot_every {
            0 => self.steps(),
            k => k,
        }
    }

    /// Fields, marginals and `metrics.csv` for every snapshot; `extra` holds one row per snapshot.
    fn write_evolution(
        &self,
        rec: &EvolutionRecord,
        names: &[&str],
        extra: &[Vec<f64>],
    ) -> io::Result<()> {
        let mut rows = Vec::new();
        for (k, s) in rec.snapshots.iter().enumerate() {
            let state = s.state.as_ref().expect("snapshots keep states");
            self.out.fields(k, state)?;
            self.out.marginal(k, state)?;
            let mut row = vec![
                s.step.to_string(),
                self.out.num(s.time),
                self.out.num(s.norm2),
                self.out.num(s.edge_mass),
            ];
            row.extend(extra[k].iter().map(|&x| self.out.num(x)));
            rows.push(row);
        }
        let mut header = vec!["step", "time", "norm2", "edge_mass"];
        header.extend_from_slice(names);
        self.out.csv("metrics.csv", &header, rows)
    }

    fn single_state(
        &self,
        psi: &PhaseWaveFunction,
        names: &[&str],
        extra: &[f64],
    ) -> io::Result<()> {
        self.out.fields(0, psi)?;
        self.out.marginal(0, psi)?;
        let mut row = vec![
            "0".to_string(),
            self.out.num(0.0),
            self.out.num(psi.norm_squared()),
        ];
        row.extend(extra.iter().map(|&x| self.out.num(x)));
        let mut header = vec!["step", "time", "norm2"];
        header.extend_from_slice(names);
        self.out.csv("metrics.csv", &header, [row])
    }
}

const DRIFT_LIMIT: f64 = 1e-6;

/// Runs the configured scenario, writing results into `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<Report, RunError> {
    let out = Output::create(out_dir, config.output.precision)?;
    let report = Report {
        scenario: config.scenario,
        results: Vec::new(),
        checks: Vec::new(),
    };
    let mut ctx = Ctx {
        c: config,
        out,
        report,
    };
    match config.scenario {
        Scenario::FreeWave => free_wave(&mut ctx)?,
        Scenario::FreePacket => packet_run(&mut ctx, false)?,
        Scenario::HarmonicEvolve => packet_run(&mut ctx, true)?,
        Scenario::HarmonicStationary => harmonic_stationary(&mut ctx)?,
        Scenario::Quantize => quantize(&mut ctx)?,
        Scenario::TwoSlit => two_slit(&mut ctx)?,
        Scenario::UncertaintySuite => uncertainty_suite(&mut ctx)?,
        Scenario::RelativisticTable => relativistic_table(&mut ctx)?,
        Scenario::OracleCompare => oracle_compare(&mut ctx)?,
    }
    ctx.out.text("summary.txt", &summary(config, &ctx.report))?;
    Ok(ctx.report)
}

pub fn summary(config: &RunConfig, report: &Report) -> String {
    let mut s = format!(
        "qphase {}\nscenario = {}\n\n[results]\n",
        env!("CARGO_PKG_VERSION"),
        config.scenario.name()
    );
    for (k, v) in &report.results {
        s += &format!("{k} = {v}\n");
    }
    s += "\n[checks]\n";
    for c in &report.checks {
        s += &format!(
            "{} {}: {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    s += "\n[config]\n";
    for (k, v) in config.echo() {
        s += &format!("{k} = {v}\n");
    }
    s
}

fn free_wave(ctx: &mut Ctx) -> Result<(), RunError> {
    let c = ctx.c;
    let (hbar, m) = (c.physics.hbar, c.physics.mass);
    let g = ctx.grid()?;
    let spec = PlaneWaveSpec::new(c.physics.p0);
    let psi0 = plane_wave(&spec, &g, hbar)?;
    let flow = build_flow(&HamiltonianModel::free(m)?, &g);
    let rec = evolve(
        &psi0,
        &flow,
        c.time.t_final,
        c.time.dt,
        ctx.snapshot_every(),
        &ctx.evolve_opts(),
    )?;

    // On a truncated window only nodes whose departure point stays clear of the edge are compared.
    let margin = 3.0 * g.dq();
    let mut extra = Vec::new();
    for s in &rec.snapshots {
        let exact = plane_wave_at(&spec, &g, hbar, m, s.time)?;
        let state = s.state.as_ref().expect("snapshots keep states");
        let mut err = 0.0_f64;
        for ((i, j), v) in state.values().indexed_iter() {
            let back = g.q_at(i) - g.p_at(j) * s.time / (2.0 * m);
            if g.is_periodic_q() || (back >= g.q.min + margin && back <= g.q.max - margin) {
                err = err.max((v - exact.values()[[i, j]]).norm());
            }
        }
        extra.push(vec![err]);
    }
    ctx.write_evolution(&rec, &["max_error"], &extra)?;

    let drift = rec.max_norm_drift();
    let err = extra.last().map_or(0.0, |r| r[0]);
    ctx.put("steps", rec.steps.to_string());
    ctx.put_num("dt", rec.dt);
    ctx.put_num("energy", c.physics.p0 * c.physics.p0 / (2.0 * m));
    ctx.put_num("norm_drift", drift);
    ctx.put_num("max_error", err);
    let d = ctx.out.num(drift);
    ctx.check("norm_drift", drift <= DRIFT_LIMIT, format!("{d} <= 1e-6"));
    let e = ctx.out.num(err);
    ctx.check("plane_wave_error", err <= 1e-4, format!("{e} <= 1e-4"));
    Ok(())
}

fn packet_run(ctx: &mut Ctx, harmonic: bool) -> Result<(), RunError> {
    let c = ctx.c;
    let ph = &c.physics;
    let g = ctx.grid()?;
    let spec = PacketSpec::new(ph.q0, ph.p0, ph.sigma_q, ph.sigma_p());
    let psi0 = gaussian_packet(&spec, &g, ph.hbar)?;
    let h = if harmonic {
        HamiltonianModel::harmonic(ph.mass, ph.omega)?
    } else {
        HamiltonianModel::free(ph.mass)?
    };
    let flow = build_flow(&h, &g);
    let rec = evolve(
        &psi0,
        &flow,
        c.time.t_final,
        c.time.dt,
        ctx.snapshot_every(),
        &ctx.evolve_opts(),
    )?;
    let extra: Vec<Vec<f64>> = rec
        .snapshots
        .iter()
        .map(|s| {
            let psi = s.state.as_ref().expect("snapshots keep states");
            let u = uncertainty_product(psi);
            let e = psi
                .scaled(1.0 / psi.norm_squared().sqrt())
                .expectation(|q, p| h.energy(q, p));
            vec![u.mean_q, u.mean_p, u.var_q, u.var_p, e]
        })
        .collect();
    ctx.write_evolution(
        &rec,
        &["mean_q", "mean_p", "var_q", "var_p", "energy"],
        &extra,
    )?;
    let drift = rec.max_norm_drift();
    ctx.put("steps", rec.steps.to_string());
    ctx.put_num("dt", rec.dt);
    ctx.put_num("norm_drift", drift);
    if let Some(last) = extra.last() {
        ctx.put_num("final_mean_q", last[0]);
        ctx.put_num("final_mean_p", last[1]);
    }
    if harmonic {
        ctx.put_num("flow_period", 4.0 * PI / ph.omega);
    } else {
        ctx.put_num(
            "transport_mean_q",
            ph.q0 + ph.p0 * rec.steps as f64 * rec.dt / (2.0 * ph.mass),
        );
    }
    let d = ctx.out.num(drift);
    ctx.check("norm_drift", drift <= DRIFT_LIMIT, format!("{d} <= 1e-6"));
    Ok(())
}

fn harmonic_stationary(ctx: &mut Ctx) -> Result<(), RunError> {
    let ph = ctx.c.physics.clone();
    let g = ctx.grid()?;
    let state = HoStationaryState::new(ph.mass, ph.omega, ph.hbar, ph.branch, ph.n, ph.beta())?;
    let psi = ho_wavefunction(&state, &g, HoForm::Travelling)?;
    let h = state.hamiltonian();
    let opts = ResidualOptions {
        exclude: vec![state.vortex_core(ph.core_radius)],
    };
    let res = stationary_residual(&psi, &h, state.energy(), &opts);
    let vir = virial_report(&psi, &h)?;
    let unc = uncertainty_product(&psi);
    ctx.single_state(
        &psi,
        &["residual", "kinetic", "virial", "product"],
        &[res.residual, vir.kinetic, vir.virial, unc.product],
    )?;

    ctx.put_num("energy", state.energy());
    ctx.put("n_bar", state.n_bar().to_string());
    ctx.put_num("residual", res.residual);
    ctx.put("residual_nodes", res.evaluated_nodes.to_string());
    ctx.put("vortices", res.vortices.len().to_string());
    ctx.put_num("kinetic", vir.kinetic);
    ctx.put_num("virial", vir.virial);
    ctx.put_num("uncertainty_product", unc.product);
    let gap = (vir.kinetic - vir.virial).abs();
    let d = ctx.out.num(gap);
    ctx.check(
        "virial_equality",
        gap <= 1e-5,
        format!("|T - U| = {d} <= 1e-5"),
    );
    if ph.beta.is_none() {
        let dev = (unc.product - 0.5 * ph.hbar).abs();
        let d = ctx.out.num(dev);
        ctx.check(
            "uncertainty_saturation",
            dev <= 1e-6,
            format!("|product - hbar/2| = {d} <= 1e-6"),
        );
        match ho_ground_density(&g.q, ph.mass, ph.omega, ph.hbar) {
            Ok(exact) => {
                let cmp = compare_densities(&psi.marginal_q(), &exact, &g.q)?;
                ctx.put_num("marginal_linf", cmp.linf);
                let d = ctx.out.num(cmp.linf);
                ctx.check(
                    "marginal_vs_schrodinger",
                    cmp.linf <= 1e-8,
                    format!("{d} <= 1e-8"),
                );
            }
            Err(e) => ctx.put("marginal_linf", format!("skipped ({e})")),
        }
    }
    Ok(())
}

fn quantize(ctx: &mut Ctx) -> Result<(), RunError> {
    let ph = ctx.c.physics.clone();
    let levels = quantize_ho(ph.branch, ph.n_max, ph.mass, ph.omega, ph.hbar)?;
    let rows: Vec<Vec<String>> = levels
        .iter()
        .map(|l| {
            vec![
                l.n.to_string(),
                ctx.out.num(l.energy),
                ctx.out.num(l.turning_point),
                ctx.out.num(l.boundary_ratio),
            ]
        })
        .collect();
    ctx.out.csv(
        "levels.csv",
        &["n", "energy", "turning_point", "boundary_ratio"],
        rows,
    )?;
    let energies: Vec<String> = levels.iter().map(|l| ctx.out.num(l.energy)).collect();
    ctx.put("energies", energies.join(", "));
    let worst = levels.iter().map(|l| l.boundary_ratio).fold(0.0, f64::max);
    ctx.put_num("max_boundary_ratio", worst);
    let d = ctx.out.num(worst);
    ctx.check(
        "turning_point",
        worst <= 1e-10,
        format!("max |psi(a,0)|/max|psi| = {d} <= 1e-10"),
    );
    Ok(())
}

fn two_slit(ctx: &mut Ctx) -> Result<(), RunError> {
    let c = ctx.c;
    let ph = &c.physics;
    let g = ctx.grid()?;
    let spec = SlitSpec {
        separation: ph.slit_d,
        slit_width: ph.slit_sigma,
        momentum_width: ph.slit_sigma_p,
        p0: ph.p0,
        screen_distance: ph.screen_distance,
    };
    let t = spec.screen_time(ph.mass);
    let opts = EvolveOptions {
        keep_states: false,
        ..ctx.evolve_opts()
    };
    let states = two_slit_superpose(&spec, &g, ph.hbar)?;
    let pat = interference_pattern(&states, ph.mass, t, c.time.dt, &opts)?;
    let wide = SlitSpec {
        separation: 2.0 * ph.slit_d,
        ..spec
    };
    let pat2 = interference_pattern(
        &two_slit_superpose(&wide, &g, ph.hbar)?,
        ph.mass,
        t,
        c.time.dt,
        &opts,
    )?;

    let out = &ctx.out;
    out.fields(0, &states.superposed)?;
    out.fields(1, &pat.final_state)?;
    out.marginal(0, &states.superposed)?;
    out.marginal(1, &pat.final_state)?;
    let rows: Vec<Vec<f64>> = (0..pat.q.len())
        .map(|i| vec![pat.q[i], pat.total[i], pat.direct[i], pat.cross[i]])
        .collect();
    out.table("pattern.csv", &["q", "total", "direct", "cross"], &rows)?;
    let steps = (t / c.time.dt).round().max(1.0) as usize;
    let metrics = [
        vec![
            "0".to_string(),
            out.num(0.0),
            out.num(states.superposed.norm_squared()),
            out.num(0.0),
        ],
        vec![
            steps.to_string(),
            out.num(t),
            out.num(pat.final_state.norm_squared()),
            out.num(pat.edge_mass),
        ],
    ];
    out.csv(
        "metrics.csv",
        &["step", "time", "norm2", "edge_mass"],
        metrics,
    )?;

    let predicted = spec.predicted_spacing(ph.mass, ph.hbar);
    let measured = fringe_extract(&pat.cross, &pat.q)?;
    let measured2 = fringe_extract(&pat2.cross, &pat2.q)?;
    let total = fringe_extract(&pat.total, &pat.q)?;
    let top = pat.total.iter().cloned().fold(0.0, f64::max);
    ctx.put_num("screen_time", t);
    ctx.put_num("predicted_spacing", predicted);
    match measured.spacing {
        Some(s) => ctx.put_num("cross_term_spacing", s),
        None => ctx.put("cross_term_spacing", "undefined"),
    }
    match total.spacing {
        Some(s) => ctx.put_num("total_spacing", s),
        None => ctx.put("total_spacing", "undefined"),
    }
    ctx.put("total_maxima", total.maxima.len().to_string());
    ctx.put_num("visibility", total.visibility);
    ctx.put_num("identity_error", pat.identity_error);
    ctx.put_num("linearity_error", pat.linearity_error);
    ctx.put_num("edge_mass", pat.edge_mass);

    let d = ctx.out.num(pat.identity_error);
    ctx.check(
        "pattern_identity",
        pat.identity_error <= 1e-12 * top,
        format!("{d} <= 1e-12 x peak"),
    );
    let d = ctx.out.num(pat.linearity_error);
    ctx.check(
        "linearity",
        pat.linearity_error <= 1e-10,
        format!("{d} <= 1e-10"),
    );
    match (measured.spacing, measured2.spacing) {
        (Some(s), Some(s2)) => {
            let rel = s / predicted - 1.0;
            let detail = format!(
                "{} vs {} ({:+.2}%)",
                ctx.out.num(s),
                ctx.out.num(predicted),
                100.0 * rel
            );
            ctx.check("fringe_spacing", rel.abs() <= 0.05, detail);
            let ratio = s2 / s;
            ctx.put_num("doubled_d_spacing_ratio", ratio);
            let d = ctx.out.num(ratio);
            ctx.check(
                "fringe_halving",
                (ratio - 0.5).abs() <= 0.025,
                format!("ratio {d} within 5% of 0.5"),
            );
        }
        _ => ctx.check(
            "fringe_spacing",
            false,
            "fewer than three cross-term maxima",
        ),
    }
    Ok(())
}

fn uncertainty_suite(ctx: &mut Ctx) -> Result<(), RunError> {
    let ph = ctx.c.physics.clone();
    let g = ctx.grid()?;
    let corpus = uncertainty_corpus(&g, ph.hbar, ph.mass, ph.omega)?;
    let mut rows = Vec::new();
    let mut below = Vec::new();
    let mut off = Vec::new();
    let mut min_product = f64::INFINITY;
    for s in &corpus {
        let r = uncertainty_product(&s.psi);
        let op = operator_uncertainty_product(&s.psi);
        min_product = min_product.min(r.product);
        if r.margin < -1e-6 {
            below.push(format!("{} {}", s.label, ctx.out.num(r.product)));
        }
        if s.saturates && r.margin.abs() > 1e-6 {
            off.push(format!("{} {}", s.label, ctx.out.num(r.product)));
        }
        let nums = [
            r.mean_q, r.mean_p, r.var_q, r.var_p, r.product, r.margin, op.product,
        ];
        let mut row = vec![s.label.clone()];
        row.extend(nums.iter().map(|&x| ctx.out.num(x)));
        rows.push(row);
    }
    let header = [
        "state",
        "mean_q",
        "mean_p",
        "var_q",
        "var_p",
        "product",
        "margin",
        "operator_product",
    ];
    ctx.out.csv("uncertainty.csv", &header, rows)?;
    ctx.put("states", corpus.len().to_string());
    ctx.put_num("min_product", min_product);
    ctx.put("below_bound", below.len().to_string());
    let detail = if below.is_empty() {
        "all products >= hbar/2 - 1e-6".to_string()
    } else {
        below.join("; ")
    };
    ctx.check("uncertainty_bound", below.is_empty(), detail);
    let detail = if off.is_empty() {
        "within 1e-6 of hbar/2".to_string()
    } else {
        off.join("; ")
    };
    ctx.check("saturation", off.is_empty(), detail);
    Ok(())
}

fn relativistic_table(ctx: &mut Ctx) -> Result<(), RunError> {
    let ph = ctx.c.physics.clone();
    let (m, c) = (ph.mass, ph.c);
    let mut rows = Vec::new();
    let mut prev = 0.0;
    let mut ordered = true;
    let mut low_speed = 0.0_f64;
    for b in SPEEDS {
        let v = b * c;
        let p = relativistic_momentum(v, m, c)?;
        let vp = relativistic_phase_velocity(p, m, c)?;
        ordered &= vp > prev && vp <= c;
        prev = vp;
        if b <= 0.05 {
            low_speed = low_speed.max((vp / v - 0.5).abs() / 0.5);
        }
        rows.push(vec![b, p, vp / c, vp / v]);
    }
    ctx.out.table(
        "relativistic.csv",
        &["v_over_c", "momentum", "v_phase_over_c", "v_phase_over_v"],
        &rows,
    )?;
    let at06 = relativistic_phase_velocity(relativistic_momentum(0.6 * c, m, c)?, m, c)? / c;
    ctx.put_num("v_phase_at_0.6c_over_c", at06);
    let d = ctx.out.num(at06);
    ctx.check(
        "v_phase_0.6c",
        (at06 - 1.0 / 3.0).abs() <= 1e-12,
        format!("{d} = 1/3 within 1e-12"),
    );
    ctx.check(
        "monotone_subluminal",
        ordered,
        "v_phase increasing in v and <= c",
    );
    let d = ctx.out.num(low_speed);
    ctx.check(
        "low_speed_half",
        low_speed <= 0.01,
        format!("max |v_phase/v - 1/2|/(1/2) = {d} <= 1% for v <= 0.05c"),
    );

    // Flow comparison at c = 1000 on the configured grid, momenta |p| <= 1.
    let g = ctx.grid()?;
    let rel = build_relativistic_flow(
        &HamiltonianModel::relativistic(m, 1e3, Potential::Zero)?,
        &g,
        1.0,
        &Metric::Cartesian,
    )?;
    let nr = build_flow(&HamiltonianModel::free(m)?, &g);
    let mut worst = 0.0_f64;
    for ((i, j), a) in rel.vq().indexed_iter() {
        let b = nr.vq()[[i, j]];
        if b != 0.0 && g.p_at(j).abs() <= 1.0 {
            worst = worst.max(((a - b) / b).abs());
        }
    }
    ctx.put_num("flow_limit_c1000", worst);
    let d = ctx.out.num(worst);
    ctx.check(
        "nonrelativistic_limit",
        worst <= 1e-6,
        format!("{d} <= 1e-6 for |p| <= 1"),
    );
    Ok(())
}

fn oracle_compare(ctx: &mut Ctx) -> Result<(), RunError> {
    let c = ctx.c;
    let ph = c.physics.clone();
    let (hbar, m, w) = (ph.hbar, ph.mass, ph.omega);
    let g = ctx.grid()?;
    let axis = g.q;

    let ground = ho_wavefunction(
        &HoStationaryState::ground(m, w, hbar)?,
        &g,
        HoForm::Travelling,
    )?;
    let exact = ho_ground_density(&axis, m, w, hbar)?;
    let marginal = ground.marginal_q();
    let cmp = compare_densities(&marginal, &exact, &axis)?;
    let rows: Vec<Vec<f64>> = (0..axis.n)
        .map(|i| vec![axis.node(i), marginal[i], exact[i]])
        .collect();
    ctx.out
        .table("oracle.csv", &["q", "rho_phase", "rho_exact"], &rows)?;
    ctx.out.marginal(0, &ground)?;

    let steps = ctx.steps();
    let dt = c.time.t_final / steps as f64;
    let well: Vec<f64> = axis
        .nodes()
        .iter()
        .map(|q| 0.5 * m * w * w * q * q)
        .collect();
    let bound = CrankNicolson::new(&axis, &well, dt, hbar, m)?;
    let free = CrankNicolson::new(&axis, &vec![0.0; axis.n], dt, hbar, m)?;
    // Bound packet for norm, resting packet for the spreading law, moving packet for transport.
    let mut a = ConfigWaveFunction::gaussian(axis, hbar, m, ph.q0, ph.p0, ph.sigma_q)?;
    let mut b = ConfigWaveFunction::gaussian(axis, hbar, m, ph.q0, 0.0, ph.sigma_q)?;
    let mut moving = a.clone();
    let n0 = a.norm_squared();
    let law =
        |t: f64| ph.sigma_q.powi(2) * (1.0 + (hbar * t / (2.0 * m * ph.sigma_q.powi(2))).powi(2));
    let every = ctx.snapshot_every();
    let mut drift = 0.0_f64;
    let mut dispersion = 0.0_f64;
    let mut rows = vec![vec![0.0, 0.0, n0, moments(&axis, &b.density()).1, law(0.0)]];
    for k in 1..=steps {
        a = bound.step(&a);
        b = free.step(&b);
        moving = free.step(&moving);
        drift = drift.max((a.norm_squared() - n0).abs() / n0);
        if k % every == 0 || k == steps {
            let t = k as f64 * dt;
            let width2 = moments(&axis, &b.density()).1;
            dispersion = dispersion.max((width2 / law(t) - 1.0).abs());
            rows.push(vec![k as f64, t, a.norm_squared(), width2, law(t)]);
        }
    }
    let metric_rows = rows.iter().map(|r| {
        let mut row = vec![(r[0] as usize).to_string()];
        row.extend(r[1..].iter().map(|&x| ctx.out.num(x)));
        row
    });
    ctx.out.csv(
        "metrics.csv",
        &["step", "time", "norm2", "width2", "width2_law"],
        metric_rows,
    )?;

    // Free characteristics are straight lines, so one step covers the whole interval.
    let packet = gaussian_packet(
        &PacketSpec::new(ph.q0, ph.p0, ph.sigma_q, ph.sigma_p()),
        &g,
        hbar,
    )?;
    let flow = build_flow(&HamiltonianModel::free(m)?, &g);
    let opts = EvolveOptions {
        keep_states: false,
        ..ctx.evolve_opts()
    };
    let moved = evolve(&packet, &flow, c.time.t_final, c.time.t_final, 1, &opts)?.final_state;
    let centroid =
        compare_densities(&moved.marginal_q(), &moving.density(), &axis)?.centroid_difference;

    ctx.put_num("marginal_linf", cmp.linf);
    ctx.put("cn_steps", steps.to_string());
    ctx.put_num("cn_norm_drift", drift);
    ctx.put_num("dispersion_error", dispersion);
    ctx.put_num("centroid_difference", centroid);
    ctx.put_num("half_speed_prediction", ph.p0 * c.time.t_final / (2.0 * m));
    let d = ctx.out.num(cmp.linf);
    ctx.check(
        "marginal_vs_schrodinger",
        cmp.linf <= 1e-8,
        format!("{d} <= 1e-8"),
    );
    let d = ctx.out.num(drift);
    ctx.check(
        "cn_norm",
        drift <= 1e-10,
        format!("{d} <= 1e-10 over {steps} steps"),
    );
    let d = ctx.out.num(dispersion);
    ctx.check(
        "free_dispersion",
        dispersion <= 1e-4,
        format!("relative width² error {d} <= 1e-4"),
    );
    Ok(())
}
