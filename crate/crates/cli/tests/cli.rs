use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qphase(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qphase"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn validate_accepts_and_rejects() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write(tmp.path(), "good.conf", "run.scenario = quantize\n");
    let out = qphase(&["validate", &good], tmp.path());
    assert_eq!(out.status.code(), Some(0));

    let bad = write(
        tmp.path(),
        "bad.conf",
        "run.scenario = quantize\ntime.dt = -0.1\ntime.dt = 1\n",
    );
    let out = qphase(&["validate", &bad], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("line 3"), "{err}");

    let out = qphase(&["validate", "missing.conf"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quantize_run_writes_levels_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "q.conf",
        "run.scenario = quantize\nphysics.n_max = 4\noutput.directory = res\n",
    );
    let out = qphase(&["run", &cfg, "--check"], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = fs::read_to_string(tmp.path().join("res/summary.txt")).unwrap();
    assert!(
        summary.contains("energies = 0.5, 1.5, 2.5, 3.5, 4.5"),
        "{summary}"
    );
    assert!(summary.contains("[config]") && summary.contains("physics.n_max = 4"));
    let levels = lines(&tmp.path().join("res/levels.csv"));
    assert_eq!(levels[0], "n,energy,turning_point,boundary_ratio");
    assert_eq!(levels.len(), 6);
    assert!(levels[3].starts_with("2,2.5,"));
}

#[test]
fn relativistic_table_row_at_six_tenths() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "r.conf", "run.scenario = relativistic_table\n");
    let out = qphase(&["run", &cfg, "--out", "rel"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = lines(&tmp.path().join("rel/relativistic.csv"));
    assert_eq!(rows[0], "v_over_c,momentum,v_phase_over_c,v_phase_over_v");
    assert!(rows[1].starts_with("0.001,") && rows.last().unwrap().starts_with("0.9999,"));
    let row = rows.iter().find(|r| r.starts_with("0.6,")).unwrap();
    let v: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((v - 1.0 / 3.0).abs() <= 1e-12);
}

#[test]
fn free_wave_files_and_check_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let base = "\
run.scenario = free_wave
grid.q_min = -12.566370614359172
grid.q_max = 12.566370614359172
grid.n_q = 256
grid.n_p = 24
grid.boundary = periodic_q
physics.p0 = 1
time.dt = 0.01
time.t_final = 0.1
time.snapshot_every = 5
";
    let cfg = write(tmp.path(), "w.conf", base);
    let out = qphase(&["run", &cfg, "--out", "ok", "--check"], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let dir = tmp.path().join("ok");
    for k in 0..3 {
        assert!(dir.join(format!("fields_t{k}.csv")).exists());
        assert!(dir.join(format!("marginal_q_t{k}.csv")).exists());
    }
    let fields = lines(&dir.join("fields_t0.csv"));
    assert_eq!(fields[0], "q,p,re_psi,im_psi,density");
    assert_eq!(fields.len(), 1 + 256 * 24);
    // q outer, p inner.
    assert!(
        fields[1].starts_with("-12.566370614359172,-5.0,")
            && fields[2].starts_with("-12.566370614359172,")
    );
    assert_eq!(lines(&dir.join("marginal_q_t1.csv"))[0], "q,rho_q");
    let metrics = lines(&dir.join("metrics.csv"));
    assert_eq!(metrics[0], "step,time,norm2,edge_mass,max_error");
    assert_eq!(metrics.len(), 4);

    // Bilinear interpolation on a coarse truncated window loses norm quickly.
    let leaky =
        base.replace("periodic_q", "truncate") + "run.interpolation = bilinear\ntime.t_final = 1\n";
    let leaky = leaky.replace("time.t_final = 0.1\n", "");
    let cfg = write(tmp.path(), "leaky.conf", &leaky);
    let out = qphase(&["run", &cfg, "--out", "leaky", "--check"], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL norm_drift"));
    // Without --check the same run succeeds.
    let out = qphase(&["run", &cfg, "--out", "leaky"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn runtime_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    // The oscillator ground state does not fit in a window this small.
    let cfg = write(
        tmp.path(),
        "ho.conf",
        "run.scenario = harmonic_stationary\ngrid.q_min = -2\ngrid.q_max = 2\ngrid.n_q = 32\ngrid.n_p = 32\n",
    );
    let out = qphase(&["run", &cfg, "--out", "x"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "p.conf",
        "run.scenario = harmonic_evolve\ngrid.n_q = 64\ngrid.n_p = 64\ngrid.p_min = -10\ngrid.p_max = 10\nphysics.q0 = 1\ntime.t_final = 0.5\ntime.snapshot_every = 10\n",
    );
    for (dir, threads) in [("a", "0"), ("b", "1"), ("c", "3")] {
        let out = Command::new(env!("CARGO_BIN_EXE_qphase"))
            .args(["run", &cfg, "--out", dir])
            .env("QPHASE_THREADS", threads)
            .current_dir(tmp.path())
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let mut names: Vec<_> = fs::read_dir(tmp.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 5);
    for name in names {
        let a = fs::read(tmp.path().join("a").join(&name)).unwrap();
        for other in ["b", "c"] {
            assert_eq!(
                a,
                fs::read(tmp.path().join(other).join(&name)).unwrap(),
                "{name:?} differs in {other}"
            );
        }
    }
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "q.conf", "run.scenario = quantize\n");
    let out = Command::new(env!("CARGO_BIN_EXE_qphase"))
        .args(["run", &cfg])
        .env("QPHASE_THREADS", "lots")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
