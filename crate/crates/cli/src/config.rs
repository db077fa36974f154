//! Line-oriented `section.key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use qphase_core::dynamics::Interpolation;
use qphase_core::stationary::Branch;
use qphase_core::BoundaryMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    FreeWave,
    FreePacket,
    HarmonicEvolve,
    HarmonicStationary,
    Quantize,
    TwoSlit,
    UncertaintySuite,
    RelativisticTable,
    OracleCompare,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::FreeWave,
        Scenario::FreePacket,
        Scenario::HarmonicEvolve,
        Scenario::HarmonicStationary,
        Scenario::Quantize,
        Scenario::TwoSlit,
        Scenario::UncertaintySuite,
        Scenario::RelativisticTable,
        Scenario::OracleCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::FreeWave => "free_wave",
            Scenario::FreePacket => "free_packet",
            Scenario::HarmonicEvolve => "harmonic_evolve",
            Scenario::HarmonicStationary => "harmonic_stationary",
            Scenario::Quantize => "quantize",
            Scenario::TwoSlit => "two_slit",
            Scenario::UncertaintySuite => "uncertainty_suite",
            Scenario::RelativisticTable => "relativistic_table",
            Scenario::OracleCompare => "oracle_compare",
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
                format!(
                    "unknown scenario `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
    pub boundary: BoundaryMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsConfig {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
    pub c: f64,
    pub q0: f64,
    pub p0: f64,
    pub sigma_q: f64,
    /// Defaults to the minimum-uncertainty width `ħ/(2σ_q)`.
    pub sigma_p: Option<f64>,
    /// Defaults to `ħω`.
    pub beta: Option<f64>,
    pub branch: Branch,
    pub n: u32,
    pub n_max: u32,
    pub core_radius: f64,
    pub slit_d: f64,
    pub slit_sigma: f64,
    pub slit_sigma_p: f64,
    pub screen_distance: f64,
}

impl PhysicsConfig {
    pub fn sigma_p(&self) -> f64 {
        self.sigma_p.unwrap_or(self.hbar / (2.0 * self.sigma_q))
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(self.hbar * self.omega)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Steps between field snapshots; 0 keeps only the first and last.
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Significant digits after the point in scientific notation; shortest round-trip when `None`.
    pub precision: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub interpolation: Interpolation,
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub time: TimeConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        RunConfig {
            scenario,
            interpolation: Interpolation::default(),
            grid: GridConfig {
                q_min: -10.0,
                q_max: 10.0,
                p_min: -5.0,
                p_max: 5.0,
                n_q: 256,
                n_p: 256,
                boundary: BoundaryMode::Truncate,
            },
            physics: PhysicsConfig {
                hbar: 1.0,
                mass: 1.0,
                omega: 1.0,
                c: 1.0,
                q0: 0.0,
                p0: 1.0,
                sigma_q: 1.0,
                sigma_p: None,
                beta: None,
                branch: Branch::Cosine,
                n: 0,
                n_max: 4,
                core_radius: 1.5,
                slit_d: 2.5,
                slit_sigma: 1.0,
                slit_sigma_p: 3.0,
                screen_distance: 1.0,
            },
            time: TimeConfig {
                dt: 0.01,
                t_final: 1.0,
                snapshot_every: 0,
            },
            output: OutputConfig {
                directory: PathBuf::from("qphase-out"),
                precision: None,
            },
        }
    }

    /// Every setting except the output directory as `section.key = value`, in a fixed order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let g = &self.grid;
        let ph = &self.physics;
        let t = &self.time;
        let mut v = vec![
            ("run.scenario", self.scenario.name().to_string()),
            (
                "run.interpolation",
                interpolation_name(self.interpolation).to_string(),
            ),
            ("grid.q_min", g.q_min.to_string()),
            ("grid.q_max", g.q_max.to_string()),
            ("grid.p_min", g.p_min.to_string()),
            ("grid.p_max", g.p_max.to_string()),
            ("grid.n_q", g.n_q.to_string()),
            ("grid.n_p", g.n_p.to_string()),
            ("grid.boundary", boundary_name(g.boundary).to_string()),
            ("physics.hbar", ph.hbar.to_string()),
            ("physics.mass", ph.mass.to_string()),
            ("physics.omega", ph.omega.to_string()),
            ("physics.c", ph.c.to_string()),
            ("physics.q0", ph.q0.to_string()),
            ("physics.p0", ph.p0.to_string()),
            ("physics.sigma_q", ph.sigma_q.to_string()),
            ("physics.sigma_p", ph.sigma_p().to_string()),
            ("physics.beta", ph.beta().to_string()),
            ("physics.branch", branch_name(ph.branch).to_string()),
            ("physics.n", ph.n.to_string()),
            ("physics.n_max", ph.n_max.to_string()),
            ("physics.core_radius", ph.core_radius.to_string()),
            ("physics.slit_d", ph.slit_d.to_string()),
            ("physics.slit_sigma", ph.slit_sigma.to_string()),
            ("physics.slit_sigma_p", ph.slit_sigma_p.to_string()),
            ("physics.screen_distance", ph.screen_distance.to_string()),
            ("time.dt", t.dt.to_string()),
            ("time.t_final", t.t_final.to_string()),
            ("time.snapshot_every", t.snapshot_every.to_string()),
        ];
        if let Some(p) = self.output.precision {
            v.push(("output.precision", p.to_string()));
        }
        v.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

pub fn interpolation_name(i: Interpolation) -> &'static str {
    match i {
        Interpolation::Hermite4 => "hermite4",
        Interpolation::CatmullRom => "catmull_rom",
        Interpolation::Bilinear => "bilinear",
    }
}

pub fn boundary_name(b: BoundaryMode) -> &'static str {
    match b {
        BoundaryMode::Truncate => "truncate",
        BoundaryMode::PeriodicQ => "periodic_q",
    }
}

pub fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Cosine => "cosine",
        Branch::Sine => "sine",
    }
}

/// One problem in a config file. `line` is 1-based; `None` for whole-file problems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const KEYS: &[&str] = &[
    "run.scenario",
    "run.interpolation",
    "grid.q_min",
    "grid.q_max",
    "grid.p_min",
    "grid.p_max",
    "grid.n_q",
    "grid.n_p",
    "grid.boundary",
    "physics.hbar",
    "physics.mass",
    "physics.omega",
    "physics.c",
    "physics.q0",
    "physics.p0",
    "physics.sigma_q",
    "physics.sigma_p",
    "physics.beta",
    "physics.branch",
    "physics.n",
    "physics.n_max",
    "physics.core_radius",
    "physics.slit_d",
    "physics.slit_sigma",
    "physics.slit_sigma_p",
    "physics.screen_distance",
    "time.dt",
    "time.t_final",
    "time.snapshot_every",
    "output.directory",
    "output.precision",
];

struct Entry {
    line: usize,
    value: String,
}

/// Collects every problem instead of stopping at the first.
struct Parser {
    entries: BTreeMap<String, Entry>,
    errors: Vec<ConfigError>,
}

impl Parser {
    fn err(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.errors.push(ConfigError {
            line,
            message: message.into(),
        });
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn get<T: FromStr>(&mut self, key: &str, slot: &mut T)
    where
        T::Err: fmt::Display,
    {
        let Some(e) = self.entries.get(key) else {
            return;
        };
        match e.value.parse::<T>() {
            Ok(v) => *slot = v,
            Err(err) => {
                let (line, value) = (e.line, e.value.clone());
                self.err(Some(line), format!("{key}: cannot parse `{value}`: {err}"));
            }
        }
    }

    fn get_f64(&mut self, key: &str, slot: &mut f64) {
        let Some(e) = self.entries.get(key) else {
            return;
        };
        match parse_float(&e.value) {
            Some(v) => *slot = v,
            None => {
                let (line, value) = (e.line, e.value.clone());
                self.err(
                    Some(line),
                    format!("{key}: `{value}` is not a finite decimal number"),
                );
            }
        }
    }

    fn get_opt_f64(&mut self, key: &str, slot: &mut Option<f64>) {
        if self.entries.contains_key(key) {
            let mut v = 0.0;
            let before = self.errors.len();
            self.get_f64(key, &mut v);
            if self.errors.len() == before {
                *slot = Some(v);
            }
        }
    }

    fn require(&mut self, ok: bool, key: &str, message: impl fmt::Display) {
        if !ok {
            let line = self.line_of(key);
            self.err(line, format!("{key}: {message}"));
        }
    }
}

fn parse_float(s: &str) -> Option<f64> {
    let ok = !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
        && s.chars().any(|c| c.is_ascii_digit());
    s.parse::<f64>().ok().filter(|v| ok && v.is_finite())
}

impl FromStr for RunConfig {
    type Err = ConfigErrors;

    fn from_str(text: &str) -> Result<Self, ConfigErrors> {
        parse_config(text)
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut p = Parser {
        entries: BTreeMap::new(),
        errors: Vec::new(),
    };
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            p.err(
                Some(line),
                format!("expected `section.key = value`, found `{content}`"),
            );
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if key.split('.').count() != 2 || key.split('.').any(str::is_empty) {
            p.err(
                Some(line),
                format!("`{key}` is not of the form section.key"),
            );
            continue;
        }
        if !KEYS.contains(&key) {
            let section = key.split('.').next().unwrap_or("");
            if KEYS.iter().any(|k| k.starts_with(&format!("{section}."))) {
                p.err(Some(line), format!("unknown key `{key}`"));
            } else {
                p.err(Some(line), format!("unknown section `{section}`"));
            }
            continue;
        }
        if value.is_empty() {
            p.err(Some(line), format!("{key}: missing value"));
            continue;
        }
        if let Some(first) = p.entries.get(key) {
            let first = first.line;
            p.err(
                Some(line),
                format!("duplicate key `{key}` (first set on line {first}, again on line {line})"),
            );
            continue;
        }
        p.entries.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }

    let scenario = match p.entries.get("run.scenario") {
        None => {
            p.err(None, "missing required key `run.scenario`");
            None
        }
        Some(e) => match e.value.parse::<Scenario>() {
            Ok(s) => Some(s),
            Err(msg) => {
                let line = e.line;
                p.err(Some(line), format!("run.scenario: {msg}"));
                None
            }
        },
    };
    let mut c = RunConfig::defaults(scenario.unwrap_or(Scenario::FreeWave));

    if let Some(e) = p.entries.get("run.interpolation") {
        match e.value.as_str() {
            "hermite4" => c.interpolation = Interpolation::Hermite4,
            "catmull_rom" => c.interpolation = Interpolation::CatmullRom,
            "bilinear" => c.interpolation = Interpolation::Bilinear,
            other => {
                let line = e.line;
                let msg = format!(
                    "run.interpolation: unknown kernel `{other}` (hermite4, catmull_rom, bilinear)"
                );
                p.err(Some(line), msg);
            }
        }
    }
    if let Some(e) = p.entries.get("grid.boundary") {
        match e.value.as_str() {
            "truncate" => c.grid.boundary = BoundaryMode::Truncate,
            "periodic_q" => c.grid.boundary = BoundaryMode::PeriodicQ,
            other => {
                let line = e.line;
                p.err(
                    Some(line),
                    format!("grid.boundary: unknown mode `{other}` (truncate, periodic_q)"),
                );
            }
        }
    }
    if let Some(e) = p.entries.get("physics.branch") {
        match e.value.as_str() {
            "cosine" => c.physics.branch = Branch::Cosine,
            "sine" => c.physics.branch = Branch::Sine,
            other => {
                let line = e.line;
                p.err(
                    Some(line),
                    format!("physics.branch: unknown branch `{other}` (cosine, sine)"),
                );
            }
        }
    }

    let g = &mut c.grid;
    p.get_f64("grid.q_min", &mut g.q_min);
    p.get_f64("grid.q_max", &mut g.q_max);
    p.get_f64("grid.p_min", &mut g.p_min);
    p.get_f64("grid.p_max", &mut g.p_max);
    p.get("grid.n_q", &mut g.n_q);
    p.get("grid.n_p", &mut g.n_p);

    let ph = &mut c.physics;
    p.get_f64("physics.hbar", &mut ph.hbar);
    p.get_f64("physics.mass", &mut ph.mass);
    p.get_f64("physics.omega", &mut ph.omega);
    p.get_f64("physics.c", &mut ph.c);
    p.get_f64("physics.q0", &mut ph.q0);
    p.get_f64("physics.p0", &mut ph.p0);
    p.get_f64("physics.sigma_q", &mut ph.sigma_q);
    p.get_opt_f64("physics.sigma_p", &mut ph.sigma_p);
    p.get_opt_f64("physics.beta", &mut ph.beta);
    p.get("physics.n", &mut ph.n);
    p.get("physics.n_max", &mut ph.n_max);
    p.get_f64("physics.core_radius", &mut ph.core_radius);
    p.get_f64("physics.slit_d", &mut ph.slit_d);
    p.get_f64("physics.slit_sigma", &mut ph.slit_sigma);
    p.get_f64("physics.slit_sigma_p", &mut ph.slit_sigma_p);
    p.get_f64("physics.screen_distance", &mut ph.screen_distance);

    let t = &mut c.time;
    p.get_f64("time.dt", &mut t.dt);
    p.get_f64("time.t_final", &mut t.t_final);
    p.get("time.snapshot_every", &mut t.snapshot_every);

    if let Some(e) = p.entries.get("output.directory") {
        c.output.directory = PathBuf::from(&e.value);
    }
    let mut precision = None;
    if p.entries.contains_key("output.precision") {
        let mut v = 0usize;
        let before = p.errors.len();
        p.get("output.precision", &mut v);
        if p.errors.len() == before {
            precision = Some(v);
        }
    }
    c.output.precision = precision;

    validate(&mut p, &c);
    if p.errors.is_empty() {
        Ok(c)
    } else {
        p.errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        Err(ConfigErrors(p.errors))
    }
}

fn validate(p: &mut Parser, c: &RunConfig) {
    let g = &c.grid;
    p.require(
        g.q_min < g.q_max,
        "grid.q_max",
        format!("must exceed grid.q_min ({} ≥ {})", g.q_min, g.q_max),
    );
    p.require(
        g.p_min < g.p_max,
        "grid.p_max",
        format!("must exceed grid.p_min ({} ≥ {})", g.p_min, g.p_max),
    );
    p.require(g.n_q >= 4, "grid.n_q", "needs at least 4 nodes");
    p.require(g.n_p >= 4, "grid.n_p", "needs at least 4 nodes");

    let ph = &c.physics;
    for (key, v) in [
        ("physics.hbar", ph.hbar),
        ("physics.mass", ph.mass),
        ("physics.omega", ph.omega),
        ("physics.c", ph.c),
        ("physics.sigma_q", ph.sigma_q),
        ("physics.core_radius", ph.core_radius),
        ("physics.slit_d", ph.slit_d),
        ("physics.slit_sigma", ph.slit_sigma),
        ("physics.slit_sigma_p", ph.slit_sigma_p),
        ("physics.screen_distance", ph.screen_distance),
        ("time.dt", c.time.dt),
        ("time.t_final", c.time.t_final),
    ] {
        p.require(v > 0.0, key, format!("must be positive, got {v}"));
    }
    if let Some(s) = ph.sigma_p {
        p.require(
            s > 0.0,
            "physics.sigma_p",
            format!("must be positive, got {s}"),
        );
    }
    if let Some(b) = ph.beta {
        p.require(
            b > 0.0,
            "physics.beta",
            format!("must be positive, got {b}"),
        );
    }
    p.require(ph.n_max <= 64, "physics.n_max", "must be at most 64");
    p.require(
        ph.branch == Branch::Cosine || ph.n >= 1,
        "physics.n",
        "the sine branch starts at n = 1",
    );
    if let Some(d) = c.output.precision {
        p.require(
            (1..=17).contains(&d),
            "output.precision",
            format!("must lie in 1..=17, got {d}"),
        );
    }
}
