//! Config-driven front end for the wave-speed solver: `bounds`, `gamma`, `speed` and `verify`.

pub mod config;
pub mod report;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;
use wavefront_core::{
    compute_bounds, compute_constants, eval_j, find_speed_with, fit_decay_rate, gamma_curve, read_profile_csv, verify_all,
    write_profile_csv, FunctionalParams, PotentialConstants, PotentialSpec, Profile, SpeedOptions, VerifyOptions,
    WaveError,
};

pub use config::{GridConfig, ModeConfig, OutputConfig, PotentialConfig, Refinement, RunConfig, SolverConfig};
pub use report::{GammaEntry, ModeResult, ReportBody, RunReport, Timings, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Solver(#[from] WaveError),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Config { .. } | CliError::Io(_) => EXIT_CONFIG,
            CliError::Solver(e) => match e {
                WaveError::Contract(_) | WaveError::Assumption(_) | WaveError::Io(_) => EXIT_CONFIG,
                WaveError::Tail { .. } | WaveError::ShootingDivergence { .. } | WaveError::NotAWave { .. } => EXIT_VERIFY,
                _ => EXIT_NONCONVERGENCE,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bounds,
    Gamma,
    Speed,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bounds => "bounds",
            Command::Gamma => "gamma",
            Command::Speed => "speed",
            Command::Verify => "verify",
        }
    }
}

/// A finished command: the report, the exit code it maps to, and the files written.
#[derive(Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Writer { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn profile(&mut self, name: &str, spec: &PotentialSpec, profile: &Profile) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| io_err(&path, e))?;
        write_profile_csv(spec, profile, BufWriter::new(f))?;
        self.files.push(path);
        Ok(())
    }
}

struct Setup {
    spec: PotentialSpec,
    consts: PotentialConstants,
}

fn setup(config: &RunConfig) -> Result<Setup, CliError> {
    config.validate()?;
    let spec = config.spec()?;
    let consts = compute_constants(&spec)?;
    Ok(Setup { spec, consts })
}

fn body(command: Command, config: &RunConfig, s: &Setup, bounds_c: f64, result: ModeResult) -> ReportBody {
    ReportBody {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.name().to_string(),
        config_digest: report::sha256_json(config),
        config: config.clone(),
        constants: s.consts.clone(),
        bounds: compute_bounds(&s.spec, &s.consts, bounds_c),
        result,
        verify: None,
    }
}

fn finish(mut w: Writer, config: &RunConfig, report: RunReport, exit_code: i32) -> Result<Outcome, CliError> {
    w.text(&config.output.report, &report.to_json())?;
    Ok(Outcome { report, exit_code, files: w.files })
}

/// Constants of the potential and the energy bounds at `mode.c` (or at `c = 1` for the bracket alone).
pub fn cmd_bounds(config: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let t0 = Instant::now();
    let s = setup(config)?;
    let b = body(Command::Bounds, config, &s, config.mode.c.unwrap_or(1.0), ModeResult::Bounds {});
    let timings = Timings { setup_ms: ms(t0), total_ms: ms(t0), ..Timings::default() };
    finish(Writer::new(out)?, config, RunReport::new(b, timings), EXIT_OK)
}

fn gamma_csv(entries: &[GammaEntry]) -> String {
    let mut s = String::from("c,gamma,grad_norm,feasibility\n");
    for e in entries {
        match &e.result {
            Some(r) => s.push_str(&format!("{},{},{},{}\n", r.c, r.gamma, r.grad_norm, r.feasibility_violation)),
            None => s.push_str(&format!("{},NaN,NaN,NaN\n", e.c)),
        }
    }
    s
}

/// `gamma(c)` at `mode.c` or along `mode.c_list`.
pub fn cmd_gamma(config: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let t0 = Instant::now();
    let s = setup(config)?;
    let c_list: Vec<f64> = match (&config.mode.c_list, config.mode.c) {
        (Some(list), _) => list.clone(),
        (None, Some(c)) => vec![c],
        (None, None) => {
            return Err(CliError::Config { field: "mode.c_list".into(), message: "gamma needs mode.c or mode.c_list".into() })
        }
    };
    let grid = config.grid(&s.spec, &s.consts)?;
    let setup_ms = ms(t0);
    let t1 = Instant::now();
    let opts = config.solver.options();
    let results = gamma_curve(&s.spec, &s.consts, &grid, &c_list, &opts, config.mode.warm_start)?;
    let solve_ms = ms(t1);

    let mut w = Writer::new(out)?;
    let mut entries = Vec::with_capacity(c_list.len());
    let mut exit_code = EXIT_OK;
    for (c, r) in c_list.iter().zip(results) {
        match r {
            Ok(r) => {
                if !r.converged {
                    exit_code = EXIT_NONCONVERGENCE;
                }
                w.profile(&format!("profile_c{c}.csv"), &s.spec, &r.profile)?;
                entries.push(GammaEntry { c: *c, result: Some(r), error: None });
            }
            Err(e) => {
                exit_code = EXIT_NONCONVERGENCE;
                entries.push(GammaEntry { c: *c, result: None, error: Some(e.to_string()) });
            }
        }
    }
    w.text("gamma.csv", &gamma_csv(&entries))?;
    let bounds_c = config.mode.c.unwrap_or(c_list[0]);
    let b = body(Command::Gamma, config, &s, bounds_c, ModeResult::Gamma { entries });
    let timings = Timings { setup_ms, solve_ms, verify_ms: 0.0, total_ms: ms(t0) };
    finish(w, config, RunReport::new(b, timings), exit_code)
}

/// `c*` by bisection, then the full verification suite on the wave.
pub fn cmd_speed(config: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let t0 = Instant::now();
    let s = setup(config)?;
    let grid = config.grid(&s.spec, &s.consts)?;
    let setup_ms = ms(t0);
    let t1 = Instant::now();
    let speed_opts = SpeedOptions { verify: false, ..SpeedOptions::new(config.mode.c_tol) };
    let speed = find_speed_with(&s.spec, &s.consts, &grid, &config.solver.options(), &speed_opts)?;
    let solve_ms = ms(t1);
    let t2 = Instant::now();
    let verify =
        verify_all(&s.spec, &s.consts, speed.c_star, speed.gamma_at_c_star, &speed.profile, &VerifyOptions::default())?;
    let verify_ms = ms(t2);

    let mut w = Writer::new(out)?;
    w.profile("wave.csv", &s.spec, &speed.profile)?;
    let mut hist = String::from("step,c_lo,c_hi,gamma_lo,gamma_hi\n");
    for (i, h) in speed.history.iter().enumerate() {
        hist.push_str(&format!("{i},{},{},{},{}\n", h.c_lo, h.c_hi, h.gamma_lo, h.gamma_hi));
    }
    w.text("bracket.csv", &hist)?;
    w.text("verify.json", &serde_json::to_string_pretty(&verify).expect("report values serialize"))?;

    let exit_code = if !speed.all_converged {
        EXIT_NONCONVERGENCE
    } else if !verify.pass {
        EXIT_VERIFY
    } else {
        EXIT_OK
    };
    let mut speed = speed;
    speed.verify = Some(verify.clone());
    speed.wave_ok = verify.pass;
    let c_star = speed.c_star;
    let mut b = body(Command::Speed, config, &s, c_star, ModeResult::Speed { speed: Box::new(speed) });
    b.verify = Some(verify);
    let timings = Timings { setup_ms, solve_ms, verify_ms, total_ms: ms(t0) };
    finish(w, config, RunReport::new(b, timings), exit_code)
}

/// Verification of an externally supplied profile at speed `mode.c`; `gamma_hat` is its energy.
pub fn cmd_verify(config: &RunConfig, profile_path: Option<&Path>, out: &Path) -> Result<Outcome, CliError> {
    let t0 = Instant::now();
    let s = setup(config)?;
    let c = config
        .mode
        .c
        .ok_or_else(|| CliError::Config { field: "mode.c".into(), message: "verify needs the speed mode.c".into() })?;
    let path = profile_path.map(Path::to_path_buf).or_else(|| config.mode.profile.clone()).ok_or_else(|| {
        CliError::Config { field: "mode.profile".into(), message: "verify needs a profile CSV (mode.profile or --profile)".into() }
    })?;
    let file = File::open(&path).map_err(|e| io_err(&path, e))?;
    let profile = read_profile_csv(file, s.spec.dim(), s.spec.well_b().to_vec())?;
    if !profile.is_anchored() {
        // a profile cut off before reaching b fails the tail fit first
        fit_decay_rate(&s.consts, c, &profile)?;
        profile.require_anchored()?;
    }
    let params = FunctionalParams::with_penalty(c, config.solver.penalty_kappa)?;
    let gamma_hat = eval_j(&s.spec, &params, &profile)?;
    let setup_ms = ms(t0);
    let t1 = Instant::now();
    let verify = verify_all(&s.spec, &s.consts, c, gamma_hat, &profile, &VerifyOptions::default())?;
    let verify_ms = ms(t1);

    let mut w = Writer::new(out)?;
    w.text("verify.json", &serde_json::to_string_pretty(&verify).expect("report values serialize"))?;
    let exit_code = if verify.pass { EXIT_OK } else { EXIT_VERIFY };
    let result = ModeResult::Verify { c, gamma_hat, profile: path.display().to_string() };
    let mut b = body(Command::Verify, config, &s, c, result);
    b.verify = Some(verify);
    let timings = Timings { setup_ms, solve_ms: 0.0, verify_ms, total_ms: ms(t0) };
    finish(w, config, RunReport::new(b, timings), exit_code)
}

/// Dispatch `command`; `out` overrides `output.directory`.
pub fn run(command: Command, config: &RunConfig, out: Option<&Path>, profile: Option<&Path>) -> Result<Outcome, CliError> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| config.output.directory.clone());
    match command {
        Command::Bounds => cmd_bounds(config, &dir),
        Command::Gamma => cmd_gamma(config, &dir),
        Command::Speed => cmd_speed(config, &dir),
        Command::Verify => cmd_verify(config, profile, &dir),
    }
}

/// Plain-text summary printed after a run.
pub fn summary(report: &RunReport) -> String {
    let b = &report.body;
    let k = &b.constants;
    let mut s = String::new();
    let mut line = |label: &str, value: String| s.push_str(&format!("{label:<24}{value}\n"));
    line("command", b.command.clone());
    line("m (well depth)", format!("{:.10}", k.m));
    line("M (barrier height)", format!("{:.10}", k.big_m));
    line("d (gap to W < 0)", format!("{:.10}", k.d));
    line("mu (curvature at b)", format!("{:.10}", k.mu));
    line("point a", format!("{:?}", k.point_a));
    line("bounds at c", format!("{}", b.bounds.c));
    line("  lower", format!("{:.10}", b.bounds.lower));
    line("  upper", format!("{:.10}", b.bounds.upper));
    line("c* bracket", format!("[{:.10}, {:.10}]", b.bounds.bracket_lo, b.bounds.bracket_hi));
    match &b.result {
        ModeResult::Bounds {} => {}
        ModeResult::Gamma { entries } => {
            for e in entries {
                match &e.result {
                    Some(r) => line(&format!("gamma({})", e.c), format!("{:.10e} (converged: {})", r.gamma, r.converged)),
                    None => line(&format!("gamma({})", e.c), format!("error: {}", e.error.as_deref().unwrap_or(""))),
                }
            }
        }
        ModeResult::Speed { speed } => {
            line("c*", format!("{:.10}", speed.c_star));
            line("gamma(c*)", format!("{:.3e}", speed.gamma_at_c_star));
        }
        ModeResult::Verify { c, gamma_hat, .. } => {
            line("c", format!("{c}"));
            line("gamma_hat", format!("{gamma_hat:.3e}"));
        }
    }
    if let Some(v) = &b.verify {
        for (name, check) in v.checks() {
            let verdict = if check.pass { "pass" } else { "FAIL" };
            line(name, format!("{:.3e} (threshold {:.2e}): {verdict}", check.value, check.threshold));
        }
        if let Some(note) = &v.shooting_note {
            line("shooting note", note.clone());
        }
        if let Some(e) = &v.left_tail.nearest_equilibrium {
            line("left end approaches", format!("{e:?} (distance {:.3e})", v.left_tail.dist_to_equilibria));
        }
        line("verified", format!("{}", v.pass));
    }
    s
}
