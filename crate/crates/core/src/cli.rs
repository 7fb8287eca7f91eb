//! The `qbat` command line.
//!
//! Exit codes: 0 on success, 2 for usage or validation errors, 1 for internal
//! failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::adiabatic::{
    adiabatic_ec, initial_state, run_discharge, saturation_threshold, sweep_table, sweep_tau,
    AdiabaticSpec, Schedule, SweepRow,
};
use crate::dynamics::SteppingConfig;
use crate::error::QbatError;
use crate::model::{HamiltonianSet, SystemSpec};
use crate::protocols::{
    bell_discharge, ncell_plan_energy, ncell_trajectory, separable_sweep,
    single_particle_trajectory, trapping_check, trapping_uniqueness_scan, BellLabel, NCellPlan,
    SwitchGate,
};
use crate::series::{Cell, Table};

pub const DEFAULT_CONFIG: &str = "qbat.json";
pub const THREADS_ENV: &str = "QBAT_THREADS";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Physical parameters and output settings, read from a JSON file with
/// exactly these fields. Command-line flags override file values.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub omega: f64,
    pub j_coupling: f64,
    pub seed: u64,
    pub format: Format,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega: 1.0,
            j_coupling: 1.0,
            seed: 42,
            format: Format::Csv,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    /// Reads `path`; a missing file is an error only if `required`.
    pub fn load(path: &Path, required: bool) -> Result<Self, CliError> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::from_json(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound && !required => Ok(Self::default()),
            Err(e) => Err(CliError::Validation(format!("config {}: {e}", path.display()))),
        }
    }

    pub fn spec(&self) -> Result<SystemSpec, CliError> {
        Ok(SystemSpec::new(self.omega, self.j_coupling)?)
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(clap::Error),
    Validation(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Usage(_) | CliError::Validation(_) => 2,
        }
    }
}

impl From<QbatError> for CliError {
    fn from(e: QbatError) -> Self {
        match e {
            QbatError::InvalidParameter { .. }
            | QbatError::InvalidLayout(_)
            | QbatError::TooManyQubits { .. } => CliError::Validation(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qbat", version, about = "Bell-pair quantum battery discharge simulator")]
struct Cli {
    /// Output format [default: csv].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file [default: standard output].
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// JSON config file [default: ./qbat.json if present].
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Qubit splitting omega.
    #[arg(long, global = true, allow_negative_numbers = true)]
    omega: Option<f64>,
    /// XY coupling J.
    #[arg(long = "j", global = true, allow_negative_numbers = true)]
    j: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GateKind {
    Half,
    Full,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Charge and current of one Bell cell over two discharge periods.
    Discharge {
        /// Bell label nm, e.g. 10.
        #[arg(long)]
        bell: BellLabel,
        /// Switch gate applied before discharge.
        #[arg(long, value_enum)]
        gate: Option<GateKind>,
        /// Battery qubit the gate acts on.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        qubit: u8,
        #[arg(long, default_value_t = 129)]
        samples: usize,
    },
    /// Trapping test for the four Bell states (or one) with an empty hub.
    TrapCheck {
        #[arg(long)]
        bell: Option<BellLabel>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Random search for trapped states other than the singlet.
    TrapScan {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Maximum charge of separable product batteries on a grid.
    Separable {
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// One excited qubit discharging into the hub.
    SingleParticle {
        #[arg(long, default_value_t = 129)]
        samples: usize,
    },
    /// Independent cells, each held, half- or fully released.
    Ncell {
        /// Comma-separated actions: h (hold), H (half), f (full).
        #[arg(long)]
        plan: NCellPlan,
        #[arg(long, default_value_t = 129)]
        samples: usize,
    },
    /// One adiabatic discharge run.
    Adiabatic {
        #[arg(long)]
        jtau: f64,
        #[arg(long, default_value = "linear")]
        schedule: Schedule,
        #[arg(long, default_value_t = SteppingConfig::DEFAULT_STEPS_PER_UNIT)]
        steps_per_unit: u32,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        /// Emit the one-row run summary instead of the trajectory.
        #[arg(long)]
        summary: bool,
    },
    /// Adiabatic runs for every schedule over a range of J tau.
    SweepTau {
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        points: usize,
        #[arg(long, default_value_t = SteppingConfig::DEFAULT_STEPS_PER_UNIT)]
        steps_per_unit: u32,
        /// Repeat every run with doubled steps and report the change.
        #[arg(long)]
        check_convergence: bool,
    },
    /// Runs the acceptance checks and prints one line per criterion.
    Selftest {
        /// Criterion ids to run, e.g. AC-4 [default: all].
        ids: Vec<String>,
    },
}

/// Output of one command: a table plus metadata for the JSON form.
struct Report {
    table: Table,
    meta: BTreeMap<String, Value>,
}

impl Report {
    fn new(table: Table) -> Self {
        Report {
            table,
            meta: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, v: Value) -> Self {
        self.meta.insert(key.to_string(), v);
        self
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            2
        }
        Err(e @ CliError::Validation(_)) | Err(e @ CliError::Internal(_)) => {
            let msg = match &e {
                CliError::Validation(m) | CliError::Internal(m) => m.clone(),
                CliError::Usage(_) => unreachable!(),
            };
            eprintln!("qbat: {msg}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p, true)?,
        None => RunConfig::load(Path::new(DEFAULT_CONFIG), false)?,
    };
    if let Some(v) = cli.omega {
        cfg.omega = v;
    }
    if let Some(v) = cli.j {
        cfg.j_coupling = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.format {
        cfg.format = v;
    }
    if let Some(v) = &cli.output {
        cfg.output = Some(v.clone());
    }
    cfg.spec()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = resolve_config(&cli)?;
    let (name, report) = match cli.command {
        Command::Selftest { ids } => return selftest(&ids),
        Command::Discharge {
            bell,
            gate,
            qubit,
            samples,
        } => ("discharge", discharge(&cfg, bell, gate, qubit, samples)?),
        Command::TrapCheck { bell, tol } => ("trap-check", trap_check(&cfg, bell, tol)?),
        Command::TrapScan { samples, tol } => ("trap-scan", trap_scan(&cfg, samples, tol)?),
        Command::Separable { grid } => ("separable", separable(&cfg, grid)?),
        Command::SingleParticle { samples } => {
            let ts = single_particle_trajectory(&cfg.spec()?, samples)?;
            ("single-particle", Report::new(ts.to_table(cfg.omega, cfg.j_coupling)))
        }
        Command::Ncell { plan, samples } => ("ncell", ncell(&cfg, &plan, samples)?),
        Command::Adiabatic {
            jtau,
            schedule,
            steps_per_unit,
            samples,
            summary,
        } => (
            "adiabatic",
            adiabatic(&cfg, jtau, schedule, steps_per_unit, samples, summary)?,
        ),
        Command::SweepTau {
            from,
            to,
            points,
            steps_per_unit,
            check_convergence,
        } => (
            "sweep-tau",
            sweep(&cfg, from, to, points, steps_per_unit, check_convergence)?,
        ),
    };
    let report = report
        .with("command", json!(name))
        .with("omega", json!(cfg.omega))
        .with("j_coupling", json!(cfg.j_coupling))
        .with("seed", json!(cfg.seed))
        .with("units", json!("hbar = 1; E0 = 2 omega"));
    let text = match cfg.format {
        Format::Csv => report.table.to_csv(),
        Format::Json => report.table.to_json(&report.meta),
    };
    write_output(cfg.output.as_deref(), &text)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let res = match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush())
        }
    };
    res.map_err(|e| CliError::Internal(format!("writing output: {e}")))
}

fn selftest(ids: &[String]) -> Result<(), CliError> {
    let outcomes = if ids.is_empty() {
        crate::acceptance::run_all(|o| println!("{o}"))
    } else {
        let mut v = Vec::new();
        for id in ids {
            let o = crate::acceptance::run(id)
                .ok_or_else(|| CliError::Validation(format!("unknown criterion {id:?}")))?;
            println!("{o}");
            v.push(o);
        }
        v
    };
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("selftest: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        return Err(CliError::Internal(format!("{failed} acceptance criteria failed")));
    }
    Ok(())
}

fn discharge(
    cfg: &RunConfig,
    bell: BellLabel,
    gate: Option<GateKind>,
    qubit: u8,
    samples: usize,
) -> Result<Report, CliError> {
    let gate = gate.map(|g| match (g, qubit) {
        (GateKind::Half, 1) => SwitchGate::HalfOnQubit1,
        (GateKind::Half, _) => SwitchGate::HalfOnQubit2,
        (GateKind::Full, 1) => SwitchGate::FullOnQubit1,
        (GateKind::Full, _) => SwitchGate::FullOnQubit2,
    });
    let ts = bell_discharge(bell, gate, &cfg.spec()?, samples)?;
    let effective = gate.map_or(bell, |g| g.relabel(bell));
    Ok(Report::new(ts.to_table(cfg.omega, cfg.j_coupling))
        .with("bell", json!(bell.to_string()))
        .with("discharging_state", json!(effective.to_string()))
        .with("g", json!(effective.g())))
}

fn trap_check(cfg: &RunConfig, bell: Option<BellLabel>, tol: f64) -> Result<Report, CliError> {
    let spec = cfg.spec()?;
    let hs = HamiltonianSet::build(&spec)?;
    let labels = bell.map_or_else(|| BellLabel::ALL.to_vec(), |b| vec![b]);
    let mut t = Table::new(&[
        "bell",
        "h_eigenvalue_hbar_J",
        "h_residual_hbar_J",
        "ec_hbar_omega_J",
        "ec_residual_hbar_omega_J",
        "is_h_eigenstate",
        "trapped",
    ]);
    let (j, wj) = (spec.j_coupling, spec.omega * spec.j_coupling);
    for label in labels {
        let r = trapping_check(&hs.h_charging, &hs, &label.with_empty_hub(), tol)?;
        t.push(vec![
            Cell::Text(label.to_string()),
            Cell::Num(r.h_eigenvalue / j),
            Cell::Num(r.h_residual / j),
            Cell::Num(r.ec_value / wj),
            Cell::Num(r.ec_residual / wj),
            Cell::Bool(r.is_h_eigenstate),
            Cell::Bool(r.trapped),
        ]);
    }
    Ok(Report::new(t).with("tol", json!(tol)))
}

fn trap_scan(cfg: &RunConfig, samples: usize, tol: f64) -> Result<Report, CliError> {
    let r = trapping_uniqueness_scan(&cfg.spec()?, samples, tol, cfg.seed)?;
    let mut t = Table::new(&[
        "family",
        "samples",
        "passed_energy",
        "passed_both",
        "counterexamples",
        "worst_trace_distance",
    ]);
    let solved_bad = i64::from(r.solution_distance > tol);
    t.push(vec![
        Cell::Text("constraint_solution".into()),
        Cell::Int(1),
        Cell::Int(1),
        Cell::Int(1),
        Cell::Int(solved_bad),
        Cell::Num(r.solution_distance),
    ]);
    for (name, tally) in [("restricted", &r.restricted), ("unrestricted", &r.unrestricted)] {
        t.push(vec![
            Cell::Text(name.into()),
            Cell::Int(tally.samples as i64),
            Cell::Int(tally.passed_ca as i64),
            Cell::Int(tally.passed_both as i64),
            Cell::Int(tally.counterexamples as i64),
            Cell::Num(tally.worst_distance),
        ]);
    }
    Ok(Report::new(t)
        .with("tol", json!(tol))
        .with("distance_threshold", json!(r.distance_threshold))
        .with("solution_residual", json!(r.solution_residual)))
}

fn separable(cfg: &RunConfig, grid: usize) -> Result<Report, CliError> {
    let s = separable_sweep(grid, &cfg.spec()?, 32, cfg.seed)?;
    let mut t = Table::new(&["beta1", "beta2", "max_charge_over_E0"]);
    for (i, row) in s.values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t.push(vec![Cell::Num(s.betas[i]), Cell::Num(s.betas[j]), Cell::Num(*v)]);
        }
    }
    Ok(Report::new(t)
        .with("max_over_E0", json!(s.max))
        .with("argmax", json!([s.betas[s.argmax.0], s.betas[s.argmax.1]]))
        .with("points_within_1e-9_of_max", json!(s.near_max.len()))
        .with("simulated_crosscheck_error", json!(s.crosscheck_error)))
}

fn ncell(cfg: &RunConfig, plan: &NCellPlan, samples: usize) -> Result<Report, CliError> {
    let spec = cfg.spec()?;
    let ts = ncell_trajectory(plan, &spec, samples)?;
    let e = ncell_plan_energy(plan, &spec)?;
    let plan_text: Vec<&str> = plan.actions().iter().map(|a| a.symbol()).collect();
    Ok(Report::new(ts.to_table(cfg.omega, cfg.j_coupling))
        .with("plan", json!(plan_text.join(",")))
        .with("total_at_tau_d_hbar_omega", json!(e.total / spec.omega)))
}

fn adiabatic(
    cfg: &RunConfig,
    jtau: f64,
    schedule: Schedule,
    steps_per_unit: u32,
    samples: usize,
    summary: bool,
) -> Result<Report, CliError> {
    let j = cfg.j_coupling;
    let stepping = SteppingConfig::new(steps_per_unit)?;
    let spec = AdiabaticSpec::new(j, jtau / j, schedule, stepping)?;
    if summary {
        let report = run_discharge(&spec, cfg.omega)?;
        let ratio = report.final_charge / (2.0 * cfg.omega);
        let rows = [SweepRow { report, ratio }];
        return Ok(Report::new(sweep_table(&rows, cfg.omega, j)));
    }
    let res = adiabatic_ec(&spec, &initial_state(), cfg.omega, samples)?;
    Ok(Report::new(res.series.to_table(cfg.omega, j))
        .with("jtau", json!(jtau))
        .with("schedule", json!(schedule.name())))
}

fn sweep(
    cfg: &RunConfig,
    from: f64,
    to: f64,
    points: usize,
    steps_per_unit: u32,
    check_convergence: bool,
) -> Result<Report, CliError> {
    if points == 0 {
        return Err(CliError::Validation("points: must be at least 1".into()));
    }
    if !(to >= from) {
        return Err(CliError::Validation(format!("to: must not be below from ({from}), got {to}")));
    }
    let grid: Vec<f64> = if points == 1 {
        vec![from]
    } else {
        (0..points)
            .map(|k| {
                if k + 1 == points {
                    to
                } else {
                    from + (to - from) * k as f64 / (points - 1) as f64
                }
            })
            .collect()
    };
    let stepping = SteppingConfig::new(steps_per_unit)?;
    let rows = sweep_tau(cfg.j_coupling, stepping, &grid, cfg.omega, check_convergence)?;
    let t_star = saturation_threshold(&rows, 0.999, 1e-3 * cfg.omega * cfg.j_coupling);
    Ok(Report::new(sweep_table(&rows, cfg.omega, cfg.j_coupling))
        .with("saturation_threshold_jtau", json!(t_star)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_fields() {
        assert!(RunConfig::from_json(r#"{"omega": 2.0}"#).is_ok());
        assert!(RunConfig::from_json(r#"{"omega": 2.0, "gamma": 1}"#).is_err());
        let c = RunConfig::from_json(r#"{"format": "json", "seed": 7}"#).unwrap();
        assert_eq!((c.format, c.seed, c.omega), (Format::Json, 7, 1.0));
    }

    #[test]
    fn error_classes() {
        let v: CliError = QbatError::param("omega", "bad").into();
        assert_eq!(v.exit_code(), 2);
        let i: CliError = QbatError::NotHermitian { defect: 1.0 }.into();
        assert_eq!(i.exit_code(), 1);
    }
}
