use std::path::PathBuf;
use std::sync::Arc;

use serde_json::{json, Value};

use super::config::{self, ConfigError, ScenarioConfig};
use super::output::{num, opt, write_atomic, Csv};
use crate::error::Error;
use crate::generator::Generator;
use crate::grid::TimeGrid;
use crate::paths::PathEnsemble;
use crate::regression::Regressor;
use crate::risk::{coherence_report, sin_counterexample, RiskScenario, TOLERANCE_MULTIPLE};
use crate::solver::{picard_solve, MSolution};
use crate::terminal::Terminal;
use crate::volterra::{closed_form_translation, solve_bvie, Kernel};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "BSVIE_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Risk,
    Axioms,
    Bvie,
    Counterexample,
    Convergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Risk => "risk",
            Command::Axioms => "axioms",
            Command::Bvie => "bvie",
            Command::Counterexample => "counterexample",
            Command::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    /// `None` falls back to `$BSVIE_OUT_DIR`, then the working directory.
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub strict: bool,
}

#[derive(Debug)]
pub enum AppError {
    Config(ConfigError),
    Diverged(String),
    Numerical(String),
    StrictFailure { failed: Vec<String>, outcome: Box<Outcome> },
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io(_) => 1,
            AppError::Config(_) => 2,
            AppError::Diverged(_) | AppError::Numerical(_) => 3,
            AppError::StrictFailure { .. } => 4,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(e) => write!(f, "config error: {e}"),
            AppError::Diverged(m) => write!(f, "solver diverged: {m}"),
            AppError::Numerical(m) => write!(f, "numerical failure: {m}"),
            AppError::StrictFailure { failed, .. } => write!(f, "axioms violated: {}", failed.join(", ")),
            AppError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e)
    }
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(m) => AppError::Config(ConfigError {
                field: "config".into(),
                message: m,
            }),
            Error::Diverged { .. } => AppError::Diverged(e.to_string()),
            other => AppError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report_path: PathBuf,
    pub csv_path: PathBuf,
    /// Human-readable summary for the terminal.
    pub summary: String,
}

type AppResult<T> = std::result::Result<T, AppError>;

pub fn run(command: Command, options: &RunOptions) -> AppResult<Outcome> {
    let mut cfg = config::load(&options.config)?;
    if let Some(seed) = options.seed {
        cfg.seed = seed;
    }
    let out_dir = options
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let result = match command {
        Command::Solve => solve(&cfg)?,
        Command::Risk => risk(&cfg)?,
        Command::Axioms => axioms(&cfg)?,
        Command::Bvie => bvie(&cfg)?,
        Command::Counterexample => counterexample(&cfg)?,
        Command::Convergence => convergence(&cfg)?,
    };
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command.name(),
        "config": serde_json::to_value(&cfg).expect("config serializes"),
        "results": result.report,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    let report_path = write_atomic(&out_dir, &format!("{}_report.json", command.name()), text.as_bytes())?;
    let csv_path = write_atomic(&out_dir, &format!("{}.csv", command.name()), &result.csv.into_bytes())?;
    let outcome = Outcome {
        report_path,
        csv_path,
        summary: result.summary,
    };
    if options.strict && !result.failed.is_empty() {
        return Err(AppError::StrictFailure {
            failed: result.failed,
            outcome: Box::new(outcome),
        });
    }
    Ok(outcome)
}

struct CommandResult {
    report: Value,
    csv: Csv,
    summary: String,
    failed: Vec<String>,
}

fn regressor(cfg: &ScenarioConfig, steps: usize, paths: usize) -> AppResult<Arc<Regressor>> {
    let grid = TimeGrid::new(cfg.horizon, steps)?;
    let ensemble = Arc::new(PathEnsemble::sample(&grid, paths, cfg.dim, cfg.seed)?);
    Ok(Arc::new(Regressor::new(ensemble, cfg.basis()?)?))
}

fn slice_table(sol: &MSolution, residual: &[f64], header: [&str; 4]) -> (Csv, Vec<Value>) {
    let mut csv = Csv::new(&header);
    let mut rows = Vec::new();
    for i in 0..=sol.grid.steps() {
        let t = sol.grid.time(i);
        let mean = sol.y.mean(i);
        let sd = sol.y.variance(i).sqrt();
        csv.row(vec![num(t), num(mean), num(sd), num(residual[i])]);
        rows.push(json!({"t": t, "mean": mean, "std": sd, "m_residual": residual[i]}));
    }
    (csv, rows)
}

fn solution_report(sol: &MSolution, reg: &Regressor, residual: &[f64]) -> AppResult<Value> {
    let rmse = reg.martingale_test_rmse()?;
    let (mean, se) = sol.slice_stats(0);
    Ok(json!({
        "y0": {"mean": mean, "standard_error": se},
        "regression_rmse": rmse,
        "m_residual_max": residual.iter().cloned().fold(0.0, f64::max),
        "m_residual_bound": 5.0 * rmse * rmse,
        "solver": sol.report,
    }))
}

fn solve(cfg: &ScenarioConfig) -> AppResult<CommandResult> {
    let reg = regressor(cfg, cfg.steps, cfg.paths)?;
    let sol = picard_solve(&cfg.generator()?, &cfg.terminal()?, &reg, &cfg.solver_options())?;
    let residual = sol.m_condition_residual(reg.ensemble());
    let (csv, rows) = slice_table(&sol, &residual, ["t", "meanY", "stdY", "mResidual"]);
    let mut report = solution_report(&sol, &reg, &residual)?;
    report["slices"] = Value::Array(rows);
    let (mean, se) = sol.slice_stats(0);
    Ok(CommandResult {
        report,
        csv,
        summary: format!(
            "Y(0) = {mean:.6} ± {se:.2e}; {} Picard iterations, converged: {}",
            sol.report.iterations, sol.report.converged
        ),
        failed: Vec::new(),
    })
}

fn risk(cfg: &ScenarioConfig) -> AppResult<CommandResult> {
    let reg = regressor(cfg, cfg.steps, cfg.paths)?;
    let scenario = RiskScenario::new(cfg.generator()?, cfg.terminal()?, reg.clone(), cfg.solver_options())?;
    let sol = scenario.solve(&scenario.claim)?;
    let residual = sol.m_condition_residual(reg.ensemble());
    let (csv, rows) = slice_table(&sol, &residual, ["t", "meanRho", "stdRho", "mResidual"]);
    let mut report = solution_report(&sol, &reg, &residual)?;
    report["slices"] = Value::Array(rows);
    report["claim"] = Value::String(scenario.claim.describe());
    let (mean, se) = sol.slice_stats(0);
    Ok(CommandResult {
        report,
        csv,
        summary: format!("rho(0) = {mean:.6} ± {se:.2e} for claim {}", scenario.claim.describe()),
        failed: Vec::new(),
    })
}

fn axioms(cfg: &ScenarioConfig) -> AppResult<CommandResult> {
    let battery = cfg.battery()?;
    let reg = regressor(cfg, cfg.steps, cfg.paths)?;
    let multiple = cfg
        .axioms
        .as_ref()
        .and_then(|a| a.tolerance_multiple)
        .unwrap_or(TOLERANCE_MULTIPLE);
    let rmse = reg.martingale_test_rmse()?;
    let scenario = RiskScenario::new(cfg.generator()?, cfg.terminal()?, reg, cfg.solver_options())?
        .with_tolerance(multiple * rmse);
    let report = coherence_report(&scenario, &battery)?;
    let mut csv = Csv::new(&["axiom", "holds", "worstViolation", "toleranceUsed", "detail"]);
    for e in &report.entries {
        csv.row(vec![
            e.name.clone(),
            e.holds.to_string(),
            num(e.worst_violation),
            num(e.tolerance_used),
            format!("\"{}\"", e.detail.replace('"', "\"\"")),
        ]);
    }
    let failed: Vec<String> = report.summary().into_iter().filter(|r| !r.1).map(|r| r.0).collect();
    Ok(CommandResult {
        report: json!({
            "regression_rmse": rmse,
            "tolerance_multiple": multiple,
            "all_hold": report.all_hold(),
            "entries": report.entries,
        }),
        csv,
        summary: report.table(),
        failed,
    })
}

fn bvie(cfg: &ScenarioConfig) -> AppResult<CommandResult> {
    let block = cfg.bvie.as_ref().ok_or_else(|| ConfigError {
        field: "bvie".into(),
        message: "this command needs a bvie block".into(),
    })?;
    let kernel = cfg.kernel(&block.kernel)?;
    let grid = TimeGrid::new(cfg.horizon, cfg.steps)?;
    let y = solve_bvie(&kernel, block.c, &grid, block.tol, block.max_iter)?;
    let rate = kernel.rate();
    let closed: Vec<Option<f64>> = (0..=grid.steps())
        .map(|i| {
            rate.as_ref()
                .map(|r| closed_form_translation(&|u| r.eval(u), block.c, grid.time(i), grid.horizon(), grid.steps()))
        })
        .collect();
    let mut csv = Csv::new(&["t", "yStar", "closedForm"]);
    for i in 0..=grid.steps() {
        csv.row(vec![num(grid.time(i)), num(y[i]), opt(closed[i])]);
    }
    Ok(CommandResult {
        report: json!({
            "times": grid.points(),
            "y_star": y,
            "closed_form": closed,
        }),
        csv,
        summary: format!(
            "Y*(0) = {:.8}{}",
            y[0],
            closed[0].map(|c| format!(", closed form {c:.8}")).unwrap_or_default()
        ),
        failed: Vec::new(),
    })
}

fn counterexample(cfg: &ScenarioConfig) -> AppResult<CommandResult> {
    let block = cfg.counterexample.as_ref().ok_or_else(|| ConfigError {
        field: "counterexample".into(),
        message: "this command needs a counterexample block with `c`".into(),
    })?;
    let reg = regressor(cfg, cfg.steps, cfg.paths)?;
    let r = sin_counterexample(block.c, &reg, &cfg.solver_options(), block.averaged)?;
    let mut csv = Csv::new(&["t", "meanY", "varianceY", "varianceStdErr"]);
    for i in 0..r.times.len() {
        csv.row(vec![
            num(r.times[i]),
            num(r.means[i]),
            num(r.variances[i]),
            num(r.variance_standard_errors[i]),
        ]);
    }
    let summary = format!(
        "Var Y(t={:.3}) = {:.4e}, standard error {:.2e}: {:?}",
        r.times[r.mid_slice], r.mid_variance, r.mid_standard_error, r.verdict
    );
    Ok(CommandResult {
        report: serde_json::to_value(&r).expect("report serializes"),
        csv,
        summary,
        failed: Vec::new(),
    })
}

/// Continuum value of `Y(0)` when the scenario reduces to a deterministic
/// Volterra equation: constant claim and a generator with deterministic
/// `y`-coefficient and no `z` term.
fn deterministic_reference(cfg: &ScenarioConfig, generator: &Generator, terminal: &Terminal) -> AppResult<Option<f64>> {
    let c = match terminal {
        Terminal::Constant(c) => *c,
        _ => return Ok(None),
    };
    let z_free = match generator {
        Generator::Zero => true,
        Generator::Linear { l2, .. } => l2.iter().all(|k| k.is_zero()),
        _ => false,
    };
    let kernel = match generator.deterministic_y_kernel() {
        Some(k) if z_free => k,
        _ => return Ok(None),
    };
    Ok(Some(-volterra_reference(&kernel, c, cfg.horizon)?))
}

/// `Y*(0)` on a grid fine enough that the trapezoid error is negligible.
fn volterra_reference(kernel: &Kernel, c: f64, horizon: f64) -> AppResult<f64> {
    if let Some(r) = kernel.rate() {
        return Ok(closed_form_translation(&|u| r.eval(u), c, 0.0, horizon, 1 << 16));
    }
    let grid = TimeGrid::new(horizon, 4096)?;
    Ok(solve_bvie(kernel, c, &grid, 1e-13, 100_000)?[0])
}

fn convergence(cfg: &ScenarioConfig) -> AppResult<CommandResult> {
    let block = cfg.convergence.as_ref().ok_or_else(|| ConfigError {
        field: "convergence".into(),
        message: "this command needs a convergence block with a steps ladder".into(),
    })?;
    let generator = cfg.generator()?;
    let terminal = cfg.terminal()?;
    let reference = deterministic_reference(cfg, &generator, &terminal)?;
    let options = cfg.solver_options();

    let mut csv = Csv::new(&["study", "steps", "paths", "value", "standardError", "reference", "error", "ratio"]);
    let mut rows = Vec::new();
    let mut push = |study: &str, n: usize, m: usize, value: f64, se: Option<f64>, reference: Option<f64>, prev: &mut Option<f64>| {
        let error = reference.map(|r| (value - r).abs());
        let ratio = match (*prev, error) {
            (Some(p), Some(e)) if e > 0.0 => Some(p / e),
            _ => None,
        };
        *prev = error;
        csv.row(vec![
            study.to_string(),
            n.to_string(),
            m.to_string(),
            num(value),
            opt(se),
            opt(reference),
            opt(error),
            opt(ratio),
        ]);
        rows.push(json!({
            "study": study, "steps": n, "paths": m, "value": value, "standard_error": se,
            "reference": reference, "error": error, "ratio": ratio,
        }));
    };

    let mut prev = None;
    for &n in &block.steps {
        let reg = regressor(cfg, n, cfg.paths)?;
        let sol = picard_solve(&generator, &terminal, &reg, &options)?;
        let (mean, se) = sol.slice_stats(0);
        push("steps", n, cfg.paths, mean, Some(se), reference, &mut prev);
    }
    let mut prev = None;
    for &m in &block.paths {
        let reg = regressor(cfg, cfg.steps, m)?;
        let sol = picard_solve(&generator, &terminal, &reg, &options)?;
        let (mean, se) = sol.slice_stats(0);
        push("paths", cfg.steps, m, mean, Some(se), reference, &mut prev);
    }
    if let Some(b) = &cfg.bvie {
        let kernel = cfg.kernel(&b.kernel)?;
        let exact = volterra_reference(&kernel, b.c, cfg.horizon)?;
        let mut prev = None;
        for &n in &block.steps {
            let grid = TimeGrid::new(cfg.horizon, n)?;
            let y = solve_bvie(&kernel, b.c, &grid, b.tol, b.max_iter)?;
            push("bvie", n, 0, y[0], None, Some(exact), &mut prev);
        }
    }
    let summary = rows
        .iter()
        .map(|r| {
            format!(
                "{:<6} N={:<4} M={:<6} value={:.8} error={} ratio={}",
                r["study"].as_str().unwrap_or(""),
                r["steps"],
                r["paths"],
                r["value"].as_f64().unwrap_or(f64::NAN),
                r["error"].as_f64().map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into()),
                r["ratio"].as_f64().map(|e| format!("{e:.3}")).unwrap_or_else(|| "-".into()),
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    Ok(CommandResult {
        report: json!({ "rows": rows }),
        csv,
        summary,
        failed: Vec::new(),
    })
}
