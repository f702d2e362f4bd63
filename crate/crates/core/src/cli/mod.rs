//! Command-line interface: `plan`, `simulate`, `compare`, `validate` and
//! `emit-lp`.
//!
//! Every flag can also be set through an environment variable named
//! `MIGPLAN_<FLAG>` (for example `MIGPLAN_SCENARIO`, `MIGPLAN_EQ11_AS_PRINTED`).
//! Exit codes: 0 success, 1 infeasible scenario or no plan found, 2 bad input.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::planner::{build_plan_model, emit_lp, ModelOptions, PlanError, PlanProblem};
use crate::predictor::PredictorKind;
use crate::workload::{load_scenario, Granularity, Scenario, WorkloadError};

pub mod pipeline;

pub use pipeline::{compare, plan_windows, simulate, PlanSettings, Planner};

#[derive(Debug)]
pub struct CliError {
    pub exit: u8,
    pub message: String,
}

impl CliError {
    pub fn input(e: impl fmt::Display) -> Self {
        CliError { exit: 2, message: e.to_string() }
    }

    pub fn plan(e: PlanError) -> Self {
        let exit = if matches!(e, PlanError::Input(_)) { 2 } else { 1 };
        CliError { exit, message: format!("{}: {e}", e.code()) }
    }

    fn workload(e: WorkloadError) -> Self {
        CliError { exit: 2, message: format!("{}: {e}", e.code()) }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Parser, Debug)]
#[command(name = "migplan", version, about = "Per-second MIG instance planning and replay")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Plan every window and write the allocation sequences.
    Plan(RunArgs),
    /// Plan, then replay the plans in fluid and request mode.
    Simulate(RunArgs),
    /// Planner against the static-proportional and window-boundary baselines.
    Compare(RunArgs),
    /// Load the scenario and run the feasibility pre-check on every window.
    Validate(RunArgs),
    /// Write one window's mixed-integer model in LP format.
    EmitLp(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Dp,
    Bruteforce,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, env = "MIGPLAN_SCENARIO")]
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value = "dp", env = "MIGPLAN_SOLVER")]
    pub solver: SolverArg,
    /// oracle, persistence or ewma:<alpha>
    #[arg(long, default_value = "oracle", env = "MIGPLAN_PREDICTOR")]
    pub predictor: PredictorKind,
    #[arg(long, value_enum, default_value = "on", env = "MIGPLAN_PREINIT")]
    pub preinit: Switch,
    /// Seconds per planning step; overrides the scenario.
    #[arg(long, env = "MIGPLAN_GRANULARITY")]
    pub granularity: Option<f64>,
    #[arg(long, default_value_t = 0, env = "MIGPLAN_SEED")]
    pub seed: u64,
    /// Output directory; reports go to standard output when absent.
    #[arg(long, env = "MIGPLAN_OUT")]
    pub out: Option<PathBuf>,
    /// Emit the reconfiguration constraint in its upper-bound-only form.
    #[arg(long, env = "MIGPLAN_EQ11_AS_PRINTED")]
    pub eq11_as_printed: bool,
    /// Worker threads for the DP; defaults to all cores.
    #[arg(long, env = "MIGPLAN_WORKERS")]
    pub workers: Option<usize>,
    /// Window for `emit-lp`.
    #[arg(long, default_value_t = 0, env = "MIGPLAN_WINDOW")]
    pub window: usize,
}

impl RunArgs {
    pub fn settings(&self) -> PlanSettings {
        PlanSettings {
            planner: match self.solver {
                SolverArg::Dp => Planner::Dp,
                SolverArg::Bruteforce => Planner::Bruteforce,
            },
            predictor: self.predictor,
            preinit: self.preinit == Switch::On,
            workers: self.workers,
        }
    }
}

/// Loads the scenario and applies the granularity override.
pub fn load(args: &RunArgs) -> Result<Scenario, CliError> {
    let mut s = load_scenario(&args.scenario).map_err(CliError::workload)?;
    if let Some(g) = args.granularity {
        let gran = Granularity::from_seconds(g)
            .ok_or_else(|| CliError::input(format!("granularity {g} must be a whole number of seconds or 1/n")))?;
        if gran.steps_in(s.window_size).is_none() {
            return Err(CliError::input(format!("granularity {g} does not divide the window size {}", s.window_size)));
        }
        s.granularity = g;
        s.validate().map_err(CliError::workload)?;
    }
    Ok(s)
}

fn write(out: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::write(out.join(name), contents).map_err(|e| CliError::input(format!("{}: {e}", out.join(name).display())))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn emit(args: &RunArgs, files: &[(String, String)]) -> Result<(), CliError> {
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
            for (name, body) in files {
                write(dir, name, body)?;
            }
        }
        None => {
            for (_, body) in files {
                print!("{body}");
            }
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(args) => {
            let s = load(&args)?;
            for w in 0..s.window_count {
                let (problem, _, _) = pipeline::window_problem(&s, w, PredictorKind::Oracle)?;
                problem.precheck().map_err(CliError::plan)?;
            }
            println!(
                "ok: {} models, {} windows of {} s, {} steps per window, {} configurations",
                s.models.len(),
                s.window_count,
                s.window_size,
                s.steps_per_window(),
                s.catalog.configurations.len()
            );
            Ok(())
        }
        Command::EmitLp(args) => {
            let s = load(&args)?;
            if args.window >= s.window_count {
                return Err(CliError::input(format!("window {} out of range 0..{}", args.window, s.window_count)));
            }
            let (problem, _, _): (PlanProblem, _, _) = pipeline::window_problem(&s, args.window, args.predictor)?;
            problem.precheck().map_err(CliError::plan)?;
            let model = build_plan_model(&problem, ModelOptions { eq11_as_printed: args.eq11_as_printed });
            eprintln!("{} variables, {} constraints", model.variable_count(), model.constraint_count());
            let text = emit_lp(&model, &format!("window {} of {}", args.window, args.scenario.display()));
            emit(&args, &[(format!("window_{}.lp", args.window), text)])
        }
        Command::Plan(args) => {
            let s = load(&args)?;
            let report = plan_windows(&s, &args.settings())?;
            emit(&args, &[("plan.json".into(), json(&report))])
        }
        Command::Simulate(args) => {
            let s = load(&args)?;
            let report = plan_windows(&s, &args.settings())?;
            let sim = simulate(&s, &report, args.seed)?;
            let (fluid, requests) = pipeline::window_tables(&sim);
            let mut files = vec![("report.json".to_string(), json(&sim))];
            if args.out.is_some() {
                files.push(("plan.json".into(), json(&report)));
                files.push(("windows_fluid.csv".into(), fluid));
                files.push(("windows_requests.csv".into(), requests));
            }
            emit(&args, &files)
        }
        Command::Compare(args) => {
            let s = load(&args)?;
            let (plans, cmp) = compare(&s, &args.settings(), args.seed)?;
            let mut files = vec![("compare.csv".to_string(), cmp.table())];
            if args.out.is_some() {
                files.push(("compare.json".into(), json(&cmp)));
                for (p, c) in plans.iter().zip(&cmp.columns) {
                    let (fluid, requests) = pipeline::window_tables(c);
                    files.push((format!("plan_{}.json", p.planner.label()), json(p)));
                    files.push((format!("windows_fluid_{}.csv", p.planner.label()), fluid));
                    files.push((format!("windows_requests_{}.csv", p.planner.label()), requests));
                }
            }
            emit(&args, &files)
        }
    }
}
