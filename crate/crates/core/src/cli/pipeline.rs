//! Per-window planning loop and the artifacts written by the commands.

use rayon::prelude::*;
use serde::Serialize;

use crate::planner::baselines::{plan_static_proportional, plan_window_boundary};
use crate::planner::{
    evaluate_plan, solve_bruteforce, solve_dp, AllocationSequence, BruteForceOptions, DpOptions, PlanError,
    PlanProblem,
};
use crate::predictor::{mean_abs_error, predict_arrivals, ArrivalForecast, PredictorKind};
use crate::preinit::{preinitialize, EffectivePlan, PreinitAction};
use crate::simulator::{goodput_report, run_fluid, run_requests, window_table, GoodputReport, Metrics};
use crate::workload::Scenario;

use super::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Planner {
    Dp,
    Bruteforce,
    StaticProportional,
    WindowBoundary,
}

impl Planner {
    pub fn label(&self) -> &'static str {
        match self {
            Planner::Dp => "dp",
            Planner::Bruteforce => "bruteforce",
            Planner::StaticProportional => "static-proportional",
            Planner::WindowBoundary => "window-boundary",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlanSettings {
    pub planner: Planner,
    pub predictor: PredictorKind,
    pub preinit: bool,
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowPlan {
    pub window: usize,
    /// Predictor actually used; the first window has no history and falls
    /// back to the actual arrivals.
    pub predictor: String,
    pub forecast_mae: f64,
    /// Goodput the planner expected on its forecast, before pre-initialization.
    pub planned_goodput: f64,
    pub actions: Vec<PreinitAction>,
    pub plan: AllocationSequence,
    #[serde(skip)]
    pub effective: EffectivePlan,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanReport {
    pub planner: Planner,
    pub preinit: bool,
    pub windows: Vec<WindowPlan>,
}

/// Forecast for `window`, with the predictor that produced it.
pub fn forecast(
    scenario: &Scenario,
    window: usize,
    kind: PredictorKind,
) -> Result<(ArrivalForecast, PredictorKind), CliError> {
    let actual = scenario.window_trace(window);
    let kind = if window == 0 { PredictorKind::Oracle } else { kind };
    let history = scenario.trace.slice(0, window * scenario.window_size);
    let f = predict_arrivals(kind, &history, Some(&actual), scenario.window_size).map_err(CliError::input)?;
    Ok((f, kind))
}

pub fn window_problem(scenario: &Scenario, window: usize, kind: PredictorKind) -> Result<(PlanProblem, ArrivalForecast, PredictorKind), CliError> {
    let (f, used) = forecast(scenario, window, kind)?;
    let problem = PlanProblem::for_window(scenario, window, &f).map_err(CliError::plan)?;
    Ok((problem, f, used))
}

fn solve(problem: &PlanProblem, settings: &PlanSettings) -> Result<AllocationSequence, PlanError> {
    match settings.planner {
        Planner::Dp => {
            let opts = DpOptions { workers: settings.workers, ..DpOptions::default() };
            solve_dp(problem, &opts).map(|s| s.plan)
        }
        Planner::Bruteforce => solve_bruteforce(problem, &BruteForceOptions::default()).map(|s| s.plan),
        Planner::StaticProportional => plan_static_proportional(problem),
        Planner::WindowBoundary => plan_window_boundary(problem),
    }
}

/// Plans every window in order.
pub fn plan_windows(scenario: &Scenario, settings: &PlanSettings) -> Result<PlanReport, CliError> {
    let mut windows = Vec::with_capacity(scenario.window_count);
    for w in 0..scenario.window_count {
        let (problem, f, used) = window_problem(scenario, w, settings.predictor)?;
        let plan = solve(&problem, settings).map_err(CliError::plan)?;
        let planned_goodput = evaluate_plan(&problem, &plan, None).map_err(CliError::plan)?.total;
        let effective = if settings.preinit {
            preinitialize(&problem, plan.clone())
        } else {
            EffectivePlan::without_preinit(&problem, plan.clone())
        };
        windows.push(WindowPlan {
            window: w,
            predictor: used.to_string(),
            forecast_mae: mean_abs_error(&f, &scenario.window_trace(w)),
            planned_goodput,
            actions: effective.actions.clone(),
            plan,
            effective,
        });
    }
    Ok(PlanReport { planner: settings.planner, preinit: settings.preinit, windows })
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub planner: Planner,
    pub seed: u64,
    pub fluid: GoodputReport,
    pub requests: GoodputReport,
    #[serde(skip)]
    pub fluid_metrics: Metrics,
    #[serde(skip)]
    pub request_metrics: Metrics,
}

pub fn simulate(scenario: &Scenario, report: &PlanReport, seed: u64) -> Result<SimulationReport, CliError> {
    let plans: Vec<EffectivePlan> = report.windows.iter().map(|w| w.effective.clone()).collect();
    let fluid_metrics = run_fluid(scenario, &plans).map_err(CliError::plan)?;
    let request_metrics = run_requests(scenario, &plans, seed).map_err(CliError::plan)?;
    Ok(SimulationReport {
        planner: report.planner,
        seed,
        fluid: goodput_report(&fluid_metrics),
        requests: goodput_report(&request_metrics),
        fluid_metrics,
        request_metrics,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub columns: Vec<SimulationReport>,
}

impl ComparisonReport {
    /// One row per planner and mode.
    pub fn table(&self) -> String {
        let mut out = String::from("planner,mode,system_goodput,valid,received,reconfigs,overhead_seconds\n");
        for c in &self.columns {
            for r in [&c.fluid, &c.requests] {
                let mode = serde_json::to_value(r.mode).expect("mode serializes");
                out.push_str(&format!(
                    "{},{},{:.6},{:.3},{},{},{:.3}\n",
                    c.planner.label(),
                    mode.as_str().unwrap_or_default(),
                    r.system_goodput,
                    r.total_valid,
                    r.total_received,
                    r.reconfigurations,
                    r.overhead_seconds
                ));
            }
        }
        out
    }
}

/// The planner, with its pre-initialization setting, against both baselines.
/// Baselines never pre-initialize.
pub fn compare(
    scenario: &Scenario,
    settings: &PlanSettings,
    seed: u64,
) -> Result<(Vec<PlanReport>, ComparisonReport), CliError> {
    let grid = [
        settings.clone(),
        PlanSettings { planner: Planner::StaticProportional, preinit: false, ..settings.clone() },
        PlanSettings { planner: Planner::WindowBoundary, preinit: false, ..settings.clone() },
    ];
    let results: Vec<Result<(PlanReport, SimulationReport), CliError>> = grid
        .par_iter()
        .map(|s| {
            let plan = plan_windows(scenario, s)?;
            let sim = simulate(scenario, &plan, seed)?;
            Ok((plan, sim))
        })
        .collect();
    let mut plans = Vec::new();
    let mut columns = Vec::new();
    for r in results {
        let (p, s) = r?;
        plans.push(p);
        columns.push(s);
    }
    Ok((plans, ComparisonReport { columns }))
}

pub fn window_tables(sim: &SimulationReport) -> (String, String) {
    (window_table(&sim.fluid_metrics), window_table(&sim.request_metrics))
}
