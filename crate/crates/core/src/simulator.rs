//! Replay of window plans against the actual trace.
//!
//! Fluid mode repeats the planner's per-step arithmetic on actual arrivals and
//! counts expected valid requests. Request mode keeps a FIFO queue per model,
//! checks each request against its deadline and samples its correctness.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{Footprint, TaskId};
use crate::planner::feasibility::{check_feasible, retraining_run};
use crate::planner::{PlanError, PlanProblem};
use crate::preinit::EffectivePlan;
use crate::workload::{slo_target, Scenario};

/// Counts for one model, over the whole run or one window.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Counts {
    pub received: f64,
    pub served: f64,
    /// Served by the deadline.
    pub slo_met: f64,
    /// Served with a correct prediction.
    pub correct: f64,
    /// Served by the deadline and correct.
    pub valid: f64,
    /// Dropped after the deadline lapsed, or unserved within the step in fluid mode.
    pub dropped: f64,
    /// Still queued when the run ends (request mode).
    pub queued: f64,
    pub reconfigurations: usize,
    pub overhead_seconds: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        1.0
    }
}

impl Counts {
    pub fn goodput(&self) -> f64 {
        ratio(self.valid, self.received)
    }

    pub fn slo_attainment(&self) -> f64 {
        ratio(self.slo_met, self.received)
    }

    /// Fraction of served requests predicted correctly.
    pub fn accuracy(&self) -> f64 {
        ratio(self.correct, self.served)
    }

    fn add(&mut self, o: &Counts) {
        self.received += o.received;
        self.served += o.served;
        self.slo_met += o.slo_met;
        self.correct += o.correct;
        self.valid += o.valid;
        self.dropped += o.dropped;
        self.queued += o.queued;
        self.reconfigurations += o.reconfigurations;
        self.overhead_seconds += o.overhead_seconds;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fluid,
    Requests,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JobMetrics {
    pub model: String,
    pub totals: Counts,
    /// One entry per window.
    pub windows: Vec<Counts>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub mode: Mode,
    pub jobs: Vec<JobMetrics>,
}

impl Metrics {
    /// Σ valid / Σ received across jobs.
    pub fn system_goodput(&self) -> f64 {
        let v: f64 = self.jobs.iter().map(|j| j.totals.valid).sum();
        let r: f64 = self.jobs.iter().map(|j| j.totals.received).sum();
        ratio(v, r)
    }

    pub fn total_valid(&self) -> f64 {
        self.jobs.iter().map(|j| j.totals.valid).sum()
    }
}

/// Per-step view of one window plan, shared by both modes.
struct StepView {
    /// Per model: capability of held instances this step.
    capability: Vec<f64>,
    /// Per model: inference instances changed since the previous step.
    reconfigured: Vec<bool>,
    /// Per model: effective overhead in steps charged from this step.
    overhead: Vec<f64>,
    /// Per model: retraining finished strictly before this step.
    completed: Vec<bool>,
}

fn step_views(problem: &PlanProblem, plan: &EffectivePlan) -> Result<Vec<StepView>, PlanError> {
    let violations = check_feasible(problem, &plan.plan);
    if !violations.is_empty() {
        return Err(PlanError::InfeasiblePlan(violations));
    }
    let n = problem.models.len();
    let finish: Vec<usize> =
        (0..n).map(|m| retraining_run(problem, &plan.plan, m).expect("feasible plan retrains").finish).collect();
    let mut prev = vec![Footprint::EMPTY; n];
    let mut out = Vec::with_capacity(plan.plan.len());
    for (s, a) in plan.plan.steps.iter().enumerate() {
        let config = problem.catalog.get(&a.configuration).expect("feasible plan");
        let mut view = StepView {
            capability: vec![0.0; n],
            reconfigured: vec![false; n],
            overhead: vec![0.0; n],
            completed: vec![false; n],
        };
        for (m, model) in problem.models.iter().enumerate() {
            let mask = a.slots_of(TaskId::inference(m));
            view.capability[m] =
                mask.ids().filter_map(|id| config.slot(id)).map(|sl| model.step_capability[sl.size as usize]).sum();
            let fp = config.footprint(mask);
            if s > 0 && fp != prev[m] {
                view.reconfigured[m] = true;
                view.overhead[m] = plan.psi_eff[m][s] / problem.step_seconds;
            }
            view.completed[m] = s >= finish[m];
            prev[m] = fp;
        }
        out.push(view);
    }
    Ok(out)
}

fn window_problem(scenario: &Scenario, window: usize) -> Result<PlanProblem, PlanError> {
    PlanProblem::for_window(scenario, window, &scenario.window_trace(window).into())
}

fn check_plans(scenario: &Scenario, plans: &[EffectivePlan]) -> Result<(), PlanError> {
    if plans.len() != scenario.window_count {
        return Err(PlanError::Input(format!("{} plans for {} windows", plans.len(), scenario.window_count)));
    }
    Ok(())
}

/// Fluid replay. Overhead above one step spills into the following steps,
/// one full step of lost capability at a time.
pub fn run_fluid(scenario: &Scenario, plans: &[EffectivePlan]) -> Result<Metrics, PlanError> {
    check_plans(scenario, plans)?;
    let n = scenario.models.len();
    let mut jobs: Vec<JobMetrics> = scenario
        .models
        .iter()
        .map(|m| JobMetrics { model: m.profile.name.clone(), totals: Counts::default(), windows: Vec::new() })
        .collect();
    let mut pending = vec![0.0f64; n];
    for (w, plan) in plans.iter().enumerate() {
        let problem = window_problem(scenario, w)?;
        let views = step_views(&problem, plan)?;
        let mut win = vec![Counts::default(); n];
        for (s, view) in views.iter().enumerate() {
            for (m, model) in problem.models.iter().enumerate() {
                let c = &mut win[m];
                if view.reconfigured[m] {
                    c.reconfigurations += 1;
                    pending[m] = pending[m].max(view.overhead[m]);
                }
                let frac = pending[m].min(1.0);
                pending[m] -= frac;
                c.overhead_seconds += frac * problem.step_seconds;
                let cap = view.capability[m];
                let arrivals = model.arrivals[s] as f64;
                let served = arrivals.min(cap - frac * cap);
                let acc = model.accuracy(view.completed[m]);
                c.received += arrivals;
                c.served += served;
                c.slo_met += served;
                c.correct += served * acc;
                c.valid += served * acc;
                c.dropped += arrivals - served;
            }
        }
        for (job, c) in jobs.iter_mut().zip(win) {
            job.totals.add(&c);
            job.windows.push(c);
        }
    }
    Ok(Metrics { mode: Mode::Fluid, jobs })
}

struct Request {
    arrival: f64,
    deadline: f64,
}

/// Request-level replay with FIFO queues, deadline drops and sampled
/// correctness. Requests arrive at the start of their step.
pub fn run_requests(scenario: &Scenario, plans: &[EffectivePlan], seed: u64) -> Result<Metrics, PlanError> {
    check_plans(scenario, plans)?;
    let n = scenario.models.len();
    let slo: Vec<f64> = scenario
        .models
        .iter()
        .map(|m| slo_target(&m.profile).map_err(|e| PlanError::Input(e.to_string())))
        .collect::<Result<_, _>>()?;
    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|m| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(m as u64);
            r
        })
        .collect();
    let mut jobs: Vec<JobMetrics> = scenario
        .models
        .iter()
        .map(|m| JobMetrics { model: m.profile.name.clone(), totals: Counts::default(), windows: Vec::new() })
        .collect();
    let mut queues: Vec<VecDeque<Request>> = (0..n).map(|_| VecDeque::new()).collect();
    let mut credit = vec![0.0f64; n];
    let mut pending = vec![0.0f64; n];
    let mut step_index = 0usize;
    for (w, plan) in plans.iter().enumerate() {
        let problem = window_problem(scenario, w)?;
        let g = problem.step_seconds;
        let views = step_views(&problem, plan)?;
        let mut win = vec![Counts::default(); n];
        for (s, view) in views.iter().enumerate() {
            let t = step_index as f64 * g;
            for (m, model) in problem.models.iter().enumerate() {
                let c = &mut win[m];
                let q = &mut queues[m];
                if view.reconfigured[m] {
                    c.reconfigurations += 1;
                    pending[m] = pending[m].max(view.overhead[m]);
                }
                let frac = pending[m].min(1.0);
                pending[m] -= frac;
                c.overhead_seconds += frac * g;
                let arrivals = model.arrivals[s];
                c.received += arrivals as f64;
                for _ in 0..arrivals {
                    q.push_back(Request { arrival: t, deadline: t + slo[m] });
                }
                while q.front().is_some_and(|r| r.deadline < t) {
                    q.pop_front();
                    c.dropped += 1.0;
                }
                let cap = view.capability[m] * (1.0 - frac);
                if q.is_empty() || cap <= 0.0 {
                    if q.is_empty() {
                        credit[m] = 0.0;
                    }
                    continue;
                }
                credit[m] += cap;
                let drain = (credit[m].floor() as usize).min(q.len());
                credit[m] -= drain as f64;
                let acc = model.accuracy(view.completed[m]);
                for pos in 1..=drain {
                    let r = q.pop_front().expect("drain bounded by queue length");
                    let completion = t + pos as f64 * g / cap;
                    let timely = completion <= r.deadline + 1e-9;
                    let correct = rngs[m].random::<f64>() < acc;
                    debug_assert!(r.arrival <= t);
                    c.served += 1.0;
                    c.slo_met += f64::from(u8::from(timely));
                    c.correct += f64::from(u8::from(correct));
                    c.valid += f64::from(u8::from(timely && correct));
                }
                if q.is_empty() {
                    credit[m] = 0.0;
                }
            }
            step_index += 1;
        }
        for (job, c) in jobs.iter_mut().zip(win) {
            job.totals.add(&c);
            job.windows.push(c);
        }
    }
    for (job, q) in jobs.iter_mut().zip(&queues) {
        job.totals.queued = q.len() as f64;
        if let Some(last) = job.windows.last_mut() {
            last.queued = q.len() as f64;
        }
    }
    Ok(Metrics { mode: Mode::Requests, jobs })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JobReport {
    pub model: String,
    pub received: f64,
    pub valid: f64,
    pub goodput: f64,
    pub slo_attainment: f64,
    pub accuracy: f64,
    pub reconfigurations: usize,
    pub overhead_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoodputReport {
    pub mode: Mode,
    pub jobs: Vec<JobReport>,
    pub system_goodput: f64,
    pub total_valid: f64,
    pub total_received: f64,
    pub reconfigurations: usize,
    pub overhead_seconds: f64,
}

pub fn goodput_report(metrics: &Metrics) -> GoodputReport {
    let jobs: Vec<JobReport> = metrics
        .jobs
        .iter()
        .map(|j| JobReport {
            model: j.model.clone(),
            received: j.totals.received,
            valid: j.totals.valid,
            goodput: j.totals.goodput(),
            slo_attainment: j.totals.slo_attainment(),
            accuracy: j.totals.accuracy(),
            reconfigurations: j.totals.reconfigurations,
            overhead_seconds: j.totals.overhead_seconds,
        })
        .collect();
    GoodputReport {
        mode: metrics.mode,
        system_goodput: metrics.system_goodput(),
        total_valid: metrics.total_valid(),
        total_received: jobs.iter().map(|j| j.received).sum(),
        reconfigurations: jobs.iter().map(|j| j.reconfigurations).sum(),
        overhead_seconds: jobs.iter().map(|j| j.overhead_seconds).sum(),
        jobs,
    }
}

/// Flat table `window,model,goodput,slo,acc,reconfigs`.
pub fn window_table(metrics: &Metrics) -> String {
    let mut out = String::from("window,model,goodput,slo,acc,reconfigs\n");
    let windows = metrics.jobs.first().map_or(0, |j| j.windows.len());
    for w in 0..windows {
        for j in &metrics.jobs {
            let c = &j.windows[w];
            let _ = writeln!(
                out,
                "{w},{},{:.6},{:.6},{:.6},{}",
                j.model,
                c.goodput(),
                c.slo_attainment(),
                c.accuracy(),
                c.reconfigurations
            );
        }
    }
    out
}
