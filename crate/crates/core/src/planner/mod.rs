//! Window planning: problem construction, scoring, feasibility, exact solvers,
//! baselines and LP export.

use thiserror::Error;

pub mod baselines;
pub mod bruteforce;
pub mod dp;
pub mod evaluate;
pub mod feasibility;
pub mod lp;
pub mod model;
pub mod problem;

pub use baselines::{plan_static_proportional, plan_window_boundary};
pub use bruteforce::{solve_bruteforce, BruteForceOptions};
pub use dp::{solve_dp, DpOptions};
pub use evaluate::{evaluate_plan, PlanScore, StepTerm};
pub use feasibility::{check_feasible, Family, Violation};
pub use lp::{emit_lp, validate_lp, LpSummary};
pub use model::{build_plan_model, ModelOptions, PlanModel};
pub use problem::{AllocationSequence, ModelTerms, PlanProblem};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("infeasible: {code}: {detail}")]
    Infeasible { code: &'static str, detail: String },
    #[error("plan violates {} constraint(s); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InfeasiblePlan(Vec<Violation>),
    #[error("state budget of {budget} exceeded at step {step} with a frontier of {frontier} entries")]
    BudgetExceeded { budget: usize, step: usize, frontier: usize },
    #[error("search space of {space:.3e} sequences exceeds the cap of {cap:.3e}")]
    CapExceeded { space: f64, cap: f64 },
    #[error("{0}")]
    Input(String),
}

impl PlanError {
    pub fn infeasible(code: &'static str, detail: impl Into<String>) -> Self {
        PlanError::Infeasible { code, detail: detail.into() }
    }

    pub fn code(&self) -> &'static str {
        match self {
            PlanError::Infeasible { code, .. } => code,
            PlanError::InfeasiblePlan(_) => "infeasible-plan",
            PlanError::BudgetExceeded { .. } => "state-budget-exceeded",
            PlanError::CapExceeded { .. } => "search-cap-exceeded",
            PlanError::Input(_) => "input",
        }
    }

    /// Whether the error means the scenario has no feasible plan (as opposed to
    /// a resource limit or bad input).
    pub fn is_infeasible(&self) -> bool {
        matches!(self, PlanError::Infeasible { .. })
    }
}
