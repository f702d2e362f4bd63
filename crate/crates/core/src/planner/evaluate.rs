//! Goodput scoring of an allocation sequence.

use serde::Serialize;

use crate::catalog::{Footprint, TaskId};

use super::feasibility::{check_feasible, retraining_run};
use super::problem::{AllocationSequence, PlanProblem};
use super::PlanError;

/// One inference task's contribution at one step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepTerm {
    pub step: usize,
    pub model: usize,
    /// Requests the held instances could serve this step.
    pub capability: f64,
    /// Capability lost to reconfiguration overhead.
    pub loss: f64,
    pub throughput: f64,
    /// Retraining finished strictly before this step.
    pub completed: bool,
    pub reconfigured: bool,
    pub goodput: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanScore {
    /// Expected number of valid requests over the window.
    pub total: f64,
    /// Terms ordered by step, then model.
    pub terms: Vec<StepTerm>,
    /// Per model: first step served by the retrained model.
    pub finish_step: Vec<usize>,
    /// Per model: steps at which its inference instances changed.
    pub reconfigurations: Vec<usize>,
    /// Per model: overhead charged, in steps of lost capability.
    pub overhead_steps: Vec<f64>,
}

impl PlanScore {
    pub fn per_model(&self, model: usize) -> f64 {
        self.terms.iter().filter(|t| t.model == model).map(|t| t.goodput).sum()
    }
}

/// Scores a feasible sequence. `overhead` optionally overrides each model's
/// reconfiguration overhead per step, in seconds.
pub fn evaluate_plan(
    problem: &PlanProblem,
    seq: &AllocationSequence,
    overhead: Option<&[Vec<f64>]>,
) -> Result<PlanScore, PlanError> {
    let violations = check_feasible(problem, seq);
    if !violations.is_empty() {
        return Err(PlanError::InfeasiblePlan(violations));
    }
    let n = problem.models.len();
    let finish_step: Vec<usize> =
        (0..n).map(|m| retraining_run(problem, seq, m).expect("feasible plan retrains").finish).collect();
    let mut terms = Vec::with_capacity(problem.steps * n);
    let mut reconfigurations = vec![0; n];
    let mut overhead_steps = vec![0.0; n];
    let mut prev: Vec<Footprint> = vec![Footprint::EMPTY; n];
    for (s, a) in seq.steps.iter().enumerate() {
        let config = problem.catalog.get(&a.configuration).expect("feasible plan");
        for (m, model) in problem.models.iter().enumerate() {
            let mask = a.slots_of(TaskId::inference(m));
            let fp = config.footprint(mask);
            let capability: f64 =
                mask.ids().filter_map(|id| config.slot(id)).map(|sl| model.step_capability[sl.size as usize]).sum();
            let reconfigured = s > 0 && fp != prev[m];
            let frac = if reconfigured {
                let psi_steps = match overhead {
                    Some(o) => o[m][s] / problem.step_seconds,
                    None => model.overhead_steps,
                };
                psi_steps.min(1.0)
            } else {
                0.0
            };
            let loss = frac * capability;
            let throughput = (model.arrivals[s] as f64).min(capability - loss);
            let completed = s >= finish_step[m];
            let goodput = throughput * model.accuracy(completed);
            if reconfigured {
                reconfigurations[m] += 1;
                overhead_steps[m] += frac;
            }
            terms.push(StepTerm { step: s, model: m, capability, loss, throughput, completed, reconfigured, goodput });
            prev[m] = fp;
        }
    }
    let total = terms.iter().map(|t| t.goodput).sum();
    Ok(PlanScore { total, terms, finish_step, reconfigurations, overhead_steps })
}

#[cfg(test)]
mod tests {
    use super::super::problem::fixtures::*;
    use super::*;
    use crate::catalog::Allocation;

    fn worked_plan() -> AllocationSequence {
        AllocationSequence {
            window: 0,
            steps: vec![
                Allocation::new(0, "4+3").with(TaskId::retraining(0), &[0]).with(TaskId::inference(0), &[1]),
                Allocation::new(1, "4+3").with(TaskId::inference(0), &[0]),
                Allocation::new(2, "4+3").with(TaskId::inference(0), &[0]),
            ],
        }
    }

    #[test]
    fn worked_example_scores_12_5() {
        let p = problem(&worked_example());
        let score = evaluate_plan(&p, &worked_plan(), None).unwrap();
        assert_eq!(score.total, 12.5);
        let per_step: Vec<f64> = score.terms.iter().map(|t| t.goodput).collect();
        assert_eq!(per_step, vec![2.5, 5.0, 5.0]);
        assert_eq!(score.finish_step, vec![1]);
        assert_eq!(score.reconfigurations, vec![1]);
    }

    #[test]
    fn overhead_scales_capability() {
        let mut s = worked_example();
        s.models[0].profile.reconfig_overhead = 0.5;
        s.trace.counts[0] = vec![10, 10, 10];
        let p = problem(&s);
        let score = evaluate_plan(&p, &worked_plan(), None).unwrap();
        // step 0: min(10, 6) * 0.5; step 1: min(10, 8 - 4) * 1.0; step 2: 8
        assert_eq!(score.total, 3.0 + 4.0 + 8.0);
        assert_eq!(score.terms[1].loss, 4.0);
        let zero = vec![vec![0.0; 3]];
        assert_eq!(evaluate_plan(&p, &worked_plan(), Some(&zero)).unwrap().total, 3.0 + 8.0 + 8.0);
    }

    #[test]
    fn substitution_examples() {
        // throughput 10 at accuracy 0.6 before completion, 0.9 after
        let mut s = worked_example();
        s.trace.counts[0] = vec![10, 10, 10];
        s.models[0].retraining.accuracy[0] = crate::workload::AccuracyWindow { pre: 0.6, post: 0.9 };
        s.models[0].profile.capability = [(3u8, 10.0), (4, 10.0)].into_iter().collect();
        let p = problem(&s);
        let score = evaluate_plan(&p, &worked_plan(), None).unwrap();
        assert!((score.terms[0].goodput - 6.0).abs() < 1e-12);
        assert!((score.terms[1].goodput - 9.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_plan_is_rejected() {
        let p = problem(&worked_example());
        let mut plan = worked_plan();
        plan.steps[0].assignments.remove(&TaskId::retraining(0));
        assert!(matches!(evaluate_plan(&p, &plan, None), Err(PlanError::InfeasiblePlan(_))));
    }
}
