//! Pre-creation of next-step instances on slices the current step leaves free,
//! so that a task moving onto them does not pay the reconfiguration overhead.

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{reconfiguration_diff, Catalog, InstanceSlot, Placement, TaskId};
use crate::planner::{AllocationSequence, PlanProblem};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PreinitAction {
    /// Step whose allocation hosts the pre-created instance (window-relative).
    pub fire_second: usize,
    /// The instance as it appears at `fire_second + 1`.
    pub target: InstanceSlot,
    /// Tasks holding `target` at `fire_second + 1`.
    pub covers_tasks: Vec<TaskId>,
}

/// A sequence with its per-model, per-step effective overhead in seconds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectivePlan {
    pub plan: AllocationSequence,
    pub actions: Vec<PreinitAction>,
    pub psi_eff: Vec<Vec<f64>>,
}

impl EffectivePlan {
    /// The plan with no pre-initialization: every step keeps the model's overhead.
    pub fn without_preinit(problem: &PlanProblem, plan: AllocationSequence) -> Self {
        let psi_eff = problem.models.iter().map(|m| vec![m.overhead_seconds; plan.len()]).collect();
        EffectivePlan { plan, actions: Vec::new(), psi_eff }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PreinitError {
    #[error("action at step {step}: {detail}")]
    Inconsistent { step: usize, detail: String },
}

fn occupied_slices(catalog: &Catalog, plan: &AllocationSequence, s: usize) -> u8 {
    plan.steps[s].occupied_slices(catalog)
}

/// One forward scan over consecutive pairs. An action is emitted for every
/// instance created at `s + 1` whose slice range is entirely unused at `s`.
pub fn plan_preinit(plan: &AllocationSequence, catalog: &Catalog) -> Vec<PreinitAction> {
    let mut actions = Vec::new();
    for s in 0..plan.len().saturating_sub(1) {
        let (cur, next) = (&plan.steps[s], &plan.steps[s + 1]);
        let busy = occupied_slices(catalog, plan, s);
        for target in reconfiguration_diff(catalog, cur, next).created {
            if busy & target.placement().slice_mask() != 0 {
                continue;
            }
            let covers_tasks =
                next.assignments.iter().filter(|(_, mask)| mask.contains(target.id)).map(|(&t, _)| t).collect();
            actions.push(PreinitAction { fire_second: s, target, covers_tasks });
        }
    }
    actions
}

/// Zeroes an inference task's overhead at `s + 1` when every instance it newly
/// acquires there was pre-created at `s`. Tasks that only shrink keep their
/// overhead, since the model still has to be redeployed.
pub fn apply_preinit(
    problem: &PlanProblem,
    plan: &AllocationSequence,
    actions: &[PreinitAction],
) -> Result<EffectivePlan, PreinitError> {
    let catalog = &problem.catalog;
    let mut created: Vec<Vec<Placement>> = vec![Vec::new(); plan.len()];
    for a in actions {
        let bad = |detail: &str| PreinitError::Inconsistent { step: a.fire_second, detail: detail.to_string() };
        if a.fire_second + 1 >= plan.len() {
            return Err(bad("no following step"));
        }
        let next = &plan.steps[a.fire_second + 1];
        let config = catalog.get(&next.configuration).ok_or_else(|| bad("unknown configuration"))?;
        if config.slot(a.target.id) != Some(&a.target) {
            return Err(bad("target is not a slot of the next configuration"));
        }
        if occupied_slices(catalog, plan, a.fire_second) & a.target.placement().slice_mask() != 0 {
            return Err(bad("target overlaps an occupied slice"));
        }
        created[a.fire_second + 1].push(a.target.placement());
    }
    let mut eff = EffectivePlan::without_preinit(problem, plan.clone());
    eff.actions = actions.to_vec();
    for s in 1..plan.len() {
        if created[s].is_empty() {
            continue;
        }
        for m in 0..problem.models.len() {
            let task = TaskId::inference(m);
            let before = plan.steps[s - 1].footprint(catalog, task);
            let after = plan.steps[s].footprint(catalog, task);
            let acquired: Vec<Placement> = after.placements().filter(|&p| !before.contains(p)).collect();
            if !acquired.is_empty() && acquired.iter().all(|p| created[s].contains(p)) {
                eff.psi_eff[m][s] = 0.0;
            }
        }
    }
    Ok(eff)
}

/// `plan_preinit` followed by `apply_preinit`.
pub fn preinitialize(problem: &PlanProblem, plan: AllocationSequence) -> EffectivePlan {
    let actions = plan_preinit(&plan, &problem.catalog);
    apply_preinit(problem, &plan, &actions).expect("actions come from this plan")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Allocation;
    use crate::planner::evaluate_plan;
    use crate::planner::problem::fixtures::*;

    /// Step 0: model 0 on a 2-GPC slot, model 1 on a 1-GPC slot, four slices
    /// free. Step 1: model 0 on a 4-GPC slot over the free slices, model 1 on
    /// 2 + 1.
    fn transition() -> (PlanProblem, AllocationSequence) {
        let cat = catalog(&[("2+1+4", &[(2, 0), (1, 2), (4, 3)]), ("4+2+1", &[(4, 3), (2, 0), (1, 2)])]);
        let caps = vec![(1, 1.0), (2, 2.0), (4, 4.0)];
        let s = scenario(
            cat,
            vec![
                ModelFixture {
                    floor: 1,
                    caps: caps.clone(),
                    rt: vec![(1, 3)],
                    psi: 0.8,
                    pre: 0.5,
                    post: 1.0,
                    arrivals: vec![10, 10, 10],
                },
                ModelFixture { floor: 1, caps, rt: vec![(1, 3)], psi: 0.8, pre: 0.5, post: 1.0, arrivals: vec![2, 2, 2] },
            ],
        );
        let p = problem(&s);
        let i0 = TaskId::inference(0);
        let i1 = TaskId::inference(1);
        let plan = AllocationSequence {
            window: 0,
            steps: vec![
                Allocation::new(0, "2+1+4").with(i0, &[0]).with(i1, &[1]),
                Allocation::new(1, "4+2+1").with(i0, &[0]).with(i1, &[1, 2]),
                Allocation::new(2, "4+2+1").with(i0, &[0]).with(i1, &[1, 2]),
            ],
        };
        (p, plan)
    }

    #[test]
    fn four_gpc_instance_is_pre_created() {
        let (p, plan) = transition();
        let actions = plan_preinit(&plan, &p.catalog);
        assert_eq!(actions.len(), 1);
        assert_eq!(actions[0].fire_second, 0);
        assert_eq!(actions[0].target.placement(), Placement::new(3, 4));
        assert_eq!(actions[0].covers_tasks, vec![TaskId::inference(0)]);
        let eff = apply_preinit(&p, &plan, &actions).unwrap();
        assert_eq!(eff.psi_eff[0][1], 0.0);
        // model 1 gains 2@0 and 1@2 which were occupied at step 0
        assert_eq!(eff.psi_eff[1][1], 0.8);
        assert_eq!(plan_preinit(&plan, &p.catalog), actions);
    }

    #[test]
    fn identical_steps_give_no_actions() {
        let (p, plan) = transition();
        let same = AllocationSequence { window: 0, steps: vec![plan.steps[1].clone(), plan.steps[2].clone()] };
        assert!(plan_preinit(&same, &p.catalog).is_empty());
    }

    #[test]
    fn partial_pre_creation_keeps_overhead() {
        // model 0 moves from 1@2 to {4@3, 2@0}; 2@0 is busy at step 0
        let cat = catalog(&[("2+1+4", &[(2, 0), (1, 2), (4, 3)])]);
        let caps = vec![(1, 1.0), (2, 2.0), (4, 4.0)];
        let s = scenario(
            cat,
            vec![
                ModelFixture { floor: 1, caps: caps.clone(), rt: vec![], psi: 0.5, pre: 0.5, post: 1.0, arrivals: vec![5; 2] },
                ModelFixture { floor: 1, caps, rt: vec![], psi: 0.5, pre: 0.5, post: 1.0, arrivals: vec![5; 2] },
            ],
        );
        let p = PlanProblem::for_window(&s, 0, &s.trace.clone().into()).unwrap();
        let plan = AllocationSequence {
            window: 0,
            steps: vec![
                Allocation::new(0, "2+1+4").with(TaskId::inference(0), &[1]).with(TaskId::inference(1), &[0]),
                Allocation::new(1, "2+1+4").with(TaskId::inference(0), &[0, 2]).with(TaskId::inference(1), &[1]),
            ],
        };
        let eff = preinitialize(&p, plan);
        assert_eq!(eff.actions.len(), 1);
        assert_eq!(eff.actions[0].target.placement(), Placement::new(3, 4));
        assert_eq!(eff.psi_eff[0][1], 0.5);
        assert_eq!(eff.psi_eff[1][1], 0.5);
    }

    #[test]
    fn inconsistent_action_is_rejected() {
        let (p, plan) = transition();
        let mut actions = plan_preinit(&plan, &p.catalog);
        actions[0].fire_second = 2;
        assert!(apply_preinit(&p, &plan, &actions).is_err());
    }

    #[test]
    fn preinit_never_lowers_the_score() {
        let s = worked_example();
        let p = problem(&s);
        let plan = crate::planner::solve_dp(&p, &Default::default()).unwrap().plan;
        let base = evaluate_plan(&p, &plan, None).unwrap().total;
        let eff = preinitialize(&p, plan.clone());
        let with = evaluate_plan(&p, &plan, Some(&eff.psi_eff)).unwrap().total;
        assert!(with >= base);
    }
}
