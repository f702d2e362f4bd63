//! Constraint checks on a planned allocation sequence.

use std::fmt;

use serde::Serialize;

use crate::catalog::{validate_allocation, AllocationViolationKind, TaskId};

use super::problem::{AllocationSequence, PlanProblem};

/// Constraint family a violation belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    SingleConfiguration,
    NoSharing,
    NoInterruption,
    WindowCompletion,
    Deployment,
    Sequence,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::SingleConfiguration => "single-configuration",
            Family::NoSharing => "no-sharing",
            Family::NoInterruption => "no-interruption",
            Family::WindowCompletion => "window-completion",
            Family::Deployment => "deployment",
            Family::Sequence => "sequence",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub family: Family,
    pub kind: &'static str,
    pub step: Option<usize>,
    pub task: Option<TaskId>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.kind, self.family)?;
        if let Some(s) = self.step {
            write!(f, " step {s}")?;
        }
        if let Some(t) = self.task {
            write!(f, " task {t}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Retraining run of one model, as read off a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetrainingRun {
    pub start: usize,
    pub size: u8,
    /// First step at which the retrained model serves.
    pub finish: usize,
}

/// Size of the (lowest) slot the retraining task of `model` holds at `step`.
fn retraining_size(problem: &PlanProblem, seq: &AllocationSequence, model: usize, step: usize) -> Option<u8> {
    let a = &seq.steps[step];
    let config = problem.catalog.get(&a.configuration)?;
    let id = a.slots_of(TaskId::retraining(model)).ids().next()?;
    config.slot(id).map(|s| s.size)
}

/// Locates a model's retraining run: first held step, its size, and the step
/// the run would end at. Does not check the run for validity.
pub fn retraining_run(problem: &PlanProblem, seq: &AllocationSequence, model: usize) -> Option<RetrainingRun> {
    let start = (0..seq.steps.len()).find(|&s| retraining_size(problem, seq, model, s).is_some())?;
    let size = retraining_size(problem, seq, model, start)?;
    let rt = problem.models[model].rt_steps.get(size as usize).copied().unwrap_or(0) as usize;
    Some(RetrainingRun { start, size, finish: start + rt })
}

/// Every constraint breach in `seq`; empty iff the sequence is feasible.
pub fn check_feasible(problem: &PlanProblem, seq: &AllocationSequence) -> Vec<Violation> {
    let mut out = Vec::new();
    let t = problem.steps;
    if seq.steps.len() != t {
        out.push(Violation {
            family: Family::Sequence,
            kind: "sequence-length",
            step: None,
            task: None,
            detail: format!("{} steps, expected {t}", seq.steps.len()),
        });
    }
    for (s, a) in seq.steps.iter().enumerate() {
        if a.second != s {
            out.push(Violation {
                family: Family::Sequence,
                kind: "sequence-order",
                step: Some(s),
                task: None,
                detail: format!("allocation labelled step {}", a.second),
            });
        }
        for v in validate_allocation(&problem.catalog, a) {
            let family = match v.kind {
                AllocationViolationKind::UnknownConfiguration => Family::SingleConfiguration,
                AllocationViolationKind::UnknownSlot | AllocationViolationKind::InstanceShared => Family::NoSharing,
                AllocationViolationKind::RetrainingMultiInstance => Family::NoInterruption,
            };
            out.push(Violation { family, kind: v.kind.code(), step: Some(s), task: v.task, detail: v.detail });
        }
        if let Some(m) = a.assignments.keys().map(|t| t.model).find(|&m| m >= problem.models.len()) {
            out.push(Violation {
                family: Family::Sequence,
                kind: "unknown-task",
                step: Some(s),
                task: None,
                detail: format!("model index {m} out of range"),
            });
        }
        let Some(config) = problem.catalog.get(&a.configuration) else { continue };
        for (m, model) in problem.models.iter().enumerate() {
            let task = TaskId::inference(m);
            let sizes: Vec<u8> =
                a.slots_of(task).ids().filter_map(|id| config.slot(id)).map(|s| s.size).collect();
            if !sizes.iter().any(|&k| k >= model.floor) {
                out.push(Violation {
                    family: Family::Deployment,
                    kind: "deployment-floor",
                    step: Some(s),
                    task: Some(task),
                    detail: format!("no held instance has at least {} GPCs (holds {:?})", model.floor, sizes),
                });
            }
            let total: u32 = sizes.iter().map(|&k| k as u32).sum();
            if total < model.floor as u32 {
                out.push(Violation {
                    family: Family::Deployment,
                    kind: "deployment-sum",
                    step: Some(s),
                    task: Some(task),
                    detail: format!("holds {total} GPCs in total, floor is {}", model.floor),
                });
            }
        }
    }
    let steps = seq.steps.len();
    for m in 0..problem.models.len() {
        let task = TaskId::retraining(m);
        let Some(run) = retraining_run(problem, seq, m) else {
            out.push(Violation {
                family: Family::WindowCompletion,
                kind: "retraining-not-launched",
                step: None,
                task: Some(task),
                detail: "retraining will be launched in every window but never holds an instance".into(),
            });
            continue;
        };
        let rt = run.finish - run.start;
        if rt == 0 {
            out.push(Violation {
                family: Family::NoInterruption,
                kind: "retraining-size-unsupported",
                step: Some(run.start),
                task: Some(task),
                detail: format!("no retraining time for a {}-GPC instance", run.size),
            });
            continue;
        }
        if run.finish > t {
            out.push(Violation {
                family: Family::WindowCompletion,
                kind: "retraining-overrun",
                step: Some(run.start),
                task: Some(task),
                detail: format!("starts at step {} and needs {rt} steps, window has {t}", run.start),
            });
        }
        let mut contiguous = true;
        for s in run.start..steps {
            let held = retraining_size(problem, seq, m, s);
            if s < run.finish {
                match held {
                    Some(k) if k == run.size => {}
                    Some(k) => {
                        contiguous = false;
                        out.push(Violation {
                            family: Family::NoInterruption,
                            kind: "retraining-interrupted",
                            step: Some(s),
                            task: Some(task),
                            detail: format!("runs on {} GPCs but step {s} holds {k}", run.size),
                        });
                    }
                    None => {
                        contiguous = false;
                        out.push(Violation {
                            family: Family::NoInterruption,
                            kind: "retraining-interrupted",
                            step: Some(s),
                            task: Some(task),
                            detail: format!("paused at step {s} before finishing at {}", run.finish),
                        });
                    }
                }
            } else if held.is_some() {
                let extends = contiguous && retraining_size(problem, seq, m, s - 1).is_some();
                out.push(Violation {
                    family: Family::NoInterruption,
                    kind: if extends { "retraining-duration" } else { "retraining-restarted" },
                    step: Some(s),
                    task: Some(task),
                    detail: format!("holds an instance after finishing at step {}", run.finish),
                });
                contiguous = extends;
            } else {
                contiguous = false;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::problem::fixtures::*;
    use super::*;
    use crate::catalog::{Allocation, Catalog};

    fn seq(steps: Vec<Allocation>) -> AllocationSequence {
        AllocationSequence { window: 0, steps }
    }

    #[test]
    fn worked_example_plan_is_feasible() {
        let p = problem(&worked_example());
        let plan = seq(vec![
            Allocation::new(0, "4+3").with(TaskId::retraining(0), &[0]).with(TaskId::inference(0), &[1]),
            Allocation::new(1, "4+3").with(TaskId::inference(0), &[0]),
            Allocation::new(2, "4+3").with(TaskId::inference(0), &[0]),
        ]);
        assert!(check_feasible(&p, &plan).is_empty(), "{:?}", check_feasible(&p, &plan));
        assert_eq!(retraining_run(&p, &plan, 0), Some(RetrainingRun { start: 0, size: 4, finish: 1 }));
    }

    #[test]
    fn never_launched() {
        let p = problem(&worked_example());
        let plan = seq((0..3).map(|s| Allocation::new(s, "4+3").with(TaskId::inference(0), &[0])).collect());
        let v = check_feasible(&p, &plan);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, "retraining-not-launched");
        assert_eq!(v[0].family, Family::WindowCompletion);
    }

    #[test]
    fn deployment_floor_and_sum() {
        let mut s = worked_example();
        s.models[0].profile.min_deploy_gpcs = 4;
        s.models[0].profile.capability.remove(&3);
        s.models[0].retraining.rt_table.remove(&3);
        let p = problem(&s);
        let plan = seq(vec![
            Allocation::new(0, "4+3").with(TaskId::retraining(0), &[0]).with(TaskId::inference(0), &[1]),
            Allocation::new(1, "4+3").with(TaskId::inference(0), &[0]),
            Allocation::new(2, "4+3").with(TaskId::inference(0), &[0]),
        ]);
        let kinds: Vec<_> = check_feasible(&p, &plan).iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec!["deployment-floor", "deployment-sum"]);
    }

    #[test]
    fn floor_met_by_sum_only() {
        // two 1-GPC slots sum to the floor of 2 but neither fits the model
        let cat = catalog(&[("1+1+2", &[(1, 0), (1, 1), (2, 2)])]);
        let s = scenario(
            cat,
            vec![ModelFixture {
                floor: 2,
                caps: vec![(2, 4.0)],
                rt: vec![(2, 1)],
                psi: 0.0,
                pre: 0.5,
                post: 1.0,
                arrivals: vec![1, 1],
            }],
        );
        let p = problem(&s);
        let plan = seq(vec![
            Allocation::new(0, "1+1+2").with(TaskId::inference(0), &[0, 1]).with(TaskId::retraining(0), &[2]),
            Allocation::new(1, "1+1+2").with(TaskId::inference(0), &[2]),
        ]);
        let kinds: Vec<_> = check_feasible(&p, &plan).iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec!["deployment-floor"]);
    }

    #[test]
    fn size_change_mid_run_is_interruption() {
        let cat = Catalog::default_a100();
        let s = scenario(
            cat,
            vec![ModelFixture {
                floor: 1,
                caps: vec![(1, 1.0), (2, 2.0), (3, 3.0), (4, 4.0), (7, 7.0)],
                rt: vec![(3, 3), (4, 3)],
                psi: 0.0,
                pre: 0.5,
                post: 1.0,
                arrivals: vec![1; 6],
            }],
        );
        let p = problem(&s);
        let infer = |s: usize, c: &str, i: &[u8], r: Option<u8>| {
            let a = Allocation::new(s, c).with(TaskId::inference(0), i);
            match r {
                Some(r) => a.with(TaskId::retraining(0), &[r]),
                None => a,
            }
        };
        let plan = seq(vec![
            infer(0, "4+3", &[0], None),
            infer(1, "4+3", &[0], None),
            infer(2, "4+3", &[0], Some(1)),
            infer(3, "4+3", &[1], Some(0)),
            infer(4, "4+3", &[0], Some(1)),
            infer(5, "4+3", &[0], None),
        ]);
        let v = check_feasible(&p, &plan);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].kind, "retraining-interrupted");
        assert_eq!(v[0].step, Some(3));
    }

    #[test]
    fn sharing_overrun_and_restart() {
        let p = problem(&worked_example());
        let shared = seq(vec![
            Allocation::new(0, "4+3").with(TaskId::retraining(0), &[0]).with(TaskId::inference(0), &[0]),
            Allocation::new(1, "4+3").with(TaskId::inference(0), &[0]),
            Allocation::new(2, "4+3").with(TaskId::inference(0), &[0]),
        ]);
        assert!(check_feasible(&p, &shared).iter().any(|v| v.kind == "instance-shared"));

        let overrun = seq(vec![
            Allocation::new(0, "4+3").with(TaskId::inference(0), &[0]),
            Allocation::new(1, "4+3").with(TaskId::inference(0), &[0]),
            Allocation::new(2, "4+3").with(TaskId::inference(0), &[0]).with(TaskId::retraining(0), &[1]),
        ]);
        assert_eq!(check_feasible(&p, &overrun)[0].kind, "retraining-overrun");

        let restart = seq(vec![
            Allocation::new(0, "4+3").with(TaskId::retraining(0), &[0]).with(TaskId::inference(0), &[1]),
            Allocation::new(1, "4+3").with(TaskId::inference(0), &[0]),
            Allocation::new(2, "4+3").with(TaskId::inference(0), &[1]).with(TaskId::retraining(0), &[0]),
        ]);
        assert_eq!(check_feasible(&p, &restart)[0].kind, "retraining-restarted");

        let short = seq(restart.steps[..2].to_vec());
        assert_eq!(check_feasible(&p, &short)[0].kind, "sequence-length");
    }
}
