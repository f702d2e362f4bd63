//! Exhaustive depth-first search over raw allocation sequences.
//!
//! Independent of the DP: allocations are enumerated without any dominance
//! rule (inference may hold slots below its floor), steps are visited in
//! lexicographic order of their encoding, and the only pruning is an admissible
//! upper bound on the remaining reward plus a check that retraining can still
//! complete. Because branches are pruned only when they cannot beat the
//! incumbent by more than the tie tolerance, the first optimal sequence found is
//! the lexicographically smallest one.

use rustc_hash::FxHashMap;

use crate::catalog::{Allocation, SlotMask, TaskId};

use super::problem::{AllocationSequence, PlanProblem};
use super::PlanError;

const EPS: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct BruteForceOptions {
    /// Largest admissible `N^T`, where `N` is the number of per-step
    /// allocations passing the structural checks and `T` the step count.
    pub cap: f64,
    /// Abort after visiting this many search nodes.
    pub node_limit: u64,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self { cap: 1e24, node_limit: 2_000_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct BruteForceSolution {
    pub plan: AllocationSequence,
    pub objective: f64,
    pub nodes: u64,
    /// `N^T` for this problem.
    pub space: f64,
}

#[derive(Clone, Debug)]
struct Raw {
    config: usize,
    /// Inference masks by model, then retraining masks by model.
    masks: Vec<u8>,
    fp: Vec<u16>,
    cap: Vec<f64>,
    /// Retraining size per model, 0 when idle.
    rt: Vec<u8>,
}

impl Raw {
    fn key(&self) -> (usize, &[u8]) {
        (self.config, &self.masks)
    }
}

/// Every allocation of one step that names a catalog configuration, shares no
/// slot, gives each retraining task at most one slot of a size it can retrain
/// on, and gives each inference task a slot at or above its floor.
fn step_allocations(problem: &PlanProblem) -> Vec<Raw> {
    let n = problem.models.len();
    let mut out = Vec::new();
    for (c, config) in problem.catalog.configurations.iter().enumerate() {
        let slots = config.slots.len();
        let choices = 2 * n + 1;
        let mut assign = vec![0usize; slots];
        loop {
            let mut masks = vec![0u8; 2 * n];
            for (j, &ch) in assign.iter().enumerate() {
                if ch > 0 {
                    masks[ch - 1] |= 1 << j;
                }
            }
            let ok = (0..n).all(|m| {
                let model = &problem.models[m];
                let deploys = SlotMask(masks[m]).ids().any(|id| config.slots[id.0 as usize].size >= model.floor);
                let rt = SlotMask(masks[n + m]);
                let rt_ok = rt.len() <= 1
                    && rt.ids().all(|id| model.rt_steps[config.slots[id.0 as usize].size as usize] > 0);
                deploys && rt_ok
            });
            if ok {
                let fp = (0..n).map(|m| config.footprint(SlotMask(masks[m])).0).collect();
                let cap = (0..n)
                    .map(|m| {
                        SlotMask(masks[m])
                            .ids()
                            .map(|id| problem.models[m].step_capability[config.slots[id.0 as usize].size as usize])
                            .sum()
                    })
                    .collect();
                let rt = (0..n)
                    .map(|m| SlotMask(masks[n + m]).ids().next().map_or(0, |id| config.slots[id.0 as usize].size))
                    .collect();
                out.push(Raw { config: c, masks, fp, cap, rt });
            }
            let mut j = 0;
            while j < slots {
                assign[j] += 1;
                if assign[j] < choices {
                    break;
                }
                assign[j] = 0;
                j += 1;
            }
            if j == slots {
                break;
            }
        }
    }
    out.sort_by(|a, b| a.key().cmp(&b.key()));
    out
}

/// Retraining progress of one model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Progress {
    Waiting,
    Running { size: u8, left: u32 },
    Finished,
}

struct Search<'a> {
    problem: &'a PlanProblem,
    raws: Vec<Raw>,
    /// Distinct retraining-size vectors the step allocations can realize.
    rt_vectors: Vec<Vec<u8>>,
    bound_memo: FxHashMap<(usize, Vec<Progress>), f64>,
    step_bound_memo: FxHashMap<(usize, Vec<Progress>), f64>,
    finish_memo: FxHashMap<(usize, Vec<Progress>), bool>,
    best: f64,
    best_seq: Option<Vec<usize>>,
    path: Vec<usize>,
    nodes: u64,
    node_limit: u64,
}

impl<'a> Search<'a> {
    fn compatible(&self, progress: &[Progress], rt: &[u8], s: usize) -> bool {
        progress.iter().zip(rt).enumerate().all(|(m, (p, &k))| match p {
            Progress::Waiting => k == 0 || self.fits(m, k, s),
            Progress::Running { size, .. } => k == *size,
            Progress::Finished => k == 0,
        })
    }

    /// Whether starting retraining of `m` on `k` GPCs at step `s` ends in the window.
    fn fits(&self, m: usize, k: u8, s: usize) -> bool {
        let r = self.problem.models[m].rt_steps[k as usize] as usize;
        r > 0 && s + r <= self.problem.steps
    }

    fn advance(&self, progress: &[Progress], rt: &[u8]) -> Vec<Progress> {
        progress
            .iter()
            .zip(rt)
            .enumerate()
            .map(|(m, (p, &k))| {
                let left = match *p {
                    Progress::Waiting if k == 0 => return Progress::Waiting,
                    Progress::Waiting => self.problem.models[m].rt_steps[k as usize],
                    Progress::Running { left, .. } => left,
                    Progress::Finished => return Progress::Finished,
                };
                if left <= 1 {
                    Progress::Finished
                } else {
                    Progress::Running { size: k, left: left - 1 }
                }
            })
            .collect()
    }

    fn can_finish(&mut self, s: usize, progress: &[Progress]) -> bool {
        if s == self.problem.steps {
            return progress.iter().all(|p| *p == Progress::Finished);
        }
        let key = (s, progress.to_vec());
        if let Some(&v) = self.finish_memo.get(&key) {
            return v;
        }
        let mut ok = false;
        for i in 0..self.rt_vectors.len() {
            let rt = self.rt_vectors[i].clone();
            let fits = progress.iter().zip(&rt).enumerate().all(|(m, (p, &k))| match p {
                Progress::Waiting => k == 0 || self.fits(m, k, s),
                Progress::Running { size, .. } => k == *size,
                Progress::Finished => k == 0,
            });
            if fits {
                let next = self.advance(progress, &rt);
                if self.can_finish(s + 1, &next) {
                    ok = true;
                    break;
                }
            }
        }
        self.finish_memo.insert(key, ok);
        ok
    }

    /// Best single-step reward ignoring overhead, with each model's accuracy at
    /// its most optimistic value for the given progress.
    fn step_bound(&mut self, s: usize, progress: &[Progress]) -> f64 {
        let key = (s, progress.to_vec());
        if let Some(&v) = self.step_bound_memo.get(&key) {
            return v;
        }
        let mut best = f64::NEG_INFINITY;
        for r in &self.raws {
            let ok = progress.iter().zip(&r.rt).all(|(p, &k)| match p {
                Progress::Waiting => true,
                Progress::Running { size, .. } => k == *size,
                Progress::Finished => k == 0,
            });
            if !ok {
                continue;
            }
            let v: f64 = self
                .problem
                .models
                .iter()
                .enumerate()
                .map(|(m, model)| {
                    let acc = match progress[m] {
                        Progress::Waiting => model.pre.max(model.post),
                        Progress::Running { .. } => model.pre,
                        Progress::Finished => model.post,
                    };
                    (model.arrivals[s] as f64).min(r.cap[m]) * acc
                })
                .sum();
            best = best.max(v);
        }
        self.step_bound_memo.insert(key, best);
        best
    }

    /// Upper bound on the reward of steps `s..T` from `progress`.
    fn bound(&mut self, s: usize, progress: &[Progress]) -> f64 {
        if s >= self.problem.steps {
            return 0.0;
        }
        let key = (s, progress.to_vec());
        if let Some(&v) = self.bound_memo.get(&key) {
            return v;
        }
        let mut total = 0.0;
        let mut p = progress.to_vec();
        for t in s..self.problem.steps {
            total += self.step_bound(t, &p);
            p = p
                .iter()
                .map(|q| match *q {
                    Progress::Running { left, .. } if left <= 1 => Progress::Finished,
                    Progress::Running { size, left } => Progress::Running { size, left: left - 1 },
                    other => other,
                })
                .collect();
        }
        self.bound_memo.insert(key, total);
        total
    }

    fn dfs(&mut self, s: usize, progress: Vec<Progress>, prev: Option<usize>, acc: f64) -> Result<(), PlanError> {
        if s == self.problem.steps {
            if acc > self.best + EPS || self.best_seq.is_none() {
                self.best = acc;
                self.best_seq = Some(self.path.clone());
            }
            return Ok(());
        }
        for i in 0..self.raws.len() {
            self.nodes += 1;
            if self.nodes > self.node_limit {
                return Err(PlanError::CapExceeded { space: self.nodes as f64, cap: self.node_limit as f64 });
            }
            if !self.compatible(&progress, &self.raws[i].rt, s) {
                continue;
            }
            let next = self.advance(&progress, &self.raws[i].rt);
            if !self.can_finish(s + 1, &next) {
                continue;
            }
            let r = &self.raws[i];
            let mut gain = 0.0;
            for (m, model) in self.problem.models.iter().enumerate() {
                let completed = progress[m] == Progress::Finished;
                let cap = r.cap[m];
                let changed = prev.is_some_and(|p| self.raws[p].fp[m] != r.fp[m]);
                let loss = if changed { model.overhead_fraction() * cap } else { 0.0 };
                gain += (model.arrivals[s] as f64).min(cap - loss) * model.accuracy(completed);
            }
            let reach = acc + gain;
            if self.best_seq.is_some() && reach + self.bound(s + 1, &next) <= self.best + EPS {
                continue;
            }
            self.path.push(i);
            self.dfs(s + 1, next, Some(i), reach)?;
            self.path.pop();
        }
        Ok(())
    }
}

/// Exhaustive optimum. Errors when `N^T` exceeds the configured cap.
pub fn solve_bruteforce(problem: &PlanProblem, opts: &BruteForceOptions) -> Result<BruteForceSolution, PlanError> {
    problem.precheck()?;
    let raws = step_allocations(problem);
    let space = (raws.len() as f64).powi(problem.steps as i32);
    if space > opts.cap {
        return Err(PlanError::CapExceeded { space, cap: opts.cap });
    }
    let mut rt_vectors: Vec<Vec<u8>> = raws.iter().map(|r| r.rt.clone()).collect();
    rt_vectors.sort();
    rt_vectors.dedup();
    let n = problem.models.len();
    let mut search = Search {
        problem,
        raws,
        rt_vectors,
        bound_memo: FxHashMap::default(),
        step_bound_memo: FxHashMap::default(),
        finish_memo: FxHashMap::default(),
        best: f64::NEG_INFINITY,
        best_seq: None,
        path: Vec::new(),
        nodes: 0,
        node_limit: opts.node_limit,
    };
    search.dfs(0, vec![Progress::Waiting; n], None, 0.0)?;
    let Some(seq) = search.best_seq.take() else {
        return Err(PlanError::infeasible("no-feasible-plan", "no allocation sequence satisfies every constraint"));
    };
    let steps = seq
        .iter()
        .enumerate()
        .map(|(s, &i)| {
            let r = &search.raws[i];
            let config = &problem.catalog.configurations[r.config];
            let mut a = Allocation::new(s, config.id.clone());
            for (t, &mask) in r.masks.iter().enumerate() {
                if mask != 0 {
                    let task = if t < n { TaskId::inference(t) } else { TaskId::retraining(t - n) };
                    a.assignments.insert(task, SlotMask(mask));
                }
            }
            a
        })
        .collect();
    Ok(BruteForceSolution {
        plan: AllocationSequence { window: problem.window, steps },
        objective: search.best,
        nodes: search.nodes,
        space,
    })
}

#[cfg(test)]
mod tests {
    use super::super::evaluate::evaluate_plan;
    use super::super::feasibility::check_feasible;
    use super::super::problem::fixtures::*;
    use super::*;

    #[test]
    fn worked_example_optimum() {
        let p = problem(&worked_example());
        let sol = solve_bruteforce(&p, &BruteForceOptions::default()).unwrap();
        assert!((sol.objective - 12.5).abs() < 1e-12);
        assert!((evaluate_plan(&p, &sol.plan, None).unwrap().total - 12.5).abs() < 1e-12);
        // retrain on the 4-GPC slot first, then serve on it
        assert_eq!(sol.plan.steps[0].slots_of(TaskId::retraining(0)), SlotMask(0b01));
        assert_eq!(sol.plan.steps[1].slots_of(TaskId::inference(0)), SlotMask(0b01));
    }

    #[test]
    fn retraining_spanning_whole_window() {
        let s = scenario(
            catalog(&[("4+3", &[(4, 0), (3, 4)]), ("2+2+3", &[(2, 0), (2, 2), (3, 4)])]),
            vec![ModelFixture {
                floor: 2,
                caps: vec![(2, 2.0), (3, 3.0), (4, 5.0)],
                rt: vec![(3, 2)],
                psi: 0.0,
                pre: 1.0,
                post: 1.0,
                arrivals: vec![10, 10],
            }],
        );
        let p = problem(&s);
        let sol = solve_bruteforce(&p, &BruteForceOptions::default()).unwrap();
        // best inference placement beside a 3-GPC retraining slot is the 4-slot
        assert!((sol.objective - 10.0).abs() < 1e-12);
        assert!(check_feasible(&p, &sol.plan).is_empty());
    }

    #[test]
    fn zero_arrivals_score_zero() {
        let mut s = worked_example();
        s.trace.counts[0] = vec![0, 0, 0];
        let p = problem(&s);
        let sol = solve_bruteforce(&p, &BruteForceOptions::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(check_feasible(&p, &sol.plan).is_empty());
    }

    #[test]
    fn cap_is_enforced() {
        let p = problem(&worked_example());
        let err = solve_bruteforce(&p, &BruteForceOptions { cap: 10.0, ..Default::default() }).unwrap_err();
        assert_eq!(err.code(), "search-cap-exceeded");
    }
}
