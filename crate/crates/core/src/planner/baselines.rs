//! Reference planners: a static split proportional to model size, and a
//! planner that may only change the allocation when retraining starts or ends.

use crate::catalog::{Allocation, SlotId, SlotMask, TaskId};

use super::dp::{decode_rep, fixed_effects, EffectView};
use super::problem::{AllocationSequence, PlanProblem};
use super::PlanError;

const EPS: f64 = 1e-9;

/// Per-model share chosen by the static planner.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticSplit {
    pub configuration: usize,
    /// Slot ids per model.
    pub shares: Vec<Vec<SlotId>>,
    /// GPCs per model.
    pub gpcs: Vec<u32>,
    /// Ideal (fractional) GPCs per model.
    pub ideal: Vec<f64>,
}

/// Picks the configuration and slot-to-model split nearest to the
/// gflops-proportional ideal.
///
/// Each model's share must contain an inference slot at or above its floor and
/// a separate slot it can retrain on within the window. Candidates are ranked by
/// squared distance to the ideal GPC vector, then fewer assigned instances, then
/// catalog order, then the split giving earlier models more GPCs.
pub fn static_split(problem: &PlanProblem) -> Result<StaticSplit, PlanError> {
    let n = problem.models.len();
    let total_gflops: f64 = problem.models.iter().map(|m| m.gflops).sum();
    let g = problem.catalog.gpc_count as f64;
    let ideal: Vec<f64> = problem.models.iter().map(|m| g * m.gflops / total_gflops).collect();
    type Rank = (f64, u32, usize, Vec<i64>);
    let mut best: Option<(Rank, StaticSplit)> = None;
    for (c, config) in problem.catalog.configurations.iter().enumerate() {
        let slots = config.slots.len();
        let mut assign = vec![0usize; slots];
        loop {
            let mut shares: Vec<Vec<SlotId>> = vec![Vec::new(); n];
            for (j, &a) in assign.iter().enumerate() {
                if a > 0 {
                    shares[a - 1].push(SlotId(j as u8));
                }
            }
            if shares.iter().enumerate().all(|(m, sh)| share_roles(problem, c, m, sh).is_some()) {
                let gpcs: Vec<u32> = shares
                    .iter()
                    .map(|sh| sh.iter().map(|id| config.slots[id.0 as usize].size as u32).sum())
                    .collect();
                let dist: f64 = gpcs.iter().zip(&ideal).map(|(&a, &b)| (a as f64 - b).powi(2)).sum();
                let instances: u32 = shares.iter().map(|s| s.len() as u32).sum();
                let rank: Rank = (dist, instances, c, gpcs.iter().map(|&x| -(x as i64)).collect());
                let better = match &best {
                    None => true,
                    Some((r, _)) => {
                        if (rank.0 - r.0).abs() > EPS {
                            rank.0 < r.0
                        } else {
                            (rank.1, rank.2, &rank.3) < (r.1, r.2, &r.3)
                        }
                    }
                };
                if better {
                    best = Some((rank, StaticSplit { configuration: c, shares, gpcs, ideal: ideal.clone() }));
                }
            }
            let mut j = 0;
            while j < slots {
                assign[j] += 1;
                if assign[j] <= n {
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
    best.map(|(_, s)| s).ok_or_else(|| {
        PlanError::infeasible(
            "no-static-split",
            "no configuration gives every model an inference slot above its floor and a retraining slot",
        )
    })
}

/// Inference slots and retraining slot of a share: the largest slot serves,
/// the largest remaining slot that can finish retraining in time retrains, and
/// anything else also serves.
fn share_roles(problem: &PlanProblem, config: usize, m: usize, share: &[SlotId]) -> Option<(Vec<SlotId>, SlotId)> {
    let cfg = &problem.catalog.configurations[config];
    let model = &problem.models[m];
    let size = |id: &SlotId| cfg.slots[id.0 as usize].size;
    let mut order: Vec<SlotId> = share.to_vec();
    // largest first, lower id first on equal size
    order.sort_by(|a, b| size(b).cmp(&size(a)).then(a.cmp(b)));
    let serve = *order.first()?;
    if size(&serve) < model.floor {
        return None;
    }
    let rt = order[1..].iter().copied().find(|id| {
        let r = model.rt_steps[size(id) as usize] as usize;
        r > 0 && r <= problem.steps
    })?;
    let infer = order.iter().copied().filter(|&id| id != rt).collect();
    Some((infer, rt))
}

/// Constant allocation from the static split: every retraining task starts at
/// step 0 on its share's retraining slot and that slot idles after it finishes.
pub fn plan_static_proportional(problem: &PlanProblem) -> Result<AllocationSequence, PlanError> {
    problem.precheck()?;
    let split = static_split(problem)?;
    let config = &problem.catalog.configurations[split.configuration];
    let roles: Vec<(Vec<SlotId>, SlotId)> = split
        .shares
        .iter()
        .enumerate()
        .map(|(m, sh)| share_roles(problem, split.configuration, m, sh).expect("validated share"))
        .collect();
    let steps = (0..problem.steps)
        .map(|s| {
            let mut a = Allocation::new(s, config.id.clone());
            for (m, (infer, rt)) in roles.iter().enumerate() {
                a.assignments.insert(TaskId::inference(m), SlotMask::from_ids(infer.iter().copied()));
                let size = config.slots[rt.0 as usize].size;
                if s < problem.models[m].rt_steps[size as usize] as usize {
                    a.assignments.insert(TaskId::retraining(m), SlotMask::single(*rt));
                }
            }
            a
        })
        .collect();
    Ok(AllocationSequence { window: problem.window, steps })
}

/// Best plan that starts every retraining task at step 0 and only changes the
/// allocation at step 0 and at retraining completions.
///
/// Enumerates every combination of retraining sizes; for each, the window
/// splits into phases at the distinct completion steps and an exact chain
/// search picks one allocation per phase.
pub fn plan_window_boundary(problem: &PlanProblem) -> Result<AllocationSequence, PlanError> {
    problem.precheck()?;
    let n = problem.models.len();
    let t = problem.steps;
    let options: Vec<Vec<u8>> = (0..n).map(|m| problem.models[m].retraining_sizes(t)).collect();
    let mut best: Option<(f64, Vec<(usize, usize, u128)>)> = None;
    let mut choice = vec![0usize; n];
    loop {
        let sizes: Vec<u8> = (0..n).map(|m| options[m][choice[m]]).collect();
        if let Some((value, phases)) = best_phased(problem, &sizes) {
            let better = match &best {
                None => true,
                Some((v, p)) => value > v + EPS || ((value - v).abs() <= EPS && phases < *p),
            };
            if better {
                best = Some((value, phases));
            }
        }
        let mut m = 0;
        while m < n {
            choice[m] += 1;
            if choice[m] < options[m].len() {
                break;
            }
            choice[m] = 0;
            m += 1;
        }
        if m == n {
            break;
        }
    }
    let (_, phases) = best.ok_or_else(|| {
        PlanError::infeasible("no-feasible-plan", "no phased plan satisfies every constraint")
    })?;
    let mut steps = Vec::with_capacity(t);
    for &(start, end, rep) in &phases {
        for s in start..end {
            steps.push(decode_rep(problem, rep, s));
        }
    }
    Ok(AllocationSequence { window: problem.window, steps })
}

/// Optimal phase allocations for fixed retraining sizes: returns the value and
/// `(start, end, representative)` per phase.
fn best_phased(problem: &PlanProblem, sizes: &[u8]) -> Option<(f64, Vec<(usize, usize, u128)>)> {
    let n = problem.models.len();
    let t = problem.steps;
    let finish: Vec<usize> = (0..n).map(|m| problem.models[m].rt_steps[sizes[m] as usize] as usize).collect();
    let mut cuts: Vec<usize> = finish.iter().copied().filter(|&f| f < t).collect();
    cuts.push(0);
    cuts.push(t);
    cuts.sort_unstable();
    cuts.dedup();
    let phases: Vec<(usize, usize)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();

    struct Phase {
        effects: Vec<EffectView>,
        /// Reward of the phase with no overhead.
        full: Vec<f64>,
        /// Per effect and model: reward lost at the first step if that model reconfigures.
        delta: Vec<[f64; 4]>,
    }
    let mut built = Vec::with_capacity(phases.len());
    for &(start, end) in &phases {
        let running: Vec<u8> = (0..n).map(|m| if start < finish[m] { sizes[m] } else { 0 }).collect();
        let effects = fixed_effects(problem, &running);
        if effects.is_empty() {
            return None;
        }
        let mut full = Vec::with_capacity(effects.len());
        let mut delta = Vec::with_capacity(effects.len());
        for e in &effects {
            let mut f = 0.0;
            let mut d = [0.0; 4];
            for s in start..end {
                for (m, model) in problem.models.iter().enumerate() {
                    let acc = model.accuracy(s >= finish[m]);
                    let arr = model.arrivals[s] as f64;
                    let cap = e.cap[m];
                    let r = arr.min(cap) * acc;
                    f += r;
                    if s == start && start > 0 {
                        d[m] = r - arr.min(cap - model.overhead_fraction() * cap) * acc;
                    }
                }
            }
            full.push(f);
            delta.push(d);
        }
        built.push(Phase { effects, full, delta });
    }
    // value[i] = best total of phases up to the current one ending in effect i
    let mut value: Vec<f64> = built[0].full.clone();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(built.len());
    for p in 1..built.len() {
        let prev = &built[p - 1];
        let cur = &built[p];
        let mut next = Vec::with_capacity(cur.effects.len());
        let mut arg = Vec::with_capacity(cur.effects.len());
        for (i, e) in cur.effects.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            let mut best_j = 0;
            for (j, pe) in prev.effects.iter().enumerate() {
                let mut v = value[j] + cur.full[i];
                for m in 0..n {
                    if pe.fp[m] != e.fp[m] {
                        v -= cur.delta[i][m];
                    }
                }
                if v > best + EPS {
                    best = v;
                    best_j = j;
                }
            }
            next.push(best);
            arg.push(best_j);
        }
        back.push(arg);
        value = next;
    }
    let mut best_i = 0;
    for (i, &v) in value.iter().enumerate() {
        if v > value[best_i] + EPS {
            best_i = i;
        }
    }
    let total = value[best_i];
    let mut picks = vec![0usize; built.len()];
    picks[built.len() - 1] = best_i;
    for p in (1..built.len()).rev() {
        picks[p - 1] = back[p - 1][picks[p]];
    }
    let out = phases
        .iter()
        .zip(&picks)
        .zip(&built)
        .map(|((&(a, b), &i), ph)| (a, b, ph.effects[i].rep))
        .collect();
    Some((total, out))
}
