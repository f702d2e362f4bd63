//! Exact backward dynamic program over steps.
//!
//! State at step `s` is each model's retraining status plus the inference
//! footprints chosen at `s-1`. Raw allocations are collapsed into *effects*,
//! the (inference footprint, retraining size) tuple per model, since two raw
//! allocations with the same effect score and transition identically. Inference
//! tasks never receive slots below their deployment floor: such a slot adds no
//! capability, and removing it from every step can only remove reconfigurations.
//!
//! The value of a state splits by which models keep their previous footprint.
//! For a subset `K` of models, `best_K[f]` is the best continuation among
//! effects whose footprints on `K` equal `f`, counting the overhead-free reward
//! for models in `K`. Then `V_s(status, P) = max(a, max_K best_K[P_K])` where
//! `a` is the best continuation with every model charged. Only entries larger
//! than `a` are stored.

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::catalog::{Allocation, SlotMask, TaskId};

use super::problem::{AllocationSequence, PlanProblem};
use super::PlanError;

pub const MAX_MODELS: usize = 4;
const NONE: u32 = u32::MAX;
const TIE_EPS: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct DpOptions {
    /// Upper bound on stored value entries across all steps.
    pub budget: usize,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self { budget: 150_000_000, workers: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DpStats {
    pub statuses: usize,
    pub entries: usize,
    pub menus: usize,
    pub largest_menu: usize,
}

#[derive(Clone, Debug)]
pub struct DpSolution {
    pub plan: AllocationSequence,
    pub objective: f64,
    pub stats: DpStats,
}

/// Retraining status per model packed 16 bits each: 0 not started, 1 done,
/// otherwise `size << 12 | remaining`.
type Status = u64;

const NOT_STARTED: u16 = 0;
const DONE: u16 = 1;

fn field(st: Status, m: usize) -> u16 {
    (st >> (16 * m)) as u16
}

fn with_field(st: Status, m: usize, v: u16) -> Status {
    (st & !(0xffffu64 << (16 * m))) | (v as u64) << (16 * m)
}

fn running(size: u8, rem: u32) -> u16 {
    (size as u16) << 12 | rem as u16
}

/// What a model's retraining task may hold this step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum RtOpt {
    Nothing,
    /// Must hold exactly one slot of this size.
    Fixed(u8),
    /// May hold nothing or one slot with a size in the bitmask.
    Start(u16),
}

#[derive(Clone, Debug)]
struct Effect {
    fp: [u16; MAX_MODELS],
    cap: [f64; MAX_MODELS],
    rt: [u8; MAX_MODELS],
    rep: u128,
}

struct Menu {
    effects: Vec<Effect>,
    /// Per subset `K` (index `K-1`): footprint key → dense group id.
    groups: Vec<FxHashMap<u64, u32>>,
    /// `group_of[e * nk + K-1]`.
    group_of: Vec<u32>,
    group_counts: Vec<u32>,
}

fn subset_key(fp: &[u16; MAX_MODELS], k: usize, n: usize) -> u64 {
    (0..n).filter(|m| k >> m & 1 == 1).fold(0u64, |acc, m| acc | (fp[m] as u64) << (16 * m))
}

/// Lexicographic key of a raw allocation: configuration index, then slot masks
/// of inference tasks by model, then retraining tasks by model.
pub(crate) fn lex_key(config: usize, masks: &[u8]) -> u128 {
    let mut key = (config as u128) << 64;
    for (t, &m) in masks.iter().enumerate() {
        key |= (m as u128) << (8 * (7 - t));
    }
    key
}

pub(crate) fn decode_rep(problem: &PlanProblem, rep: u128, step: usize) -> Allocation {
    let n = problem.models.len();
    let config = &problem.catalog.configurations[(rep >> 64) as usize];
    let mut a = Allocation::new(step, config.id.clone());
    for t in 0..2 * n {
        let mask = (rep >> (8 * (7 - t))) as u8;
        if mask != 0 {
            let task = if t < n { TaskId::inference(t) } else { TaskId::retraining(t - n) };
            a.assignments.insert(task, SlotMask(mask));
        }
    }
    a
}

fn build_menu(problem: &PlanProblem, opts: &[RtOpt]) -> Menu {
    let n = problem.models.len();
    let mut effects: Vec<Effect> = Vec::new();
    let mut index: FxHashMap<u128, usize> = FxHashMap::default();
    for (c, config) in problem.catalog.configurations.iter().enumerate() {
        let sizes: Vec<u8> = config.slots.iter().map(|s| s.size).collect();
        let mut masks = [0u8; 2 * MAX_MODELS];
        let mut emit = |masks: &[u8; 2 * MAX_MODELS]| {
            for m in 0..n {
                if masks[m] == 0 {
                    return;
                }
                if matches!(opts[m], RtOpt::Fixed(_)) && masks[n + m] == 0 {
                    return;
                }
            }
            let mut fp = [0u16; MAX_MODELS];
            let mut cap = [0.0; MAX_MODELS];
            let mut rt = [0u8; MAX_MODELS];
            for m in 0..n {
                let mask = SlotMask(masks[m]);
                fp[m] = config.footprint(mask).0;
                cap[m] = mask.ids().map(|id| problem.models[m].step_capability[sizes[id.0 as usize] as usize]).sum();
                rt[m] = SlotMask(masks[n + m]).ids().next().map_or(0, |id| sizes[id.0 as usize]);
            }
            let rep = lex_key(c, &masks[..2 * n]);
            let key = (0..n).fold(0u128, |k, m| k | (fp[m] as u128) << (16 * m) | (rt[m] as u128) << (64 + 4 * m));
            match index.get(&key) {
                Some(&i) => {
                    if rep < effects[i].rep {
                        effects[i].rep = rep;
                    }
                }
                None => {
                    index.insert(key, effects.len());
                    effects.push(Effect { fp, cap, rt, rep });
                }
            }
        };
        fn rec(
            j: usize,
            sizes: &[u8],
            problem: &PlanProblem,
            opts: &[RtOpt],
            masks: &mut [u8; 2 * MAX_MODELS],
            emit: &mut dyn FnMut(&[u8; 2 * MAX_MODELS]),
        ) {
            let n = opts.len();
            if j == sizes.len() {
                emit(masks);
                return;
            }
            let k = sizes[j];
            rec(j + 1, sizes, problem, opts, masks, emit);
            for m in 0..n {
                if k >= problem.models[m].floor {
                    masks[m] |= 1 << j;
                    rec(j + 1, sizes, problem, opts, masks, emit);
                    masks[m] &= !(1 << j);
                }
            }
            for m in 0..n {
                let allowed = match opts[m] {
                    RtOpt::Nothing => false,
                    RtOpt::Fixed(size) => size == k,
                    RtOpt::Start(bits) => bits >> k & 1 == 1,
                };
                if allowed && masks[n + m] == 0 {
                    masks[n + m] = 1 << j;
                    rec(j + 1, sizes, problem, opts, masks, emit);
                    masks[n + m] = 0;
                }
            }
        }
        rec(0, &sizes, problem, opts, &mut masks, &mut emit);
    }
    effects.sort_by_key(|e| e.rep);
    let nk = (1usize << n) - 1;
    let mut groups = vec![FxHashMap::default(); nk];
    let mut group_of = Vec::with_capacity(effects.len() * nk);
    for e in &effects {
        for k in 1..=nk {
            let g = &mut groups[k - 1];
            let next = g.len() as u32;
            group_of.push(*g.entry(subset_key(&e.fp, k, n)).or_insert(next));
        }
    }
    let group_counts = groups.iter().map(|g| g.len() as u32).collect();
    Menu { effects, groups, group_of, group_counts }
}

struct StateValue {
    menu: u32,
    a: f64,
    /// Offsets into `gids`/`vals` per subset, length `nk + 1`.
    offsets: Vec<u32>,
    gids: Vec<u32>,
    vals: Vec<f64>,
}

impl StateValue {
    fn value(&self, row: &[u32]) -> f64 {
        let mut v = self.a;
        for (k, &gid) in row.iter().enumerate() {
            if gid == NONE {
                continue;
            }
            let lo = self.offsets[k] as usize;
            let hi = self.offsets[k + 1] as usize;
            if let Ok(i) = self.gids[lo..hi].binary_search(&gid) {
                v = v.max(self.vals[lo + i]);
            }
        }
        v
    }

    fn entries(&self) -> usize {
        self.gids.len() + 1
    }
}

struct Solver<'a> {
    problem: &'a PlanProblem,
    n: usize,
    nk: usize,
    steps: usize,
    menus: Vec<Menu>,
    menu_index: FxHashMap<Vec<RtOpt>, u32>,
    /// (from menu, to menu) → per effect of `from`, group ids in `to`.
    cross: FxHashMap<(u32, u32), Vec<u32>>,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a PlanProblem) -> Self {
        let n = problem.models.len();
        Self {
            problem,
            n,
            nk: (1 << n) - 1,
            steps: problem.steps,
            menus: Vec::new(),
            menu_index: FxHashMap::default(),
            cross: FxHashMap::default(),
        }
    }

    fn rt(&self, m: usize, k: u8) -> u32 {
        self.problem.models[m].rt_steps[k as usize]
    }

    /// Sizes a model may still start retraining on at step `s`.
    fn start_bits(&self, m: usize, s: usize) -> u16 {
        (1..9u8).filter(|&k| self.rt(m, k) > 0 && s + self.rt(m, k) as usize <= self.steps).fold(0, |b, k| b | 1 << k)
    }

    /// Every retraining status reachable at step `s` from which the window can still complete.
    fn statuses(&self, s: usize) -> Vec<Status> {
        let per_model: Vec<Vec<u16>> = (0..self.n)
            .map(|m| {
                let mut v = Vec::new();
                if self.start_bits(m, s) != 0 {
                    v.push(NOT_STARTED);
                }
                if (1..9u8).any(|k| self.rt(m, k) > 0 && self.rt(m, k) as usize <= s) {
                    v.push(DONE);
                }
                for k in 1..9u8 {
                    let r = self.rt(m, k) as usize;
                    if r == 0 || r > self.steps {
                        continue;
                    }
                    for rem in 1..r {
                        if rem + s >= r && s + rem <= self.steps {
                            v.push(running(k, rem as u32));
                        }
                    }
                }
                v
            })
            .collect();
        let mut out = vec![0u64];
        for (m, opts) in per_model.iter().enumerate() {
            out = out.iter().flat_map(|&st| opts.iter().map(move |&v| with_field(st, m, v))).collect();
        }
        out.sort_unstable();
        out
    }

    fn opts_for(&self, st: Status, s: usize) -> Vec<RtOpt> {
        (0..self.n)
            .map(|m| match field(st, m) {
                NOT_STARTED => RtOpt::Start(self.start_bits(m, s)),
                DONE => RtOpt::Nothing,
                v => RtOpt::Fixed((v >> 12) as u8),
            })
            .collect()
    }

    fn menu_for(&mut self, st: Status, s: usize) -> u32 {
        let opts = self.opts_for(st, s);
        if let Some(&id) = self.menu_index.get(&opts) {
            return id;
        }
        let menu = build_menu(self.problem, &opts);
        let id = self.menus.len() as u32;
        self.menus.push(menu);
        self.menu_index.insert(opts, id);
        id
    }

    /// Menu id for `st` at `s` without building; must already exist.
    fn menu_id(&self, st: Status, s: usize) -> u32 {
        self.menu_index[&self.opts_for(st, s)]
    }

    fn next_status(&self, st: Status, e: &Effect) -> Status {
        let mut next = st;
        for m in 0..self.n {
            let v = field(st, m);
            let nv = match v {
                NOT_STARTED => {
                    if e.rt[m] == 0 {
                        NOT_STARTED
                    } else {
                        let r = self.rt(m, e.rt[m]);
                        if r == 1 {
                            DONE
                        } else {
                            running(e.rt[m], r - 1)
                        }
                    }
                }
                DONE => DONE,
                v => {
                    let rem = (v & 0xfff) as u32;
                    if rem == 1 {
                        DONE
                    } else {
                        running((v >> 12) as u8, rem - 1)
                    }
                }
            };
            next = with_field(next, m, nv);
        }
        next
    }

    fn all_done(&self, st: Status) -> bool {
        (0..self.n).all(|m| field(st, m) == DONE)
    }

    fn ensure_cross(&mut self, from: u32, to: u32) {
        if self.cross.contains_key(&(from, to)) {
            return;
        }
        let a = &self.menus[from as usize];
        let b = &self.menus[to as usize];
        let mut row = Vec::with_capacity(a.effects.len() * self.nk);
        for e in &a.effects {
            for k in 1..=self.nk {
                row.push(b.groups[k - 1].get(&subset_key(&e.fp, k, self.n)).copied().unwrap_or(NONE));
            }
        }
        self.cross.insert((from, to), row);
    }

    /// Per-model (charged, uncharged) rewards of an effect at step `s`.
    fn rewards(&self, st: Status, e: &Effect, s: usize) -> ([f64; MAX_MODELS], [f64; MAX_MODELS]) {
        let mut pen = [0.0; MAX_MODELS];
        let mut full = [0.0; MAX_MODELS];
        for (m, model) in self.problem.models.iter().enumerate() {
            let acc = model.accuracy(field(st, m) == DONE);
            let arr = model.arrivals[s] as f64;
            let cap = e.cap[m];
            full[m] = arr.min(cap) * acc;
            pen[m] = if s == 0 { full[m] } else { arr.min(cap - model.overhead_fraction() * cap) * acc };
        }
        (pen, full)
    }

    fn next_value(
        &self,
        next: Option<&FxHashMap<Status, StateValue>>,
        from: u32,
        st2: Status,
        e_idx: usize,
        s: usize,
    ) -> f64 {
        match next {
            None => {
                if self.all_done(st2) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Some(layer) => match layer.get(&st2) {
                None => f64::NEG_INFINITY,
                Some(sv) => {
                    debug_assert_eq!(sv.menu, self.menu_id(st2, s + 1));
                    let row = &self.cross[&(from, sv.menu)];
                    sv.value(&row[e_idx * self.nk..(e_idx + 1) * self.nk])
                }
            },
        }
    }

    fn solve_status(
        &self,
        st: Status,
        menu_id: u32,
        s: usize,
        next: Option<&FxHashMap<Status, StateValue>>,
        scratch: &mut Vec<Vec<f64>>,
    ) -> Option<StateValue> {
        let menu = &self.menus[menu_id as usize];
        let nk = self.nk;
        for k in 0..nk {
            let len = menu.group_counts[k] as usize;
            scratch[k].clear();
            scratch[k].resize(len, f64::NEG_INFINITY);
        }
        let mut a = f64::NEG_INFINITY;
        for (i, e) in menu.effects.iter().enumerate() {
            let st2 = self.next_status(st, e);
            let v = self.next_value(next, menu_id, st2, i, s);
            if v == f64::NEG_INFINITY {
                continue;
            }
            let (pen, full) = self.rewards(st, e, s);
            let base = pen[..self.n].iter().sum::<f64>() + v;
            a = a.max(base);
            for k in 1..=nk {
                let bonus: f64 = (0..self.n).filter(|m| k >> m & 1 == 1).map(|m| full[m] - pen[m]).sum();
                let g = menu.group_of[i * nk + k - 1] as usize;
                let slot = &mut scratch[k - 1][g];
                *slot = slot.max(base + bonus);
            }
        }
        if a == f64::NEG_INFINITY {
            return None;
        }
        let mut offsets = Vec::with_capacity(nk + 1);
        let mut gids = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for col in scratch.iter().take(nk) {
            for (g, &v) in col.iter().enumerate() {
                if v > a {
                    gids.push(g as u32);
                    vals.push(v);
                }
            }
            offsets.push(gids.len() as u32);
        }
        Some(StateValue { menu: menu_id, a, offsets, gids, vals })
    }
}

/// Exact optimum over all feasible sequences. Among optimal sequences the
/// lexicographically smallest encoding (per step: configuration index, then
/// slot masks in task order) is returned.
pub fn solve_dp(problem: &PlanProblem, opts: &DpOptions) -> Result<DpSolution, PlanError> {
    problem.precheck()?;
    if problem.models.len() > MAX_MODELS {
        return Err(PlanError::Input(format!("at most {MAX_MODELS} models are supported")));
    }
    if problem.steps >= 4096 {
        return Err(PlanError::Input("at most 4095 steps per window are supported".into()));
    }
    match opts.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| PlanError::Input(format!("thread pool: {e}")))?;
            pool.install(|| run(problem, opts))
        }
        None => run(problem, opts),
    }
}

fn run(problem: &PlanProblem, opts: &DpOptions) -> Result<DpSolution, PlanError> {
    let mut solver = Solver::new(problem);
    let t = problem.steps;
    let mut layers: Vec<Option<FxHashMap<Status, StateValue>>> = (0..=t).map(|_| None).collect();
    let mut stats = DpStats::default();
    let mut next_statuses: Vec<Status> = Vec::new();
    for s in (0..t).rev() {
        let statuses = if s == 0 { vec![0u64] } else { solver.statuses(s) };
        let menu_ids: Vec<u32> = statuses.iter().map(|&st| solver.menu_for(st, s)).collect();
        if s + 1 < t {
            for &st in &next_statuses {
                solver.menu_for(st, s + 1);
            }
            let present: FxHashSet<Status> = layers[s + 1].as_ref().unwrap().keys().copied().collect();
            let mut pairs = FxHashSet::default();
            for (&st, &mid) in statuses.iter().zip(&menu_ids) {
                for e in &solver.menus[mid as usize].effects {
                    let st2 = solver.next_status(st, e);
                    if present.contains(&st2) {
                        pairs.insert((mid, solver.menu_id(st2, s + 1)));
                    }
                }
            }
            let mut pairs: Vec<_> = pairs.into_iter().collect();
            pairs.sort_unstable();
            for (a, b) in pairs {
                solver.ensure_cross(a, b);
            }
        }
        let next = if s + 1 < t { layers[s + 1].as_ref() } else { None };
        let nk = solver.nk;
        let solved: Vec<(Status, StateValue)> = statuses
            .par_iter()
            .zip(menu_ids.par_iter())
            .map_init(
                || vec![Vec::new(); nk],
                |scratch, (&st, &mid)| solver.solve_status(st, mid, s, next, scratch).map(|v| (st, v)),
            )
            .flatten()
            .collect();
        let frontier: usize = solved.iter().map(|(_, v)| v.entries()).sum();
        stats.statuses += solved.len();
        stats.entries += frontier;
        if stats.entries > opts.budget {
            return Err(PlanError::BudgetExceeded { budget: opts.budget, step: s, frontier });
        }
        next_statuses = solved.iter().map(|(st, _)| *st).collect();
        layers[s] = Some(solved.into_iter().collect());
    }
    stats.menus = solver.menus.len();
    stats.largest_menu = solver.menus.iter().map(|m| m.effects.len()).max().unwrap_or(0);
    let Some(root) = layers[0].as_ref().and_then(|l| l.get(&0)) else {
        return Err(PlanError::infeasible("no-feasible-plan", "no allocation sequence satisfies every constraint"));
    };
    let objective = root.a;
    let plan = reconstruct(&mut solver, &layers, objective)?;
    Ok(DpSolution { plan, objective, stats })
}

fn reconstruct(
    solver: &mut Solver<'_>,
    layers: &[Option<FxHashMap<Status, StateValue>>],
    objective: f64,
) -> Result<AllocationSequence, PlanError> {
    let t = solver.steps;
    let n = solver.n;
    let mut st: Status = 0;
    let mut prev: Option<[u16; MAX_MODELS]> = None;
    let mut steps = Vec::with_capacity(t);
    let mut remaining = objective;
    for s in 0..t {
        let menu_id = solver.menu_for(st, s);
        let next = if s + 1 < t { layers[s + 1].as_ref() } else { None };
        if let Some(layer) = next {
            let targets: Vec<u32> = {
                let menu = &solver.menus[menu_id as usize];
                let mut v: Vec<u32> = menu
                    .effects
                    .iter()
                    .filter_map(|e| layer.get(&solver.next_status(st, e)).map(|sv| sv.menu))
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            for b in targets {
                solver.ensure_cross(menu_id, b);
            }
        }
        let menu = &solver.menus[menu_id as usize];
        let mut values = Vec::with_capacity(menu.effects.len());
        for (i, e) in menu.effects.iter().enumerate() {
            let st2 = solver.next_status(st, e);
            let v = solver.next_value(next, menu_id, st2, i, s);
            if v == f64::NEG_INFINITY {
                values.push(f64::NEG_INFINITY);
                continue;
            }
            let (pen, full) = solver.rewards(st, e, s);
            let imm: f64 = (0..n).map(|m| if prev.is_some_and(|p| p[m] == e.fp[m]) { full[m] } else { pen[m] }).sum();
            values.push(imm + v);
        }
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY || (best - remaining).abs() > 1e-6 * remaining.abs().max(1.0) {
            return Err(PlanError::Input(format!("value reconstruction diverged at step {s}")));
        }
        let i = values.iter().position(|&v| v >= best - TIE_EPS).expect("best exists");
        let e = &menu.effects[i];
        let (pen, full) = solver.rewards(st, e, s);
        let imm: f64 = (0..n).map(|m| if prev.is_some_and(|p| p[m] == e.fp[m]) { full[m] } else { pen[m] }).sum();
        remaining = values[i] - imm;
        steps.push(decode_rep(solver.problem, e.rep, s));
        prev = Some(e.fp);
        st = solver.next_status(st, e);
    }
    Ok(AllocationSequence { window: solver.problem.window, steps })
}

/// Allocation effect with its lexicographically smallest raw allocation.
#[derive(Clone, Debug)]
pub(crate) struct EffectView {
    pub fp: [u16; MAX_MODELS],
    pub cap: [f64; MAX_MODELS],
    pub rep: u128,
}

/// Effects in which each model's retraining task holds exactly one slot of
/// `rt_sizes[m]` GPCs, or nothing where the size is 0; ordered by representative.
pub(crate) fn fixed_effects(problem: &PlanProblem, rt_sizes: &[u8]) -> Vec<EffectView> {
    let opts: Vec<RtOpt> = rt_sizes.iter().map(|&k| if k == 0 { RtOpt::Nothing } else { RtOpt::Fixed(k) }).collect();
    build_menu(problem, &opts).effects.into_iter().map(|e| EffectView { fp: e.fp, cap: e.cap, rep: e.rep }).collect()
}

/// Number of distinct effects offered at step 0 (every task free to choose).
pub fn opening_menu_size(problem: &PlanProblem) -> usize {
    let solver = Solver::new(problem);
    let opts = solver.opts_for(0, 0);
    build_menu(problem, &opts).effects.len()
}
