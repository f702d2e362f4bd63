//! Scenario builders shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use migplan::catalog::{Allocation, Catalog, Placement, TaskId};
use migplan::planner::{check_feasible, AllocationSequence, PlanProblem};
use migplan::predictor::ArrivalForecast;
use migplan::workload::{
    AccuracyWindow, CatalogRef, InferenceTrace, ModelProfile, ModelSpec, RetrainingSpec, Scenario,
};
use rand::seq::IndexedRandom;
use rand::Rng;

#[derive(Clone, Debug)]
pub struct Model {
    pub floor: u8,
    pub caps: Vec<(u8, f64)>,
    pub rt: Vec<(u8, u32)>,
    pub psi: f64,
    pub pre: f64,
    pub post: f64,
    pub arrivals: Vec<u64>,
}

/// Catalog from `(id, [(size, start)])`, no placement rules.
pub fn catalog(configs: &[(&str, &[(u8, u8)])]) -> Catalog {
    Catalog::new(
        7,
        configs
            .iter()
            .map(|(id, slots)| (id.to_string(), slots.iter().map(|&(k, s)| Placement::new(s, k)).collect()))
            .collect(),
        Vec::new(),
    )
    .unwrap()
}

/// One window covering every arrival.
pub fn scenario(catalog: Catalog, models: Vec<Model>) -> Scenario {
    let len = models[0].arrivals.len();
    let trace = InferenceTrace::new(models.iter().map(|m| m.arrivals.clone()).collect());
    let models = models
        .into_iter()
        .enumerate()
        .map(|(i, m)| ModelSpec {
            profile: ModelProfile {
                name: format!("m{i}"),
                gflops: 1.0 + i as f64,
                min_deploy_gpcs: m.floor,
                capability: m.caps.into_iter().collect(),
                latency_full: 0.5,
                reconfig_overhead: m.psi,
            },
            retraining: RetrainingSpec {
                data_volume: 1,
                rt_table: m.rt.into_iter().collect::<BTreeMap<_, _>>(),
                accuracy: vec![AccuracyWindow { pre: m.pre, post: m.post }],
            },
        })
        .collect();
    Scenario {
        catalog,
        catalog_ref: CatalogRef { path: None, builtin: None },
        models,
        trace,
        window_size: len,
        window_count: 1,
        granularity: 1.0,
    }
}

/// Window 0 planned on its actual arrivals.
pub fn oracle_problem(s: &Scenario, window: usize) -> PlanProblem {
    let f = ArrivalForecast::from(s.window_trace(window));
    PlanProblem::for_window(s, window, &f).unwrap()
}

/// The three-step single-model example on a `{4, 3}` catalog: capability 6 on
/// the 3-GPC slot and 8 on the 4-GPC slot, retraining 2 steps on 3 GPCs or 1
/// step on 4, accuracy 0.5 before and 1.0 after, 5 arrivals per step.
pub fn worked_example() -> Scenario {
    scenario(
        catalog(&[("4+3", &[(4, 0), (3, 4)])]),
        vec![Model {
            floor: 1,
            caps: vec![(3, 6.0), (4, 8.0)],
            rt: vec![(3, 2), (4, 1)],
            psi: 0.0,
            pre: 0.5,
            post: 1.0,
            arrivals: vec![5, 5, 5],
        }],
    )
}

/// Random small scenario: 3..=6 steps, 1 or 2 models, up to three
/// configurations of at most four slots from the default catalog, overhead at
/// most one second.
pub fn random_scenario<R: Rng>(rng: &mut R) -> Scenario {
    let full = Catalog::default_a100();
    let small: Vec<_> = full.configurations.iter().filter(|c| c.slots.len() <= 4).collect();
    let count = rng.random_range(1..=3);
    let mut picked: Vec<_> = small.choose_multiple(rng, count).collect();
    picked.sort_by_key(|c| full.position(&c.id));
    let cat = Catalog::new(
        7,
        picked.iter().map(|c| (c.id.0.clone(), c.slots.iter().map(|s| s.placement()).collect())).collect(),
        Vec::new(),
    )
    .unwrap();
    let steps = rng.random_range(3..=6usize);
    let n = rng.random_range(1..=2usize);
    let models = (0..n)
        .map(|_| {
            let floor = *[1u8, 1, 2].choose(rng).unwrap();
            let per_gpc = rng.random_range(1..=4) as f64;
            let caps = (1..=7u8).filter(|&k| k >= floor).map(|k| (k, per_gpc * k as f64)).collect();
            let rt = (1..=7u8)
                .filter(|&k| k >= floor)
                .map(|k| (k, (rng.random_range(2..=8u32) * 2).div_ceil(k as u32).max(1)))
                .collect();
            let psi = *[0.0, 0.25, 0.5, 1.0].choose(rng).unwrap();
            let pre: f64 = rng.random_range(0.3..0.8);
            let post = (pre + rng.random_range(0.05..0.3)).min(1.0);
            let arrivals = (0..steps).map(|_| rng.random_range(0..=20)).collect();
            Model { floor, caps, rt, psi, pre, post, arrivals }
        })
        .collect();
    scenario(cat, models)
}

/// Random feasible plans on the default catalog that leave slots idle.
pub fn random_plan<R: Rng>(rng: &mut R, catalog: &Catalog) -> (Scenario, AllocationSequence) {
    loop {
        let steps = rng.random_range(5..=9usize);
        let models: Vec<Model> = (0..2)
            .map(|_| Model {
                floor: 1,
                caps: (1..=7u8).map(|k| (k, 3.0 * k as f64)).collect(),
                rt: vec![(1, 2), (2, 1)],
                psi: rng.random_range(0.3..1.0),
                pre: 0.6,
                post: 0.9,
                arrivals: (0..steps).map(|_| rng.random_range(1..=20)).collect(),
            })
            .collect();
        let s = scenario(catalog.clone(), models);
        let p = oracle_problem(&s, 0);
        let starts = [rng.random_range(0..steps - 1), rng.random_range(0..steps - 1)];
        let mut plan = Vec::new();
        let mut ok = true;
        for t in 0..steps {
            // retraining holds one 1-GPC slot for two steps
            let retraining: Vec<usize> = (0..2).filter(|&m| t >= starts[m] && t < starts[m] + 2).collect();
            let mut placed = None;
            for _ in 0..50 {
                let ci = rng.random_range(0..catalog.configurations.len());
                let config = &catalog.configurations[ci];
                let mut free: Vec<usize> = (0..config.slots.len()).collect();
                let mut a = Allocation::new(t, config.id.0.clone());
                let mut good = true;
                for &m in &retraining {
                    match free.iter().position(|&j| config.slots[j].size == 1) {
                        Some(pos) => {
                            let j = free.remove(pos);
                            a = a.with(TaskId::retraining(m), &[j as u8]);
                        }
                        None => good = false,
                    }
                }
                for m in 0..2 {
                    if free.is_empty() {
                        good = false;
                        break;
                    }
                    let take = rng.random_range(1..=free.len().min(2));
                    let mut mine = Vec::new();
                    for _ in 0..take {
                        let pos = rng.random_range(0..free.len());
                        mine.push(free.remove(pos) as u8);
                    }
                    a = a.with(TaskId::inference(m), &mine);
                }
                if good {
                    placed = Some(a);
                    break;
                }
            }
            match placed {
                Some(a) => plan.push(a),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        let seq = AllocationSequence { window: 0, steps: plan };
        if ok && check_feasible(&p, &seq).is_empty() {
            return (s, seq);
        }
    }
}
