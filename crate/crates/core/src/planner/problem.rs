//! One window's planning problem on the step axis.

use serde::{Deserialize, Serialize};

use crate::catalog::{Allocation, Catalog, TaskId};
use crate::predictor::ArrivalForecast;
use crate::workload::{Granularity, Scenario};

use super::PlanError;

/// Size-indexed tables run up to this bound (sizes 0..=8).
pub const SIZE_SLOTS: usize = 9;

/// Everything the solvers need about one model, rescaled to steps.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelTerms {
    pub name: String,
    pub floor: u8,
    pub gflops: f64,
    /// Requests one instance of each size serves per step; zero below the floor.
    pub step_capability: [f64; SIZE_SLOTS],
    /// Retraining steps per instance size; zero where retraining is unsupported.
    pub rt_steps: [u32; SIZE_SLOTS],
    /// Reconfiguration overhead in steps.
    pub overhead_steps: f64,
    /// Reconfiguration overhead in seconds.
    pub overhead_seconds: f64,
    /// Forecast arrivals per step.
    pub arrivals: Vec<u64>,
    pub pre: f64,
    pub post: f64,
}

impl ModelTerms {
    /// Fraction of a step's capability lost when the model reconfigures.
    pub fn overhead_fraction(&self) -> f64 {
        self.overhead_steps.min(1.0)
    }

    pub fn accuracy(&self, completed: bool) -> f64 {
        if completed {
            self.post
        } else {
            self.pre
        }
    }

    /// Sizes with a retraining time that fits in `steps`, ascending.
    pub fn retraining_sizes(&self, steps: usize) -> Vec<u8> {
        (1..SIZE_SLOTS as u8).filter(|&k| self.rt_steps[k as usize] > 0 && self.rt_steps[k as usize] as usize <= steps).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanProblem {
    pub catalog: Catalog,
    pub window: usize,
    pub steps: usize,
    pub step_seconds: f64,
    pub models: Vec<ModelTerms>,
}

impl PlanProblem {
    /// Builds the problem for `window` from per-second forecast arrivals.
    pub fn for_window(scenario: &Scenario, window: usize, forecast: &ArrivalForecast) -> Result<Self, PlanError> {
        if forecast.counts.len() != scenario.models.len() || forecast.horizon() != scenario.window_size {
            return Err(PlanError::Input(format!(
                "forecast must cover {} models over {} seconds",
                scenario.models.len(),
                scenario.window_size
            )));
        }
        let gran = scenario.granularity();
        let g = gran.seconds();
        let steps = scenario.steps_per_window();
        let models = scenario
            .models
            .iter()
            .enumerate()
            .map(|(m, spec)| {
                let p = &spec.profile;
                let mut step_capability = [0.0; SIZE_SLOTS];
                let mut rt_steps = [0u32; SIZE_SLOTS];
                for k in 1..SIZE_SLOTS as u8 {
                    step_capability[k as usize] = p.capability_of(k) * g;
                    if k >= p.min_deploy_gpcs {
                        if let Some(&rt) = spec.retraining.rt_table.get(&k) {
                            rt_steps[k as usize] = ceil_steps(gran, rt);
                        }
                    }
                }
                let acc = scenario.accuracy(m, window);
                ModelTerms {
                    name: p.name.clone(),
                    floor: p.min_deploy_gpcs,
                    gflops: p.gflops,
                    step_capability,
                    rt_steps,
                    overhead_steps: p.reconfig_overhead / g,
                    overhead_seconds: p.reconfig_overhead,
                    arrivals: gran.rebin(&forecast.counts[m]),
                    pre: acc.pre,
                    post: acc.post,
                }
            })
            .collect();
        Ok(PlanProblem { catalog: scenario.catalog.clone(), window, steps, step_seconds: g, models })
    }

    /// Same problem with different per-step arrivals.
    pub fn with_arrivals(&self, arrivals: Vec<Vec<u64>>) -> Self {
        let mut p = self.clone();
        for (m, a) in p.models.iter_mut().zip(arrivals) {
            m.arrivals = a;
        }
        p
    }

    pub fn tasks(&self) -> Vec<TaskId> {
        (0..self.models.len())
            .map(TaskId::inference)
            .chain((0..self.models.len()).map(TaskId::retraining))
            .collect()
    }

    /// Rejects problems that no allocation sequence can satisfy, without solving.
    pub fn precheck(&self) -> Result<(), PlanError> {
        let largest = self.catalog.largest_instance();
        for m in &self.models {
            if m.floor > largest {
                return Err(PlanError::infeasible(
                    "deployment-floor unsatisfiable",
                    format!("model `{}` needs {} GPCs, largest instance has {}", m.name, m.floor, largest),
                ));
            }
            if m.retraining_sizes(self.steps).is_empty() {
                return Err(PlanError::infeasible(
                    "retraining-too-long",
                    format!("model `{}` cannot finish retraining within {} steps on any instance", m.name, self.steps),
                ));
            }
        }
        for m in &self.models {
            let sizes = m.retraining_sizes(self.steps);
            let hosts = self.catalog.configurations.iter().any(|c| {
                let slots: Vec<u8> = c.slots.iter().map(|s| s.size).collect();
                coexists(&slots, &self.models, &sizes)
            });
            if !hosts {
                return Err(PlanError::infeasible(
                    "no-coexistence-configuration",
                    format!(
                        "no configuration hosts every inference task alongside retraining of `{}`",
                        m.name
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Whether distinct slots can serve every model's inference floor plus one
/// retraining slot with a size in `rt_sizes`.
fn coexists(slots: &[u8], models: &[ModelTerms], rt_sizes: &[u8]) -> bool {
    fn assign(slots: &[u8], used: u8, needs: &[u8], i: usize) -> bool {
        if i == needs.len() {
            return true;
        }
        (0..slots.len()).any(|j| {
            used >> j & 1 == 0 && slots[j] >= needs[i] && assign(slots, used | 1 << j, needs, i + 1)
        })
    }
    let floors: Vec<u8> = models.iter().map(|m| m.floor).collect();
    (0..slots.len()).any(|r| rt_sizes.contains(&slots[r]) && assign(slots, 1 << r, &floors, 0))
}

fn ceil_steps(gran: Granularity, seconds: u32) -> u32 {
    gran.ceil_steps(seconds).max(1)
}

/// One window's per-step allocations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationSequence {
    pub window: usize,
    pub steps: Vec<Allocation>,
}

impl AllocationSequence {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use std::collections::BTreeMap;

    use super::*;
    use crate::catalog::{Catalog, Placement};
    use crate::workload::{AccuracyWindow, CatalogRef, InferenceTrace, ModelProfile, ModelSpec, RetrainingSpec};

    /// Catalog from `(id, [(size, start)])` pairs, no placement rules.
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

    pub struct ModelFixture {
        pub floor: u8,
        pub caps: Vec<(u8, f64)>,
        pub rt: Vec<(u8, u32)>,
        pub psi: f64,
        pub pre: f64,
        pub post: f64,
        pub arrivals: Vec<u64>,
    }

    pub fn scenario(catalog: Catalog, models: Vec<ModelFixture>) -> Scenario {
        let len = models[0].arrivals.len();
        let trace = InferenceTrace::new(models.iter().map(|m| m.arrivals.clone()).collect());
        let models = models
            .into_iter()
            .enumerate()
            .map(|(i, m)| ModelSpec {
                profile: ModelProfile {
                    name: format!("m{i}"),
                    gflops: 1.0,
                    min_deploy_gpcs: m.floor,
                    capability: m.caps.into_iter().collect(),
                    latency_full: 0.01,
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

    pub fn problem(s: &Scenario) -> PlanProblem {
        let f = ArrivalForecast { counts: s.trace.counts.clone() };
        PlanProblem::for_window(s, 0, &f).unwrap()
    }

    /// The three-step, one-model example with a `{4, 3}` catalog.
    pub fn worked_example() -> Scenario {
        scenario(
            catalog(&[("4+3", &[(4, 0), (3, 4)])]),
            vec![ModelFixture {
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
}
