//! Mixed-integer model of one window, for export to external solvers.
//!
//! Variable families and their counts are listed in `docs/plan-model.md`.
//! The model detects reconfiguration through instance-count and GPC-count
//! changes, which is weaker than the footprint identity used by the solvers
//! here; the two agree whenever overhead is zero.

use serde::Serialize;

use super::problem::PlanProblem;

/// Big-M constant.
pub const H: f64 = 10000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
    /// Fixed value, when the variable is pinned by its bounds.
    pub fixed: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    /// Whether the constraint uses the big-M constant.
    pub big_m: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PlanModel {
    pub vars: Vec<Var>,
    pub constraints: Vec<Constraint>,
    /// Maximized.
    pub objective: Vec<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ModelOptions {
    /// Emit the reconfiguration flag constraint in its literal upper-bound-only
    /// form `R <= eqG + eqI` instead of forcing `R = 1` on any change.
    pub eq11_as_printed: bool,
}

impl PlanModel {
    pub fn variable_count(&self) -> usize {
        self.vars.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    fn var(&mut self, name: String, kind: VarKind) -> usize {
        self.vars.push(Var { name, kind, fixed: None });
        self.vars.len() - 1
    }

    fn add(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        let big_m = terms.iter().any(|&(_, c)| c.abs() == H) || rhs.abs() == H;
        self.constraints.push(Constraint { name, terms, sense, rhs, big_m });
    }

    /// Names of variables absent from every constraint.
    pub fn unused_variables(&self) -> Vec<&str> {
        let mut used = vec![false; self.vars.len()];
        for c in &self.constraints {
            for &(v, _) in &c.terms {
                used[v] = true;
            }
        }
        self.vars.iter().zip(used).filter(|(_, u)| !u).map(|(v, _)| v.name.as_str()).collect()
    }
}

/// Closed-form variable count: `2·M·T·G + T·Λ + 10·M·T + T·Σ|K_m| + 12·M·(T−1)`,
/// with `G` the number of (configuration, slot) pairs, `Λ` the number of
/// configurations and `K_m` the retraining sizes of model `m` present in the
/// catalog and short enough for the window.
pub fn closed_form_variable_count(problem: &PlanProblem) -> usize {
    let m = problem.models.len();
    let t = problem.steps;
    let g: usize = problem.catalog.configurations.iter().map(|c| c.slots.len()).sum();
    let lambda = problem.catalog.configurations.len();
    let k: usize = (0..m).map(|i| retraining_sizes(problem, i).len()).sum();
    2 * m * t * g + t * lambda + 10 * m * t + t * k + 12 * m * (t - 1)
}

fn retraining_sizes(problem: &PlanProblem, m: usize) -> Vec<u8> {
    let offered = problem.catalog.instance_sizes();
    problem.models[m].retraining_sizes(problem.steps).into_iter().filter(|k| offered.contains(k)).collect()
}

struct EqualsVars {
    e: usize,
    lt: usize,
    gt: usize,
}

/// `e = 1` iff integer expressions `a` and `b` are equal.
fn equals(model: &mut PlanModel, tag: &str, a: usize, b: usize) -> EqualsVars {
    let e = model.var(format!("{tag}"), VarKind::Binary);
    let lt = model.var(format!("{tag}_lt"), VarKind::Binary);
    let gt = model.var(format!("{tag}_gt"), VarKind::Binary);
    model.add(format!("{tag}_one"), vec![(e, 1.0), (lt, 1.0), (gt, 1.0)], Sense::Eq, 1.0);
    // a - b <= H (1 - e); b - a <= H (1 - e)
    model.add(format!("{tag}_up"), vec![(a, 1.0), (b, -1.0), (e, H)], Sense::Le, H);
    model.add(format!("{tag}_dn"), vec![(b, 1.0), (a, -1.0), (e, H)], Sense::Le, H);
    // gt = 1 => a - b >= 1; lt = 1 => b - a >= 1
    model.add(format!("{tag}_gtc"), vec![(a, 1.0), (b, -1.0), (gt, -H)], Sense::Ge, 1.0 - H);
    model.add(format!("{tag}_ltc"), vec![(b, 1.0), (a, -1.0), (lt, -H)], Sense::Ge, 1.0 - H);
    EqualsVars { e, lt, gt }
}

/// Builds the window model from forecast arrivals.
pub fn build_plan_model(problem: &PlanProblem, options: ModelOptions) -> PlanModel {
    let mut model = PlanModel::default();
    let nm = problem.models.len();
    let t = problem.steps;
    let configs = &problem.catalog.configurations;
    // (config, slot) pairs
    let pairs: Vec<(usize, usize)> =
        configs.iter().enumerate().flat_map(|(c, cfg)| (0..cfg.slots.len()).map(move |j| (c, j))).collect();
    let size = |c: usize, j: usize| configs[c].slots[j].size;

    let mut xi = vec![vec![vec![0usize; pairs.len()]; t]; nm];
    let mut xr = vec![vec![vec![0usize; pairs.len()]; t]; nm];
    for m in 0..nm {
        for s in 0..t {
            for (p, &(c, j)) in pairs.iter().enumerate() {
                xi[m][s][p] = model.var(format!("xi_m{m}_c{c}_j{j}_s{s}"), VarKind::Binary);
            }
        }
    }
    for m in 0..nm {
        for s in 0..t {
            for (p, &(c, j)) in pairs.iter().enumerate() {
                xr[m][s][p] = model.var(format!("xr_m{m}_c{c}_j{j}_s{s}"), VarKind::Binary);
            }
        }
    }
    let mut f = vec![vec![0usize; configs.len()]; t];
    for (s, row) in f.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = model.var(format!("f_c{c}_s{s}"), VarKind::Binary);
        }
    }

    // one configuration per step, and slots only from it
    for s in 0..t {
        for c in 0..configs.len() {
            let members: Vec<usize> = pairs
                .iter()
                .enumerate()
                .filter(|(_, &(pc, _))| pc == c)
                .flat_map(|(p, _)| (0..nm).flat_map(move |m| [(m, p, true), (m, p, false)]))
                .map(|(m, p, inf)| if inf { xi[m][s][p] } else { xr[m][s][p] })
                .collect();
            let mut le: Vec<(usize, f64)> = vec![(f[s][c], 1.0)];
            le.extend(members.iter().map(|&v| (v, -1.0)));
            model.add(format!("cfg_used_c{c}_s{s}"), le, Sense::Le, 0.0);
            let mut ge: Vec<(usize, f64)> = vec![(f[s][c], H)];
            ge.extend(members.iter().map(|&v| (v, -1.0)));
            model.add(format!("cfg_open_c{c}_s{s}"), ge, Sense::Ge, 0.0);
        }
        model.add(format!("cfg_one_s{s}"), (0..configs.len()).map(|c| (f[s][c], 1.0)).collect(), Sense::Eq, 1.0);
        // no slot shared
        for (p, &(c, j)) in pairs.iter().enumerate() {
            let terms = (0..nm).flat_map(|m| [(xi[m][s][p], 1.0), (xr[m][s][p], 1.0)]).collect();
            model.add(format!("share_c{c}_j{j}_s{s}"), terms, Sense::Le, 1.0);
        }
    }

    let mut ni = vec![vec![0usize; t]; nm];
    let mut yi = vec![vec![0usize; t]; nm];
    let mut nr = vec![vec![0usize; t]; nm];
    let mut yr = vec![vec![0usize; t]; nm];
    for m in 0..nm {
        for s in 0..t {
            ni[m][s] = model.var(format!("ni_m{m}_s{s}"), VarKind::Integer);
            yi[m][s] = model.var(format!("yi_m{m}_s{s}"), VarKind::Integer);
            nr[m][s] = model.var(format!("nr_m{m}_s{s}"), VarKind::Integer);
            yr[m][s] = model.var(format!("yr_m{m}_s{s}"), VarKind::Integer);
            let count = |x: &Vec<usize>, n: usize, weighted: bool| -> Vec<(usize, f64)> {
                let mut terms = vec![(n, 1.0)];
                terms.extend(
                    pairs.iter().enumerate().map(|(p, &(c, j))| (x[p], if weighted { -(size(c, j) as f64) } else { -1.0 })),
                );
                terms
            };
            model.add(format!("ni_def_m{m}_s{s}"), count(&xi[m][s], ni[m][s], false), Sense::Eq, 0.0);
            model.add(format!("yi_def_m{m}_s{s}"), count(&xi[m][s], yi[m][s], true), Sense::Eq, 0.0);
            model.add(format!("nr_def_m{m}_s{s}"), count(&xr[m][s], nr[m][s], false), Sense::Eq, 0.0);
            model.add(format!("yr_def_m{m}_s{s}"), count(&xr[m][s], yr[m][s], true), Sense::Eq, 0.0);
        }
    }

    // retraining: running flag, starts, constant size, completion
    let mut run = vec![vec![0usize; t]; nm];
    let mut done = vec![vec![0usize; t]; nm];
    for m in 0..nm {
        let ks = retraining_sizes(problem, m);
        let rt = |k: u8| problem.models[m].rt_steps[k as usize] as usize;
        for s in 0..t {
            run[m][s] = model.var(format!("c_m{m}_s{s}"), VarKind::Binary);
            model.add(format!("rt_single_m{m}_s{s}"), vec![(nr[m][s], 1.0)], Sense::Le, 1.0);
            model.add(format!("run_le_m{m}_s{s}"), vec![(run[m][s], 1.0), (nr[m][s], -1.0)], Sense::Le, 0.0);
            model.add(format!("run_ge_m{m}_s{s}"), vec![(run[m][s], H), (nr[m][s], -1.0)], Sense::Ge, 0.0);
        }
        let mut z = vec![Vec::new(); t];
        for (s, zs) in z.iter_mut().enumerate() {
            for &k in &ks {
                zs.push((k, model.var(format!("z_m{m}_s{s}_k{k}"), VarKind::Binary)));
            }
        }
        for s in 0..t {
            let zsum: Vec<(usize, f64)> = z[s].iter().map(|&(_, v)| (v, 1.0)).collect();
            // start iff running now and not before
            let mut a = zsum.clone();
            a.push((run[m][s], -1.0));
            model.add(format!("start_le_run_m{m}_s{s}"), a, Sense::Le, 0.0);
            if s > 0 {
                let mut b = zsum.clone();
                b.push((run[m][s - 1], 1.0));
                model.add(format!("start_le_idle_m{m}_s{s}"), b, Sense::Le, 1.0);
                let mut c = zsum.clone();
                c.push((run[m][s], -1.0));
                c.push((run[m][s - 1], 1.0));
                model.add(format!("start_ge_m{m}_s{s}"), c, Sense::Ge, 0.0);
            } else {
                let mut c = zsum.clone();
                c.push((run[m][s], -1.0));
                model.add(format!("start_ge_m{m}_s{s}"), c, Sense::Ge, 0.0);
            }
            for &(k, zv) in &z[s] {
                let r = rt(k);
                // z => yr = k
                model.add(format!("start_size_up_m{m}_s{s}_k{k}"), vec![(yr[m][s], 1.0), (zv, H)], Sense::Le, k as f64 + H);
                model.add(format!("start_size_dn_m{m}_s{s}_k{k}"), vec![(yr[m][s], 1.0), (zv, -H)], Sense::Ge, k as f64 - H);
                // finishes inside the window
                model.add(format!("start_fits_m{m}_s{s}_k{k}"), vec![(zv, (s + r) as f64)], Sense::Le, t as f64);
                if s + r < t {
                    model.add(format!("run_stop_m{m}_s{s}_k{k}"), vec![(run[m][s + r], 1.0), (zv, 1.0)], Sense::Le, 1.0);
                }
            }
        }
        // q[w] = (yr^w == yr^{w-1}) for w >= 1
        let mut q = vec![usize::MAX; t];
        for w in 1..t {
            let eq = equals(&mut model, &format!("q_m{m}_s{w}"), yr[m][w], yr[m][w - 1]);
            let _ = (eq.lt, eq.gt);
            q[w] = eq.e;
        }
        for s in 0..t {
            for &(k, zv) in &z[s] {
                let r = rt(k);
                let hi = (s + r).min(t);
                if r > 1 && s + 1 < hi {
                    // z = 1 => sum of q over the run's remaining steps = r - 1
                    let mut terms: Vec<(usize, f64)> = (s + 1..hi).map(|w| (q[w], 1.0)).collect();
                    terms.push((zv, -H));
                    model.add(format!("run_const_m{m}_s{s}_k{k}"), terms, Sense::Ge, (r - 1) as f64 - H);
                }
            }
        }
        model.add(format!("launched_m{m}"), (0..t).map(|s| (run[m][s], 1.0)).collect(), Sense::Ge, 1.0);
        model.add(
            format!("one_run_m{m}"),
            z.iter().flat_map(|zs| zs.iter().map(|&(_, v)| (v, 1.0))).collect(),
            Sense::Le,
            1.0,
        );
        // completion: done^0 = 0, done^s = done^{s-1} + kf^s, kf^s = starts that end at s
        for (s, d) in done[m].iter_mut().enumerate() {
            *d = model.var(format!("done_m{m}_s{s}"), VarKind::Binary);
            if s == 0 {
                model.vars[*d].fixed = Some(0.0);
            }
        }
        for s in 1..t {
            let kf = model.var(format!("kf_m{m}_s{s}"), VarKind::Binary);
            let mut terms = vec![(kf, 1.0)];
            for (w, zs) in z.iter().enumerate() {
                for &(k, zv) in zs {
                    if w + rt(k) == s {
                        terms.push((zv, -1.0));
                    }
                }
            }
            model.add(format!("kf_def_m{m}_s{s}"), terms, Sense::Eq, 0.0);
            model.add(
                format!("done_def_m{m}_s{s}"),
                vec![(done[m][s], 1.0), (done[m][s - 1], -1.0), (kf, -1.0)],
                Sense::Eq,
                0.0,
            );
        }
    }

    // deployment, reconfiguration, throughput and objective
    for m in 0..nm {
        let terms = &problem.models[m];
        let floor = terms.floor;
        for s in 0..t {
            let fit: Vec<(usize, f64)> = pairs
                .iter()
                .enumerate()
                .filter(|(_, &(c, j))| size(c, j) >= floor)
                .map(|(p, _)| (xi[m][s][p], 1.0))
                .collect();
            model.add(format!("deploy_fit_m{m}_s{s}"), fit, Sense::Ge, 1.0);
            model.add(format!("deploy_sum_m{m}_s{s}"), vec![(yi[m][s], 1.0)], Sense::Ge, floor as f64);
        }
        let mut loss = vec![None; t];
        let frac = terms.overhead_fraction();
        for s in 1..t {
            let eg = equals(&mut model, &format!("eg_m{m}_s{s}"), yi[m][s], yi[m][s - 1]).e;
            let en = equals(&mut model, &format!("en_m{m}_s{s}"), ni[m][s], ni[m][s - 1]).e;
            let r = model.var(format!("r_m{m}_s{s}"), VarKind::Binary);
            if options.eq11_as_printed {
                model.add(format!("reconf_m{m}_s{s}"), vec![(r, 1.0), (eg, -1.0), (en, -1.0)], Sense::Le, 0.0);
            } else {
                model.add(format!("reconf_g_m{m}_s{s}"), vec![(r, 1.0), (eg, 1.0)], Sense::Ge, 1.0);
                model.add(format!("reconf_i_m{m}_s{s}"), vec![(r, 1.0), (en, 1.0)], Sense::Ge, 1.0);
                model.add(format!("reconf_up_m{m}_s{s}"), vec![(r, 1.0), (eg, 1.0), (en, 1.0)], Sense::Le, 2.0);
            }
            let l = model.var(format!("loss_m{m}_s{s}"), VarKind::Continuous);
            // loss >= frac * capsum - H (1 - r)
            let mut lt: Vec<(usize, f64)> = vec![(l, 1.0), (r, -H)];
            lt.extend(
                pairs
                    .iter()
                    .enumerate()
                    .map(|(p, &(c, j))| (xi[m][s][p], -frac * terms.step_capability[size(c, j) as usize])),
            );
            model.add(format!("loss_def_m{m}_s{s}"), lt, Sense::Ge, -H);
            loss[s] = Some(l);
        }
        for s in 0..t {
            let cap = model.var(format!("cap_m{m}_s{s}"), VarKind::Continuous);
            let thr = model.var(format!("thr_m{m}_s{s}"), VarKind::Continuous);
            let tb = model.var(format!("tb_m{m}_s{s}"), VarKind::Binary);
            let w = model.var(format!("w_m{m}_s{s}"), VarKind::Continuous);
            let mut ct: Vec<(usize, f64)> = vec![(cap, 1.0)];
            ct.extend(
                pairs
                    .iter()
                    .enumerate()
                    .map(|(p, &(c, j))| (xi[m][s][p], -terms.step_capability[size(c, j) as usize])),
            );
            if let Some(l) = loss[s] {
                ct.push((l, 1.0));
            }
            model.add(format!("cap_def_m{m}_s{s}"), ct, Sense::Eq, 0.0);
            let arr = terms.arrivals[s] as f64;
            // thr = min(arr, cap)
            model.add(format!("thr_arr_m{m}_s{s}"), vec![(thr, 1.0)], Sense::Le, arr);
            model.add(format!("thr_cap_m{m}_s{s}"), vec![(thr, 1.0), (cap, -1.0)], Sense::Le, 0.0);
            model.add(format!("thr_sel_arr_m{m}_s{s}"), vec![(thr, 1.0), (tb, -H)], Sense::Ge, arr - H);
            model.add(format!("thr_sel_cap_m{m}_s{s}"), vec![(thr, 1.0), (cap, -1.0), (tb, H)], Sense::Ge, 0.0);
            // w = thr * done, with thr in [0, arr]
            let d = done[m][s];
            model.add(format!("w_done_m{m}_s{s}"), vec![(w, 1.0), (d, -arr)], Sense::Le, 0.0);
            model.add(format!("w_thr_m{m}_s{s}"), vec![(w, 1.0), (thr, -1.0)], Sense::Le, 0.0);
            model.add(format!("w_low_m{m}_s{s}"), vec![(w, 1.0), (thr, -1.0), (d, -arr)], Sense::Ge, -arr);
            model.objective.push((thr, terms.pre));
            model.objective.push((w, terms.post - terms.pre));
        }
    }
    model
}

#[cfg(test)]
mod tests {
    use super::super::problem::fixtures::*;
    use super::*;

    fn small_problem() -> PlanProblem {
        let cat = catalog(&[("4+3", &[(4, 0), (3, 4)]), ("7", &[(7, 0)]), ("2+2+3", &[(2, 0), (2, 2), (3, 4)])]);
        let s = scenario(
            cat,
            vec![
                ModelFixture {
                    floor: 2,
                    caps: vec![(2, 2.0), (3, 3.0), (4, 4.0), (7, 7.0)],
                    rt: vec![(2, 3), (3, 2), (4, 2), (7, 9)],
                    psi: 0.5,
                    pre: 0.5,
                    post: 1.0,
                    arrivals: vec![1, 2, 3, 4],
                },
                ModelFixture {
                    floor: 1,
                    caps: vec![(2, 2.0), (3, 3.0), (4, 4.0), (7, 7.0)],
                    rt: vec![(3, 1), (4, 1)],
                    psi: 0.0,
                    pre: 0.5,
                    post: 1.0,
                    arrivals: vec![4, 3, 2, 1],
                },
            ],
        );
        problem(&s)
    }

    /// Enumerates each family's index space directly.
    fn enumerated_count(p: &PlanProblem) -> usize {
        let mut n = 0;
        let t = p.steps;
        for _m in 0..p.models.len() {
            for _s in 0..t {
                for c in &p.catalog.configurations {
                    for _j in &c.slots {
                        n += 2; // xi, xr
                    }
                }
            }
        }
        for _s in 0..t {
            for _c in &p.catalog.configurations {
                n += 1; // f
            }
        }
        for (m, model) in p.models.iter().enumerate() {
            let _ = m;
            for s in 0..t {
                n += 4; // ni yi nr yr
                n += 1; // c
                n += 1; // done
                n += 4; // cap thr tb w
                for k in 1..9u8 {
                    let r = model.rt_steps[k as usize] as usize;
                    if r > 0 && r <= t && p.catalog.instance_sizes().contains(&k) {
                        n += 1; // z
                    }
                }
                if s >= 1 {
                    n += 3 + 1 + 6 + 1 + 1; // q+helpers, kf, eg/en+helpers, r, loss
                }
            }
        }
        n
    }

    #[test]
    fn variable_count_matches_closed_form() {
        let p = small_problem();
        let model = build_plan_model(&p, ModelOptions::default());
        assert_eq!(model.variable_count(), closed_form_variable_count(&p));
        assert_eq!(model.variable_count(), enumerated_count(&p));
    }

    #[test]
    fn every_variable_is_constrained() {
        let p = small_problem();
        for eq11_as_printed in [false, true] {
            let model = build_plan_model(&p, ModelOptions { eq11_as_printed });
            assert!(model.unused_variables().is_empty(), "{:?}", model.unused_variables());
        }
    }

    #[test]
    fn big_m_only_in_flagged_constraints() {
        let p = small_problem();
        let model = build_plan_model(&p, ModelOptions::default());
        assert_eq!(H, 10000.0);
        assert!(model.constraints.iter().any(|c| c.big_m));
        for c in &model.constraints {
            let mentions = c.terms.iter().any(|&(_, v)| v.abs() >= H) || c.rhs.abs() >= H - 10.0;
            assert_eq!(mentions, c.big_m, "{}", c.name);
        }
    }

    #[test]
    fn counts_are_deterministic() {
        let p = small_problem();
        let a = build_plan_model(&p, ModelOptions::default());
        let b = build_plan_model(&p, ModelOptions::default());
        assert_eq!(a, b);
    }
}
