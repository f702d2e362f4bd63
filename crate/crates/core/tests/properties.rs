//! Randomized invariants of pre-initialization and the replay modes.

mod common;

use common::{oracle_problem, random_plan, random_scenario};
use migplan::catalog::Catalog;
use migplan::planner::{evaluate_plan, solve_dp, DpOptions};
use migplan::preinit::{apply_preinit, plan_preinit, preinitialize, EffectivePlan};
use migplan::simulator::{run_fluid, run_requests, Metrics};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

fn check_fractions(m: &Metrics) -> Result<(), TestCaseError> {
    for j in &m.jobs {
        for c in std::iter::once(&j.totals).chain(&j.windows) {
            for f in [c.goodput(), c.slo_attainment(), c.accuracy()] {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&f), "{f} in {c:?}");
            }
            prop_assert!(c.goodput() <= c.slo_attainment().min(c.accuracy()) + 1e-12);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn preinit_never_lowers_goodput(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, plan) = random_plan(&mut rng, &Catalog::default_a100());
        let p = oracle_problem(&s, 0);
        let base = evaluate_plan(&p, &plan, None).unwrap().total;
        let eff = preinitialize(&p, plan.clone());
        let with = evaluate_plan(&p, &plan, Some(&eff.psi_eff)).unwrap().total;
        prop_assert!(with >= base - 1e-9, "{with} < {base}");
        for (m, row) in eff.psi_eff.iter().enumerate() {
            for &v in row {
                prop_assert!(v == 0.0 || v == p.models[m].overhead_seconds);
            }
        }
    }

    #[test]
    fn actions_use_free_slices_and_are_stable(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let catalog = Catalog::default_a100();
        let (s, plan) = random_plan(&mut rng, &catalog);
        let actions = plan_preinit(&plan, &catalog);
        for a in &actions {
            let busy = plan.steps[a.fire_second].occupied_slices(&catalog);
            prop_assert_eq!(busy & a.target.placement().slice_mask(), 0);
        }
        prop_assert_eq!(&plan_preinit(&plan, &catalog), &actions);
        let p = oracle_problem(&s, 0);
        let once = apply_preinit(&p, &plan, &actions).unwrap();
        let twice = apply_preinit(&p, &once.plan, &plan_preinit(&once.plan, &catalog)).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn replay_accounts_for_every_request(seed in any::<u64>(), sim_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scenario(&mut rng);
        let p = oracle_problem(&s, 0);
        let Ok(sol) = solve_dp(&p, &DpOptions::default()) else {
            return Ok(());
        };
        let plans = vec![preinitialize(&p, sol.plan.clone())];
        let fluid = run_fluid(&s, &plans).unwrap();
        let requests = run_requests(&s, &plans, sim_seed).unwrap();
        prop_assert_eq!(&requests, &run_requests(&s, &plans, sim_seed).unwrap());
        let planned = evaluate_plan(&p, &sol.plan, Some(&plans[0].psi_eff)).unwrap().total;
        prop_assert!((fluid.total_valid() - planned).abs() < 1e-6 * planned.max(1.0));
        for (j, arrivals) in requests.jobs.iter().zip(&s.trace.counts) {
            let c = &j.totals;
            let received: u64 = arrivals.iter().sum();
            prop_assert_eq!(c.received, received as f64);
            prop_assert_eq!(c.served + c.dropped + c.queued, c.received);
            prop_assert!(c.valid <= c.slo_met.min(c.correct));
            prop_assert!(c.slo_met <= c.served && c.correct <= c.served);
        }
        check_fractions(&fluid)?;
        check_fractions(&requests)?;
    }

    #[test]
    fn without_preinit_keeps_every_overhead(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, plan) = random_plan(&mut rng, &Catalog::default_a100());
        let p = oracle_problem(&s, 0);
        let eff = EffectivePlan::without_preinit(&p, plan.clone());
        let plain = evaluate_plan(&p, &plan, None).unwrap().total;
        let same = evaluate_plan(&p, &plan, Some(&eff.psi_eff)).unwrap().total;
        prop_assert_eq!(plain, same);
        prop_assert!(eff.actions.is_empty());
    }
}
