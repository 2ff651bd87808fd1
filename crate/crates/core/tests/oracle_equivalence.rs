//! Tank against the brute-force oracle on generated instances.

use std::collections::BTreeMap;

use fishtank_core::lang::Axiom;
use fishtank_core::oracle::gen::{self, Instance, Limits};
use fishtank_core::oracle::{canonical_rows, naive_query, naive_run};
use fishtank_core::query_engine::QueryError;
use fishtank_core::static_engine::DEFAULT_BUDGET;
use fishtank_core::tank::{Tank, TankConfig};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn run_tank(inst: &Instance, ops: &[(i64, Axiom)]) -> (Tank, BTreeMap<Axiom, i64>) {
    let tank = Tank::new(TankConfig::default());
    tank.define(&inst.program).unwrap();
    for (d, a) in ops {
        tank.submit(a, *d).unwrap();
    }
    tank.quiesce(200_000).unwrap();
    let counts = tank.snapshot_counts();
    (tank, counts)
}

fn instance(seed: u64) -> (Instance, StdRng) {
    let mut rng = StdRng::seed_from_u64(seed);
    (gen::instance(&mut rng, Limits::default()), rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tank_matches_naive_run(seed in any::<u64>()) {
        let (inst, _) = instance(seed);
        let (_, counts) = run_tank(&inst, &inst.ops);
        let naive = naive_run(&inst.ops, &inst.db, DEFAULT_BUDGET, 200_000).unwrap();
        prop_assert_eq!(counts, naive.counts);
    }

    #[test]
    fn permutations_reach_the_same_state(seed in any::<u64>()) {
        let (inst, mut rng) = instance(seed);
        let (_, expected) = run_tank(&inst, &inst.ops);
        for _ in 0..3 {
            let mut ops = inst.ops.clone();
            ops.shuffle(&mut rng);
            let (_, got) = run_tank(&inst, &ops);
            prop_assert_eq!(&got, &expected);
        }
    }

    #[test]
    fn inverse_ops_empty_the_store(seed in any::<u64>()) {
        let (inst, _) = instance(seed);
        let mut ops = inst.ops.clone();
        ops.extend(inst.ops.iter().map(|(d, a)| (-d, a.clone())));
        let (_, got) = run_tank(&inst, &ops);
        prop_assert!(got.is_empty(), "{:?}", got);
    }

    #[test]
    fn queries_match_naive_query(seed in any::<u64>()) {
        let (inst, mut rng) = instance(seed);
        let (tank, counts) = run_tank(&inst, &inst.ops);
        for _ in 0..5 {
            let q = gen::query(&mut rng, &inst);
            let engine = tank.query(&q, usize::MAX);
            let naive = naive_query(&q, &counts, &inst.db, &inst.decls, DEFAULT_BUDGET);
            match (engine, naive) {
                (Ok(e), Ok(n)) => {
                    let e = e.into_iter().map(|r| r.bindings.into_iter().collect());
                    prop_assert_eq!(canonical_rows(e), canonical_rows(n), "query {}", q);
                }
                (Err(QueryError::UnindexedQuery { .. }), Err(_)) => {}
                (e, n) => prop_assert!(false, "query {}: {:?} vs {:?}", q, e, n),
            }
        }
    }
}
