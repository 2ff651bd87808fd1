//! Storage access counts for ticks and queries are exact.

use fishtank_core::lang::parse_query;
use fishtank_core::tank::{Tank, TankConfig};
use proptest::prelude::*;

/// A tank with `f/2` facts spread over `subjects` partitions, some `g/1`
/// facts, and a generic rule deriving `h/2` from `f/2`.
fn populated(subjects: usize, per_subject: usize) -> Tank {
    let tank = Tank::new(TankConfig::default());
    tank.define(":- fact f/2, g/1, h/2. :- dynamic d/2.")
        .unwrap();
    for s in 0..subjects {
        for j in 0..per_subject {
            tank.insert_text(&format!("f(s{s}, {j})")).unwrap();
        }
        tank.insert_text(&format!("d(s{s}, {s}) :- true")).unwrap();
    }
    tank.insert_text("g(0)").unwrap();
    tank.insert_text("f(S, J) ~> h(S, J)").unwrap();
    tank.run_to_quiescence().unwrap();
    tank.store().reset_io_counter();
    tank
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concrete_fact_tick_reads_one_partition(subjects in 1usize..8, per in 1usize..4, s in 0usize..10) {
        let tank = populated(subjects, per);
        tank.insert_text(&format!("f(s{s}, 99)")).unwrap();
        let report = tank.tick().unwrap().unwrap();
        prop_assert!(!report.dead);
        prop_assert_eq!(tank.store().io_count(), 1);
    }

    #[test]
    fn concrete_query_reads_one_partition_per_ground_atom(
        subjects in 1usize..8,
        picks in prop::collection::vec(0usize..10, 1..5),
    ) {
        let tank = populated(subjects, 2);
        let text = picks
            .iter()
            .enumerate()
            .map(|(i, s)| format!("d(s{s}, X{i})"))
            .collect::<Vec<_>>()
            .join(", ");
        let goal = parse_query(&text, &tank.declarations()).unwrap();
        let answers = tank.query(&goal, 1).unwrap();
        let all_present = picks.iter().all(|s| *s < subjects);
        prop_assert_eq!(answers.len(), usize::from(all_present));
        // Evaluation stops at the first atom that has no answers.
        let expected = picks.iter().position(|s| *s >= subjects).map_or(picks.len(), |p| p + 1);
        prop_assert_eq!(tank.store().io_count(), expected as u64);
        prop_assert_eq!(tank.store().generic_io_count(), expected as u64);
    }

    #[test]
    fn generic_rule_tick_reads_each_partition_of_its_name(subjects in 0usize..12, per in 1usize..3) {
        let tank = populated(subjects, per);
        tank.insert_text("f(S, J) ~> g(J)").unwrap();
        tank.tick().unwrap().unwrap();
        prop_assert_eq!(tank.store().io_count(), subjects as u64);
    }
}

#[test]
fn fact_query_counts_the_same_way() {
    let tank = populated(4, 2);
    assert_eq!(tank.query_text("f(s2, J), h(s3, K)", 100).unwrap().len(), 4);
    // h(s3, K) is evaluated once for each of the two answers of f(s2, J).
    assert_eq!(tank.store().io_count(), 1 + 2);
}

#[test]
fn concrete_rule_tick_reads_one_partition() {
    let tank = populated(4, 2);
    tank.insert_text("f(s1, J) ~> g(J)").unwrap();
    tank.tick().unwrap().unwrap();
    assert_eq!(tank.store().io_count(), 1);
}
