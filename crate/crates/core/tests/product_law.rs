//! A fact of multiplicity n meeting a rule of multiplicity m contributes
//! n·m to every consequence, once per guard solution.

use fishtank_core::lang::parse_item;
use fishtank_core::lang::Item;
use fishtank_core::tank::{Tank, TankConfig};
use proptest::prelude::*;

const DECLS: &str = ":- fact f/1, g/2, h/2.";

fn submit(tank: &Tank, text: &str, delta: i64) {
    let Item::Axiom(a) = parse_item(text, &mut tank.declarations())
        .unwrap()
        .remove(0)
    else {
        panic!("{text} is not an axiom");
    };
    tank.submit(&a, delta).unwrap();
}

fn count(tank: &Tank, text: &str) -> i64 {
    let Item::Axiom(a) = parse_item(text, &mut tank.declarations())
        .unwrap()
        .remove(0)
    else {
        unreachable!()
    };
    tank.snapshot_counts()
        .get(&a.normalize())
        .copied()
        .unwrap_or(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn contribution_is_n_times_m_per_solution(
        n in -4i64..=4,
        m in -4i64..=4,
        k in 0usize..6,
        rule_first in any::<bool>(),
    ) {
        let tank = Tank::new(TankConfig::default());
        tank.define(DECLS).unwrap();
        let solutions: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
        let rule = format!("f(X) {{ member(Y, [{}]) }} ~> g(X, Y)", solutions.join(", "));
        if rule_first {
            submit(&tank, &rule, m);
            submit(&tank, "f(a)", n);
        } else {
            submit(&tank, "f(a)", n);
            submit(&tank, &rule, m);
        }
        tank.run_to_quiescence().unwrap();
        for y in &solutions {
            prop_assert_eq!(count(&tank, &format!("g(a, {y})")), n * m);
        }
        let derived: i64 = tank
            .snapshot_counts()
            .iter()
            .filter(|(a, _)| &*a.key_atom().pred == "g")
            .map(|(_, c)| c.abs())
            .sum();
        prop_assert_eq!(derived, (n * m).abs() * k as i64);
    }

    #[test]
    fn law_composes_through_rule_chains(n in 1i64..4, m1 in 1i64..4, m2 in 1i64..4) {
        let tank = Tank::new(TankConfig::default());
        tank.define(DECLS).unwrap();
        submit(&tank, "f(X) { member(Y, [p, q]) } ~> g(X, Y)", m1);
        submit(&tank, "g(X, Y) ~> h(X, Y)", m2);
        submit(&tank, "f(a)", n);
        tank.run_to_quiescence().unwrap();
        prop_assert_eq!(count(&tank, "h(a, p)"), n * m1 * m2);
        prop_assert_eq!(count(&tank, "h(a, q)"), n * m1 * m2);
    }
}
