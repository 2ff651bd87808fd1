//! Crash at any journal prefix, replay, resubmit what was not acknowledged,
//! and the tank reaches the same state as an uninterrupted run.

use fishtank_core::oracle::gen::{self, Instance, Limits};
use fishtank_core::storage::journal::{record_boundaries, replay};
use fishtank_core::storage::Journal;
use fishtank_core::tank::{Tank, TankConfig};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Runs the instance with a journal, ticking between submissions so that
/// pushes and tick groups interleave. Returns the journal bytes.
fn journaled_run(inst: &Instance, rng: &mut StdRng) -> (Tank, Vec<u8>) {
    let tank = Tank::in_memory_journal(TankConfig::default());
    tank.define(&inst.program).unwrap();
    for (d, a) in &inst.ops {
        tank.submit(a, *d).unwrap();
        for _ in 0..rng.gen_range(0..3) {
            tank.tick().unwrap();
        }
    }
    tank.run_to_quiescence().unwrap();
    let bytes = tank.queue().journal_bytes().unwrap();
    (tank, bytes)
}

fn recover(inst: &Instance, prefix: &[u8]) -> Tank {
    let replayed = replay(prefix).unwrap();
    let acknowledged = replayed.standalone_pushes;
    let lost_definitions = replayed.definitions.is_empty();
    let tank = Tank::with_journal(TankConfig::default(), Journal::in_memory(), replayed).unwrap();
    if lost_definitions {
        tank.define(&inst.program).unwrap();
    }
    for (d, a) in &inst.ops[acknowledged..] {
        tank.submit(a, *d).unwrap();
    }
    tank.run_to_quiescence().unwrap();
    tank
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn any_prefix_recovers_the_uninterrupted_state(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = gen::instance(&mut rng, Limits::default());
        let (live, bytes) = journaled_run(&inst, &mut rng);
        let expected = live.snapshot_counts();
        let boundaries = record_boundaries(&bytes).unwrap();
        prop_assert_eq!(*boundaries.last().unwrap(), bytes.len());
        for i in 0..20 {
            let cut = if i % 4 == 3 {
                rng.gen_range(0..=bytes.len())
            } else {
                boundaries[rng.gen_range(0..boundaries.len())]
            };
            let recovered = recover(&inst, &bytes[..cut]);
            prop_assert_eq!(recovered.snapshot_counts(), expected.clone(), "cut at {}", cut);
        }
    }
}

#[test]
fn full_journal_replays_to_the_live_state() {
    let mut rng = StdRng::seed_from_u64(3);
    let inst = gen::instance(&mut rng, Limits::default());
    let (live, bytes) = journaled_run(&inst, &mut rng);
    let replayed = replay(&bytes).unwrap();
    assert!(replayed.queue.is_empty());
    assert_eq!(replayed.standalone_pushes, inst.ops.len());
    let restored =
        Tank::with_journal(TankConfig::default(), Journal::in_memory(), replayed).unwrap();
    assert_eq!(restored.snapshot_counts(), live.snapshot_counts());
    assert_eq!(restored.stats().ticks, live.stats().ticks);
}

#[test]
fn file_journal_survives_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tank.ftj");
    let mut rng = StdRng::seed_from_u64(4);
    let inst = gen::instance(&mut rng, Limits::default());
    let expected = {
        let (journal, replayed) =
            Journal::open(&path, fishtank_core::storage::FsyncPolicy::Batched).unwrap();
        let tank = Tank::with_journal(TankConfig::default(), journal, replayed).unwrap();
        tank.define(&inst.program).unwrap();
        for (d, a) in &inst.ops {
            tank.submit(a, *d).unwrap();
        }
        tank.run_to_quiescence().unwrap();
        tank.queue().sync().unwrap();
        tank.snapshot_counts()
    };
    let (journal, replayed) =
        Journal::open(&path, fishtank_core::storage::FsyncPolicy::EveryAppend).unwrap();
    let tank = Tank::with_journal(TankConfig::default(), journal, replayed).unwrap();
    assert_eq!(tank.snapshot_counts(), expected);
    assert!(tank.declarations().kind_of("f0").is_some());
}
