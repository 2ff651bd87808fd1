//! The tank: static clauses, the multiplicity store and the work queue.
//!
//! Inserting or removing an axiom only enqueues a signed request. Each tick
//! takes the queue head, pairs it with every stored counterpart of the same
//! fact-name, enqueues the derived axioms with the product of the two
//! multiplicities, and then adds the head to the store. Ticks are atomic:
//! the store write, the derived pushes and the pop are journaled as one
//! group.

mod derive;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use thiserror::Error;

use crate::lang::{
    parse_item, parse_program_with, validate_axiom, validate_static_clause, Axiom, Declarations,
    Item, LangError, StaticClause,
};
use crate::static_engine::{SolveError, StaticDb, DEFAULT_BUDGET};
use crate::storage::{
    DurableQueue, Journal, Partition, PartitionStore, QueueEntry, Replayed, StorageError,
};

pub use derive::derive;

#[derive(Debug, Clone)]
pub struct TankConfig {
    /// Resolution steps allowed per guard evaluation.
    pub solve_budget: u64,
    /// Bound on externally submitted entries waiting in the queue.
    pub queue_capacity: Option<usize>,
    /// Default tick limit for `quiesce`.
    pub max_quiesce_ticks: u64,
}

impl Default for TankConfig {
    fn default() -> Self {
        TankConfig {
            solve_budget: DEFAULT_BUDGET,
            queue_capacity: None,
            max_quiesce_ticks: 1_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum TankError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("not quiescent after {ticks} ticks; {pending} entries still queued")]
    NotQuiescent { ticks: u64, pending: usize },
    #[error("{0}")]
    Unsupported(String),
}

/// A queue entry whose tick failed and was dropped without effect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeadLetter {
    pub entry: QueueEntry,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TickReport {
    pub entry: QueueEntry,
    pub derived: usize,
    pub dead: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stats {
    pub queue_len: usize,
    pub ticks: u64,
    pub io_count: u64,
    pub generic_io_count: u64,
    pub partitions: usize,
    pub generic_entries: usize,
    pub static_clauses: usize,
    pub dead_letters: usize,
    pub last_error: Option<String>,
}

/// What `load_program` did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub declarations: usize,
    pub static_clauses: usize,
    pub axioms: usize,
}

#[derive(Debug)]
pub struct Tank {
    decls: RwLock<Declarations>,
    static_db: RwLock<Arc<StaticDb>>,
    store: PartitionStore,
    queue: DurableQueue,
    dead: Mutex<Vec<DeadLetter>>,
    last_error: Mutex<Option<String>>,
    ticks: AtomicU64,
    tick_lock: Mutex<()>,
    config: TankConfig,
}

impl Tank {
    /// An empty tank with the standard declarations and prelude, no journal.
    pub fn new(config: TankConfig) -> Tank {
        Tank {
            decls: RwLock::new(Declarations::standard()),
            static_db: RwLock::new(Arc::new(StaticDb::with_prelude())),
            store: PartitionStore::new(),
            queue: DurableQueue::new(config.queue_capacity),
            dead: Mutex::new(Vec::new()),
            last_error: Mutex::new(None),
            ticks: AtomicU64::new(0),
            tick_lock: Mutex::new(()),
            config,
        }
    }

    /// An empty tank journaling into memory.
    pub fn in_memory_journal(config: TankConfig) -> Tank {
        Tank::with_journal(config, Journal::in_memory(), Replayed::default())
            .expect("an empty journal replays cleanly")
    }

    /// Rebuilds a tank from replayed journal state and keeps journaling
    /// into `journal`.
    pub fn with_journal(
        config: TankConfig,
        journal: Journal,
        replayed: Replayed,
    ) -> Result<Tank, TankError> {
        let tank = Tank::new(config);
        for (remove, source) in &replayed.definitions {
            tank.apply_definitions(source, *remove, false)?;
        }
        for (axiom, mult) in replayed.store {
            tank.store.add(axiom, mult);
        }
        tank.store.reset_io_counter();
        let ticks = replayed.ticks + replayed.dead_letters.len() as u64;
        *tank.dead.lock().unwrap() = replayed
            .dead_letters
            .into_iter()
            .map(|entry| DeadLetter {
                entry,
                error: "dead-lettered before restart".into(),
            })
            .collect();
        tank.ticks.store(ticks, Ordering::SeqCst);
        tank.queue.attach(journal, replayed.queue);
        Ok(tank)
    }

    pub fn config(&self) -> &TankConfig {
        &self.config
    }

    pub fn declarations(&self) -> Declarations {
        self.decls.read().unwrap().clone()
    }

    pub fn static_db(&self) -> Arc<StaticDb> {
        self.static_db.read().unwrap().clone()
    }

    pub fn store(&self) -> &PartitionStore {
        &self.store
    }

    pub fn queue(&self) -> &DurableQueue {
        &self.queue
    }

    /// Adds declarations and static clauses. Axioms are rejected.
    pub fn define(&self, text: &str) -> Result<usize, TankError> {
        self.apply_definitions(text, false, true)
    }

    /// Removes static clauses given in source form.
    pub fn undefine(&self, text: &str) -> Result<usize, TankError> {
        self.apply_definitions(text, true, true)
    }

    fn apply_definitions(
        &self,
        text: &str,
        remove: bool,
        journal: bool,
    ) -> Result<usize, TankError> {
        let mut decls = self.decls.write().unwrap();
        let mut next = decls.clone();
        let items = parse_program_with(text, &mut next)?;
        if items.iter().any(|i| matches!(i, Item::Axiom(_))) {
            return Err(TankError::Unsupported(
                "definitions may only contain declarations and static clauses".into(),
            ));
        }
        if remove && items.iter().any(|i| matches!(i, Item::Decl(_))) {
            return Err(TankError::Unsupported(
                "declarations cannot be removed".into(),
            ));
        }
        if items.is_empty() {
            return Ok(0);
        }
        if journal {
            self.queue.define(remove, &print_items(&items))?;
        }
        let mut db = StaticDb::clone(&self.static_db());
        for item in &items {
            if let Item::Static(c) = item {
                if remove {
                    db.remove(c);
                } else {
                    db.add(c.clone());
                }
            }
        }
        if !remove {
            *decls = next;
        }
        *self.static_db.write().unwrap() = Arc::new(db);
        Ok(items.len())
    }

    /// Loads a program: its definitions are applied first and its axioms
    /// are then submitted for insertion in source order. Nothing is applied
    /// if the program does not parse.
    pub fn load_program(&self, text: &str) -> Result<LoadReport, TankError> {
        let mut decls = self.declarations();
        let items = parse_program_with(text, &mut decls)?;
        let (axioms, defs): (Vec<Item>, Vec<Item>) =
            items.into_iter().partition(|i| matches!(i, Item::Axiom(_)));
        let mut report = LoadReport::default();
        for item in &defs {
            match item {
                Item::Decl(_) => report.declarations += 1,
                _ => report.static_clauses += 1,
            }
        }
        if !defs.is_empty() {
            self.define(&print_items(&defs))?;
        }
        for item in axioms {
            if let Item::Axiom(a) = item {
                self.submit(&a, 1)?;
                report.axioms += 1;
            }
        }
        Ok(report)
    }

    pub fn insert(&self, axiom: &Axiom) -> Result<(), TankError> {
        self.submit(axiom, 1)
    }

    pub fn remove(&self, axiom: &Axiom) -> Result<(), TankError> {
        self.submit(axiom, -1)
    }

    /// Validates `axiom` and enqueues a request to change its multiplicity.
    pub fn submit(&self, axiom: &Axiom, delta: i64) -> Result<(), TankError> {
        validate_axiom(&self.decls.read().unwrap(), axiom)?;
        self.queue.push(QueueEntry::new(axiom.normalize(), delta))?;
        Ok(())
    }

    /// Inserts one statement given in source form. Static clauses and
    /// declarations are applied as definitions.
    pub fn insert_text(&self, text: &str) -> Result<Item, TankError> {
        self.submit_text(text, 1)
    }

    /// Removes one statement given in source form.
    pub fn remove_text(&self, text: &str) -> Result<Item, TankError> {
        self.submit_text(text, -1)
    }

    fn submit_text(&self, text: &str, delta: i64) -> Result<Item, TankError> {
        let mut decls = self.declarations();
        let mut items = parse_item(text, &mut decls)?;
        if items.len() != 1 {
            return Err(TankError::Unsupported(
                "expected exactly one axiom or clause".into(),
            ));
        }
        let item = items.remove(0);
        match &item {
            Item::Axiom(a) => self.submit(a, delta)?,
            Item::Static(_) | Item::Decl(_) => {
                self.apply_definitions(&item.to_string(), delta < 0, true)?;
            }
        }
        Ok(item)
    }

    /// Adds a static clause built programmatically.
    pub fn add_static(&self, clause: &StaticClause) -> Result<(), TankError> {
        validate_static_clause(&self.decls.read().unwrap(), clause)?;
        self.apply_definitions(&format!("{clause}."), false, true)?;
        Ok(())
    }

    /// Processes the queue head. Returns `None` when the queue is empty.
    pub fn tick(&self) -> Result<Option<TickReport>, TankError> {
        let _serial = self.tick_lock.lock().unwrap();
        let Some(entry) = self.queue.front() else {
            return Ok(None);
        };
        let db = self.static_db();
        let outcome = match entry.axiom.subject() {
            Some(key) => self.store.update_partition(&key, |part| {
                let mut counterparts = counterparts_in(part, &entry.axiom);
                if !entry.axiom.is_clause() {
                    self.store.read_generic(|g| {
                        counterparts.extend(counterparts_in(g, &entry.axiom));
                    });
                }
                self.finish_tick(&entry, &counterparts, &db, part)
            }),
            None => {
                let mut counterparts = Vec::new();
                if !entry.axiom.is_clause() {
                    for key in self.store.scan_by_name(&entry.axiom.name_key()) {
                        self.store.read_partition(&key, |p| {
                            counterparts.extend(counterparts_in(p, &entry.axiom));
                        });
                    }
                }
                self.store.update_generic(|g| {
                    counterparts.extend(counterparts_in(g, &entry.axiom));
                    self.finish_tick(&entry, &counterparts, &db, g)
                })
            }
        }?;
        self.ticks.fetch_add(1, Ordering::SeqCst);
        Ok(Some(match outcome {
            Ok(derived) => TickReport {
                entry,
                derived,
                dead: false,
            },
            Err(e) => {
                let error = e.to_string();
                self.dead.lock().unwrap().push(DeadLetter {
                    entry: entry.clone(),
                    error: error.clone(),
                });
                *self.last_error.lock().unwrap() = Some(error);
                TickReport {
                    entry,
                    derived: 0,
                    dead: true,
                }
            }
        }))
    }

    /// Derives against `counterparts`, commits the tick and applies the
    /// entry to `part`. A guard failure dead-letters the entry instead.
    fn finish_tick(
        &self,
        entry: &QueueEntry,
        counterparts: &[(Axiom, i64)],
        db: &StaticDb,
        part: &mut Partition,
    ) -> Result<Result<usize, SolveError>, StorageError> {
        let mut pushes = Vec::new();
        for (beta, mult) in counterparts {
            match derive(&entry.axiom, beta, db, self.config.solve_budget) {
                Ok(derived) => pushes.extend(
                    derived
                        .into_iter()
                        .map(|a| QueueEntry::new(a, entry.delta * mult)),
                ),
                Err(e) => {
                    self.queue.commit(&[], Vec::new(), true)?;
                    return Ok(Err(e));
                }
            }
        }
        let n = pushes.len();
        self.queue
            .commit(std::slice::from_ref(entry), pushes, false)?;
        part.add(entry.axiom.clone(), entry.delta);
        Ok(Ok(n))
    }

    /// Ticks until the queue is empty, at most `max_ticks` times.
    /// Returns the number of ticks run.
    pub fn quiesce(&self, max_ticks: u64) -> Result<u64, TankError> {
        let mut n = 0;
        while n < max_ticks {
            if self.tick()?.is_none() {
                return Ok(n);
            }
            n += 1;
        }
        if self.queue.is_empty() {
            Ok(n)
        } else {
            Err(TankError::NotQuiescent {
                ticks: n,
                pending: self.queue.len(),
            })
        }
    }

    /// `quiesce` with the configured tick limit.
    pub fn run_to_quiescence(&self) -> Result<u64, TankError> {
        self.quiesce(self.config.max_quiesce_ticks)
    }

    /// Every stored axiom with its multiplicity.
    pub fn snapshot_counts(&self) -> BTreeMap<Axiom, i64> {
        self.store.snapshot()
    }

    pub fn dead_letters(&self) -> Vec<DeadLetter> {
        self.dead.lock().unwrap().clone()
    }

    pub fn stats(&self) -> Stats {
        Stats {
            queue_len: self.queue.len(),
            ticks: self.ticks.load(Ordering::SeqCst),
            io_count: self.store.io_count(),
            generic_io_count: self.store.generic_io_count(),
            partitions: self.store.partition_count(),
            generic_entries: self.store.generic_len(),
            static_clauses: self.static_db().len(),
            dead_letters: self.dead.lock().unwrap().len(),
            last_error: self.last_error.lock().unwrap().clone(),
        }
    }

    /// Waits until the queue is empty and no tick is in flight, or
    /// `timeout` passes.
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        if !self.queue.wait_empty(timeout) {
            return false;
        }
        let _serial = self.tick_lock.lock().unwrap();
        self.queue.is_empty()
    }

    /// Starts a background thread that ticks whenever the queue is non-empty.
    pub fn spawn_worker(self: &Arc<Self>) -> Worker {
        let stop = Arc::new(AtomicBool::new(false));
        let tank = self.clone();
        let flag = stop.clone();
        let handle = thread::spawn(move || {
            while !flag.load(Ordering::SeqCst) {
                if !tank.queue.wait_nonempty(Duration::from_millis(50)) {
                    continue;
                }
                if let Err(e) = tank.tick() {
                    *tank.last_error.lock().unwrap() = Some(e.to_string());
                    thread::sleep(Duration::from_millis(100));
                }
            }
        });
        Worker {
            stop,
            tank: self.clone(),
            handle: Some(handle),
        }
    }
}

/// Stored entries of `alpha`'s group that can pair with it.
fn counterparts_in(part: &Partition, alpha: &Axiom) -> Vec<(Axiom, i64)> {
    if alpha.is_clause() {
        return Vec::new();
    }
    part.group(&alpha.name_key())
        .filter(|(beta, _)| beta.is_rule() != alpha.is_rule() && !beta.is_clause())
        .map(|(beta, m)| (beta.clone(), m))
        .collect()
}

fn print_items(items: &[Item]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Background tick thread; stopped and joined on drop.
#[derive(Debug)]
pub struct Worker {
    stop: Arc<AtomicBool>,
    tank: Arc<Tank>,
    handle: Option<JoinHandle<()>>,
}

impl Worker {
    /// Waits until the queue is empty or `timeout` passes.
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        self.tank.wait_idle(timeout)
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.tank.queue.wake();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::journal::replay;

    const PROGRAM: &str = "
        :- fact f/1, g/1, h/2.
        :- dynamic t/1.
        :- static p/1.
        p(1). p(2).
        f(X) { p(Y) } ~> h(X, Y).
        h(X, Y) ~> g(Y).
    ";

    fn counts(tank: &Tank) -> Vec<(String, i64)> {
        tank.snapshot_counts()
            .into_iter()
            .map(|(a, m)| (a.to_string(), m))
            .collect()
    }

    fn count_of(tank: &Tank, text: &str) -> i64 {
        counts(tank)
            .into_iter()
            .find(|(a, _)| a == text)
            .map(|(_, m)| m)
            .unwrap_or(0)
    }

    #[test]
    fn propagates_to_quiescence_with_multiplicities() {
        let tank = Tank::new(TankConfig::default());
        tank.load_program(PROGRAM).unwrap();
        tank.insert_text("f(5)").unwrap();
        tank.insert_text("f(6)").unwrap();
        tank.run_to_quiescence().unwrap();
        assert_eq!(count_of(&tank, "h(5, 1)"), 1);
        assert_eq!(count_of(&tank, "g(1)"), 2);
        assert_eq!(count_of(&tank, "g(2)"), 2);
        tank.remove_text("f(5)").unwrap();
        tank.run_to_quiescence().unwrap();
        assert_eq!(count_of(&tank, "g(1)"), 1);
        assert_eq!(count_of(&tank, "h(5, 1)"), 0);
    }

    #[test]
    fn rule_after_fact_derives_the_same() {
        let tank = Tank::new(TankConfig::default());
        tank.define(":- fact f/1, g/1.").unwrap();
        tank.insert_text("f(1)").unwrap();
        tank.run_to_quiescence().unwrap();
        tank.insert_text("f(X) ~> g(X)").unwrap();
        tank.run_to_quiescence().unwrap();
        assert_eq!(count_of(&tank, "g(1)"), 1);
    }

    #[test]
    fn concrete_fact_tick_is_one_partition_access() {
        let tank = Tank::new(TankConfig::default());
        tank.load_program(PROGRAM).unwrap();
        tank.run_to_quiescence().unwrap();
        tank.store().reset_io_counter();
        tank.insert_text("g(9)").unwrap();
        tank.tick().unwrap().unwrap();
        assert_eq!(tank.store().io_count(), 1);
    }

    #[test]
    fn generic_rule_reads_each_partition_of_its_name() {
        let tank = Tank::new(TankConfig::default());
        tank.define(":- fact g/1, k/1.").unwrap();
        for i in 0..5 {
            tank.insert_text(&format!("g({i})")).unwrap();
        }
        tank.run_to_quiescence().unwrap();
        tank.store().reset_io_counter();
        tank.insert_text("g(X) ~> k(X)").unwrap();
        tank.tick().unwrap().unwrap();
        assert_eq!(tank.store().io_count(), 5);
    }

    #[test]
    fn failing_guard_dead_letters_the_entry() {
        let tank = Tank::new(TankConfig {
            solve_budget: 200,
            ..TankConfig::default()
        });
        tank.define(":- fact f/1, g/1. :- static spin/0. spin :- spin.")
            .unwrap();
        tank.insert_text("f(X) { spin } ~> g(X)").unwrap();
        tank.insert_text("f(1)").unwrap();
        tank.run_to_quiescence().unwrap();
        let dead = tank.dead_letters();
        assert_eq!(dead.len(), 1);
        assert_eq!(dead[0].entry.axiom.to_string(), "f(1)");
        assert_eq!(count_of(&tank, "f(1)"), 0);
        assert_eq!(tank.stats().dead_letters, 1);
    }

    #[test]
    fn rejects_undeclared_and_non_definitions() {
        let tank = Tank::new(TankConfig::default());
        assert!(matches!(
            tank.insert_text("nope(1)"),
            Err(TankError::Lang(_))
        ));
        tank.define(":- fact f/1.").unwrap();
        assert!(matches!(
            tank.define("f(1)."),
            Err(TankError::Unsupported(_))
        ));
        assert!(tank.load_program(":- fact q/1. q(1). bad(").is_err());
        assert!(tank.declarations().kind_of("q").is_none());
    }

    #[test]
    fn quiesce_reports_a_non_terminating_program() {
        let tank = Tank::new(TankConfig::default());
        tank.define(":- fact n/1.").unwrap();
        tank.insert_text("n(X) ~> n(s(X))").unwrap();
        tank.insert_text("n(z)").unwrap();
        assert!(matches!(
            tank.quiesce(50),
            Err(TankError::NotQuiescent { ticks: 50, .. })
        ));
    }

    #[test]
    fn journal_restores_state_definitions_and_queue() {
        let tank = Tank::in_memory_journal(TankConfig::default());
        tank.load_program(PROGRAM).unwrap();
        tank.insert_text("f(5)").unwrap();
        tank.quiesce(3).unwrap_err();
        let bytes = tank.queue().journal_bytes().unwrap();
        let replayed = replay(&bytes).unwrap();
        let restored =
            Tank::with_journal(TankConfig::default(), Journal::in_memory(), replayed).unwrap();
        assert_eq!(restored.queue().entries(), tank.queue().entries());
        assert_eq!(restored.snapshot_counts(), tank.snapshot_counts());
        restored.run_to_quiescence().unwrap();
        tank.run_to_quiescence().unwrap();
        assert_eq!(restored.snapshot_counts(), tank.snapshot_counts());
        assert_eq!(restored.static_db().len(), tank.static_db().len());
    }

    #[test]
    fn worker_drains_the_queue() {
        let tank = Arc::new(Tank::new(TankConfig::default()));
        tank.load_program(PROGRAM).unwrap();
        let worker = tank.spawn_worker();
        tank.insert_text("f(3)").unwrap();
        assert!(worker.wait_idle(Duration::from_secs(5)));
        drop(worker);
        assert_eq!(count_of(&tank, "g(2)"), 1);
    }

    #[test]
    fn static_clauses_can_be_removed() {
        let tank = Tank::new(TankConfig::default());
        tank.load_program(PROGRAM).unwrap();
        let before = tank.static_db().len();
        tank.remove_text("p(2)").unwrap();
        assert_eq!(tank.static_db().len(), before - 1);
    }
}
