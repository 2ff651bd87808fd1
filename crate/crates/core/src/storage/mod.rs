//! Subject-partitioned axiom store, durable work queue and journal.
//!
//! Concrete axioms live in the partition of their subject; generic axioms
//! live in a separate generic section. Every `read_partition` and
//! `update_partition` call counts as one partition access on the I/O
//! counter; the generic section is tracked by its own counter.

pub mod codec;
pub mod journal;
mod queue;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use indexmap::IndexMap;
use thiserror::Error;

use crate::lang::{Axiom, NameKey};
use crate::term::SubjectKey;

pub use journal::{FsyncPolicy, Journal, Replayed};
pub use queue::DurableQueue;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("journal I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt journal at byte {offset}: {reason}")]
    CorruptJournal { offset: u64, reason: String },
    #[error("work queue is full ({capacity} entries)")]
    QueueFull { capacity: usize },
}

/// A pending request to change an axiom's multiplicity by `delta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueEntry {
    pub axiom: Axiom,
    pub delta: i64,
}

impl QueueEntry {
    pub fn new(axiom: Axiom, delta: i64) -> Self {
        QueueEntry { axiom, delta }
    }
}

/// Axioms with non-zero multiplicities, grouped by fact-name or predicate
/// name and kept in insertion order within a group.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    groups: BTreeMap<NameKey, IndexMap<Axiom, i64>>,
}

impl Partition {
    /// Adds `delta` to the multiplicity of `axiom`, pruning it at zero.
    /// Returns the new multiplicity.
    pub fn add(&mut self, axiom: Axiom, delta: i64) -> i64 {
        let key = axiom.name_key();
        let group = self.groups.entry(key.clone()).or_default();
        let mult = group.entry(axiom).or_insert(0);
        *mult += delta;
        let now = *mult;
        if now == 0 {
            group.retain(|_, m| *m != 0);
            if group.is_empty() {
                self.groups.remove(&key);
            }
        }
        now
    }

    pub fn get(&self, axiom: &Axiom) -> i64 {
        self.groups
            .get(&axiom.name_key())
            .and_then(|g| g.get(axiom))
            .copied()
            .unwrap_or(0)
    }

    /// Entries of one group, in insertion order.
    pub fn group(&self, key: &NameKey) -> impl Iterator<Item = (&Axiom, i64)> + '_ {
        self.groups
            .get(key)
            .into_iter()
            .flat_map(|g| g.iter().map(|(a, m)| (a, *m)))
    }

    /// All entries: by group, then insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&Axiom, i64)> + '_ {
        self.groups
            .values()
            .flat_map(|g| g.iter().map(|(a, m)| (a, *m)))
    }

    pub fn names(&self) -> impl Iterator<Item = &NameKey> + '_ {
        self.groups.keys()
    }

    pub fn len(&self) -> usize {
        self.groups.values().map(IndexMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Partition map plus generic section. Updates to one partition are
/// serialized; distinct partitions are independent.
#[derive(Debug, Default)]
pub struct PartitionStore {
    partitions: RwLock<HashMap<SubjectKey, Arc<Mutex<Partition>>>>,
    by_name: RwLock<HashMap<NameKey, BTreeSet<SubjectKey>>>,
    generic: RwLock<Partition>,
    io: AtomicU64,
    generic_io: AtomicU64,
}

impl PartitionStore {
    pub fn new() -> Self {
        PartitionStore::default()
    }

    fn slot(&self, key: &SubjectKey) -> Arc<Mutex<Partition>> {
        if let Some(p) = self.partitions.read().unwrap().get(key) {
            return p.clone();
        }
        self.partitions
            .write()
            .unwrap()
            .entry(key.clone())
            .or_default()
            .clone()
    }

    /// Runs `f` on a consistent view of one partition. Counts one access.
    pub fn read_partition<R>(&self, key: &SubjectKey, f: impl FnOnce(&Partition) -> R) -> R {
        self.io.fetch_add(1, Ordering::SeqCst);
        let slot = self.partitions.read().unwrap().get(key).cloned();
        match slot {
            Some(slot) => f(&slot.lock().unwrap()),
            None => f(&Partition::default()),
        }
    }

    /// Runs `f` with exclusive access to one partition. Counts one access.
    pub fn update_partition<R>(&self, key: &SubjectKey, f: impl FnOnce(&mut Partition) -> R) -> R {
        self.io.fetch_add(1, Ordering::SeqCst);
        let slot = self.slot(key);
        let mut part = slot.lock().unwrap();
        let before: BTreeSet<NameKey> = part.names().cloned().collect();
        let r = f(&mut part);
        let after: BTreeSet<NameKey> = part.names().cloned().collect();
        if before != after {
            let mut index = self.by_name.write().unwrap();
            for gone in before.difference(&after) {
                if let Some(keys) = index.get_mut(gone) {
                    keys.remove(key);
                    if keys.is_empty() {
                        index.remove(gone);
                    }
                }
            }
            for new in after.difference(&before) {
                index.entry(new.clone()).or_default().insert(key.clone());
            }
        }
        r
    }

    /// Partitions currently holding entries of `name`, in key order.
    /// Consulting the index does not count as a partition access.
    pub fn scan_by_name(&self, name: &NameKey) -> Vec<SubjectKey> {
        self.by_name
            .read()
            .unwrap()
            .get(name)
            .map(|keys| keys.iter().cloned().collect())
            .unwrap_or_default()
    }

    pub fn has_concrete(&self, name: &NameKey) -> bool {
        self.by_name.read().unwrap().contains_key(name)
    }

    pub fn read_generic<R>(&self, f: impl FnOnce(&Partition) -> R) -> R {
        self.generic_io.fetch_add(1, Ordering::SeqCst);
        f(&self.generic.read().unwrap())
    }

    pub fn update_generic<R>(&self, f: impl FnOnce(&mut Partition) -> R) -> R {
        self.generic_io.fetch_add(1, Ordering::SeqCst);
        f(&mut self.generic.write().unwrap())
    }

    /// Adds to the partition the axiom belongs to.
    pub fn add(&self, axiom: Axiom, delta: i64) -> i64 {
        match axiom.subject() {
            Some(key) => self.update_partition(&key, |p| p.add(axiom, delta)),
            None => self.update_generic(|p| p.add(axiom, delta)),
        }
    }

    pub fn io_count(&self) -> u64 {
        self.io.load(Ordering::SeqCst)
    }

    pub fn generic_io_count(&self) -> u64 {
        self.generic_io.load(Ordering::SeqCst)
    }

    pub fn reset_io_counter(&self) {
        self.io.store(0, Ordering::SeqCst);
        self.generic_io.store(0, Ordering::SeqCst);
    }

    /// Every stored entry with its multiplicity. Not counted as I/O.
    pub fn snapshot(&self) -> BTreeMap<Axiom, i64> {
        let mut out = BTreeMap::new();
        for slot in self.partitions.read().unwrap().values() {
            for (a, m) in slot.lock().unwrap().iter() {
                out.insert(a.clone(), m);
            }
        }
        for (a, m) in self.generic.read().unwrap().iter() {
            out.insert(a.clone(), m);
        }
        out
    }

    /// Number of non-empty partitions.
    pub fn partition_count(&self) -> usize {
        self.partitions
            .read()
            .unwrap()
            .values()
            .filter(|p| !p.lock().unwrap().is_empty())
            .count()
    }

    pub fn generic_len(&self) -> usize {
        self.generic.read().unwrap().len()
    }

    pub fn clear(&self) {
        self.partitions.write().unwrap().clear();
        self.by_name.write().unwrap().clear();
        *self.generic.write().unwrap() = Partition::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{canonical_encode, Term};
    use std::thread;

    fn fact(name: &str, args: Vec<Term>) -> Axiom {
        Axiom::fact(name, args)
    }

    #[test]
    fn partition_prunes_zero() {
        let mut p = Partition::default();
        let f = fact("f", vec![Term::Int(1)]);
        assert_eq!(p.add(f.clone(), 1), 1);
        assert_eq!(p.add(f.clone(), -1), 0);
        assert!(p.is_empty());
        assert_eq!(p.add(f.clone(), -1), -1);
        assert_eq!(p.get(&f), -1);
    }

    #[test]
    fn group_order_is_insertion_order() {
        let mut p = Partition::default();
        for i in [3, 1, 2] {
            p.add(fact("f", vec![Term::Int(i)]), 1);
        }
        p.add(fact("f", vec![Term::Int(1)]), -1);
        p.add(fact("f", vec![Term::Int(1)]), 1);
        let order: Vec<String> = p
            .group(&("f".into(), 1))
            .map(|(a, _)| a.to_string())
            .collect();
        assert_eq!(order, ["f(3)", "f(2)", "f(1)"]);
    }

    #[test]
    fn io_counter_counts_each_access_once() {
        let s = PartitionStore::new();
        let key = canonical_encode(&Term::Int(1)).unwrap();
        assert_eq!(s.io_count(), 0);
        s.update_partition(&key, |p| p.add(fact("f", vec![Term::Int(1)]), 1));
        assert_eq!(s.io_count(), 1);
        s.read_partition(&key, |p| p.len());
        assert_eq!(s.io_count(), 2);
        s.read_generic(|p| p.len());
        assert_eq!(s.io_count(), 2);
        s.reset_io_counter();
        assert_eq!(s.io_count(), 0);
    }

    #[test]
    fn name_index_tracks_contents() {
        let s = PartitionStore::new();
        let f1 = fact("f", vec![Term::Int(1)]);
        let f2 = fact("f", vec![Term::Int(2)]);
        s.add(f1.clone(), 1);
        s.add(f2.clone(), 1);
        let name: NameKey = ("f".into(), 1);
        assert_eq!(s.scan_by_name(&name).len(), 2);
        s.add(f1, -1);
        assert_eq!(s.scan_by_name(&name).len(), 1);
        s.add(f2, -1);
        assert!(!s.has_concrete(&name));
        assert_eq!(s.partition_count(), 0);
    }

    #[test]
    fn generic_axioms_go_to_the_generic_section() {
        let s = PartitionStore::new();
        s.add(fact("f", vec![Term::var("X")]), 2);
        s.add(fact("z", vec![]), 1);
        assert_eq!(s.generic_len(), 2);
        assert_eq!(s.partition_count(), 0);
        assert_eq!(s.snapshot().len(), 2);
    }

    #[test]
    fn concurrent_updates_to_one_key_are_not_lost() {
        let s = Arc::new(PartitionStore::new());
        let key = canonical_encode(&Term::Int(7)).unwrap();
        let f = fact("f", vec![Term::Int(7)]);
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (s, key, f) = (s.clone(), key.clone(), f.clone());
                thread::spawn(move || {
                    for _ in 0..500 {
                        s.update_partition(&key, |p| {
                            let m = p.get(&f);
                            thread::yield_now();
                            p.add(f.clone(), 1);
                            assert_eq!(p.get(&f), m + 1);
                        });
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(s.snapshot()[&f], 4000);
        assert_eq!(s.io_count(), 4000);
    }
}
