use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use super::journal::{Journal, Record};
use super::{QueueEntry, StorageError};

#[derive(Debug)]
struct Inner {
    entries: VecDeque<QueueEntry>,
    journal: Option<Journal>,
}

/// FIFO work queue. With a journal, every push is written before it is
/// acknowledged, and a tick's effects are committed in one journal append.
#[derive(Debug)]
pub struct DurableQueue {
    inner: Mutex<Inner>,
    capacity: Option<usize>,
    changed: Condvar,
}

impl DurableQueue {
    pub fn new(capacity: Option<usize>) -> Self {
        DurableQueue::restore(None, VecDeque::new(), capacity)
    }

    pub fn restore(
        journal: Option<Journal>,
        entries: VecDeque<QueueEntry>,
        capacity: Option<usize>,
    ) -> Self {
        DurableQueue {
            inner: Mutex::new(Inner { entries, journal }),
            capacity,
            changed: Condvar::new(),
        }
    }

    /// Installs a journal and the entries replayed from it.
    pub fn attach(&self, journal: Journal, entries: VecDeque<QueueEntry>) {
        let mut inner = self.inner.lock().unwrap();
        inner.journal = Some(journal);
        inner.entries = entries;
        self.changed.notify_all();
    }

    pub fn has_journal(&self) -> bool {
        self.inner.lock().unwrap().journal.is_some()
    }

    /// Appends an acknowledged insert or remove request.
    pub fn push(&self, entry: QueueEntry) -> Result<(), StorageError> {
        let mut inner = self.inner.lock().unwrap();
        if let Some(capacity) = self.capacity {
            if inner.entries.len() >= capacity {
                return Err(StorageError::QueueFull { capacity });
            }
        }
        if let Some(j) = inner.journal.as_mut() {
            j.append(&[Record::Push(entry.clone())])?;
        }
        inner.entries.push_back(entry);
        self.changed.notify_all();
        Ok(())
    }

    /// The entry the next tick will process.
    pub fn front(&self) -> Option<QueueEntry> {
        self.inner.lock().unwrap().entries.front().cloned()
    }

    /// Completes the tick for the head entry: journals `writes` and `pushes`
    /// as one group, pops the head and appends `pushes`. With `dead`, the head
    /// is being dead-lettered instead and `writes`/`pushes` must be empty.
    pub fn commit(
        &self,
        writes: &[QueueEntry],
        pushes: Vec<QueueEntry>,
        dead: bool,
    ) -> Result<QueueEntry, StorageError> {
        let mut inner = self.inner.lock().unwrap();
        if let Some(j) = inner.journal.as_mut() {
            let mut records: Vec<Record> = writes.iter().cloned().map(Record::Write).collect();
            records.extend(pushes.iter().cloned().map(Record::Push));
            records.push(Record::Commit { dead });
            j.append(&records)?;
        }
        let head = inner
            .entries
            .pop_front()
            .expect("commit without a queued entry");
        inner.entries.extend(pushes);
        self.changed.notify_all();
        Ok(head)
    }

    /// Journals a runtime change to declarations or static clauses.
    pub fn define(&self, remove: bool, source: &str) -> Result<(), StorageError> {
        let mut inner = self.inner.lock().unwrap();
        if let Some(j) = inner.journal.as_mut() {
            j.append(&[Record::Define {
                remove,
                source: source.to_string(),
            }])?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> Vec<QueueEntry> {
        self.inner.lock().unwrap().entries.iter().cloned().collect()
    }

    /// Waits until the queue is non-empty or `timeout` passes.
    pub fn wait_nonempty(&self, timeout: Duration) -> bool {
        let inner = self.inner.lock().unwrap();
        let (inner, _) = self
            .changed
            .wait_timeout_while(inner, timeout, |i| i.entries.is_empty())
            .unwrap();
        !inner.entries.is_empty()
    }

    /// Waits until the queue is empty or `timeout` passes.
    pub fn wait_empty(&self, timeout: Duration) -> bool {
        let inner = self.inner.lock().unwrap();
        let (inner, _) = self
            .changed
            .wait_timeout_while(inner, timeout, |i| !i.entries.is_empty())
            .unwrap();
        inner.entries.is_empty()
    }

    pub fn journal_bytes(&self) -> Option<Vec<u8>> {
        let inner = self.inner.lock().unwrap();
        inner
            .journal
            .as_ref()
            .and_then(|j| j.bytes().map(<[u8]>::to_vec))
    }

    pub fn journal_len(&self) -> Option<u64> {
        self.inner
            .lock()
            .unwrap()
            .journal
            .as_ref()
            .map(Journal::len)
    }

    pub fn sync(&self) -> Result<(), StorageError> {
        match self.inner.lock().unwrap().journal.as_mut() {
            Some(j) => j.sync(),
            None => Ok(()),
        }
    }

    /// Notifies waiters without changing the queue, e.g. on shutdown.
    pub fn wake(&self) {
        self.changed.notify_all();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Axiom;
    use crate::storage::journal::replay;
    use crate::term::Term;

    fn e(i: i64) -> QueueEntry {
        QueueEntry::new(Axiom::fact("f", vec![Term::Int(i)]), 1)
    }

    #[test]
    fn fifo_and_capacity() {
        let q = DurableQueue::new(Some(2));
        q.push(e(1)).unwrap();
        q.push(e(2)).unwrap();
        assert!(matches!(
            q.push(e(3)),
            Err(StorageError::QueueFull { capacity: 2 })
        ));
        assert_eq!(q.commit(&[e(1)], vec![e(4), e(5)], false).unwrap(), e(1));
        assert_eq!(q.entries(), [e(2), e(4), e(5)]);
    }

    #[test]
    fn journal_mirrors_queue() {
        let q = DurableQueue::restore(Some(Journal::in_memory()), VecDeque::new(), None);
        q.push(e(1)).unwrap();
        q.push(e(2)).unwrap();
        q.commit(&[e(1)], vec![e(3)], false).unwrap();
        q.commit(&[], vec![], true).unwrap();
        let r = replay(&q.journal_bytes().unwrap()).unwrap();
        assert_eq!(r.queue.iter().cloned().collect::<Vec<_>>(), q.entries());
        assert_eq!(r.dead_letters, [e(2)]);
        assert_eq!(r.standalone_pushes, 2);
    }
}
