//! Append-only journal of queue and store operations.
//!
//! File layout: the 4-byte header `FTJ1`, then records of the form
//! `tag: u8 | length: u32 BE | payload | crc32: u32 BE`, the checksum
//! covering tag, length and payload.
//!
//! | tag    | record        | payload                                   |
//! |--------|---------------|-------------------------------------------|
//! | `0x10` | push          | axiom, delta (i64 BE)                     |
//! | `0x11` | pop-commit    | one byte: 0 processed, 1 dead-lettered    |
//! | `0x12` | partition-write | axiom, delta (i64 BE)                   |
//! | `0x13` | definition    | one byte: 0 add, 1 remove; UTF-8 source   |
//!
//! A tick is journaled as one group `0x12, 0x10*, 0x11` written in a single
//! append. Replay applies a group only once its `0x11` is present, so a
//! crash mid-tick leaves the popped entry at the head of the queue. A push
//! outside a group is an acknowledged insert or remove.

use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

use indexmap::IndexMap;

use super::codec::{decode_entry, encode_entry};
use super::{QueueEntry, StorageError};
use crate::lang::Axiom;

pub const MAGIC: &[u8; 4] = b"FTJ1";
pub const TAG_PUSH: u8 = 0x10;
pub const TAG_COMMIT: u8 = 0x11;
pub const TAG_WRITE: u8 = 0x12;
pub const TAG_DEFINE: u8 = 0x13;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Push(QueueEntry),
    Commit { dead: bool },
    Write(QueueEntry),
    Define { remove: bool, source: String },
}

impl Record {
    pub fn encode(&self, out: &mut Vec<u8>) {
        let (tag, payload) = match self {
            Record::Push(e) => (TAG_PUSH, encode_entry(&e.axiom, e.delta)),
            Record::Write(e) => (TAG_WRITE, encode_entry(&e.axiom, e.delta)),
            Record::Commit { dead } => (TAG_COMMIT, vec![*dead as u8]),
            Record::Define { remove, source } => {
                let mut p = vec![*remove as u8];
                p.extend_from_slice(source.as_bytes());
                (TAG_DEFINE, p)
            }
        };
        let start = out.len();
        out.push(tag);
        out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&payload);
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_be_bytes());
    }
}

/// When to force journal writes to stable storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FsyncPolicy {
    /// `fsync` after every append, before the caller is acknowledged.
    #[default]
    EveryAppend,
    /// Leave flushing to the OS; `Journal::sync` forces it.
    Batched,
}

#[derive(Debug)]
enum Sink {
    Memory(Vec<u8>),
    File(File),
}

#[derive(Debug)]
pub struct Journal {
    sink: Sink,
    policy: FsyncPolicy,
    len: u64,
}

impl Journal {
    pub fn in_memory() -> Self {
        Journal {
            sink: Sink::Memory(MAGIC.to_vec()),
            policy: FsyncPolicy::Batched,
            len: MAGIC.len() as u64,
        }
    }

    /// Opens or creates a journal file. An existing journal is replayed, and
    /// any incomplete tail is cut off before new records are appended.
    pub fn open(path: &Path, policy: FsyncPolicy) -> Result<(Journal, Replayed), StorageError> {
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let replayed = if bytes.is_empty() {
            file.write_all(MAGIC)?;
            file.sync_all()?;
            Replayed::empty()
        } else {
            let r = replay(&bytes)?;
            file.set_len(r.valid_len)?;
            r
        };
        let len = file.seek(SeekFrom::End(0))?;
        Ok((
            Journal {
                sink: Sink::File(file),
                policy,
                len,
            },
            replayed,
        ))
    }

    /// Writes `records` with a single append.
    pub fn append(&mut self, records: &[Record]) -> Result<(), StorageError> {
        let mut buf = Vec::new();
        for r in records {
            r.encode(&mut buf);
        }
        match &mut self.sink {
            Sink::Memory(v) => v.extend_from_slice(&buf),
            Sink::File(f) => {
                f.write_all(&buf)?;
                if self.policy == FsyncPolicy::EveryAppend {
                    f.sync_data()?;
                }
            }
        }
        self.len += buf.len() as u64;
        Ok(())
    }

    pub fn sync(&mut self) -> Result<(), StorageError> {
        if let Sink::File(f) = &mut self.sink {
            f.sync_data()?;
        }
        Ok(())
    }

    /// Journal contents, for in-memory journals.
    pub fn bytes(&self) -> Option<&[u8]> {
        match &self.sink {
            Sink::Memory(v) => Some(v),
            Sink::File(_) => None,
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len <= MAGIC.len() as u64
    }
}

/// State reconstructed from a journal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Replayed {
    /// Net multiplicities, zero entries pruned, in first-write order.
    pub store: IndexMap<Axiom, i64>,
    pub queue: VecDeque<QueueEntry>,
    pub dead_letters: Vec<QueueEntry>,
    /// Runtime definitions: `(remove, source)`.
    pub definitions: Vec<(bool, String)>,
    /// Pushes made outside tick groups, i.e. acknowledged inserts and removes.
    pub standalone_pushes: usize,
    /// Ticks whose group was committed.
    pub ticks: u64,
    /// Length of the prefix made of complete records and committed groups.
    pub valid_len: u64,
}

impl Replayed {
    fn empty() -> Self {
        Replayed {
            valid_len: MAGIC.len() as u64,
            ..Replayed::default()
        }
    }

    /// True when the journal held no records at all.
    pub fn is_empty(&self) -> bool {
        self.definitions.is_empty()
            && self.standalone_pushes == 0
            && self.ticks == 0
            && self.dead_letters.is_empty()
    }
}

fn corrupt(offset: usize, reason: impl Into<String>) -> StorageError {
    StorageError::CorruptJournal {
        offset: offset as u64,
        reason: reason.into(),
    }
}

/// Reads one record at `pos`. `Ok(None)` means the input ends inside the record.
fn read_record(bytes: &[u8], pos: usize) -> Result<Option<(Record, usize)>, StorageError> {
    if bytes.len() < pos + 5 {
        return Ok(None);
    }
    let tag = bytes[pos];
    let len = u32::from_be_bytes(bytes[pos + 1..pos + 5].try_into().unwrap()) as usize;
    let end = match (pos + 5).checked_add(len).and_then(|e| e.checked_add(4)) {
        Some(e) if e <= bytes.len() => e,
        _ => return Ok(None),
    };
    let body = &bytes[pos..end - 4];
    let crc = u32::from_be_bytes(bytes[end - 4..end].try_into().unwrap());
    if crc32fast::hash(body) != crc {
        if end == bytes.len() {
            // A torn final write.
            return Ok(None);
        }
        return Err(corrupt(pos, "checksum mismatch"));
    }
    let payload = &body[5..];
    let entry = |p: &[u8]| {
        decode_entry(p)
            .map(|(axiom, delta)| QueueEntry { axiom, delta })
            .map_err(|e| corrupt(pos + 5 + e.offset, e.reason))
    };
    let record = match tag {
        TAG_PUSH => Record::Push(entry(payload)?),
        TAG_WRITE => Record::Write(entry(payload)?),
        TAG_COMMIT => match payload {
            [0] => Record::Commit { dead: false },
            [1] => Record::Commit { dead: true },
            _ => return Err(corrupt(pos, "bad commit payload")),
        },
        TAG_DEFINE => {
            let (flag, text) = payload
                .split_first()
                .ok_or_else(|| corrupt(pos, "empty definition"))?;
            let source = String::from_utf8(text.to_vec())
                .map_err(|_| corrupt(pos, "definition is not UTF-8"))?;
            Record::Define {
                remove: *flag != 0,
                source,
            }
        }
        other => return Err(corrupt(pos, format!("unknown record tag {other:#04x}"))),
    };
    Ok(Some((record, end)))
}

/// Offsets just past the header and past each complete record.
pub fn record_boundaries(bytes: &[u8]) -> Result<Vec<usize>, StorageError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(corrupt(0, "missing FTJ1 header"));
    }
    let mut out = vec![MAGIC.len()];
    let mut pos = MAGIC.len();
    while let Some((_, end)) = read_record(bytes, pos)? {
        out.push(end);
        pos = end;
    }
    Ok(out)
}

fn apply_write(store: &mut IndexMap<Axiom, i64>, e: QueueEntry) {
    let m = store.entry(e.axiom.clone()).or_insert(0);
    *m += e.delta;
    if *m == 0 {
        store.shift_remove(&e.axiom);
    }
}

/// Reconstructs store and queue. A trailing incomplete record or
/// uncommitted tick group is ignored.
pub fn replay(bytes: &[u8]) -> Result<Replayed, StorageError> {
    if bytes.is_empty() {
        return Ok(Replayed::empty());
    }
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        if MAGIC.starts_with(bytes) {
            return Ok(Replayed::empty());
        }
        return Err(corrupt(0, "missing FTJ1 header"));
    }
    let mut out = Replayed::empty();
    let mut pos = MAGIC.len();
    let mut group: Option<Vec<Record>> = None;
    while let Some((record, end)) = read_record(bytes, pos)? {
        match (record, group.as_mut()) {
            (Record::Commit { dead }, open) => {
                let records = open.map(std::mem::take).unwrap_or_default();
                group = None;
                let head = out
                    .queue
                    .pop_front()
                    .ok_or_else(|| corrupt(pos, "commit with an empty queue"))?;
                for r in records {
                    match r {
                        Record::Write(e) => apply_write(&mut out.store, e),
                        Record::Push(e) => out.queue.push_back(e),
                        _ => unreachable!("groups hold writes and pushes"),
                    }
                }
                if dead {
                    out.dead_letters.push(head);
                } else {
                    out.ticks += 1;
                }
                out.valid_len = end as u64;
            }
            (r @ Record::Write(_), Some(g)) | (r @ Record::Push(_), Some(g)) => g.push(r),
            (r @ Record::Write(_), None) => group = Some(vec![r]),
            (Record::Push(e), None) => {
                out.queue.push_back(e);
                out.standalone_pushes += 1;
                out.valid_len = end as u64;
            }
            (Record::Define { remove, source }, None) => {
                out.definitions.push((remove, source));
                out.valid_len = end as u64;
            }
            (Record::Define { .. }, Some(_)) => {
                return Err(corrupt(pos, "definition inside a tick group"))
            }
        }
        pos = end;
    }
    Ok(out)
}
