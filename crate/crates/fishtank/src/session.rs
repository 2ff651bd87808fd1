//! Line-oriented commands over one tank, shared by the REPL, batch scripts
//! and server startup.
//!
//! ```text
//! load <file.clg> | load @tweetlog
//! insert <axiom or clause>
//! remove <axiom or clause>
//! query <goal> [limit]
//! quiesce [max-ticks]
//! stats
//! dump
//! ```
//!
//! Blank lines and lines starting with `%` or `#` are ignored.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use fishtank_core::lang::{parse_query, Item};
use fishtank_core::query_engine::{QueryError, QueryResult};
use fishtank_core::static_engine::DEFAULT_BUDGET;
use fishtank_core::storage::{FsyncPolicy, Journal, StorageError};
use fishtank_core::tank::{Tank, TankConfig, TankError};
use fishtank_core::tweetlog;
use thiserror::Error;

/// Limit used by `query` when none is given.
pub const DEFAULT_LIMIT: usize = 100;

/// Name that `load` resolves to the embedded TweetLog application.
pub const TWEETLOG: &str = "@tweetlog";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Tank(#[from] TankError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl SessionError {
    /// 2 when the tank did not come to rest, 1 for anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            SessionError::Tank(TankError::NotQuiescent { .. }) => 2,
            _ => 1,
        }
    }
}

/// How to build the tank behind a session.
#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub solve_budget: u64,
    /// Most ticks one `quiesce` may run.
    pub tick_budget: u64,
    pub journal: Option<PathBuf>,
    /// Programs loaded at startup, unless the journal already has state.
    pub load: Vec<String>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            solve_budget: DEFAULT_BUDGET,
            tick_budget: TankConfig::default().max_quiesce_ticks,
            journal: None,
            load: Vec::new(),
        }
    }
}

#[derive(Debug)]
pub struct Session {
    tank: Arc<Tank>,
}

impl Session {
    pub fn new(tank: Arc<Tank>) -> Session {
        Session { tank }
    }

    /// Builds the tank, replaying the journal if there is one, then runs
    /// `load` for each startup program. A journal that already holds
    /// records carries its own definitions, so startup loads are skipped.
    pub fn open(opts: &EngineOptions) -> Result<Session, SessionError> {
        let config = TankConfig {
            solve_budget: opts.solve_budget,
            max_quiesce_ticks: opts.tick_budget,
            ..TankConfig::default()
        };
        let (tank, fresh) = match &opts.journal {
            Some(path) => {
                let (journal, replayed) = Journal::open(path, FsyncPolicy::EveryAppend)?;
                let fresh = replayed.is_empty();
                (Tank::with_journal(config, journal, replayed)?, fresh)
            }
            None => (Tank::new(config), true),
        };
        let session = Session::new(Arc::new(tank));
        if fresh {
            for source in &opts.load {
                session.load(source)?;
            }
        }
        Ok(session)
    }

    pub fn tank(&self) -> &Arc<Tank> {
        &self.tank
    }

    /// Runs one command line and returns its output, without a trailing
    /// newline. Ignored lines give an empty string.
    pub fn execute(&self, line: &str) -> Result<String, SessionError> {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') || line.starts_with('#') {
            return Ok(String::new());
        }
        let (cmd, arg) = line
            .split_once(char::is_whitespace)
            .map_or((line, ""), |(c, a)| (c, a.trim()));
        match cmd {
            "load" => self.load(required(cmd, arg)?),
            "insert" => self.submit(required(cmd, arg)?, true),
            "remove" => self.submit(required(cmd, arg)?, false),
            "query" => self.query(required(cmd, arg)?),
            "quiesce" => self.quiesce(arg),
            "stats" => Ok(self.stats()),
            "dump" => Ok(self.dump()),
            "help" => Ok(HELP.trim_end().to_string()),
            _ => Err(SessionError::Usage(format!(
                "unknown command `{cmd}`; try `help`"
            ))),
        }
    }

    fn load(&self, source: &str) -> Result<String, SessionError> {
        let report = if source == TWEETLOG {
            tweetlog::load(&self.tank)?
        } else {
            let text = std::fs::read_to_string(source).map_err(|e| SessionError::Read {
                path: source.into(),
                source: e,
            })?;
            self.tank.load_program(&text)?
        };
        Ok(format!(
            "loaded {} declarations, {} static clauses, {} axioms",
            report.declarations, report.static_clauses, report.axioms
        ))
    }

    fn submit(&self, text: &str, insert: bool) -> Result<String, SessionError> {
        let item = if insert {
            self.tank.insert_text(text)?
        } else {
            self.tank.remove_text(text)?
        };
        Ok(match (item, insert) {
            (Item::Axiom(_), _) => "queued".into(),
            (_, true) => "defined".into(),
            (_, false) => "undefined".into(),
        })
    }

    fn query(&self, arg: &str) -> Result<String, SessionError> {
        let decls = self.tank.declarations();
        let (goal, limit) = match split_limit(arg) {
            Some((text, limit)) if parse_query(text, &decls).is_ok() => (text, limit),
            _ => (arg, DEFAULT_LIMIT),
        };
        let results = self.tank.query_text(goal, limit)?;
        Ok(format_results(&results))
    }

    fn quiesce(&self, arg: &str) -> Result<String, SessionError> {
        let max = if arg.is_empty() {
            self.tank.config().max_quiesce_ticks
        } else {
            arg.parse()
                .map_err(|_| SessionError::Usage(format!("quiesce: `{arg}` is not a tick count")))?
        };
        let ticks = self.tank.quiesce(max)?;
        Ok(format!("{ticks} ticks"))
    }

    fn stats(&self) -> String {
        let s = self.tank.stats();
        let mut out = format!(
            "queue: {}\nticks: {}\nio: {}\ngeneric_io: {}\npartitions: {}\ngeneric_entries: {}\nstatic_clauses: {}\ndead_letters: {}",
            s.queue_len,
            s.ticks,
            s.io_count,
            s.generic_io_count,
            s.partitions,
            s.generic_entries,
            s.static_clauses,
            s.dead_letters
        );
        if let Some(e) = s.last_error {
            let _ = write!(out, "\nlast_error: {e}");
        }
        out
    }

    fn dump(&self) -> String {
        let mut lines: Vec<String> = self
            .tank
            .snapshot_counts()
            .iter()
            .map(|(axiom, mult)| format!("{mult}\t{axiom}"))
            .collect();
        lines.extend(
            self.tank
                .dead_letters()
                .iter()
                .map(|d| format!("dead\t{}\t{}\t{}", d.entry.delta, d.entry.axiom, d.error)),
        );
        lines.join("\n")
    }
}

const HELP: &str = "\
load <file.clg> | load @tweetlog
insert <axiom or clause>
remove <axiom or clause>
query <goal> [limit]
quiesce [max-ticks]
stats
dump
";

fn required<'a>(cmd: &str, arg: &'a str) -> Result<&'a str, SessionError> {
    if arg.is_empty() {
        Err(SessionError::Usage(format!("{cmd} needs an argument")))
    } else {
        Ok(arg)
    }
}

/// Splits a trailing integer off `arg`, if there is one.
fn split_limit(arg: &str) -> Option<(&str, usize)> {
    let (text, last) = arg.rsplit_once(char::is_whitespace)?;
    let limit = last.parse().ok()?;
    Some((text.trim_end(), limit))
}

/// One line per answer, `Var = value` pairs separated by `; `, then a count.
pub fn format_results(results: &[QueryResult]) -> String {
    let mut out = String::new();
    for r in results {
        if r.bindings.is_empty() {
            out.push_str("true\n");
            continue;
        }
        let row: Vec<String> = r
            .bindings
            .iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect();
        out.push_str(&row.join("; "));
        out.push('\n');
    }
    let n = results.len();
    let _ = write!(out, "{n} result{}", if n == 1 { "" } else { "s" });
    out
}
