//! TweetLog, a micro-blogging application written as a `.clg` program, and
//! its test fixtures.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::json::term_to_json;
use crate::lang::{parse_program_with, Declarations, Goal, LangError};
use crate::query_engine::{QueryError, QueryResult};
use crate::static_engine::{solve_all, SolveError, StaticDb};
use crate::tank::{LoadReport, Tank, TankError};
use crate::term::{Term, Var};

pub const SCHEMA: &str = include_str!("../assets/tweetlog/schema.clg");
pub const GRAMMAR: &str = include_str!("../assets/tweetlog/grammar.clg");
pub const RULES: &str = include_str!("../assets/tweetlog/rules.clg");

const FIXTURES: [&str; 3] = [
    include_str!("../assets/tweetlog/fixtures/basic.json"),
    include_str!("../assets/tweetlog/fixtures/retraction.json"),
    include_str!("../assets/tweetlog/fixtures/reply.json"),
];

/// The whole application as one program: schema, grammar, rules.
pub fn program() -> String {
    format!("{SCHEMA}\n{GRAMMAR}\n{RULES}")
}

/// Loads the application into `tank` and runs it to quiescence.
pub fn load(tank: &Tank) -> Result<LoadReport, TankError> {
    let report = tank.load_program(&program())?;
    tank.run_to_quiescence()?;
    Ok(report)
}

/// Declarations and static clauses of the application, without a tank.
pub fn static_db() -> Result<(Declarations, StaticDb), LangError> {
    let mut decls = Declarations::standard();
    let items = parse_program_with(&format!("{SCHEMA}\n{GRAMMAR}"), &mut decls)?;
    let mut db = StaticDb::with_prelude();
    db.extend_items(&items);
    Ok((decls, db))
}

/// Every token list the grammar assigns to `text`. The grammar is
/// unambiguous, so there is exactly one.
pub fn tokenize(db: &StaticDb, text: &str, budget: u64) -> Result<Vec<Term>, SolveError> {
    let (cs, ts) = (Term::var("Cs"), Term::var("Ts"));
    let goal = Goal::conj([
        Goal::atom("charCodes", vec![Term::string(text), cs.clone()]),
        Goal::atom(
            "parse",
            vec![
                Term::compound("nt", vec![Term::compound("tokens", vec![ts])]),
                cs,
                Term::nil(),
            ],
        ),
    ]);
    Ok(solve_all(db, &goal, budget)?
        .iter()
        .map(|s| s.apply(&Term::Var(Var::new("Ts"))))
        .collect())
}

/// Hand-written tokenizer used as a reference for the grammar.
pub fn scan_tokens(text: &str) -> Vec<Term> {
    let chars: Vec<char> = text.chars().collect();
    let wordchar = |c: char| !matches!(c, ' ' | '@' | '#');
    let run_from = |mut i: usize| {
        let start = i;
        while i < chars.len() && wordchar(chars[i]) {
            i += 1;
        }
        (chars[start..i].iter().collect::<String>(), i)
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (kind, from) = match chars[i] {
            ' ' => {
                i += 1;
                continue;
            }
            '#' => ("hashtag", i + 1),
            '@' => ("userID", i + 1),
            _ => ("word", i),
        };
        let (run, next) = run_from(from);
        out.push(Term::compound(kind, vec![Term::string(run)]));
        i = next;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Insert,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureOp {
    pub op: OpKind,
    pub axiom: String,
}

/// A query and its complete answer set, each answer mapping variable names
/// to terms in JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub query: String,
    pub results: Vec<BTreeMap<String, Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub description: String,
    pub ops: Vec<FixtureOp>,
    pub expect: Vec<Expectation>,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error(transparent)]
    Tank(#[from] TankError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("fixture {fixture}, query {query}: expected {expected}, got {got}")]
    Mismatch {
        fixture: String,
        query: String,
        expected: String,
        got: String,
    },
}

pub fn fixtures() -> Vec<Fixture> {
    FIXTURES
        .iter()
        .map(|text| serde_json::from_str(text).expect("embedded fixture is valid JSON"))
        .collect()
}

pub fn fixture(name: &str) -> Option<Fixture> {
    fixtures().into_iter().find(|f| f.name == name)
}

/// Answers in the JSON shape fixtures use.
pub fn results_json(results: &[QueryResult]) -> Vec<BTreeMap<String, Value>> {
    results
        .iter()
        .map(|r| {
            r.bindings
                .iter()
                .map(|(k, v)| (k.clone(), term_to_json(v)))
                .collect()
        })
        .collect()
}

/// Order-insensitive comparison key for a list of answers.
pub fn answer_set(rows: &[BTreeMap<String, Value>]) -> Vec<String> {
    let mut keys: Vec<String> = rows
        .iter()
        .map(|r| serde_json::to_string(r).expect("JSON values serialize"))
        .collect();
    keys.sort();
    keys
}

/// Limit used when checking expectations; well above any fixture's answers.
pub const CHECK_LIMIT: usize = 1000;

impl Fixture {
    /// Submits the ops to a tank that has the application loaded.
    pub fn apply(&self, tank: &Tank) -> Result<(), TankError> {
        for op in &self.ops {
            match op.op {
                OpKind::Insert => tank.insert_text(&op.axiom)?,
                OpKind::Remove => tank.remove_text(&op.axiom)?,
            };
        }
        Ok(())
    }

    /// Checks every expectation against the answers `ask` returns.
    pub fn verify(
        &self,
        mut ask: impl FnMut(&str) -> Result<Vec<BTreeMap<String, Value>>, FixtureError>,
    ) -> Result<(), FixtureError> {
        for e in &self.expect {
            let got = ask(&e.query)?;
            let (want, have) = (answer_set(&e.results), answer_set(&got));
            if want != have {
                return Err(FixtureError::Mismatch {
                    fixture: self.name.clone(),
                    query: e.query.clone(),
                    expected: want.join(", "),
                    got: have.join(", "),
                });
            }
        }
        Ok(())
    }

    /// Applies the ops, quiesces and verifies, all in process.
    pub fn run(&self, tank: &Tank) -> Result<(), FixtureError> {
        self.apply(tank)?;
        tank.run_to_quiescence()?;
        self.verify(|q| Ok(results_json(&tank.query_text(q, CHECK_LIMIT)?)))
    }
}
