//! Deductive database in which facts flow through guarded rules until the
//! store is quiescent, with dynamic clauses answering queries at read time.

pub mod json;
pub mod lang;
pub mod oracle;
pub mod query_engine;
pub mod static_engine;
pub mod storage;
pub mod tank;
pub mod term;
pub mod tweetlog;
