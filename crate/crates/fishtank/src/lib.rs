//! Host application for a fishtank database: an HTTP service, a command
//! session and the `fishtank` command-line tool.

pub mod cli;
pub mod service;
pub mod session;
