//! Command-line entry points: an interactive REPL, batch scripts and the
//! HTTP server.

use std::io::{BufRead, IsTerminal, Write};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fishtank_core::static_engine::DEFAULT_BUDGET;
use fishtank_core::tank::TankConfig;

use crate::service::{self, AppState};
use crate::session::{EngineOptions, Session, SessionError};

/// Environment variable that overrides `--port`.
pub const PORT_ENV: &str = "FISHTANK_PORT";

#[derive(Debug, Parser)]
#[command(
    name = "fishtank",
    version,
    about = "A deductive database with incremental rule propagation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read commands from standard input.
    Repl(#[command(flatten)] EngineArgs),
    /// Execute a command script, stopping at the first error.
    Run {
        script: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Serve the HTTP API and static assets.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory served for paths outside /api.
        #[arg(long)]
        assets: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Journal file; state is replayed from it and new work appended.
    #[arg(long)]
    pub journal: Option<PathBuf>,
    /// Program to load at startup (`@tweetlog` for the embedded app).
    #[arg(long = "load", value_name = "FILE")]
    pub load: Vec<String>,
    /// Most ticks a single quiesce may run.
    #[arg(long, default_value_t = TankConfig::default().max_quiesce_ticks)]
    pub tick_budget: u64,
    /// Resolution steps allowed per guard or query evaluation.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub solve_budget: u64,
}

impl From<&EngineArgs> for EngineOptions {
    fn from(a: &EngineArgs) -> EngineOptions {
        EngineOptions {
            solve_budget: a.solve_budget,
            tick_budget: a.tick_budget,
            journal: a.journal.clone(),
            load: a.load.clone(),
        }
    }
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Repl(engine) => repl(engine),
        Command::Run { script, engine } => batch(script, engine),
        Command::Serve {
            port,
            assets,
            engine,
        } => serve(*port, assets.clone(), engine),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn print(output: &str) {
    if !output.is_empty() {
        println!("{output}");
    }
}

fn repl(engine: &EngineArgs) -> Result<(), SessionError> {
    let session = Session::open(&engine.into())?;
    let stdin = std::io::stdin();
    let interactive = stdin.is_terminal();
    let mut lines = stdin.lock().lines();
    loop {
        if interactive {
            print!("> ");
            let _ = std::io::stdout().flush();
        }
        let Some(line) = lines.next() else {
            return Ok(());
        };
        let line = line.map_err(|e| SessionError::Usage(format!("reading input: {e}")))?;
        if matches!(line.trim(), "exit" | "quit") {
            return Ok(());
        }
        match session.execute(&line) {
            Ok(out) => print(&out),
            Err(e) => eprintln!("error: {e}"),
        }
    }
}

fn batch(script: &PathBuf, engine: &EngineArgs) -> Result<(), SessionError> {
    let text = std::fs::read_to_string(script).map_err(|e| SessionError::Read {
        path: script.clone(),
        source: e,
    })?;
    let session = Session::open(&engine.into())?;
    for (n, line) in text.lines().enumerate() {
        match session.execute(line) {
            Ok(out) => print(&out),
            Err(e) => {
                eprintln!("{}:{}: {}", script.display(), n + 1, line.trim());
                return Err(e);
            }
        }
    }
    Ok(())
}

fn serve(port: u16, assets: Option<PathBuf>, engine: &EngineArgs) -> Result<(), SessionError> {
    let port = match std::env::var(PORT_ENV) {
        Ok(v) => v
            .parse()
            .map_err(|_| SessionError::Usage(format!("{PORT_ENV}={v} is not a port")))?,
        Err(_) => port,
    };
    let session = Session::open(&engine.into())?;
    let state = AppState {
        tank: session.tank().clone(),
        assets,
        tick_budget: engine.tick_budget,
    };
    let io = |e: std::io::Error| SessionError::Usage(format!("server: {e}"));
    let runtime = tokio::runtime::Runtime::new().map_err(io)?;
    runtime
        .block_on(async {
            let listener =
                tokio::net::TcpListener::bind(SocketAddr::from((Ipv4Addr::UNSPECIFIED, port)))
                    .await?;
            eprintln!("listening on http://{}", listener.local_addr()?);
            service::serve(listener, state, async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
        })
        .map_err(io)
}
