use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use cfid::commands::{self, Outcome, EXIT_INPUT};
use cfid::universe::UniverseSpec;
use cfid::verify::{QuerySet, VerifyConfig};
use cfid_core::expr::Format;
use cfid_core::oracle::RandomScmConfig;
use clap::{Parser, Subcommand};

/// Counterfactual identification from experimental distributions.
///
/// Exit codes: 0 identified or zero, 1 input error, 2 not identifiable
/// (FAIL), 3 undefined, 4 verification mismatch.
#[derive(Parser)]
#[command(name = "cfid", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Identify a query on a graph.
    Identify {
        /// Graph file (`X -> Y`, `X <-> Y`, `node X` per line).
        graph: PathBuf,
        /// Query such as `P(Y[X=x0]=y0 | X=x1)`.
        query: String,
        #[arg(long, default_value = "text")]
        format: Format,
        /// Append the counterfactual graphs, merges and recursion trace.
        #[arg(long)]
        explain: bool,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Show the parallel-worlds graph, merges and counterfactual graph of a
    /// query, then the traced identification.
    Explain { graph: PathBuf, query: String },
    /// Compare identification with enumeration on seeded random models.
    Verify {
        graph: PathBuf,
        #[arg(long, default_value_t = 25)]
        models: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// File with one query per line instead of the enumerated universe.
        #[arg(long, conflicts_with = "all_up_to")]
        queries: Option<PathBuf>,
        /// Enumerate every query with up to this many events.
        #[arg(long, default_value_t = 3)]
        all_up_to: usize,
        #[arg(long, default_value_t = 2)]
        max_worlds: usize,
        /// Largest intervention defining an enumerated world.
        #[arg(long, default_value_t = 1)]
        max_sub: usize,
        /// Domain size of every variable in the random models.
        #[arg(long, default_value_t = 2)]
        domain: usize,
        /// Write each failing model and query to this directory.
        #[arg(long)]
        dump_failures: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a query on a model by enumeration.
    Oracle {
        /// Model file as written by `cfid model`.
        model: PathBuf,
        query: String,
        #[arg(long)]
        json: bool,
    },
    /// Print a seeded random model of a graph.
    Model {
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        domain: usize,
    },
    /// Build and check the parity model pair with `k` middle nodes.
    Parity {
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Flip `Y` with probability 1/256 so every experiment is positive.
        #[arg(long)]
        flip: bool,
        /// Write the graph, both models and the query to this directory.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

fn run(cmd: Cmd) -> Result<Outcome> {
    match cmd {
        Cmd::Identify { graph, query, format, explain, json } => commands::identify(&commands::read_graph(&graph)?, &query, format, explain, json),
        Cmd::Explain { graph, query } => commands::explain(&commands::read_graph(&graph)?, &query),
        Cmd::Verify { graph, models, seed, queries, all_up_to, max_worlds, max_sub, domain, dump_failures, json } => {
            let g = commands::read_graph(&graph)?;
            let queries = match queries {
                Some(path) => QuerySet::List(commands::read_queries(&path)?),
                None => QuerySet::Universe(UniverseSpec { max_events: all_up_to, max_worlds, max_sub }),
            };
            let scm = RandomScmConfig { default_domain: domain, ..RandomScmConfig::default() };
            commands::verify_cmd(&g, &VerifyConfig { models, seed, queries, scm, dump_failures }, json)
        }
        Cmd::Oracle { model, query, json } => commands::oracle(&commands::read_model(&model)?, &query, json),
        Cmd::Model { graph, seed, domain } => commands::model(&commands::read_graph(&graph)?, seed, domain),
        Cmd::Parity { k, flip, emit } => commands::parity(k, flip, emit.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_INPUT as u8 } else { 0 });
        }
    };
    match run(cli.cmd) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
