//! Command-line front end for the dialogue simulator.
//!
//! Subcommands: `run` (one session), `attack` (Monte Carlo detection
//! experiment), `leakage` (transcript-posterior survey), `tables`
//! (outcome collections and the swap table), `efficiency` (accounting
//! and protocol comparison). Exit codes: 0 success, 1 usage or config
//! error, 2 protocol abort.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qdialogue::analysis::{
    comparison_table, leakage_report, round_accounting, run_experiment, LeakageReport,
};
use qdialogue::cavity::{table_dump, TableDump};
use qdialogue::config::load_session_with_seed;
use qdialogue::protocol::{run_session, SessionResult};

#[derive(Parser)]
#[command(
    name = "qdialogue",
    version,
    about = "Simulate a cavity-assisted quantum dialogue protocol"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one dialogue session from a config file.
    Run {
        /// Session config file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Repeat attacked sessions and report detection statistics.
    Attack {
        /// Session config file (TOML); must name an attack.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of sessions to simulate.
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Worker threads; the report does not depend on this.
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Survey what a passive transcript listener learns, over every
    /// initial state and message pair.
    Leakage {
        /// Session config file (TOML); check sizes and seed are reused.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the outcome collections and the entanglement-swapping
    /// table, stored next to its re-derivation from simulation.
    Tables {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the per-round efficiency accounting and the protocol
    /// comparison table.
    Efficiency {
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { config, seed, output } => {
            let setup = load_session_with_seed(&config, seed)?;
            let result = run_session(&setup.config, &setup.bits, setup.attack.as_ref())?;
            let text = match output.format {
                Format::Json => envelope("session", &result)?,
                Format::Csv => session_csv(&result),
            };
            emit(&output, &text)?;
            Ok(if result.aborted.is_some() { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::Attack { config, seed, trials, parallelism, output } => {
            let setup = load_session_with_seed(&config, seed)?;
            let attack = setup
                .attack
                .context("experiment config must name an attack in an [attack] table")?;
            let report = run_experiment(
                &setup.config,
                &attack,
                trials,
                parallelism,
                setup.config.rng_seed,
            )?;
            let text = match output.format {
                Format::Json => envelope("experiment", &report)?,
                Format::Csv => report.to_csv(),
            };
            emit(&output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Leakage { config, seed, output } => {
            let setup = load_session_with_seed(&config, seed)?;
            let report = leakage_report(&setup.config)?;
            let text = match output.format {
                Format::Json => envelope("leakage", &report)?,
                Format::Csv => leakage_csv(&report),
            };
            emit(&output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Tables { output } => {
            let dump = table_dump()?;
            let text = match output.format {
                Format::Json => envelope("tables", &dump)?,
                Format::Csv => tables_csv(&dump),
            };
            emit(&output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Efficiency { output } => {
            let accounting = round_accounting();
            let doc = EfficiencyDoc {
                efficiency_ratio: {
                    let r = accounting.ratio()?;
                    format!("{}/{}", r.numer(), r.denom())
                },
                efficiency_percent: accounting.percent_label()?,
                accounting,
                comparison: comparison_table()?,
            };
            let text = match output.format {
                Format::Json => envelope("efficiency", &doc)?,
                Format::Csv => efficiency_csv(&doc),
            };
            emit(&output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[derive(Serialize)]
struct EfficiencyDoc {
    accounting: qdialogue::analysis::EfficiencyAccounting,
    efficiency_ratio: String,
    efficiency_percent: String,
    comparison: Vec<qdialogue::analysis::ComparisonRow>,
}

/// Wrap a report in the versioned JSON envelope (pretty-printed with
/// sorted keys, so identical inputs emit identical bytes).
fn envelope(kind: &str, payload: impl Serialize) -> anyhow::Result<String> {
    let doc = serde_json::json!({
        "schema_version": 1,
        "kind": kind,
        "report": payload,
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn emit(output: &OutputArgs, text: &str) -> anyhow::Result<()> {
    match &output.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// One row per message group; decode columns stay empty when the
/// session aborted before decoding.
fn session_csv(result: &SessionResult) -> String {
    let mut text =
        String::from("group,initial,alice_sent,bob_sent,collection,alice_decoded,bob_decoded\n");
    let get = |v: &[qdialogue::EncodingOp], i: usize| {
        v.get(i).map(|op| op.label().to_string()).unwrap_or_default()
    };
    for i in 0..result.alice_sent.len() {
        let collection =
            result.collections.get(i).map(|c| c.label().to_string()).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            i,
            result.initial_states[i].label(),
            get(&result.alice_sent, i),
            get(&result.bob_sent, i),
            collection,
            get(&result.alice_decoded, i),
            get(&result.bob_decoded, i),
        ));
    }
    text
}

fn leakage_csv(report: &LeakageReport) -> String {
    let mut text = String::from(
        "initial,alice_op,bob_op,collection,joint_bits,alice_marginal_bits,bob_marginal_bits,known_initial_bits\n",
    );
    for e in &report.entries {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            e.initial.label(),
            e.alice_op.label(),
            e.bob_op.label(),
            e.collection.label(),
            e.joint_entropy_bits,
            e.alice_marginal_entropy_bits,
            e.bob_marginal_entropy_bits,
            e.known_initial_entropy_bits,
        ));
    }
    text
}

/// The stored table next to its re-derivation; collection membership is
/// only in the JSON form.
fn tables_csv(dump: &TableDump) -> String {
    let mut text = String::from("source,row,col,collection\n");
    for (source, entries) in [("stored", &dump.stored), ("regenerated", &dump.regenerated)] {
        for e in entries {
            text.push_str(&format!(
                "{},{},{},{}\n",
                source,
                e.row.label(),
                e.col.label(),
                e.collection.label(),
            ));
        }
    }
    text
}

fn efficiency_csv(doc: &EfficiencyDoc) -> String {
    let mut text =
        String::from("protocol,quantum_resource,efficiency,measurements,leaks_information\n");
    for row in &doc.comparison {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            row.protocol,
            row.quantum_resource,
            row.efficiency,
            row.measurements,
            row.leaks_information,
        ));
    }
    text
}
