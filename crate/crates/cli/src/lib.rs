//! Shared plumbing for the `bench` and `sim` binaries: argument types,
//! experiment drivers and CSV/JSON output.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

use mobiledger::experiments::{self, MemoryReport, PowReport, VerifyReport};
use mobiledger::netsim::{Scenario, SimReport, Simulation};
use mobiledger::Difficulty;

#[derive(Debug, Parser)]
#[command(name = "bench", about = "Storage, proof-of-work and verification experiments")]
pub struct BenchCli {
    /// Directory receiving the CSV files and summary.json.
    #[arg(long, global = true, default_value = "bench-out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: BenchCommand,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Chain size against block count for 1, 3 and 6 transactions per block.
    Memory(MemoryArgs),
    /// Proof-of-work iterations and timing over random block headers.
    Pow(PowArgs),
    /// Chain verification time over block counts, groupings and workers.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct MemoryArgs {
    #[arg(long, default_value_t = 1000)]
    pub max_blocks: usize,
    #[arg(long, default_value_t = 20)]
    pub payload_chars: usize,
}

#[derive(Debug, Args)]
pub struct PowArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 3)]
    pub difficulty: u32,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [100, 500, 1000])]
    pub blocks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 3, 6])]
    pub tx: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4, 8])]
    pub workers: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
}

#[derive(Debug, Parser)]
#[command(name = "sim", about = "Discrete-event simulation of mobile nodes and sync gateways")]
pub struct SimCli {
    #[command(subcommand)]
    pub command: SimCommand,
}

#[derive(Debug, Subcommand)]
pub enum SimCommand {
    /// Runs a scenario to quiescence and reports per-node state.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Also write summary.json and nodes.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Runs the selected experiment, writes its files and returns the summary.
pub fn run_bench(cli: &BenchCli) -> Result<serde_json::Value> {
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let summary = match &cli.command {
        BenchCommand::Memory(a) => {
            let r = experiments::bench_memory(a.max_blocks, a.payload_chars, cli.seed)?;
            write_memory(&cli.out, &r)?;
            serde_json::to_value(&r)?
        }
        BenchCommand::Pow(a) => {
            let d = Difficulty::new(a.difficulty)?;
            let r = experiments::bench_pow(a.trials, d, cli.seed)?;
            write_pow(&cli.out, &r)?;
            serde_json::to_value(&r)?
        }
        BenchCommand::Verify(a) => {
            let r = experiments::bench_verify(&a.blocks, &a.tx, &a.workers, a.repetitions, cli.seed)?;
            write_verify(&cli.out, &r)?;
            serde_json::to_value(&r)?
        }
    };
    write_json(&cli.out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn write_memory(out: &Path, r: &MemoryReport) -> Result<()> {
    write_csv(&out.join("memory.csv"), &r.rows)
}

fn write_pow(out: &Path, r: &PowReport) -> Result<()> {
    write_csv(&out.join("pow_trials.csv"), &r.samples)?;
    write_csv(&out.join("pow_histogram.csv"), &r.histogram)
}

#[derive(Serialize)]
struct VerifyRow {
    blocks: usize,
    tx_per_block: usize,
    workers: usize,
    repetitions: usize,
    median_secs: f64,
    min_secs: f64,
    max_secs: f64,
    per_block_secs: f64,
    per_tx_secs: f64,
}

fn write_verify(out: &Path, r: &VerifyReport) -> Result<()> {
    write_csv(
        &out.join("verify.csv"),
        r.runs.iter().map(|run| VerifyRow {
            blocks: run.blocks,
            tx_per_block: run.tx_per_block,
            workers: run.workers,
            repetitions: run.repetitions,
            median_secs: run.wall_time,
            min_secs: run.min_time,
            max_secs: run.max_time,
            per_block_secs: run.per_block(),
            per_tx_secs: run.per_tx(),
        }),
    )
}

#[derive(Serialize)]
struct NodeRow<'a> {
    node: &'a str,
    connected: bool,
    miner: bool,
    chain_length: usize,
    head: &'a str,
    chain_digest: &'a str,
    backlog: usize,
    dropped: usize,
    reports: usize,
}

pub fn run_sim(scenario: &Path, out: Option<&Path>) -> Result<SimReport> {
    let scenario = Scenario::load(scenario)?;
    let mut sim = Simulation::from_scenario(&scenario)?;
    sim.run_until_quiescent()?;
    let report = sim.report();
    if let Some(out) = out {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        write_json(&out.join("summary.json"), &report)?;
        write_csv(
            &out.join("nodes.csv"),
            report.nodes.iter().map(|(id, n)| NodeRow {
                node: id,
                connected: n.connected,
                miner: n.miner,
                chain_length: n.chain_length,
                head: &n.head,
                chain_digest: &n.chain_digest,
                backlog: n.backlog,
                dropped: n.dropped,
                reports: n.reports,
            }),
        )?;
    }
    Ok(report)
}
