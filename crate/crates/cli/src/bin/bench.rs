use clap::Parser;
use mobiledger_cli::{run_bench, BenchCli};

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let cli = BenchCli::parse();
    let summary = run_bench(&cli)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    eprintln!("wrote {}", cli.out.display());
    Ok(())
}
