use clap::Parser;
use mobiledger_cli::{run_sim, SimCli, SimCommand};

fn main() -> anyhow::Result<()> {
    env_logger::init();
    match SimCli::parse().command {
        SimCommand::Run { scenario, out } => {
            let report = run_sim(&scenario, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}
