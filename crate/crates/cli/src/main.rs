mod args;
mod commands;
mod config;
mod error;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::FileConfig;
use error::CliError;
use report::RunReport;

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::usage(format!("--threads: {e}")))?;
    }
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut report = RunReport::new(cli.command.name());
    match &cli.command {
        Command::GenData(a) => commands::gen_data(a, &cfg, &mut report),
        Command::Train(a) => commands::train(a, &cfg, &mut report),
        Command::Score(a) => commands::score(a, &cfg, &mut report),
        Command::Select(a) => commands::select(a, &cfg, &mut report),
        Command::Sweep(a) => commands::sweep(a, &cfg, &mut report),
        Command::F1Sweep(a) => commands::f1_sweep_cmd(a, &cfg, &mut report),
        Command::Timing(a) => commands::timing(a, &cfg, &mut report),
    }?;

    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    match &cli.report {
        Some(path) => {
            std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))?;
            println!("{}", report.result);
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(first).to_line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(e.exit_code())
        }
    }
}
