use std::process::ExitCode;

use clap::Parser;
use sshh_cli::{configure_threads, execute, Cli, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.threads).and_then(|_| execute(&cli));
    match result {
        Ok(Outcome::Written(paths)) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Ok(Outcome::Diagnostics(d)) => {
            println!("{}", serde_json::to_string_pretty(&d).expect("diagnostics serialize"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
