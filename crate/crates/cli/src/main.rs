use std::process::ExitCode;

use batched_eig_cli::app::{configure_threads, run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let threads = std::env::var("BED_THREADS").ok();
    let result = configure_threads(threads.as_deref()).and_then(|()| run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bed: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
