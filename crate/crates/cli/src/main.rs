//! `resbench`: command-line front end for benchmark provenance probing,
//! farthest point resampling and rank correlation.
//!
//! Exit codes: 0 success, 2 usage or configuration error (including missing
//! files), 3 data or validation error.

mod args;
mod commands;
mod error;
mod output;

use clap::Parser;

use args::Cli;

fn main() {
    let cli = Cli::parse();
    let name = commands::command_name(&cli.command);
    let code = match commands::run(&cli) {
        Ok(written) => {
            for path in &written {
                println!("{}", path.display());
            }
            output::log_run(&cli.common.out, name, &format!("ok, {} files", written.len()));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            output::log_run(&cli.common.out, name, &format!("exit {}: {e}", e.code()));
            e.code()
        }
    };
    std::process::exit(code);
}
