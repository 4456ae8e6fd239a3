mod commands;
mod config;
mod output;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use dclab_core::DcError;

use config::{Cli, JobConfig};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command;
    let cfg = match JobConfig::resolve(command, &cli.flags) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e),
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global() {
        return fail(&DcError::InvalidInput(format!("thread pool: {e}")));
    }
    // Relative `@FILE` sources resolve against the config file's directory.
    let base = cli.flags.config.as_deref().and_then(Path::parent).unwrap_or(Path::new(".")).to_path_buf();
    match commands::run(&cfg, &base) {
        Ok(run) => {
            for line in &run.summary {
                println!("{line}");
            }
            match output::write(&cfg, command.name(), &run) {
                Ok(path) => println!("wrote {}", path.display()),
                Err(e) => return fail(&e),
            }
            match &run.failure {
                None => ExitCode::SUCCESS,
                Some(e) => fail(e),
            }
        }
        Err(e) => {
            if let Err(w) = output::write_error(&cfg, command.name(), &e) {
                eprintln!("error: {w}");
            }
            fail(&e)
        }
    }
}

fn fail(e: &DcError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
