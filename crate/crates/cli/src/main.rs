mod args;
mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::{Common, Outcome};
use crate::config::Layer;
use crate::error::CliError;
use crate::output::Format;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(&CliError::Usage(e.render().to_string().trim().to_owned())),
    };
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(deferred)) => report(&deferred),
        Err(e) => report(&e),
    }
}

fn report(error: &CliError) -> ExitCode {
    eprintln!("{}", error.to_json());
    ExitCode::from(error.exit_code() as u8)
}

fn run(cli: Cli) -> Result<Option<CliError>, CliError> {
    let section = cli.command.name();
    let layer = Layer::load(cli.global.config.as_deref(), section)?;
    let g = &cli.global;

    if let Some(threads) = layer.pick_opt(g.threads, "threads")? {
        if threads == 0 {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let default_format = match cli.command {
        Command::Estimate(_) => Format::Json,
        _ => Format::Csv,
    };
    let output = layer.pick_opt(g.output.clone(), "output")?;
    let common = Common {
        seed: layer.pick(g.seed, "seed", 0)?,
        format: layer.pick(g.format, "format", default_format)?,
        digits: layer.pick(g.digits, "digits", 17)?,
        output: output.as_ref().map(|p| p.display().to_string()),
        in_units_of_pi: layer.switch(g.in_units_of_pi, "in_units_of_pi")?,
    };
    if !(1..=17).contains(&common.digits) {
        return Err(CliError::Usage(format!(
            "digits must be in 1..=17, got {}",
            common.digits
        )));
    }

    let Outcome { bytes, deferred } = match cli.command {
        Command::Prepare(a) => commands::prepare(a, &common, &layer)?,
        Command::Curve(a) => commands::curve(a, &common, &layer)?,
        Command::Bootstrap(a) => commands::bootstrap(a, &common, &layer)?,
        Command::Estimate(a) => commands::estimate(a, &common, &layer)?,
        Command::Fisher(a) => commands::fisher(a, &common, &layer)?,
    };
    match output {
        Some(path) => std::fs::write(&path, &bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes)?;
            stdout.flush()?;
        }
    }
    Ok(deferred)
}
