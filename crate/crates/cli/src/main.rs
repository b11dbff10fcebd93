mod args;
mod commands;
mod error;
mod report;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, FromArgMatches};
use serde_json::Value;

use args::{Cli, Command, Format};
use error::CliError;
use report::Run;

fn main() -> ExitCode {
    let parsed = Cli::command()
        .version(&*Box::leak(metriq::version_string().into_boxed_str()))
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::from(e)),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json_line());
    ExitCode::from(e.class.exit_code() as u8)
}

fn resolve(cmd: &Command) -> Result<Command, CliError> {
    let Command::Replay(r) = cmd else {
        return Ok(cmd.clone());
    };
    let text = std::fs::read_to_string(&r.file).map_err(CliError::io)?;
    let meta: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::invalid(format!("{}: {e}", r.file.display())))?;
    let config = meta
        .get("config")
        .cloned()
        .ok_or_else(|| CliError::invalid(format!("{}: no config echo", r.file.display())))?;
    serde_json::from_value(config).map_err(|e| CliError::invalid(format!("{}: {e}", r.file.display())))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::invalid("threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::invalid(e.to_string()))?;
    }
    let cmd = resolve(&cli.command)?;
    let started = Instant::now();
    let report = commands::execute(&cmd)?;
    let run = Run {
        name: cmd.name(),
        config: serde_json::to_value(&cmd).expect("configs serialize"),
        threads: cli.threads,
        wall_time: started.elapsed().as_secs_f64(),
        report: &report,
    };
    if let Some(dir) = &cli.output {
        run.write_files(dir)?;
    }
    let mut stdout = std::io::stdout().lock();
    match cli.format {
        Format::Csv => write!(stdout, "{}", report.csv()?),
        Format::Json => writeln!(stdout, "{}", run.json()),
    }
    .map_err(CliError::io)
}
