use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use semrw_cli::{compare, run_scenario, CliError, ScenarioFile, USAGE_ERROR};

#[derive(Parser)]
#[command(name = "semrw", version, about = "Check and measure semaphore-based reader-writer locks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    ///
    /// Exit status: 0 properties held or measurement done, 1 usage or
    /// configuration error, 2 violation or deadlock found, 3 state budget
    /// exceeded.
    Run {
        scenario: PathBuf,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Dump witness traces in the line format.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print nothing on standard output.
        #[arg(long)]
        quiet: bool,
    },
    /// Run two random or bench scenarios of the same shape and tabulate
    /// their fairness numbers.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plain table by default.
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        quiet: bool,
    },
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn emit(text: &str, out: Option<&Path>, quiet: bool) -> Result<(), CliError> {
    match out {
        Some(path) => write(path, text),
        None if quiet => Ok(()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run { scenario, out, format, trace, quiet } => {
            let output = run_scenario(&ScenarioFile::load(&scenario)?)?;
            if let Some(path) = trace {
                write(&path, &output.trace_dump())?;
            }
            let text = match format {
                Format::Json => output.report.to_json(),
                Format::Csv => output.report.to_csv(),
            };
            emit(&text, out.as_deref(), quiet)?;
            Ok(output.status.code())
        }
        Command::Compare { a, b, out, format, quiet } => {
            let table = compare(&ScenarioFile::load(&a)?, &ScenarioFile::load(&b)?)?;
            let text = match format {
                None => table.to_text(),
                Some(Format::Json) => table.to_json(),
                Some(Format::Csv) => table.to_csv(),
            };
            emit(&text, out.as_deref(), quiet)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE_ERROR } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("semrw: {e}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
