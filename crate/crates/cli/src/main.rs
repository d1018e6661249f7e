use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use formal_kms_cli::{emit, resolve, run_scenario, CliError, Format, Overrides, Report, BUNDLED, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "fkms", version, about = "Order-by-order checks of formal KMS states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios (bundled names or TOML paths) and write JSON reports.
    Run {
        /// Scenario names or files; `--all` runs every bundled scenario.
        configs: Vec<String>,
        /// Run every bundled scenario.
        #[arg(long)]
        all: bool,
        /// Override the truncation order K.
        #[arg(long)]
        truncation: Option<usize>,
        /// Override the probe seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for reports.
        #[arg(long, env = OUT_DIR_ENV, default_value = "fkms-out")]
        out: PathBuf,
        /// Do not print the table to stdout.
        #[arg(long)]
        quiet: bool,
    },
    /// List the bundled scenarios.
    ListScenarios,
    /// Re-emit a JSON report as json, csv or table.
    Emit {
        report: PathBuf,
        #[arg(long, default_value = "table")]
        format: Format,
        /// Write files here instead of printing to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run { configs, all, truncation, seed, out, quiet } => {
            let mut names = configs;
            if all {
                names.extend(BUNDLED.iter().map(|(n, _)| n.to_string()));
            }
            let overrides = Overrides { truncation, seed };
            let mut ok = true;
            for name in names {
                let scenario = resolve(&name)?;
                let report = run_scenario(&scenario, overrides)?;
                for path in emit(&report, Format::Json, &out)? {
                    eprintln!("wrote {}", path.display());
                }
                if !quiet {
                    print!("{}", report.table());
                }
                ok &= report.success();
            }
            Ok(ok)
        }
        Command::ListScenarios => {
            for (name, _) in BUNDLED {
                let s = resolve(name)?;
                println!("{name:<20} {}", s.description);
            }
            Ok(true)
        }
        Command::Emit { report, format, out } => {
            let text = std::fs::read_to_string(&report)
                .map_err(|e| CliError::Io { path: report.display().to_string(), source: e })?;
            let report = Report::from_json(&text)?;
            match out {
                Some(dir) => {
                    for path in emit(&report, format, &dir)? {
                        eprintln!("wrote {}", path.display());
                    }
                }
                None => match format {
                    Format::Json => print!("{}", report.to_json()),
                    Format::Csv => print!("{}{}", report.checks_csv(), report.spectrum_csv()),
                    Format::Table => print!("{}", report.table()),
                },
            }
            Ok(report.success())
        }
    }
}
