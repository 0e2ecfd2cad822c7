use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ellcomm_cli::{checks, exit, CheckSpec, CliError, ReportRecord, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "ellcomm", version, about = "Seeded numerical checks for elliptic commuting families")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List registered checks with their parameters.
    List,
    /// Run a TOML suite, or the built-in default suite when no path is given.
    Run {
        config: Option<PathBuf>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a single check.
    Check {
        name: String,
        /// Parameter override, `key=value`; repeatable.
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, f64)>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected key=value")?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

fn list() {
    for c in checks::REGISTRY {
        let tag = if c.experimental { " [experimental]" } else { "" };
        println!("{}{tag}: {} (tolerance {:e})", c.name, c.summary, c.tolerance);
        for p in c.param_defs() {
            if p.integer {
                println!("    {} = {} in [{}, {}]", p.name, p.default, p.min, p.max);
            } else {
                println!("    {} = {} in [{:e}, {:e}]", p.name, p.default, p.min, p.max);
            }
        }
    }
}

fn report(records: &[ReportRecord], json: Option<PathBuf>) -> Result<i32, CliError> {
    for r in records {
        eprintln!("{}", ellcomm_cli::summary_line(r));
    }
    let text = ellcomm_cli::to_json(records);
    match json {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(ellcomm_cli::exit_code(records))
}

fn run(cmd: Cmd) -> Result<i32, CliError> {
    match cmd {
        Cmd::List => {
            list();
            Ok(exit::PASS)
        }
        Cmd::Run { config, json } => {
            let records = match config {
                Some(path) => ellcomm_cli::run_suite(&path)?,
                None => ellcomm_cli::run_specs(&ellcomm_cli::parse_config(ellcomm_cli::DEFAULT_SUITE)?)?,
            };
            report(&records, json)
        }
        Cmd::Check {
            name,
            params,
            seed,
            json,
        } => {
            let mut spec = CheckSpec::new(name).seed(seed);
            spec.params.extend(params);
            report(&[ellcomm_cli::run_check(&spec)?], json)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::IO } else { exit::PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::IO as u8)
        }
    }
}
