use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use tractor_calculus::verifier::{self, SuiteConfig, SUITES};

/// Check conformal tractor identities on model geometries.
#[derive(Debug, Parser)]
#[command(name = "tractor-verify", version)]
struct Args {
    /// JSON suite configuration; `-` reads standard input. Without it the
    /// built-in models are checked with default settings.
    config: Option<String>,
    /// Run only this suite (repeatable).
    #[arg(long = "suite", value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
    suites: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample points per check.
    #[arg(long)]
    points: Option<usize>,
    /// Multiplies every tolerance.
    #[arg(long = "tol-scale")]
    tol_scale: Option<f64>,
    /// Record wall time per check (output is then no longer reproducible).
    #[arg(long)]
    timing: bool,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Print the model catalog and exit.
    #[arg(long)]
    list_models: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

const USAGE_ERROR: u8 = 2;

fn load(args: &Args) -> Result<SuiteConfig, String> {
    let mut config = match args.config.as_deref() {
        None => SuiteConfig::default(),
        Some(path) => {
            let text = if path == "-" {
                let mut s = String::new();
                std::io::stdin()
                    .read_to_string(&mut s)
                    .map_err(|e| format!("reading standard input: {e}"))?;
                s
            } else {
                std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?
            };
            SuiteConfig::from_json(&text).map_err(|e| format!("{}: {e}", if path == "-" { "<stdin>" } else { path }))?
        }
    };
    if !args.suites.is_empty() {
        config.suites = args.suites.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(points) = args.points {
        config.points = points;
    }
    if let Some(t) = args.tol_scale {
        config.tol_scale = t;
    }
    config.timing |= args.timing;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_models {
        print!("{}", verifier::list_models());
        return ExitCode::SUCCESS;
    }
    let config = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("tractor-verify: {e}");
            return ExitCode::from(USAGE_ERROR);
        }
    };
    let reports = match verifier::run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("tractor-verify: {e}");
            return ExitCode::from(USAGE_ERROR);
        }
    };
    let body = match args.format {
        Format::Text => verifier::render_text(&reports),
        Format::Json => verifier::render_json(&reports),
    };
    let written = match &args.output {
        Some(path) => std::fs::write(path, &body).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("tractor-verify: {e}");
        return ExitCode::from(USAGE_ERROR);
    }
    ExitCode::from(verifier::exit_status(&reports) as u8)
}
