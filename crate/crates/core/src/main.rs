use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use epcag::config::{parse_config, Command, RunSpec};
use epcag::run::{resolve_out_dir, run, EXIT_ERROR};
use epcag::scenario::Mode;
use epcag::system::Method;
use epcag::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Check,
    Constants,
    Orbit,
    Solve,
    Certify,
    Example4,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Homoclinic,
    Heteroclinic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Picard,
    BurnIn,
}

/// Bounded solutions and connection certificates for logistic-driven
/// systems with piecewise constant arguments. Without `--config` every
/// command runs on the built-in example.
#[derive(Debug, Parser)]
#[command(name = "epcag", version)]
struct Cli {
    command: Cmd,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    substeps: Option<usize>,
    /// Solver truncation accuracy.
    #[arg(long)]
    tol: Option<f64>,
    /// End-gap tolerance of certificates.
    #[arg(long)]
    cert_tol: Option<f64>,
    #[arg(long)]
    window: Option<i64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
}

fn spec_from(cli: &Cli) -> Result<RunSpec, Error> {
    let command = match cli.command {
        Cmd::Check => Command::Check,
        Cmd::Constants => Command::Constants,
        Cmd::Orbit => Command::Orbit,
        Cmd::Solve => Command::Solve,
        Cmd::Certify => Command::Certify,
        Cmd::Example4 => Command::Example4,
    };
    let mode = cli.mode.map(|m| match m {
        ModeArg::Homoclinic => Mode::Homoclinic,
        ModeArg::Heteroclinic => Mode::Heteroclinic,
    });
    let mut spec = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
            parse_config(&text)?
        }
        None => RunSpec::example4(mode.unwrap_or_default()),
    };
    spec.command = command;
    if let Some(m) = mode {
        if cli.config.is_some() && m != spec.mode {
            return Err(Error::Validation { field: "mode".into(), message: "conflicts with the config file".into() });
        }
    }
    let n = &mut spec.numeric;
    if let Some(v) = cli.substeps {
        n.substeps = v;
    }
    if let Some(v) = cli.tol {
        n.tol = v;
    }
    if let Some(v) = cli.cert_tol {
        n.cert_tol = v;
    }
    if let Some(v) = cli.window {
        n.window = v;
    }
    if let Some(m) = cli.method {
        n.method = match m {
            MethodArg::Picard => Method::Picard,
            MethodArg::BurnIn => Method::BurnIn,
        };
    }
    spec.validate()?;
    Ok(spec)
}

fn main() -> ExitCode {
    // usage errors share the generic error status; 2 is reserved for failed verdicts
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    let result = spec_from(&cli).and_then(|spec| {
        let dir = resolve_out_dir(cli.out.as_deref(), &spec);
        std::fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
        run(&spec, &dir)
    });
    match result {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            ExitCode::from(outcome.status)
        }
        Err(e) => {
            eprintln!("epcag: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
