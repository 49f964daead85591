use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use heisenberg_spectra::cli::{self, CommandOutput, EXIT_INVALID};
use heisenberg_spectra::config::RunConfig;
use heisenberg_spectra::Result;

/// Spectra and eigenvalue bounds for the Dirichlet Heisenberg Laplacian on
/// cylinders.
///
/// Exit codes: 0 success, 1 invalid config, 2 solver non-convergence,
/// 3 bound violation.
#[derive(Parser)]
#[command(name = "hspec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional JSON mirror of the report.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-section geometry summary.
    Geom(Common),
    /// Hardy constant estimates over the configured meshes.
    Hardy(Common),
    /// Smallest eigenvalues of the discrete Heisenberg Laplacian.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Also write the assembled matrix in Matrix Market format.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Bound report for a spectrum CSV.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        spectrum: PathBuf,
    },
    /// Lowest Landau levels of the gauge-phase magnetic Laplacian.
    Landau(Common),
    /// Weyl ratio and remainder diagnostics for a spectrum CSV.
    Asymp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        spectrum: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        heisenberg_spectra::Error::InvalidInput(format!("cannot read {}: {e}", path.display()))
    })
}

fn emit(out: &CommandOutput, common: &Common, matrix_path: Option<&Path>) -> Result<()> {
    match &common.out {
        Some(p) => fs::write(p, &out.csv)?,
        None => print!("{}", out.csv),
    }
    if let Some(p) = &common.json {
        fs::write(p, serde_json::to_string_pretty(&out.json).expect("serializable") + "\n")?;
    }
    if let (Some(p), Some(m)) = (matrix_path, &out.matrix) {
        fs::write(p, m)?;
    }
    for note in &out.notes {
        eprintln!("note: {note}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    let (common, matrix) = match &cli.command {
        Command::Geom(c) | Command::Hardy(c) | Command::Landau(c) => (c, None),
        Command::Spectrum { common, matrix } => (common, matrix.as_deref()),
        Command::Check { common, .. } | Command::Asymp { common, .. } => (common, None),
    };
    let cfg = RunConfig::from_json(&read(&common.config)?)?;
    let out = match &cli.command {
        Command::Geom(_) => cli::run_geom(&cfg)?,
        Command::Hardy(_) => cli::run_hardy(&cfg)?,
        Command::Spectrum { .. } => cli::run_spectrum(&cfg, matrix.is_some())?,
        Command::Check { spectrum, .. } => cli::run_check(&cfg, &read(spectrum)?)?,
        Command::Landau(_) => cli::run_landau(&cfg)?,
        Command::Asymp { spectrum, .. } => cli::run_asymp(&cfg, &read(spectrum)?)?,
    };
    emit(&out, common, matrix)?;
    Ok(out.exit_code)
}

fn main() -> ExitCode {
    let parsed = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID as u8 } else { 0 });
        }
    };
    match run(parsed) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code_for(&e) as u8)
        }
    }
}
