use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hamsfl::cli::{self, Command, DeltaKeyword, DeltaSetting, OutputFormat, Overrides, EXIT_INPUT};

/// Bifurcation certificates and spectral flow for linear periodic Hamiltonian families.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Comparison certificate for a bifurcation in (0, 1).
    Certify(RunArgs),
    /// Spectral flow of the Galerkin Hessian path.
    Sfl(RunArgs),
    /// Scan of λ for singular monodromy.
    Monodromy(RunArgs),
    /// Closed-form results for a scalar family c(λ)·I.
    Oracle(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run config.
    config: PathBuf,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    quad_points: Option<usize>,
    #[arg(long)]
    lambda_grid: Option<usize>,
    /// A number or `auto`.
    #[arg(long, value_parser = parse_delta)]
    delta: Option<DeltaSetting>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_kernel: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// λ grid of the monodromy scan.
    #[arg(long)]
    scan_grid: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write eigenvalue traces as CSV.
    #[arg(long)]
    traces: bool,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_delta(s: &str) -> Result<DeltaSetting, String> {
    if s == "auto" {
        return Ok(DeltaSetting::Keyword(DeltaKeyword::Auto));
    }
    s.parse().map(DeltaSetting::Value).map_err(|_| format!("expected a number or `auto`, got `{s}`"))
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            cutoff: self.cutoff,
            quad_points: self.quad_points,
            lambda_grid: self.lambda_grid,
            delta: self.delta,
            seed: self.seed,
            tol_kernel: self.tol_kernel,
            steps: self.steps,
            scan_grid: self.scan_grid,
            format: self.format.map(|f| match f {
                Format::Json => OutputFormat::Json,
                Format::Csv => OutputFormat::Csv,
            }),
            traces: self.traces.then_some(true),
            path: self.output.clone(),
        }
    }
}

fn run(command: Command, args: &RunArgs) -> Result<i32, cli::CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| cli::CliError::Input(format!("{}: {e}", args.config.display())))?;
    let mut cfg = cli::parse_config(&text)?;
    args.overrides().apply(&mut cfg);
    let outcome = cli::execute(command, &cfg)?;
    if let Some(text) = cli::emit(&outcome)? {
        print!("{text}");
    }
    if let Some(e) = &outcome.report.error {
        eprintln!("error: {e}");
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let parsed = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Some(threads) = std::env::var("HAMSFL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let (command, args) = match &parsed.command {
        Cmd::Certify(a) => (Command::Certify, a),
        Cmd::Sfl(a) => (Command::Sfl, a),
        Cmd::Monodromy(a) => (Command::Monodromy, a),
        Cmd::Oracle(a) => (Command::Oracle, a),
    };
    let code = run(command, args).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
