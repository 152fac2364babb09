use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mckean_mlp::harness::{self, ExperimentConfig, Mode};
use mckean_mlp::Error;

#[derive(Parser, Debug)]
#[command(
    name = "mlp-harness",
    version,
    about = "Experiment runner for multilevel Picard McKean-Vlasov approximations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// L² error against the coupled pathwise oracle, per level, with bound checks
    Convergence(Common),
    /// Instrumented costs against the cost budget and its closed bound
    CostTable(Common),
    /// Moment bound via the particle system plus recursion property suites
    VerifyBounds(Common),
    /// Estimator mean against the particle-system mean
    OracleCompare(Common),
    /// Closed-form recursion solvers against forward recursion
    RecursionSelftest(Common),
    /// Complexity supremand scan and the cost·ε^(2+δ) table
    Certificate(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// CSV output path (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Allow levels up to 5
    #[arg(long)]
    extended: bool,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl Command {
    fn split(self) -> (Mode, Common) {
        match self {
            Command::Convergence(c) => (Mode::Convergence, c),
            Command::CostTable(c) => (Mode::CostTable, c),
            Command::VerifyBounds(c) => (Mode::VerifyBounds, c),
            Command::OracleCompare(c) => (Mode::OracleCompare, c),
            Command::RecursionSelftest(c) => (Mode::RecursionSelftest, c),
            Command::Certificate(c) => (Mode::Certificate, c),
        }
    }
}

fn build_config(mode: Mode, args: &Common) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::new(mode);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.apply_text(&text)?;
    }
    for pair in &args.set {
        config.set_pair(pair)?;
    }
    // the subcommand decides the mode whatever the file says
    config.mode = mode;
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(reps) = args.reps {
        config.reps = reps;
    }
    config.extended |= args.extended;
    Ok(config)
}

fn emit(config_out: Option<&PathBuf>, text: &str) -> std::io::Result<()> {
    match config_out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = cli.command.split();

    let config = match build_config(mode, &args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("mlp-harness: {e}");
            let _ = emit(args.out.as_ref(), &harness::error_csv(mode, &e));
            return ExitCode::from(2);
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("mlp-harness: cannot start {} workers: {e}", args.jobs);
            return ExitCode::from(2);
        }
    };

    match pool.install(|| harness::run(&config)) {
        Ok(result) => {
            if let Err(e) = emit(config.out.as_ref(), &result.to_csv()) {
                eprintln!("mlp-harness: writing output: {e}");
                return ExitCode::from(2);
            }
            for row in result
                .rows
                .iter()
                .filter(|r| r.status == harness::Status::Fail)
            {
                eprintln!("mlp-harness: assertion failed (margin {:.3e})", row.margin);
            }
            ExitCode::from(result.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("mlp-harness: {e}");
            let _ = emit(config.out.as_ref(), &harness::error_csv(mode, &e));
            ExitCode::from(harness::error_exit_code(&e) as u8)
        }
    }
}
