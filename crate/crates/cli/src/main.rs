use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use posthoc_core::circuit::{parse_circuit, Claim};
use posthoc_core::hamiltonian::{Normalization, Weights, DEFAULT_ORACLE_CAP};
use posthoc_core::oracle::Fault;
use posthoc_core::pipeline::{self, Format, Rounds, RunConfig, DEFAULT_EPSILON};
use posthoc_core::protocol::ProverStrategy;
use posthoc_core::Error;

const ORACLE_CAP_VAR: &str = "POSTHOC_ORACLE_CAP";

/// Simulate single-prover post hoc verification of a quantum circuit.
#[derive(Parser)]
#[command(name = "posthoc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the Hamiltonian's Pauli terms with sampling weights.
    Inspect(Common),
    /// Ground and history energies with the implied acceptance bounds.
    Energy(Common),
    /// Run the protocol for one claim.
    Run(RunArgs),
    /// Run the protocol for both claims side by side.
    Decide(RunArgs),
    /// Cross-check the construction against independent computations.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct Common {
    /// Circuit description file.
    #[arg(long)]
    circuit: PathBuf,
    /// member | nonmember
    #[arg(long, default_value = "member")]
    claim: Claim,
    /// Penalty weights J_in,J_clock,J_prop,J_out.
    #[arg(long, default_value = "1,1,1,1")]
    weights: Weights,
    /// with-identity | without-identity
    #[arg(long, default_value = "with-identity")]
    normalization: Normalization,
    /// json | text (inspect also accepts csv)
    #[arg(long, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// honest | ground_state | complement_history | maximally_mixed | fixed_state,PATH
    #[arg(long, default_value = "honest")]
    strategy: ProverStrategy,
    /// Number of rounds, or `auto` for the repetition count implied by the gap.
    #[arg(long, default_value = "auto")]
    rounds: Rounds,
    /// Target error probability for `--rounds auto`.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Acceptance threshold; defaults to the midpoint of the reference probabilities.
    #[arg(long)]
    threshold: Option<f64>,
    /// Worker threads for the rounds (0 = all cores). Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Corrupt the Hamiltonian first: `y-term` or `tamper[=DELTA]`.
    #[arg(long, value_parser = parse_fault)]
    inject: Option<Fault>,
}

fn parse_fault(s: &str) -> Result<Fault, String> {
    match s.split_once('=') {
        None if s == "y-term" => Ok(Fault::YTerm),
        None if s == "tamper" => Ok(Fault::Tamper(1e-3)),
        Some(("tamper", d)) => d
            .parse()
            .map(Fault::Tamper)
            .map_err(|e| format!("bad tamper amount: {e}")),
        _ => Err(format!(
            "unknown fault `{s}` (expected y-term or tamper[=DELTA])"
        )),
    }
}

enum Failure {
    /// Bad input or usage: exit 2.
    Usage(String),
    /// A check failed: exit 1.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(p) => Failure::Usage(format!("parse error: {p}")),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn oracle_cap() -> Result<usize, Failure> {
    match std::env::var(ORACLE_CAP_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::Usage(format!(
                "{ORACLE_CAP_VAR} must be a non-negative integer, got `{v}`"
            ))
        }),
        Err(_) => Ok(DEFAULT_ORACLE_CAP),
    }
}

fn config(common: &Common) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(&common.circuit)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", common.circuit.display())))?;
    let circuit = parse_circuit(&text)
        .map_err(|e| Failure::Usage(format!("{}: parse error: {e}", common.circuit.display())))?;
    let mut cfg = RunConfig::new(common.circuit.display().to_string(), circuit);
    cfg.claim = common.claim;
    cfg.weights = common.weights;
    cfg.normalization = common.normalization;
    cfg.oracle_cap = oracle_cap()?;
    Ok(cfg)
}

fn render(
    format: Format,
    json: impl FnOnce() -> String,
    text: impl FnOnce() -> String,
) -> Result<String, Failure> {
    match format {
        Format::Json => Ok(json()),
        Format::Text => Ok(text()),
        Format::Csv => Err(Failure::Usage(
            "csv output is only available for inspect".into(),
        )),
    }
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = config(&args.common)?;
    cfg.strategy = args.strategy.clone();
    cfg.rounds = args.rounds;
    cfg.epsilon = args.epsilon;
    cfg.seed = args.seed;
    cfg.threshold = args.threshold;
    cfg.validate()?;
    Ok(cfg)
}

fn with_workers<T>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure>
where
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Inspect(common) => {
            let doc = pipeline::inspect(&config(&common)?)?;
            let body = match common.format {
                Format::Csv => doc.to_csv(),
                f => render(f, || pipeline::to_json(&doc), || doc.to_text())?,
            };
            emit(&common.out, &body)
        }
        Command::Energy(common) => {
            let doc = pipeline::energy_doc(&config(&common)?)?;
            emit(
                &common.out,
                &render(common.format, || pipeline::to_json(&doc), || doc.to_text())?,
            )
        }
        Command::Run(args) => {
            let cfg = run_config(&args)?;
            let doc = with_workers(args.workers, || pipeline::run(&cfg))??;
            emit(
                &args.common.out,
                &render(
                    args.common.format,
                    || pipeline::to_json(&doc),
                    || doc.to_text(),
                )?,
            )
        }
        Command::Decide(args) => {
            let cfg = run_config(&args)?;
            let doc = with_workers(args.workers, || pipeline::decide(&cfg))??;
            emit(
                &args.common.out,
                &render(
                    args.common.format,
                    || pipeline::to_json(&doc),
                    || doc.to_text(),
                )?,
            )
        }
        Command::Oracle(args) => {
            let doc = pipeline::oracle(&config(&args.common)?, args.inject)?;
            emit(
                &args.common.out,
                &render(
                    args.common.format,
                    || pipeline::to_json(&doc),
                    || doc.to_text(),
                )?,
            )?;
            match doc.first_failure() {
                Some(check) => Err(Failure::Check(format!(
                    "oracle check `{}` failed: {}",
                    check.name, check.detail
                ))),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("posthoc: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("posthoc: {msg}");
            ExitCode::from(2)
        }
    }
}
