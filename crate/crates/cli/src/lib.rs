//! Command-line front end: simulations, tradeoff curves, certificates and the
//! identity checks.

mod verify;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cocache::analytics::{curves_csv, curves_json, tradeoff};
use cocache::bounds::{bound_report, certify_optimality_n2};
use cocache::delivery::{simulate, Scheme, SimulationConfig, SimulationReport};
use cocache::{
    parse_rational, worst_case_demand, DemandVector, Error, FieldKind, InstanceDescriptor, Mode, ProblemInstance,
};

pub use verify::{run_checks, CheckResult, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "cocache", version, about = "Coded caching simulator and load-curve toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Place, deliver and decode one instance.
    Simulate(SimulateArgs),
    /// Emit the memory-load curves.
    Tradeoff(TradeoffArgs),
    /// Compare the achievable envelope with the uncoded-placement bound.
    Certify(CertifyArgs),
    /// Run the identity checks and a randomized decode battery.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Proposed,
    Mns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Centralized,
    Decentralized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Gf256,
    Gf65536,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of files.
    #[arg(short = 'N', conflicts_with = "instance", required_unless_present = "instance")]
    pub files: Option<usize>,
    /// Number of users.
    #[arg(short = 'K', conflicts_with = "instance", required_unless_present = "instance")]
    pub users: Option<usize>,
    /// Cache size in files, as "4/5" or "1.2".
    #[arg(short = 'M', conflicts_with = "instance", required_unless_present = "instance")]
    pub memory: Option<String>,
    /// File length in bits.
    #[arg(short = 'F', conflicts_with = "instance", required_unless_present = "instance")]
    pub file_bits: Option<u64>,
    /// JSON descriptor with N, K, M, F, seed and mode.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, conflicts_with = "instance")]
    pub seed: Option<u64>,
    #[arg(long, value_enum, conflicts_with = "instance")]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value = "proposed")]
    pub scheme: SchemeArg,
    /// Comma-separated 1-based file indices, one per user. Defaults to the worst case.
    #[arg(long)]
    pub demands: Option<String>,
    #[arg(long, value_enum, default_value = "gf256")]
    pub field: FieldArg,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    #[arg(short = 'N')]
    pub files: usize,
    #[arg(short = 'K')]
    pub users: usize,
    /// Memory points between 0 and N, in addition to the grid tN/K.
    #[arg(long, default_value_t = 100)]
    pub density: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(short = 'N')]
    pub files: usize,
    #[arg(short = 'K')]
    pub users: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Random round trips in the decode battery.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Smaller sizes throughout.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// How a command ended.
#[derive(Debug)]
pub enum Outcome {
    Success,
    /// Decoding, certification or an identity check failed.
    Failed(String),
    /// The configuration was rejected.
    Invalid(String),
}

impl Outcome {
    pub fn code(&self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Failed(msg) => {
                eprintln!("error: {msg}");
                1
            }
            Outcome::Invalid(msg) => {
                eprintln!("error: {msg}");
                2
            }
        }
    }
}

impl From<Error> for Outcome {
    fn from(e: Error) -> Self {
        match e {
            Error::CertificationFailed { .. } | Error::DecodeFailed { .. } | Error::RankDeficient { .. } => {
                Outcome::Failed(e.to_string())
            }
            _ => Outcome::Invalid(e.to_string()),
        }
    }
}

pub fn run(cli: Cli) -> Outcome {
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Tradeoff(a) => cmd_tradeoff(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Verify(a) => cmd_verify(a),
    };
    result.unwrap_or_else(|o| o)
}

fn emit(out: Option<&PathBuf>, body: &str) -> Result<(), Outcome> {
    match out {
        Some(path) => {
            fs::write(path, body).map_err(|e| Outcome::Invalid(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(|e| Outcome::Failed(e.to_string()))
        }
    }
}

fn parse_demands(spec: &str, files: usize) -> Result<DemandVector, Error> {
    let ids = spec
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| Error::InvalidDemand(format!("{s:?} is not a file index"))))
        .collect::<Result<Vec<_>, _>>()?;
    DemandVector::from_one_based(files, &ids)
}

fn instance_of(a: &SimulateArgs) -> Result<(ProblemInstance, u64, Mode), Error> {
    if let Some(path) = &a.instance {
        let text = fs::read_to_string(path).map_err(|e| Error::Descriptor(format!("{}: {e}", path.display())))?;
        let desc = InstanceDescriptor::from_json(&text)?;
        return Ok((desc.instance()?, desc.seed, desc.mode));
    }
    let memory = parse_rational(a.memory.as_deref().unwrap_or_default())?;
    let inst = ProblemInstance::new(
        a.files.unwrap_or_default(),
        a.users.unwrap_or_default(),
        memory,
        a.file_bits.unwrap_or_default(),
    )?;
    let mode = match a.mode {
        Some(ModeArg::Decentralized) => Mode::Decentralized,
        _ => Mode::Centralized,
    };
    Ok((inst, a.seed.unwrap_or(0), mode))
}

pub fn summary(rep: &SimulationReport) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "N={} K={} M={} F={} mode={:?} scheme={:?} field={:?} seed={}\n",
        rep.files, rep.users, rep.memory, rep.file_bits, rep.mode, rep.scheme, rep.field, rep.seed
    ));
    let demands: Vec<String> = rep.demands.iter().map(|d| d.to_string()).collect();
    s.push_str(&format!("demands: {}\n", demands.join(",")));
    s.push_str(&format!("load: {} bits = {} F ({:.6})\n", rep.transmitted_bits, rep.load, rep.normalized_load));
    s.push_str(&format!("wire bits: {}, coefficient header bits: {}\n", rep.wire_bits, rep.header_bits));
    if let (Some(expected), Some(ok)) = (&rep.expected_load, rep.matches_formula) {
        s.push_str(&format!("formula: {expected} F, match: {ok}\n"));
    }
    if let Some(r) = rep.reference_load {
        let rel = if r > 0.0 { (rep.normalized_load - r) / r * 100.0 } else { 0.0 };
        s.push_str(&format!("reference load: {r:.6} (measured {rel:+.2}%)\n"));
    }
    for l in &rep.levels {
        let two = l.two_step_bits.map(|b| b.to_string()).unwrap_or_else(|| "-".into());
        s.push_str(&format!("  level {}: {} (two-step {two}, xor {})\n", l.level, l.chosen, l.xor_bits));
    }
    for (u, ok) in rep.decoded.iter().enumerate() {
        s.push_str(&format!("user {}: {}\n", u + 1, if *ok { "decoded" } else { "FAILED" }));
    }
    if rep.attempts > 1 {
        s.push_str(&format!("coding seed {} after {} attempts\n", rep.coding_seed, rep.attempts));
    }
    if let Some(f) = &rep.failure {
        s.push_str(&format!("failure: {f}\n"));
    }
    s
}

fn cmd_simulate(a: SimulateArgs) -> Result<Outcome, Outcome> {
    if a.format == Format::Csv {
        return Err(Outcome::Invalid("simulate reports are text or json".into()));
    }
    let (instance, seed, mode) = instance_of(&a)?;
    let demands = match &a.demands {
        Some(spec) => parse_demands(spec, instance.files())?,
        None => worst_case_demand(&instance),
    };
    if demands.users() != instance.users() {
        return Err(
            Error::InvalidDemand(format!("expected {} entries, got {}", instance.users(), demands.users())).into()
        );
    }
    let cfg = SimulationConfig {
        instance,
        mode,
        scheme: match a.scheme {
            SchemeArg::Proposed => Scheme::Proposed,
            SchemeArg::Mns => Scheme::Mns,
        },
        demands,
        seed,
        field: match a.field {
            FieldArg::Gf256 => FieldKind::Gf256,
            FieldArg::Gf65536 => FieldKind::Gf65536,
        },
    };
    let rep = simulate(&cfg)?;
    let json = serde_json::to_string_pretty(&rep).expect("report serializes") + "\n";
    match (a.format, &a.out) {
        (Format::Json, None) => emit(None, &json)?,
        (_, Some(path)) => {
            emit(Some(path), &json)?;
            if a.format == Format::Text {
                emit(None, &summary(&rep))?;
            }
        }
        _ => emit(None, &summary(&rep))?,
    }
    if rep.all_decoded {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::Failed(rep.failure.unwrap_or_else(|| "decoding failed".into())))
    }
}

fn cmd_tradeoff(a: TradeoffArgs) -> Result<Outcome, Outcome> {
    if a.density == 0 {
        return Err(Outcome::Invalid("density must be positive".into()));
    }
    let points = tradeoff(a.files, a.users, a.density)?;
    let body = match a.format {
        Format::Csv => curves_csv(&points),
        Format::Json => curves_json(&points) + "\n",
        Format::Text => return Err(Outcome::Invalid("tradeoff output is csv or json".into())),
    };
    emit(a.out.as_ref(), &body)?;
    Ok(Outcome::Success)
}

fn cmd_certify(a: CertifyArgs) -> Result<Outcome, Outcome> {
    let cert = if a.files == 2 { certify_optimality_n2(a.users)? } else { bound_report(a.files, a.users)? };
    emit(a.out.as_ref(), &(cert.to_json() + "\n"))?;
    Ok(Outcome::Success)
}

fn cmd_verify(a: VerifyArgs) -> Result<Outcome, Outcome> {
    let opts = VerifyOptions::new(a.quick, a.trials, a.seed);
    let results = run_checks(&opts);
    let mut table = String::new();
    for r in &results {
        table.push_str(&format!("{:<24} {:<4} {}\n", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail));
    }
    emit(None, &table)?;
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::Failed(format!("failed checks: {}", failed.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failures_map_to_exit_codes() {
        let decode = Error::DecodeFailed { user: 0, reason: "x".into() };
        assert_eq!(Outcome::from(decode).code(), 1);
        let cert = Error::CertificationFailed { memory: "1".into(), achievable: "1".into(), bound: "2".into() };
        assert_eq!(Outcome::from(cert).code(), 1);
        assert_eq!(Outcome::from(Error::EmptyFile).code(), 2);
        assert_eq!(Outcome::Success.code(), 0);
    }

    #[test]
    fn demand_lists_are_one_based() {
        assert_eq!(parse_demands("1, 2,2", 2).unwrap().one_based(), vec![1, 2, 2]);
        assert!(parse_demands("0,1", 2).is_err());
        assert!(parse_demands("1,a", 2).is_err());
    }
}
