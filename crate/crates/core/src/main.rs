use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use d2dcache::harness::{self, DemandMode, ExperimentConfig, DEFAULT_FIELD_BITS};
use d2dcache::model::{SchemeKind, Tamper};
use d2dcache::rational::{parse, Rational};
use d2dcache::sweep::{self, SweepSpec};
use d2dcache::trace::{PlacementDocument, TraceDocument};

#[derive(Parser)]
#[command(name = "d2dcache", version, about = "Secure device-to-device coded caching experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the placement phase and write the cache listings.
    Place {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deliver against a placement document and write a full trace.
    Deliver {
        /// Placement document written by `place`.
        placement: PathBuf,
        /// Comma-separated file indices, or `worst-case`.
        #[arg(long)]
        demands: Option<DemandMode>,
        #[arg(long, value_enum, default_value_t = TamperArg::None)]
        tamper: TamperArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit a trace independently of the run that produced it.
    Verify {
        trace: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Placement, delivery, decoding and secrecy audit in one go.
    Run {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, value_enum, default_value_t = TamperArg::None)]
        tamper: TamperArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate-memory curves and bounds as CSV.
    Sweep {
        #[arg(long = "K")]
        users: u32,
        #[arg(long = "N")]
        files: Option<u32>,
        /// Decentralized slot counts.
        #[arg(long = "L", value_delimiter = ',')]
        slots: Vec<u32>,
        /// Explicit memory values; corner points when omitted.
        #[arg(long = "M", value_delimiter = ',', value_parser = parse_rational)]
        memory: Vec<Rational>,
        /// Skip measured spot checks for small K.
        #[arg(long)]
        no_simulate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SystemArgs {
    #[arg(long, default_value = "centralized", value_parser = parse_scheme)]
    scheme: SchemeKind,
    #[arg(long = "K")]
    users: u32,
    /// Defaults to K.
    #[arg(long = "N")]
    files: Option<u32>,
    #[arg(long)]
    t: Option<u32>,
    /// Normalized memory; must be a corner point.
    #[arg(long = "M", value_parser = parse_rational)]
    memory: Option<Rational>,
    #[arg(long = "L")]
    slots: Option<u32>,
    #[arg(long, default_value_t = 1)]
    blocks: u32,
    #[arg(long, default_value_t = DEFAULT_FIELD_BITS)]
    field_bits: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated file indices, or `worst-case`.
    #[arg(long, default_value = "worst-case")]
    demands: DemandMode,
}

impl SystemArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            scheme: self.scheme,
            users: self.users,
            files: self.files.unwrap_or(self.users),
            t: self.t,
            memory: self.memory.clone(),
            slots: self.slots,
            field_bits: self.field_bits,
            blocks: self.blocks,
            seed: self.seed,
            demands: self.demands.clone(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TamperArg {
    None,
    ZeroKeys,
}

impl From<TamperArg> for Tamper {
    fn from(t: TamperArg) -> Self {
        match t {
            TamperArg::None => Tamper::None,
            TamperArg::ZeroKeys => Tamper::ZeroKeys,
        }
    }
}

fn parse_scheme(s: &str) -> Result<SchemeKind, String> {
    s.parse()
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    parse(s).ok_or_else(|| format!("not a number: {s:?}"))
}

fn emit(out: Option<&Path>, text: &str) -> io::Result<()> {
    match out {
        Some(p) => fs::write(p, text),
        None => io::stdout().write_all(text.as_bytes()),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn summarize(doc: &TraceDocument) {
    let decoded = doc.decode.iter().filter(|d| d.bit_exact).count();
    let caching = doc.secrecy.caching.iter().filter(|v| v.pass).count();
    eprintln!(
        "scheme={} K={} t={} decoded={}/{} caching_pass={}/{} delivery={} rate={}",
        doc.geometry.scheme,
        doc.geometry.users,
        doc.geometry.t,
        decoded,
        doc.decode.len(),
        caching,
        doc.secrecy.caching.len(),
        if doc.secrecy.delivery.pass { "PASS" } else { "FAIL" },
        d2dcache::rational::render(&doc.rates.measured),
    );
    for f in &doc.failures {
        eprintln!("failure: {f}");
    }
}

fn finish_trace(doc: &TraceDocument, out: Option<&Path>) -> Result<ExitCode, String> {
    emit(out, &doc.to_json()).map_err(|e| e.to_string())?;
    summarize(doc);
    Ok(if doc.success { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn execute(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Place { system, out } => {
            let cfg = system.config();
            let deployment = harness::place(&cfg).map_err(|e| e.to_string())?;
            let doc = PlacementDocument::new(&cfg, &deployment);
            let text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())? + "\n";
            emit(out.as_deref(), &text).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Deliver { placement, demands, tamper, out } => {
            let doc: PlacementDocument = read_json(&placement)?;
            let mut cfg = doc.config.clone();
            if let Some(d) = demands {
                cfg.demands = d;
            }
            cfg.validate().map_err(|e| e.to_string())?;
            let deployment = doc.deployment()?;
            let dem = cfg.demand_vector();
            let records = harness::deliver(&deployment, &dem, tamper.into()).map_err(|e| e.to_string())?;
            let trace = harness::assemble(&cfg, &deployment, &dem, records).map_err(|e| e.to_string())?;
            finish_trace(&trace, out.as_deref())
        }
        Command::Verify { trace, out } => {
            let doc: TraceDocument = read_json(&trace)?;
            let report = harness::verify_trace(&doc);
            let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())? + "\n";
            emit(out.as_deref(), &text).map_err(|e| e.to_string())?;
            if report.pass {
                eprintln!("audit PASS (run success: {})", report.run_success);
                Ok(ExitCode::SUCCESS)
            } else {
                for i in &report.issues {
                    eprintln!("audit: {i}");
                }
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Run { system, tamper, out } => {
            let cfg = system.config();
            let doc = harness::run_with_tamper(&cfg, tamper.into()).map_err(|e| e.to_string())?;
            finish_trace(&doc, out.as_deref())
        }
        Command::Sweep { users, files, slots, memory, no_simulate, out } => {
            let mut spec = SweepSpec::new(users, files.unwrap_or(users)).with_slots(slots);
            if !memory.is_empty() {
                spec = spec.with_grid(memory);
            }
            spec.simulate &= !no_simulate;
            let rows = sweep::sweep(&spec)?;
            let mut buf = Vec::new();
            sweep::write_csv(&spec, &rows, &mut buf).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &String::from_utf8(buf).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
