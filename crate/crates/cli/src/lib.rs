//! The `sqfree` command line: one subcommand per operation, JSON or CSV
//! reports carrying the tool version and every effective parameter.

pub mod checks;
mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use sqfree_core::experiments::{FamilyKind, Mode};
use sqfree_core::squarefree::Method;
use sqfree_core::{Error, IntPolynomial};

pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "sqfree", version, about = "Square-free values of integer polynomials, counted exactly")]
pub struct Cli {
    /// Report file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// `key = value` file supplying any flag not given on the command line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Two-column CSV of the command's natural series.
    #[arg(long = "emit-plot-data", global = true)]
    pub emit_plot_data: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Certified enclosure of the density constant c_f.
    Cf(CfArgs),
    /// Count n <= N with f(n) square-free.
    Sf(SfArgs),
    /// Count n <= N, s <= S with f(n) = s r².
    Qf(QfArgs),
    /// Count a + g(n) ≡ 0 mod m over |a| <= H, n <= N.
    Countw(CountwArgs),
    /// Count primitive a ∈ [-H, H]^{k+1}, n <= N with f_a(n) ≡ 0 mod m.
    Countu(CountuArgs),
    /// Sum of U over square moduli q² with q square-free in (Q, 2Q].
    Avgu(AvguArgs),
    /// Basis, determinant, successive minima and box counts of the congruence lattice.
    Lattice(LatticeArgs),
    /// Weyl sum of h·g(n)/m.
    Weyl(WeylArgs),
    /// Exact discrepancy of {g(n)/m}.
    Disc(DiscArgs),
    /// Averaged |S_f(N) - c_f N| over a seeded polynomial family.
    Experiment(ExperimentArgs),
    /// Run the oracle and bound-check grid.
    Check(CheckArgs),
}

fn parse_poly(s: &str) -> Result<IntPolynomial, Error> {
    s.parse()
}

#[derive(Debug, Args, Serialize)]
pub struct CfArgs {
    /// Coefficients a0,a1,...,ak.
    #[arg(long, value_parser = parse_poly, allow_hyphen_values = true)]
    pub poly: IntPolynomial,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SfArgs {
    #[arg(long, value_parser = parse_poly, allow_hyphen_values = true)]
    pub poly: IntPolynomial,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    #[arg(long, default_value = "sieve")]
    pub method: Method,
    /// Width of the c_f enclosure; 1/(10N) when absent.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct QfArgs {
    #[arg(long, value_parser = parse_poly, allow_hyphen_values = true)]
    pub poly: IntPolynomial,
    #[arg(long = "S")]
    #[serde(rename = "S")]
    pub s: u64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CountwArgs {
    /// Base polynomial with g(0) = 0.
    #[arg(long, value_parser = parse_poly, allow_hyphen_values = true)]
    pub g: IntPolynomial,
    #[arg(long)]
    pub m: u64,
    #[arg(long = "H")]
    #[serde(rename = "H")]
    pub h: u64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CountuArgs {
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub m: u64,
    #[arg(long = "H")]
    #[serde(rename = "H")]
    pub h: u64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct AvguArgs {
    #[arg(long)]
    pub k: u32,
    #[arg(long = "H")]
    #[serde(rename = "H")]
    pub h: u64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    #[arg(long = "Q")]
    #[serde(rename = "Q")]
    pub q: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct LatticeArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub m: u64,
    #[arg(long)]
    pub n: u64,
    /// Also count lattice points in the box [-H, H]^{k+1}.
    #[arg(long = "H")]
    #[serde(rename = "H")]
    pub h: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct WeylArgs {
    #[arg(long, value_parser = parse_poly, allow_hyphen_values = true)]
    pub g: IntPolynomial,
    #[arg(long)]
    pub m: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub h: i64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct DiscArgs {
    #[arg(long, value_parser = parse_poly, allow_hyphen_values = true)]
    pub g: IntPolynomial,
    #[arg(long)]
    pub m: u64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    /// Also evaluate the Erdős–Turán right-hand side with this cutoff.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub family: FamilyKind,
    /// Degree; implied by --g for the gg family.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "H")]
    #[serde(rename = "H")]
    pub h: u64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_poly, allow_hyphen_values = true)]
    pub g: Option<IntPolynomial>,
    /// `exact` averages over the whole family instead of sampling.
    #[arg(long, default_value = "sampled")]
    pub mode: Mode,
    /// Assert mean error <= C · bound · N^{0.1}.
    #[arg(long = "C")]
    #[serde(rename = "C")]
    pub c: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    #[arg(long, value_enum, default_value_t = checks::Level::Quick)]
    pub level: checks::Level,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Include the averaged-error trend experiment.
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    pub trend: bool,
}

/// What a subcommand hands back for writing.
pub(crate) struct Outcome {
    pub result: Value,
    /// `Some` for commands that assert something.
    pub holds: Option<bool>,
    /// Fixed-schema rows replacing the key/value CSV.
    pub table: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    pub plot: Option<Plot>,
}

pub(crate) struct Plot {
    pub x: &'static str,
    pub y: &'static str,
    pub points: Vec<(f64, f64)>,
}

impl Cmd {
    /// Replaces parameter defaults that depend on other parameters.
    fn resolve(&mut self) {
        match self {
            Cmd::Sf(a) if a.tol.is_none() => a.tol = Some(1.0 / (10.0 * a.n.max(1) as f64)),
            Cmd::Experiment(a) if a.k.is_none() => a.k = a.g.as_ref().and_then(|g| g.degree()),
            _ => {}
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Cmd::Cf(_) => "cf",
            Cmd::Sf(_) => "sf",
            Cmd::Qf(_) => "qf",
            Cmd::Countw(_) => "countw",
            Cmd::Countu(_) => "countu",
            Cmd::Avgu(_) => "avgu",
            Cmd::Lattice(_) => "lattice",
            Cmd::Weyl(_) => "weyl",
            Cmd::Disc(_) => "disc",
            Cmd::Experiment(_) => "experiment",
            Cmd::Check(_) => "check",
        }
    }

    fn params(&self) -> Value {
        let v = match self {
            Cmd::Cf(a) => serde_json::to_value(a),
            Cmd::Sf(a) => serde_json::to_value(a),
            Cmd::Qf(a) => serde_json::to_value(a),
            Cmd::Countw(a) => serde_json::to_value(a),
            Cmd::Countu(a) => serde_json::to_value(a),
            Cmd::Avgu(a) => serde_json::to_value(a),
            Cmd::Lattice(a) => serde_json::to_value(a),
            Cmd::Weyl(a) => serde_json::to_value(a),
            Cmd::Disc(a) => serde_json::to_value(a),
            Cmd::Experiment(a) => serde_json::to_value(a),
            Cmd::Check(a) => serde_json::to_value(a),
        };
        v.expect("parameters serialize")
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) => EXIT_USAGE,
        Error::Budget(_) | Error::Capacity(_) | Error::Undecided(_) => EXIT_BUDGET,
    }
}

/// Parses flags, merges the config file underneath them, and re-parses.
fn parse_args(argv: Vec<String>) -> Result<Cli, clap::Error> {
    let command = Cli::command();
    // Lenient first pass: required flags may still come from the config file.
    let loose = command.clone().ignore_errors(true).try_get_matches_from(&argv)?;
    let config_path = |m: &clap::ArgMatches| m.try_get_one::<PathBuf>("config").ok().flatten().cloned();
    let path = config_path(&loose).or_else(|| loose.subcommand().and_then(|(_, sub)| config_path(sub)));
    let path = match path {
        Some(p) => p,
        None => return Cli::try_parse_from(&argv),
    };
    let usage = |msg: String| Cli::command().error(clap::error::ErrorKind::InvalidValue, msg);
    let entries = config::load(&path).map_err(usage)?;
    let mut merged = argv;
    config::merge(&command, &loose, &entries, &mut merged).map_err(usage)?;
    let matches = command.try_get_matches_from(&merged)?;
    Cli::from_arg_matches(&matches)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&format!("{prefix}.{k}"), x, out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn render(cli: &Cli, outcome: &Outcome) -> Result<Vec<u8>, String> {
    let status = match outcome.holds {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "ok",
    };
    let envelope = json!({
        "tool": "sqfree",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "params": cli.command.params(),
        "status": status,
        "result": outcome.result,
    });
    match cli.format {
        Format::Json => {
            let mut bytes = serde_json::to_vec_pretty(&envelope).map_err(|e| e.to_string())?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| e.to_string();
            match &outcome.table {
                Some((header, rows)) => {
                    w.write_record(header).map_err(err)?;
                    for r in rows {
                        w.write_record(r).map_err(err)?;
                    }
                }
                None => {
                    let mut pairs = Vec::new();
                    for key in ["tool", "version", "command", "status"] {
                        flatten(key, &envelope[key], &mut pairs);
                    }
                    flatten("params", &envelope["params"], &mut pairs);
                    flatten("result", &envelope["result"], &mut pairs);
                    w.write_record(["key", "value"]).map_err(err)?;
                    for (k, v) in pairs {
                        w.write_record([k, v]).map_err(err)?;
                    }
                }
            }
            w.into_inner().map_err(|e| e.to_string())
        }
    }
}

fn write_plot(path: &PathBuf, plot: &Plot) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| e.to_string())?;
    w.write_record([plot.x, plot.y]).map_err(|e| e.to_string())?;
    for (x, y) in &plot.points {
        w.write_record([x.to_string(), y.to_string()]).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

/// Runs one invocation and returns the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let mut cli = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    cli.command.resolve();
    if let Some(w) = cli.workers {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w as usize).build_global();
    }
    let outcome = match commands::dispatch(&cli.command, cli.emit_plot_data.is_some()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("sqfree {}: {e}", cli.command.name());
            return exit_code(&e);
        }
    };
    let bytes = match render(&cli, &outcome) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("sqfree: cannot render report: {e}");
            return EXIT_BUDGET;
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("sqfree: cannot write report: {e}");
        return EXIT_USAGE;
    }
    if let (Some(path), Some(plot)) = (&cli.emit_plot_data, &outcome.plot) {
        if let Err(e) = write_plot(path, plot) {
            eprintln!("sqfree: cannot write plot data: {e}");
            return EXIT_USAGE;
        }
    }
    match outcome.holds {
        Some(false) => EXIT_ASSERTION,
        _ => 0,
    }
}
