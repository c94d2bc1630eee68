//! Command-line front end: scenarios, circuit files, ε sweeps and the
//! verification suite, rendered as text, JSON and CSV.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use weaktrace::circuitfile::{parse_document, serialize_document, ParseError};
use weaktrace::hilbert::Pol;
use weaktrace::optics::{CouplingMode, CALIBRATION_ID};
use weaktrace::scenarios::{
    run_circuit, run_scenario, scenario_document, verify_all, Report, DEFAULT_EPSILON, SCENARIO_NAMES,
};
use weaktrace::trace::TraceReport;
use weaktrace::Error;

/// Version tag of the JSON documents.
pub const SCHEMA_VERSION: &str = "weaktrace-report/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "weaktrace", version, about = "Weak values and mirror traces of pre- and postselected photons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Outputs {
    /// Write the JSON report here (`-` for standard output).
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write the trace table as CSV here (`-` for standard output).
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a built-in scenario.
    Scenario {
        /// One of the names printed by `list`.
        name: String,
        /// Coupling strength of every mirror.
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        eps: f64,
        /// Engine for the two-cycle scenarios: exact or first-order.
        #[arg(long, default_value = "exact")]
        mode: String,
        #[command(flatten)]
        out: Outputs,
    },
    /// Run a circuit file postselected on one outcome.
    Run {
        file: PathBuf,
        /// Outcome whose click is postselected.
        #[arg(long)]
        postselect: String,
        /// Input port and polarization, `PORT` or `PORT:H|V`; defaults to the
        /// file's `source` line.
        #[arg(long)]
        source: Option<String>,
        /// Override every mirror's coupling strength.
        #[arg(long)]
        eps: Option<f64>,
        /// Override every mirror's coupling mode.
        #[arg(long)]
        mode: Option<String>,
        #[command(flatten)]
        out: Outputs,
    },
    /// Exact traces over a list of coupling strengths, one row per ε per mirror.
    Sweep {
        /// Comma-separated coupling strengths.
        #[arg(long, value_delimiter = ',', required = true)]
        eps_list: Vec<f64>,
        /// Built-in scenario to sweep.
        #[arg(long, default_value = "fig1", conflicts_with = "file")]
        scenario: String,
        /// Sweep a circuit file instead of a scenario.
        #[arg(long)]
        file: Option<PathBuf>,
        /// Input for `--file`, as for `run`.
        #[arg(long)]
        source: Option<String>,
        /// Branch whose traces are tabulated.
        #[arg(long, default_value = "D0")]
        postselect: String,
        #[command(flatten)]
        out: Outputs,
    },
    /// Run every assertion suite; exit status 1 if any check fails.
    Verify {
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        eps: f64,
        /// Write the JSON report here (`-` for standard output).
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Print the circuit file of a built-in scenario.
    Export {
        name: String,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        eps: f64,
        #[arg(long, default_value = "exact")]
        mode: String,
    },
    /// List the built-in scenarios.
    List,
}

/// An error that maps to exit status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(message: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(message.into()).into())
}

/// Input errors from the library (unknown names, bad configuration) are
/// usage errors; anything else is reported as is.
fn classify(e: Error) -> anyhow::Error {
    match e {
        Error::UnknownPort(_)
        | Error::UnknownMirror(_)
        | Error::UnknownOutcome(_)
        | Error::UnknownTimepoint(_)
        | Error::Config(_)
        | Error::Wiring(_)
        | Error::ImpossibleBranch { .. } => UsageError(e.to_string()).into(),
        other => other.into(),
    }
}

#[derive(Debug, Serialize)]
struct RunConfig {
    epsilon: Option<f64>,
    mode: Option<CouplingMode>,
    postselect: Option<String>,
    source: Option<String>,
    file: Option<String>,
}

/// The JSON document written by `scenario`, `run` and `verify`.
#[derive(Debug, Serialize)]
struct RunReport<'a> {
    schema: &'static str,
    calibration: &'static str,
    command: &'static str,
    id: String,
    config: RunConfig,
    passed: bool,
    reports: &'a [Report],
}

/// One CSV record: a mirror's trace in one branch at one ε.
#[derive(Debug, Clone, Serialize)]
struct TraceRow {
    id: String,
    epsilon: f64,
    outcome: String,
    mirror: String,
    probability: f64,
    coeff_first_order_re: Option<f64>,
    coeff_first_order_im: Option<f64>,
    trace_amplitude: Option<f64>,
    fidelity_deficit_exact: Option<f64>,
    deficit_over_eps_sq: Option<f64>,
    kick_exact_re: Option<f64>,
    kick_exact_im: Option<f64>,
    verdict: String,
}

impl TraceRow {
    fn new(id: &str, t: &TraceReport) -> Self {
        let verdict = serde_json::to_value(t.verdict).ok().and_then(|v| v.as_str().map(String::from));
        TraceRow {
            id: id.to_string(),
            epsilon: t.epsilon,
            outcome: t.outcome.clone(),
            mirror: t.mirror.clone(),
            probability: t.probability,
            coeff_first_order_re: t.coeff_first_order.map(|c| c.re),
            coeff_first_order_im: t.coeff_first_order.map(|c| c.im),
            trace_amplitude: t.trace_amplitude,
            fidelity_deficit_exact: t.fidelity_deficit_exact,
            deficit_over_eps_sq: t
                .fidelity_deficit_exact
                .filter(|_| t.epsilon > 0.0)
                .map(|d| d / (t.epsilon * t.epsilon)),
            kick_exact_re: t.kick_exact.map(|c| c.re),
            kick_exact_im: t.kick_exact.map(|c| c.im),
            verdict: verdict.unwrap_or_default(),
        }
    }
}

fn parse_mode(s: &str) -> anyhow::Result<CouplingMode> {
    s.parse().or_else(|_| usage(format!("unknown mode `{s}` (expected exact or first-order)")))
}

fn check_epsilon(eps: f64) -> anyhow::Result<f64> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(eps)
    } else {
        usage(format!("coupling strength must be finite and non-negative, got {eps}"))
    }
}

fn parse_source(s: &str) -> anyhow::Result<(String, Pol)> {
    let (port, pol) = match s.split_once(':') {
        Some((p, "H")) => (p, Pol::H),
        Some((p, "V")) => (p, Pol::V),
        Some((_, other)) => return usage(format!("unknown polarization `{other}` in --source (expected H or V)")),
        None => (s, Pol::H),
    };
    Ok((port.to_string(), pol))
}

fn write_to(path: &Path, write: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
    if path.as_os_str() == "-" {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        write(&mut lock)?;
        lock.flush()?;
        Ok(())
    } else {
        let mut file =
            io::BufWriter::new(fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
        write(&mut file)?;
        file.flush()?;
        Ok(())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    write_to(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn write_csv(path: &Path, rows: &[TraceRow]) -> anyhow::Result<()> {
    write_to(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        if rows.is_empty() {
            csv.write_record(CSV_COLUMNS)?;
        }
        for row in rows {
            csv.serialize(row)?;
        }
        csv.flush()?;
        Ok(())
    })
}

/// Column order of every CSV table.
pub const CSV_COLUMNS: [&str; 13] = [
    "id",
    "epsilon",
    "outcome",
    "mirror",
    "probability",
    "coeff_first_order_re",
    "coeff_first_order_im",
    "trace_amplitude",
    "fidelity_deficit_exact",
    "deficit_over_eps_sq",
    "kick_exact_re",
    "kick_exact_im",
    "verdict",
];

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.6e}"))
}

/// Human-readable summary of one report.
fn render(report: &Report, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{} — {}", report.scenario, report.title)?;
    writeln!(out, "calibration {}  epsilon {:e}  mode {}", report.calibration, report.epsilon, report.mode)?;
    if !report.probabilities.is_empty() {
        writeln!(out, "probabilities:")?;
        for p in &report.probabilities {
            writeln!(out, "  {:<10} {:.12}", p.outcome, p.probability)?;
        }
    }
    if !report.weak_values.is_empty() {
        writeln!(out, "weak values:")?;
        for w in &report.weak_values {
            let v = serde_json::to_string(&w.value).unwrap_or_default();
            writeln!(out, "  {} at {} ({}): {}", w.projector, w.time, w.postselection, v)?;
        }
    }
    if !report.traces.is_empty() {
        writeln!(out, "traces (coefficient and amplitude in units of ε):")?;
        writeln!(
            out,
            "  {:<10} {:<8} {:>13} {:>13} {:>13} {:>13}  verdict",
            "outcome", "mirror", "probability", "coeff", "amplitude", "deficit"
        )?;
        for t in &report.traces {
            let row = TraceRow::new("", t);
            writeln!(
                out,
                "  {:<10} {:<8} {:>13.6e} {:>13} {:>13} {:>13}  {}",
                t.outcome,
                t.mirror,
                t.probability,
                fmt_opt(row.coeff_first_order_re),
                fmt_opt(row.trace_amplitude),
                fmt_opt(row.fidelity_deficit_exact),
                row.verdict
            )?;
        }
    }
    if !report.checks.is_empty() {
        writeln!(out, "checks:")?;
        for c in &report.checks {
            let value = serde_json::to_string(&c.value).unwrap_or_default();
            let expected = serde_json::to_string(&c.expected).unwrap_or_default();
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            writeln!(out, "  {verdict} {}: {value} (expected {expected}, tolerance {:e})", c.name, c.tolerance)?;
        }
    }
    for n in &report.notes {
        writeln!(out, "note: {n}")?;
    }
    Ok(())
}

fn emit(
    command: &'static str,
    id: &str,
    config: RunConfig,
    reports: &[Report],
    out: &Outputs,
    stdout: &mut impl Write,
) -> anyhow::Result<bool> {
    let passed = reports.iter().all(Report::passed);
    let to_stdout = |p: &Option<PathBuf>| p.as_deref().is_some_and(|p| p.as_os_str() == "-");
    if !to_stdout(&out.json) && !to_stdout(&out.csv) {
        for r in reports {
            render(r, stdout)?;
            writeln!(stdout)?;
        }
    }
    if let Some(path) = &out.json {
        let doc = RunReport {
            schema: SCHEMA_VERSION,
            calibration: CALIBRATION_ID,
            command,
            id: id.to_string(),
            config,
            passed,
            reports,
        };
        write_json(path, &doc)?;
    }
    if let Some(path) = &out.csv {
        let rows: Vec<TraceRow> =
            reports.iter().flat_map(|r| r.traces.iter().map(|t| TraceRow::new(&r.scenario, t))).collect();
        write_csv(path, &rows)?;
    }
    Ok(passed)
}

fn load_circuit(
    file: &Path,
    source: Option<&str>,
) -> anyhow::Result<(weaktrace::engine::Circuit, weaktrace::hilbert::StateVector, String)> {
    let text = fs::read_to_string(file).map_err(|e| UsageError(format!("cannot read {}: {e}", file.display())))?;
    let doc = parse_document(&text).map_err(|e: ParseError| {
        let lines: Vec<String> = e.diagnostics.iter().map(|d| format!("{}:{d}", file.display())).collect();
        UsageError(lines.join("\n"))
    })?;
    let (port, pol) = match source {
        Some(s) => parse_source(s)?,
        None => match doc.source.clone() {
            Some(s) => s,
            None => return usage("the circuit declares no source; pass --source PORT[:POL]"),
        },
    };
    let initial = doc.circuit.source(&port, pol).map_err(classify)?;
    Ok((doc.circuit, initial, format!("{port}:{pol}")))
}

fn default_mode(circuit: &weaktrace::engine::Circuit) -> CouplingMode {
    let all_first =
        !circuit.mirrors().is_empty() && circuit.mirrors().iter().all(|(_, c)| c.mode == CouplingMode::FirstOrder);
    if all_first {
        CouplingMode::FirstOrder
    } else {
        CouplingMode::Exact
    }
}

fn file_id(file: &Path) -> String {
    file.file_stem().map_or_else(|| file.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn dispatch(cli: Cli, stdout: &mut impl Write) -> anyhow::Result<i32> {
    match cli.command {
        Command::List => {
            for name in SCENARIO_NAMES {
                writeln!(stdout, "{name}")?;
            }
            Ok(EXIT_OK)
        }
        Command::Export { name, eps, mode } => {
            if !SCENARIO_NAMES.contains(&name.as_str()) {
                return usage(format!("unknown scenario `{name}`; known: {}", SCENARIO_NAMES.join(", ")));
            }
            let doc = scenario_document(&name, check_epsilon(eps)?, parse_mode(&mode)?).map_err(classify)?;
            write!(stdout, "{}", serialize_document(&doc))?;
            Ok(EXIT_OK)
        }
        Command::Scenario { name, eps, mode, out } => {
            if !SCENARIO_NAMES.contains(&name.as_str()) {
                return usage(format!("unknown scenario `{name}`; known: {}", SCENARIO_NAMES.join(", ")));
            }
            let eps = check_epsilon(eps)?;
            let mode = parse_mode(&mode)?;
            let report = run_scenario(&name, eps, mode).map_err(classify)?;
            let config = RunConfig { epsilon: Some(eps), mode: Some(mode), postselect: None, source: None, file: None };
            emit("scenario", &name, config, std::slice::from_ref(&report), &out, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Run { file, postselect, source, eps, mode, out } => {
            let (mut circuit, initial, source) = load_circuit(&file, source.as_deref())?;
            if let Some(eps) = eps {
                circuit = circuit.with_epsilon(check_epsilon(eps)?).map_err(classify)?;
            }
            let mode = match mode {
                Some(m) => parse_mode(&m)?,
                None => default_mode(&circuit),
            };
            let id = file_id(&file);
            let report = run_circuit(&id, &circuit, &initial, &postselect, mode).map_err(classify)?;
            let config = RunConfig {
                epsilon: Some(circuit.reference_epsilon()),
                mode: Some(mode),
                postselect: Some(postselect),
                source: Some(source),
                file: Some(file.display().to_string()),
            };
            emit("run", &id, config, std::slice::from_ref(&report), &out, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Sweep { eps_list, scenario, file, source, postselect, out } => {
            for &eps in &eps_list {
                check_epsilon(eps)?;
            }
            let loaded = match &file {
                Some(f) => Some(load_circuit(f, source.as_deref())?),
                None if !SCENARIO_NAMES.contains(&scenario.as_str()) => {
                    return usage(format!("unknown scenario `{scenario}`; known: {}", SCENARIO_NAMES.join(", ")));
                }
                None => None,
            };
            let id = file.as_deref().map_or_else(|| scenario.clone(), file_id);
            let reports: Vec<Report> = eps_list
                .par_iter()
                .map(|&eps| match &loaded {
                    Some((circuit, initial, _)) => {
                        let c = circuit.with_epsilon(eps)?;
                        run_circuit(&id, &c, initial, &postselect, CouplingMode::Exact)
                    }
                    None => run_scenario(&scenario, eps, CouplingMode::Exact),
                })
                .collect::<weaktrace::Result<_>>()
                .map_err(classify)?;
            let rows: Vec<TraceRow> = reports
                .iter()
                .flat_map(|r| r.traces.iter().filter(|t| t.outcome == postselect).map(|t| TraceRow::new(&id, t)))
                .collect();
            if rows.is_empty() {
                return usage(format!("`{id}` reports no traces for outcome `{postselect}`"));
            }
            let table = SweepTable {
                schema: SCHEMA_VERSION,
                calibration: CALIBRATION_ID,
                command: "sweep",
                id: id.clone(),
                postselect: postselect.clone(),
                rows: rows.clone(),
            };
            if let Some(path) = &out.json {
                write_json(path, &table)?;
            }
            match &out.csv {
                Some(path) => write_csv(path, &rows)?,
                None if out.json.as_deref().is_some_and(|p| p.as_os_str() == "-") => {}
                None => write_csv(Path::new("-"), &rows)?,
            }
            Ok(EXIT_OK)
        }
        Command::Verify { eps, json } => {
            let eps = check_epsilon(eps)?;
            let reports = verify_all(eps)?;
            let out = Outputs { json, csv: None };
            let config = RunConfig { epsilon: Some(eps), mode: None, postselect: None, source: None, file: None };
            let passed = emit("verify", "verify", config, &reports, &out, stdout)?;
            let failed: usize = reports.iter().map(|r| r.failures().count()).sum();
            let total: usize = reports.iter().map(|r| r.checks.len()).sum();
            eprintln!("{} of {total} checks passed", total - failed);
            Ok(if passed { EXIT_OK } else { EXIT_FAILED })
        }
    }
}

#[derive(Debug, Serialize)]
struct SweepTable {
    schema: &'static str,
    calibration: &'static str,
    command: &'static str,
    id: String,
    postselect: String,
    rows: Vec<TraceRow>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status: 0 success, 1 failed checks under `verify`, 2
/// invalid input.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match dispatch(cli, &mut lock) {
        Ok(code) => code,
        // the reader went away (`| head`); nothing left to report to
        Err(e)
            if e.chain()
                .any(|c| c.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)) =>
        {
            EXIT_OK
        }
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_FAILED
            }
        }
    }
}
