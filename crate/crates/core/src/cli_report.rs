//! Command-line runs and their artifacts.
//!
//! Every artifact starts with a provenance block holding the full run
//! configuration: `#`-prefixed lines in CSV, a `provenance` object in JSON.
//! Output locations are not part of the configuration, so two runs of the
//! same configuration produce identical bytes wherever they are written.
//!
//! CSV floats use `{:.16e}` (17 significant digits); JSON floats use the
//! shortest representation that round-trips.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
//! floor, 4 Monte Carlo cross-check failure.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::convexity_audit::{
    self, audit_row, default_s_grid, monte_carlo_cross_check, scan, AuditError, ConvexityAuditRow, McCrossCheck,
    S_FLOOR,
};
use crate::dirichlet_probe::{builtin_family, logsob_probe, poincare_probe, CylinderFunction, ProbeError, ProbeReport};
use crate::entropic_measure::{log_prob_above, EntropicParams, EntropicSampler, Partition, SampleRecord};
use crate::quantile_space::{geodesic, inverse_distribution, w2_distance, DiscreteMeasure, QuantileFunction, QuantileRepr};
use crate::rng::SeededRng;

pub const OUT_DIR_ENV: &str = "ENTROPIC_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "entropic-out";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid {field}: {reason}")]
    Config { field: String, reason: String },
    #[error("numerical floor: {0}")]
    NumericalFloor(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io(_) => 1,
            RunError::Config { .. } => 2,
            RunError::NumericalFloor(_) => 3,
        }
    }
}

fn config_err(field: &str, reason: impl ToString) -> RunError {
    RunError::Config {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

impl From<AuditError> for RunError {
    fn from(e: AuditError) -> Self {
        match e {
            AuditError::Config { field, reason } => config_err(field, reason),
            AuditError::NumericalFloor { .. } => RunError::NumericalFloor(e.to_string()),
            AuditError::Measure(m) => config_err("input", m),
        }
    }
}

impl From<ProbeError> for RunError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::TooFewSamples { .. } => config_err("n", e),
            other => config_err("function", other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeChoice {
    Poincare,
    Logsob,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputOpts {
    /// Artifact path; `-` writes the artifact to stdout.
    #[arg(long, short, global = true)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Directory for artifacts when no --output is given.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// Artifact format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    #[serde(skip)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Draw paths from the entropic measure on a partition.
    Sample {
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Dyadic partition level (2^k cells).
        #[arg(long, conflicts_with = "knots")]
        dyadic: Option<u32>,
        /// Interior knots, comma separated.
        #[arg(long, value_delimiter = ',')]
        knots: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Wasserstein distance between two measures on [0, 1].
    W2 {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Points along the geodesic between two measures.
    Geodesic {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
        t: Vec<f64>,
    },
    /// Threshold probabilities Q(g(s) > c).
    Marginal {
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75")]
        c: Vec<f64>,
    },
    /// Audit rows on an (s, t) grid, optionally cross-checked by sampling.
    Audit {
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.75,0.9")]
        t: Vec<f64>,
        /// Monte Carlo draws per (s, t); enables the cross-check.
        #[arg(long)]
        mc_samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Refutation scan over s = 10^-1 … 10^-decades (or an explicit grid).
    Scan {
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.75,0.9")]
        t: Vec<f64>,
        #[arg(long, default_value_t = 10, conflicts_with = "s")]
        s_decades: u32,
        /// Explicit strictly decreasing s grid.
        #[arg(long, value_delimiter = ',')]
        s: Option<Vec<f64>>,
    },
    /// Monte Carlo probe of the Poincaré or log-Sobolev inequality.
    Probe {
        #[arg(long, value_enum, default_value = "poincare")]
        kind: ProbeChoice,
        /// Built-in function name, or `file:<path>` holding a JSON cylinder function.
        #[arg(long, default_value = "mean")]
        function: String,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 8)]
        dyadic: u32,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sample { .. } => "sample",
            Command::W2 { .. } => "w2",
            Command::Geodesic { .. } => "geodesic",
            Command::Marginal { .. } => "marginal",
            Command::Audit { .. } => "audit",
            Command::Scan { .. } => "scan",
            Command::Probe { .. } => "probe",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Marginal { .. } | Command::Audit { .. } | Command::Scan { .. } => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// Full configuration of one run.
#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "entropic", version, about = "Wasserstein space over [0, 1] and its entropic measure")]
pub struct RunConfig {
    #[command(subcommand)]
    #[serde(flatten)]
    pub command: Command,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOpts,
}

impl RunConfig {
    pub fn format(&self) -> Format {
        self.output.format.unwrap_or_else(|| self.command.default_format())
    }
}

/// The artifact and summary of a run, before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub artifact: Vec<u8>,
    pub summary: String,
    pub mc_failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: String,
    pub artifact_path: Option<PathBuf>,
    pub exit_code: i32,
}

fn params(beta: f64) -> Result<EntropicParams, RunError> {
    EntropicParams::new(beta).map_err(|e| config_err("beta", e))
}

fn require_seed(seed: Option<u64>) -> Result<u64, RunError> {
    seed.ok_or_else(|| config_err("seed", "this command is stochastic and needs an explicit --seed"))
}

/// Parses `uniform`, `dirac:<x>`, `atoms:<loc>:<mass>,...` or `steps:<file>`.
pub fn parse_measure(field: &str, literal: &str) -> Result<QuantileFunction, RunError> {
    let bad = |reason: String| config_err(field, format!("{literal:?}: {reason}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("{s:?} is not a number ({e})")));
    if literal == "uniform" {
        return Ok(QuantileFunction::identity());
    }
    if let Some(x) = literal.strip_prefix("dirac:") {
        return QuantileFunction::constant(num(x)?).map_err(|e| bad(e.to_string()));
    }
    if let Some(list) = literal.strip_prefix("atoms:") {
        let pairs = list
            .split(',')
            .map(|atom| {
                let (l, m) = atom.split_once(':').ok_or_else(|| bad(format!("atom {atom:?} is not <loc>:<mass>")))?;
                Ok((num(l)?, num(m)?))
            })
            .collect::<Result<Vec<_>, RunError>>()?;
        let m = DiscreteMeasure::from_pairs(&pairs).map_err(|e| bad(e.to_string()))?;
        return Ok(inverse_distribution(&m));
    }
    if let Some(path) = literal.strip_prefix("steps:") {
        let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        return serde_json::from_str(&text).map_err(|e| bad(e.to_string()));
    }
    Err(bad("expected uniform, dirac:<x>, atoms:<loc:mass,...> or steps:<file>".into()))
}

fn resolve_function(name: &str) -> Result<CylinderFunction, RunError> {
    if let Some(path) = name.strip_prefix("file:") {
        let text = fs::read_to_string(path).map_err(|e| config_err("function", e))?;
        return serde_json::from_str(&text).map_err(|e| config_err("function", e));
    }
    builtin_family()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f)
        .ok_or_else(|| {
            let names: Vec<&str> = builtin_family().iter().map(|(n, _)| *n).collect();
            config_err("function", format!("unknown {name:?}; built-ins are {}", names.join(", ")))
        })
}

struct Csv {
    out: String,
}

impl Csv {
    fn new(config: &RunConfig, header: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(out, "# entropic {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# config: {}", serde_json::to_string(&ConfigView::new(config)).expect("config serializes"));
        let _ = writeln!(out, "{header}");
        Self { out }
    }

    fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.out, "{}", cells.join(","));
    }

    fn finish(self) -> Vec<u8> {
        self.out.into_bytes()
    }
}

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

/// The configuration as recorded in artifacts, with the format resolved.
#[derive(Serialize)]
struct ConfigView<'a> {
    #[serde(flatten)]
    config: &'a RunConfig,
    format: Format,
}

impl<'a> ConfigView<'a> {
    fn new(config: &'a RunConfig) -> Self {
        Self {
            config,
            format: config.format(),
        }
    }
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    config: ConfigView<'a>,
}

fn json_artifact<T: Serialize>(config: &RunConfig, result: &T) -> Vec<u8> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        provenance: Provenance<'a>,
        result: &'a T,
    }
    let doc = Doc {
        provenance: Provenance {
            tool: "entropic",
            version: env!("CARGO_PKG_VERSION"),
            config: ConfigView::new(config),
        },
        result,
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("artifact serializes");
    bytes.push(b'\n');
    bytes
}

fn audit_csv(config: &RunConfig, rows: &[ConvexityAuditRow]) -> Vec<u8> {
    let mut csv = Csv::new(config, convexity_audit::CSV_HEADER);
    for r in rows {
        csv.row(&[r.beta, r.s, r.t, r.log_qa, r.log_qc, r.log_ratio, r.implied_k].map(f));
    }
    csv.finish()
}

fn check_floor(s: &[f64]) -> Result<(), RunError> {
    match s.iter().find(|&&v| v < S_FLOOR) {
        Some(v) => Err(RunError::NumericalFloor(format!("s = {v:e} is below {S_FLOOR:e}"))),
        None => Ok(()),
    }
}

/// Runs a configuration and returns the artifact bytes and summary line.
pub fn execute(config: &RunConfig) -> Result<Execution, RunError> {
    let format = config.format();
    let mut mc_failed = false;
    let (artifact, summary) = match &config.command {
        Command::Sample {
            beta,
            dyadic,
            knots,
            seed,
            n,
        } => {
            let seed = require_seed(*seed)?;
            let params = params(*beta)?;
            let partition = match (dyadic, knots) {
                (Some(k), None) => Partition::dyadic(*k).map_err(|e| config_err("dyadic", e))?,
                (None, Some(knots)) => Partition::from_interior(knots).map_err(|e| config_err("knots", e))?,
                _ => return Err(config_err("partition", "give exactly one of --dyadic or --knots")),
            };
            if *n == 0 {
                return Err(config_err("n", "must be at least 1"));
            }
            let sampler = EntropicSampler::new(partition, params);
            let draws: Vec<_> = (0..*n)
                .map(|j| sampler.sample(&mut SeededRng::for_task(seed, j as u64)))
                .collect();
            let artifact = match format {
                Format::Json => {
                    let records: Vec<SampleRecord> = draws
                        .iter()
                        .enumerate()
                        .map(|(j, d)| SampleRecord::new(d, *beta, seed, j as u64, j))
                        .collect();
                    json_artifact(config, &records)
                }
                Format::Csv => {
                    let mut csv = Csv::new(config, "draw,t,value");
                    for (j, d) in draws.iter().enumerate() {
                        for (t, v) in d.partition().interior().iter().zip(d.values()) {
                            csv.row(&[j.to_string(), f(*t), f(*v)]);
                        }
                    }
                    csv.finish()
                }
            };
            (artifact, format!("sampled {n} path(s) on {} cells, seed {seed}", sampler.partition().len() + 1))
        }
        Command::W2 { a, b } => {
            let qa = parse_measure("a", a)?;
            let qb = parse_measure("b", b)?;
            let d = w2_distance(&qa, &qb);
            #[derive(Serialize)]
            struct W2Result {
                a: QuantileRepr,
                b: QuantileRepr,
                distance: f64,
            }
            let artifact = match format {
                Format::Json => json_artifact(
                    config,
                    &W2Result {
                        a: qa.into(),
                        b: qb.into(),
                        distance: d,
                    },
                ),
                Format::Csv => {
                    let mut csv = Csv::new(config, "distance");
                    csv.row(&[f(d)]);
                    csv.finish()
                }
            };
            (artifact, format!("{d:.7}"))
        }
        Command::Geodesic { a, b, t } => {
            let qa = parse_measure("a", a)?;
            let qb = parse_measure("b", b)?;
            #[derive(Serialize)]
            struct Point {
                t: f64,
                quantile: QuantileRepr,
                distance_from_a: f64,
                distance_to_b: f64,
            }
            let mut points = Vec::with_capacity(t.len());
            for &ti in t {
                let q = geodesic(&qa, &qb, ti).map_err(|e| config_err("t", e))?;
                points.push(Point {
                    t: ti,
                    distance_from_a: w2_distance(&qa, &q),
                    distance_to_b: w2_distance(&q, &qb),
                    quantile: q.into(),
                });
            }
            let artifact = match format {
                Format::Json => json_artifact(config, &points),
                Format::Csv => {
                    let mut csv = Csv::new(config, "t,distance_from_a,distance_to_b");
                    for p in &points {
                        csv.row(&[f(p.t), f(p.distance_from_a), f(p.distance_to_b)]);
                    }
                    csv.finish()
                }
            };
            let d = w2_distance(&qa, &qb);
            (artifact, format!("geodesic of length {d:.7} at {} time(s)", t.len()))
        }
        Command::Marginal { beta, s, c } => {
            let p = params(*beta)?;
            check_floor(&[*s])?;
            #[derive(Serialize)]
            struct Row {
                beta: f64,
                s: f64,
                c: f64,
                log_prob_above: f64,
                prob_above: f64,
            }
            let rows = c
                .iter()
                .map(|&ci| {
                    let lp = log_prob_above(*s, ci, p).map_err(|e| config_err("s/c", e))?;
                    Ok(Row {
                        beta: *beta,
                        s: *s,
                        c: ci,
                        log_prob_above: lp,
                        prob_above: lp.exp(),
                    })
                })
                .collect::<Result<Vec<_>, RunError>>()?;
            let artifact = match format {
                Format::Json => json_artifact(config, &rows),
                Format::Csv => {
                    let mut csv = Csv::new(config, "beta,s,c,log_prob_above,prob_above");
                    for r in &rows {
                        csv.row(&[r.beta, r.s, r.c, r.log_prob_above, r.prob_above].map(f));
                    }
                    csv.finish()
                }
            };
            (artifact, format!("{} threshold probabilities at s = {s:e}", rows.len()))
        }
        Command::Audit {
            beta,
            s,
            t,
            mc_samples,
            seed,
        } => {
            let p = params(*beta)?;
            check_floor(s)?;
            let mut rows = Vec::with_capacity(s.len() * t.len());
            let mut checks: Vec<McCrossCheck> = Vec::new();
            let seed = match mc_samples {
                Some(_) => Some(require_seed(*seed)?),
                None => None,
            };
            for &ti in t {
                for &si in s {
                    rows.push(audit_row(si, ti, p)?);
                    if let (Some(n), Some(seed)) = (mc_samples, seed) {
                        checks.push(monte_carlo_cross_check(si, ti, p, *n, seed)?);
                    }
                }
            }
            mc_failed = checks.iter().any(|c| !c.pass);
            #[derive(Serialize)]
            struct AuditResult<'a> {
                rows: &'a [ConvexityAuditRow],
                #[serde(skip_serializing_if = "<[McCrossCheck]>::is_empty")]
                monte_carlo: &'a [McCrossCheck],
            }
            let artifact = match format {
                Format::Json => json_artifact(
                    config,
                    &AuditResult {
                        rows: &rows,
                        monte_carlo: &checks,
                    },
                ),
                Format::Csv => audit_csv(config, &rows),
            };
            let mut summary = format!("{} audit rows", rows.len());
            if !checks.is_empty() {
                let passed = checks.iter().filter(|c| c.pass).count();
                let _ = write!(summary, "; Monte Carlo cross-check passed at {passed} of {} points", checks.len());
            }
            (artifact, summary)
        }
        Command::Scan { beta, t, s_decades, s } => {
            let p = params(*beta)?;
            let grid = match s {
                Some(grid) => grid.clone(),
                None => {
                    if *s_decades == 0 {
                        return Err(config_err("s_decades", "must be at least 1"));
                    }
                    default_s_grid(*s_decades)
                }
            };
            let reports = t.iter().map(|&ti| scan(ti, p, &grid)).collect::<Result<Vec<_>, _>>()?;
            let rows: Vec<ConvexityAuditRow> = reports.iter().flat_map(|r| r.rows.iter().copied()).collect();
            let artifact = match format {
                Format::Json => json_artifact(config, &reports),
                Format::Csv => audit_csv(config, &rows),
            };
            let parts: Vec<String> = reports
                .iter()
                .map(|r| {
                    let from = r
                        .decreasing_from
                        .map_or_else(|| "not decreasing at the tail".to_string(), |i| format!("decreasing from row {}", i + 1));
                    format!("t={}: implied_K {from}, min {:.6}", r.t, r.min_implied_k)
                })
                .collect();
            let floor = reports.iter().map(|r| r.min_implied_k).fold(f64::INFINITY, f64::min);
            (
                artifact,
                format!("scan beta={beta}: {}; every K > {floor:.6} refuted", parts.join("; ")),
            )
        }
        Command::Probe {
            kind,
            function,
            beta,
            dyadic,
            n,
            seed,
        } => {
            let seed = require_seed(*seed)?;
            let p = params(*beta)?;
            let func = resolve_function(function)?;
            let partition = Partition::dyadic(*dyadic).map_err(|e| config_err("dyadic", e))?;
            let report: ProbeReport = match kind {
                ProbeChoice::Poincare => poincare_probe(&func, p, &partition, *n, seed)?,
                ProbeChoice::Logsob => logsob_probe(&func, p, &partition, *n, seed)?,
            };
            let artifact = match format {
                Format::Json => json_artifact(config, &report),
                Format::Csv => {
                    let mut csv = Csv::new(
                        config,
                        "cells,variance,variance_stderr,energy,energy_stderr,poincare_margin,poincare_margin_stderr,poincare_pass,logsob_lhs,logsob_lhs_stderr,logsob_ratio,logsob_ratio_stderr",
                    );
                    let opt = |e: Option<crate::dirichlet_probe::Estimate>| match e {
                        Some(e) => [f(e.value), f(e.stderr)],
                        None => [String::new(), String::new()],
                    };
                    for l in &report.levels {
                        let mut cells = vec![
                            l.cells.to_string(),
                            f(l.variance.value),
                            f(l.variance.stderr),
                            f(l.energy.value),
                            f(l.energy.stderr),
                            f(l.poincare_margin.value),
                            f(l.poincare_margin.stderr),
                            l.poincare_pass.to_string(),
                        ];
                        cells.extend(opt(l.logsob_lhs));
                        cells.extend(opt(l.logsob_ratio));
                        csv.row(&cells);
                    }
                    csv.finish()
                }
            };
            let l = &report.levels[0];
            let summary = match kind {
                ProbeChoice::Poincare => format!(
                    "poincare {function} beta={beta}: margin {:.6} ± {:.6} ({})",
                    l.poincare_margin.value,
                    l.poincare_margin.stderr,
                    if report.poincare_pass() { "pass" } else { "FAIL" }
                ),
                ProbeChoice::Logsob => match l.logsob_ratio {
                    Some(r) => format!("logsob {function} beta={beta}: ratio {:.6} ± {:.6}", r.value, r.stderr),
                    None => format!("logsob {function} beta={beta}: zero energy, ratio undefined"),
                },
            };
            (artifact, summary)
        }
    };
    Ok(Execution {
        artifact,
        summary,
        mc_failed,
    })
}

/// Executes a configuration and writes its artifact.
pub fn run(config: &RunConfig) -> Result<Outcome, RunError> {
    let exec = execute(config)?;
    let ext = match config.format() {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = match &config.output.output {
        Some(p) if p.as_os_str() == "-" => None,
        Some(p) => Some(p.clone()),
        None => Some(config.output.out_dir.join(format!("{}.{ext}", config.command.name()))),
    };
    match &path {
        None => io::stdout().lock().write_all(&exec.artifact)?,
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, &exec.artifact)?;
        }
    }
    Ok(Outcome {
        summary: exec.summary,
        artifact_path: path,
        exit_code: if exec.mc_failed { 4 } else { 0 },
    })
}
