//! Command-line front end: state files, report files and subcommands.
//!
//! State files are JSON in one of two shapes:
//!
//! ```json
//! {"label": "ghz", "lambda": [0.7071067811865476, 0, 0, 0, 0.7071067811865476], "phi": 0}
//! {"amplitudes": [[0.5773502691896258, 0], [0.5773502691896258, 0], ...]}
//! ```
//!
//! Every subcommand except `scan` prints one pretty-printed [`ReportFile`].

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bell::{self, BellReport, LhvAssignment, SampleStatistics};
use crate::hardy::{self, ConstructOptions, HardyError, SearchOptions, Witness, ZERO_TOL};
use crate::linalg::{Complex, Ket};
use crate::states::{self, CanonicalState, Major, PureState, StateClass, StateError};
use crate::visibility::{self, GridSpec, MinimizeOptions, OptimizationResult, ScanOptions};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod exit {
    pub const OK: i32 = 0;
    pub const PARSE: i32 = 2;
    pub const CLASSIFICATION_GAP: i32 = 3;
    pub const WRONG_FORM: i32 = 4;
    pub const WITNESS_MISMATCH: i32 = 5;
    pub const CONSTRUCTION: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Gap(String),
    #[error("classification requires canonical form")]
    WrongForm,
    #[error("witness does not match class expectation: {0}")]
    Mismatch(String),
    #[error("construction failure: {0}")]
    Construction(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => exit::PARSE,
            CliError::Gap(_) => exit::CLASSIFICATION_GAP,
            CliError::WrongForm => exit::WRONG_FORM,
            CliError::Mismatch(_) => exit::WITNESS_MISMATCH,
            CliError::Construction(_) => exit::CONSTRUCTION,
        }
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        match e {
            StateError::ClassificationGap { .. } | StateError::ClassificationOverlap { .. } => CliError::Gap(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<HardyError> for CliError {
    fn from(e: HardyError) -> Self {
        match e {
            HardyError::State(s) => s.into(),
            other => CliError::Construction(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[f64; 5]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedState {
    pub state: PureState,
    /// Factor the input was multiplied by under `--normalize`.
    pub normalization_factor: Option<f64>,
}

impl StateSpecFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn parse(&self, normalize: bool) -> Result<ParsedState, CliError> {
        match (&self.lambda, &self.phi, &self.amplitudes) {
            (Some(lambda), Some(phi), None) => {
                if normalize {
                    let (s, factor) = CanonicalState::normalized(*lambda, *phi)?;
                    Ok(ParsedState { state: PureState::Canonical(s), normalization_factor: Some(factor) })
                } else {
                    let s = CanonicalState::new(*lambda, *phi)?;
                    Ok(ParsedState { state: PureState::Canonical(s), normalization_factor: None })
                }
            }
            (Some(_), None, None) => Err(CliError::Parse("canonical form needs both `lambda` and `phi`".into())),
            (None, None, Some(amps)) => {
                if amps.len() != 8 {
                    return Err(CliError::Parse(format!("expected 8 amplitudes, got {}", amps.len())));
                }
                let ket = Ket::new(amps.iter().map(|[re, im]| Complex::new(*re, *im)).collect())
                    .map_err(|e| CliError::Parse(e.to_string()))?;
                if normalize {
                    let n = ket.norm();
                    let ket = ket.normalized().map_err(|e| CliError::Parse(e.to_string()))?;
                    Ok(ParsedState { state: PureState::Amplitudes(ket), normalization_factor: Some(1.0 / n) })
                } else {
                    ket.ensure_normalized().map_err(|e| CliError::Parse(e.to_string()))?;
                    Ok(ParsedState { state: PureState::Amplitudes(ket), normalization_factor: None })
                }
            }
            (None, None, None) => Err(CliError::Parse("state file has neither `lambda`/`phi` nor `amplitudes`".into())),
            _ => Err(CliError::Parse("state file must use exactly one of canonical or amplitudes form".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhvReport {
    pub assignments: usize,
    pub minimum: i32,
    pub minimizer_count: usize,
    pub hardy_pattern_realizable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<(LhvAssignment, i32)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub flags: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<StateSpecFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<StateClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell_report: Option<BellReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimization: Option<OptimizationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lhv: Option<LhvReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleStatistics>,
    /// Set when the command finished but has nothing to certify, e.g. a
    /// product state.
    pub flagged: bool,
    pub notes: Vec<String>,
}

impl ReportFile {
    fn new(command: &str) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            flags: BTreeMap::new(),
            seed: None,
            input: None,
            normalization_factor: None,
            class: None,
            witness: None,
            bell_report: None,
            optimization: None,
            lhv: None,
            sample: None,
            flagged: false,
            notes: Vec::new(),
        }
    }

    fn flag(&mut self, name: &str, value: impl ToString) {
        self.flags.insert(name.into(), value.to_string());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "hardy-bell", version, about = "Hardy-type nonlocality for three-qubit pure states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Input {
    /// State file, or `-` for stdin.
    pub path: PathBuf,
    /// Rescale an unnormalized input instead of rejecting it.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    #[arg(long, env = "HARDY_BELL_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// `cos t |000⟩ + sin t |111⟩`
    Ghz,
    /// `cos t |000⟩ + sin t |101⟩`
    B3,
    /// `t |000⟩ + r(|101⟩ + |110⟩)`, W at `t = 1/√3`
    W,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Canonical-form class label.
    Classify {
        #[command(flatten)]
        input: Input,
    },
    /// Class-appropriate settings and their Hardy certificate.
    Witness {
        #[command(flatten)]
        input: Input,
        /// Zero tolerance of the reported certificate.
        #[arg(long, default_value_t = ZERO_TOL)]
        tol: f64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Minimum Bell value over settings and the threshold visibility.
    Optimize {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Enumerate the deterministic local assignments.
    Lhv {
        /// List all 64 assignments with their values.
        #[arg(long)]
        verbose: bool,
    },
    /// Finite-shot estimates of the five probabilities at witness settings.
    Sample {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Evaluate a one-parameter family on a grid, one JSON line per point.
    Scan {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        stop: f64,
        #[arg(long)]
        steps: usize,
        /// Also run the optimizer at each point with this many starts.
        #[arg(long)]
        optimize_starts: Option<usize>,
        #[command(flatten)]
        seed: SeedArg,
    },
}

fn read_input(path: &PathBuf) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::Parse(e.to_string()))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }
}

fn load(input: &Input, report: &mut ReportFile) -> Result<ParsedState, CliError> {
    let spec = StateSpecFile::from_json(&read_input(&input.path)?)?;
    report.flag("path", input.path.display());
    report.flag("normalize", input.normalize);
    let parsed = spec.parse(input.normalize)?;
    report.input = Some(spec);
    if let Some(f) = parsed.normalization_factor {
        report.normalization_factor = Some(f);
        report.notes.push(format!("input rescaled by {f}"));
    }
    Ok(parsed)
}

fn canonical(parsed: &ParsedState) -> Result<&CanonicalState, CliError> {
    parsed.state.canonical().ok_or(CliError::WrongForm)
}

pub fn classify(input: &Input) -> Result<ReportFile, CliError> {
    let mut report = ReportFile::new("classify");
    let parsed = load(input, &mut report)?;
    report.class = Some(states::classify(canonical(&parsed)?)?);
    Ok(report)
}

fn witness_options(seed: u64) -> ConstructOptions {
    ConstructOptions { search: SearchOptions { seed, ..Default::default() }, ..Default::default() }
}

/// Runs the class construction and checks its outcome against the class:
/// satisfied for B and D, unsatisfied but violating for C.
fn checked_witness(s: &CanonicalState, tol: f64, seed: u64, report: &mut ReportFile) -> Result<Option<Witness>, CliError> {
    let cls = states::classify(s)?;
    report.class = Some(cls);
    if cls.major() == Major::A {
        report.flagged = true;
        report.notes.push(format!("no witness: fully product state ({cls})"));
        return Ok(None);
    }
    let mut w = hardy::construct_for_class(s, cls, &witness_options(seed))?;
    let psi = s.to_ket();
    w.certificate = hardy::verify_hardy(&psi, &w.settings, tol);
    if let Some(reason) = &w.fallback_reason {
        report.notes.push(format!("closed form rejected, used numerical search: {reason}"));
    }
    report.bell_report = Some(bell::bell_value(&psi, &w.settings).map_err(|e| CliError::Construction(e.to_string()))?);
    let expected = match cls.major() {
        Major::C => !w.certificate.satisfied && w.bell_value < 0.0,
        _ => w.certificate.satisfied,
    };
    report.witness = Some(w);
    if !expected {
        return Err(CliError::Mismatch(format!("{cls} certificate at tolerance {tol:e}")));
    }
    Ok(report.witness.clone())
}

pub fn witness(input: &Input, tol: f64, seed: u64) -> Result<ReportFile, CliError> {
    let mut report = ReportFile::new("witness");
    report.flag("tol", tol);
    report.seed = Some(seed);
    let parsed = load(input, &mut report)?;
    checked_witness(canonical(&parsed)?, tol, seed, &mut report)?;
    Ok(report)
}

pub fn optimize(input: &Input, starts: usize, tol: f64, seed: u64) -> Result<ReportFile, CliError> {
    let mut report = ReportFile::new("optimize");
    report.flag("starts", starts);
    report.flag("tol", tol);
    report.seed = Some(seed);
    if starts == 0 {
        return Err(CliError::Parse("--starts must be at least 1".into()));
    }
    let parsed = load(input, &mut report)?;
    let psi = parsed.state.to_ket();
    let mut warm = Vec::new();
    if let Some(s) = parsed.state.canonical() {
        match states::classify(s) {
            Ok(cls) => {
                report.class = Some(cls);
                if cls.major() != Major::A {
                    match hardy::construct_for_class(s, cls, &witness_options(seed)) {
                        Ok(w) => warm.push(w.settings),
                        Err(e) => report.notes.push(format!("no warm start: {e}")),
                    }
                }
            }
            Err(e) => report.notes.push(format!("not classified: {e}")),
        }
    }
    let r = visibility::minimize_bell(&psi, &MinimizeOptions { starts, seed, tol, warm_starts: warm, ..Default::default() });
    if r.threshold_visibility.is_none() {
        report.flagged = true;
        report.notes.push("no violation found".into());
    }
    report.bell_report = Some(bell::bell_value(&psi, &r.best_settings).map_err(|e| CliError::Construction(e.to_string()))?);
    report.optimization = Some(r);
    Ok(report)
}

pub fn lhv(verbose: bool) -> ReportFile {
    let mut report = ReportFile::new("lhv");
    report.flag("verbose", verbose);
    let s = bell::lhv_minimum();
    report.lhv = Some(LhvReport {
        assignments: s.values.len(),
        minimum: s.minimum,
        minimizer_count: s.minimizers.len(),
        hardy_pattern_realizable: s.hardy_pattern_realizable,
        values: verbose.then_some(s.values),
    });
    report
}

pub fn sample(input: &Input, shots: u64, seed: u64) -> Result<ReportFile, CliError> {
    let mut report = ReportFile::new("sample");
    report.flag("shots", shots);
    report.seed = Some(seed);
    let parsed = load(input, &mut report)?;
    let psi = parsed.state.to_ket();
    let settings = match parsed.state.canonical() {
        Some(s) => match checked_witness(s, ZERO_TOL, seed, &mut report)? {
            Some(w) => w.settings,
            None => return Ok(report),
        },
        None => {
            let hit = hardy::search_hardy_observables(&psi, &SearchOptions { seed, ..Default::default() })?;
            report.notes.push(format!("settings from numerical search, attempt {}", hit.attempt));
            report.bell_report = Some(bell::bell_value(&psi, &hit.settings).map_err(|e| CliError::Construction(e.to_string()))?);
            hit.settings
        }
    };
    let stats = bell::sample_statistics(&psi, &settings, shots, seed).map_err(|e| CliError::Parse(e.to_string()))?;
    report.sample = Some(stats);
    Ok(report)
}

pub fn scan(
    family: Family,
    grid: GridSpec,
    optimize_starts: Option<usize>,
    seed: u64,
) -> Result<Vec<visibility::ScanRow>, CliError> {
    let f = match family {
        Family::Ghz => visibility::ghz_family,
        Family::B3 => visibility::b3_family,
        Family::W => visibility::w_family,
    };
    let opts = ScanOptions {
        construct: witness_options(seed),
        optimize: optimize_starts.map(|starts| MinimizeOptions { starts, seed, ..Default::default() }),
    };
    visibility::scan_family(f, &grid, &opts).map_err(|e| CliError::Parse(e.to_string()))
}

/// Runs a parsed command line, printing to stdout/stderr, and returns the
/// process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Classify { input } => classify(&input).map(Some),
        Command::Witness { input, tol, seed } => witness(&input, tol, seed.seed).map(Some),
        Command::Optimize { input, starts, tol, seed } => optimize(&input, starts, tol, seed.seed).map(Some),
        Command::Lhv { verbose } => Ok(Some(lhv(verbose))),
        Command::Sample { input, shots, seed } => sample(&input, shots, seed.seed).map(Some),
        Command::Scan { family, start, stop, steps, optimize_starts, seed } => {
            scan(family, GridSpec { start, stop, steps }, optimize_starts, seed.seed).map(|rows| {
                let mut out = std::io::stdout().lock();
                for row in rows {
                    // a closed pipe ends the stream quietly
                    if writeln!(out, "{}", serde_json::to_string(&row).expect("row is serializable")).is_err() {
                        break;
                    }
                }
                None
            })
        }
    };
    match result {
        Ok(Some(report)) => {
            let _ = writeln!(std::io::stdout().lock(), "{}", report.to_json());
            exit::OK
        }
        Ok(None) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
