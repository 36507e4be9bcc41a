//! End-to-end driver: parse, check, instantiate, emit TIP files, prove, report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::diagnostic::Diagnostic;
use crate::frontend::{parse_program_named, validate_program};
use crate::instantiate::{build_tasks, ProofTask};
use crate::prover::{prove, render_trace, ProofOutcome, ProverConfig};
use crate::syntax::SourceProgram;
use crate::tipcore::{emit_tip, lower_task};
use crate::typecheck::check_program;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Emit,
    Prove,
    Both,
}

impl Mode {
    pub fn emits(self) -> bool {
        matches!(self, Mode::Emit | Mode::Both)
    }

    pub fn proves(self) -> bool {
        matches!(self, Mode::Prove | Mode::Both)
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "emit" => Ok(Mode::Emit),
            "prove" => Ok(Mode::Prove),
            "both" => Ok(Mode::Both),
            _ => Err(format!("unknown mode `{s}` (expected emit, prove or both)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Lines,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "lines" => Ok(ReportFormat::Lines),
            _ => Err(format!("unknown format `{s}` (expected table or lines)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub mode: Mode,
    pub prover: ProverConfig,
    pub trace: bool,
    pub format: ReportFormat,
    /// Unknown outcomes fail the run.
    pub strict: bool,
    /// Worker threads for proving; 0 means one per core.
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(inputs: Vec<PathBuf>, out_dir: PathBuf) -> Self {
        RunConfig {
            inputs,
            out_dir,
            mode: Mode::Both,
            prover: ProverConfig::default(),
            trace: false,
            format: ReportFormat::Table,
            strict: false,
            jobs: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("no input files")]
    NoInputs,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Diagnostic(Diagnostic),
    #[error("{0}")]
    Instantiate(#[from] crate::instantiate::InstantiateError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Proved,
    Refuted,
    Unknown,
    /// Emit-only runs do not prove anything.
    NotRun,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Proved => "proved",
            Outcome::Refuted => "refuted",
            Outcome::Unknown => "unknown",
            Outcome::NotRun => "emitted",
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Outcome::Proved => "✓",
            Outcome::Refuted => "!",
            Outcome::Unknown => "?",
            Outcome::NotRun => "-",
        }
    }

    pub fn of(outcome: &ProofOutcome) -> Outcome {
        match outcome {
            ProofOutcome::Proved { .. } => Outcome::Proved,
            ProofOutcome::Refuted(_) => Outcome::Refuted,
            ProofOutcome::Unknown(_) => Outcome::Unknown,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub law: String,
    /// Class of the first instance, or empty for laws without a class.
    pub class: String,
    pub instance: String,
    pub outcome: Outcome,
    pub elapsed: Duration,
    pub lemmas: usize,
    pub tip_path: Option<PathBuf>,
    /// Witness, reason for giving up, or rendered proof when tracing.
    pub detail: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
    pub status: i32,
}

/// Status for a finished run: 1 if a law was refuted, or left unknown in
/// strict mode, and 0 otherwise. Errors before proving exit with 2.
pub fn exit_status(rows: &[ReportRow], strict: bool) -> i32 {
    let failed = rows.iter().any(|r| r.outcome == Outcome::Refuted || (strict && r.outcome == Outcome::Unknown));
    i32::from(failed)
}

/// Parses every input into one program; names share a single namespace.
pub fn load_program(inputs: &[PathBuf]) -> Result<SourceProgram, CliError> {
    if inputs.is_empty() {
        return Err(CliError::NoInputs);
    }
    let mut program = SourceProgram { decls: Vec::new(), positions: Vec::new() };
    for path in inputs {
        let src = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        let name = path.display().to_string();
        let p = parse_program_named(&src, Some(&name)).map_err(|e| CliError::Diagnostic(e.diagnostic(Some(&name))))?;
        program.extend(p);
    }
    if inputs.len() > 1 {
        validate_program(&program).map_err(|e| CliError::Diagnostic(e.diagnostic(None)))?;
    }
    Ok(program)
}

/// Builds the proof tasks for `inputs`.
pub fn load_tasks(inputs: &[PathBuf]) -> Result<Vec<ProofTask>, CliError> {
    let program = load_program(inputs)?;
    let (typed, table) = check_program(&program).map_err(|e| CliError::Diagnostic(e.diagnostic()))?;
    Ok(build_tasks(&typed, &table)?)
}

/// Writes `<id>.smt2` for `task` into `dir`.
pub fn write_tip(task: &ProofTask, dir: &Path) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{}.smt2", task.id));
    std::fs::write(&path, emit_tip(&lower_task(task))).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn run_task(task: &ProofTask, config: &RunConfig, tip_path: Option<PathBuf>) -> ReportRow {
    let mut row = ReportRow {
        law: task.law.to_string(),
        class: task.instances.first().map(|i| i.class.to_string()).unwrap_or_default(),
        instance: task.instance_label(),
        outcome: Outcome::NotRun,
        elapsed: Duration::ZERO,
        lemmas: 0,
        tip_path,
        detail: None,
    };
    if !config.mode.proves() {
        return row;
    }
    let start = Instant::now();
    let outcome = prove(task, &config.prover);
    row.elapsed = start.elapsed();
    row.outcome = Outcome::of(&outcome);
    match &outcome {
        ProofOutcome::Proved { trace, lemmas } => {
            row.lemmas = lemmas.len();
            if config.trace {
                row.detail = Some(render_trace(&task.goal, trace, lemmas));
            }
        }
        ProofOutcome::Refuted(cex) => row.detail = Some(format!("counterexample: {cex}")),
        ProofOutcome::Unknown(reason) => row.detail = Some(format!("gave up: {reason}")),
    }
    row
}

/// Runs the whole pipeline. Diagnostics and file-system failures are
/// returned as errors; outcomes only affect the status.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport, CliError> {
    let tasks = load_tasks(&config.inputs)?;
    let mut paths = vec![None; tasks.len()];
    if config.mode.emits() {
        std::fs::create_dir_all(&config.out_dir).map_err(|source| CliError::Io { path: config.out_dir.clone(), source })?;
        for (task, slot) in tasks.iter().zip(&mut paths) {
            *slot = Some(write_tip(task, &config.out_dir)?);
        }
    }
    let work = || tasks.par_iter().zip(paths.clone()).map(|(t, p)| run_task(t, config, p)).collect::<Vec<_>>();
    let rows = if config.jobs == 0 {
        work()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        }
    };
    let status = exit_status(&rows, config.strict);
    Ok(RunReport { rows, status })
}

fn secs(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64())
}

/// Renders rows as tables per class or as tab-separated records.
pub fn render_report(rows: &[ReportRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Lines => render_lines(rows),
        ReportFormat::Table => render_table(rows),
    }
}

fn render_lines(rows: &[ReportRow]) -> String {
    let mut out = String::from("law\tinstance\toutcome\tseconds\tlemmas\tpath\n");
    for r in rows {
        let path = r.tip_path.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}", r.law, r.instance, r.outcome.label(), secs(r.elapsed), r.lemmas, path);
    }
    out
}

fn render_table(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    if rows.is_empty() {
        out.push_str("instance | time\n");
        return out;
    }
    let mut classes: Vec<&str> = Vec::new();
    for r in rows {
        if !classes.contains(&r.class.as_str()) {
            classes.push(&r.class);
        }
    }
    for class in classes {
        let section: Vec<&ReportRow> = rows.iter().filter(|r| r.class == class).collect();
        let mut laws: Vec<&str> = Vec::new();
        let mut instances: Vec<&str> = Vec::new();
        for r in &section {
            if !laws.contains(&r.law.as_str()) {
                laws.push(&r.law);
            }
            if !instances.contains(&r.instance.as_str()) {
                instances.push(&r.instance);
            }
        }
        let title = if class.is_empty() { "(no class)" } else { class };
        let _ = writeln!(out, "{title}");
        for (i, l) in laws.iter().enumerate() {
            let _ = writeln!(out, "  {}: {l}", i + 1);
        }
        let width = instances.iter().map(|s| s.len()).max().unwrap_or(0).max("instance".len());
        let _ = write!(out, "{:width$} |", "instance");
        for i in 0..laws.len() {
            let _ = write!(out, " {:>2}", i + 1);
        }
        out.push_str(" | time\n");
        for inst in instances {
            let _ = write!(out, "{inst:width$} |");
            let mut total = Duration::ZERO;
            for law in &laws {
                match section.iter().find(|r| r.instance == inst && r.law == *law) {
                    Some(r) => {
                        total += r.elapsed;
                        let _ = write!(out, " {:>2}", r.outcome.symbol());
                    }
                    None => out.push_str("   "),
                }
            }
            let _ = writeln!(out, " | {} s", secs(total));
        }
        out.push('\n');
    }
    out
}

/// Witnesses, reasons and traces for rows that have them, one block per row.
pub fn render_details(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    for r in rows {
        if let Some(d) = &r.detail {
            let _ = writeln!(out, "{} at {}: {}", r.law, r.instance, r.outcome.label());
            for line in d.lines() {
                let _ = writeln!(out, "  {line}");
            }
        }
    }
    out
}
