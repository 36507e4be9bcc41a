//! Python bindings: parse programs, build proof tasks, emit TIP problems and prove laws.

use std::path::PathBuf;
use std::time::Duration;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use lawkeeper::cli::{self, CliError, Mode, ReportFormat, RunConfig};
use lawkeeper::frontend;
use lawkeeper::instantiate::{build_tasks, ProofTask};
use lawkeeper::prover::{self, ProofOutcome, ProverConfig};
use lawkeeper::syntax::SourceProgram;
use lawkeeper::tipcore::{emit_tip, lower_task};
use lawkeeper::typecheck::check_program;

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn prover_config(timeout: f64, refute_depth: usize, explore_size: usize, induction_depth: usize) -> PyResult<ProverConfig> {
    let timeout = Duration::try_from_secs_f64(timeout).map_err(|e| PyValueError::new_err(format!("bad timeout: {e}")))?;
    Ok(ProverConfig {
        timeout,
        refute_depth,
        explore_max_term_size: explore_size,
        induction_depth,
        ..ProverConfig::default()
    })
}

/// A parsed source program.
#[pyclass(name = "Program", frozen)]
struct PyProgram {
    inner: SourceProgram,
}

#[pymethods]
impl PyProgram {
    /// Canonical source text.
    fn pretty(&self) -> String {
        frontend::pretty_print(&self.inner)
    }

    /// Top-level names in declaration order; instances are skipped.
    fn names(&self) -> Vec<String> {
        self.inner.decls.iter().filter_map(|d| d.name().map(|n| n.to_string())).collect()
    }

    /// Type-checks and instantiates every law at every instance.
    fn tasks(&self) -> PyResult<Vec<PyTask>> {
        let (typed, table) = check_program(&self.inner).map_err(|e| PyValueError::new_err(e.diagnostic().to_string()))?;
        let tasks = build_tasks(&typed, &table).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(tasks.into_iter().map(|inner| PyTask { inner }).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.decls.len()
    }

    fn __eq__(&self, other: &PyProgram) -> bool {
        self.inner == other.inner
    }
}

/// One law at one instance, monomorphised.
#[pyclass(name = "Task", frozen)]
struct PyTask {
    inner: ProofTask,
}

#[pymethods]
impl PyTask {
    #[getter]
    fn id(&self) -> String {
        self.inner.id.clone()
    }

    #[getter]
    fn law(&self) -> String {
        self.inner.law.to_string()
    }

    #[getter]
    fn instance(&self) -> String {
        self.inner.instance_label()
    }

    /// The instantiated goal as `lhs = rhs`.
    #[getter]
    fn goal(&self) -> String {
        self.inner.goal.to_string()
    }

    #[getter]
    fn higher_order(&self) -> bool {
        self.inner.higher_order
    }

    #[getter]
    fn dummy_sorts(&self) -> Vec<String> {
        self.inner.dummy_sorts.iter().map(|d| d.name.to_string()).collect()
    }

    /// The problem in the TIP dialect.
    fn tip(&self) -> String {
        emit_tip(&lower_task(&self.inner))
    }

    #[pyo3(signature = (timeout = 60.0, refute_depth = 3, explore_size = 7, induction_depth = 2))]
    fn prove(&self, py: Python<'_>, timeout: f64, refute_depth: usize, explore_size: usize, induction_depth: usize) -> PyResult<PyOutcome> {
        let config = prover_config(timeout, refute_depth, explore_size, induction_depth)?;
        let task = &self.inner;
        let outcome = py.detach(|| prover::prove(task, &config));
        Ok(PyOutcome::new(task, outcome))
    }

    /// Lemmas found by theory exploration, as `lhs = rhs` strings.
    #[pyo3(signature = (timeout = 30.0, explore_size = 7))]
    fn explore(&self, py: Python<'_>, timeout: f64, explore_size: usize) -> PyResult<Vec<String>> {
        let config = prover_config(timeout, 3, explore_size, 2)?;
        let task = &self.inner;
        let lemmas = py.detach(|| prover::explore_lemmas(task, &config));
        Ok(lemmas.iter().map(|l| l.equation.to_string()).collect())
    }

    fn __repr__(&self) -> String {
        format!("Task({})", self.inner.id)
    }
}

/// Result of proving a task.
#[pyclass(name = "Outcome", frozen)]
struct PyOutcome {
    #[pyo3(get)]
    status: String,
    /// Explored lemmas the proof depends on.
    #[pyo3(get)]
    lemmas: Vec<String>,
    /// Rendered proof for proved tasks.
    #[pyo3(get)]
    trace: Option<String>,
    /// Variable assignment refuting the law.
    #[pyo3(get)]
    witness: Option<Vec<(String, String)>>,
    /// Why the prover gave up.
    #[pyo3(get)]
    reason: Option<String>,
}

impl PyOutcome {
    fn new(task: &ProofTask, outcome: ProofOutcome) -> Self {
        let mut out = PyOutcome { status: outcome.label().to_string(), lemmas: vec![], trace: None, witness: None, reason: None };
        match outcome {
            ProofOutcome::Proved { trace, lemmas } => {
                out.trace = Some(prover::render_trace(&task.goal, &trace, &lemmas));
                out.lemmas = lemmas.iter().map(|l| l.equation.to_string()).collect();
            }
            ProofOutcome::Refuted(cex) => {
                out.witness = Some(cex.assignment.iter().map(|(v, x)| (v.to_string(), x.to_string())).collect());
            }
            ProofOutcome::Unknown(r) => out.reason = Some(r.to_string()),
        }
        out
    }
}

#[pymethods]
impl PyOutcome {
    fn __bool__(&self) -> bool {
        self.status == "proved"
    }

    fn __repr__(&self) -> String {
        format!("Outcome({})", self.status)
    }
}

#[pyfunction]
fn parse_program(source: &str) -> PyResult<PyProgram> {
    frontend::parse_program(source)
        .map(|inner| PyProgram { inner })
        .map_err(|e| PyValueError::new_err(e.diagnostic(None).to_string()))
}

/// Reads source files into one program and builds its tasks.
#[pyfunction]
fn load_tasks(paths: Vec<PathBuf>) -> PyResult<Vec<PyTask>> {
    let tasks = cli::load_tasks(&paths).map_err(cli_err)?;
    Ok(tasks.into_iter().map(|inner| PyTask { inner }).collect())
}

/// Runs the command-line pipeline and returns `(status, report)`.
#[pyfunction]
#[pyo3(signature = (paths, out_dir, mode = "both", strict = false, timeout = 60.0, format = "lines", jobs = 0))]
#[allow(clippy::too_many_arguments)]
fn run(py: Python<'_>, paths: Vec<PathBuf>, out_dir: PathBuf, mode: &str, strict: bool, timeout: f64, format: &str, jobs: usize) -> PyResult<(i32, String)> {
    let mut config = RunConfig::new(paths, out_dir);
    config.mode = mode.parse::<Mode>().map_err(PyValueError::new_err)?;
    config.format = format.parse::<ReportFormat>().map_err(PyValueError::new_err)?;
    config.strict = strict;
    config.jobs = jobs;
    config.prover = prover_config(timeout, 3, 7, 2)?;
    let report = py.detach(|| cli::run_pipeline(&config)).map_err(cli_err)?;
    Ok((report.status, cli::render_report(&report.rows, config.format)))
}

#[pymodule]
fn lawkeeper_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProgram>()?;
    m.add_class::<PyTask>()?;
    m.add_class::<PyOutcome>()?;
    m.add_function(wrap_pyfunction!(parse_program, m)?)?;
    m.add_function(wrap_pyfunction!(load_tasks, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
