// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Python bindings: load contracts, run them concretely and analyze them.

use std::path::PathBuf;
use std::time::Duration;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use michelstat::analyzer::{Config, Domains};
use michelstat::concrete::{run_contract, CallContext, Value};
use michelstat::report::{self, ContractReport, CorpusReport, RunConfig, StorageSpec};
use michelstat::syntax::{load, parse_data, Ty, TypedScript};

pyo3::create_exception!(
    pymichelstat,
    ContractFailure,
    PyRuntimeError,
    "A concrete run failed."
);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn literal(text: &str, ty: &Ty) -> PyResult<Value> {
    let d = parse_data(text).map_err(value_err)?;
    Value::from_data(&d, ty).map_err(value_err)
}

/// A parsed and typechecked contract.
#[pyclass(frozen, module = "pymichelstat")]
struct Script {
    inner: TypedScript,
    source: String,
}

#[pymethods]
impl Script {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        let inner = load(source).map_err(value_err)?;
        Ok(Script {
            inner,
            source: source.into(),
        })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(value_err)?;
        Script::new(&text)
    }

    #[getter]
    fn storage_type(&self) -> String {
        self.inner.storage.to_string()
    }

    #[getter]
    fn parameter_type(&self) -> String {
        self.inner.parameter.to_string()
    }

    /// Entry point names, in declaration order.
    #[getter]
    fn entrypoints(&self) -> Vec<String> {
        self.inner
            .entrypoints
            .iter()
            .map(|e| e.name.clone())
            .collect()
    }

    /// Runs one entry point; returns the operations and the new storage,
    /// printed as literals.
    #[pyo3(signature = (entrypoint, arg, storage, sender = "tz1sender", amount = 0, balance = 0))]
    fn run(
        &self,
        entrypoint: &str,
        arg: &str,
        storage: &str,
        sender: &str,
        amount: u64,
        balance: u64,
    ) -> PyResult<(Vec<String>, String)> {
        let ep = self
            .inner
            .entrypoint(entrypoint)
            .ok_or_else(|| value_err(format!("no entry point `{entrypoint}`")))?;
        let arg = literal(arg, &ep.ty)?;
        let storage = literal(storage, &self.inner.storage)?;
        let ctx = CallContext {
            sender: sender.into(),
            source: sender.into(),
            amount,
            balance,
            ..CallContext::default()
        };
        match run_contract(&self.inner, entrypoint, arg, storage, &ctx) {
            Ok((ops, st)) => Ok((
                ops.into_iter()
                    .map(|t| Value::Operation(Box::new(t)).to_string())
                    .collect(),
                st.to_string(),
            )),
            Err(f) if f.is_runtime() => Err(ContractFailure::new_err(f.to_string())),
            Err(f) => Err(value_err(f)),
        }
    }

    #[pyo3(signature = (**opts))]
    fn analyze(&self, opts: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Report> {
        let run = run_config(opts)?;
        Ok(Report(report::analyze_source(
            "<script>",
            &self.source,
            &run,
        )))
    }
}

/// Builds a run configuration from keyword options.
fn run_config(opts: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<RunConfig> {
    let mut cfg = Config::default();
    let mut storage = StorageSpec::Default;
    let Some(opts) = opts else {
        return Ok(RunConfig {
            analysis: cfg,
            storage,
        });
    };
    for (k, v) in opts.iter() {
        let key: String = k.extract()?;
        match key.as_str() {
            "domains" => {
                cfg.domains = v
                    .extract::<String>()?
                    .parse::<Domains>()
                    .map_err(value_err)?
            }
            "multi_call" => cfg.multi_call = v.extract()?,
            "sender_split" => cfg.sender_split = v.extract()?,
            "narrow" => cfg.narrow = v.extract()?,
            "widening_delay" => cfg.widening_delay = v.extract()?,
            "max_amount" => cfg.max_amount = v.extract()?,
            "timeout" => {
                let t: Option<f64> = v.extract()?;
                cfg.timeout = match t {
                    Some(t) if t > 0.0 && t.is_finite() => Some(Duration::from_secs_f64(t)),
                    Some(t) => return Err(value_err(format!("timeout must be positive, got {t}"))),
                    None => None,
                };
            }
            "arbitrary_storage" => {
                if v.extract::<bool>()? {
                    storage = StorageSpec::Arbitrary;
                }
            }
            "storage" => {
                if let Some(lit) = v.extract::<Option<String>>()? {
                    storage = StorageSpec::Literal(lit);
                }
            }
            other => return Err(value_err(format!("unknown option `{other}`"))),
        }
    }
    Ok(RunConfig {
        analysis: cfg,
        storage,
    })
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "pymichelstat")]
#[derive(Clone)]
struct Alarm {
    category: String,
    line: u32,
    col: u32,
    entrypoint: String,
    detail: String,
}

#[pymethods]
impl Alarm {
    fn __repr__(&self) -> String {
        format!(
            "Alarm({} at {}:{} in {})",
            self.category, self.line, self.col, self.entrypoint
        )
    }
}

/// Result of analyzing one contract.
#[pyclass(frozen, module = "pymichelstat")]
struct Report(ContractReport);

#[pymethods]
impl Report {
    #[getter]
    fn contract(&self) -> &str {
        &self.0.contract
    }

    /// `ok`, or the kind of error that stopped the analysis.
    #[getter]
    fn status(&self) -> &'static str {
        self.0.status.name()
    }

    #[getter]
    fn error(&self) -> Option<String> {
        self.0.error.clone()
    }

    #[getter]
    fn alarms(&self) -> Vec<Alarm> {
        self.0
            .alarms
            .iter()
            .map(|a| Alarm {
                category: a.category.name().into(),
                line: a.line,
                col: a.col,
                entrypoint: a.entrypoint.clone(),
                detail: a.detail.clone(),
            })
            .collect()
    }

    /// `(property, status)` pairs.
    #[getter]
    fn verdicts(&self) -> Vec<(String, String)> {
        self.0
            .verdicts
            .iter()
            .map(|v| (v.property.clone(), v.status.into()))
            .collect()
    }

    #[getter]
    fn invariant(&self) -> &str {
        &self.0.invariant
    }

    #[getter]
    fn time_ms(&self) -> f64 {
        self.0.time_ms
    }

    #[getter]
    fn exit_code(&self) -> i32 {
        self.0.exit_code()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(value_err)
    }

    fn __str__(&self) -> String {
        self.0.to_text()
    }

    fn __repr__(&self) -> String {
        format!(
            "Report({:?}, status={:?}, alarms={})",
            self.0.contract,
            self.status(),
            self.0.alarms.len()
        )
    }
}

/// Analyzes a contract file.
#[pyfunction]
#[pyo3(signature = (path, **opts))]
fn analyze_file(path: PathBuf, opts: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Report> {
    let run = run_config(opts)?;
    Ok(Report(report::analyze_file(&path, &run)))
}

type CorpusResult = (Vec<(String, usize)>, Vec<Report>);

/// Analyzes every `.tz` file of a directory; returns the number of
/// contracts with each alarm category and the per-contract reports.
#[pyfunction]
#[pyo3(signature = (dir, **opts))]
fn corpus(dir: PathBuf, opts: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<CorpusResult> {
    let run = run_config(opts)?;
    let files = report::corpus_files(&dir).map_err(value_err)?;
    let CorpusReport {
        alarms, contracts, ..
    } = report::run_corpus(&files, &run);
    Ok((
        alarms
            .into_iter()
            .map(|(c, n)| (c.name().to_string(), n))
            .collect(),
        contracts.into_iter().map(Report).collect(),
    ))
}

#[pymodule]
fn pymichelstat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Script>()?;
    m.add_class::<Report>()?;
    m.add_class::<Alarm>()?;
    m.add("ContractFailure", m.py().get_type::<ContractFailure>())?;
    m.add_function(wrap_pyfunction!(analyze_file, m)?)?;
    m.add_function(wrap_pyfunction!(corpus, m)?)?;
    Ok(())
}
