// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Per-contract reports and corpus aggregation.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analyzer::{analyze, Alarm, Analysis, Category, Config, InitialStorage};
use crate::checkers::{verdicts, Status, Verdict};
use crate::concrete::Value;
use crate::syntax::{load, parse_data, LoadError};

/// How the storage before the first call is chosen.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum StorageSpec {
    /// The empty value of the storage type.
    #[default]
    Default,
    /// Any value of the storage type.
    Arbitrary,
    /// A literal, parsed against each contract's storage type.
    Literal(String),
}

/// Settings shared by every contract of a run.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub analysis: Config,
    pub storage: StorageSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    IoError,
    ParseError,
    TypeError,
    BadStorage,
    Timeout,
    AnalysisError,
}

impl RunStatus {
    pub fn is_error(self) -> bool {
        self != RunStatus::Ok
    }

    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::IoError => "io-error",
            RunStatus::ParseError => "parse-error",
            RunStatus::TypeError => "type-error",
            RunStatus::BadStorage => "bad-storage",
            RunStatus::Timeout => "timeout",
            RunStatus::AnalysisError => "analysis-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlarmRow {
    pub category: Category,
    pub line: u32,
    pub col: u32,
    pub entrypoint: String,
    pub detail: String,
}

impl From<&Alarm> for AlarmRow {
    fn from(a: &Alarm) -> Self {
        AlarmRow {
            category: a.category,
            line: a.span.line,
            col: a.span.col,
            entrypoint: a.entrypoint.clone(),
            detail: a.detail.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerdictRow {
    pub property: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl From<&Verdict> for VerdictRow {
    fn from(v: &Verdict) -> Self {
        let reason = match &v.status {
            Status::NotApplicable { reason } | Status::Unknown { reason } => Some(reason.clone()),
            _ => None,
        };
        VerdictRow {
            property: v.property.clone(),
            status: v.status.name(),
            reason,
        }
    }
}

/// Result for one contract.
#[derive(Debug, Clone, Serialize)]
pub struct ContractReport {
    pub contract: String,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub alarms: Vec<AlarmRow>,
    pub verdicts: Vec<VerdictRow>,
    pub invariant: String,
    pub time_ms: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ContractReport {
    fn failed(contract: &str, status: RunStatus, error: String, start: Instant) -> Self {
        ContractReport {
            contract: contract.into(),
            status,
            error: Some(error),
            alarms: vec![],
            verdicts: vec![],
            invariant: String::new(),
            time_ms: ms(start),
            warnings: vec![],
        }
    }

    pub fn has_category(&self, c: Category) -> bool {
        self.alarms.iter().any(|a| a.category == c)
    }

    /// 0 without alarms, 1 with alarms, 2 when the analysis did not
    /// complete.
    pub fn exit_code(&self) -> i32 {
        if self.status.is_error() {
            2
        } else if self.alarms.is_empty() {
            0
        } else {
            1
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{}: {} ({:.3} ms)",
            self.contract,
            self.status.name(),
            self.time_ms
        );
        if let Some(e) = &self.error {
            let _ = writeln!(s, "  error: {e}");
        }
        for a in &self.alarms {
            let _ = writeln!(
                s,
                "  {}:{}: {} in {}: {}",
                a.line, a.col, a.category, a.entrypoint, a.detail
            );
        }
        for v in &self.verdicts {
            let _ = write!(s, "  {}: {}", v.property, v.status);
            match &v.reason {
                Some(r) => {
                    let _ = writeln!(s, " ({r})");
                }
                None => s.push('\n'),
            }
        }
        if !self.invariant.is_empty() {
            s.push_str("  invariant:\n");
            for l in self.invariant.lines() {
                let _ = writeln!(s, "    {l}");
            }
        }
        for w in &self.warnings {
            let _ = writeln!(s, "  warning: {w}");
        }
        s
    }
}

/// Builds the report of a finished analysis.
pub fn report_of(contract: &str, a: &Analysis, cfg: &Config, time_ms: f64) -> ContractReport {
    let status = match a.aborted.as_deref() {
        None => RunStatus::Ok,
        Some("timeout") => RunStatus::Timeout,
        Some(_) => RunStatus::AnalysisError,
    };
    ContractReport {
        contract: contract.into(),
        status,
        error: a.aborted.clone(),
        alarms: a.alarms.iter().map(AlarmRow::from).collect(),
        verdicts: verdicts(a, cfg).iter().map(VerdictRow::from).collect(),
        invariant: a.render_invariant(),
        time_ms,
        warnings: a.warnings.clone(),
    }
}

/// Milliseconds since `start`, to the microsecond.
fn ms(start: Instant) -> f64 {
    (start.elapsed().as_micros() as f64) / 1000.0
}

fn panic_message(p: &(dyn std::any::Any + Send)) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "internal error".into())
}

/// Parses, typechecks and analyzes one contract.
pub fn analyze_source(contract: &str, text: &str, run: &RunConfig) -> ContractReport {
    let start = Instant::now();
    let script = match load(text) {
        Ok(s) => s,
        Err(e @ LoadError::Parse(_)) => {
            return ContractReport::failed(contract, RunStatus::ParseError, e.to_string(), start)
        }
        Err(e @ LoadError::Type(_)) => {
            return ContractReport::failed(contract, RunStatus::TypeError, e.to_string(), start)
        }
    };
    let mut cfg = run.analysis.clone();
    cfg.storage = match &run.storage {
        StorageSpec::Default => InitialStorage::Default,
        StorageSpec::Arbitrary => InitialStorage::Arbitrary,
        StorageSpec::Literal(lit) => {
            match parse_data(lit)
                .map_err(|e| e.to_string())
                .and_then(|d| Value::from_data(&d, &script.storage))
            {
                Ok(v) => InitialStorage::Value(v),
                Err(e) => return ContractReport::failed(contract, RunStatus::BadStorage, e, start),
            }
        }
    };
    log::debug!("analyzing {contract}");
    match catch_unwind(AssertUnwindSafe(|| analyze(&script, &cfg))) {
        Ok(a) => report_of(contract, &a, &cfg, ms(start)),
        Err(p) => ContractReport::failed(
            contract,
            RunStatus::AnalysisError,
            panic_message(&*p),
            start,
        ),
    }
}

pub fn analyze_file(path: &Path, run: &RunConfig) -> ContractReport {
    let name = path.display().to_string();
    match std::fs::read_to_string(path) {
        Ok(text) => analyze_source(&name, &text, run),
        Err(e) => ContractReport::failed(&name, RunStatus::IoError, e.to_string(), Instant::now()),
    }
}

/// Worst exit code over a batch.
pub fn exit_code(reports: &[ContractReport]) -> i32 {
    reports
        .iter()
        .map(ContractReport::exit_code)
        .max()
        .unwrap_or(0)
}

/// The `.tz` files of a directory, sorted.
pub fn corpus_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = vec![];
    for e in std::fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == "tz") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Aggregate over a corpus: contracts per alarm category and analysis
/// times.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusReport {
    pub analyzed: usize,
    pub successful: usize,
    pub errors: usize,
    /// Number of contracts with at least one alarm of each category.
    pub alarms: BTreeMap<Category, usize>,
    pub min_time_ms: Option<f64>,
    pub max_time_ms: Option<f64>,
    pub avg_time_ms: Option<f64>,
    pub contracts: Vec<ContractReport>,
}

impl CorpusReport {
    pub fn new(contracts: Vec<ContractReport>) -> Self {
        let ok: Vec<&ContractReport> = contracts.iter().filter(|r| !r.status.is_error()).collect();
        let alarms = Category::ALL
            .into_iter()
            .map(|c| (c, contracts.iter().filter(|r| r.has_category(c)).count()))
            .collect();
        let times: Vec<f64> = ok.iter().map(|r| r.time_ms).collect();
        CorpusReport {
            analyzed: contracts.len(),
            successful: ok.len(),
            errors: contracts.len() - ok.len(),
            alarms,
            min_time_ms: times.iter().copied().reduce(f64::min),
            max_time_ms: times.iter().copied().reduce(f64::max),
            avg_time_ms: (!times.is_empty())
                .then(|| times.iter().sum::<f64>() / times.len() as f64),
            contracts,
        }
    }

    pub fn count(&self, c: Category) -> usize {
        self.alarms.get(&c).copied().unwrap_or(0)
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(&self.contracts)
    }
}

impl fmt::Display for CorpusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<28}{:>10}", "analyzed", self.analyzed)?;
        writeln!(f, "{:<28}{:>10}", "successful analyses", self.successful)?;
        writeln!(f, "{:<28}{:>10}", "analysis errors", self.errors)?;
        for (c, n) in &self.alarms {
            writeln!(f, "{:<28}{:>10}", c.name(), n)?;
        }
        let secs = |t: Option<f64>| t.map_or("-".to_string(), |t| format!("{:.4} s", t / 1000.0));
        writeln!(f, "{:<28}{:>10}", "min. time", secs(self.min_time_ms))?;
        writeln!(f, "{:<28}{:>10}", "max. time", secs(self.max_time_ms))?;
        write!(f, "{:<28}{:>10}", "avg. time", secs(self.avg_time_ms))
    }
}

/// Analyzes every file independently, in parallel.
pub fn run_corpus(files: &[PathBuf], run: &RunConfig) -> CorpusReport {
    let reports = files.par_iter().map(|p| analyze_file(p, run)).collect();
    CorpusReport::new(reports)
}
