// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! `michelstat`: static analysis of Michelson contracts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use michelstat::analyzer::{Config, Domains};
use michelstat::concrete::{run_contract, CallContext, Value};
use michelstat::report::{
    analyze_file, corpus_files, exit_code, run_corpus, RunConfig, StorageSpec,
};
use michelstat::syntax::{load, parse_data, Ty};

#[derive(Parser)]
#[command(
    name = "michelstat",
    version,
    about = "Abstract-interpretation analyzer for Michelson contracts"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analyze contracts and report alarms, verdicts and storage invariants.
    Analyze {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        opts: AnalysisOpts,
    },
    /// Run one entry point on concrete inputs.
    Exec {
        file: PathBuf,
        #[arg(long, default_value = "default")]
        entrypoint: String,
        #[arg(long)]
        arg: String,
        #[arg(long)]
        storage: String,
        #[arg(long, default_value = "tz1sender")]
        sender: String,
        #[arg(long, default_value_t = 0)]
        amount: u64,
        #[arg(long, default_value_t = 0)]
        balance: u64,
    },
    /// Analyze every `.tz` file of a directory and print category totals.
    Corpus {
        dir: PathBuf,
        #[command(flatten)]
        opts: AnalysisOpts,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct AnalysisOpts {
    /// Numeric domains: intervals alone, or with symbolic and equality facts.
    #[arg(long, default_value = "intv+exp")]
    domains: Domains,
    /// Analyze arbitrary sequences of calls.
    #[arg(long)]
    multi_call: bool,
    /// Track the caller's entry of `address → mutez` maps separately.
    #[arg(long)]
    sender_split: bool,
    /// Start from any storage value instead of the default one.
    #[arg(long, conflicts_with = "storage")]
    arbitrary_storage: bool,
    /// Storage literal to start from.
    #[arg(long)]
    storage: Option<String>,
    /// Narrowing steps after each widening fixpoint.
    #[arg(long, default_value_t = 0)]
    narrow: u32,
    /// Upper bound on the transferred amount.
    #[arg(long)]
    max_amount: Option<u64>,
    /// Joins before widening starts.
    #[arg(long, default_value_t = 1)]
    widening_delay: u32,
    /// Seconds allowed per contract.
    #[arg(long, value_parser = positive_secs)]
    timeout: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn positive_secs(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
        _ => Err(format!("`{s}` is not a positive number of seconds")),
    }
}

impl AnalysisOpts {
    fn run_config(&self) -> RunConfig {
        let analysis = Config {
            domains: self.domains,
            sender_split: self.sender_split,
            multi_call: self.multi_call,
            narrow: self.narrow,
            widening_delay: self.widening_delay,
            max_amount: self.max_amount,
            timeout: self.timeout.map(Duration::from_secs_f64),
            ..Config::default()
        };
        let storage = match (&self.storage, self.arbitrary_storage) {
            (Some(lit), _) => StorageSpec::Literal(lit.clone()),
            (None, true) => StorageSpec::Arbitrary,
            (None, false) => StorageSpec::Default,
        };
        RunConfig { analysis, storage }
    }
}

fn cmd_analyze(files: &[PathBuf], opts: &AnalysisOpts) -> Result<i32> {
    let run = opts.run_config();
    let reports: Vec<_> = files.iter().map(|f| analyze_file(f, &run)).collect();
    match opts.format {
        Format::Text => {
            for r in &reports {
                print!("{}", r.to_text());
            }
        }
        Format::Json => {
            let out = match reports.as_slice() {
                [one] => serde_json::to_string_pretty(one)?,
                all => serde_json::to_string_pretty(all)?,
            };
            println!("{out}");
        }
    }
    Ok(exit_code(&reports))
}

fn cmd_corpus(dir: &Path, opts: &AnalysisOpts) -> Result<i32> {
    let files = corpus_files(dir).with_context(|| format!("cannot list {}", dir.display()))?;
    let report = run_corpus(&files, &opts.run_config());
    match opts.format {
        Format::Text => {
            for r in &report.contracts {
                let cats: Vec<&str> = r.alarms.iter().map(|a| a.category.name()).collect();
                log::info!("{}: {} {:?}", r.contract, r.status.name(), cats);
            }
            println!("{report}");
        }
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(report.exit_code())
}

fn literal(text: &str, ty: &Ty, what: &str) -> Result<Value> {
    let d = parse_data(text).with_context(|| format!("bad {what} literal"))?;
    Value::from_data(&d, ty).map_err(|e| anyhow!("{what} does not match type {ty}: {e}"))
}

fn cmd_exec(file: &Path, ep: &str, arg: &str, storage: &str, ctx: CallContext) -> Result<i32> {
    let text =
        std::fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?;
    let script = load(&text).with_context(|| format!("cannot load {}", file.display()))?;
    let entry = script
        .entrypoint(ep)
        .ok_or_else(|| anyhow!("no entry point `{ep}`"))?;
    let arg = literal(arg, &entry.ty, "argument")?;
    let storage = literal(storage, &script.storage, "storage")?;
    match run_contract(&script, ep, arg, storage, &ctx) {
        Ok((ops, st)) => {
            let ops: Vec<String> = ops
                .into_iter()
                .map(|t| Value::Operation(Box::new(t)).to_string())
                .collect();
            println!("([{}], {st})", ops.join("; "));
            Ok(0)
        }
        Err(f) if f.is_runtime() => {
            println!("failed: {f}");
            Ok(1)
        }
        Err(f) => Err(anyhow!(f)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MICHELSTAT_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Analyze { files, opts } => cmd_analyze(files, opts),
        Cmd::Corpus { dir, opts } => cmd_corpus(dir, opts),
        Cmd::Exec {
            file,
            entrypoint,
            arg,
            storage,
            sender,
            amount,
            balance,
        } => cmd_exec(
            file,
            entrypoint,
            arg,
            storage,
            CallContext {
                sender: sender.clone(),
                source: sender.clone(),
                amount: *amount,
                balance: *balance,
                ..CallContext::default()
            },
        ),
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
