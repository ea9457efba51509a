use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairboost::harness::{
    default_data_dir, emit_traces, run_experiment, run_sweep_c, AggregateReport, DatasetRef,
    ExperimentSpec, Method,
};
use fairboost::{fairness_report, Error, FairnessReport, Group, Label, SmoteConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fairboost", version, about = "Fairness-aware boosting experiments")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate one method over repeated random splits.
    Run(RunArgs),
    /// Re-select θ for several values of c on the same trained splits.
    SweepC {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated values in [0, 1].
        #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6,0.8,1")]
        values: Vec<f64>,
    },
    /// Write per-round gap traces and margin distributions.
    Traces {
        #[command(flatten)]
        run: RunArgs,
        /// Methods to trace; defaults to adafair, nocumul, noconf and vanilla.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
    },
    /// Score a predictions file with columns y_true, y_pred, group.
    Audit {
        #[arg(long)]
        predictions: PathBuf,
        /// Also write the report as <out>.json and <out>.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Builtin dataset name (adult, bank, compass, kdd) or a CSV path with --schema.
    #[arg(long)]
    dataset: String,
    /// TOML schema for a CSV dataset.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Directory holding <name>.csv for builtin datasets [default: $FAIRBOOST_DATA or ./data].
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// adafair, nocumul, noconf, confonly, vanilla or smoteboost.
    #[arg(long, default_value = "adafair")]
    method: String,
    #[arg(long, default_value_t = 200)]
    rounds: usize,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 10)]
    splits: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory; nothing is written when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SMOTE synthetics per round [default: per-dataset value, else 100].
    #[arg(long)]
    smote_n: Option<usize>,
    #[arg(long, default_value_t = 5)]
    smote_k: usize,
    /// Keep training after the fairness target is met.
    #[arg(long)]
    no_fairness_stop: bool,
    /// Use every trained round instead of selecting θ.
    #[arg(long)]
    keep_all_rounds: bool,
}

impl RunArgs {
    fn spec(&self, method: &str) -> Result<ExperimentSpec, Error> {
        let data_dir = self.data_dir.clone().unwrap_or_else(default_data_dir);
        let dataset = DatasetRef::parse(&self.dataset, self.schema.as_deref(), &data_dir)?;
        let method: Method = method.parse()?;
        let mut spec = ExperimentSpec::new(dataset, method);
        spec.train.rounds = self.rounds;
        spec.train.epsilon = self.epsilon;
        spec.train.c = self.c;
        spec.train.fairness_stop = !self.no_fairness_stop;
        spec.splits = self.splits;
        spec.base_seed = self.seed;
        spec.out_dir = self.out.clone();
        if self.keep_all_rounds {
            spec.select_theta = false;
        }
        if let Some(smote) = spec.smote.as_mut() {
            *smote = SmoteConfig {
                n: self.smote_n.unwrap_or(smote.n),
                k: self.smote_k,
                seed: smote.seed,
            };
        } else if self.smote_n.is_some() {
            return Err(Error::Config("--smote-n only applies to --method smoteboost".into()));
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn summary(agg: &AggregateReport) -> serde_json::Value {
    json!({
        "dataset": agg.dataset,
        "method": agg.method,
        "c": agg.c,
        "splits": agg.splits.len(),
        "theta": agg.splits.iter().map(|s| s.theta).collect::<Vec<_>>(),
        "mean": agg.mean,
        "std": agg.std,
    })
}

fn parse_label(raw: &str, row: usize) -> Result<Label, Error> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "+1" | "pos" | "positive" | "true" => Ok(Label::Pos),
        "-1" | "0" | "neg" | "negative" | "false" => Ok(Label::Neg),
        other => Err(Error::Row {
            row,
            message: format!("`{other}` is not a label (use 1 / -1 or 1 / 0)"),
        }),
    }
}

fn parse_group(raw: &str, row: usize) -> Result<Group, Error> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "prot" | "protected" => Ok(Group::Prot),
        "0" | "nonprot" | "non-protected" | "unprotected" => Ok(Group::NonProt),
        other => Err(Error::Row {
            row,
            message: format!("`{other}` is not a group (use 1 / 0 or prot / nonprot)"),
        }),
    }
}

fn audit(path: &Path, out: Option<&Path>) -> Result<FairnessReport, Error> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };
    let (yt, yp, g) = (col("y_true")?, col("y_pred")?, col("group")?);
    let (mut y_true, mut y_pred, mut groups) = (Vec::new(), Vec::new(), Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        y_true.push(parse_label(&record[yt], row)?);
        y_pred.push(parse_label(&record[yp], row)?);
        groups.push(parse_group(&record[g], row)?);
    }
    let report = fairness_report(&y_true, &y_pred, &groups)?;
    if let Some(out) = out {
        let json_path = out.with_extension("json");
        let csv_path = out.with_extension("csv");
        let text = serde_json::to_string_pretty(&report)? + "\n";
        std::fs::write(&json_path, text).map_err(|e| Error::Io {
            path: json_path.clone(),
            source: e,
        })?;
        let csv = format!("{}\n{}\n", FairnessReport::CSV_HEADER.join(","), report.csv_row());
        std::fs::write(&csv_path, csv).map_err(|e| Error::Io {
            path: csv_path.clone(),
            source: e,
        })?;
    }
    Ok(report)
}

fn execute(command: Command) -> Result<serde_json::Value, Error> {
    match command {
        Command::Run(args) => Ok(summary(&run_experiment(&args.spec(&args.method)?)?)),
        Command::SweepC { run, values } => {
            let reports = run_sweep_c(&run.spec(&run.method)?, &values)?;
            Ok(json!(reports.iter().map(summary).collect::<Vec<_>>()))
        }
        Command::Traces { run, methods } => {
            let methods = if methods.is_empty() {
                vec!["adafair".into(), "nocumul".into(), "noconf".into(), "vanilla".into()]
            } else {
                methods
            };
            let mut written = Vec::new();
            for m in &methods {
                let traces = emit_traces(&run.spec(m)?)?;
                written.push(json!({
                    "method": m.to_ascii_lowercase(),
                    "splits": traces.len(),
                    "rounds": traces.iter().map(|t| t.trace.rounds.len()).collect::<Vec<_>>(),
                }));
            }
            Ok(json!(written))
        }
        Command::Audit { predictions, out } => Ok(json!(audit(&predictions, out.as_deref())?)),
    }
}

fn fail(code: &str, message: String, split: Option<usize>) -> ExitCode {
    let mut error = json!({ "code": code, "message": message });
    if let Some(split) = split {
        error["split"] = json!(split);
    }
    eprintln!("{}", json!({ "error": error }));
    ExitCode::from(if code == "usage" { 2 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string(), None),
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("serializable output"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let split = match &e {
                Error::Split { split, .. } => Some(*split),
                _ => None,
            };
            let code = match &e {
                Error::Split { source, .. } => source.code(),
                other => other.code(),
            };
            fail(code, e.to_string(), split)
        }
    }
}
