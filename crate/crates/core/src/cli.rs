//! Command-line front end: `train`, `predict`, `score` and `synth`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or format
//! error, 3 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::RunConfig;
use crate::corpus::{load_corpus, read_records, CorpusExample, CorpusRecord};
use crate::error::{Error, Result};
use crate::evaluator::{score_with_breakdowns, EvalReport, ScoreOptions, BREAKDOWN_RULES};
use crate::frame_codec::LabelSchema;
use crate::inferencer::{predict_corpus, read_events_file, write_events_file, InferenceOptions};
use crate::model::EventModel;
use crate::synth::generate_synthetic;
use crate::trainer::{evaluate, train};

pub const CHECKPOINT_FILE: &str = "model.safetensors";
pub const LOG_FILE: &str = "train_log.jsonl";
pub const CONFIG_ECHO_FILE: &str = "config.toml";

/// Sentence counts of the reference split: 529 / 30 / 40 documents.
pub const SPLIT_PROPORTIONS: [usize; 3] = [529, 30, 40];

#[derive(Debug, Parser)]
#[command(name = "evtuple", version, about = "Sequence-to-tuple event extraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set train.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write the best checkpoint plus an epoch log.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Predict events for every sentence of a corpus file.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Decoder steps; defaults to the value recorded at training time.
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        max_trigger_len: Option<usize>,
        #[arg(long)]
        max_argument_len: Option<usize>,
    },
    /// Score predictions against gold.
    Score {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Breakdown rule; repeatable. One of event-count, argument-count,
        /// overlap, roles-per-argument.
        #[arg(long = "breakdown", value_name = "RULE")]
        breakdowns: Vec<String>,
        /// Credit argument spans regardless of the predicted event type.
        #[arg(long)]
        relaxed: bool,
        /// Directory for `report.json` and `report.txt`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write a synthetic corpus split into train, dev and test files.
    Synth {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Maps an error to its process exit code.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) => 1,
        Error::InvalidInput(_)
        | Error::Schema(_)
        | Error::Format { .. }
        | Error::Alignment(_)
        | Error::Checkpoint(_)
        | Error::Incompatible(_)
        | Error::Io { .. }
        | Error::Json(_) => 2,
        Error::NonFiniteLoss { .. } | Error::Tensor(_) => 3,
    }
}

/// Parses arguments, runs one command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Train { config } => load_config(&config).and_then(|c| cmd_train(&c).map(|_| ())),
        Command::Predict {
            checkpoint,
            input,
            output,
            max_steps,
            max_trigger_len,
            max_argument_len,
        } => cmd_predict(
            &checkpoint,
            &input,
            &output,
            max_steps,
            &InferenceOptions {
                max_trigger_len,
                max_argument_len,
            },
        ),
        Command::Score {
            pred,
            gold,
            breakdowns,
            relaxed,
            out_dir,
        } => cmd_score(
            &pred,
            &gold,
            &breakdowns,
            ScoreOptions {
                relaxed_arguments: relaxed,
            },
            out_dir.as_deref(),
        )
        .map(|report| print!("{}", report.to_table())),
        Command::Synth { config, out } => load_config(&config).and_then(|c| cmd_synth(&c, &out)),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig> {
    RunConfig::load(args.config.as_deref(), &args.overrides)
}

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    let path = path
        .as_deref()
        .ok_or_else(|| Error::Config(format!("{key} is not set")))?;
    if !path.exists() {
        return Err(Error::Config(format!("{key}: {} does not exist", path.display())));
    }
    Ok(path)
}

pub fn read_schema(path: &Path) -> Result<LabelSchema> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

pub fn write_schema(path: &Path, schema: &LabelSchema) -> Result<()> {
    let text = serde_json::to_string_pretty(schema)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_config_echo(dir: &Path, config: &RunConfig) -> Result<()> {
    let path = dir.join(CONFIG_ECHO_FILE);
    fs::write(&path, config.to_toml()).map_err(|e| Error::io(&path, e))
}

/// What `cmd_train` leaves behind.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub dev_report: Option<EvalReport>,
    pub best_epoch: usize,
}

/// Trains on `data.train`, selects on `data.dev` and writes the checkpoint,
/// the epoch log and the echoed config into `output.dir`.
pub fn cmd_train(config: &RunConfig) -> Result<TrainOutcome> {
    let train_path = required(&config.data.train, "data.train")?;
    let schema_path = required(&config.data.schema, "data.schema")?;
    let dev_path = match &config.data.dev {
        Some(_) => Some(required(&config.data.dev, "data.dev")?),
        None => None,
    };
    let schema = read_schema(schema_path)?;
    let train_set = load_corpus(train_path, &schema)?;
    let dev_set = match dev_path {
        Some(p) => load_corpus(p, &schema)?,
        None => Vec::new(),
    };

    let dir = &config.output.dir;
    create_dir(dir)?;
    write_config_echo(dir, config)?;
    let log_path = dir.join(LOG_FILE);
    let mut log = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    writeln!(log, "{}", json!({ "config": config })).map_err(|e| Error::io(&log_path, e))?;

    let mut model = EventModel::for_corpus(&config.model, schema, &train_set, config.train.seed)?;
    let mut write_error = None;
    let summary = train(&mut model, &train_set, &dev_set, &config.train, &mut |entry| {
        match &entry.dev {
            Some(d) => eprintln!(
                "epoch {:>3}  loss {:.4}  dev TI {:.3} TC {:.3} AI {:.3} ARC {:.3}",
                entry.epoch, entry.mean_loss, d.ti, d.tc, d.ai, d.arc
            ),
            None => eprintln!("epoch {:>3}  loss {:.4}", entry.epoch, entry.mean_loss),
        }
        let line = serde_json::to_string(entry).expect("log entry serializes");
        if let Err(e) = writeln!(log, "{line}").and_then(|_| log.flush()) {
            write_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_error {
        return Err(Error::io(&log_path, e));
    }

    let dev_report = if dev_set.is_empty() {
        None
    } else {
        let steps = summary.max_tuples.max(crate::corpus::max_tuple_count(&dev_set));
        Some(evaluate(&model, &dev_set, steps)?)
    };
    let checkpoint = dir.join(CHECKPOINT_FILE);
    model.save(
        &checkpoint,
        json!({
            "config": config,
            "max_tuples": summary.max_tuples,
            "best_epoch": summary.best_epoch,
            "dev": dev_report,
        }),
    )?;
    match &dev_report {
        Some(report) => {
            println!("dev (epoch {})", summary.best_epoch);
            print!("{}", report.to_table());
        }
        None => println!("trained {} epochs; no dev set", summary.log.len()),
    }
    Ok(TrainOutcome {
        checkpoint,
        log: log_path,
        dev_report,
        best_epoch: summary.best_epoch,
    })
}

/// Reads a corpus for prediction. Gold events, if present, are ignored.
pub fn read_unlabeled(path: &Path, schema: &LabelSchema) -> Result<Vec<CorpusExample>> {
    read_records(path)?
        .into_iter()
        .map(|(id, record)| {
            let bare = CorpusRecord {
                events: Vec::new(),
                ..record
            };
            CorpusExample::from_record(&bare, id, schema)
        })
        .collect()
}

/// Decodes every sentence of `input` and writes one line per sentence to
/// `output`. Provenance (checkpoint path and its training config) goes to a
/// sidecar `<output>.meta.json`.
pub fn cmd_predict(
    checkpoint: &Path,
    input: &Path,
    output: &Path,
    max_steps: Option<usize>,
    opts: &InferenceOptions,
) -> Result<()> {
    if !input.exists() {
        return Err(Error::Config(format!("input {} does not exist", input.display())));
    }
    let (model, extra) = EventModel::load(checkpoint)?;
    let examples = read_unlabeled(input, model.schema())?;
    let steps = match max_steps {
        Some(0) => return Err(Error::Config("max-steps must be positive".into())),
        Some(s) => s,
        None => extra
            .get("max_tuples")
            .and_then(|v| v.as_u64())
            .map(|v| v as usize)
            .unwrap_or(1)
            .max(1),
    };
    let predictions = predict_corpus(&model, &examples, steps, opts)?;
    write_events_file(output, &predictions)?;
    let mut meta_path = output.as_os_str().to_owned();
    meta_path.push(".meta.json");
    let meta_path = PathBuf::from(meta_path);
    let meta = json!({
        "checkpoint": checkpoint,
        "input": input,
        "max_steps": steps,
        "max_trigger_len": opts.max_trigger_len,
        "max_argument_len": opts.max_argument_len,
        "training": extra.get("config"),
    });
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| Error::io(&meta_path, e))
}

/// Scores a prediction file against a gold file (either a prediction-format
/// file or a corpus file). Writes `report.json` and `report.txt` when
/// `out_dir` is given.
pub fn cmd_score(
    pred: &Path,
    gold: &Path,
    breakdowns: &[String],
    options: ScoreOptions,
    out_dir: Option<&Path>,
) -> Result<EvalReport> {
    if let Some(bad) = breakdowns.iter().find(|b| !BREAKDOWN_RULES.contains(&b.as_str())) {
        return Err(Error::Config(format!(
            "unknown breakdown {bad:?}; expected one of {}",
            BREAKDOWN_RULES.join(", ")
        )));
    }
    for (what, path) in [("pred", pred), ("gold", gold)] {
        if !path.exists() {
            return Err(Error::Config(format!("{what}: {} does not exist", path.display())));
        }
    }
    let predictions = read_events_file(pred)?;
    let gold_events = read_events_file(gold)?;
    let report = score_with_breakdowns(&predictions, &gold_events, breakdowns, options)?;
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        let mut value = serde_json::to_value(&report)?;
        value["inputs"] = json!({
            "pred": pred,
            "gold": gold,
            "breakdowns": breakdowns,
            "relaxed_arguments": options.relaxed_arguments,
        });
        let json_path = dir.join("report.json");
        fs::write(&json_path, serde_json::to_string_pretty(&value)? + "\n")
            .map_err(|e| Error::io(&json_path, e))?;
        let table_path = dir.join("report.txt");
        fs::write(&table_path, report.to_table()).map_err(|e| Error::io(&table_path, e))?;
    }
    Ok(report)
}

/// Split sizes for `n` sentences in the 529/30/40 proportions; test takes the
/// rounding remainder.
pub fn split_sizes(n: usize) -> [usize; 3] {
    let total: usize = SPLIT_PROPORTIONS.iter().sum();
    let share = |k: usize| (n * k + total / 2) / total;
    let train = share(SPLIT_PROPORTIONS[0]).min(n);
    let dev = share(SPLIT_PROPORTIONS[1]).min(n - train);
    [train, dev, n - train - dev]
}

/// Generates a corpus from the `[synth]` section and writes `train.jsonl`,
/// `dev.jsonl`, `test.jsonl`, `schema.json` and the echoed config.
pub fn cmd_synth(config: &RunConfig, out: &Path) -> Result<()> {
    let corpus = generate_synthetic(&config.synth)?;
    create_dir(out)?;
    write_config_echo(out, config)?;
    write_schema(&out.join("schema.json"), &corpus.schema)?;
    let [train, dev, _] = split_sizes(corpus.records.len());
    let parts = [
        ("train.jsonl", &corpus.records[..train]),
        ("dev.jsonl", &corpus.records[train..train + dev]),
        ("test.jsonl", &corpus.records[train + dev..]),
    ];
    for (name, records) in parts {
        let path = out.join(name);
        let mut text = String::new();
        for record in records {
            text.push_str(&serde_json::to_string(record)?);
            text.push('\n');
        }
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
