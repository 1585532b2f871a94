use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use namerec::corpus::{read_corpus, write_corpus, write_records, CorpusRead};
use namerec::eval::{evaluate, gold_name};
use namerec::extractor::{mine_corpus_with, MethodRecord};
use namerec::pipeline::{cross_validate_pipeline, load_model, save_model, train_pipeline, PipelineModel};
use namerec::synth::synth_corpus;
use namerec::PipelineConfig;
use serde_json::{json, Value};

/// Method-name recommendation for Java.
#[derive(Parser, Debug)]
#[command(name = "namerec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mine every *.java file under a directory into a JSONL corpus.
    Extract {
        dir: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train a model on a JSONL corpus.
    Train {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        opts: TrainOpts,
    },
    /// Recommend names for each method of a corpus; writes JSONL.
    Recommend {
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the predicted prefix category of each method; writes JSONL.
    Classify {
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score a model on a labeled corpus, or cross-validate its settings.
    ///
    /// Prints the JSON report on stdout and a table on stderr.
    Evaluate {
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Retrain on k-1 folds with the model's settings, score the rest.
        #[arg(long)]
        kfold: Option<usize>,
        #[command(flatten)]
        opts: TrainOpts,
    },
    /// Write a synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Args, Debug, Default)]
struct TrainOpts {
    /// key = value file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Classifier epochs.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    generator_epochs: Option<usize>,
    #[arg(long)]
    beam_width: Option<usize>,
    /// Any configuration key, e.g. `--set generator.hidden_dim=64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<namerec::Error> for Failure {
    fn from(e: namerec::Error) -> Self {
        Failure::Data(e.into())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Keys a config file may hold besides the model settings.
const CLI_KEYS: &[&str] = &["epochs", "generator_epochs", "beam_width", "top_k", "kfold"];

#[derive(Default)]
struct FileSettings {
    cli: BTreeMap<String, String>,
    model: Vec<(String, String)>,
}

fn read_settings(path: Option<&Path>) -> Outcome<FileSettings> {
    let mut out = FileSettings::default();
    let Some(path) = path else { return Ok(out) };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(Failure::Data)?;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if CLI_KEYS.contains(&k.as_str()) {
            out.cli.insert(k, v);
        } else {
            out.model.push((k, v));
        }
    }
    Ok(out)
}

fn cli_value<T: std::str::FromStr>(flag: Option<T>, file: &FileSettings, key: &str) -> Outcome<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    file.cli
        .get(key)
        .map(|v| v.parse().map_err(|_| Failure::Usage(format!("config key {key}: invalid value {v:?}"))))
        .transpose()
}

fn usage(e: namerec::Error) -> Failure {
    Failure::Usage(e.to_string())
}

/// Defaults, then the config file, then flags.
fn build_config(base: PipelineConfig, opts: &TrainOpts, file: &FileSettings) -> Outcome<PipelineConfig> {
    let mut c = base;
    for (k, v) in &file.model {
        c.set(k, v).map_err(usage)?;
    }
    if let Some(e) = cli_value(opts.epochs, file, "epochs")? {
        c.classifier.epochs = e;
    }
    if let Some(e) = cli_value(opts.generator_epochs, file, "generator_epochs")? {
        c.generator.epochs = e;
    }
    if let Some(b) = cli_value(opts.beam_width, file, "beam_width")? {
        c.decode.beam_width = b;
    }
    for o in &opts.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {o:?}")))?;
        c.set(k.trim(), v.trim()).map_err(usage)?;
    }
    if let Some(s) = opts.seed {
        c = c.with_seed(s);
    }
    c.validate().map_err(usage)?;
    Ok(c)
}

fn read_input(path: &Path) -> Outcome<Vec<MethodRecord>> {
    let CorpusRead {
        records,
        rejected,
        diagnostics,
    } = read_corpus(path)?;
    for d in &diagnostics {
        log::warn!("{}: {d}", path.display());
    }
    if rejected > 0 {
        eprintln!("{}: {} lines rejected", path.display(), rejected);
    }
    Ok(records)
}

fn output_writer(path: Option<&Path>) -> Outcome<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .map_err(Failure::Data)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_line(w: &mut dyn Write, v: &Value) -> io::Result<()> {
    serde_json::to_writer(&mut *w, v)?;
    w.write_all(b"\n")
}

/// A closed pipe (e.g. `| head`) ends output quietly.
fn quiet_pipe(r: io::Result<()>) -> Outcome<()> {
    match r {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(anyhow::Error::from(e).context("writing output").into()),
        _ => Ok(()),
    }
}

fn identity(r: &MethodRecord) -> Value {
    json!({
        "class_name": r.class_name,
        "method_name": r.method_name,
        "source_path": r.source_path,
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Extract { dir, output } => {
            let file = File::create(&output)
                .with_context(|| format!("creating {}", output.display()))
                .map_err(Failure::Data)?;
            let mut w = BufWriter::new(file);
            let mut write_err = None;
            let (summary, diagnostics) = mine_corpus_with(&dir, |r| {
                if write_err.is_none() {
                    if let Err(e) = write_records(&mut w, std::slice::from_ref(&r)) {
                        write_err = Some(e);
                    }
                }
            })?;
            if let Some(e) = write_err {
                return Err(e.into());
            }
            w.flush().context("writing corpus")?;
            for d in &diagnostics {
                log::warn!("{d}");
            }
            eprintln!("{summary}");
        }
        Command::Train { corpus, output, opts } => {
            let file = read_settings(opts.config.as_deref())?;
            let config = build_config(PipelineConfig::default(), &opts, &file)?;
            let trained = train_pipeline(&corpus, &config)?;
            for w in &trained.warnings {
                eprintln!("warning: {w}");
            }
            save_model(&trained.model, &output)?;
            eprintln!(
                "trained on {}: classifier loss {:.4}, generator loss {}",
                corpus.display(),
                trained.classifier_loss.last().copied().unwrap_or(f64::NAN),
                trained
                    .generator_loss
                    .last()
                    .map_or("skipped".to_string(), |l| format!("{l:.4}"))
            );
        }
        Command::Recommend {
            model,
            input,
            top_k,
            config,
            output,
        } => {
            let file = read_settings(config.as_deref())?;
            let top_k = cli_value(top_k, &file, "top_k")?.unwrap_or(5);
            if top_k == 0 {
                return Err(Failure::Usage("--top-k must be at least 1".into()));
            }
            let mut model = load_model(&model)?;
            // Only decoding settings can change after training.
            for (k, v) in &file.model {
                if k.starts_with("decode.") {
                    model.config.set(k, v).map_err(usage)?;
                } else {
                    log::warn!("config key {k} ignored by recommend");
                }
            }
            if let Some(b) = cli_value(None, &file, "beam_width")? {
                model.config.decode.beam_width = b;
            }
            model.config.validate().map_err(usage)?;
            let records = read_input(&input)?;
            let mut w = output_writer(output.as_deref())?;
            for r in &records {
                let rec = serde_json::to_value(model.recommend(r, top_k)).context("serializing")?;
                if let Err(e) = write_line(&mut *w, &merge(identity(r), rec)) {
                    return quiet_pipe(Err(e));
                }
            }
            quiet_pipe(w.flush())?;
        }
        Command::Classify { model, input, output } => {
            let model = load_model(&model)?;
            let records = read_input(&input)?;
            let mut w = output_writer(output.as_deref())?;
            for r in &records {
                let (category, confidence) = model.classify(r);
                let v = merge(identity(r), json!({ "category": category, "confidence": confidence }));
                if let Err(e) = write_line(&mut *w, &v) {
                    return quiet_pipe(Err(e));
                }
            }
            quiet_pipe(w.flush())?;
        }
        Command::Evaluate {
            model,
            test,
            kfold,
            opts,
        } => {
            let file = read_settings(opts.config.as_deref())?;
            let kfold = cli_value(kfold, &file, "kfold")?;
            let model: PipelineModel = load_model(&model)?;
            let records = read_input(&test)?;
            if records.is_empty() {
                return Err(Failure::Data(anyhow::anyhow!("{}: no usable records", test.display())));
            }
            let (json, table) = match kfold {
                None => {
                    let report = evaluate(|r| model.top_name(r), &records)?;
                    (serde_json::to_value(&report).context("serializing")?, report.to_string())
                }
                Some(k) => {
                    if k < 2 {
                        return Err(Failure::Usage("--kfold must be at least 2".into()));
                    }
                    let config = build_config(model.config.clone(), &opts, &file)?;
                    let b = cross_validate_pipeline(&records, k, &config)?;
                    let mut v = serde_json::to_value(&b.pipeline).context("serializing")?;
                    v["baselines"] = json!({
                        "constant_get": b.constant_get.summary(),
                        "heuristics_only": b.heuristics_only.summary(),
                    });
                    let table = format!(
                        "{}baseline constant-get f1 {:.4}, heuristics-only f1 {:.4}\n",
                        b.pipeline, b.constant_get.f1, b.heuristics_only.f1
                    );
                    (v, table)
                }
            };
            let mut out = io::stdout().lock();
            let printed = serde_json::to_writer_pretty(&mut out, &json)
                .map_err(io::Error::from)
                .and_then(|()| out.write_all(b"\n"));
            quiet_pipe(printed)?;
            eprint!("{table}");
        }
        Command::Synth { n, output, seed } => {
            let records = synth_corpus(n, seed);
            write_corpus(&output, &records)?;
            let labels = records.iter().fold(BTreeMap::new(), |mut m, r| {
                *m.entry(namerec::classifier::derive_label(&gold_name(r)).to_string())
                    .or_insert(0usize) += 1;
                m
            });
            eprintln!("wrote {} records to {} {labels:?}", records.len(), output.display());
        }
    }
    Ok(())
}

/// Joins the cause chain, dropping causes already quoted by their parent.
fn error_chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.ends_with(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {}", error_chain(&e));
            ExitCode::from(2)
        }
    }
}
