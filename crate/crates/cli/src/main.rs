//! `logngram`: parse raw logs, train N-gram next-event models, evaluate
//! them and score suspect runs event by event.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use logngram::eval::{self, DummyPredictor, Phase};
use logngram::formats::{self, SequenceFile};
use logngram::ingest;
use logngram::miner::{parse_corpus, MinerConfig};
use logngram::ngram::NGramModel;
use logngram::pipeline::{self, CorpusStats};
use logngram::report::{self, Overlays, PlotMetric, PlotSpec};
use logngram::synthetic::{MarkovSource, SyntheticCorpus};
use logngram::{Error, EventSequence, Label, SplitSpec, WindowSize};

#[derive(Parser, Debug)]
#[command(
    name = "logngram",
    version,
    about = "N-gram next-event models and per-event anomaly scores for test logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mine raw logs into a sequence file and a template catalog.
    Parse(ParseArgs),
    /// Train an N-gram model on the normal training sequences.
    Train(TrainArgs),
    /// Evaluate a model (and the most-frequent-event baseline) on test sequences.
    Eval(EvalArgs),
    /// Train and evaluate one model per window size.
    Sweep(SweepArgs),
    /// Write per-event anomaly scores (and optional SVG plots) for one sequence.
    Score(ScoreArgs),
    /// Per-sequence wins and ties between two prediction files.
    Compare(CompareArgs),
    /// Full HDFS run: ingest, parse, corpus statistics, split, sweep, baseline.
    BenchHdfs(BenchArgs),
    /// Generate a seeded synthetic sequence file.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct ParseArgs {
    /// HDFS log file (sessions keyed by block id).
    #[arg(long, requires = "hdfs_labels", conflicts_with = "dir")]
    hdfs_log: Option<PathBuf>,
    /// HDFS label table (`BlockId,Label`).
    #[arg(long)]
    hdfs_labels: Option<PathBuf>,
    /// Directory with one run per file.
    #[arg(long)]
    dir: Option<PathBuf>,
    /// With --dir: files whose name contains this text are labelled Anomaly.
    #[arg(long, default_value = "FAIL")]
    anomaly_pattern: String,
    /// Output sequence file.
    #[arg(long)]
    out: PathBuf,
    /// Output template catalog.
    #[arg(long)]
    catalog: PathBuf,
    /// Drop sequences shorter than this many events.
    #[arg(long, default_value_t = 0)]
    min_len: usize,
    /// Parse-tree depth, root and leaf levels included.
    #[arg(long, default_value_t = 4)]
    tree_depth: usize,
    /// Similarity needed to join an existing template.
    #[arg(long, default_value_t = 0.4)]
    similarity: f64,
    /// Maximum children per parse-tree node.
    #[arg(long, default_value_t = 100)]
    max_children: usize,
    /// Skip the block-id / IP / number masks (on by default for HDFS).
    #[arg(long)]
    no_masks: bool,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Sequence file.
    #[arg(long)]
    seqs: PathBuf,
    /// Fraction of normal sequences used for training; the rest is the test set.
    #[arg(long, default_value_t = 0.5)]
    split: f64,
    /// Use every normal sequence for both training and evaluation.
    #[arg(long)]
    no_split: bool,
    /// Seed for the train/test shuffle.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Ignore sequences shorter than this many events.
    #[arg(long, default_value_t = 0)]
    min_len: usize,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Sliding-window size (context is n-1 events).
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    /// Report table (CSV); stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the model's per-position predictions.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Dataset name used in the report.
    #[arg(long, default_value = "dataset")]
    dataset: String,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Window sizes: `a..b` (inclusive) or a single value.
    #[arg(long, default_value = "2..10", value_parser = parse_range)]
    n: RangeInclusive<usize>,
    /// Report table (CSV); stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the transposed per-n table here.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value = "dataset")]
    dataset: String,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    seqs: PathBuf,
    /// Session to score; defaults to the first Anomaly sequence, else the first one.
    #[arg(long)]
    session: Option<String>,
    /// Output score file.
    #[arg(long)]
    out: PathBuf,
    /// SVG plot of log-scaled occurrence counts.
    #[arg(long)]
    plot_occurrence: Option<PathBuf>,
    /// SVG plot of probabilities.
    #[arg(long)]
    plot_probability: Option<PathBuf>,
    /// Events outside the top k predictions are counted as anomalous in the summary.
    #[arg(long, default_value_t = 8)]
    top_k: usize,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Prediction file of predictor A.
    a: PathBuf,
    /// Prediction file of predictor B.
    b: PathBuf,
    /// Comparison table (CSV); stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// HDFS log file.
    #[arg(long)]
    log: PathBuf,
    /// HDFS label table.
    #[arg(long)]
    labels: PathBuf,
    /// Where to write the sequence file, catalog and reports.
    #[arg(long, default_value = "bench-hdfs")]
    out_dir: PathBuf,
    #[arg(long, default_value = "2..10", value_parser = parse_range)]
    n: RangeInclusive<usize>,
    #[arg(long, default_value_t = 0.5)]
    split: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    min_len: usize,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    sequences: usize,
    /// Mean sequence length.
    #[arg(long, default_value_t = 10_000)]
    len: usize,
    #[arg(long, default_value_t = 200)]
    vocab: u32,
    /// Hidden states in the generating loop.
    #[arg(long, default_value_t = 400)]
    states: u32,
    /// Probability of following the main loop at each step.
    #[arg(long, default_value_t = 0.9)]
    stickiness: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    let range = match s.split_once("..") {
        Some((a, b)) => parse(a)?..=parse(b.trim_start_matches('='))?,
        None => {
            let n = parse(s)?;
            n..=n
        }
    };
    if range.is_empty() {
        return Err(format!("empty range {s:?}"));
    }
    if *range.start() < 2 {
        return Err("window sizes start at 2".into());
    }
    Ok(range)
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if std::env::args_os().len() <= 1 {
        let _ = Cli::command().print_help();
        return ExitCode::from(1);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Parse(args) => parse(args),
        Command::Train(args) => train(args),
        Command::Eval(args) => evaluate(args),
        Command::Sweep(args) => sweep(args),
        Command::Score(args) => score(args),
        Command::Compare(args) => compare(args),
        Command::BenchHdfs(args) => bench_hdfs(args),
        Command::Synth(args) => synth(args),
    }
}

fn window(n: usize) -> CliResult<WindowSize> {
    Ok(WindowSize::new(n)?)
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

/// Runs `f` on a buffered writer for `path`, or on stdout.
fn with_output(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> CliResult {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_failure(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| io_failure(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(|e| Failure::Data(format!("stdout: {e}")))
        }
    }
}

fn miner_config(args: &ParseArgs) -> MinerConfig {
    let base = if args.no_masks {
        MinerConfig::default()
    } else {
        MinerConfig::hdfs()
    };
    MinerConfig {
        tree_depth: args.tree_depth,
        similarity_threshold: args.similarity,
        max_children: args.max_children,
        ..base
    }
}

fn parse(args: ParseArgs) -> CliResult {
    let config = miner_config(&args);
    let (sequences, miner) = match (&args.hdfs_log, &args.hdfs_labels, &args.dir) {
        (Some(log), Some(labels), None) => {
            let parsed = pipeline::parse_hdfs(log, labels, config)?;
            eprintln!(
                "read {} lines, {} without a block id, {} unlabeled blocks",
                parsed.lines_read, parsed.lines_without_session, parsed.unlabeled_sessions
            );
            (parsed.sequences, parsed.miner)
        }
        (None, None, Some(dir)) => {
            let pattern = args.anomaly_pattern.clone();
            let corpus = ingest::load_per_file(dir, move |name| {
                if name.contains(pattern.as_str()) {
                    Label::Anomaly
                } else {
                    Label::Normal
                }
            })?;
            for (path, msg) in &corpus.stats().file_errors {
                eprintln!("skipped {}: {msg}", path.display());
            }
            let (parsed, miner) = parse_corpus(&corpus, config)?;
            (parsed.sequences, miner)
        }
        _ => {
            return Err(Failure::Usage(
                "give either --hdfs-log with --hdfs-labels, or --dir".into(),
            ))
        }
    };
    let before = sequences.len();
    let sequences: Vec<EventSequence> = sequences
        .into_iter()
        .filter(|s| s.len() >= args.min_len)
        .collect();
    let file = SequenceFile {
        vocab: miner.len() as u32,
        sequences,
    };
    file.save(&args.out)?;
    miner.save_catalog(&args.catalog)?;
    let normal: Vec<&EventSequence> = file
        .sequences
        .iter()
        .filter(|s| s.label == Label::Normal)
        .collect();
    let stats = CorpusStats::of(normal.iter().copied());
    println!(
        "sequences={} dropped_short={} normal_sequences={} normal_events={} normal_unique_events={} templates={}",
        file.sequences.len(),
        before - file.sequences.len(),
        stats.sequences,
        stats.total_events,
        stats.unique_events,
        miner.len()
    );
    Ok(())
}

/// Normal sequences of the file, filtered, split into (train, test).
fn load_split(data: &DataArgs) -> CliResult<(Vec<EventSequence>, Vec<EventSequence>)> {
    let file = SequenceFile::load(&data.seqs)?;
    let normal: Vec<EventSequence> = file
        .sequences
        .into_iter()
        .filter(|s| s.label == Label::Normal && s.len() >= data.min_len)
        .collect();
    if data.no_split {
        return Ok((normal.clone(), normal));
    }
    let spec = SplitSpec::new(data.split, data.seed)?;
    Ok(spec.partition(normal)?)
}

fn train(args: TrainArgs) -> CliResult {
    let n = window(args.n)?;
    let (train, _) = load_split(&args.data)?;
    let timed = eval::time_it(Phase::Train, || NGramModel::train_parallel(&train, n));
    timed.value.save(&args.out)?;
    println!(
        "trained n={n} on {} sequences: {} positions, {} contexts, {} unique n-grams in {:.3}s",
        train.len(),
        timed.value.trained_events(),
        timed.value.context_count(),
        timed.value.unique_ngrams(),
        timed.seconds
    );
    Ok(())
}

fn evaluate(args: EvalArgs) -> CliResult {
    let model = NGramModel::load(&args.model)?;
    let (_, test) = load_split(&args.data)?;
    let mut ngram = eval::accuracy(&model, &test, &args.dataset)?;
    ngram.report.unique_ngrams = model.unique_ngrams() as u64;
    let dummy = eval::accuracy(&DummyPredictor::from_model(&model)?, &test, &args.dataset)?;
    if let Some(path) = &args.predictions {
        formats::save_predictions(&eval::predictions(&model, &test)?, path)?;
    }
    with_output(args.out.as_deref(), |w| {
        eval::write_report_csv(&[ngram.report, dummy.report], w)
    })
}

fn sweep(args: SweepArgs) -> CliResult {
    let (train, test) = load_split(&args.data)?;
    let mut result = eval::sweep(&train, &test, args.n.clone(), &args.dataset)?;
    let dummy = eval::dummy_accuracy(&train, &test, &args.dataset)?;
    let table = eval::render_sweep_table(&result);
    let mut reports = std::mem::take(&mut result.reports);
    with_output(args.out.as_deref(), |w| {
        reports.push(dummy.report.clone());
        eval::write_report_csv(&reports, w)
    })?;
    if let Some(path) = &args.table {
        std::fs::write(path, &table).map_err(|e| io_failure(path, e))?;
    }
    eprint!("{table}");
    eprintln!("dummy accuracy {:.3}", dummy.report.accuracy);
    Ok(())
}

fn score(args: ScoreArgs) -> CliResult {
    let model = NGramModel::load(&args.model)?;
    let file = SequenceFile::load(&args.seqs)?;
    let seq = match &args.session {
        Some(id) => file
            .sequences
            .iter()
            .find(|s| &s.session_id == id)
            .ok_or_else(|| {
                Failure::Data(format!("no session {id:?} in {}", args.seqs.display()))
            })?,
        None => file
            .sequences
            .iter()
            .find(|s| s.label == Label::Anomaly)
            .or_else(|| file.sequences.first())
            .ok_or_else(|| Failure::Data("sequence file is empty".into()))?,
    };
    if args.top_k == 0 {
        return Err(Failure::Usage("--top-k must be at least 1".into()));
    }
    let scored = model.score_sequence(&seq.events)?;
    let outside_top_k = scored
        .iter()
        .filter(|s| {
            !s.prediction.is_fallback
                && s.prediction.rank_of(s.event).is_none_or(|r| r > args.top_k)
        })
        .count()
        + scored.iter().filter(|s| s.prediction.is_fallback).count();
    let records = report::score_records(&scored);
    report::emit_scores(&records, &args.out)?;
    for (metric, path) in [
        (PlotMetric::OccurrenceLog, &args.plot_occurrence),
        (PlotMetric::Probability, &args.plot_probability),
    ] {
        if let Some(output) = path {
            report::emit_plot(
                &records,
                &PlotSpec {
                    metric,
                    overlays: Overlays::default(),
                    output: output.clone(),
                },
            )?;
        }
    }
    println!(
        "scored {} ({}): {} positions, {} outside top-{}",
        seq.session_id,
        seq.label,
        records.len(),
        outside_top_k,
        args.top_k
    );
    Ok(())
}

fn compare(args: CompareArgs) -> CliResult {
    let a = formats::load_predictions(&args.a)?;
    let b = formats::load_predictions(&args.b)?;
    formats::check_same_targets(&a, &b).map_err(|e| Failure::Data(e.to_string()))?;
    let report = eval::compare(
        &eval::accuracies_from_predictions(&a),
        &eval::accuracies_from_predictions(&b),
    )?;
    with_output(args.out.as_deref(), |w| report.write_csv(w))?;
    eprintln!(
        "wins_a={} wins_b={} ties={}",
        report.wins_a, report.wins_b, report.ties
    );
    Ok(())
}

fn bench_hdfs(args: BenchArgs) -> CliResult {
    std::fs::create_dir_all(&args.out_dir).map_err(|e| io_failure(&args.out_dir, e))?;
    let parsed = eval::time_it(Phase::Train, || {
        pipeline::parse_hdfs(&args.log, &args.labels, MinerConfig::hdfs())
    });
    let ingest_seconds = parsed.seconds;
    let parsed = parsed.value?;
    let normal: Vec<EventSequence> = pipeline::with_label(&parsed.sequences, Label::Normal)
        .into_iter()
        .filter(|s| s.len() >= args.min_len)
        .collect();
    let stats = CorpusStats::of(&normal);
    let summary = format!(
        "lines_read={}\nlines_without_block_id={}\nsessions={}\nunlabeled_sessions={}\nnormal_sequences={}\nnormal_events={}\nnormal_unique_events={}\ntemplates={}\nmean_normal_length={:.2}\ningest_parse_seconds={:.1}\n",
        parsed.lines_read,
        parsed.lines_without_session,
        parsed.sequences.len(),
        parsed.unlabeled_sessions,
        stats.sequences,
        stats.total_events,
        stats.unique_events,
        parsed.miner.len(),
        stats.mean_length(),
        ingest_seconds
    );
    print!("{summary}");
    let out = |name: &str| args.out_dir.join(name);
    std::fs::write(out("stats.txt"), &summary).map_err(|e| io_failure(&out("stats.txt"), e))?;
    parsed.miner.save_catalog(&out("catalog.txt"))?;
    SequenceFile {
        vocab: parsed.miner.len() as u32,
        sequences: parsed.sequences,
    }
    .save(&out("sequences.tsv"))?;

    let (train, test) = SplitSpec::new(args.split, args.seed)?.partition(normal)?;
    let result = eval::sweep(&train, &test, args.n.clone(), "HDFS")?;
    let dummy = eval::dummy_accuracy(&train, &test, "HDFS")?;
    let mut reports = result.reports.clone();
    reports.push(dummy.report.clone());
    with_output(Some(&out("sweep.csv")), |w| {
        eval::write_report_csv(&reports, w)
    })?;
    let table = eval::render_sweep_table(&result);
    std::fs::write(out("sweep_table.txt"), &table)
        .map_err(|e| io_failure(&out("sweep_table.txt"), e))?;
    print!("{table}");
    println!("dummy accuracy {:.3}", dummy.report.accuracy);
    Ok(())
}

fn synth(args: SynthArgs) -> CliResult {
    if args.vocab == 0 || args.states == 0 {
        return Err(Failure::Usage(
            "--vocab and --states must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&args.stickiness) {
        return Err(Failure::Usage("--stickiness must lie in [0, 1]".into()));
    }
    let corpus = SyntheticCorpus {
        source: MarkovSource::new(args.vocab, args.states, 3, args.stickiness, args.seed),
        sequences: args.sequences,
        mean_len: args.len,
        jitter: args.len / 10,
        seed: args.seed,
    };
    let file = SequenceFile {
        vocab: args.vocab,
        sequences: corpus.generate(),
    };
    file.save(&args.out)?;
    println!(
        "wrote {} sequences to {}",
        file.sequences.len(),
        args.out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..10").unwrap(), 2..=10);
        assert_eq!(parse_range("2..=4").unwrap(), 2..=4);
        assert_eq!(parse_range("5").unwrap(), 5..=5);
        assert!(parse_range("5..2").is_err());
        assert!(parse_range("1..3").is_err());
        assert!(parse_range("a..3").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
