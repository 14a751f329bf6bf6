//! Subcommand front end.
//!
//! Every tunable value resolves as flag, then `--config` JSON key, then
//! built-in default. The resolved values of each run are written to
//! `<workdir>/<command>.resolved.json`; passing that file back through
//! `--config` reproduces the run. Relative paths resolve against
//! `--workdir`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::cluster::{fit_pipeline, read_labels, write_labels, ClusterConfig, Labels, LabelSummary};
use crate::coherence::{cv_model, parse_k_grid, sweep, CoherenceConfig, CoherenceReport};
use crate::corpus::{ingest_file, Corpus, DateWindow, Granularity};
use crate::dynamics::TopicTimeAccumulator;
use crate::embedstore::validate_alignment;
use crate::error::{Error, IoContext};
use crate::hierarchy::{build_dendrogram, intertopic_map, reduce_topics, similarity_matrix, Dendrogram};
use crate::lda::{fit_stream, BowSource, LdaConfig, LdaModel};
use crate::pipeline::{build_vocabulary, check_stopwords, load_stopwords, token_id_docs, topic_word_ids, CorpusBow};
use crate::report::{config_hash, emit_html, emit_json, RunArtifacts};
use crate::textprep::{BowDoc, StopwordList, VocabParams, Vocabulary, BUNDLED_STOPWORDS_ID};
use crate::topicrep::{class_term_counts, read_topics, represent, topics_json, write_topics, ClassTermMatrix, TopicJson};

#[derive(Parser, Debug)]
#[command(name = "topicflow", version, about = "Streaming topic modelling for short-text corpora")]
pub struct Cli {
    /// Flat JSON file of settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Base directory for every relative path.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest archived JSONL into a deduplicated corpus store.
    Ingest(IngestArgs),
    /// Build the vocabulary from a corpus.
    Vocab(VocabArgs),
    /// Check that an embedding file covers exactly the corpus ids.
    EmbedValidate(EmbedValidateArgs),
    /// Online LDA.
    Lda {
        #[command(subcommand)]
        command: LdaCommand,
    },
    /// Embedding-cluster track.
    Bertopic {
        #[command(subcommand)]
        command: BertopicCommand,
    },
    /// c-TF-IDF representations and hierarchical reduction.
    Topics {
        #[command(subcommand)]
        command: TopicsCommand,
    },
    /// Score topics with C_V coherence.
    Coherence(CoherenceArgs),
    /// Per-period topic shares.
    Dynamics(DynamicsArgs),
    /// Write JSON results, manifest and HTML figures.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum LdaCommand {
    Train(LdaTrainArgs),
    Sweep(LdaSweepArgs),
}

#[derive(Subcommand, Debug)]
enum BertopicCommand {
    Train(BertopicTrainArgs),
}

#[derive(Subcommand, Debug)]
enum TopicsCommand {
    Represent(RepresentArgs),
    Reduce(ReduceArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// First day kept, YYYY-MM-DD (UTC).
    #[arg(long)]
    since: Option<String>,
    /// Last day kept, YYYY-MM-DD (UTC).
    #[arg(long)]
    until: Option<String>,
    /// Also write the kept records as JSONL for the embedding exporter.
    #[arg(long)]
    export_jsonl: Option<String>,
}

#[derive(Args, Debug)]
struct VocabArgs {
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    min_df: Option<u64>,
    #[arg(long)]
    max_df: Option<f64>,
    /// `en-v1` (bundled), `none`, or a word-per-line file.
    #[arg(long)]
    stopwords: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct EmbedValidateArgs {
    #[arg(long)]
    embeddings: Option<String>,
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct LdaParams {
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    passes: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct CorpusInputs {
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    vocab: Option<String>,
}

#[derive(Args, Debug)]
struct LdaTrainArgs {
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    params: LdaParams,
    #[command(flatten)]
    inputs: CorpusInputs,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    summary: Option<String>,
    #[arg(long)]
    topics_out: Option<String>,
    #[arg(long)]
    top_n: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct CoherenceParams {
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args, Debug)]
struct LdaSweepArgs {
    /// `start:end:step` or a comma list.
    #[arg(long)]
    k_grid: Option<String>,
    #[arg(long)]
    metric: Option<String>,
    #[command(flatten)]
    params: LdaParams,
    #[command(flatten)]
    coherence: CoherenceParams,
    #[command(flatten)]
    inputs: CorpusInputs,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct BertopicTrainArgs {
    #[arg(long)]
    embeddings: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    pca_dims: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    /// L2-normalize vectors before reduction.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    normalize: Option<bool>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Corpus checked for id alignment before training.
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    cluster_model: Option<String>,
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    labels_summary: Option<String>,
}

#[derive(Args, Debug)]
struct RepresentArgs {
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    top_n: Option<usize>,
    #[command(flatten)]
    inputs: CorpusInputs,
    #[arg(long)]
    labels_summary: Option<String>,
    #[arg(long)]
    topics_out: Option<String>,
    #[arg(long)]
    class_terms: Option<String>,
    #[arg(long)]
    dendrogram: Option<String>,
    #[arg(long)]
    map: Option<String>,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long)]
    target: Option<usize>,
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    class_terms: Option<String>,
    #[arg(long)]
    dendrogram: Option<String>,
    #[command(flatten)]
    inputs: CorpusInputs,
    #[command(flatten)]
    coherence: CoherenceParams,
    #[arg(long)]
    labels_out: Option<String>,
    #[arg(long)]
    topics_out: Option<String>,
    #[arg(long)]
    class_terms_out: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct CoherenceArgs {
    #[arg(long)]
    topics: Option<String>,
    #[command(flatten)]
    inputs: CorpusInputs,
    #[command(flatten)]
    coherence: CoherenceParams,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct DynamicsArgs {
    /// `labels` (hard cluster labels) or `lda` (soft topic proportions).
    #[arg(long)]
    source: Option<String>,
    /// day, week or month.
    #[arg(long)]
    granularity: Option<String>,
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    labels_summary: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[command(flatten)]
    inputs: CorpusInputs,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    topics: Option<String>,
    #[arg(long)]
    coherence: Option<String>,
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    dynamics: Option<String>,
    #[arg(long)]
    dendrogram: Option<String>,
    #[arg(long)]
    map: Option<String>,
}

/// Failure classes mapped to exit codes 2 and 1.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nRun with --help for usage.");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct Settings {
    workdir: PathBuf,
    config: Map<String, Value>,
    resolved: BTreeMap<String, Value>,
}

impl Settings {
    fn new(workdir: PathBuf, config: Option<&Path>) -> CliResult<Self> {
        let config = match config {
            None => Map::new(),
            Some(p) => {
                let path = workdir.join(p);
                let raw = std::fs::read(&path).at(&path)?;
                match serde_json::from_slice::<Value>(&raw).map_err(|e| Error::json(&path, e))? {
                    Value::Object(m) => m,
                    _ => return Err(Failure::Run(Error::corrupt(&path, "config must be a flat JSON object"))),
                }
            }
        };
        Ok(Self {
            workdir,
            config,
            resolved: BTreeMap::new(),
        })
    }

    fn config_value<T: DeserializeOwned>(&self, key: &str) -> CliResult<Option<T>> {
        match self.config.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| Failure::Usage(format!("config key {key:?}: {e}"))),
        }
    }

    fn record<T: Serialize>(&mut self, key: &str, value: &T) {
        self.resolved
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    fn get<T: Serialize + DeserializeOwned>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        let v = match flag {
            Some(v) => v,
            None => self.config_value(key)?.unwrap_or(default),
        };
        self.record(key, &v);
        Ok(v)
    }

    fn optional<T: Serialize + DeserializeOwned>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        let v = match flag {
            Some(v) => Some(v),
            None => self.config_value(key)?,
        };
        self.record(key, &v);
        Ok(v)
    }

    fn required<T: Serialize + DeserializeOwned>(&mut self, key: &str, flag: Option<T>) -> CliResult<T> {
        self.optional(key, flag)?.ok_or_else(|| {
            Failure::Usage(format!("missing --{} (flag or config key {key:?})", key.replace('_', "-")))
        })
    }

    fn path(&self, p: &str) -> PathBuf {
        self.workdir.join(p)
    }

    fn write_resolved(&self, command: &str) -> CliResult<()> {
        let mut out = Map::new();
        out.insert("command".into(), Value::String(command.to_string()));
        for (k, v) in &self.resolved {
            out.insert(k.clone(), v.clone());
        }
        let path = self.path(&format!("{}.resolved.json", command.replace(' ', "-")));
        write_json(&path, &Value::Object(out))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).at(parent)?;
        }
    }
    let mut raw = serde_json::to_vec_pretty(value).map_err(|e| Error::json(path, e))?;
    raw.push(b'\n');
    std::fs::write(path, raw).at(path)?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let raw = std::fs::read(path).at(path)?;
    Ok(serde_json::from_slice(&raw).map_err(|e| Error::json(path, e))?)
}

fn execute(cli: Cli) -> CliResult<()> {
    let mut s = Settings::new(cli.workdir.clone(), cli.config.as_deref())?;
    let seed = s.get("seed", cli.seed, 42u64)?;
    let threads = s.get("threads", cli.threads, 0usize)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Run(Error::invalid(format!("thread pool: {e}"))))?;
    pool.install(|| {
        let name = match cli.command {
            Command::Ingest(a) => ingest(&mut s, a).map(|_| "ingest"),
            Command::Vocab(a) => vocab(&mut s, a).map(|_| "vocab"),
            Command::EmbedValidate(a) => embed_validate(&mut s, a).map(|_| "embed-validate"),
            Command::Lda { command: LdaCommand::Train(a) } => lda_train(&mut s, a, seed).map(|_| "lda train"),
            Command::Lda { command: LdaCommand::Sweep(a) } => lda_sweep(&mut s, a, seed).map(|_| "lda sweep"),
            Command::Bertopic { command: BertopicCommand::Train(a) } => {
                bertopic_train(&mut s, a, seed).map(|_| "bertopic train")
            }
            Command::Topics { command: TopicsCommand::Represent(a) } => represent_cmd(&mut s, a).map(|_| "topics represent"),
            Command::Topics { command: TopicsCommand::Reduce(a) } => reduce_cmd(&mut s, a).map(|_| "topics reduce"),
            Command::Coherence(a) => coherence_cmd(&mut s, a).map(|_| "coherence"),
            Command::Dynamics(a) => dynamics_cmd(&mut s, a).map(|_| "dynamics"),
            Command::Report(a) => report_cmd(&mut s, a, seed).map(|_| "report"),
        }?;
        s.write_resolved(name)
    })
}

// ---------------------------------------------------------------------------
// Shared loaders

struct Loaded {
    corpus: Corpus,
    vocab: Vocabulary,
    stopwords: StopwordList,
}

fn load_inputs(s: &mut Settings, inputs: CorpusInputs) -> CliResult<Loaded> {
    let corpus_dir = s.get("corpus", inputs.corpus, "corpus".to_string())?;
    let vocab_path = s.get("vocab", inputs.vocab, "vocab.json".to_string())?;
    let corpus = Corpus::open(s.path(&corpus_dir))?;
    let vocab = Vocabulary::load(&s.path(&vocab_path))?;
    let stopwords = load_stopwords(&vocab.params().stopword_list_id, &s.workdir)?;
    check_stopwords(&vocab, &stopwords)?;
    Ok(Loaded {
        corpus,
        vocab,
        stopwords,
    })
}

fn lda_config(s: &mut Settings, k: usize, p: LdaParams, seed: u64) -> CliResult<LdaConfig> {
    let d = LdaConfig::new(k);
    Ok(LdaConfig {
        k,
        alpha: s.optional("alpha", p.alpha)?,
        eta: s.optional("eta", p.eta)?,
        tau0: s.get("tau0", p.tau0, d.tau0)?,
        kappa: s.get("kappa", p.kappa, d.kappa)?,
        batch_size: s.get("batch", p.batch, d.batch_size)?,
        passes: s.get("passes", p.passes, d.passes)?,
        seed,
        e_step_tol: d.e_step_tol,
        e_step_max_iter: d.e_step_max_iter,
    })
}

fn coherence_config(s: &mut Settings, p: CoherenceParams) -> CliResult<CoherenceConfig> {
    let d = CoherenceConfig::default();
    let c = CoherenceConfig {
        window_size: s.get("window", p.window, d.window_size)?,
        top_n: s.get("top_n", p.top_n, d.top_n)?,
        epsilon: s.get("epsilon", p.epsilon, d.epsilon)?,
        gamma: s.get("gamma", p.gamma, d.gamma)?,
    };
    c.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(c)
}

/// Top-word lists as vocabulary ids.
fn topic_lists(topics: &[TopicJson], vocab: &Vocabulary) -> Vec<(u32, Vec<u32>)> {
    topics
        .iter()
        .map(|t| {
            let words: Vec<String> = t.terms.iter().map(|x| x.0.clone()).collect();
            (t.topic_id, topic_word_ids(vocab, &words))
        })
        .collect()
}

fn score_topics(l: &Loaded, topics: &[(u32, Vec<u32>)], config: &CoherenceConfig) -> crate::Result<CoherenceReport> {
    cv_model(token_id_docs(&l.corpus, &l.stopwords, &l.vocab)?, topics, config)
}

fn lda_topics(model: &LdaModel, top_n: usize) -> crate::Result<Vec<(u32, Vec<u32>)>> {
    (0..model.num_topics())
        .map(|t| Ok((t as u32, model.topic_top_terms(t, top_n)?.into_iter().map(|x| x.0).collect())))
        .collect()
}

/// θ for each document of a stream, computed batch by batch.
fn for_each_theta<S: BowSource + ?Sized>(
    model: &LdaModel,
    source: &S,
    batch_size: usize,
    mut f: impl FnMut(&BowDoc, Vec<f64>) -> crate::Result<()>,
) -> crate::Result<()> {
    let mut batch = Vec::with_capacity(batch_size);
    let mut flush = |batch: &mut Vec<BowDoc>| -> crate::Result<()> {
        let e = model.e_step_batch(batch)?;
        for (doc, gamma) in batch.iter().zip(e.gamma) {
            let total: f64 = gamma.iter().sum();
            f(doc, gamma.iter().map(|g| g / total).collect())?;
        }
        batch.clear();
        Ok(())
    };
    for doc in source.docs()? {
        batch.push(doc?);
        if batch.len() == batch_size {
            flush(&mut batch)?;
        }
    }
    if !batch.is_empty() {
        flush(&mut batch)?;
    }
    Ok(())
}

fn read_k(s: &Settings, summary: &str, labels: &Labels) -> usize {
    read_json::<LabelSummary>(&s.path(summary))
        .map(|sum| sum.k)
        .unwrap_or_else(|_| labels.num_labels())
        .max(labels.num_labels())
}

// ---------------------------------------------------------------------------
// Commands

fn ingest(s: &mut Settings, a: IngestArgs) -> CliResult<()> {
    let input = s.required::<String>("input", a.input)?;
    let out = s.get("out", a.out, "corpus".to_string())?;
    let since = s.required::<String>("since", a.since)?;
    let until = s.required::<String>("until", a.until)?;
    let export = s.optional::<String>("export_jsonl", a.export_jsonl)?;
    let window = DateWindow::parse(&since, &until).map_err(|e| Failure::Usage(e.to_string()))?;
    let stats = ingest_file(&s.path(&input), window, &s.path(&out))?;
    if let Some(export) = export {
        let n = Corpus::open(s.path(&out))?.export_jsonl(&s.path(&export))?;
        log::info!("exported {n} records to {export}");
    }
    println!(
        "kept {} of {} lines ({} duplicates, {} malformed, {} out of range)",
        stats.records_kept, stats.lines_read, stats.duplicates_dropped, stats.malformed_dropped, stats.out_of_range_dropped
    );
    Ok(())
}

fn vocab(s: &mut Settings, a: VocabArgs) -> CliResult<()> {
    let corpus_dir = s.get("corpus", a.corpus, "corpus".to_string())?;
    let d = VocabParams::default();
    let min_df = s.get("min_df", a.min_df, d.min_df)?;
    let max_df = s.get("max_df", a.max_df, d.max_df_ratio)?;
    let stop_id = s.get("stopwords", a.stopwords, BUNDLED_STOPWORDS_ID.to_string())?;
    let out = s.get("out", a.out, "vocab.json".to_string())?;
    let corpus = Corpus::open(s.path(&corpus_dir))?;
    let stopwords = load_stopwords(&stop_id, &s.workdir)?;
    let params = VocabParams {
        min_df,
        max_df_ratio: max_df,
        stopword_list_id: stop_id,
    };
    let vocab = build_vocabulary(&corpus, &stopwords, params)?;
    vocab.save(&s.path(&out))?;
    println!("vocabulary: {} terms over {} documents", vocab.len(), vocab.total_docs());
    Ok(())
}

fn embed_validate(s: &mut Settings, a: EmbedValidateArgs) -> CliResult<()> {
    let emb = s.get("embeddings", a.embeddings, "embeddings.fsem".to_string())?;
    let corpus_dir = s.get("corpus", a.corpus, "corpus".to_string())?;
    let out = s.get("out", a.out, "alignment.json".to_string())?;
    let ids = Corpus::open(s.path(&corpus_dir))?.ids()?;
    let report = validate_alignment(&ids, s.path(&emb))?;
    write_json(&s.path(&out), &report)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
    report.require_aligned()?;
    Ok(())
}

fn lda_train(s: &mut Settings, a: LdaTrainArgs, seed: u64) -> CliResult<()> {
    let k = s.required::<usize>("k", a.k)?;
    let config = lda_config(s, k, a.params, seed)?;
    let l = load_inputs(s, a.inputs)?;
    let model_path = s.get("model", a.model, "lda.model".to_string())?;
    let summary_path = s.get("summary", a.summary, "lda_summary.json".to_string())?;
    let topics_path = s.get("topics_out", a.topics_out, "topics.json".to_string())?;
    let top_n = s.get("top_n", a.top_n, 10usize)?;

    let source = CorpusBow {
        corpus: &l.corpus,
        stopwords: &l.stopwords,
        vocab: &l.vocab,
    };
    let model = fit_stream(&source, l.vocab.len(), l.corpus.len(), &config)?;
    model.save(&s.path(&model_path))?;
    write_json(&s.path(&summary_path), &model.summary(&l.vocab, top_n))?;

    // topic size = documents whose dominant topic it is
    let mut sizes = vec![0u64; k];
    for_each_theta(&model, &source, config.batch_size, |_, theta| {
        let best = theta
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b });
        sizes[best.0] += 1;
        Ok(())
    })?;
    let topics: Vec<TopicJson> = (0..k)
        .map(|t| {
            Ok(TopicJson {
                topic_id: t as u32,
                size: sizes[t],
                terms: model
                    .topic_top_terms(t, top_n)?
                    .into_iter()
                    .map(|(w, p)| (l.vocab.term(w).to_string(), p))
                    .collect(),
            })
        })
        .collect::<crate::Result<_>>()?;
    write_topics(&s.path(&topics_path), &topics)?;
    println!("trained LDA with k = {k} over {} documents ({} updates)", l.corpus.len(), model.updates_seen());
    Ok(())
}

fn lda_sweep(s: &mut Settings, a: LdaSweepArgs, seed: u64) -> CliResult<()> {
    let grid_text = s.get("k_grid", a.k_grid, "5:50:5".to_string())?;
    let grid = parse_k_grid(&grid_text).map_err(|e| Failure::Usage(e.to_string()))?;
    let metric = s.get("metric", a.metric, "c_v".to_string())?;
    if metric != "c_v" {
        return Err(Failure::Usage(format!("unsupported metric {metric:?}; only c_v is available")));
    }
    let base = lda_config(s, grid[0], a.params, seed)?;
    let coh = coherence_config(s, a.coherence)?;
    let l = load_inputs(s, a.inputs)?;
    let out = s.get("out", a.out, "sweep.json".to_string())?;
    let source = CorpusBow {
        corpus: &l.corpus,
        stopwords: &l.stopwords,
        vocab: &l.vocab,
    };
    let result = sweep(&grid, |k| {
        let config = LdaConfig { k, ..base.clone() };
        let model = fit_stream(&source, l.vocab.len(), l.corpus.len(), &config)?;
        Ok(score_topics(&l, &lda_topics(&model, coh.top_n)?, &coh)?.mean)
    })?;
    write_json(&s.path(&out), &result)?;
    match result.argmax {
        Some(k) => println!("best k = {k}"),
        None => return Err(Failure::Run(Error::invalid("every k in the grid failed"))),
    }
    Ok(())
}

fn bertopic_train(s: &mut Settings, a: BertopicTrainArgs, seed: u64) -> CliResult<()> {
    let emb = s.get("embeddings", a.embeddings, "embeddings.fsem".to_string())?;
    let k = s.required::<usize>("k", a.k)?;
    let d = ClusterConfig::new(k);
    let config = ClusterConfig {
        k,
        n_components: s.get("pca_dims", a.pca_dims, d.n_components)?,
        seed,
        batch_size: s.get("batch", a.batch, d.batch_size)?,
        normalize: s.get("normalize", a.normalize, d.normalize)?,
        kmeans_epochs: s.get("epochs", a.epochs, d.kmeans_epochs)?,
    };
    let corpus_dir = s.optional::<String>("corpus", a.corpus.or_else(|| Some("corpus".into())))?;
    let model_path = s.get("cluster_model", a.cluster_model, "cluster_model.json".to_string())?;
    let labels_path = s.get("labels", a.labels, "labels.bin".to_string())?;
    let summary_path = s.get("labels_summary", a.labels_summary, "labels_summary.json".to_string())?;

    if let Some(dir) = corpus_dir.filter(|d| s.path(d).exists()) {
        let ids = Corpus::open(s.path(&dir))?.ids()?;
        let report = validate_alignment(&ids, s.path(&emb))?;
        report.require_aligned()?;
        if !report.ordered {
            log::info!("embedding order differs from the corpus; labels are joined by id");
        }
    } else {
        log::warn!("no corpus to validate embeddings against");
    }
    let (model, summary) = fit_pipeline(&s.path(&emb), &config, &s.path(&labels_path))?;
    model.save(&s.path(&model_path))?;
    write_json(&s.path(&summary_path), &summary)?;
    let used = summary.label_counts.iter().filter(|&&c| c > 0).count();
    println!("clustered {} documents into {used} of {k} clusters", summary.count);
    Ok(())
}

fn represent_cmd(s: &mut Settings, a: RepresentArgs) -> CliResult<()> {
    let labels_path = s.get("labels", a.labels, "labels.bin".to_string())?;
    let top_n = s.get("top_n", a.top_n, 10usize)?;
    let l = load_inputs(s, a.inputs)?;
    let summary_path = s.get("labels_summary", a.labels_summary, "labels_summary.json".to_string())?;
    let topics_path = s.get("topics_out", a.topics_out, "topics.json".to_string())?;
    let ct_path = s.get("class_terms", a.class_terms, "class_terms.json".to_string())?;
    let dendro_path = s.get("dendrogram", a.dendrogram, "dendrogram.json".to_string())?;
    let map_path = s.get("map", a.map, "map2d.json".to_string())?;

    let labels = Labels::load(&s.path(&labels_path))?;
    let k = read_k(s, &summary_path, &labels);
    let source = CorpusBow {
        corpus: &l.corpus,
        stopwords: &l.stopwords,
        vocab: &l.vocab,
    };
    let matrix = class_term_counts(source.docs()?, &labels, k, l.vocab.len())?;
    matrix.save(&s.path(&ct_path))?;
    let reps = represent(&matrix)?;
    write_topics(&s.path(&topics_path), &topics_json(&reps, &l.vocab, top_n))?;
    if k >= 2 {
        let leaves: Vec<u32> = (0..k as u32).collect();
        build_dendrogram(&similarity_matrix(&reps)?, &leaves)?.save(&s.path(&dendro_path))?;
        write_json(&s.path(&map_path), &intertopic_map(&reps, &l.vocab)?)?;
    }
    println!("represented {k} topics");
    Ok(())
}

#[derive(Serialize)]
struct ReduceSummary {
    from: usize,
    target: usize,
    mapping: Vec<u32>,
    coherence_before: f64,
    coherence_after: f64,
}

fn reduce_cmd(s: &mut Settings, a: ReduceArgs) -> CliResult<()> {
    let target = s.required::<usize>("target", a.target)?;
    let labels_path = s.get("labels", a.labels, "labels.bin".to_string())?;
    let ct_path = s.get("class_terms", a.class_terms, "class_terms.json".to_string())?;
    let dendro_path = s.get("dendrogram", a.dendrogram, "dendrogram.json".to_string())?;
    let coh = coherence_config(s, a.coherence)?;
    let l = load_inputs(s, a.inputs)?;
    let labels_out = s.get("labels_out", a.labels_out, "labels.reduced.bin".to_string())?;
    let topics_out = s.get("topics_out", a.topics_out, "topics.reduced.json".to_string())?;
    let ct_out = s.get("class_terms_out", a.class_terms_out, "class_terms.reduced.json".to_string())?;
    let out = s.get("out", a.out, "reduce.json".to_string())?;

    let matrix = ClassTermMatrix::load(&s.path(&ct_path))?;
    let dendrogram = Dendrogram::load(&s.path(&dendro_path))?;
    let labels = read_labels(&s.path(&labels_path))?;
    if target > matrix.num_classes() {
        return Err(Failure::Usage(format!(
            "target {target} exceeds the {} available topics",
            matrix.num_classes()
        )));
    }
    let reduced = reduce_topics(&labels, &matrix, &dendrogram, target)?;
    write_labels(&s.path(&labels_out), &reduced.labels)?;
    reduced.matrix.save(&s.path(&ct_out))?;
    let before = topics_json(&represent(&matrix)?, &l.vocab, coh.top_n);
    let after = topics_json(&reduced.representations, &l.vocab, coh.top_n);
    write_topics(&s.path(&topics_out), &after)?;

    let score = |t: &[TopicJson]| -> crate::Result<f64> { Ok(score_topics(&l, &topic_lists(t, &l.vocab), &coh)?.mean) };
    let summary = ReduceSummary {
        from: matrix.num_classes(),
        target,
        mapping: reduced.mapping.clone(),
        coherence_before: score(&before)?,
        coherence_after: score(&after)?,
    };
    write_json(&s.path(&out), &summary)?;
    println!(
        "reduced {} topics to {target}; mean C_V {:.4} -> {:.4}",
        summary.from, summary.coherence_before, summary.coherence_after
    );
    Ok(())
}

fn coherence_cmd(s: &mut Settings, a: CoherenceArgs) -> CliResult<()> {
    let topics_path = s.get("topics", a.topics, "topics.json".to_string())?;
    let coh = coherence_config(s, a.coherence)?;
    let l = load_inputs(s, a.inputs)?;
    let out = s.get("out", a.out, "coherence.json".to_string())?;
    let topics = read_topics(&s.path(&topics_path))?;
    let report = score_topics(&l, &topic_lists(&topics, &l.vocab), &coh)?;
    write_json(&s.path(&out), &report)?;
    println!("mean C_V over {} topics: {:.4}", report.per_topic.len(), report.mean);
    Ok(())
}

fn dynamics_cmd(s: &mut Settings, a: DynamicsArgs) -> CliResult<()> {
    let source = s.get("source", a.source, "labels".to_string())?;
    let granularity: Granularity = s
        .get("granularity", a.granularity, "month".to_string())?
        .parse()
        .map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let out = s.get("out", a.out, "dynamics.json".to_string())?;
    let matrix = match source.as_str() {
        "labels" => {
            let labels_path = s.get("labels", a.labels, "labels.bin".to_string())?;
            let summary_path = s.get("labels_summary", a.labels_summary, "labels_summary.json".to_string())?;
            let corpus_dir = s.get("corpus", a.inputs.corpus, "corpus".to_string())?;
            let labels = Labels::load(&s.path(&labels_path))?;
            let k = read_k(s, &summary_path, &labels);
            let corpus = Corpus::open(s.path(&corpus_dir))?;
            let mut acc = TopicTimeAccumulator::new(granularity, k);
            let mut row = vec![0.0; k];
            for rec in corpus.records()? {
                let rec = rec?;
                let label = labels
                    .get(rec.id)
                    .ok_or_else(|| Error::invalid(format!("document {} has no label", rec.id)))?;
                row.iter_mut().for_each(|x| *x = 0.0);
                *row.get_mut(label as usize)
                    .ok_or_else(|| Error::invalid(format!("document {} has label {label}, outside 0..{k}", rec.id)))? = 1.0;
                acc.add(rec.created_at, &row)?;
            }
            acc.finish()?
        }
        "lda" => {
            let model_path = s.get("model", a.model, "lda.model".to_string())?;
            let l = load_inputs(s, a.inputs)?;
            let model = LdaModel::load(&s.path(&model_path))?;
            let mut acc = TopicTimeAccumulator::new(granularity, model.num_topics());
            let bow = CorpusBow {
                corpus: &l.corpus,
                stopwords: &l.stopwords,
                vocab: &l.vocab,
            };
            let mut times = l.corpus.records()?.map(|r| r.map(|r| r.created_at));
            for_each_theta(&model, &bow, 4096, |_, theta| {
                let ts = times.next().ok_or_else(|| Error::invalid("corpus ended early"))??;
                acc.add(ts, &theta)
            })?;
            acc.finish()?
        }
        other => return Err(Failure::Usage(format!("unknown source {other:?}; expected labels or lda"))),
    };
    write_json(&s.path(&out), &matrix)?;
    println!("{} buckets x {} topics", matrix.buckets.len(), matrix.topics.len());
    Ok(())
}

fn load_optional<T: DeserializeOwned>(s: &Settings, file: &str) -> CliResult<Option<T>> {
    let path = s.path(file);
    if path.exists() {
        read_json(&path).map(Some)
    } else {
        Ok(None)
    }
}

/// Merged resolved configs of the other commands run in this workdir,
/// without thread counts.
fn run_config(workdir: &Path) -> CliResult<Value> {
    let mut merged = Map::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(workdir)
        .at(workdir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(".resolved.json") && n != "report.resolved.json")
        })
        .collect();
    entries.sort();
    for path in entries {
        let mut v: Value = read_json(&path)?;
        if let Value::Object(m) = &mut v {
            m.remove("threads");
        }
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().trim_end_matches(".resolved.json").to_string();
        merged.insert(name, v);
    }
    Ok(Value::Object(merged))
}

fn report_cmd(s: &mut Settings, a: ReportArgs, seed: u64) -> CliResult<()> {
    let out = s.get("out", a.out, "report".to_string())?;
    let files = [
        s.get("topics", a.topics, "topics.json".to_string())?,
        s.get("coherence", a.coherence, "coherence.json".to_string())?,
        s.get("sweep", a.sweep, "sweep.json".to_string())?,
        s.get("dynamics", a.dynamics, "dynamics.json".to_string())?,
        s.get("dendrogram", a.dendrogram, "dendrogram.json".to_string())?,
        s.get("map", a.map, "map2d.json".to_string())?,
    ];
    let artifacts = RunArtifacts {
        topics: load_optional(s, &files[0])?,
        coherence: load_optional(s, &files[1])?,
        sweep: load_optional(s, &files[2])?,
        dynamics: load_optional(s, &files[3])?,
        dendrogram: load_optional(s, &files[4])?,
        map2d: load_optional(s, &files[5])?,
    };
    let config = run_config(&s.workdir)?;
    let out_dir = s.path(&out);
    let manifest = emit_json(&artifacts, &config, Some(seed), &out_dir)?;
    let pages = emit_html(&out_dir)?;
    println!(
        "report: {} data files, {} pages, config {}",
        manifest.files.len(),
        pages.len(),
        &config_hash(&config)[..12]
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["topicflow", "lda", "train", "--bogus"]), 2);
        assert_eq!(run(["topicflow", "frobnicate"]), 2);
        assert_eq!(run(["topicflow", "--help"]), 0);
    }

    #[test]
    fn missing_required_value_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let wd = dir.path().to_str().unwrap();
        assert_eq!(run(["topicflow", "--workdir", wd, "lda", "train"]), 2);
    }

    #[test]
    fn operational_failure_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let wd = dir.path().to_str().unwrap();
        assert_eq!(run(["topicflow", "--workdir", wd, "lda", "train", "--k", "3"]), 1);
    }
}
