//! Runs both tracks on a synthetic archive and writes the JSON results,
//! the manifest and the static HTML pages.
//!
//!     cargo run --release --example html_report -- report
//!
//! then open report/index.html.

use std::path::PathBuf;

use serde_json::json;
use topicflow::cluster::{fit_pipeline, ClusterConfig, Labels};
use topicflow::coherence::{cv_model, sweep, CoherenceConfig};
use topicflow::corpus::{ingest_jsonl, Corpus, DateWindow, Granularity};
use topicflow::dynamics::{HardLabels, topic_time_matrix};
use topicflow::embedstore::write_embeddings;
use topicflow::hierarchy::{build_dendrogram, intertopic_map, similarity_matrix};
use topicflow::lda::{fit_stream, BowSource, LdaConfig};
use topicflow::pipeline::{build_vocabulary, token_id_docs, CorpusBow};
use topicflow::report::{emit_html, emit_json, RunArtifacts};
use topicflow::synthetic::{synthetic_tweets, theme_embeddings};
use topicflow::textprep::{StopwordList, VocabParams};
use topicflow::topicrep::{class_term_counts, represent, topics_json};

fn main() -> topicflow::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "report".into()));
    let seed = 42;
    let work = tempfile::tempdir().expect("temp dir");
    let (jsonl, themes) = synthetic_tweets(8000, seed);
    ingest_jsonl(jsonl.as_bytes(), DateWindow::parse("2021-01-01", "2021-12-31")?, work.path())?;
    let corpus = Corpus::open(work.path())?;
    let stopwords = StopwordList::bundled();
    let vocab = build_vocabulary(&corpus, stopwords, VocabParams::default())?;
    let source = CorpusBow {
        corpus: &corpus,
        stopwords,
        vocab: &vocab,
    };
    let coherence = CoherenceConfig::default();

    // LDA track: choose k by coherence.
    let lda = |k| LdaConfig {
        batch_size: 256,
        passes: 3,
        seed,
        ..LdaConfig::new(k)
    };
    let sweep_result = sweep(&[3, 4, 5, 6, 7], |k| {
        let model = fit_stream(&source, vocab.len(), corpus.len(), &lda(k))?;
        let topics = (0..k)
            .map(|t| Ok((t as u32, model.topic_top_terms(t, 10)?.into_iter().map(|x| x.0).collect())))
            .collect::<topicflow::Result<Vec<_>>>()?;
        Ok(cv_model(token_id_docs(&corpus, stopwords, &vocab)?, &topics, &coherence)?.mean)
    })?;
    println!("LDA sweep picked k = {:?}", sweep_result.argmax);

    // Embedding track.
    let ids: Vec<(u64, usize)> = corpus.ids()?.into_iter().zip(themes).collect();
    let emb = work.path().join("emb.fsem");
    write_embeddings(&theme_embeddings(&ids, 32, seed), 32, &emb)?;
    let labels_path = work.path().join("labels.bin");
    let cluster = ClusterConfig {
        seed,
        ..ClusterConfig::new(5)
    };
    fit_pipeline(&emb, &cluster, &labels_path)?;
    let labels = Labels::load(&labels_path)?;
    let matrix = class_term_counts(source.docs()?, &labels, 5, vocab.len())?;
    let reps = represent(&matrix)?;
    let topics = topics_json(&reps, &vocab, 10);
    let word_ids: Vec<(u32, Vec<u32>)> = reps
        .iter()
        .map(|r| (r.topic_id, r.terms.iter().take(10).map(|x| x.0).collect()))
        .collect();
    let coherence_report = cv_model(token_id_docs(&corpus, stopwords, &vocab)?, &word_ids, &coherence)?;
    let leaves: Vec<u32> = (0..5).collect();
    let buckets = topicflow::corpus::time_buckets(&corpus, Granularity::Month)?;

    let artifacts = RunArtifacts {
        topics: Some(topics),
        coherence: Some(coherence_report),
        sweep: Some(sweep_result),
        dynamics: Some(topic_time_matrix(&buckets, &HardLabels { labels: &labels, k: 5 })?),
        dendrogram: Some(build_dendrogram(&similarity_matrix(&reps)?, &leaves)?),
        map2d: Some(intertopic_map(&reps, &vocab)?),
    };
    let config = json!({"lda": lda(0), "cluster": cluster, "coherence": coherence});
    let manifest = emit_json(&artifacts, &config, Some(seed), &out)?;
    let pages = emit_html(&out)?;
    println!("config hash {}", manifest.config_hash);
    for p in pages {
        println!("wrote {}", p.display());
    }
    Ok(())
}
