//! Class-based TF-IDF: clusters of embedded posts become topics described
//! by the terms that are frequent in the cluster but rare elsewhere.

use topicflow::cluster::{fit_pipeline, ClusterConfig, Labels};
use topicflow::corpus::{ingest_jsonl, Corpus, DateWindow};
use topicflow::embedstore::write_embeddings;
use topicflow::lda::BowSource;
use topicflow::pipeline::{build_vocabulary, CorpusBow};
use topicflow::synthetic::{synthetic_tweets, theme_embeddings};
use topicflow::textprep::{StopwordList, VocabParams};
use topicflow::topicrep::{class_term_counts, ctfidf, represent, top_terms, ClassTermMatrix};

fn main() -> topicflow::Result<()> {
    // The two-class case by hand: a term seen only in class 0.
    let toy = ClassTermMatrix::from_rows(&[vec![2, 1], vec![0, 1]], vec![1, 1])?;
    println!("toy weights: {:.4?}", ctfidf(&toy)?);

    let dir = tempfile::tempdir().expect("temp dir");
    let (jsonl, themes) = synthetic_tweets(5000, 11);
    ingest_jsonl(jsonl.as_bytes(), DateWindow::parse("2021-01-01", "2021-12-31")?, dir.path())?;
    let corpus = Corpus::open(dir.path())?;
    let stopwords = StopwordList::bundled();
    let vocab = build_vocabulary(&corpus, stopwords, VocabParams::default())?;

    let ids: Vec<(u64, usize)> = corpus.ids()?.into_iter().zip(themes).collect();
    let emb = dir.path().join("emb.fsem");
    write_embeddings(&theme_embeddings(&ids, 24, 11), 24, &emb)?;
    let labels_path = dir.path().join("labels.bin");
    let (_, summary) = fit_pipeline(&emb, &ClusterConfig::new(5), &labels_path)?;
    let labels = Labels::load(&labels_path)?;

    let source = CorpusBow {
        corpus: &corpus,
        stopwords,
        vocab: &vocab,
    };
    let matrix = class_term_counts(source.docs()?, &labels, summary.k, vocab.len())?;
    for rep in represent(&matrix)? {
        let words: Vec<String> = top_terms(&rep, 6)
            .iter()
            .map(|&(t, w)| format!("{}:{w:.3}", vocab.term(t)))
            .collect();
        println!("topic {} ({} docs): {}", rep.topic_id, rep.size, words.join(" "));
    }
    Ok(())
}
