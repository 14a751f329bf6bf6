//! Corpus-backed streams: tokenized records, bag-of-words documents and
//! token-id sequences, each produced batch by batch.

use std::path::Path;

use rayon::prelude::*;

use crate::coherence::OOV;
use crate::corpus::Corpus;
use crate::error::{Error, IoContext, Result};
use crate::lda::BowSource;
use crate::textprep::{encode_bow, BowDoc, StopwordList, Tokenizer, VocabParams, Vocabulary, BUNDLED_STOPWORDS_ID};

pub const TOKENIZE_BATCH: usize = 4096;

/// Resolves a stopword list id: the bundled list, `none`, or a file path
/// (relative to `base`).
pub fn load_stopwords(id: &str, base: &Path) -> Result<StopwordList> {
    match id {
        BUNDLED_STOPWORDS_ID => Ok(StopwordList::bundled().clone()),
        "none" => Ok(StopwordList::empty()),
        path => {
            let full = base.join(path);
            let text = std::fs::read_to_string(&full).at(&full)?;
            Ok(StopwordList::parse(path, &text))
        }
    }
}

/// Per-record output of `f`, computed in parallel per batch and yielded in
/// store order together with the record id and timestamp.
pub fn map_records<'a, T, F>(corpus: &'a Corpus, f: F) -> Result<impl Iterator<Item = Result<(u64, i64, T)>> + 'a>
where
    T: Send + 'a,
    F: Fn(&str) -> T + Sync + Send + 'a,
{
    let batches = corpus.stream(TOKENIZE_BATCH)?;
    Ok(batches.flat_map(move |batch| -> Box<dyn Iterator<Item = Result<(u64, i64, T)>>> {
        match batch {
            Ok(records) => {
                let out: Vec<(u64, i64, T)> = records
                    .par_iter()
                    .map(|r| (r.id, r.created_at, f(&r.text)))
                    .collect();
                Box::new(out.into_iter().map(Ok))
            }
            Err(e) => Box::new(std::iter::once(Err(e))),
        }
    }))
}

/// Builds the vocabulary in one pass over the corpus.
pub fn build_vocabulary(corpus: &Corpus, stopwords: &StopwordList, params: VocabParams) -> Result<Vocabulary> {
    let tokenizer = Tokenizer::new(stopwords);
    let mut failure = None;
    let docs = map_records(corpus, |t| tokenizer.tokenize(t))?.map_while(|r| match r {
        Ok((_, _, toks)) => Some(toks),
        Err(e) => {
            failure = Some(e);
            None
        }
    });
    let vocab = Vocabulary::build(docs, params);
    match failure {
        Some(e) => Err(e),
        None => vocab,
    }
}

/// Re-iterable bag-of-words stream over a stored corpus.
pub struct CorpusBow<'a> {
    pub corpus: &'a Corpus,
    pub stopwords: &'a StopwordList,
    pub vocab: &'a Vocabulary,
}

impl CorpusBow<'_> {
    /// Documents paired with their timestamps.
    pub fn docs_with_time(&self) -> Result<impl Iterator<Item = Result<(i64, BowDoc)>> + '_> {
        let tokenizer = Tokenizer::new(self.stopwords);
        let vocab = self.vocab;
        Ok(map_records(self.corpus, move |t| tokenizer.tokenize(t))?
            .map(move |r| r.map(|(id, ts, toks)| (ts, encode_bow(id, &toks, vocab)))))
    }
}

impl BowSource for CorpusBow<'_> {
    fn docs(&self) -> Result<Box<dyn Iterator<Item = Result<BowDoc>> + '_>> {
        Ok(Box::new(self.docs_with_time()?.map(|r| r.map(|(_, d)| d))))
    }
}

/// Token-id sequences for coherence windows; out-of-vocabulary tokens keep
/// their position as `OOV`.
pub fn token_id_docs<'a>(
    corpus: &'a Corpus,
    stopwords: &'a StopwordList,
    vocab: &'a Vocabulary,
) -> Result<impl Iterator<Item = Result<Vec<u32>>> + 'a> {
    let tokenizer = Tokenizer::new(stopwords);
    Ok(map_records(corpus, move |t| {
        tokenizer
            .tokenize(t)
            .iter()
            .map(|tok| vocab.id(tok).unwrap_or(OOV))
            .collect::<Vec<u32>>()
    })?
    .map(|r| r.map(|(_, _, ids)| ids)))
}

/// Looks up topic words in the vocabulary; unknown words become `OOV`.
pub fn topic_word_ids(vocab: &Vocabulary, words: &[String]) -> Vec<u32> {
    words.iter().map(|w| vocab.id(w).unwrap_or(OOV)).collect()
}

/// Fails when the vocabulary was built with a different stopword list.
pub fn check_stopwords(vocab: &Vocabulary, stopwords: &StopwordList) -> Result<()> {
    let expected = &vocab.params().stopword_list_id;
    if expected != stopwords.id() {
        return Err(Error::invalid(format!(
            "vocabulary was built with stopword list {expected:?}, got {:?}",
            stopwords.id()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_jsonl, DateWindow};
    use crate::synthetic::synthetic_tweets;

    fn corpus(n: usize) -> (tempfile::TempDir, Corpus) {
        let dir = tempfile::tempdir().unwrap();
        let (jsonl, _) = synthetic_tweets(n, 5);
        let window = DateWindow::parse("2021-01-01", "2021-12-31").unwrap();
        ingest_jsonl(jsonl.as_bytes(), window, dir.path()).unwrap();
        let c = Corpus::open(dir.path()).unwrap();
        (dir, c)
    }

    #[test]
    fn bow_stream_matches_direct_encoding() {
        let (_dir, c) = corpus(5000);
        let stop = StopwordList::bundled();
        let vocab = build_vocabulary(&c, stop, VocabParams::default()).unwrap();
        assert!(vocab.id("#remotework").is_some());
        assert!(vocab.id("the").is_none());
        let source = CorpusBow { corpus: &c, stopwords: stop, vocab: &vocab };
        let streamed: Vec<BowDoc> = source.docs().unwrap().map(Result::unwrap).collect();
        let tok = Tokenizer::new(stop);
        let direct: Vec<BowDoc> = c
            .records()
            .unwrap()
            .map(|r| {
                let r = r.unwrap();
                encode_bow(r.id, &tok.tokenize(&r.text), &vocab)
            })
            .collect();
        assert_eq!(streamed, direct);
        let ids: Vec<Vec<u32>> = token_id_docs(&c, stop, &vocab).unwrap().map(Result::unwrap).collect();
        assert_eq!(ids.len(), 5000);
        assert_eq!(
            ids[0].iter().filter(|&&t| t != OOV).count() as u64,
            streamed[0].total_tokens
        );
    }

    #[test]
    fn stopword_ids_resolve() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(load_stopwords("en-v1", dir.path()).unwrap().id(), "en-v1");
        assert!(!load_stopwords("none", dir.path()).unwrap().contains("the"));
        std::fs::write(dir.path().join("mine.txt"), "# custom\nfoo\n").unwrap();
        assert!(load_stopwords("mine.txt", dir.path()).unwrap().contains("foo"));
        assert!(load_stopwords("missing.txt", dir.path()).is_err());
    }
}
