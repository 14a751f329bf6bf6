//! Tweet normalization, vocabulary construction and bag-of-words encoding.
//!
//! Normalization applies a fixed rule sequence:
//!
//! 1. Unicode NFC, then lowercase.
//! 2. Drop URLs (`scheme://…`, `www.…`, `t.co/…`).
//! 3. Drop `@mentions`.
//! 4. Keep hashtags as single tokens, `#` included.
//! 5. Split everything else on non-alphanumeric characters (emoji go here).
//! 6. Drop stopwords from the bundled list (hashtags are exempt).
//! 7. Drop tokens shorter than two characters, not counting a leading `#`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, IoContext, Result};

const BUNDLED_STOPWORDS: &str = include_str!("../assets/stopwords_en_v1.txt");
pub const BUNDLED_STOPWORDS_ID: &str = "en-v1";

#[derive(Debug, Clone)]
pub struct StopwordList {
    id: String,
    words: HashSet<String>,
}

impl StopwordList {
    /// Parses one word per line; `#` starts a comment line.
    pub fn parse(id: impl Into<String>, text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { id: id.into(), words }
    }

    pub fn bundled() -> &'static StopwordList {
        static LIST: OnceLock<StopwordList> = OnceLock::new();
        LIST.get_or_init(|| StopwordList::parse(BUNDLED_STOPWORDS_ID, BUNDLED_STOPWORDS))
    }

    pub fn empty() -> Self {
        Self {
            id: "none".into(),
            words: HashSet::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }
}

fn token_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        // Alternation order matters: URLs and mentions must win over plain words.
        Regex::new(
            r"(?x)
            (?P<url>[a-z][a-z0-9+.\-]*://\S+ | www\.\S+ | \bt\.co/\S+)
          | (?P<mention>@[\p{Alphabetic}\p{Nd}_]+)
          | (?P<hashtag>\#[\p{Alphabetic}\p{Nd}_]+)
          | (?P<word>[\p{Alphabetic}\p{Nd}]+)",
        )
        .expect("token regex compiles")
    })
}

/// Tokenizer bound to a stopword list.
#[derive(Debug, Clone, Copy)]
pub struct Tokenizer<'a> {
    stopwords: &'a StopwordList,
}

impl Default for Tokenizer<'static> {
    fn default() -> Self {
        Self {
            stopwords: StopwordList::bundled(),
        }
    }
}

impl<'a> Tokenizer<'a> {
    pub fn new(stopwords: &'a StopwordList) -> Self {
        Self { stopwords }
    }

    pub fn stopwords(&self) -> &StopwordList {
        self.stopwords
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let folded: String = text.nfc().collect::<String>().to_lowercase();
        let mut out = Vec::new();
        for caps in token_pattern().captures_iter(&folded) {
            if let Some(tag) = caps.name("hashtag") {
                let tag = tag.as_str();
                if tag.chars().count() > 2 {
                    out.push(tag.to_string());
                }
            } else if let Some(word) = caps.name("word") {
                let word = word.as_str();
                if word.chars().count() >= 2 && !self.stopwords.contains(word) {
                    out.push(word.to_string());
                }
            }
        }
        out
    }
}

/// Normalizes a tweet with the bundled stopword list.
pub fn normalize_tweet(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabParams {
    pub min_df: u64,
    pub max_df_ratio: f64,
    pub stopword_list_id: String,
}

impl Default for VocabParams {
    fn default() -> Self {
        Self {
            min_df: 5,
            max_df_ratio: 0.5,
            stopword_list_id: BUNDLED_STOPWORDS_ID.to_string(),
        }
    }
}

/// Term ↔ dense id map with document frequencies. Ids follow lexicographic
/// term order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u64>,
    term_to_id: HashMap<String, u32>,
    total_docs: u64,
    params: VocabParams,
}

#[derive(Serialize, Deserialize)]
struct VocabTermJson {
    term: String,
    id: u32,
    df: u64,
}

#[derive(Serialize, Deserialize)]
struct VocabJson {
    build_params: VocabParams,
    total_docs: u64,
    terms: Vec<VocabTermJson>,
}

impl Vocabulary {
    /// Builds the vocabulary from a single pass over tokenized documents.
    pub fn build<I, D, S>(docs: I, params: VocabParams) -> Result<Self>
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if params.min_df < 1 {
            return Err(Error::invalid("min_df must be at least 1"));
        }
        if !(params.max_df_ratio > 0.0 && params.max_df_ratio <= 1.0) {
            return Err(Error::invalid("max_df_ratio must lie in (0, 1]"));
        }
        let mut df: BTreeMap<String, u64> = BTreeMap::new();
        let mut total_docs = 0u64;
        let mut seen = HashSet::new();
        for doc in docs {
            total_docs += 1;
            seen.clear();
            for tok in doc {
                let tok = tok.as_ref();
                if seen.insert(tok.to_string()) {
                    *df.entry(tok.to_string()).or_default() += 1;
                }
            }
        }
        let max_df = params.max_df_ratio * total_docs as f64;
        let (terms, doc_freq): (Vec<_>, Vec<_>) = df
            .into_iter()
            .filter(|&(_, f)| f >= params.min_df && f as f64 <= max_df)
            .unzip();
        if terms.is_empty() {
            return Err(Error::invalid(format!(
                "vocabulary is empty after filtering {total_docs} documents \
                 (min_df={}, max_df_ratio={}); loosen the filters",
                params.min_df, params.max_df_ratio
            )));
        }
        Ok(Self::from_parts(terms, doc_freq, total_docs, params))
    }

    fn from_parts(terms: Vec<String>, doc_freq: Vec<u64>, total_docs: u64, params: VocabParams) -> Self {
        let term_to_id = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            terms,
            doc_freq,
            term_to_id,
            total_docs,
            params,
        }
    }

    /// Builds a vocabulary over a fixed term list, every term with df 0.
    /// Useful for synthetic corpora whose vocabulary is known up front.
    pub fn from_terms(terms: Vec<String>) -> Result<Self> {
        let mut sorted = terms.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != terms.len() || sorted != terms {
            return Err(Error::invalid("terms must be unique and sorted"));
        }
        let n = terms.len();
        Ok(Self::from_parts(
            terms,
            vec![0; n],
            0,
            VocabParams {
                min_df: 1,
                max_df_ratio: 1.0,
                stopword_list_id: "none".into(),
            },
        ))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, id: u32) -> u64 {
        self.doc_freq[id as usize]
    }

    pub fn total_docs(&self) -> u64 {
        self.total_docs
    }

    pub fn params(&self) -> &VocabParams {
        &self.params
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let json = VocabJson {
            build_params: self.params.clone(),
            total_docs: self.total_docs,
            terms: self
                .terms
                .iter()
                .zip(&self.doc_freq)
                .enumerate()
                .map(|(id, (term, &df))| VocabTermJson {
                    term: term.clone(),
                    id: id as u32,
                    df,
                })
                .collect(),
        };
        serde_json::to_vec_pretty(&json).map_err(|e| Error::json("<vocabulary>", e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).at(path)?;
        let json: VocabJson = serde_json::from_slice(&raw).map_err(|e| Error::json(path, e))?;
        let mut terms = Vec::with_capacity(json.terms.len());
        let mut doc_freq = Vec::with_capacity(json.terms.len());
        for (expected, t) in json.terms.into_iter().enumerate() {
            if t.id as usize != expected {
                return Err(Error::corrupt(path, format!("term ids not dense at {expected}")));
            }
            terms.push(t.term);
            doc_freq.push(t.df);
        }
        Ok(Self::from_parts(terms, doc_freq, json.total_docs, json.build_params))
    }
}

/// Sparse term counts for one document, sorted by term id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowDoc {
    pub doc_id: u64,
    pub counts: Vec<(u32, u32)>,
    pub total_tokens: u64,
}

impl BowDoc {
    pub fn from_counts(doc_id: u64, counts: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut map: BTreeMap<u32, u32> = BTreeMap::new();
        for (term, c) in counts {
            if c > 0 {
                *map.entry(term).or_default() += c;
            }
        }
        let total_tokens = map.values().map(|&c| c as u64).sum();
        Self {
            doc_id,
            counts: map.into_iter().collect(),
            total_tokens,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Encodes tokens against the vocabulary; out-of-vocabulary tokens vanish.
pub fn encode_bow<S: AsRef<str>>(doc_id: u64, tokens: &[S], vocab: &Vocabulary) -> BowDoc {
    BowDoc::from_counts(
        doc_id,
        tokens.iter().filter_map(|t| vocab.id(t.as_ref())).map(|id| (id, 1)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tweet_rules_apply_in_order() {
        assert_eq!(
            normalize_tweet("The future of #AI is here! https://t.co/x @user"),
            vec!["future", "#ai"]
        );
        assert!(normalize_tweet("").is_empty());
        assert_eq!(
            normalize_tweet("#RemoteWork #remotework"),
            vec!["#remotework", "#remotework"]
        );
    }

    #[test]
    fn urls_mentions_and_short_tokens() {
        assert_eq!(
            normalize_tweet("see www.example.com/x and t.co/abc @Someone_1 a #x #ok"),
            vec!["see", "#ok"]
        );
        assert_eq!(normalize_tweet("Metaverse🚀rocks!!! 2030"), vec!["metaverse", "rocks", "2030"]);
        assert_eq!(normalize_tweet("don't stop"), vec!["stop"]);
    }

    #[test]
    fn nfc_folds_composed_and_decomposed_forms() {
        let composed = "caf\u{e9}s";
        let decomposed = "cafe\u{301}s";
        assert_eq!(normalize_tweet(composed), normalize_tweet(decomposed));
    }

    fn docs(raw: &[&[&str]]) -> Vec<Vec<String>> {
        raw.iter()
            .map(|d| d.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    #[test]
    fn df_filters() {
        let corpus = docs(&[&["a", "b"], &["a", "c"], &["a"]]);
        let params = |min_df, max_df_ratio| VocabParams {
            min_df,
            max_df_ratio,
            stopword_list_id: "none".into(),
        };
        let v = Vocabulary::build(&corpus, params(2, 1.0)).unwrap();
        assert_eq!(v.terms(), ["a"]);
        assert_eq!(v.doc_freq(0), 3);
        assert!(Vocabulary::build(&corpus, params(2, 0.5)).is_err());
        assert!(Vocabulary::build(&corpus, params(0, 0.5)).is_err());
        assert!(Vocabulary::build(&corpus, params(1, 0.0)).is_err());
        let a = Vocabulary::build(&corpus, params(1, 1.0)).unwrap();
        let b = Vocabulary::build(&corpus, params(1, 1.0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.terms(), ["a", "b", "c"]);
    }

    #[test]
    fn encode_counts() {
        let v = Vocabulary::from_terms(vec!["a".into(), "b".into()]).unwrap();
        let bow = encode_bow(1, &["a", "b", "a"], &v);
        assert_eq!(bow.counts, vec![(0, 2), (1, 1)]);
        assert_eq!(bow.total_tokens, 3);
        let oov = encode_bow(2, &["z"], &v);
        assert!(oov.counts.is_empty());
        assert_eq!(oov.total_tokens, 0);
        assert!(encode_bow::<&str>(3, &[], &v).is_empty());
    }

    #[test]
    fn vocabulary_json_round_trip() {
        let corpus = docs(&[&["x", "y"], &["y", "z"], &["x"]]);
        let v = Vocabulary::build(
            &corpus,
            VocabParams {
                min_df: 1,
                max_df_ratio: 1.0,
                stopword_list_id: "en-v1".into(),
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.json");
        v.save(&path).unwrap();
        assert_eq!(Vocabulary::load(&path).unwrap(), v);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn corpus() -> impl Strategy<Value = Vec<Vec<String>>> {
            let word = prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g"]);
            prop::collection::vec(
                prop::collection::vec(word.prop_map(String::from), 0..8),
                1..20,
            )
        }

        proptest! {
            #[test]
            fn retained_terms_satisfy_filters(docs in corpus(), min_df in 1u64..4, ratio in 0.2f64..1.0) {
                let params = VocabParams { min_df, max_df_ratio: ratio, stopword_list_id: "none".into() };
                let Ok(v) = Vocabulary::build(&docs, params) else { return Ok(()); };
                for (id, term) in v.terms().iter().enumerate() {
                    let brute = docs.iter().filter(|d| d.contains(term)).count() as u64;
                    prop_assert_eq!(brute, v.doc_freq(id as u32));
                    prop_assert!(brute >= min_df);
                    prop_assert!(brute as f64 <= ratio * docs.len() as f64);
                }
                // Encoded documents reproduce the document frequencies.
                let mut df = vec![0u64; v.len()];
                for (i, d) in docs.iter().enumerate() {
                    for (t, _) in encode_bow(i as u64, d, &v).counts {
                        df[t as usize] += 1;
                    }
                }
                for (id, f) in df.into_iter().enumerate() {
                    prop_assert_eq!(f, v.doc_freq(id as u32));
                }
            }

            #[test]
            fn tokenization_is_pure(text in "\\PC{0,60}") {
                prop_assert_eq!(normalize_tweet(&text), normalize_tweet(&text));
                for tok in normalize_tweet(&text) {
                    let body = tok.strip_prefix('#').unwrap_or(&tok);
                    prop_assert!(body.chars().count() >= 2);
                }
            }
        }
    }
}
