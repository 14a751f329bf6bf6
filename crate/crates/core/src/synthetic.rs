//! Seeded generators for corpora with known structure. The acceptance suite
//! and the examples use them as ground truth.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::embedstore::EmbeddingRecord;
use crate::error::Result;
use crate::lda::BowSource;
use crate::textprep::{encode_bow, BowDoc, Vocabulary};

/// Draws from a symmetric Dirichlet by normalizing Gamma(α, 1) draws.
pub fn sample_dirichlet(alpha: f64, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha positive");
    let mut draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.iter_mut().for_each(|x| *x /= total);
    } else {
        draws.iter_mut().for_each(|x| *x = 0.0);
        draws[rng.random_range(0..k)] = 1.0;
    }
    draws
}

fn sample_index(weights: &[f64], rng: &mut impl Rng) -> usize {
    let target = rng.random::<f64>() * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if acc > target {
            return i;
        }
    }
    weights.len() - 1
}

/// Shape of a planted-topic corpus: `topics` disjoint supports of
/// `terms_per_topic` terms each, uniform within a support.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub topics: usize,
    pub terms_per_topic: usize,
    pub docs: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Concentration of the per-document topic mixture.
    pub doc_alpha: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            topics: 5,
            terms_per_topic: 10,
            docs: 2000,
            min_len: 40,
            max_len: 80,
            doc_alpha: 0.1,
            seed: 0,
        }
    }
}

impl PlantedSpec {
    pub fn vocab_size(&self) -> usize {
        self.topics * self.terms_per_topic
    }

    /// Term names sort in id order, so `Vocabulary::from_terms` keeps ids.
    pub fn term_names(&self) -> Vec<String> {
        let width = self.vocab_size().to_string().len();
        (0..self.vocab_size()).map(|i| format!("w{i:0width$}")).collect()
    }

    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from_terms(self.term_names()).expect("generated names are sorted")
    }

    /// Planted supports as term ids.
    pub fn supports(&self) -> Vec<Vec<u32>> {
        (0..self.topics)
            .map(|t| ((t * self.terms_per_topic) as u32..((t + 1) * self.terms_per_topic) as u32).collect())
            .collect()
    }

    fn doc_tokens(&self, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let theta = sample_dirichlet(self.doc_alpha, self.topics, rng);
        let len = rng.random_range(self.min_len..=self.max_len);
        (0..len)
            .map(|_| {
                let topic = sample_index(&theta, rng);
                (topic * self.terms_per_topic + rng.random_range(0..self.terms_per_topic)) as u32
            })
            .collect()
    }

    /// Token sequences (as term ids), in generation order.
    pub fn token_ids(&self) -> Vec<Vec<u32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.docs).map(|_| self.doc_tokens(&mut rng)).collect()
    }

    /// Token sequences as strings.
    pub fn token_docs(&self) -> Vec<Vec<String>> {
        let names = self.term_names();
        self.token_ids()
            .into_iter()
            .map(|d| d.into_iter().map(|w| names[w as usize].clone()).collect())
            .collect()
    }

    pub fn bow_docs(&self) -> Vec<BowDoc> {
        let vocab = self.vocabulary();
        self.token_docs()
            .iter()
            .enumerate()
            .map(|(i, d)| encode_bow(i as u64, d, &vocab))
            .collect()
    }

    /// A lazily generated stream; nothing beyond the current document is held.
    pub fn stream(&self) -> PlantedStream {
        PlantedStream { spec: self.clone() }
    }
}

pub struct PlantedStream {
    spec: PlantedSpec,
}

impl BowSource for PlantedStream {
    fn docs(&self) -> Result<Box<dyn Iterator<Item = Result<BowDoc>> + '_>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        Ok(Box::new((0..self.spec.docs).map(move |i| {
            let toks = self.spec.doc_tokens(&mut rng);
            Ok(BowDoc::from_counts(i as u64, toks.into_iter().map(|w| (w, 1))))
        })))
    }
}

/// Greedy one-to-one matching of learned to planted topics by top-term
/// overlap. Returns the overlap fraction of each matched pair.
pub fn greedy_topic_overlap(learned: &[Vec<u32>], planted: &[Vec<u32>]) -> Vec<f64> {
    let mut pairs = Vec::new();
    for (i, l) in learned.iter().enumerate() {
        for (j, p) in planted.iter().enumerate() {
            let shared = l.iter().filter(|w| p.contains(w)).count();
            pairs.push((shared, i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_l = vec![false; learned.len()];
    let mut used_p = vec![false; planted.len()];
    let mut out = Vec::new();
    for (shared, i, j) in pairs {
        if used_l[i] || used_p[j] {
            continue;
        }
        used_l[i] = true;
        used_p[j] = true;
        out.push(shared as f64 / planted[j].len().max(1) as f64);
    }
    out
}

/// Isotropic Gaussian blobs written as embedding records, shuffled. Returns
/// the records and the generating blob of each.
pub fn gaussian_blobs<const D: usize>(
    centers: &[[f64; D]],
    per_blob: usize,
    sigma: f64,
    dim: usize,
    seed: u64,
) -> (Vec<EmbeddingRecord>, Vec<usize>) {
    assert!(dim <= D, "centers must cover dim");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma non-negative");
    let mut points = Vec::with_capacity(centers.len() * per_blob);
    for (b, c) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            let v: Vec<f32> = (0..dim).map(|j| (c[j] + noise.sample(&mut rng)) as f32).collect();
            points.push((v, b));
        }
    }
    points.shuffle(&mut rng);
    let truth = points.iter().map(|p| p.1).collect();
    let records = points
        .into_iter()
        .enumerate()
        .map(|(i, (vector, _))| EmbeddingRecord {
            tweet_id: 1000 + i as u64,
            vector,
        })
        .collect();
    (records, truth)
}

/// Fraction of points whose cluster's majority generator matches their own.
pub fn purity(labels: &[u32], truth: &[usize]) -> f64 {
    use std::collections::HashMap;
    let mut table: HashMap<u32, HashMap<usize, usize>> = HashMap::new();
    for (&l, &t) in labels.iter().zip(truth) {
        *table.entry(l).or_default().entry(t).or_default() += 1;
    }
    let majority: usize = table.values().map(|m| m.values().max().copied().unwrap_or(0)).sum();
    majority as f64 / labels.len().max(1) as f64
}

const THEMES: &[&[&str]] = &[
    &["#ai", "machine", "learning", "data", "science", "analytics", "coding", "model", "neural", "algorithm"],
    &["#remotework", "culture", "office", "conversation", "hybrid", "team", "workplace", "employees", "meeting", "burnout"],
    &["metaverse", "cybersecurity", "#iot", "technology", "startups", "blockchain", "digital", "cloud", "innovation", "platform"],
    &["robotics", "automation", "robots", "factory", "jobs", "skills", "upskilling", "reskilling", "workforce", "industry"],
    &["covid", "vaccine", "research", "health", "pandemic", "trials", "biotech", "medicine", "patients", "genomics"],
];

const FILLER: &[&str] = &["future", "trends", "next", "world", "change", "ideas", "today", "thinking"];

/// Writes a JSONL archive of short themed posts spread over several months,
/// in the `{id,date,user,content}` spelling. Returns the themes used per post.
pub fn synthetic_tweets(n: usize, seed: u64) -> (String, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let mut themes = Vec::with_capacity(n);
    let start = 1_609_459_200i64; // 2021-01-01T00:00:00Z
    let span = 365 * 86_400i64;
    for i in 0..n {
        let theme = rng.random_range(0..THEMES.len());
        let words = THEMES[theme];
        let len = rng.random_range(6..14);
        let mut text: Vec<String> = (0..len)
            .map(|_| {
                if rng.random::<f64>() < 0.15 {
                    FILLER[rng.random_range(0..FILLER.len())].to_string()
                } else {
                    words[rng.random_range(0..words.len())].to_string()
                }
            })
            .collect();
        text.insert(0, "The".into());
        if rng.random::<f64>() < 0.3 {
            text.push(format!("https://t.co/{i:x}"));
        }
        let ts = start + rng.random_range(0..span);
        let date = chrono::DateTime::from_timestamp(ts, 0).unwrap().to_rfc3339();
        let line = serde_json::json!({
            "id": 10_000 + i as u64,
            "date": date,
            "user": {"username": format!("futurist{}", rng.random_range(0..25))},
            "content": text.join(" "),
        });
        out.push_str(&line.to_string());
        out.push('\n');
        themes.push(theme);
    }
    (out, themes)
}

/// Deterministic pseudo-embeddings for records: a per-theme centre plus
/// noise. Stands in for the offline sentence encoder in demos and tests.
pub fn theme_embeddings(ids_and_themes: &[(u64, usize)], dim: usize, seed: u64) -> Vec<EmbeddingRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<Vec<f64>> = (0..THEMES.len())
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0) * 3.0).collect())
        .collect();
    let noise = Normal::new(0.0, 0.3).unwrap();
    ids_and_themes
        .iter()
        .map(|&(id, theme)| EmbeddingRecord {
            tweet_id: id,
            vector: centres[theme % centres.len()]
                .iter()
                .map(|c| (c + noise.sample(&mut rng)) as f32)
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_corpus_shape() {
        let spec = PlantedSpec {
            docs: 50,
            ..PlantedSpec::default()
        };
        let docs = spec.token_ids();
        assert_eq!(docs.len(), 50);
        assert!(docs.iter().all(|d| (40..=80).contains(&d.len())));
        assert!(docs.iter().flatten().all(|&w| (w as usize) < 50));
        let streamed: Vec<_> = spec.stream().docs().unwrap().map(Result::unwrap).collect();
        assert_eq!(streamed, spec.bow_docs());
        assert_eq!(spec.vocabulary().id("w07"), Some(7));
    }

    #[test]
    fn greedy_overlap_matches_identical_sets() {
        let planted = vec![vec![0, 1, 2], vec![3, 4, 5]];
        let learned = vec![vec![5, 4, 3], vec![0, 1, 9]];
        let mut o = greedy_topic_overlap(&learned, &planted);
        o.sort_by(f64::total_cmp);
        assert_eq!(o, vec![2.0 / 3.0, 1.0]);
    }

    #[test]
    fn tweets_parse() {
        let (jsonl, themes) = synthetic_tweets(20, 3);
        assert_eq!(themes.len(), 20);
        for line in jsonl.lines() {
            crate::corpus::parse_record(line).unwrap();
        }
    }
}
