//! Class-based TF-IDF topic representations.
//!
//! Each cluster is treated as one class document. With `c[t][c]` the count of
//! term t in class c, `f_t = Σ_c c[t][c]`, and `A` the mean number of tokens
//! per class, the weight of t in c is
//!
//! ```text
//! W[t][c] = (c[t][c] / Σ_t' c[t'][c]) · ln(1 + A / f_t)
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::Labels;
use crate::error::{Error, IoContext, Result};
use crate::textprep::{BowDoc, Vocabulary};

/// Per-class term counts, k×V row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTermMatrix {
    k: usize,
    v: usize,
    counts: Vec<u64>,
    class_sizes: Vec<u64>,
}

impl ClassTermMatrix {
    pub fn new(k: usize, v: usize) -> Self {
        Self {
            k,
            v,
            counts: vec![0; k * v],
            class_sizes: vec![0; k],
        }
    }

    /// Builds a matrix from dense rows; used by tests and tools.
    pub fn from_rows(rows: &[Vec<u64>], class_sizes: Vec<u64>) -> Result<Self> {
        let k = rows.len();
        let v = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != v) || class_sizes.len() != k {
            return Err(Error::invalid("ragged class-term rows"));
        }
        Ok(Self {
            k,
            v,
            counts: rows.concat(),
            class_sizes,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.v
    }

    pub fn row(&self, class: usize) -> &[u64] {
        &self.counts[class * self.v..(class + 1) * self.v]
    }

    pub fn class_sizes(&self) -> &[u64] {
        &self.class_sizes
    }

    pub fn add_doc(&mut self, class: usize, bow: &BowDoc) -> Result<()> {
        if class >= self.k {
            return Err(Error::invalid(format!(
                "document {} has label {class}, outside 0..{}",
                bow.doc_id, self.k
            )));
        }
        for &(t, c) in &bow.counts {
            if t as usize >= self.v {
                return Err(Error::invalid(format!("term id {t} outside vocabulary")));
            }
            self.counts[class * self.v + t as usize] += c as u64;
        }
        self.class_sizes[class] += 1;
        Ok(())
    }

    /// f_t for every term.
    pub fn term_totals(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.v];
        for row in self.counts.chunks(self.v.max(1)) {
            for (o, &c) in out.iter_mut().zip(row) {
                *o += c;
            }
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Sums classes under `mapping` (old class → new class).
    pub fn merge(&self, mapping: &[usize], new_k: usize) -> Result<Self> {
        if mapping.len() != self.k || mapping.iter().any(|&m| m >= new_k) {
            return Err(Error::invalid("class mapping does not cover every class"));
        }
        let mut out = Self::new(new_k, self.v);
        for (old, &new) in mapping.iter().enumerate() {
            for (o, &c) in out.counts[new * self.v..(new + 1) * self.v]
                .iter_mut()
                .zip(self.row(old))
            {
                *o += c;
            }
            out.class_sizes[new] += self.class_sizes[old];
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct ClassTermJson {
    k: usize,
    vocab_size: usize,
    class_sizes: Vec<u64>,
    /// Sparse rows of (term id, count).
    rows: Vec<Vec<(u32, u64)>>,
}

impl ClassTermMatrix {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = ClassTermJson {
            k: self.k,
            vocab_size: self.v,
            class_sizes: self.class_sizes.clone(),
            rows: (0..self.k)
                .map(|c| {
                    self.row(c)
                        .iter()
                        .enumerate()
                        .filter(|(_, &n)| n > 0)
                        .map(|(t, &n)| (t as u32, n))
                        .collect()
                })
                .collect(),
        };
        let raw = serde_json::to_vec(&json).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, raw).at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).at(path)?;
        let json: ClassTermJson = serde_json::from_slice(&raw).map_err(|e| Error::json(path, e))?;
        if json.rows.len() != json.k || json.class_sizes.len() != json.k {
            return Err(Error::corrupt(path, "row count does not match k"));
        }
        let mut m = Self::new(json.k, json.vocab_size);
        m.class_sizes = json.class_sizes;
        for (c, row) in json.rows.iter().enumerate() {
            for &(t, n) in row {
                if t as usize >= json.vocab_size {
                    return Err(Error::corrupt(path, format!("term id {t} outside vocabulary")));
                }
                m.counts[c * json.vocab_size + t as usize] = n;
            }
        }
        Ok(m)
    }
}

/// Aggregates labelled documents into class counts in one pass.
pub fn class_term_counts<I>(docs: I, labels: &Labels, k: usize, vocab_size: usize) -> Result<ClassTermMatrix>
where
    I: IntoIterator<Item = Result<BowDoc>>,
{
    let mut m = ClassTermMatrix::new(k, vocab_size);
    for doc in docs {
        let doc = doc?;
        let label = labels
            .get(doc.doc_id)
            .ok_or_else(|| Error::invalid(format!("document {} has no label", doc.doc_id)))?;
        m.add_doc(label as usize, &doc)?;
    }
    Ok(m)
}

/// Dense c-TF-IDF weights, one vector per class. Empty classes get zeros.
pub fn ctfidf(m: &ClassTermMatrix) -> Result<Vec<Vec<f64>>> {
    let total = m.total();
    if total == 0 {
        return Err(Error::invalid("class-term matrix is all zero"));
    }
    let f = m.term_totals();
    // ln(1 + A/f_t) with A/f_t = total / (k·f_t), as one division so that
    // scaling every count by a constant leaves the ratio bit-identical.
    let idf: Vec<f64> = f
        .iter()
        .map(|&ft| {
            if ft == 0 {
                0.0
            } else {
                (total as f64 / (m.k as f64 * ft as f64)).ln_1p()
            }
        })
        .collect();
    Ok((0..m.k)
        .map(|c| {
            let row = m.row(c);
            let class_total: u64 = row.iter().sum();
            if class_total == 0 {
                return vec![0.0; m.v];
            }
            row.iter()
                .zip(&idf)
                .map(|(&cnt, &w)| cnt as f64 / class_total as f64 * w)
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRepresentation {
    pub topic_id: u32,
    pub size: u64,
    /// Non-zero (term id, weight), weight descending, ties by term id.
    pub terms: Vec<(u32, f64)>,
    /// Dense weight vector over the vocabulary.
    pub ctfidf_vector: Vec<f64>,
}

impl TopicRepresentation {
    pub fn from_weights(topic_id: u32, size: u64, weights: Vec<f64>) -> Self {
        let mut terms: Vec<(u32, f64)> = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| (i as u32, w))
            .collect();
        terms.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Self {
            topic_id,
            size,
            terms,
            ctfidf_vector: weights,
        }
    }
}

/// Builds every class's representation.
pub fn represent(m: &ClassTermMatrix) -> Result<Vec<TopicRepresentation>> {
    Ok(ctfidf(m)?
        .into_iter()
        .enumerate()
        .map(|(c, w)| TopicRepresentation::from_weights(c as u32, m.class_sizes[c], w))
        .collect())
}

/// The first `n` ranked terms.
pub fn top_terms(rep: &TopicRepresentation, n: usize) -> &[(u32, f64)] {
    &rep.terms[..n.min(rep.terms.len())]
}

/// Serialized topic entry: `{topic_id, size, terms: [[term, weight], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicJson {
    pub topic_id: u32,
    pub size: u64,
    pub terms: Vec<(String, f64)>,
}

pub fn topics_json(reps: &[TopicRepresentation], vocab: &Vocabulary, top_n: usize) -> Vec<TopicJson> {
    reps.iter()
        .map(|r| TopicJson {
            topic_id: r.topic_id,
            size: r.size,
            terms: top_terms(r, top_n)
                .iter()
                .map(|&(t, w)| (vocab.term(t).to_string(), w))
                .collect(),
        })
        .collect()
}

pub fn write_topics(path: &Path, topics: &[TopicJson]) -> Result<()> {
    let raw = serde_json::to_vec_pretty(topics).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, raw).at(path)
}

pub fn read_topics(path: &Path) -> Result<Vec<TopicJson>> {
    let raw = std::fs::read(path).at(path)?;
    serde_json::from_slice(&raw).map_err(|e| Error::json(path, e))
}
