//! Per-bucket topic shares over time.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::Labels;
use crate::corpus::{format_day, Granularity, TimeBucket};
use crate::error::{Error, IoContext, Result};

/// Source of per-document topic weights.
pub trait TopicWeights {
    fn num_topics(&self) -> usize;

    /// Adds the document's weight vector into `acc`; false if unknown.
    fn add_to(&self, doc_id: u64, acc: &mut [f64]) -> Result<bool>;
}

/// Hard cluster labels: weight 1 on the document's topic.
pub struct HardLabels<'a> {
    pub labels: &'a Labels,
    pub k: usize,
}

impl TopicWeights for HardLabels<'_> {
    fn num_topics(&self) -> usize {
        self.k
    }

    fn add_to(&self, doc_id: u64, acc: &mut [f64]) -> Result<bool> {
        match self.labels.get(doc_id) {
            Some(l) if (l as usize) < self.k => {
                acc[l as usize] += 1.0;
                Ok(true)
            }
            Some(l) => Err(Error::invalid(format!("document {doc_id} has label {l}, outside 0..{}", self.k))),
            None => Ok(false),
        }
    }
}

/// Soft topic proportions, one simplex vector per document.
pub struct SoftWeights {
    pub k: usize,
    pub theta: HashMap<u64, Vec<f64>>,
}

impl TopicWeights for SoftWeights {
    fn num_topics(&self) -> usize {
        self.k
    }

    fn add_to(&self, doc_id: u64, acc: &mut [f64]) -> Result<bool> {
        let Some(t) = self.theta.get(&doc_id) else {
            return Ok(false);
        };
        if t.len() != self.k {
            return Err(Error::invalid(format!("document {doc_id} has {} weights, expected {}", t.len(), self.k)));
        }
        for (a, x) in acc.iter_mut().zip(t) {
            *a += x;
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicTimeMatrix {
    /// Bucket starts as `YYYY-MM-DD`.
    pub buckets: Vec<String>,
    pub topics: Vec<u32>,
    /// One row per bucket; rows of non-empty buckets sum to 1.
    pub shares: Vec<Vec<f64>>,
}

fn normalize_row(row: &mut [f64]) {
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        row.iter_mut().for_each(|x| *x /= total);
    }
}

/// Normalized per-bucket sums. Documents inside a bucket are summed in id
/// order, so their input order does not matter.
pub fn topic_time_matrix(buckets: &[TimeBucket], weights: &dyn TopicWeights) -> Result<TopicTimeMatrix> {
    let k = weights.num_topics();
    let mut shares = Vec::with_capacity(buckets.len());
    for b in buckets {
        let mut ids = b.doc_ids.clone();
        ids.sort_unstable();
        let mut row = vec![0.0; k];
        for id in ids {
            if !weights.add_to(id, &mut row)? {
                return Err(Error::invalid(format!("document {id} has no topic weights")));
            }
        }
        normalize_row(&mut row);
        shares.push(row);
    }
    Ok(TopicTimeMatrix {
        buckets: buckets.iter().map(|b| format_day(b.bucket_start)).collect(),
        topics: (0..k as u32).collect(),
        shares,
    })
}

/// Streaming variant: documents are added one at a time with their
/// timestamp, without holding per-document weights.
#[derive(Debug, Clone)]
pub struct TopicTimeAccumulator {
    granularity: Granularity,
    k: usize,
    rows: BTreeMap<i64, Vec<f64>>,
}

impl TopicTimeAccumulator {
    pub fn new(granularity: Granularity, k: usize) -> Self {
        Self {
            granularity,
            k,
            rows: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, ts: i64, weights: &[f64]) -> Result<()> {
        if weights.len() != self.k {
            return Err(Error::invalid(format!("got {} weights, expected {}", weights.len(), self.k)));
        }
        let row = self
            .rows
            .entry(self.granularity.bucket_start(ts))
            .or_insert_with(|| vec![0.0; self.k]);
        for (a, x) in row.iter_mut().zip(weights) {
            *a += x;
        }
        Ok(())
    }

    /// Normalizes rows and fills gaps between the first and last bucket.
    pub fn finish(self) -> Result<TopicTimeMatrix> {
        let (Some(&first), Some(&last)) = (self.rows.keys().next(), self.rows.keys().next_back()) else {
            return Err(Error::invalid("no documents to aggregate"));
        };
        let mut rows = self.rows;
        let mut buckets = Vec::new();
        let mut shares = Vec::new();
        let mut start = first;
        while start <= last {
            let mut row = rows.remove(&start).unwrap_or_else(|| vec![0.0; self.k]);
            normalize_row(&mut row);
            buckets.push(format_day(start));
            shares.push(row);
            start = self.granularity.next_start(start);
        }
        Ok(TopicTimeMatrix {
            buckets,
            topics: (0..self.k as u32).collect(),
            shares,
        })
    }
}

impl TopicTimeMatrix {
    pub fn save(&self, path: &Path) -> Result<()> {
        let raw = serde_json::to_vec_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, raw).at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).at(path)?;
        serde_json::from_slice(&raw).map_err(|e| Error::json(path, e))
    }

    /// Standard deviation of each topic's share across non-empty buckets.
    pub fn share_std(&self) -> Vec<f64> {
        let rows: Vec<&Vec<f64>> = self.shares.iter().filter(|r| r.iter().any(|&x| x > 0.0)).collect();
        let n = rows.len() as f64;
        (0..self.topics.len())
            .map(|t| {
                if rows.is_empty() {
                    return 0.0;
                }
                let mean = rows.iter().map(|r| r[t]).sum::<f64>() / n;
                (rows.iter().map(|r| (r[t] - mean).powi(2)).sum::<f64>() / n).sqrt()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::time_buckets_from;

    const DAY: i64 = 86_400;
    const JAN1: i64 = 1_609_459_200;

    #[test]
    fn hard_label_counts() {
        let labels = Labels::from_pairs([(1, 0), (2, 0), (3, 1)]).unwrap();
        let buckets = time_buckets_from([(1, JAN1), (2, JAN1 + DAY), (3, JAN1 + 2 * DAY)].map(Ok), Granularity::Month).unwrap();
        let m = topic_time_matrix(&buckets, &HardLabels { labels: &labels, k: 3 }).unwrap();
        assert_eq!(m.buckets, vec!["2021-01-01"]);
        assert!((m.shares[0][0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.shares[0][1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.shares[0][2], 0.0);
    }

    #[test]
    fn gaps_become_zero_rows_and_missing_docs_fail() {
        let labels = Labels::from_pairs([(1, 0), (2, 1)]).unwrap();
        let buckets = time_buckets_from([(1, JAN1), (2, JAN1 + 70 * DAY)].map(Ok), Granularity::Month).unwrap();
        let m = topic_time_matrix(&buckets, &HardLabels { labels: &labels, k: 2 }).unwrap();
        assert_eq!(m.buckets, vec!["2021-01-01", "2021-02-01", "2021-03-01"]);
        assert_eq!(m.shares[1], vec![0.0, 0.0]);
        let partial = Labels::from_pairs([(1, 0)]).unwrap();
        let err = topic_time_matrix(&buckets, &HardLabels { labels: &partial, k: 2 }).unwrap_err();
        assert!(err.to_string().contains("document 2"));
    }

    #[test]
    fn accumulator_matches_bucketed_version() {
        let docs: Vec<(u64, i64, Vec<f64>)> = (0..40)
            .map(|i| (i, JAN1 + i as i64 * 5 * DAY, vec![0.1 + (i % 3) as f64 * 0.2, 0.9 - (i % 3) as f64 * 0.2]))
            .collect();
        let soft = SoftWeights {
            k: 2,
            theta: docs.iter().map(|d| (d.0, d.2.clone())).collect(),
        };
        let buckets = time_buckets_from(docs.iter().map(|d| Ok((d.0, d.1))), Granularity::Month).unwrap();
        let a = topic_time_matrix(&buckets, &soft).unwrap();
        let mut acc = TopicTimeAccumulator::new(Granularity::Month, 2);
        for d in &docs {
            acc.add(d.1, &d.2).unwrap();
        }
        assert_eq!(acc.finish().unwrap(), a);
        for row in &a.shares {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_generator_has_flat_shares() {
        let (jsonl, themes) = crate::synthetic::synthetic_tweets(6000, 3);
        let records: Vec<(u64, i64)> = jsonl
            .lines()
            .map(|l| {
                let r = crate::corpus::parse_record(l).unwrap();
                (r.id, r.created_at)
            })
            .collect();
        let labels = Labels::from_pairs(records.iter().zip(&themes).map(|(r, &t)| (r.0, t as u32))).unwrap();
        let buckets = time_buckets_from(records.iter().map(|&r| Ok(r)), Granularity::Month).unwrap();
        let m = topic_time_matrix(&buckets, &HardLabels { labels: &labels, k: 5 }).unwrap();
        assert_eq!(m.buckets.len(), 12);
        assert!(m.share_std().iter().all(|&s| s <= 0.05), "{:?}", m.share_std());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rows_are_simplex_and_order_free(
                docs in prop::collection::vec((0i64..200, prop::collection::vec(0.01f64..1.0, 3)), 1..40),
                seed in any::<u64>(),
            ) {
                let theta: HashMap<u64, Vec<f64>> = docs.iter().enumerate().map(|(i, d)| {
                    let s: f64 = d.1.iter().sum();
                    (i as u64, d.1.iter().map(|x| x / s).collect())
                }).collect();
                let soft = SoftWeights { k: 3, theta };
                let pairs: Vec<(u64, i64)> = docs.iter().enumerate().map(|(i, d)| (i as u64, JAN1 + d.0 * DAY)).collect();
                let buckets = time_buckets_from(pairs.iter().map(|&p| Ok(p)), Granularity::Week).unwrap();
                let m = topic_time_matrix(&buckets, &soft).unwrap();
                for row in &m.shares {
                    let s: f64 = row.iter().sum();
                    prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-9);
                }
                let mut shuffled = buckets.clone();
                for b in &mut shuffled {
                    let n = b.doc_ids.len();
                    if n > 1 { b.doc_ids.rotate_left((seed as usize) % n); }
                }
                prop_assert_eq!(topic_time_matrix(&shuffled, &soft).unwrap(), m);
            }
        }
    }
}
