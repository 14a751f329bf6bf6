//! C_V topic coherence and the topic-count sweep.
//!
//! Statistics come from boolean sliding windows over the token stream: every
//! document of length n yields `max(1, n - w + 1)` windows and a word counts
//! at most once per window. Scores use NPMI context vectors compared to their
//! sum by cosine.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::cosine;

/// Token id used for positions that are not in the vocabulary. They still
/// occupy window slots.
pub const OOV: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceConfig {
    pub window_size: usize,
    pub top_n: usize,
    pub epsilon: f64,
    pub gamma: f64,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        Self {
            window_size: 110,
            top_n: 10,
            epsilon: 1e-12,
            gamma: 1.0,
        }
    }
}

impl CoherenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_size == 0 {
            return Err(Error::invalid("window size must be at least 1"));
        }
        if self.top_n < 2 {
            return Err(Error::invalid("top_n must be at least 2"));
        }
        if !(self.epsilon > 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid("epsilon must be positive and gamma finite"));
        }
        Ok(())
    }
}

/// Window counts over a fixed evaluation word set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowStats {
    words: Vec<u32>,
    index: HashMap<u32, usize>,
    pub window_count: u64,
    pub term_windows: Vec<u64>,
    /// Upper triangle (i < j), row-major.
    pub pair_windows: Vec<u64>,
}

fn tri_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < m);
    i * (2 * m - i - 1) / 2 + (j - i - 1)
}

impl WindowStats {
    pub fn new(eval_words: &[u32]) -> Result<Self> {
        let mut words = eval_words.to_vec();
        words.sort_unstable();
        words.dedup();
        words.retain(|&w| w != OOV);
        if words.is_empty() {
            return Err(Error::invalid("evaluation word set is empty"));
        }
        let m = words.len();
        let index = words.iter().enumerate().map(|(i, &w)| (w, i)).collect();
        Ok(Self {
            words,
            index,
            window_count: 0,
            term_windows: vec![0; m],
            pair_windows: vec![0; m * (m - 1) / 2],
        })
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    pub fn contains(&self, word: u32) -> bool {
        self.index.contains_key(&word)
    }

    /// Window count containing `word` (0 if not tracked).
    pub fn term(&self, word: u32) -> u64 {
        self.index.get(&word).map_or(0, |&i| self.term_windows[i])
    }

    /// Window count containing both words; `pair(w, w) = term(w)`.
    pub fn pair(&self, a: u32, b: u32) -> u64 {
        match (self.index.get(&a), self.index.get(&b)) {
            (Some(&i), Some(&j)) if i == j => self.term_windows[i],
            (Some(&i), Some(&j)) => self.pair_windows[tri_index(self.words.len(), i.min(j), i.max(j))],
            _ => 0,
        }
    }

    fn record_window(&mut self, present: &[usize]) {
        self.window_count += 1;
        let m = self.words.len();
        for (a, &i) in present.iter().enumerate() {
            self.term_windows[i] += 1;
            for &j in &present[a + 1..] {
                self.pair_windows[tri_index(m, i.min(j), i.max(j))] += 1;
            }
        }
    }

    /// Adds one document's windows.
    pub fn add_doc(&mut self, tokens: &[u32], window_size: usize) {
        let local: Vec<Option<usize>> = tokens.iter().map(|t| self.index.get(t).copied()).collect();
        let w = window_size.max(1);
        let windows = local.len().saturating_sub(w) + 1;
        let mut present = Vec::new();
        for start in 0..windows {
            present.clear();
            present.extend(local[start..(start + w).min(local.len())].iter().flatten().copied());
            present.sort_unstable();
            present.dedup();
            self.record_window(&present);
        }
    }

    pub fn merge(&mut self, other: &WindowStats) {
        debug_assert_eq!(self.words, other.words);
        self.window_count += other.window_count;
        for (a, b) in self.term_windows.iter_mut().zip(&other.term_windows) {
            *a += b;
        }
        for (a, b) in self.pair_windows.iter_mut().zip(&other.pair_windows) {
            *a += b;
        }
    }
}

/// Streams documents into window statistics, counting chunks in parallel.
pub fn window_stats<I>(docs: I, eval_words: &[u32], config: &CoherenceConfig) -> Result<WindowStats>
where
    I: IntoIterator<Item = Result<Vec<u32>>>,
{
    const CHUNK: usize = 4096;
    let empty = WindowStats::new(eval_words)?;
    let mut total = empty.clone();
    let mut chunk = Vec::with_capacity(CHUNK);
    let flush = |chunk: &mut Vec<Vec<u32>>, total: &mut WindowStats| {
        let part = chunk
            .par_iter()
            .fold(
                || empty.clone(),
                |mut s, d| {
                    s.add_doc(d, config.window_size);
                    s
                },
            )
            .reduce(
                || empty.clone(),
                |mut a, b| {
                    a.merge(&b);
                    a
                },
            );
        total.merge(&part);
        chunk.clear();
    };
    for doc in docs {
        chunk.push(doc?);
        if chunk.len() == CHUNK {
            flush(&mut chunk, &mut total);
        }
    }
    if !chunk.is_empty() {
        flush(&mut chunk, &mut total);
    }
    Ok(total)
}

/// Normalized PMI with smoothing `epsilon`. Zero when either word never
/// occurs. A pair present in every window scores 1, where the smoothed
/// formula would otherwise divide by ln(1 + ε) and flip to −1.
pub fn npmi(stats: &WindowStats, a: u32, b: u32, epsilon: f64) -> f64 {
    let n = stats.window_count as f64;
    if n == 0.0 {
        return 0.0;
    }
    let pi = stats.term(a) as f64 / n;
    let pj = stats.term(b) as f64 / n;
    if pi == 0.0 || pj == 0.0 {
        return 0.0;
    }
    let pij = stats.pair(a, b) as f64 / n + epsilon;
    if pij >= 1.0 {
        return 1.0;
    }
    ((pij / (pi * pj)).ln() / -pij.ln()).min(1.0)
}

fn signed_pow(x: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        x
    } else {
        x.signum() * x.abs().powf(gamma)
    }
}

/// C_V score of one word list. Words must be tracked by `stats`.
pub fn cv_topic(stats: &WindowStats, words: &[u32], config: &CoherenceConfig) -> Result<f64> {
    if words.len() < 2 {
        return Err(Error::invalid("a topic needs at least two words"));
    }
    if let Some(w) = words.iter().find(|w| !stats.contains(**w)) {
        return Err(Error::invalid(format!("word {w} is not in the window statistics")));
    }
    let vectors: Vec<Vec<f64>> = words
        .iter()
        .map(|&wi| {
            words
                .iter()
                .map(|&wj| signed_pow(npmi(stats, wi, wj, config.epsilon), config.gamma))
                .collect()
        })
        .collect();
    let mut total = vec![0.0; words.len()];
    for v in &vectors {
        for (t, x) in total.iter_mut().zip(v) {
            *t += x;
        }
    }
    if total.iter().all(|&x| x == 0.0) {
        log::warn!("all context vectors are zero; scoring 0");
    }
    Ok(vectors.iter().map(|v| cosine(v, &total)).sum::<f64>() / words.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCoherence {
    pub topic_id: u32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub per_topic: Vec<TopicCoherence>,
    pub mean: f64,
    /// Topics with fewer than two known words.
    pub excluded: Vec<u32>,
}

/// Scores every topic from one pass over `docs`. Each topic is the list of
/// its ranked word ids (OOV entries are dropped) truncated to `top_n`.
pub fn cv_model<I>(docs: I, topics: &[(u32, Vec<u32>)], config: &CoherenceConfig) -> Result<CoherenceReport>
where
    I: IntoIterator<Item = Result<Vec<u32>>>,
{
    config.validate()?;
    if topics.is_empty() {
        return Err(Error::invalid("no topics to score"));
    }
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for (id, words) in topics {
        let mut w: Vec<u32> = Vec::new();
        for &x in words.iter().filter(|&&x| x != OOV) {
            if !w.contains(&x) {
                w.push(x);
            }
            if w.len() == config.top_n {
                break;
            }
        }
        if w.len() < 2 {
            log::warn!("topic {id} has fewer than two known words; excluded");
            excluded.push(*id);
        } else {
            kept.push((*id, w));
        }
    }
    if kept.is_empty() {
        return Err(Error::invalid("every topic has fewer than two known words"));
    }
    let union: Vec<u32> = kept.iter().flat_map(|(_, w)| w.iter().copied()).collect();
    let stats = window_stats(docs, &union, config)?;
    let per_topic = kept
        .iter()
        .map(|(id, w)| {
            Ok(TopicCoherence {
                topic_id: *id,
                score: cv_topic(&stats, w, config)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = per_topic.iter().map(|t| t.score).sum::<f64>() / per_topic.len() as f64;
    Ok(CoherenceReport {
        per_topic,
        mean,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub k: usize,
    pub score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub table: Vec<SweepEntry>,
    pub argmax: Option<usize>,
}

/// Runs `train_and_score` for each k (sorted, deduplicated). Failures are
/// recorded and skipped; ties in score go to the smaller k.
pub fn sweep<F>(k_grid: &[usize], mut train_and_score: F) -> Result<SweepResult>
where
    F: FnMut(usize) -> Result<f64>,
{
    if k_grid.is_empty() {
        return Err(Error::invalid("k grid is empty"));
    }
    let mut ks = k_grid.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut table = Vec::with_capacity(ks.len());
    let mut best: Option<(usize, f64)> = None;
    for k in ks {
        match train_and_score(k) {
            Ok(score) => {
                log::info!("k = {k}: C_V {score:.4}");
                if best.is_none_or(|(_, b)| score > b) {
                    best = Some((k, score));
                }
                table.push(SweepEntry {
                    k,
                    score: Some(score),
                    error: None,
                });
            }
            Err(e) => {
                log::warn!("k = {k} failed: {e}");
                table.push(SweepEntry {
                    k,
                    score: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    Ok(SweepResult {
        table,
        argmax: best.map(|b| b.0),
    })
}

/// Parses `start:end:step` (inclusive end) or a comma list.
pub fn parse_k_grid(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::invalid(format!("bad k grid {s:?}; expected start:end:step or a comma list"));
    let grid: Vec<usize> = if s.contains(':') {
        let parts: Vec<usize> = s
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let (start, end, step) = match parts[..] {
            [a, b] => (a, b, 1),
            [a, b, c] => (a, b, c),
            _ => return Err(bad()),
        };
        if step == 0 || start > end {
            return Err(bad());
        }
        (start..=end).step_by(step).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if grid.is_empty() || grid.contains(&0) {
        return Err(bad());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn stats_of(docs: &[Vec<u32>], words: &[u32], w: usize) -> WindowStats {
        let cfg = CoherenceConfig {
            window_size: w,
            ..Default::default()
        };
        window_stats(docs.iter().cloned().map(Ok), words, &cfg).unwrap()
    }

    /// Materializes every window and counts sets directly.
    fn brute(docs: &[Vec<u32>], words: &[u32], w: usize) -> (u64, HashMap<u32, u64>, HashMap<(u32, u32), u64>) {
        let mut n = 0;
        let mut term = HashMap::new();
        let mut pair = HashMap::new();
        for d in docs {
            let windows: Vec<&[u32]> = if d.len() <= w { vec![&d[..]] } else { d.windows(w).collect() };
            for win in windows {
                n += 1;
                let set: HashSet<u32> = win.iter().copied().collect();
                for &a in words {
                    if set.contains(&a) {
                        *term.entry(a).or_insert(0) += 1;
                    }
                    for &b in words {
                        if a < b && set.contains(&a) && set.contains(&b) {
                            *pair.entry((a, b)).or_insert(0) += 1;
                        }
                    }
                }
            }
        }
        (n, term, pair)
    }

    #[test]
    fn window_counts() {
        let s = stats_of(&[vec![1, 2, 3]], &[1], 110);
        assert_eq!(s.window_count, 1);
        let s = stats_of(&[vec![1, 2, 3, 4, 5]], &[1], 2);
        assert_eq!(s.window_count, 4);
        let s = stats_of(&[vec![7, 7, 8]], &[7, 8], 3);
        assert_eq!(s.term(7), 1);
        assert_eq!(s.pair(7, 8), 1);
        assert_eq!(s.pair(8, 7), 1);
        assert_eq!(s.pair(7, 7), 1);
        let s = stats_of(&[vec![]], &[1], 3);
        assert_eq!(s.window_count, 1);
    }

    fn toy(n: u64, ti: u64, tj: u64, tij: u64) -> WindowStats {
        let mut s = WindowStats::new(&[0, 1]).unwrap();
        s.window_count = n;
        s.term_windows = vec![ti, tj];
        s.pair_windows = vec![tij];
        s
    }

    #[test]
    fn npmi_hand_cases() {
        assert!((npmi(&toy(10, 5, 5, 5), 0, 1, 1e-12) - 1.0).abs() < 1e-9);
        assert!(npmi(&toy(10, 5, 4, 2), 0, 1, 1e-12).abs() < 1e-9);
        let expected = (4e-12f64).ln() / -(1e-12f64).ln();
        assert!((npmi(&toy(10, 5, 5, 0), 0, 1, 1e-12) - expected).abs() < 1e-9);
        assert!((expected + 0.95).abs() < 0.01);
        assert_eq!(npmi(&toy(10, 0, 5, 0), 0, 1, 1e-12), 0.0);
        assert_eq!(npmi(&toy(4, 4, 4, 4), 0, 1, 1e-12), 1.0);
    }

    #[test]
    fn perfect_cooccurrence_scores_one() {
        let words: Vec<u32> = (0..10).collect();
        let docs: Vec<Vec<u32>> = (0..5).map(|_| words.clone()).collect();
        let s = stats_of(&docs, &words, 110);
        let score = cv_topic(&s, &words, &CoherenceConfig::default()).unwrap();
        assert!((score - 1.0).abs() < 1e-6);
    }

    #[test]
    fn two_word_hand_case() {
        // windows: {a,b}, {a}, {b}, {a,b}: P_a = P_b = 1/2 + ... all = 3/4, P_ab = 1/2
        let docs = vec![vec![0, 1], vec![0], vec![1], vec![0, 1]];
        let s = stats_of(&docs, &[0, 1], 110);
        let eps = 1e-12;
        let self_npmi = ((0.75 + eps) / 0.5625f64).ln() / -(0.75f64 + eps).ln();
        let cross = ((0.5 + eps) / 0.5625f64).ln() / -(0.5f64 + eps).ln();
        let v1 = [self_npmi.min(1.0), cross];
        let v2 = [cross, self_npmi.min(1.0)];
        let total = [v1[0] + v2[0], v1[1] + v2[1]];
        let expected = (cosine(&v1, &total) + cosine(&v2, &total)) / 2.0;
        let got = cv_topic(&s, &[0, 1], &CoherenceConfig::default()).unwrap();
        assert!((got - expected).abs() < 1e-9);
        let swapped = cv_topic(&s, &[1, 0], &CoherenceConfig::default()).unwrap();
        assert!((got - swapped).abs() < 1e-12);
    }

    #[test]
    fn model_mean_and_exclusion() {
        let docs = vec![vec![0, 1, 2], vec![0, 1], vec![2, 3]];
        let cfg = CoherenceConfig::default();
        let topics = vec![(0, vec![0, 1]), (1, vec![2, OOV])];
        let r = cv_model(docs.iter().cloned().map(Ok), &topics, &cfg).unwrap();
        assert_eq!(r.excluded, vec![1]);
        assert_eq!(r.per_topic.len(), 1);
        assert_eq!(r.mean, r.per_topic[0].score);
        let dup = vec![(0, vec![0, 1]), (1, vec![0, 1])];
        let r2 = cv_model(docs.iter().cloned().map(Ok), &dup, &cfg).unwrap();
        assert!((r2.mean - r.mean).abs() < 1e-15);
        assert!(cv_model(docs.into_iter().map(Ok), &[(0, vec![OOV])], &cfg).is_err());
    }

    #[test]
    fn sweep_ties_and_failures() {
        let r = sweep(&[6, 2, 4], |k| if k == 6 { Err(Error::invalid("boom")) } else { Ok(0.5) }).unwrap();
        assert_eq!(r.argmax, Some(2));
        assert_eq!(r.table.iter().map(|e| e.k).collect::<Vec<_>>(), vec![2, 4, 6]);
        assert!(r.table[2].error.is_some());
        assert_eq!(sweep(&[7], |_| Ok(0.1)).unwrap().argmax, Some(7));
        assert!(sweep(&[], |_| Ok(0.0)).is_err());
    }

    #[test]
    fn k_grid_parsing() {
        assert_eq!(parse_k_grid("2:10:1").unwrap(), (2..=10).collect::<Vec<_>>());
        assert_eq!(parse_k_grid("5:50:5").unwrap().len(), 10);
        assert_eq!(parse_k_grid("3,7").unwrap(), vec![3, 7]);
        assert!(parse_k_grid("5:2:1").is_err());
        assert!(parse_k_grid("0:4").is_err());
        assert!(parse_k_grid("x").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn corpus() -> impl Strategy<Value = Vec<Vec<u32>>> {
            prop::collection::vec(prop::collection::vec(prop_oneof![0u32..8, Just(OOV)], 0..60), 1..20)
        }

        proptest! {
            #[test]
            fn streaming_matches_enumeration(docs in corpus(), w in 1usize..15) {
                let words: Vec<u32> = (0..6).collect();
                let s = stats_of(&docs, &words, w);
                let (n, term, pair) = brute(&docs, &words, w);
                prop_assert_eq!(s.window_count, n);
                for &a in &words {
                    prop_assert_eq!(s.term(a), term.get(&a).copied().unwrap_or(0));
                    for &b in &words {
                        if a < b {
                            let p = s.pair(a, b);
                            prop_assert_eq!(p, pair.get(&(a, b)).copied().unwrap_or(0));
                            prop_assert!(p <= s.term(a).min(s.term(b)));
                        }
                    }
                }
            }

            #[test]
            fn npmi_and_cv_ranges(docs in corpus(), w in 1usize..15) {
                let words: Vec<u32> = (0..6).collect();
                let s = stats_of(&docs, &words, w);
                for &a in &words {
                    for &b in &words {
                        let v = npmi(&s, a, b, 1e-12);
                        prop_assert!((-1.0..=1.0 + 1e-12).contains(&v));
                    }
                }
                let c = cv_topic(&s, &words, &CoherenceConfig::default()).unwrap();
                prop_assert!((-1.0..=1.0 + 1e-12).contains(&c));
            }
        }
    }
}
