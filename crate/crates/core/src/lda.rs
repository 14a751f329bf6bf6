//! Online variational Bayes for LDA.
//!
//! Mini-batches go through a data-parallel E-step whose per-document results
//! are reduced in document order, followed by one stochastic M-step with
//! learning rate ρ_t = (τ0 + t)^(−κ). Model state is the K×V topic-term
//! matrix λ plus scalars, so memory does not grow with the corpus.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::math::exp_dirichlet_expectation;
use crate::textprep::{BowDoc, Vocabulary};

pub const MODEL_MAGIC: &[u8; 4] = b"FSLD";
pub const MODEL_VERSION: u32 = 1;
/// Bytes before the λ payload.
pub const MODEL_HEADER_LEN: usize = 84;

/// Training hyperparameters. `None` priors resolve to 1/K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub tau0: f64,
    pub kappa: f64,
    pub batch_size: usize,
    pub passes: usize,
    pub seed: u64,
    pub e_step_tol: f64,
    pub e_step_max_iter: u32,
}

impl LdaConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            alpha: None,
            eta: None,
            tau0: 64.0,
            kappa: 0.7,
            batch_size: 4096,
            passes: 1,
            seed: 42,
            e_step_tol: 1e-3,
            e_step_max_iter: 100,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.batch_size == 0 || self.passes == 0 {
            return Err(Error::invalid("batch_size and passes must be at least 1"));
        }
        if !(self.kappa > 0.5 && self.kappa <= 1.0) {
            return Err(Error::invalid("kappa must lie in (0.5, 1]"));
        }
        if !(self.tau0 > 0.0) {
            return Err(Error::invalid("tau0 must be positive"));
        }
        for (name, v) in [("alpha", self.alpha), ("eta", self.eta)] {
            if v.is_some_and(|v| !(v > 0.0)) {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Variational posterior for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocEStep {
    /// γ, length K.
    pub gamma: Vec<f64>,
    /// Per distinct term: (term id, Σ n_dw φ_dwk over k).
    pub sstats: Vec<(u32, Vec<f64>)>,
    pub iterations: u32,
}

/// E-step output for a mini-batch.
#[derive(Debug, Clone)]
pub struct EStepResult {
    pub gamma: Vec<Vec<f64>>,
    /// K×V row-major.
    pub sstats: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LdaModel {
    k: usize,
    v: usize,
    lambda: Vec<f64>,
    alpha: f64,
    eta: f64,
    tau0: f64,
    kappa: f64,
    e_step_tol: f64,
    e_step_max_iter: u32,
    seed: u64,
    updates_seen: u64,
    corpus_size: u64,
    /// exp(E[log β]), recomputed after every change to λ.
    exp_elog_beta: Vec<f64>,
}

impl PartialEq for LdaModel {
    fn eq(&self, other: &Self) -> bool {
        self.to_bytes() == other.to_bytes()
    }
}

/// Learning rate for update number `t`.
pub fn learning_rate(tau0: f64, kappa: f64, t: u64) -> f64 {
    (tau0 + t as f64).powf(-kappa)
}

impl LdaModel {
    /// Fresh model with λ drawn from Gamma(100, 0.01).
    pub fn init(config: &LdaConfig, vocab_size: usize, corpus_size: u64) -> Result<Self> {
        config.validate()?;
        if vocab_size == 0 {
            return Err(Error::invalid("vocabulary is empty"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let gamma = Gamma::new(100.0, 0.01).expect("valid gamma parameters");
        let lambda = (0..config.k * vocab_size).map(|_| gamma.sample(&mut rng)).collect();
        Self::from_lambda(config, vocab_size, corpus_size, lambda)
    }

    /// Model with an explicit λ (row-major K×V, all entries positive).
    pub fn from_lambda(config: &LdaConfig, vocab_size: usize, corpus_size: u64, lambda: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if lambda.len() != config.k * vocab_size {
            return Err(Error::invalid("lambda must have K·V entries"));
        }
        if lambda.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::invalid("lambda entries must be positive and finite"));
        }
        let prior = 1.0 / config.k as f64;
        let mut model = Self {
            k: config.k,
            v: vocab_size,
            lambda,
            alpha: config.alpha.unwrap_or(prior),
            eta: config.eta.unwrap_or(prior),
            tau0: config.tau0,
            kappa: config.kappa,
            e_step_tol: config.e_step_tol,
            e_step_max_iter: config.e_step_max_iter,
            seed: config.seed,
            updates_seen: 0,
            corpus_size,
            exp_elog_beta: Vec::new(),
        };
        model.refresh_cache();
        Ok(model)
    }

    fn refresh_cache(&mut self) {
        let v = self.v;
        let mut out = vec![0.0; self.lambda.len()];
        out.par_chunks_mut(v)
            .zip(self.lambda.par_chunks(v))
            .for_each(|(o, row)| exp_dirichlet_expectation(row, o));
        self.exp_elog_beta = out;
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.v
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn updates_seen(&self) -> u64 {
        self.updates_seen
    }

    pub fn corpus_size(&self) -> u64 {
        self.corpus_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lambda_row(&self, topic: usize) -> &[f64] {
        &self.lambda[topic * self.v..(topic + 1) * self.v]
    }

    /// ρ for the next M-step.
    pub fn next_learning_rate(&self) -> f64 {
        learning_rate(self.tau0, self.kappa, self.updates_seen)
    }

    /// Serialized size of the model state; depends only on K and V.
    pub fn state_bytes(&self) -> usize {
        MODEL_HEADER_LEN + self.lambda.len() * 8
    }

    fn check_doc(&self, bow: &BowDoc) -> Result<()> {
        match bow.counts.iter().find(|&&(w, _)| w as usize >= self.v) {
            Some(&(w, _)) => Err(Error::invalid(format!(
                "document {} uses term id {w} outside vocabulary of size {}",
                bow.doc_id, self.v
            ))),
            None => Ok(()),
        }
    }

    /// Fixed-point iteration of γ and φ for one document under the current λ.
    pub fn e_step_doc(&self, bow: &BowDoc) -> DocEStep {
        let k = self.k;
        let v = self.v;
        if bow.counts.is_empty() {
            return DocEStep {
                gamma: vec![self.alpha; k],
                sstats: Vec::new(),
                iterations: 0,
            };
        }
        let eb = &self.exp_elog_beta;
        let start = self.alpha + bow.total_tokens as f64 / k as f64;
        let mut gamma = vec![start; k];
        let mut exp_theta = vec![0.0; k];
        exp_dirichlet_expectation(&gamma, &mut exp_theta);
        let mut phinorm = vec![0.0; bow.counts.len()];
        let update_phinorm = |exp_theta: &[f64], phinorm: &mut [f64]| {
            for (p, &(w, _)) in phinorm.iter_mut().zip(&bow.counts) {
                let w = w as usize;
                *p = (0..k).map(|t| exp_theta[t] * eb[t * v + w]).sum::<f64>() + 1e-100;
            }
        };
        update_phinorm(&exp_theta, &mut phinorm);

        let mut last = vec![0.0; k];
        let mut iterations = 0;
        while iterations < self.e_step_max_iter {
            iterations += 1;
            last.copy_from_slice(&gamma);
            for (t, g) in gamma.iter_mut().enumerate() {
                let row = &eb[t * v..(t + 1) * v];
                let acc: f64 = bow
                    .counts
                    .iter()
                    .zip(&phinorm)
                    .map(|(&(w, n), &p)| n as f64 / p * row[w as usize])
                    .sum();
                *g = self.alpha + exp_theta[t] * acc;
            }
            exp_dirichlet_expectation(&gamma, &mut exp_theta);
            update_phinorm(&exp_theta, &mut phinorm);
            let change: f64 =
                gamma.iter().zip(&last).map(|(a, b)| (a - b).abs()).sum::<f64>() / k as f64;
            if change < self.e_step_tol {
                break;
            }
        }

        let sstats = bow
            .counts
            .iter()
            .zip(&phinorm)
            .map(|(&(w, n), &p)| {
                let scale = n as f64 / p;
                let col = (0..k)
                    .map(|t| exp_theta[t] * scale * eb[t * v + w as usize])
                    .collect();
                (w, col)
            })
            .collect();
        DocEStep {
            gamma,
            sstats,
            iterations,
        }
    }

    /// Data-parallel E-step; the reduction runs in document order so results
    /// are identical for any thread count.
    pub fn e_step_batch(&self, docs: &[BowDoc]) -> Result<EStepResult> {
        for d in docs {
            self.check_doc(d)?;
        }
        let per_doc: Vec<DocEStep> = docs.par_iter().map(|d| self.e_step_doc(d)).collect();
        let mut sstats = vec![0.0; self.k * self.v];
        let mut gamma = Vec::with_capacity(docs.len());
        for doc in per_doc {
            for (w, col) in &doc.sstats {
                for (t, x) in col.iter().enumerate() {
                    sstats[t * self.v + *w as usize] += x;
                }
            }
            gamma.push(doc.gamma);
        }
        Ok(EStepResult { gamma, sstats })
    }

    /// λ ← (1 − ρ_t)λ + ρ_t(η + (D / batch_doc_count)·sstats), then t ← t + 1.
    pub fn m_step(&mut self, sstats: &[f64], batch_doc_count: usize) -> Result<()> {
        if batch_doc_count == 0 {
            return Err(Error::invalid("batch_doc_count must be at least 1"));
        }
        if sstats.len() != self.lambda.len() {
            return Err(Error::invalid("sstats must have K·V entries"));
        }
        let rho = self.next_learning_rate();
        let scale = self.corpus_size as f64 / batch_doc_count as f64;
        let eta = self.eta;
        for (l, &s) in self.lambda.iter_mut().zip(sstats) {
            *l = (1.0 - rho) * *l + rho * (eta + scale * s);
        }
        self.updates_seen += 1;
        self.refresh_cache();
        Ok(())
    }

    /// One E-step plus one M-step over a mini-batch.
    pub fn update_batch(&mut self, docs: &[BowDoc]) -> Result<()> {
        if docs.is_empty() {
            return Err(Error::invalid("empty mini-batch"));
        }
        let estep = self.e_step_batch(docs)?;
        self.m_step(&estep.sstats, docs.len())
    }

    /// Topic-term distribution of one topic (normalized λ row).
    pub fn topic_distribution(&self, topic: usize) -> Vec<f64> {
        let row = self.lambda_row(topic);
        let total: f64 = row.iter().sum();
        row.iter().map(|x| x / total).collect()
    }

    /// Top `n` (term id, probability) pairs; ties go to the lower term id.
    pub fn topic_top_terms(&self, topic: usize, n: usize) -> Result<Vec<(u32, f64)>> {
        if topic >= self.k {
            return Err(Error::invalid(format!("topic {topic} out of range 0..{}", self.k)));
        }
        let mut ranked: Vec<(u32, f64)> = self
            .topic_distribution(topic)
            .into_iter()
            .enumerate()
            .map(|(i, p)| (i as u32, p))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(n);
        Ok(ranked)
    }

    /// Document-topic proportions γ / Σγ.
    pub fn infer_theta(&self, bow: &BowDoc) -> Result<Vec<f64>> {
        self.check_doc(bow)?;
        let gamma = self.e_step_doc(bow).gamma;
        let total: f64 = gamma.iter().sum();
        Ok(gamma.into_iter().map(|g| g / total).collect())
    }

    // -- persistence --------------------------------------------------------

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.state_bytes());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        out.extend_from_slice(&(self.v as u32).to_le_bytes());
        for x in [self.alpha, self.eta, self.tau0, self.kappa, self.e_step_tol] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&self.e_step_max_iter.to_le_bytes());
        for x in [self.seed, self.updates_seen, self.corpus_size] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        debug_assert_eq!(out.len(), MODEL_HEADER_LEN);
        for x in &self.lambda {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path).at(path)?);
        w.write_all(&self.to_bytes()).at(path)?;
        w.flush().at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut raw = Vec::new();
        BufReader::new(File::open(path).at(path)?)
            .read_to_end(&mut raw)
            .at(path)?;
        Self::from_bytes(&raw).map_err(|msg| Error::corrupt(path, msg))
    }

    fn from_bytes(raw: &[u8]) -> std::result::Result<Self, String> {
        if raw.len() < MODEL_HEADER_LEN || &raw[..4] != MODEL_MAGIC {
            return Err("not an LDA model file".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(raw[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(raw[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(raw[o..o + 8].try_into().unwrap());
        if u32_at(4) != MODEL_VERSION {
            return Err(format!("unsupported model version {}", u32_at(4)));
        }
        let k = u32_at(8) as usize;
        let v = u32_at(12) as usize;
        if raw.len() != MODEL_HEADER_LEN + k * v * 8 {
            return Err("model payload size does not match header".into());
        }
        let config = LdaConfig {
            k,
            alpha: Some(f64_at(16)),
            eta: Some(f64_at(24)),
            tau0: f64_at(32),
            kappa: f64_at(40),
            e_step_tol: f64_at(48),
            e_step_max_iter: u32_at(56),
            seed: u64_at(60),
            batch_size: 1,
            passes: 1,
        };
        let lambda = raw[MODEL_HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut model =
            Self::from_lambda(&config, v, u64_at(76), lambda).map_err(|e| e.to_string())?;
        model.updates_seen = u64_at(68);
        Ok(model)
    }

    pub fn summary(&self, vocab: &Vocabulary, top_n: usize) -> LdaSummary {
        LdaSummary {
            k: self.k,
            vocab_size: self.v,
            alpha: self.alpha,
            eta: self.eta,
            tau0: self.tau0,
            kappa: self.kappa,
            seed: self.seed,
            updates_seen: self.updates_seen,
            corpus_size: self.corpus_size,
            topics: (0..self.k)
                .map(|t| LdaTopicSummary {
                    topic_id: t,
                    terms: self
                        .topic_top_terms(t, top_n)
                        .expect("topic in range")
                        .into_iter()
                        .map(|(w, p)| (vocab.term(w).to_string(), p))
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaTopicSummary {
    pub topic_id: usize,
    pub terms: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaSummary {
    pub k: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub eta: f64,
    pub tau0: f64,
    pub kappa: f64,
    pub seed: u64,
    pub updates_seen: u64,
    pub corpus_size: u64,
    pub topics: Vec<LdaTopicSummary>,
}

/// A re-iterable stream of encoded documents.
pub trait BowSource {
    fn docs(&self) -> Result<Box<dyn Iterator<Item = Result<BowDoc>> + '_>>;
}

impl BowSource for [BowDoc] {
    fn docs(&self) -> Result<Box<dyn Iterator<Item = Result<BowDoc>> + '_>> {
        Ok(Box::new(self.iter().cloned().map(Ok)))
    }
}

impl BowSource for Vec<BowDoc> {
    fn docs(&self) -> Result<Box<dyn Iterator<Item = Result<BowDoc>> + '_>> {
        self.as_slice().docs()
    }
}

/// Trains a model over `passes` sweeps of the stream, one M-step per batch.
///
/// `corpus_size` is the D of the M-step scaling term and stays fixed across
/// passes. Only one batch of documents is held at a time.
pub fn fit_stream<S: BowSource + ?Sized>(
    source: &S,
    vocab_size: usize,
    corpus_size: u64,
    config: &LdaConfig,
) -> Result<LdaModel> {
    if corpus_size == 0 {
        return Err(Error::invalid("cannot train on an empty corpus"));
    }
    let mut model = LdaModel::init(config, vocab_size, corpus_size)?;
    let mut batch = Vec::with_capacity(config.batch_size.min(1 << 16));
    for pass in 0..config.passes {
        let mut seen = 0u64;
        for doc in source.docs()? {
            batch.push(doc?);
            seen += 1;
            if batch.len() == config.batch_size {
                model.update_batch(&batch)?;
                batch.clear();
            }
        }
        if !batch.is_empty() {
            model.update_batch(&batch)?;
            batch.clear();
        }
        if seen == 0 {
            return Err(Error::invalid("cannot train on an empty corpus"));
        }
        log::debug!("pass {} done, {} updates", pass + 1, model.updates_seen);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(k: usize, alpha: f64) -> LdaConfig {
        LdaConfig {
            alpha: Some(alpha),
            eta: Some(alpha),
            ..LdaConfig::new(k)
        }
    }

    fn disjoint_model() -> LdaModel {
        // topic 0 puts its mass on term 0 (a), topic 1 on term 1 (b)
        LdaModel::from_lambda(&config(2, 0.1), 2, 100, vec![1000.0, 1e-3, 1e-3, 1000.0]).unwrap()
    }

    #[test]
    fn single_topic_absorbs_every_token() {
        let model = LdaModel::init(&config(1, 0.1), 5, 10).unwrap();
        let doc = BowDoc::from_counts(1, [(0, 3), (2, 4)]);
        let e = model.e_step_doc(&doc);
        assert!((e.gamma[0] - 7.1).abs() < 1e-9);
        assert_eq!(model.infer_theta(&doc).unwrap(), vec![1.0]);
    }

    #[test]
    fn empty_doc_gets_prior() {
        let model = LdaModel::init(&config(3, 0.5), 4, 10).unwrap();
        let e = model.e_step_doc(&BowDoc::from_counts(1, []));
        assert_eq!(e.gamma, vec![0.5, 0.5, 0.5]);
        assert!(e.sstats.is_empty());
        let model = LdaModel::init(&config(4, 0.5), 4, 10).unwrap();
        assert_eq!(model.infer_theta(&BowDoc::from_counts(1, [])).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn disjoint_supports_route_tokens() {
        let model = disjoint_model();
        let e = model.e_step_doc(&BowDoc::from_counts(1, [(0, 2)]));
        assert!((e.gamma[0] - 0.1 - 2.0).abs() < 1e-6, "{:?}", e.gamma);
        assert!((e.gamma[1] - 0.1).abs() < 1e-6);
        let theta = model.infer_theta(&BowDoc::from_counts(1, [(0, 2)])).unwrap();
        assert!(theta[0] > 0.9);
    }

    #[test]
    fn sstats_conserve_tokens() {
        let model = LdaModel::init(&config(4, 0.25), 6, 10).unwrap();
        let docs = vec![
            BowDoc::from_counts(1, [(0, 3), (5, 1)]),
            BowDoc::from_counts(2, [(1, 2), (2, 2), (3, 7)]),
            BowDoc::from_counts(3, []),
        ];
        let e = model.e_step_batch(&docs).unwrap();
        let total: f64 = e.sstats.iter().sum();
        assert!((total - 15.0).abs() < 1e-6);
        assert!(e.sstats.iter().all(|&x| x >= 0.0));
        for g in e.gamma.iter().flatten() {
            assert!(*g >= 0.25);
        }
    }

    #[test]
    fn learning_rate_schedule() {
        let rho0 = learning_rate(64.0, 0.7, 0);
        assert!((rho0 - 64f64.powf(-0.7)).abs() < 1e-15);
        assert!((rho0 - 0.0544).abs() < 5e-5);
        let mut prev = rho0;
        for t in 1..1000 {
            let r = learning_rate(64.0, 0.7, t);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn zero_sstats_shrink_toward_eta() {
        let mut model = LdaModel::init(&config(2, 0.5), 3, 10).unwrap();
        let before = model.lambda().to_vec();
        let rho = model.next_learning_rate();
        model.m_step(&[0.0; 6], 1).unwrap();
        for (a, b) in model.lambda().iter().zip(&before) {
            assert!((a - ((1.0 - rho) * b + rho * 0.5)).abs() < 1e-12);
            assert!(*a > 0.0);
        }
        assert_eq!(model.updates_seen(), 1);
        assert!(model.m_step(&[0.0; 6], 0).is_err());
    }

    #[test]
    fn top_terms_order_and_ties() {
        let m = LdaModel::from_lambda(&config(1, 1.0), 3, 1, vec![1.0, 3.0, 2.0]).unwrap();
        let top = m.topic_top_terms(0, 10).unwrap();
        assert_eq!(top.iter().map(|t| t.0).collect::<Vec<_>>(), vec![1, 2, 0]);
        assert!((top[0].1 - 0.5).abs() < 1e-12);
        assert!((top[1].1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((top[2].1 - 1.0 / 6.0).abs() < 1e-12);
        let m = LdaModel::from_lambda(&config(1, 1.0), 2, 1, vec![2.0, 2.0]).unwrap();
        assert_eq!(m.topic_top_terms(0, 2).unwrap().iter().map(|t| t.0).collect::<Vec<_>>(), vec![0, 1]);
        assert!(m.topic_top_terms(1, 2).is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let mut model = LdaModel::init(&config(3, 0.3), 7, 50).unwrap();
        model.update_batch(&[BowDoc::from_counts(1, [(0, 1), (6, 2)])]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        model.save(&path).unwrap();
        let raw = std::fs::read(&path).unwrap();
        assert_eq!(raw.len(), model.state_bytes());
        assert_eq!(&raw[..4], b"FSLD");
        let back = LdaModel::load(&path).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.updates_seen(), 1);
        std::fs::write(&path, &raw[..raw.len() - 3]).unwrap();
        assert!(LdaModel::load(&path).is_err());
    }

    #[test]
    fn out_of_vocabulary_ids_are_rejected() {
        let model = LdaModel::init(&config(2, 0.5), 3, 10).unwrap();
        assert!(model.e_step_batch(&[BowDoc::from_counts(1, [(3, 1)])]).is_err());
    }

    #[test]
    fn empty_corpus_is_fatal() {
        let empty: Vec<BowDoc> = Vec::new();
        assert!(fit_stream(&empty, 3, 0, &LdaConfig::new(2)).is_err());
        assert!(fit_stream(&empty, 3, 5, &LdaConfig::new(2)).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn positivity_and_simplex(seed in 0u64..1000, k in 1usize..5,
                                      docs in prop::collection::vec(prop::collection::vec((0u32..8, 1u32..4), 0..6), 1..6)) {
                let cfg = LdaConfig { seed, ..config(k, 0.2) };
                let mut model = LdaModel::init(&cfg, 8, 100).unwrap();
                let docs: Vec<_> = docs.into_iter().enumerate()
                    .map(|(i, c)| BowDoc::from_counts(i as u64, c)).collect();
                for _ in 0..3 {
                    model.update_batch(&docs).unwrap();
                }
                prop_assert!(model.lambda().iter().all(|&x| x > 0.0 && x.is_finite()));
                for t in 0..k {
                    let s: f64 = model.topic_distribution(t).iter().sum();
                    prop_assert!((s - 1.0).abs() < 1e-9);
                }
                for d in &docs {
                    let theta = model.infer_theta(d).unwrap();
                    prop_assert!(theta.iter().all(|&x| x > 0.0));
                    prop_assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
