//! Embedding-cluster track: incremental PCA followed by mini-batch k-means,
//! both fed in fixed-size batches straight from an embedding file.

mod kmeans;
mod pca;

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use kmeans::KMeansState;
pub use pca::PcaState;

use crate::embedstore::{read_embeddings, EmbeddingRecord};
use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k: usize,
    pub n_components: usize,
    pub seed: u64,
    pub batch_size: usize,
    /// L2-normalize embeddings before reduction.
    pub normalize: bool,
    /// Passes of mini-batch k-means over the reduced stream.
    pub kmeans_epochs: usize,
}

impl ClusterConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            n_components: 5,
            seed: 42,
            batch_size: 4096,
            normalize: false,
            kmeans_epochs: 1,
        }
    }
}

/// Fitted reduction + clustering state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub normalize: bool,
    pub pca: PcaState,
    pub kmeans: KMeansState,
}

impl ClusterModel {
    /// In-memory size of the numeric state (8 bytes per value); depends
    /// only on dim, n_components and k once fitted.
    pub fn state_bytes(&self) -> usize {
        let pca = &self.pca;
        let values = pca.mean.len()
            + pca.components.iter().map(Vec::len).sum::<usize>()
            + pca.singular_values.len()
            + 1
            + self.kmeans.centroids.iter().map(Vec::len).sum::<usize>()
            + self.kmeans.per_centroid_counts.len()
            + 1;
        values * 8
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        serde_json::to_vec_pretty(self).map_err(|e| Error::json("<cluster model>", e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).at(path)?;
        serde_json::from_slice(&raw).map_err(|e| Error::json(path, e))
    }

    pub fn prepare(&self, records: &[EmbeddingRecord]) -> Vec<Vec<f64>> {
        prepare_rows(records, self.normalize)
    }

    pub fn assign(&self, records: &[EmbeddingRecord]) -> Result<Vec<u32>> {
        let reduced = self.pca.transform(&self.prepare(records))?;
        self.kmeans.assign(&reduced)
    }
}

fn prepare_rows(records: &[EmbeddingRecord], normalize: bool) -> Vec<Vec<f64>> {
    records
        .iter()
        .map(|r| {
            let mut row: Vec<f64> = r.vector.iter().map(|&x| x as f64).collect();
            if normalize {
                let n = crate::math::norm(&row);
                if n > 0.0 {
                    row.iter_mut().for_each(|x| *x /= n);
                }
            }
            row
        })
        .collect()
}

/// Reads the embedding file in batches of `batch_size`.
fn for_each_batch(
    path: &Path,
    batch_size: usize,
    mut f: impl FnMut(Vec<EmbeddingRecord>) -> Result<()>,
) -> Result<u64> {
    let mut reader = read_embeddings(path)?;
    let mut seen = 0;
    loop {
        let batch = reader.next_batch(batch_size)?;
        if batch.is_empty() {
            return Ok(seen);
        }
        seen += batch.len() as u64;
        f(batch)?;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub k: usize,
    pub count: u64,
    /// Documents per label, indexed by label.
    pub label_counts: Vec<u64>,
}

/// Fits the reduction and clustering stages, then labels every record.
///
/// Phase 1 fits PCA over the whole stream. Phase 2 transforms and feeds
/// k-means for `kmeans_epochs` passes. A final pass assigns each record with
/// the finished centroids and writes the `(doc_id, label)` table. Only one
/// batch of vectors is resident at a time.
pub fn fit_pipeline(
    embeddings: &Path,
    config: &ClusterConfig,
    labels_out: &Path,
) -> Result<(ClusterModel, LabelSummary)> {
    if config.batch_size == 0 || config.kmeans_epochs == 0 {
        return Err(Error::invalid("batch_size and kmeans_epochs must be at least 1"));
    }
    let dim = read_embeddings(embeddings)?.header().dim as usize;
    let mut pca = PcaState::new(config.n_components, dim)?;
    let mut kmeans = KMeansState::new(config.k, config.seed)?;

    let seen = for_each_batch(embeddings, config.batch_size, |batch| {
        pca.partial_fit(&prepare_rows(&batch, config.normalize))
    })?;
    if seen == 0 {
        return Err(Error::invalid("embedding file holds no records"));
    }
    for _ in 0..config.kmeans_epochs {
        for_each_batch(embeddings, config.batch_size, |batch| {
            let reduced = pca.transform(&prepare_rows(&batch, config.normalize))?;
            kmeans.partial_fit(&reduced)
        })?;
    }

    let model = ClusterModel {
        normalize: config.normalize,
        pca,
        kmeans,
    };
    let mut writer = LabelWriter::create(labels_out)?;
    let mut label_counts = vec![0u64; config.k];
    for_each_batch(embeddings, config.batch_size, |batch| {
        let labels = model.assign(&batch)?;
        for (rec, label) in batch.iter().zip(labels) {
            label_counts[label as usize] += 1;
            writer.push(rec.tweet_id, label)?;
        }
        Ok(())
    })?;
    let count = writer.finish()?;
    Ok((
        model,
        LabelSummary {
            k: config.k,
            count,
            label_counts,
        },
    ))
}

// ---------------------------------------------------------------------------
// Label table: raw little-endian (doc_id u64, label u32) pairs.

pub const LABEL_RECORD_LEN: u64 = 12;

pub struct LabelWriter {
    path: std::path::PathBuf,
    out: BufWriter<File>,
    count: u64,
}

impl LabelWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(File::create(path).at(path)?),
            count: 0,
        })
    }

    pub fn push(&mut self, doc_id: u64, label: u32) -> Result<()> {
        self.out.write_all(&doc_id.to_le_bytes()).at(&self.path)?;
        self.out.write_all(&label.to_le_bytes()).at(&self.path)?;
        self.count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush().at(&self.path)?;
        Ok(self.count)
    }
}

pub fn write_labels(path: &Path, labels: &[(u64, u32)]) -> Result<()> {
    let mut w = LabelWriter::create(path)?;
    for &(id, l) in labels {
        w.push(id, l)?;
    }
    w.finish().map(|_| ())
}

pub fn read_labels(path: &Path) -> Result<Vec<(u64, u32)>> {
    let mut raw = Vec::new();
    BufReader::new(File::open(path).at(path)?)
        .read_to_end(&mut raw)
        .at(path)?;
    if !(raw.len() as u64).is_multiple_of(LABEL_RECORD_LEN) {
        return Err(Error::corrupt(path, "label table size is not a multiple of 12 bytes"));
    }
    Ok(raw
        .chunks_exact(LABEL_RECORD_LEN as usize)
        .map(|c| {
            (
                u64::from_le_bytes(c[..8].try_into().unwrap()),
                u32::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect())
}

/// Id-keyed label lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Labels {
    map: HashMap<u64, u32>,
}

impl Labels {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, u32)>) -> Result<Self> {
        let mut map = HashMap::new();
        for (id, l) in pairs {
            if map.insert(id, l).is_some() {
                return Err(Error::invalid(format!("document {id} labelled twice")));
            }
        }
        Ok(Self { map })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_pairs(read_labels(path)?)
    }

    pub fn get(&self, doc_id: u64) -> Option<u32> {
        self.map.get(&doc_id).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// One past the largest label in use.
    pub fn num_labels(&self) -> usize {
        self.map.values().max().map_or(0, |&m| m as usize + 1)
    }

    pub fn counts(&self) -> BTreeMap<u32, u64> {
        let mut out = BTreeMap::new();
        for &l in self.map.values() {
            *out.entry(l).or_default() += 1;
        }
        out
    }
}
