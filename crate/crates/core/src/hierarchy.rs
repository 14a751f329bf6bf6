//! Topic hierarchy: average-linkage dendrogram over c-TF-IDF vectors,
//! reduction to a target topic count, and the 2-D inter-topic map.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::math::{dot, norm};
use crate::textprep::Vocabulary;
use crate::topicrep::{represent, ClassTermMatrix, TopicRepresentation};

/// Cosine similarity between every pair of topic vectors. A zero vector gets
/// zero similarity to everything else; the diagonal is always 1.
pub fn similarity_matrix(reps: &[TopicRepresentation]) -> Result<Vec<Vec<f64>>> {
    let k = reps.len();
    if k < 2 {
        return Err(Error::invalid("need at least two topics"));
    }
    let norms: Vec<f64> = reps.iter().map(|r| norm(&r.ctfidf_vector)).collect();
    for (r, &n) in reps.iter().zip(&norms) {
        if n == 0.0 {
            log::warn!("topic {} has an all-zero vector; similarity set to 0", r.topic_id);
        }
    }
    let mut sim = vec![vec![0.0; k]; k];
    for i in 0..k {
        sim[i][i] = 1.0;
        for j in i + 1..k {
            let s = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                dot(&reps[i].ctfidf_vector, &reps[j].ctfidf_vector) / (norms[i] * norms[j])
            };
            sim[i][j] = s;
            sim[j][i] = s;
        }
    }
    Ok(sim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub node: usize,
}

/// Leaves are nodes `0..leaves.len()`; merge `i` creates node `leaves.len() + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: Vec<u32>,
    pub merges: Vec<Merge>,
}

/// Average-linkage agglomeration on distance `1 - similarity`. At equal
/// distance the pair with the lowest (left, right) node ids merges first.
pub fn build_dendrogram(sim: &[Vec<f64>], leaves: &[u32]) -> Result<Dendrogram> {
    let k = sim.len();
    if k < 2 || leaves.len() != k || sim.iter().any(|r| r.len() != k) {
        return Err(Error::invalid("similarity matrix must be square with k >= 2"));
    }
    let total = 2 * k - 1;
    let mut dist = vec![vec![0.0f64; total]; total];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                dist[i][j] = (1.0 - sim[i][j]).max(0.0);
            }
        }
    }
    let mut size = vec![1usize; total];
    let mut active: Vec<usize> = (0..k).collect();
    let mut merges = Vec::with_capacity(k - 1);
    for step in 0..k - 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                if dist[i][j] < best.0 {
                    best = (dist[i][j], i, j);
                }
            }
        }
        let (height, left, right) = best;
        let node = k + step;
        size[node] = size[left] + size[right];
        active.retain(|&x| x != left && x != right);
        let (nl, nr) = (size[left] as f64, size[right] as f64);
        for &x in &active {
            let d = (nl * dist[left][x] + nr * dist[right][x]) / (nl + nr);
            dist[node][x] = d;
            dist[x][node] = d;
        }
        active.push(node);
        merges.push(Merge {
            left,
            right,
            height,
            node,
        });
    }
    Ok(Dendrogram {
        leaves: leaves.to_vec(),
        merges,
    })
}

impl Dendrogram {
    /// Maps each leaf index to a cluster in `0..target`, applying the first
    /// `k - target` merges. Clusters are numbered by their smallest leaf.
    pub fn cut(&self, target: usize) -> Result<Vec<u32>> {
        let k = self.leaves.len();
        if target == 0 || target > k {
            return Err(Error::invalid(format!("target must lie in 1..={k}, got {target}")));
        }
        let mut owner: Vec<usize> = (0..2 * k - 1).collect();
        for m in &self.merges[..k - target] {
            owner[m.left] = m.node;
            owner[m.right] = m.node;
        }
        let root = |mut n: usize| {
            while owner[n] != n {
                n = owner[n];
            }
            n
        };
        let roots: Vec<usize> = (0..k).map(root).collect();
        let mut ids: Vec<Option<u32>> = vec![None; 2 * k - 1];
        let mut next = 0;
        Ok(roots
            .iter()
            .map(|&r| {
                *ids[r].get_or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let raw = serde_json::to_vec_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, raw).at(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).at(path)?;
        serde_json::from_slice(&raw).map_err(|e| Error::json(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTopics {
    /// Old topic index → new topic id.
    pub mapping: Vec<u32>,
    pub labels: Vec<(u64, u32)>,
    pub matrix: ClassTermMatrix,
    pub representations: Vec<TopicRepresentation>,
}

/// Cuts the dendrogram at `target` topics, relabels documents, and rebuilds
/// the representations from the summed class counts.
pub fn reduce_topics(
    labels: &[(u64, u32)],
    matrix: &ClassTermMatrix,
    dendrogram: &Dendrogram,
    target: usize,
) -> Result<ReducedTopics> {
    let k = matrix.num_classes();
    if dendrogram.leaves.len() != k {
        return Err(Error::invalid("dendrogram and class matrix disagree on topic count"));
    }
    let mapping = dendrogram.cut(target)?;
    let labels = labels
        .iter()
        .map(|&(id, l)| {
            mapping
                .get(l as usize)
                .map(|&m| (id, m))
                .ok_or_else(|| Error::invalid(format!("document {id} has label {l}, outside 0..{k}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let as_usize: Vec<usize> = mapping.iter().map(|&m| m as usize).collect();
    let merged = matrix.merge(&as_usize, target)?;
    let representations = represent(&merged)?;
    Ok(ReducedTopics {
        mapping,
        labels,
        matrix: merged,
        representations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub topic_id: u32,
    pub x: f64,
    pub y: f64,
    pub size: u64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMap2D {
    pub topics: Vec<MapPoint>,
}

/// Projects the topic vectors onto their two leading principal axes, using
/// the eigendecomposition of the centred k×k Gram matrix. Each axis is
/// signed so that its largest-magnitude coordinate is positive.
pub fn intertopic_map(reps: &[TopicRepresentation], vocab: &Vocabulary) -> Result<TopicMap2D> {
    let k = reps.len();
    if k < 2 {
        return Err(Error::invalid("an inter-topic map needs at least two topics"));
    }
    let v = reps[0].ctfidf_vector.len();
    let mut mean = vec![0.0; v];
    for r in reps {
        for (m, x) in mean.iter_mut().zip(&r.ctfidf_vector) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);
    let centred: Vec<Vec<f64>> = reps
        .iter()
        .map(|r| r.ctfidf_vector.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&centred[i], &centred[j]));
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    // Coordinates are projections onto the principal axis in term space,
    // so identical topic vectors land on identical points.
    let axis = |n: usize| -> Vec<f64> {
        let i = order[n];
        let lambda = eig.eigenvalues[i];
        if lambda <= 0.0 {
            return vec![0.0; k];
        }
        let mut dir = vec![0.0; v];
        for (r, row) in centred.iter().enumerate() {
            let u = eig.eigenvectors[(r, i)] / lambda.sqrt();
            for (d, x) in dir.iter_mut().zip(row) {
                *d += u * x;
            }
        }
        let col: Vec<f64> = centred.iter().map(|row| dot(row, &dir)).collect();
        let pivot = col.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        if pivot < 0.0 {
            col.iter().map(|x| -x).collect()
        } else {
            col
        }
    };
    let (xs, ys) = (axis(0), axis(1));
    Ok(TopicMap2D {
        topics: reps
            .iter()
            .enumerate()
            .map(|(i, r)| MapPoint {
                topic_id: r.topic_id,
                x: xs[i],
                y: ys[i],
                size: r.size,
                label: r.terms.iter().take(3).map(|&(t, _)| vocab.term(t)).collect::<Vec<_>>().join(", "),
            })
            .collect(),
    })
}
