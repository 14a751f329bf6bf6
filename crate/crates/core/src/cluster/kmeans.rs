use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::squared_distance;

/// Mini-batch k-means with per-centroid learning rate 1/count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansState {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub per_centroid_counts: Vec<u64>,
    pub seed: u64,
}

/// Nearest centroid and its squared distance; ties go to the lower id.
fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(c, x);
        if d < best.1 {
            best = (i as u32, d);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, then proportional to D².
fn kmeans_plus_plus(batch: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![batch[rng.random_range(0..batch.len())].clone()];
    let mut d2: Vec<f64> = batch.iter().map(|x| squared_distance(x, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = batch.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..batch.len())
        };
        let c = batch[pick].clone();
        for (d, x) in d2.iter_mut().zip(batch) {
            *d = d.min(squared_distance(x, &c));
        }
        centroids.push(c);
    }
    centroids
}

impl KMeansState {
    pub fn new(k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        Ok(Self {
            k,
            centroids: Vec::new(),
            per_centroid_counts: vec![0; k],
            seed,
        })
    }

    pub fn is_initialized(&self) -> bool {
        !self.centroids.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.centroids.first().map(Vec::len)
    }

    /// Seeds on the first call, then assigns every row to its nearest
    /// centroid (using the centroids from the start of the batch) and moves
    /// that centroid by (x − c)/count, in row order.
    pub fn partial_fit(&mut self, batch: &[Vec<f64>]) -> Result<()> {
        if !self.is_initialized() {
            if batch.len() < self.k {
                return Err(Error::invalid(format!(
                    "first batch must seed k centroids: {} rows for k = {}",
                    batch.len(),
                    self.k
                )));
            }
            let dim = batch[0].len();
            if batch.iter().any(|r| r.len() != dim) {
                return Err(Error::invalid("rows have inconsistent dimensions"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            self.centroids = kmeans_plus_plus(batch, self.k, &mut rng);
        }
        let labels = self.assign(batch)?;
        for (x, &label) in batch.iter().zip(&labels) {
            let l = label as usize;
            self.per_centroid_counts[l] += 1;
            let eta = 1.0 / self.per_centroid_counts[l] as f64;
            for (c, v) in self.centroids[l].iter_mut().zip(x) {
                *c += eta * (v - *c);
            }
        }
        Ok(())
    }

    pub fn assign(&self, batch: &[Vec<f64>]) -> Result<Vec<u32>> {
        let dim = self.dim().ok_or_else(|| Error::invalid("k-means is not fitted"))?;
        if let Some(i) = batch.iter().position(|r| r.len() != dim) {
            return Err(Error::invalid(format!("row {i} has dimension {}, expected {dim}", batch[i].len())));
        }
        Ok(batch.par_iter().map(|x| nearest(&self.centroids, x).0).collect())
    }

    /// Sum of squared distances to the nearest centroid.
    pub fn inertia(&self, batch: &[Vec<f64>]) -> Result<f64> {
        if !self.is_initialized() {
            return Err(Error::invalid("k-means is not fitted"));
        }
        let d: Vec<f64> = batch.par_iter().map(|x| nearest(&self.centroids, x).1).collect();
        Ok(d.iter().sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_centroid_tracks_running_mean() {
        let mut km = KMeansState::new(1, 3).unwrap();
        let pts: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        for chunk in pts.chunks(8) {
            km.partial_fit(chunk).unwrap();
        }
        let mean = [24.5, pts.iter().map(|p| p[1]).sum::<f64>() / 50.0];
        assert!((km.centroids[0][0] - mean[0]).abs() < 1e-9);
        assert!((km.centroids[0][1] - mean[1]).abs() < 1e-9);
        assert_eq!(km.per_centroid_counts, vec![50]);
    }

    #[test]
    fn assignment_ties_go_to_lowest_id() {
        let km = KMeansState {
            k: 3,
            centroids: vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![5.0, 5.0]],
            per_centroid_counts: vec![1, 1, 1],
            seed: 0,
        };
        assert_eq!(km.assign(&[vec![5.0, 5.0], vec![1.0, 0.0]]).unwrap(), vec![2, 0]);
    }

    #[test]
    fn first_batch_must_cover_k() {
        let mut km = KMeansState::new(4, 0).unwrap();
        let err = km.partial_fit(&[vec![0.0], vec![1.0]]).unwrap_err().to_string();
        assert!(err.contains("first batch must seed k centroids"));
        assert!(km.assign(&[vec![0.0]]).is_err());
    }

    #[test]
    fn same_seed_same_centroids() {
        let pts: Vec<Vec<f64>> = (0..200).map(|i| vec![(i as f64 * 0.37).sin() * 10.0, (i % 7) as f64]).collect();
        let run = || {
            let mut km = KMeansState::new(5, 11).unwrap();
            for c in pts.chunks(40) {
                km.partial_fit(c).unwrap();
            }
            km
        };
        assert_eq!(run(), run());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn brute_force_min_inertia(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> f64 {
            // enumerate every labelling
            let k = centroids.len();
            let n = points.len();
            let mut best = f64::INFINITY;
            for code in 0..k.pow(n as u32) {
                let mut c = code;
                let mut total = 0.0;
                for p in points {
                    total += squared_distance(p, &centroids[c % k]);
                    c /= k;
                }
                best = best.min(total);
            }
            best
        }

        proptest! {
            #[test]
            fn assignment_minimises_inertia(
                points in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..6),
                centroids in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..4),
            ) {
                let km = KMeansState { k: centroids.len(), per_centroid_counts: vec![0; centroids.len()], centroids: centroids.clone(), seed: 0 };
                let labels = km.assign(&points).unwrap();
                let got: f64 = points.iter().zip(&labels).map(|(p, &l)| squared_distance(p, &centroids[l as usize])).sum();
                prop_assert!((got - brute_force_min_inertia(&points, &centroids)).abs() < 1e-9);
            }
        }
    }
}
