use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Incremental PCA state.
///
/// Each `partial_fit` stacks the previous scaled components, the centred
/// batch, and a mean-correction row, then keeps the leading right singular
/// vectors of that stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaState {
    pub n_components: usize,
    pub dim: usize,
    pub mean: Vec<f64>,
    /// Orthonormal rows, at most `n_components` of them.
    pub components: Vec<Vec<f64>>,
    /// Non-increasing, one per component row.
    pub singular_values: Vec<f64>,
    pub n_seen: u64,
}

impl PcaState {
    pub fn new(n_components: usize, dim: usize) -> Result<Self> {
        if n_components == 0 || n_components > dim {
            return Err(Error::invalid(format!(
                "n_components must lie in 1..={dim}, got {n_components}"
            )));
        }
        Ok(Self {
            n_components,
            dim,
            mean: vec![0.0; dim],
            components: Vec::new(),
            singular_values: Vec::new(),
            n_seen: 0,
        })
    }

    /// Fitted once at least `n_components` rows have been seen and the
    /// component basis is complete.
    pub fn is_fitted(&self) -> bool {
        self.n_seen >= self.n_components as u64 && self.components.len() == self.n_components
    }

    fn check_dim(&self, batch: &[Vec<f64>]) -> Result<()> {
        match batch.iter().position(|r| r.len() != self.dim) {
            Some(i) => Err(Error::invalid(format!(
                "row {i} has dimension {}, expected {}",
                batch[i].len(),
                self.dim
            ))),
            None => Ok(()),
        }
    }

    pub fn partial_fit(&mut self, batch: &[Vec<f64>]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::invalid("PCA batch must contain at least one row"));
        }
        self.check_dim(batch)?;
        let d = self.dim;
        let n = batch.len();
        let n_prev = self.n_seen as f64;
        let n_total = n_prev + n as f64;

        let mut batch_mean = vec![0.0; d];
        for row in batch {
            for (m, x) in batch_mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        batch_mean.iter_mut().for_each(|m| *m /= n as f64);

        let prev_rows = if self.n_seen == 0 { 0 } else { self.components.len() };
        let correction = usize::from(self.n_seen > 0);
        let rows = prev_rows + n + correction;
        let mut stack = DMatrix::<f64>::zeros(rows, d);
        for (i, (comp, s)) in self.components.iter().zip(&self.singular_values).enumerate().take(prev_rows) {
            for j in 0..d {
                stack[(i, j)] = s * comp[j];
            }
        }
        for (i, row) in batch.iter().enumerate() {
            for j in 0..d {
                stack[(prev_rows + i, j)] = row[j] - batch_mean[j];
            }
        }
        if correction == 1 {
            let w = (n_prev * n as f64 / n_total).sqrt();
            for j in 0..d {
                stack[(rows - 1, j)] = w * (self.mean[j] - batch_mean[j]);
            }
        }

        let svd = stack.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
        let keep = order.len().min(self.n_components);

        self.components = order[..keep]
            .iter()
            .map(|&i| {
                let mut row: Vec<f64> = v_t.row(i).iter().copied().collect();
                // Sign convention: largest-magnitude entry positive.
                let pivot = row
                    .iter()
                    .enumerate()
                    .fold(0, |best, (j, x)| if x.abs() > row[best].abs() { j } else { best });
                if row[pivot] < 0.0 {
                    row.iter_mut().for_each(|x| *x = -*x);
                }
                row
            })
            .collect();
        self.singular_values = order[..keep].iter().map(|&i| svd.singular_values[i]).collect();
        for (m, b) in self.mean.iter_mut().zip(&batch_mean) {
            *m = (n_prev * *m + n as f64 * b) / n_total;
        }
        self.n_seen += n as u64;
        Ok(())
    }

    /// Projects rows onto the components: (x − mean)·Cᵀ.
    pub fn transform(&self, batch: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if !self.is_fitted() {
            return Err(Error::invalid(format!(
                "PCA is unfitted: {} rows seen, {} components needed",
                self.n_seen, self.n_components
            )));
        }
        self.check_dim(batch)?;
        Ok(batch
            .iter()
            .map(|row| {
                self.components
                    .iter()
                    .map(|c| c.iter().zip(row).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
                    .collect()
            })
            .collect())
    }

    /// Variance captured by each component.
    pub fn explained_variance(&self) -> Vec<f64> {
        let denom = (self.n_seen.max(2) - 1) as f64;
        self.singular_values.iter().map(|s| s * s / denom).collect()
    }
}
