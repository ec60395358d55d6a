use serde::{Deserialize, Serialize};

use super::{argmax, Rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Euclidean k-nearest-neighbour majority vote. Equal distances keep
/// training order; vote ties go to the lowest class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub n_classes: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Knn {
    pub fn fit(x: Rows<'_>, y: &[usize], n_classes: usize, params: &KnnParams) -> Self {
        Self {
            k: params.k.max(1),
            n_classes,
            rows: x.to_vec(),
            labels: y.to_vec(),
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0.0; self.n_classes];
        for (_, i) in d.iter().take(self.k) {
            votes[self.labels[*i]] += 1.0;
        }
        argmax(&votes)
    }
}
