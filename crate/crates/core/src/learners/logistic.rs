use serde::{Deserialize, Serialize};

use super::{argmax, Rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// Inverse of the usual `C`: the penalty is `l2 / (2n) * ||W||²`.
    pub l2: f64,
    pub iterations: usize,
    pub learning_rate: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1.0,
            iterations: 1000,
            learning_rate: 0.1,
        }
    }
}

/// Multinomial (softmax) logistic regression fitted by full-batch gradient
/// descent from zero weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    /// `n_classes x d`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

impl Logistic {
    pub fn fit(x: Rows<'_>, y: &[usize], n_classes: usize, params: &LogisticParams) -> Self {
        let n = x.len();
        let d = x[0].len();
        let mut w = vec![vec![0.0; d]; n_classes];
        let mut b = vec![0.0; n_classes];
        let inv_n = 1.0 / n as f64;
        let mut grad_w = vec![vec![0.0; d]; n_classes];
        let mut grad_b = vec![0.0; n_classes];
        let mut z = vec![0.0; n_classes];
        for _ in 0..params.iterations {
            grad_w.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            grad_b.iter_mut().for_each(|v| *v = 0.0);
            for (row, &label) in x.iter().zip(y) {
                for k in 0..n_classes {
                    z[k] = b[k] + w[k].iter().zip(row).map(|(a, c)| a * c).sum::<f64>();
                }
                softmax_in_place(&mut z);
                z[label] -= 1.0;
                for k in 0..n_classes {
                    grad_b[k] += z[k];
                    for (g, v) in grad_w[k].iter_mut().zip(row) {
                        *g += z[k] * v;
                    }
                }
            }
            for k in 0..n_classes {
                b[k] -= params.learning_rate * grad_b[k] * inv_n;
                for j in 0..d {
                    let g = grad_w[k][j] * inv_n + params.l2 * inv_n * w[k][j];
                    w[k][j] -= params.learning_rate * g;
                }
            }
        }
        Self { weights: w, bias: b }
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(row).map(|(a, c)| a * c).sum::<f64>())
            .collect()
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        argmax(&self.scores(row))
    }

    /// Mean absolute class coefficient per feature.
    pub fn importances(&self) -> Vec<f64> {
        let k = self.weights.len() as f64;
        let d = self.weights.first().map_or(0, Vec::len);
        (0..d)
            .map(|j| self.weights.iter().map(|w| w[j].abs()).sum::<f64>() / k)
            .collect()
    }
}
