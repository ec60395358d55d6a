use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

use super::logistic::softmax_in_place;
use super::{argmax, Rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// L2 penalty `alpha / (2n) * ||W||²` on both weight matrices.
    pub alpha: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: 100,
            epochs: 200,
            learning_rate: 0.01,
            momentum: 0.9,
            alpha: 1e-4,
        }
    }
}

/// One hidden ReLU layer with a softmax output, trained by full-batch
/// gradient descent with classical momentum. Weights start uniform in
/// `±sqrt(6 / (fan_in + fan_out))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// `hidden x d`.
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    /// `n_classes x hidden`.
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
}

fn init(rows: usize, cols: usize, rng: &mut SplitMix64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let w = (0..rows)
        .map(|_| (0..cols).map(|_| rng.uniform(-bound, bound)).collect())
        .collect();
    let b = (0..rows).map(|_| rng.uniform(-bound, bound)).collect();
    (w, b)
}

fn zeros_like(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| vec![0.0; r.len()]).collect()
}

impl Mlp {
    pub fn fit(x: Rows<'_>, y: &[usize], n_classes: usize, params: &MlpParams, seed: u64) -> Self {
        let n = x.len();
        let d = x[0].len();
        let h = params.hidden.max(1);
        let mut rng = SplitMix64::new(seed);
        let (mut w1, mut b1) = init(h, d, &mut rng);
        let (mut w2, mut b2) = init(n_classes, h, &mut rng);
        let (mut vw1, mut vb1) = (zeros_like(&w1), vec![0.0; h]);
        let (mut vw2, mut vb2) = (zeros_like(&w2), vec![0.0; n_classes]);
        let inv_n = 1.0 / n as f64;

        let mut hidden = vec![0.0; h];
        let mut out = vec![0.0; n_classes];
        let mut dh = vec![0.0; h];
        for _ in 0..params.epochs {
            let mut gw1 = zeros_like(&w1);
            let mut gb1 = vec![0.0; h];
            let mut gw2 = zeros_like(&w2);
            let mut gb2 = vec![0.0; n_classes];
            for (row, &label) in x.iter().zip(y) {
                for j in 0..h {
                    let a = b1[j] + w1[j].iter().zip(row).map(|(w, v)| w * v).sum::<f64>();
                    hidden[j] = a.max(0.0);
                }
                for k in 0..n_classes {
                    out[k] = b2[k] + w2[k].iter().zip(&hidden).map(|(w, v)| w * v).sum::<f64>();
                }
                softmax_in_place(&mut out);
                out[label] -= 1.0;
                dh.iter_mut().for_each(|v| *v = 0.0);
                for k in 0..n_classes {
                    gb2[k] += out[k];
                    for j in 0..h {
                        gw2[k][j] += out[k] * hidden[j];
                        dh[j] += out[k] * w2[k][j];
                    }
                }
                for j in 0..h {
                    if hidden[j] <= 0.0 {
                        continue;
                    }
                    gb1[j] += dh[j];
                    for (g, v) in gw1[j].iter_mut().zip(row) {
                        *g += dh[j] * v;
                    }
                }
            }
            let step = |w: &mut Vec<Vec<f64>>, v: &mut Vec<Vec<f64>>, g: &Vec<Vec<f64>>| {
                for ((wr, vr), gr) in w.iter_mut().zip(v.iter_mut()).zip(g) {
                    for ((wv, vv), gv) in wr.iter_mut().zip(vr.iter_mut()).zip(gr) {
                        let grad = gv * inv_n + params.alpha * inv_n * *wv;
                        *vv = params.momentum * *vv - params.learning_rate * grad;
                        *wv += *vv;
                    }
                }
            };
            let step_b = |b: &mut Vec<f64>, v: &mut Vec<f64>, g: &Vec<f64>| {
                for ((bv, vv), gv) in b.iter_mut().zip(v.iter_mut()).zip(g) {
                    *vv = params.momentum * *vv - params.learning_rate * gv * inv_n;
                    *bv += *vv;
                }
            };
            step(&mut w1, &mut vw1, &gw1);
            step(&mut w2, &mut vw2, &gw2);
            step_b(&mut b1, &mut vb1, &gb1);
            step_b(&mut b2, &mut vb2, &gb2);
        }
        Self { w1, b1, w2, b2 }
    }

    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let hidden: Vec<f64> = self
            .w1
            .iter()
            .zip(&self.b1)
            .map(|(w, b)| (b + w.iter().zip(row).map(|(a, c)| a * c).sum::<f64>()).max(0.0))
            .collect();
        self.w2
            .iter()
            .zip(&self.b2)
            .map(|(w, b)| b + w.iter().zip(&hidden).map(|(a, c)| a * c).sum::<f64>())
            .collect()
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        argmax(&self.scores(row))
    }
}
