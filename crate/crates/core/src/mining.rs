//! Linking project characteristics to optimal analyzers: recursive feature
//! elimination (plain and cross-validated), PCA and footprint tables.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dataset::{PreferenceDataset, Standardization};
use crate::error::{Error, Result};
use crate::learners::{Learned, ModelConfig, ModelKind};
use crate::recommender::{fold_seed, micro_counts, stratified_folds, MicroMetrics};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RfeResult {
    /// Survivors in dataset column order.
    pub selected: Vec<String>,
    /// Removed features, first removal first.
    pub eliminated: Vec<String>,
}

impl RfeResult {
    /// Every feature, best first: survivors, then removals in reverse order.
    pub fn ranking(&self) -> Vec<String> {
        self.selected
            .iter()
            .chain(self.eliminated.iter().rev())
            .cloned()
            .collect()
    }
}

fn ranking_config(kind: ModelKind) -> Result<ModelConfig> {
    if !kind.ranks_features() {
        return Err(Error::Config(format!(
            "{kind} does not expose feature importances; use rf, dt or lr"
        )));
    }
    Ok(ModelConfig::default_for(kind))
}

/// Runs elimination on already standardized rows from all columns down to
/// `stop` survivors, calling `visit` with each surviving column set (in
/// column order) and the model fitted on it.
fn elimination_path(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    names: &[String],
    config: &ModelConfig,
    step: usize,
    stop: usize,
    seed: u64,
    mut visit: impl FnMut(&[usize], &Learned),
) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..names.len()).collect();
    let mut eliminated = Vec::new();
    let mut round = 0u64;
    loop {
        let sub: Vec<Vec<f64>> = x.iter().map(|r| remaining.iter().map(|c| r[*c]).collect()).collect();
        let model = Learned::fit(config, &sub, y, n_classes, SplitMix64::derive(seed, round).next_u64());
        visit(&remaining, &model);
        if remaining.len() <= stop {
            break;
        }
        let imp = model.importances().expect("ranking models expose importances");
        let mut order: Vec<usize> = (0..remaining.len()).collect();
        order.sort_by(|&a, &b| {
            imp[a]
                .partial_cmp(&imp[b])
                .unwrap_or(Ordering::Equal)
                .then_with(|| names[remaining[a]].cmp(&names[remaining[b]]))
        });
        let drop_n = step.min(remaining.len() - stop);
        let mut dropped: Vec<usize> = order[..drop_n].to_vec();
        eliminated.extend(dropped.iter().map(|i| remaining[*i]));
        dropped.sort_unstable();
        for i in dropped.into_iter().rev() {
            remaining.remove(i);
        }
        round += 1;
    }
    eliminated
}

/// Removes the `step` least important features per round until `target`
/// remain. Importance ties drop the alphabetically first name.
pub fn rfe(dataset: &PreferenceDataset, kind: ModelKind, step: usize, target: usize, seed: u64) -> Result<RfeResult> {
    let d = dataset.feature_names.len();
    if target == 0 || target > d {
        return Err(Error::InvalidTarget(format!("target {target} with {d} features")));
    }
    if step == 0 {
        return Err(Error::InvalidTarget("step must be positive".into()));
    }
    if dataset.is_empty() {
        return Err(Error::DegenerateDataset("no projects".into()));
    }
    let config = ranking_config(kind)?;
    if target == d {
        return Ok(RfeResult {
            selected: dataset.feature_names.clone(),
            eliminated: Vec::new(),
        });
    }
    let x = Standardization::fit(&dataset.rows).apply_all(&dataset.rows);
    let mut survivors = Vec::new();
    let eliminated = elimination_path(
        &x,
        &dataset.primary_labels(),
        dataset.scas.len(),
        &dataset.feature_names,
        &config,
        step,
        target,
        seed,
        |cols, _| survivors = cols.to_vec(),
    );
    Ok(RfeResult {
        selected: survivors.iter().map(|c| dataset.feature_names[*c].clone()).collect(),
        eliminated: eliminated.iter().map(|c| dataset.feature_names[*c].clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RfeCvResult {
    pub selected: Vec<String>,
    /// `(subset size, mean held-out F1_micro)` for sizes 1..=d.
    pub scores: Vec<(usize, f64)>,
    pub ranking: Vec<String>,
}

/// Chooses the subset size by stratified k-fold CV: each fold runs its own
/// one-at-a-time elimination on the training rows and scores every size on
/// the held-out rows. The size with the best mean F1_micro wins (ties go to
/// the smaller size) and a final elimination on all rows yields the subset.
pub fn rfe_cv(dataset: &PreferenceDataset, kind: ModelKind, folds: usize, seed: u64) -> Result<RfeCvResult> {
    let config = ranking_config(kind)?;
    let d = dataset.feature_names.len();
    if d == 0 {
        return Err(Error::InvalidTarget("no features to select from".into()));
    }
    let assignment = stratified_folds(&dataset.primary_labels(), folds, seed)?;
    let mut totals = vec![0.0; d + 1];
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..dataset.len()).filter(|i| assignment[*i] != fold).collect();
        let test_idx: Vec<usize> = (0..dataset.len()).filter(|i| assignment[*i] == fold).collect();
        let train = dataset.subset(&train_idx);
        let s = Standardization::fit(&train.rows);
        let x = s.apply_all(&train.rows);
        let test_x: Vec<Vec<f64>> = test_idx.iter().map(|i| s.apply(&dataset.rows[*i])).collect();
        let truth: Vec<Vec<usize>> = test_idx.iter().map(|i| dataset.labels[*i].clone()).collect();
        elimination_path(
            &x,
            &train.primary_labels(),
            dataset.scas.len(),
            &dataset.feature_names,
            &config,
            1,
            1,
            fold_seed(seed, fold),
            |cols, model| {
                let preds: Vec<usize> = test_x
                    .iter()
                    .map(|r| model.predict(&cols.iter().map(|c| r[*c]).collect::<Vec<_>>()))
                    .collect();
                let (tp, fp, fn_) = micro_counts(&truth, &preds);
                totals[cols.len()] += MicroMetrics::from_counts(tp, fp, fn_).f1_micro;
            },
        );
    }
    let scores: Vec<(usize, f64)> = (1..=d).map(|k| (k, totals[k] / folds as f64)).collect();
    let mut best = scores[0];
    for &(k, v) in &scores[1..] {
        if v > best.1 {
            best = (k, v);
        }
    }
    log::debug!("rfe_cv picked {} of {} features (f1 {:.4})", best.0, d, best.1);
    let final_rfe = rfe(dataset, kind, 1, best.0, seed)?;
    Ok(RfeCvResult {
        ranking: final_rfe.ranking(),
        selected: final_rfe.selected,
        scores,
    })
}

pub fn selected_features_text(names: &[String]) -> String {
    names.iter().map(|n| format!("{n}\n")).collect()
}

pub fn parse_selected_features(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// `k` unit vectors of length `d`.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component (divisor `n - 1`), non-increasing.
    pub explained_variance: Vec<f64>,
    pub mean: Vec<f64>,
    /// `n x k` coordinates of the centered rows.
    pub projections: Vec<Vec<f64>>,
}

/// Principal components from the SVD of the centered data. Each component
/// is signed so that its largest-magnitude coordinate is positive.
pub fn pca(matrix: &[Vec<f64>], k: usize) -> Result<PcaResult> {
    let n = matrix.len();
    let d = matrix.first().map_or(0, Vec::len);
    if k == 0 || k > n.min(d) || matrix.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidK { k, n, d });
    }
    let mean: Vec<f64> = (0..d)
        .map(|j| matrix.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, d, |i, j| matrix[i][j] - mean[j]);
    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]).then(a.cmp(b)));
    let divisor = (n.max(2) - 1) as f64;
    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let mut c: Vec<f64> = v_t.row(i).iter().copied().collect();
        let mut pivot = 0;
        for (j, v) in c.iter().enumerate() {
            if v.abs() > c[pivot].abs() {
                pivot = j;
            }
        }
        if c[pivot] < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        let s = svd.singular_values[i];
        components.push(c);
        explained_variance.push(s * s / divisor);
    }
    let projections = (0..n)
        .map(|i| {
            components
                .iter()
                .map(|c| (0..d).map(|j| centered[(i, j)] * c[j]).sum())
                .collect()
        })
        .collect();
    Ok(PcaResult {
        components,
        explained_variance,
        mean,
        projections,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FootprintRow<T> {
    pub pc1: f64,
    pub pc2: f64,
    pub project: String,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Footprints {
    /// One table per highlighted feature, values min-max scaled to [0, 1].
    pub features: Vec<(String, Vec<FootprintRow<f64>>)>,
    /// One table per analyzer, flagging projects where it is optimal.
    pub scas: Vec<(String, Vec<FootprintRow<bool>>)>,
}

fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|v| if hi > lo { if *v == hi { 1.0 } else { (v - lo) / (hi - lo) } } else { 0.0 })
        .collect()
}

pub fn export_footprints(pca2: &PcaResult, dataset: &PreferenceDataset, highlight: &[String]) -> Result<Footprints> {
    if pca2.components.len() != 2 || pca2.projections.len() != dataset.len() {
        return Err(Error::InvalidK {
            k: pca2.components.len(),
            n: dataset.len(),
            d: dataset.feature_names.len(),
        });
    }
    let coords = |i: usize| (pca2.projections[i][0], pca2.projections[i][1]);
    let mut features = Vec::new();
    for name in highlight {
        let col = dataset.feature_index(name)?;
        let raw: Vec<f64> = dataset.rows.iter().map(|r| r[col]).collect();
        let rows = min_max(&raw)
            .into_iter()
            .enumerate()
            .map(|(i, value)| FootprintRow {
                pc1: coords(i).0,
                pc2: coords(i).1,
                project: dataset.project_ids[i].clone(),
                value,
            })
            .collect();
        features.push((name.clone(), rows));
    }
    let scas = dataset
        .scas
        .iter()
        .enumerate()
        .map(|(c, sca)| {
            let rows = (0..dataset.len())
                .map(|i| FootprintRow {
                    pc1: coords(i).0,
                    pc2: coords(i).1,
                    project: dataset.project_ids[i].clone(),
                    value: dataset.labels[i].contains(&c),
                })
                .collect();
            (sca.as_str().to_string(), rows)
        })
        .collect();
    Ok(Footprints { features, scas })
}

pub fn feature_footprint_csv(rows: &[FootprintRow<f64>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["pc1", "pc2", "project", "value"]).expect("in-memory write");
    for r in rows {
        w.write_record([r.pc1.to_string(), r.pc2.to_string(), r.project.clone(), r.value.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

pub fn sca_footprint_csv(rows: &[FootprintRow<bool>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["pc1", "pc2", "project", "is_optimal"]).expect("in-memory write");
    for r in rows {
        let flag = if r.value { "1" } else { "0" };
        w.write_record([r.pc1.to_string(), r.pc2.to_string(), r.project.clone(), flag.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScaId;

    fn dataset(rows: Vec<Vec<f64>>, labels: Vec<Vec<usize>>, names: &[&str]) -> PreferenceDataset {
        let n = rows.len();
        PreferenceDataset::new(
            names.iter().map(|s| s.to_string()).collect(),
            (0..n).map(|i| format!("p{i}")).collect(),
            rows,
            labels,
            vec![ScaId::new("a").unwrap(), ScaId::new("b").unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn collinear_points_have_one_component() {
        let m: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let p = pca(&m, 2).unwrap();
        let total: f64 = p.explained_variance.iter().sum();
        assert!((p.explained_variance[0] / total - 1.0).abs() < 1e-9);
        let s = 1.0 / 5f64.sqrt();
        assert!((p.components[0][0] - s).abs() < 1e-12 && (p.components[0][1] - 2.0 * s).abs() < 1e-12);
    }

    #[test]
    fn rectangle_corners_by_hand() {
        // Covariance (n-1 divisor) is diag(4/3, 1/3): PC1 is the x axis.
        let m = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0], vec![2.0, 1.0]];
        let p = pca(&m, 2).unwrap();
        assert!((p.explained_variance[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((p.explained_variance[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((p.components[0][0] - 1.0).abs() < 1e-12 && p.components[0][1].abs() < 1e-12);
        assert_eq!(p.mean, vec![1.0, 0.5]);
        assert!((p.projections[0][0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_k() {
        let m = vec![vec![1.0, 2.0, 3.0]];
        assert!(matches!(pca(&m, 2), Err(Error::InvalidK { k: 2, n: 1, d: 3 })));
        assert!(pca(&m, 0).is_err());
    }

    #[test]
    fn min_max_rules() {
        assert_eq!(min_max(&[3.0, 3.0]), vec![0.0, 0.0]);
        assert_eq!(min_max(&[1.0, 2.0, 0.1]), vec![(1.0 - 0.1) / (2.0 - 0.1), 1.0, 0.0]);
    }

    #[test]
    fn rfe_target_d_is_identity_and_validates() {
        let ds = dataset(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![vec![0], vec![1]], &["x", "y"]);
        let r = rfe(&ds, ModelKind::Rf, 1, 2, 0).unwrap();
        assert_eq!(r.selected, vec!["x", "y"]);
        assert!(r.eliminated.is_empty());
        assert!(matches!(rfe(&ds, ModelKind::Rf, 1, 3, 0), Err(Error::InvalidTarget(_))));
        assert!(matches!(rfe(&ds, ModelKind::Rf, 1, 0, 0), Err(Error::InvalidTarget(_))));
        assert!(matches!(rfe(&ds, ModelKind::Knn, 1, 1, 0), Err(Error::Config(_))));
    }

    #[test]
    fn rfe_keeps_the_signal() {
        let mut rng = SplitMix64::new(5);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let c = i % 2;
            rows.push(vec![rng.next_f64(), c as f64 + 0.1 * rng.next_f64(), rng.next_f64()]);
            labels.push(vec![c]);
        }
        let ds = dataset(rows, labels, &["n1", "s", "n2"]);
        let r = rfe(&ds, ModelKind::Rf, 1, 1, 3).unwrap();
        assert_eq!(r.selected, vec!["s"]);
        assert_eq!(r.ranking().len(), 3);
        assert_eq!(r, rfe(&ds, ModelKind::Rf, 1, 1, 3).unwrap());
    }

    #[test]
    fn rfe_cv_needs_enough_rows() {
        let ds = dataset(vec![vec![0.0], vec![1.0]], vec![vec![0], vec![1]], &["x"]);
        assert!(matches!(rfe_cv(&ds, ModelKind::Rf, 3, 0), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn footprints_flag_every_optimal_sca() {
        let ds = dataset(
            vec![vec![0.0, 5.0], vec![1.0, 5.0], vec![2.0, 5.0]],
            vec![vec![0, 1], vec![0], vec![1]],
            &["x", "c"],
        );
        let p = pca(&ds.rows, 2).unwrap();
        let f = export_footprints(&p, &ds, &["x".into(), "c".into()]).unwrap();
        assert_eq!(f.features.len(), 2);
        assert!(f.features[1].1.iter().all(|r| r.value == 0.0));
        assert!(f.scas[0].1[0].value && f.scas[1].1[0].value);
        assert!(matches!(
            export_footprints(&p, &ds, &["zz".into()]),
            Err(Error::UnknownFeature(_))
        ));
        let csv = sca_footprint_csv(&f.scas[0].1);
        assert!(csv.starts_with("pc1,pc2,project,is_optimal\n"));
    }
}
