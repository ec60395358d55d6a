//! Training and evaluating SCA recommendation models, micro-averaged
//! metrics, baselines and the beta sweep.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{label_indices, FeatureVector, PreferenceDataset, Standardization};
use crate::effectiveness::{OptimalLabelSet, ProjectEvaluation};
use crate::error::{Error, Result};
use crate::learners::{Learned, ModelConfig, ModelKind};
use crate::model::{Beta, ScaId};
use crate::rng::SplitMix64;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroMetrics {
    pub p_micro: f64,
    pub r_micro: f64,
    pub f1_micro: f64,
}

impl MicroMetrics {
    pub const ZERO: MicroMetrics = MicroMetrics {
        p_micro: 0.0,
        r_micro: 0.0,
        f1_micro: 0.0,
    };

    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Self {
            p_micro: ratio(tp, tp + fp),
            r_micro: ratio(tp, tp + fn_),
            // Same value as 2PR/(P+R), but exact when P == R.
            f1_micro: ratio(2 * tp, 2 * tp + fp + fn_),
        }
    }

    fn mean(ms: &[MicroMetrics]) -> Self {
        let n = ms.len().max(1) as f64;
        Self {
            p_micro: ms.iter().map(|m| m.p_micro).sum::<f64>() / n,
            r_micro: ms.iter().map(|m| m.r_micro).sum::<f64>() / n,
            f1_micro: ms.iter().map(|m| m.f1_micro).sum::<f64>() / n,
        }
    }
}

/// Class-summed confusion counts: a hit credits the predicted class and
/// charges a false negative to every other member of the truth set; a miss
/// charges a false positive to the prediction and a false negative to every
/// member of the truth set.
pub fn micro_counts(truth: &[Vec<usize>], preds: &[usize]) -> (u64, u64, u64) {
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (t, p) in truth.iter().zip(preds) {
        if t.contains(p) {
            tp += 1;
            fn_ += t.len() as u64 - 1;
        } else {
            fp += 1;
            fn_ += t.len() as u64;
        }
    }
    (tp, fp, fn_)
}

pub fn micro_metrics(truth: &[OptimalLabelSet], preds: &[ScaId]) -> Result<MicroMetrics> {
    if truth.len() != preds.len() {
        return Err(Error::LengthMismatch {
            truth: truth.len(),
            preds: preds.len(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (t, p) in truth.iter().zip(preds) {
        if t.optimal.contains(p) {
            tp += 1;
            fn_ += t.optimal.len() as u64 - 1;
        } else {
            fp += 1;
            fn_ += t.optimal.len() as u64;
        }
    }
    Ok(MicroMetrics::from_counts(tp, fp, fn_))
}

/// A fitted model with everything needed to replay it on new projects.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationModel {
    pub config: ModelConfig,
    pub learned: Learned,
    pub feature_names: Vec<String>,
    pub standardization: Standardization,
    pub classes: Vec<ScaId>,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    kind: ModelKind,
    hyperparams: serde_json::Value,
    feature_names: Vec<String>,
    standardization: Standardization,
    params: serde_json::Value,
    seed: u64,
    classes: Vec<ScaId>,
}

fn fit(dataset: &PreferenceDataset, config: &ModelConfig, seed: u64) -> RecommendationModel {
    let standardization = Standardization::fit(&dataset.rows);
    let x = standardization.apply_all(&dataset.rows);
    let learned = Learned::fit(config, &x, &dataset.primary_labels(), dataset.scas.len(), seed);
    RecommendationModel {
        config: config.clone(),
        learned,
        feature_names: dataset.feature_names.clone(),
        standardization,
        classes: dataset.scas.clone(),
        seed,
    }
}

/// Trains on the primary label of every project.
pub fn train(dataset: &PreferenceDataset, config: &ModelConfig, seed: u64) -> Result<RecommendationModel> {
    config.validate()?;
    if dataset.len() < 2 {
        return Err(Error::DegenerateDataset(format!(
            "{} training projects, need at least 2",
            dataset.len()
        )));
    }
    let distinct: BTreeSet<usize> = dataset.primary_labels().into_iter().collect();
    if distinct.len() < 2 {
        return Err(Error::DegenerateDataset("every project has the same optimal analyzer".into()));
    }
    Ok(fit(dataset, config, seed))
}

impl RecommendationModel {
    pub fn kind(&self) -> ModelKind {
        self.config.kind()
    }

    pub fn predict_index(&self, row: &[f64]) -> usize {
        self.learned.predict(&self.standardization.apply(row))
    }

    pub fn predict(&self, fv: &FeatureVector) -> Result<ScaId> {
        if fv.names != self.feature_names {
            return Err(Error::FeatureMismatch(format!(
                "project {} does not carry the model's {} features in order",
                fv.project_id,
                self.feature_names.len()
            )));
        }
        Ok(self.classes[self.predict_index(&fv.values)].clone())
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            kind: self.kind(),
            hyperparams: self.config.to_json(),
            feature_names: self.feature_names.clone(),
            standardization: self.standardization.clone(),
            params: self.learned.to_json(),
            seed: self.seed,
            classes: self.classes.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::Schema(format!("unsupported model version {}", file.version)));
        }
        let d = file.feature_names.len();
        if file.standardization.means.len() != d || file.standardization.stds.len() != d {
            return Err(Error::Schema("standardization does not match the feature list".into()));
        }
        if file.classes.is_empty() {
            return Err(Error::Schema("model has no classes".into()));
        }
        let config = ModelConfig::from_json(file.kind, file.hyperparams)?;
        let learned = Learned::from_json(file.kind, file.params)?;
        learned.check_shape(d, file.classes.len())?;
        Ok(Self {
            config,
            learned,
            feature_names: file.feature_names,
            standardization: file.standardization,
            classes: file.classes,
            seed: file.seed,
        })
    }
}

/// Fold index per row. Rows are grouped by primary label, each group is
/// shuffled by its own derived stream, and groups are dealt round-robin with
/// a counter that carries across groups.
pub fn stratified_folds(primary: &[usize], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 || primary.len() < folds {
        return Err(Error::TooFewSamples {
            samples: primary.len(),
            folds,
        });
    }
    let classes: BTreeSet<usize> = primary.iter().copied().collect();
    let mut assignment = vec![0; primary.len()];
    let mut counter = 0;
    for c in classes {
        let mut members: Vec<usize> = (0..primary.len()).filter(|i| primary[*i] == c).collect();
        SplitMix64::derive(seed, c as u64).shuffle(&mut members);
        for i in members {
            assignment[i] = counter % folds;
            counter += 1;
        }
    }
    Ok(assignment)
}

pub(crate) fn fold_seed(seed: u64, fold: usize) -> u64 {
    SplitMix64::derive(seed, 0x1000 + fold as u64).next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub p_micro: f64,
    pub r_micro: f64,
    pub f1_micro: f64,
    pub per_fold: Vec<MicroMetrics>,
}

impl CvReport {
    pub fn mean(&self) -> MicroMetrics {
        MicroMetrics {
            p_micro: self.p_micro,
            r_micro: self.r_micro,
            f1_micro: self.f1_micro,
        }
    }
}

/// Held-out predictions of one fold's model, scored against the full truth
/// sets.
fn fold_metrics(dataset: &PreferenceDataset, config: &ModelConfig, assignment: &[usize], fold: usize, seed: u64) -> MicroMetrics {
    let train_idx: Vec<usize> = (0..dataset.len()).filter(|i| assignment[*i] != fold).collect();
    let test_idx: Vec<usize> = (0..dataset.len()).filter(|i| assignment[*i] == fold).collect();
    let model = fit(&dataset.subset(&train_idx), config, fold_seed(seed, fold));
    let preds: Vec<usize> = test_idx.iter().map(|i| model.predict_index(&dataset.rows[*i])).collect();
    let truth: Vec<Vec<usize>> = test_idx.iter().map(|i| dataset.labels[*i].clone()).collect();
    let (tp, fp, fn_) = micro_counts(&truth, &preds);
    MicroMetrics::from_counts(tp, fp, fn_)
}

/// Stratified k-fold cross-validation; the result is the mean of the
/// per-fold metrics.
pub fn cross_validate(dataset: &PreferenceDataset, config: &ModelConfig, folds: usize, seed: u64) -> Result<CvReport> {
    config.validate()?;
    let assignment = stratified_folds(&dataset.primary_labels(), folds, seed)?;
    let per_fold: Vec<MicroMetrics> = (0..folds)
        .map(|f| fold_metrics(dataset, config, &assignment, f, seed))
        .collect();
    let m = MicroMetrics::mean(&per_fold);
    log::debug!("cv {} folds: f1_micro {:.4}", folds, m.f1_micro);
    Ok(CvReport {
        p_micro: m.p_micro,
        r_micro: m.r_micro,
        f1_micro: m.f1_micro,
        per_fold,
    })
}

/// Always recommends `sca`; ties in the truth set count as hits.
pub fn baseline_fixed(sca: &ScaId, truth: &[OptimalLabelSet]) -> MicroMetrics {
    let preds = vec![sca.clone(); truth.len()];
    micro_metrics(truth, &preds).expect("lengths agree by construction")
}

/// Uniform random recommendations over `scas`, averaged over `repeats`
/// independent draws (each repeat has its own derived stream).
pub fn baseline_random(truth: &[OptimalLabelSet], scas: &[ScaId], repeats: usize, seed: u64) -> Result<MicroMetrics> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    if scas.is_empty() {
        return Err(Error::Config("no analyzers to draw from".into()));
    }
    let per_repeat: Vec<MicroMetrics> = (0..repeats)
        .map(|r| {
            let mut rng = SplitMix64::derive(seed, r as u64);
            let preds: Vec<ScaId> = truth
                .iter()
                .map(|_| scas[rng.below(scas.len() as u64) as usize].clone())
                .collect();
            micro_metrics(truth, &preds).expect("lengths agree by construction")
        })
        .collect();
    Ok(MicroMetrics::mean(&per_repeat))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: Beta,
    #[serde(flatten)]
    pub report: CvReport,
}

/// Relabels every project from its stored confusion counts at each beta and
/// cross-validates on the resulting dataset.
pub fn beta_sweep(
    evaluations: &[ProjectEvaluation],
    dataset: &PreferenceDataset,
    config: &ModelConfig,
    betas: &[Beta],
    folds: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if betas.is_empty() {
        return Err(Error::Config("at least one beta is required".into()));
    }
    let mut rows = Vec::with_capacity(betas.len());
    for &beta in betas {
        let mut relabeled = dataset.clone();
        for (p, labels) in relabeled.project_ids.iter().zip(relabeled.labels.iter_mut()) {
            let e = evaluations
                .iter()
                .find(|e| &e.project == p)
                .ok_or_else(|| Error::Schema(format!("project {p} has features but no evaluation")))?;
            *labels = label_indices(&e.rescored(beta).optimal, &dataset.scas)?;
        }
        let report = cross_validate(&relabeled, config, folds, seed)?;
        rows.push(SweepRow { beta, report });
    }
    Ok(rows)
}
