//! Per-analyzer precision, recall and F-beta against the union oracle, and
//! the set of analyzers that score best on a project.

use serde::{Deserialize, Serialize};

use crate::alignment::{distinct_counts, AlignmentResult};
use crate::model::{Beta, ScaId, WarningLabel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    /// Distinct actionable warnings over all analyzers (TP + FN).
    pub union_actionable: u64,
}

impl ConfusionCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.union_actionable)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn per_sca_confusion(result: &AlignmentResult, sca: &ScaId) -> ConfusionCounts {
    let mut counts = ConfusionCounts {
        union_actionable: distinct_counts(result).1 as u64,
        ..Default::default()
    };
    for g in result.groups.iter().filter(|g| g.contains_sca(sca)) {
        match g.resolved_label {
            WarningLabel::Actionable => counts.tp += 1,
            WarningLabel::Unactionable => counts.fp += 1,
            WarningLabel::Unknown => {}
        }
    }
    counts
}

/// `(1+β²)·P·R / (β²·P + R)`, with `0` for a zero denominator, exactly `P`
/// at β = 0 and exactly `R` at β = ∞.
pub fn f_beta(counts: &ConfusionCounts, beta: Beta) -> f64 {
    let p = counts.precision();
    let r = counts.recall();
    if beta.value() == 0.0 {
        return p;
    }
    let b2 = beta.value() * beta.value();
    if !b2.is_finite() {
        return r;
    }
    let den = b2 * p + r;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / den
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessScore {
    pub project_id: String,
    pub sca: ScaId,
    pub counts: ConfusionCounts,
    pub p: f64,
    pub r: f64,
    pub f_beta: f64,
    pub beta: Beta,
}

impl EffectivenessScore {
    pub fn from_counts(project_id: &str, sca: ScaId, counts: ConfusionCounts, beta: Beta) -> Self {
        Self {
            project_id: project_id.to_string(),
            sca,
            p: counts.precision(),
            r: counts.recall(),
            f_beta: f_beta(&counts, beta),
            counts,
            beta,
        }
    }
}

/// One score per analyzer, in the given order.
pub fn evaluate_project(
    project_id: &str,
    result: &AlignmentResult,
    scas: &[ScaId],
    beta: Beta,
) -> Vec<EffectivenessScore> {
    scas.iter()
        .map(|s| EffectivenessScore::from_counts(project_id, s.clone(), per_sca_confusion(result, s), beta))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimalLabelSet {
    pub project_id: String,
    /// Non-empty, in the order the scores were given.
    pub optimal: Vec<ScaId>,
}

fn rounded(f: f64) -> f64 {
    (f * 1e12).round()
}

/// Every analyzer tied at the maximal F-beta (compared at 12 decimals).
pub fn optimal_set(scores: &[EffectivenessScore]) -> OptimalLabelSet {
    assert!(!scores.is_empty(), "optimal_set needs at least one score");
    let best = scores
        .iter()
        .map(|s| rounded(s.f_beta))
        .fold(f64::NEG_INFINITY, f64::max);
    OptimalLabelSet {
        project_id: scores[0].project_id.clone(),
        optimal: scores
            .iter()
            .filter(|s| rounded(s.f_beta) == best)
            .map(|s| s.sca.clone())
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub sca: ScaId,
    pub tp: u64,
    pub fp: u64,
    pub union_actionable: u64,
    pub p: f64,
    pub r: f64,
    pub f_beta: f64,
}

/// Serialized evaluation of one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectEvaluation {
    pub project: String,
    pub beta: Beta,
    pub scores: Vec<ScoreRecord>,
    pub optimal: Vec<ScaId>,
}

impl ProjectEvaluation {
    pub fn new(project: &str, scores: &[EffectivenessScore], beta: Beta) -> Self {
        Self {
            project: project.to_string(),
            beta,
            scores: scores
                .iter()
                .map(|s| ScoreRecord {
                    sca: s.sca.clone(),
                    tp: s.counts.tp,
                    fp: s.counts.fp,
                    union_actionable: s.counts.union_actionable,
                    p: s.p,
                    r: s.r,
                    f_beta: s.f_beta,
                })
                .collect(),
            optimal: optimal_set(scores).optimal,
        }
    }

    pub fn counts(&self) -> Vec<(ScaId, ConfusionCounts)> {
        self.scores
            .iter()
            .map(|s| {
                (
                    s.sca.clone(),
                    ConfusionCounts {
                        tp: s.tp,
                        fp: s.fp,
                        union_actionable: s.union_actionable,
                    },
                )
            })
            .collect()
    }

    /// Recomputes scores and the optimal set for another beta from the stored
    /// confusion counts.
    pub fn rescored(&self, beta: Beta) -> ProjectEvaluation {
        let scores: Vec<EffectivenessScore> = self
            .counts()
            .into_iter()
            .map(|(sca, c)| EffectivenessScore::from_counts(&self.project, sca, c, beta))
            .collect();
        ProjectEvaluation::new(&self.project, &scores, beta)
    }

    pub fn label_set(&self) -> OptimalLabelSet {
        OptimalLabelSet {
            project_id: self.project.clone(),
            optimal: self.optimal.clone(),
        }
    }
}

pub fn parse_evaluations(text: &str) -> crate::error::Result<Vec<ProjectEvaluation>> {
    let evals: Vec<ProjectEvaluation> =
        serde_json::from_str(text).map_err(|e| crate::error::Error::Parse(e.to_string()))?;
    for e in &evals {
        if e.scores.is_empty() {
            return Err(crate::error::Error::Schema(format!("project {} has no scores", e.project)));
        }
        if e.optimal.is_empty() || e.optimal.iter().any(|o| !e.scores.iter().any(|s| s.sca == *o)) {
            return Err(crate::error::Error::Schema(format!(
                "project {} has an invalid optimal set",
                e.project
            )));
        }
    }
    Ok(evals)
}
