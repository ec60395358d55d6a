//! Project feature vectors and the preference dataset that pairs them with
//! each project's optimal analyzers.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::effectiveness::{OptimalLabelSet, ProjectEvaluation};
use crate::error::{Error, Result};
use crate::model::ScaId;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub project_id: String,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

/// Parses `project,<feature1>,...` CSV. Every cell must be a finite number.
pub fn parse_features(text: &str) -> Result<Vec<FeatureVector>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    if header.get(0) != Some("project") {
        return Err(Error::Parse("feature CSV must start with a `project` column".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if names.iter().collect::<BTreeSet<_>>().len() != names.len() {
        return Err(Error::Parse("duplicate feature name in header".into()));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let project = record.get(0).unwrap_or_default().to_string();
        if project.is_empty() {
            return Err(Error::Parse("empty project id".into()));
        }
        if !seen.insert(project.clone()) {
            return Err(Error::DuplicateProject(project));
        }
        let mut values = Vec::with_capacity(names.len());
        for (name, cell) in names.iter().zip(record.iter().skip(1)) {
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::NonNumericCell {
                        project,
                        feature: name.clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        out.push(FeatureVector {
            project_id: project,
            names: names.clone(),
            values,
        });
    }
    Ok(out)
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureVector>> {
    parse_features(&crate::ingestion::read_text(path)?)
}

pub fn features_to_csv(names: &[String], rows: &[(String, Vec<f64>)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["project".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (p, vals) in rows {
        let mut rec = vec![p.clone()];
        rec.extend(vals.iter().map(|v| v.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

/// Column means and population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardization {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let means: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let stds = (0..d)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n;
                var.sqrt()
            })
            .collect();
        Self { means, stds }
    }

    /// `(x - mean) / std`; zero-variance columns become 0.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect()
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

/// Features of n projects joined with their optimal-analyzer sets.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceDataset {
    pub feature_names: Vec<String>,
    pub project_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Optimal analyzers per project as sorted indices into `scas`.
    pub labels: Vec<Vec<usize>>,
    /// Class list in corpus order.
    pub scas: Vec<ScaId>,
}

impl PreferenceDataset {
    pub fn new(
        feature_names: Vec<String>,
        project_ids: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<Vec<usize>>,
        scas: Vec<ScaId>,
    ) -> Result<Self> {
        let n = project_ids.len();
        if rows.len() != n || labels.len() != n {
            return Err(Error::Schema(format!(
                "{n} projects but {} feature rows and {} label sets",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != feature_names.len()) {
            return Err(Error::Schema(format!(
                "row of length {} for {} features",
                r.len(),
                feature_names.len()
            )));
        }
        for (p, l) in project_ids.iter().zip(&labels) {
            if l.is_empty() || l.iter().any(|c| *c >= scas.len()) || l.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Schema(format!("project {p} has an invalid label set")));
            }
        }
        Ok(Self {
            feature_names,
            project_ids,
            rows,
            labels,
            scas,
        })
    }

    /// Joins feature vectors (kept in their order) with evaluation records.
    /// Each side must cover exactly the same projects.
    pub fn join(features: &[FeatureVector], evaluations: &[ProjectEvaluation]) -> Result<Self> {
        let first = evaluations
            .first()
            .ok_or_else(|| Error::DegenerateDataset("no evaluated projects".into()))?;
        let scas: Vec<ScaId> = first.scores.iter().map(|s| s.sca.clone()).collect();
        let mut by_project: BTreeMap<&str, &ProjectEvaluation> = BTreeMap::new();
        for e in evaluations {
            let these: Vec<&ScaId> = e.scores.iter().map(|s| &s.sca).collect();
            if these != scas.iter().collect::<Vec<_>>() {
                return Err(Error::Schema(format!(
                    "project {} lists analyzers in a different order",
                    e.project
                )));
            }
            if by_project.insert(e.project.as_str(), e).is_some() {
                return Err(Error::DuplicateProject(e.project.clone()));
            }
        }
        let names = features
            .first()
            .map(|f| f.names.clone())
            .unwrap_or_default();
        let mut project_ids = Vec::new();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for f in features {
            if f.names != names {
                return Err(Error::FeatureMismatch(format!(
                    "project {} has a different feature list",
                    f.project_id
                )));
            }
            let e = by_project.remove(f.project_id.as_str()).ok_or_else(|| {
                Error::Schema(format!("project {} has features but no evaluation", f.project_id))
            })?;
            project_ids.push(f.project_id.clone());
            rows.push(f.values.clone());
            labels.push(label_indices(&e.optimal, &scas)?);
        }
        if let Some(p) = by_project.keys().next() {
            return Err(Error::Schema(format!("project {p} has an evaluation but no features")));
        }
        Self::new(names, project_ids, rows, labels, scas)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// First optimal analyzer of each project in corpus order; the single
    /// label models are trained on.
    pub fn primary_labels(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l[0]).collect()
    }

    pub fn truth_sets(&self) -> Vec<OptimalLabelSet> {
        self.project_ids
            .iter()
            .zip(&self.labels)
            .map(|(p, l)| OptimalLabelSet {
                project_id: p.clone(),
                optimal: l.iter().map(|c| self.scas[*c].clone()).collect(),
            })
            .collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            project_ids: idx.iter().map(|i| self.project_ids[*i].clone()).collect(),
            rows: idx.iter().map(|i| self.rows[*i].clone()).collect(),
            labels: idx.iter().map(|i| self.labels[*i].clone()).collect(),
            scas: self.scas.clone(),
        }
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    /// Keeps only the named features, in the given order.
    pub fn select(&self, names: &[String]) -> Result<Self> {
        let cols = names
            .iter()
            .map(|n| self.feature_index(n))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&cols))
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            feature_names: cols.iter().map(|c| self.feature_names[*c].clone()).collect(),
            project_ids: self.project_ids.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| cols.iter().map(|c| r[*c]).collect())
                .collect(),
            labels: self.labels.clone(),
            scas: self.scas.clone(),
        }
    }
}

pub(crate) fn label_indices(optimal: &[ScaId], scas: &[ScaId]) -> Result<Vec<usize>> {
    let mut idx = optimal
        .iter()
        .map(|o| {
            scas.iter()
                .position(|s| s == o)
                .ok_or_else(|| Error::Schema(format!("optimal analyzer {o} is not scored")))
        })
        .collect::<Result<Vec<_>>>()?;
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

/// Standardizes every feature column; returns the fitted parameters so the
/// same transform can be replayed at prediction time.
pub fn standardize(dataset: &PreferenceDataset) -> (PreferenceDataset, Standardization) {
    let s = Standardization::fit(&dataset.rows);
    let mut out = dataset.clone();
    out.rows = s.apply_all(&dataset.rows);
    (out, s)
}
