//! Label, align and score one project in a single call.

use std::collections::BTreeMap;

use crate::alignment::{align_project, AlignmentResult};
use crate::effectiveness::{evaluate_project, ProjectEvaluation};
use crate::error::Result;
use crate::evolution::{label_project, Labeling};
use crate::ingestion::GdcMapping;
use crate::model::{AlignedWarning, Beta, ProjectSnapshot, ScaId};

#[derive(Debug, Clone)]
pub struct ProjectOutcome {
    pub project: String,
    pub labelings: BTreeMap<ScaId, Labeling>,
    pub alignment: AlignmentResult,
    pub evaluation: ProjectEvaluation,
}

pub fn evaluate_snapshot(
    snapshot: &ProjectSnapshot,
    scas: &[ScaId],
    mapping: &GdcMapping,
    beta: Beta,
) -> Result<ProjectOutcome> {
    let labelings = label_project(snapshot, scas, mapping)?;
    let labeled: BTreeMap<ScaId, Vec<AlignedWarning>> = labelings
        .iter()
        .map(|(s, l)| (s.clone(), l.warnings.clone()))
        .collect();
    let alignment = align_project(&labeled, scas);
    let scores = evaluate_project(&snapshot.project_id, &alignment, scas, beta);
    let evaluation = ProjectEvaluation::new(&snapshot.project_id, &scores, beta);
    Ok(ProjectOutcome {
        project: snapshot.project_id.clone(),
        labelings,
        alignment,
        evaluation,
    })
}
