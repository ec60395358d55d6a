//! Reading analyzer reports, the type mapping and source trees from disk, and
//! converting raw findings into the unified warning tuple.
//!
//! On-disk corpus layout:
//!
//! ```text
//! corpus/corpus.json                         {"scas": ["spotbugs", "pmd", ...]}
//! corpus/<project>/project.json              release ids and dates, oldest first
//! corpus/<project>/<release>/src/...         source tree
//! corpus/<project>/<release>/reports/<sca>.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    validate_sca_order, AlignedWarning, GdcTaxonomy, Origin, ProjectSnapshot, RawWarning,
    Release, ScaId, WarningLabel,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportEntry {
    #[serde(rename = "type")]
    pub original_type: String,
    #[serde(rename = "class")]
    pub class_path: String,
    #[serde(default)]
    pub method: Option<String>,
    pub start_line: u32,
    pub end_line: u32,
    #[serde(default)]
    pub message: Option<String>,
    #[serde(default)]
    pub severity: Option<String>,
}

/// The canonical report document every analyzer output is converted into.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalReport {
    pub sca: String,
    pub project: String,
    pub release: String,
    pub warnings: Vec<ReportEntry>,
}

impl CanonicalReport {
    pub fn from_warnings(project: &str, release: &str, sca: &ScaId, ws: &[RawWarning]) -> Self {
        Self {
            sca: sca.to_string(),
            project: project.to_string(),
            release: release.to_string(),
            warnings: ws
                .iter()
                .map(|w| ReportEntry {
                    original_type: w.original_type.clone(),
                    class_path: w.class_path.clone(),
                    method: w.method_path.clone(),
                    start_line: w.start_line,
                    end_line: w.end_line,
                    message: w.message.clone(),
                    severity: w.severity.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Parses a canonical report without checking its project/release header.
pub fn parse_report_unchecked(text: &str) -> Result<(ScaId, CanonicalReport, Vec<RawWarning>)> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let report: CanonicalReport =
        serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    let sca = ScaId::new(report.sca.clone())?;
    let mut warnings = Vec::with_capacity(report.warnings.len());
    for (i, e) in report.warnings.iter().enumerate() {
        let w = RawWarning {
            sca: sca.clone(),
            original_type: e.original_type.clone(),
            class_path: e.class_path.clone(),
            method_path: e.method.clone(),
            start_line: e.start_line,
            end_line: e.end_line,
            message: e.message.clone(),
            severity: e.severity.clone(),
        };
        w.validate()
            .map_err(|err| Error::Schema(format!("warning {i}: {err}")))?;
        warnings.push(w);
    }
    Ok((sca, report, warnings))
}

pub fn parse_report(text: &str, project_id: &str, release_id: &str) -> Result<(ScaId, Vec<RawWarning>)> {
    let (sca, report, warnings) = parse_report_unchecked(text)?;
    if report.project != project_id || report.release != release_id {
        return Err(Error::Mismatch(format!(
            "report is for {}/{}, expected {project_id}/{release_id}",
            report.project, report.release
        )));
    }
    Ok((sca, warnings))
}

pub fn load_report(path: &Path, project_id: &str, release_id: &str) -> Result<(ScaId, Vec<RawWarning>)> {
    let text = read_text(path)?;
    parse_report(&text, project_id, release_id)
        .map_err(|e| annotate(e, path))
}

/// Unified-type lookup keyed by analyzer and its own warning type.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GdcMapping {
    entries: BTreeMap<(ScaId, String), String>,
}

impl GdcMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, sca: ScaId, original_type: String, gdc_id: String) -> Result<()> {
        let key = (sca, original_type);
        match self.entries.get(&key) {
            Some(existing) if *existing != gdc_id => Err(Error::DuplicateConflict {
                sca: key.0.to_string(),
                original_type: key.1,
                first: existing.clone(),
                second: gdc_id,
            }),
            Some(_) => Ok(()),
            None => {
                self.entries.insert(key, gdc_id);
                Ok(())
            }
        }
    }

    pub fn get(&self, sca: &ScaId, original_type: &str) -> Option<&str> {
        // BTreeMap needs an owned key for tuple lookups.
        self.entries
            .get(&(sca.clone(), original_type.to_string()))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("sca\toriginal_type\tgdc_id\n");
        for ((sca, ty), gdc) in &self.entries {
            out.push_str(&format!("{sca}\t{ty}\t{gdc}\n"));
        }
        out
    }
}

const MAPPING_HEADER: &str = "sca\toriginal_type\tgdc_id";

/// Parses `sca<TAB>original_type<TAB>gdc_id` rows. A header row equal to the
/// column names is accepted and skipped.
pub fn parse_gdc_mapping(text: &str, taxonomy: &GdcTaxonomy) -> Result<GdcMapping> {
    let mut mapping = GdcMapping::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || (i == 0 && line == MAPPING_HEADER) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!(
                "mapping row {} has {} columns, expected 3",
                i + 1,
                cols.len()
            )));
        }
        let sca = ScaId::new(cols[0])?;
        if cols[1].is_empty() {
            return Err(Error::Parse(format!("mapping row {} has an empty type", i + 1)));
        }
        if !taxonomy.contains(cols[2]) {
            return Err(Error::UnknownCategory {
                gdc_id: cols[2].to_string(),
            });
        }
        mapping.insert(sca, cols[1].to_string(), cols[2].to_string())?;
    }
    Ok(mapping)
}

pub fn load_gdc_mapping(path: &Path, taxonomy: &GdcTaxonomy) -> Result<GdcMapping> {
    parse_gdc_mapping(&read_text(path)?, taxonomy).map_err(|e| annotate(e, path))
}

pub fn load_taxonomy(path: &Path) -> Result<GdcTaxonomy> {
    GdcTaxonomy::from_tsv(&read_text(path)?).map_err(|e| annotate(e, path))
}

/// Converts a raw finding into the unified tuple. The label is left as
/// `Unknown` until evolution matching decides it.
pub fn canonicalize(raw: &RawWarning, index: usize, mapping: &GdcMapping) -> Result<AlignedWarning> {
    let gdc = mapping
        .get(&raw.sca, &raw.original_type)
        .ok_or_else(|| Error::UnmappedType {
            sca: raw.sca.to_string(),
            original_type: raw.original_type.clone(),
        })?;
    Ok(AlignedWarning {
        new_type: gdc.to_string(),
        class_info: raw.class_path.clone(),
        start_line: raw.start_line,
        end_line: raw.end_line,
        label: WarningLabel::Unknown,
        origin: Origin {
            sca: raw.sca.clone(),
            index,
        },
    })
}

/// A loaded source tree plus the files that were skipped as binary.
#[derive(Debug, Clone)]
pub struct LoadedTree {
    pub release: Release,
    pub skipped: Vec<String>,
}

/// Recursively loads every UTF-8 text file under `dir`; paths are stored
/// relative to `dir` with `/` separators. Files with NUL bytes or invalid
/// UTF-8 are skipped and listed in [`LoadedTree::skipped`].
pub fn load_source_tree(dir: &Path, release_id: &str, timestamp: NaiveDate) -> Result<LoadedTree> {
    let mut release = Release::new(release_id, timestamp);
    let mut skipped = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        let entries = fs::read_dir(&current).map_err(|e| Error::io(&current, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&current, e))?;
            let path = entry.path();
            let ft = entry.file_type().map_err(|e| Error::io(&path, e))?;
            if ft.is_dir() {
                stack.push(path);
                continue;
            }
            if !ft.is_file() {
                continue;
            }
            let rel = relative_slash_path(dir, &path);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            match String::from_utf8(bytes) {
                Ok(text) if !text.contains('\0') => {
                    release.files.insert(rel, crate::model::split_lines(&text));
                }
                _ => {
                    log::info!("skipping binary file {}", path.display());
                    skipped.push(rel);
                }
            }
        }
    }
    skipped.sort();
    Ok(LoadedTree { release, skipped })
}

fn relative_slash_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub scas: Vec<ScaId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseInfo {
    pub id: String,
    pub date: NaiveDate,
}

/// `project.json`: the release pair, older release first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectManifest {
    pub project: String,
    pub releases: [ReleaseInfo; 2],
}

pub fn parse_corpus_manifest(text: &str) -> Result<CorpusManifest> {
    let m: CorpusManifest = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    validate_sca_order(&m.scas)?;
    Ok(m)
}

pub fn parse_project_manifest(text: &str) -> Result<ProjectManifest> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// A corpus directory: the declared analyzer order plus its project dirs.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub root: PathBuf,
    pub scas: Vec<ScaId>,
    pub projects: Vec<String>,
}

impl Corpus {
    pub fn open(root: &Path) -> Result<Self> {
        let manifest_path = root.join("corpus.json");
        let manifest = parse_corpus_manifest(&read_text(&manifest_path)?)
            .map_err(|e| annotate(e, &manifest_path))?;
        let mut projects = Vec::new();
        for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
            let entry = entry.map_err(|e| Error::io(root, e))?;
            if entry.path().join("project.json").is_file() {
                projects.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        projects.sort();
        Ok(Self {
            root: root.to_path_buf(),
            scas: manifest.scas,
            projects,
        })
    }

    /// Loads both releases and every declared analyzer's report for each.
    pub fn load_project(&self, project: &str) -> Result<ProjectSnapshot> {
        let dir = self.root.join(project);
        let manifest_path = dir.join("project.json");
        let manifest = parse_project_manifest(&read_text(&manifest_path)?)
            .map_err(|e| annotate(e, &manifest_path))?;
        if manifest.project != project {
            return Err(Error::Mismatch(format!(
                "{} declares project {:?}",
                manifest_path.display(),
                manifest.project
            )));
        }
        let [old, new] = &manifest.releases;
        let load_release = |info: &ReleaseInfo| -> Result<(Release, BTreeMap<ScaId, Vec<RawWarning>>)> {
            let rdir = dir.join(&info.id);
            let tree = load_source_tree(&rdir.join("src"), &info.id, info.date)?;
            let mut reports = BTreeMap::new();
            for sca in &self.scas {
                let path = rdir.join("reports").join(format!("{sca}.json"));
                let (declared, warnings) = load_report(&path, project, &info.id)?;
                if declared != *sca {
                    return Err(Error::Mismatch(format!(
                        "{} declares analyzer {declared}",
                        path.display()
                    )));
                }
                reports.insert(sca.clone(), warnings);
            }
            Ok((tree.release, reports))
        };
        let (release_old, reports_old) = load_release(old)?;
        let (release_new, reports_new) = load_release(new)?;
        ProjectSnapshot::new(project, release_old, release_new, reports_old, reports_new)
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn annotate(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        other => other,
    }
}
