//! Shared domain types: analyzer ids, warnings, releases, the defect taxonomy
//! and the canonical ordering every other stage relies on for determinism.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Identifier of one static code analyzer, e.g. `spotbugs`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ScaId(String);

impl ScaId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let valid = !id.is_empty()
            && id
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-');
        if !valid {
            return Err(Error::Schema(format!(
                "invalid analyzer id {id:?}: expected a non-empty lowercase token"
            )));
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ScaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ScaId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::new(s)
    }
}

impl<'de> Deserialize<'de> for ScaId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ScaId::new(s).map_err(serde::de::Error::custom)
    }
}

/// Validates an ordered analyzer list: non-empty, no duplicates.
pub fn validate_sca_order(scas: &[ScaId]) -> Result<()> {
    if scas.is_empty() {
        return Err(Error::Schema("corpus declares no analyzers".into()));
    }
    let mut seen = BTreeSet::new();
    for s in scas {
        if !seen.insert(s) {
            return Err(Error::Schema(format!("analyzer {s} declared twice")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarningLabel {
    Actionable,
    Unactionable,
    Unknown,
}

impl WarningLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            WarningLabel::Actionable => "actionable",
            WarningLabel::Unactionable => "unactionable",
            WarningLabel::Unknown => "unknown",
        }
    }
}

impl fmt::Display for WarningLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GdcCategory {
    pub gdc_id: String,
    pub name: String,
    pub group: String,
}

/// Two-level defect taxonomy: a handful of high-level groups, each owning
/// fine-grained categories that analyzer-specific types are mapped onto.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GdcTaxonomy {
    groups: Vec<String>,
    categories: Vec<GdcCategory>,
}

impl GdcTaxonomy {
    pub const GROUP_COUNT: usize = 2;
    pub const CATEGORY_COUNT: usize = 16;

    pub fn new(groups: Vec<String>, categories: Vec<GdcCategory>) -> Result<Self> {
        if groups.len() != Self::GROUP_COUNT {
            return Err(Error::Schema(format!(
                "taxonomy must declare exactly {} groups, found {}",
                Self::GROUP_COUNT,
                groups.len()
            )));
        }
        let group_set: BTreeSet<&str> = groups.iter().map(String::as_str).collect();
        if group_set.len() != groups.len() {
            return Err(Error::Schema("duplicate taxonomy group".into()));
        }
        if categories.len() != Self::CATEGORY_COUNT {
            return Err(Error::Schema(format!(
                "taxonomy must declare exactly {} categories, found {}",
                Self::CATEGORY_COUNT,
                categories.len()
            )));
        }
        let mut ids = BTreeSet::new();
        for c in &categories {
            if c.gdc_id.is_empty() {
                return Err(Error::Schema("empty gdc_id".into()));
            }
            if !ids.insert(c.gdc_id.as_str()) {
                return Err(Error::Schema(format!("duplicate gdc_id {}", c.gdc_id)));
            }
            if !group_set.contains(c.group.as_str()) {
                return Err(Error::Schema(format!(
                    "category {} references missing group {}",
                    c.gdc_id, c.group
                )));
            }
        }
        Ok(Self { groups, categories })
    }

    /// Parses the `gdc_id<TAB>name<TAB>group` file. Groups are taken in order
    /// of first appearance.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("taxonomy file is empty".into()))?;
        if header.trim_end() != "gdc_id\tname\tgroup" {
            return Err(Error::Parse(format!("bad taxonomy header {header:?}")));
        }
        let mut groups: Vec<String> = Vec::new();
        let mut categories = Vec::new();
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!(
                    "taxonomy row {} has {} columns, expected 3",
                    i + 2,
                    cols.len()
                )));
            }
            let group = cols[2].to_string();
            if !groups.contains(&group) {
                groups.push(group.clone());
            }
            categories.push(GdcCategory {
                gdc_id: cols[0].to_string(),
                name: cols[1].to_string(),
                group,
            });
        }
        Self::new(groups, categories)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("gdc_id\tname\tgroup\n");
        for c in &self.categories {
            out.push_str(&format!("{}\t{}\t{}\n", c.gdc_id, c.name, c.group));
        }
        out
    }

    /// The bundled taxonomy. Its category names are illustrative placeholders
    /// with the right shape, not an authoritative classification.
    pub fn illustrative_default() -> Self {
        Self::from_tsv(DEFAULT_TAXONOMY_TSV).expect("bundled taxonomy is valid")
    }

    pub fn contains(&self, gdc_id: &str) -> bool {
        self.categories.iter().any(|c| c.gdc_id == gdc_id)
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn categories(&self) -> &[GdcCategory] {
        &self.categories
    }
}

pub const DEFAULT_TAXONOMY_TSV: &str = include_str!("../data/default_taxonomy.tsv");

/// A finding as reported by one analyzer, before type unification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawWarning {
    pub sca: ScaId,
    pub original_type: String,
    pub class_path: String,
    pub method_path: Option<String>,
    pub start_line: u32,
    pub end_line: u32,
    pub message: Option<String>,
    pub severity: Option<String>,
}

impl RawWarning {
    pub fn validate(&self) -> Result<()> {
        if self.class_path.is_empty() {
            return Err(Error::Schema("warning with empty class path".into()));
        }
        if self.start_line < 1 || self.start_line > self.end_line {
            return Err(Error::Schema(format!(
                "bad line range {}..{} in {}",
                self.start_line, self.end_line, self.class_path
            )));
        }
        Ok(())
    }
}

/// Where an aligned warning came from: analyzer plus index into its report.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Origin {
    pub sca: ScaId,
    pub index: usize,
}

/// The unified warning tuple shared by all analyzers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedWarning {
    pub new_type: String,
    pub class_info: String,
    pub start_line: u32,
    pub end_line: u32,
    pub label: WarningLabel,
    pub origin: Origin,
}

/// Total order on warnings: class, start line, end line, unified type, origin.
/// The label never participates.
pub fn canonical_warning_order(a: &AlignedWarning, b: &AlignedWarning) -> Ordering {
    a.class_info
        .cmp(&b.class_info)
        .then(a.start_line.cmp(&b.start_line))
        .then(a.end_line.cmp(&b.end_line))
        .then_with(|| a.new_type.cmp(&b.new_type))
        .then_with(|| a.origin.cmp(&b.origin))
}

pub fn sort_canonical(ws: &mut [AlignedWarning]) {
    ws.sort_by(canonical_warning_order);
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Release {
    pub release_id: String,
    pub timestamp: NaiveDate,
    pub files: BTreeMap<String, Vec<String>>,
}

impl Release {
    pub fn new(release_id: impl Into<String>, timestamp: NaiveDate) -> Self {
        Self {
            release_id: release_id.into(),
            timestamp,
            files: BTreeMap::new(),
        }
    }

    pub fn with_file(mut self, path: impl Into<String>, text: &str) -> Self {
        self.files.insert(path.into(), split_lines(text));
        self
    }

    pub fn file(&self, path: &str) -> Option<&[String]> {
        self.files.get(path).map(Vec::as_slice)
    }
}

/// Splits text into lines treating `\n` and `\r\n` alike.
pub fn split_lines(text: &str) -> Vec<String> {
    text.lines().map(str::to_string).collect()
}

/// Two releases of one project together with every analyzer's report on each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectSnapshot {
    pub project_id: String,
    pub release_old: Release,
    pub release_new: Release,
    pub reports_old: BTreeMap<ScaId, Vec<RawWarning>>,
    pub reports_new: BTreeMap<ScaId, Vec<RawWarning>>,
}

impl ProjectSnapshot {
    pub fn new(
        project_id: impl Into<String>,
        release_old: Release,
        release_new: Release,
        reports_old: BTreeMap<ScaId, Vec<RawWarning>>,
        reports_new: BTreeMap<ScaId, Vec<RawWarning>>,
    ) -> Result<Self> {
        let project_id = project_id.into();
        if release_old.timestamp >= release_new.timestamp {
            return Err(Error::Schema(format!(
                "project {project_id}: release {} is not older than {}",
                release_old.release_id, release_new.release_id
            )));
        }
        if let Some(missing) = reports_old.keys().find(|s| !reports_new.contains_key(*s)) {
            return Err(Error::Schema(format!(
                "project {project_id}: analyzer {missing} has no report for {}",
                release_new.release_id
            )));
        }
        Ok(Self {
            project_id,
            release_old,
            release_new,
            reports_old,
            reports_new,
        })
    }
}

/// Weight of recall against precision in the F-beta score. `0` is pure
/// precision, infinity is pure recall.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Beta(f64);

impl Beta {
    pub const ONE: Beta = Beta(1.0);
    pub const INFINITY: Beta = Beta(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidBeta(value.to_string()));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl Default for Beta {
    fn default() -> Self {
        Beta::ONE
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Beta {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(Beta::INFINITY),
            _ => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::InvalidBeta(s.to_string()))?;
                if v.is_infinite() {
                    return Err(Error::InvalidBeta(s.to_string()));
                }
                Beta::new(v)
            }
        }
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Beta::new(v).map_err(serde::de::Error::custom),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}
