//! Closed-warning labeling across a release pair.
//!
//! Each warning of the older release is looked up among the same analyzer's
//! warnings of the newer release with a three-stage cascade:
//!
//! 1. **location**: same class, method and type, and the old start line,
//!    carried through the line diff, lands within [`LOCATION_TOLERANCE`]
//!    lines of the new warning;
//! 2. **snippet**: same class and type, and the trimmed source text of the
//!    warned lines is identical;
//! 3. **hash**: same type, and the FNV-1a hash of the surrounding token
//!    window is identical (survives class renames).
//!
//! A warning that finds a partner persists and is unactionable. One without
//! partner was fixed (actionable) unless its file or class vanished, in which
//! case nothing can be said (unknown).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use similar::{capture_diff_slices, Algorithm, DiffOp};

use crate::error::Result;
use crate::ingestion::{canonicalize, GdcMapping};
use crate::model::{
    canonical_warning_order, AlignedWarning, ProjectSnapshot, RawWarning, Release, ScaId,
    WarningLabel,
};

pub const LOCATION_TOLERANCE: u32 = 3;
/// Tokens taken on each side of the warning start for the hash stage.
pub const HASH_HALF_WINDOW: usize = 50;
const TOKEN_SEPARATOR: u8 = 0x1F;

/// Where an old line ended up in the new release.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineTarget {
    MappedTo(u32),
    Deleted,
}

/// Old-to-new line correspondence for every file present in both releases.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LineMapping {
    files: BTreeMap<String, Vec<Option<u32>>>,
    deleted_files: BTreeSet<String>,
}

impl LineMapping {
    /// Maps a 1-based old line; lines past the end of the file are `Deleted`.
    pub fn map_line(&self, path: &str, line: u32) -> Option<LineTarget> {
        let lines = self.files.get(path)?;
        let target = line
            .checked_sub(1)
            .and_then(|i| lines.get(i as usize).copied().flatten());
        Some(match target {
            Some(l) => LineTarget::MappedTo(l),
            None => LineTarget::Deleted,
        })
    }

    /// Like [`map_line`](Self::map_line), but a deleted line falls back to the
    /// nearest surviving line above it.
    pub fn map_line_or_above(&self, path: &str, line: u32) -> Option<u32> {
        let lines = self.files.get(path)?;
        let upto = (line as usize).min(lines.len());
        lines[..upto].iter().rev().find_map(|l| *l)
    }

    pub fn is_deleted(&self, path: &str) -> bool {
        self.deleted_files.contains(path)
    }

    pub fn deleted_files(&self) -> &BTreeSet<String> {
        &self.deleted_files
    }

    pub fn covers(&self, path: &str) -> bool {
        self.files.contains_key(path)
    }
}

/// Diffs every file common to both releases; unchanged lines map in order,
/// changed or removed lines map to `Deleted`.
pub fn compute_line_mapping(old: &Release, new: &Release) -> LineMapping {
    let mut mapping = LineMapping::default();
    for (path, old_lines) in &old.files {
        let Some(new_lines) = new.files.get(path) else {
            mapping.deleted_files.insert(path.clone());
            continue;
        };
        mapping
            .files
            .insert(path.clone(), diff_lines(old_lines, new_lines));
    }
    mapping
}

fn diff_lines(old: &[String], new: &[String]) -> Vec<Option<u32>> {
    let mut map = vec![None; old.len()];
    if old == new {
        for (i, m) in map.iter_mut().enumerate() {
            *m = Some(i as u32 + 1);
        }
        return map;
    }
    for op in capture_diff_slices(Algorithm::Myers, old, new) {
        if let DiffOp::Equal {
            old_index,
            new_index,
            len,
        } = op
        {
            for k in 0..len {
                map[old_index + k] = Some((new_index + k) as u32 + 1);
            }
        }
    }
    map
}

/// Finds the source file of a fully-qualified class name: first the
/// `pkg/path/Outer.java` path itself, then any file whose path ends with it,
/// then any file named `Outer.<ext>`. Nested classes (`Outer$Inner`) resolve
/// to their outer class.
#[derive(Debug, Clone, Default)]
pub struct ClassResolver {
    by_stem: BTreeMap<String, Vec<String>>,
    paths: BTreeSet<String>,
}

impl ClassResolver {
    pub fn new(release: &Release) -> Self {
        let mut by_stem: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for path in release.files.keys() {
            let name = path.rsplit('/').next().unwrap_or(path);
            let stem = name.split('.').next().unwrap_or(name);
            by_stem.entry(stem.to_string()).or_default().push(path.clone());
        }
        Self {
            by_stem,
            paths: release.files.keys().cloned().collect(),
        }
    }

    pub fn resolve(&self, class_path: &str) -> Option<&str> {
        let outer = class_path.split('$').next().unwrap_or(class_path);
        let simple = outer.rsplit('.').next().unwrap_or(outer);
        let expected = format!("{}.java", outer.replace('.', "/"));
        if let Some(p) = self.paths.get(&expected) {
            return Some(p);
        }
        let candidates = self.by_stem.get(simple)?;
        let suffix = format!("/{expected}");
        candidates
            .iter()
            .find(|p| p.ends_with(&suffix))
            .or_else(|| candidates.first())
            .map(String::as_str)
    }
}

/// Splits text into maximal runs of ASCII alphanumerics and underscores.
fn tokenize(lines: &[String]) -> Vec<(u32, String)> {
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let mut current = String::new();
        for c in line.chars() {
            if c.is_ascii_alphanumeric() || c == '_' {
                current.push(c);
            } else if !current.is_empty() {
                out.push((i as u32 + 1, std::mem::take(&mut current)));
            }
        }
        if !current.is_empty() {
            out.push((i as u32 + 1, current));
        }
    }
    out
}

/// 64-bit FNV-1a over the tokens joined by a 0x1F byte.
pub fn fnv1a_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for (i, t) in tokens.into_iter().enumerate() {
        if i > 0 {
            h ^= TOKEN_SEPARATOR as u64;
            h = h.wrapping_mul(PRIME);
        }
        for b in t.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    }
    h
}

fn window_hash(tokens: &[(u32, String)], start_line: u32) -> Option<u64> {
    let anchor = tokens.partition_point(|(line, _)| *line < start_line);
    let lo = anchor.saturating_sub(HASH_HALF_WINDOW);
    let hi = (anchor + HASH_HALF_WINDOW).min(tokens.len());
    if lo >= hi {
        return None;
    }
    Some(fnv1a_tokens(tokens[lo..hi].iter().map(|(_, t)| t.as_str())))
}

fn snippet(lines: &[String], start: u32, end: u32) -> Option<String> {
    if start == 0 || end as usize > lines.len() || start > end {
        return None;
    }
    let text = lines[start as usize - 1..end as usize]
        .iter()
        .map(|l| l.trim())
        .collect::<Vec<_>>()
        .join("\n");
    (!text.trim().is_empty()).then_some(text)
}

/// Side of a release pair a warning belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Old,
    New,
}

/// A warning with everything the three stages compare precomputed.
#[derive(Debug, Clone)]
pub struct PreparedWarning {
    pub warning: AlignedWarning,
    pub method: Option<String>,
    pub file: Option<String>,
    /// For old warnings: the start line carried into the new release.
    pub mapped_start: Option<u32>,
    pub snippet: Option<String>,
    pub hash: Option<u64>,
}

/// Release pair plus the derived line mapping, class resolvers and lazily
/// tokenized files.
pub struct MatchContext<'a> {
    pub old: &'a Release,
    pub new: &'a Release,
    pub mapping: LineMapping,
    old_classes: ClassResolver,
    new_classes: ClassResolver,
    old_tokens: BTreeMap<&'a str, OnceLock<Vec<(u32, String)>>>,
    new_tokens: BTreeMap<&'a str, OnceLock<Vec<(u32, String)>>>,
}

impl<'a> MatchContext<'a> {
    pub fn new(old: &'a Release, new: &'a Release) -> Self {
        let lazy = |r: &'a Release| {
            r.files
                .keys()
                .map(|k| (k.as_str(), OnceLock::new()))
                .collect()
        };
        Self {
            mapping: compute_line_mapping(old, new),
            old_classes: ClassResolver::new(old),
            new_classes: ClassResolver::new(new),
            old_tokens: lazy(old),
            new_tokens: lazy(new),
            old,
            new,
        }
    }

    fn tokens(&self, side: Side, path: &str) -> Option<&[(u32, String)]> {
        let (release, cache) = match side {
            Side::Old => (self.old, &self.old_tokens),
            Side::New => (self.new, &self.new_tokens),
        };
        let cell = cache.get(path)?;
        let lines = release.file(path)?;
        Some(cell.get_or_init(|| tokenize(lines)))
    }

    pub fn resolve(&self, side: Side, class_path: &str) -> Option<&str> {
        match side {
            Side::Old => self.old_classes.resolve(class_path),
            Side::New => self.new_classes.resolve(class_path),
        }
    }

    pub fn prepare(&self, side: Side, warning: AlignedWarning, method: Option<String>) -> PreparedWarning {
        let release = match side {
            Side::Old => self.old,
            Side::New => self.new,
        };
        let file = self.resolve(side, &warning.class_info).map(str::to_string);
        let lines = file.as_deref().and_then(|f| release.file(f));
        let snippet = lines.and_then(|l| snippet(l, warning.start_line, warning.end_line));
        let hash = file
            .as_deref()
            .and_then(|f| self.tokens(side, f))
            .and_then(|t| window_hash(t, warning.start_line));
        let mapped_start = match (side, file.as_deref()) {
            (Side::Old, Some(f)) => self.mapping.map_line_or_above(f, warning.start_line),
            _ => None,
        };
        PreparedWarning {
            warning,
            method,
            file,
            mapped_start,
            snippet,
            hash,
        }
    }

    /// Whether an unmatched old warning lost its file or class in the new
    /// release.
    pub fn vanished(&self, old: &PreparedWarning) -> bool {
        let file_deleted = old
            .file
            .as_deref()
            .is_some_and(|f| self.mapping.is_deleted(f));
        file_deleted || self.resolve(Side::New, &old.warning.class_info).is_none()
    }
}

fn methods_compatible(a: &Option<String>, b: &Option<String>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    }
}

/// Line distance used to rank location-stage partners, if the pair matches.
pub fn location_distance(a: &PreparedWarning, b: &PreparedWarning) -> Option<u32> {
    if a.warning.class_info != b.warning.class_info
        || a.warning.new_type != b.warning.new_type
        || !methods_compatible(&a.method, &b.method)
    {
        return None;
    }
    let mapped = a.mapped_start?;
    let d = mapped.abs_diff(b.warning.start_line);
    (d <= LOCATION_TOLERANCE).then_some(d)
}

pub fn match_location(a: &PreparedWarning, b: &PreparedWarning) -> bool {
    location_distance(a, b).is_some()
}

pub fn match_snippet(a: &PreparedWarning, b: &PreparedWarning) -> bool {
    a.warning.class_info == b.warning.class_info
        && a.warning.new_type == b.warning.new_type
        && a.snippet.is_some()
        && a.snippet == b.snippet
}

pub fn match_hash(a: &PreparedWarning, b: &PreparedWarning) -> bool {
    a.warning.new_type == b.warning.new_type && a.hash.is_some() && a.hash == b.hash
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchStage {
    Location,
    Snippet,
    Hash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchOutcome {
    /// Index into the candidate slice and the stage that fired.
    Matched { candidate: usize, stage: MatchStage },
    NoMatch,
}

/// Runs the cascade for one old warning over the still-available candidates.
/// Within a stage the closest candidate wins; ties go to the earlier
/// candidate, so callers pass candidates in canonical order.
pub fn match_warning(
    old: &PreparedWarning,
    candidates: &[PreparedWarning],
    available: &[bool],
) -> MatchOutcome {
    let raw_distance = |c: &PreparedWarning| old.warning.start_line.abs_diff(c.warning.start_line);
    let stages: [(MatchStage, &dyn Fn(&PreparedWarning) -> Option<u32>); 3] = [
        (MatchStage::Location, &|c| location_distance(old, c)),
        (MatchStage::Snippet, &|c| match_snippet(old, c).then(|| raw_distance(c))),
        (MatchStage::Hash, &|c| match_hash(old, c).then(|| raw_distance(c))),
    ];
    for (stage, test) in stages {
        let best = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| available[*i])
            .filter_map(|(i, c)| test(c).map(|d| (d, i)))
            .min();
        if let Some((_, candidate)) = best {
            return MatchOutcome::Matched { candidate, stage };
        }
    }
    MatchOutcome::NoMatch
}

/// One line of the labeling audit trail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub class: String,
    pub start_line: u32,
    #[serde(rename = "type")]
    pub new_type: String,
    pub outcome: WarningLabel,
    pub stage: Option<MatchStage>,
    pub matched_line: Option<u32>,
    /// Report index of the newer-release partner.
    pub matched_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    /// Old-release warnings with their label, in canonical order.
    pub warnings: Vec<AlignedWarning>,
    /// Parallel to `warnings`.
    pub audit: Vec<AuditRecord>,
}

impl Labeling {
    pub fn audit_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.audit {
            out.push_str(&serde_json::to_string(r).expect("audit serializes"));
            out.push('\n');
        }
        out
    }
}

/// Canonical order refined by method path ahead of the origin, so warnings
/// that differ only in origin are interchangeable during matching.
fn matching_order(a: &PreparedWarning, b: &PreparedWarning) -> Ordering {
    let (x, y) = (&a.warning, &b.warning);
    x.class_info
        .cmp(&y.class_info)
        .then(x.start_line.cmp(&y.start_line))
        .then(x.end_line.cmp(&y.end_line))
        .then_with(|| x.new_type.cmp(&y.new_type))
        .then_with(|| a.method.cmp(&b.method))
        .then_with(|| canonical_warning_order(x, y))
}

fn prepare_all(
    ctx: &MatchContext<'_>,
    side: Side,
    raws: &[RawWarning],
    mapping: &GdcMapping,
) -> Result<Vec<PreparedWarning>> {
    let mut out = raws
        .iter()
        .enumerate()
        .map(|(i, raw)| {
            let w = canonicalize(raw, i, mapping)?;
            Ok(ctx.prepare(side, w, raw.method_path.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(matching_order);
    Ok(out)
}

/// Greedy one-to-one labeling of analyzer `sca`'s old-release warnings
/// against its new-release warnings, given a prebuilt context.
pub fn label_with_context(
    ctx: &MatchContext<'_>,
    old_raw: &[RawWarning],
    new_raw: &[RawWarning],
    mapping: &GdcMapping,
) -> Result<Labeling> {
    let old = prepare_all(ctx, Side::Old, old_raw, mapping)?;
    let candidates = prepare_all(ctx, Side::New, new_raw, mapping)?;
    let mut available = vec![true; candidates.len()];
    let mut warnings = Vec::with_capacity(old.len());
    let mut audit = Vec::with_capacity(old.len());
    for w in old {
        let outcome = match_warning(&w, &candidates, &available);
        let (label, stage, partner) = match outcome {
            MatchOutcome::Matched { candidate, stage } => {
                available[candidate] = false;
                (WarningLabel::Unactionable, Some(stage), Some(&candidates[candidate].warning))
            }
            MatchOutcome::NoMatch if ctx.vanished(&w) => (WarningLabel::Unknown, None, None),
            MatchOutcome::NoMatch => (WarningLabel::Actionable, None, None),
        };
        let mut labeled = w.warning;
        labeled.label = label;
        audit.push(AuditRecord {
            class: labeled.class_info.clone(),
            start_line: labeled.start_line,
            new_type: labeled.new_type.clone(),
            outcome: label,
            stage,
            matched_line: partner.map(|p| p.start_line),
            matched_index: partner.map(|p| p.origin.index),
        });
        warnings.push(labeled);
    }
    Ok(Labeling { warnings, audit })
}

/// Labels analyzer `sca`'s warnings of the older release. Returns all three
/// labels; callers drop `Unknown` before alignment.
pub fn label_release(snapshot: &ProjectSnapshot, sca: &ScaId, mapping: &GdcMapping) -> Result<Labeling> {
    let ctx = MatchContext::new(&snapshot.release_old, &snapshot.release_new);
    let empty = Vec::new();
    let old = snapshot.reports_old.get(sca).unwrap_or(&empty);
    let new = snapshot.reports_new.get(sca).unwrap_or(&empty);
    label_with_context(&ctx, old, new, mapping)
}

/// Labels every analyzer of the snapshot, sharing one diff.
pub fn label_project(
    snapshot: &ProjectSnapshot,
    scas: &[ScaId],
    mapping: &GdcMapping,
) -> Result<BTreeMap<ScaId, Labeling>> {
    let ctx = MatchContext::new(&snapshot.release_old, &snapshot.release_new);
    let empty = Vec::new();
    scas.iter()
        .map(|sca| {
            let old = snapshot.reports_old.get(sca).unwrap_or(&empty);
            let new = snapshot.reports_new.get(sca).unwrap_or(&empty);
            Ok((sca.clone(), label_with_context(&ctx, old, new, mapping)?))
        })
        .collect()
}
