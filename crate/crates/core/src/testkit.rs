//! Deterministic synthetic corpora with planted ground truth.
//!
//! Each project is a set of pseudo-Java classes. Warning sites sit at two
//! line spans inside distinct methods; planted defects are either fixed in
//! the newer release (expected `actionable`) or left alone (`unactionable`),
//! and per-analyzer noise sites are never fixed. Optional perturbations move
//! lines around so that each matching stage gets exercised: lines inserted
//! at the top of a file (location), methods moved to the end of their class
//! (snippet), classes renamed (hash) and files deleted (`unknown`).
//!
//! With planted preferences every project gets an archetype: one analyzer
//! detects its fixed defects reliably and produces no noise, and the
//! archetype also shapes the project's structure so the structural features
//! predict that analyzer.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dataset::features_to_csv;
use crate::error::{Error, Result};
use crate::ingestion::{CanonicalReport, CorpusManifest, GdcMapping, ProjectManifest, ReleaseInfo};
use crate::model::{AlignedWarning, GdcTaxonomy, Origin, ProjectSnapshot, RawWarning, Release, ScaId, WarningLabel};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaProfile {
    pub sca: ScaId,
    /// Chance of reporting each planted defect.
    pub detection: f64,
    /// Expected noise sites per planted defect.
    pub fp_rate: f64,
}

/// Per-project (top insert) or per-file and per-site probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbations {
    /// Per file: insert 1 to 3 import lines below the package line.
    pub top_insert: f64,
    /// Per unfixed site: move its method to the end of the class.
    pub method_move: f64,
    /// Per file: rename the class (and file) in the newer release.
    pub file_rename: f64,
    /// Per file: delete it in the newer release.
    pub file_delete: f64,
}

impl Perturbations {
    pub const NONE: Perturbations = Perturbations {
        top_insert: 0.0,
        method_move: 0.0,
        file_rename: 0.0,
        file_delete: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_projects: usize,
    pub files_per_project: (usize, usize),
    pub methods_per_class: (usize, usize),
    /// Body lines per method; at least 2.
    pub lines_per_method: (usize, usize),
    pub defects_per_project: (usize, usize),
    pub scas: Vec<ScaProfile>,
    /// Fraction of defects fixed in the newer release.
    pub edit_intensity: f64,
    /// Let analyzers report a site starting one line late.
    pub line_jitter: bool,
    pub perturbations: Perturbations,
    /// Give each project an archetype that decides its best analyzer and
    /// overrides the structure ranges.
    pub planted_preferences: bool,
    /// Extra uniformly random feature columns.
    pub noise_features: usize,
    pub seed: u64,
}

fn default_scas() -> Vec<ScaProfile> {
    let p = |s: &str, detection, fp_rate| ScaProfile {
        sca: ScaId::new(s).expect("valid id"),
        detection,
        fp_rate,
    };
    vec![p("spotbugs", 0.5, 0.05), p("pmd", 0.6, 0.3), p("sonarqube", 0.85, 0.6)]
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_projects: 60,
            files_per_project: (3, 6),
            methods_per_class: (3, 6),
            lines_per_method: (6, 10),
            defects_per_project: (8, 12),
            scas: default_scas(),
            edit_intensity: 0.5,
            line_jitter: true,
            perturbations: Perturbations {
                top_insert: 0.2,
                method_move: 0.1,
                file_rename: 0.05,
                file_delete: 0.05,
            },
            planted_preferences: true,
            noise_features: 4,
            seed: 42,
        }
    }
}

impl SynthConfig {
    /// Small projects without planted preferences, for matching and
    /// alignment checks.
    pub fn small(n_projects: usize, seed: u64) -> Self {
        Self {
            n_projects,
            files_per_project: (1, 3),
            methods_per_class: (3, 5),
            lines_per_method: (3, 6),
            defects_per_project: (2, 8),
            planted_preferences: false,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {p} is not a probability")))
            }
        };
        let range = |name: &str, (lo, hi): (usize, usize), min: usize| {
            if lo >= min && lo <= hi {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} range {lo}..={hi} is empty or below {min}")))
            }
        };
        range("files_per_project", self.files_per_project, 1)?;
        range("methods_per_class", self.methods_per_class, 1)?;
        range("lines_per_method", self.lines_per_method, 2)?;
        range("defects_per_project", self.defects_per_project, 0)?;
        prob("edit_intensity", self.edit_intensity)?;
        let p = &self.perturbations;
        prob("top_insert", p.top_insert)?;
        prob("method_move", p.method_move)?;
        prob("file_rename", p.file_rename)?;
        prob("file_delete", p.file_delete)?;
        if self.scas.is_empty() {
            return Err(Error::Config("at least one analyzer profile is required".into()));
        }
        for s in &self.scas {
            prob("detection", s.detection)?;
            prob("fp_rate", s.fp_rate)?;
        }
        let ids: Vec<ScaId> = self.scas.iter().map(|s| s.sca.clone()).collect();
        crate::model::validate_sca_order(&ids)
    }

    pub fn sca_ids(&self) -> Vec<ScaId> {
        self.scas.iter().map(|s| s.sca.clone()).collect()
    }
}

pub const FEATURE_NAMES: [&str; 6] = [
    "Project_CountDeclClass",
    "Project_CountLine",
    "Class_CountLine_average",
    "Class_CountDeclMethod_average",
    "Class_CountLineCodeDecl_average",
    "Method_CountLine_average",
];

pub fn feature_names(cfg: &SynthConfig) -> Vec<String> {
    FEATURE_NAMES
        .iter()
        .map(|s| s.to_string())
        .chain((0..cfg.noise_features).map(|k| format!("Noise_{k}")))
        .collect()
}

/// The analyzer-specific name of a unified category.
pub fn original_type(sca: &ScaId, category: &str) -> String {
    format!("{}_{}", sca.as_str().to_ascii_uppercase(), category.to_ascii_uppercase())
}

/// Maps every analyzer's type names onto all taxonomy categories.
pub fn gdc_mapping(scas: &[ScaId], taxonomy: &GdcTaxonomy) -> GdcMapping {
    let mut m = GdcMapping::new();
    for s in scas {
        for c in taxonomy.categories() {
            m.insert(s.clone(), original_type(s, &c.name), c.gdc_id.clone())
                .expect("generated names are unique");
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteKind {
    Defect,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fate {
    Kept,
    Fixed,
    Moved,
    Renamed,
    Deleted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarningTruth {
    pub sca: ScaId,
    pub class: String,
    pub start_line: u32,
    pub end_line: u32,
    #[serde(rename = "type")]
    pub original_type: String,
    pub expected: WarningLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteTruth {
    pub kind: SiteKind,
    pub class: String,
    pub method: String,
    /// First line of the site in the older release.
    pub line: u32,
    pub gdc_id: String,
    pub fate: Fate,
    pub expected: WarningLabel,
    /// Analyzers reporting the site in the older release, in corpus order.
    pub reported_by: Vec<ScaId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectTruth {
    pub project: String,
    pub archetype: Option<usize>,
    pub preferred: Option<ScaId>,
    pub sites: Vec<SiteTruth>,
    /// Every older-release warning with the label the pipeline should give.
    pub warnings: Vec<WarningTruth>,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthManifest {
    pub seed: u64,
    pub scas: Vec<ScaId>,
    pub feature_names: Vec<String>,
    pub projects: Vec<ProjectTruth>,
}

#[derive(Debug, Clone)]
pub struct GeneratedProject {
    pub snapshot: ProjectSnapshot,
    pub truth: ProjectTruth,
}

#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub config: SynthConfig,
    pub taxonomy: GdcTaxonomy,
    pub mapping: GdcMapping,
    pub projects: Vec<GeneratedProject>,
}

impl GeneratedCorpus {
    pub fn scas(&self) -> Vec<ScaId> {
        self.config.sca_ids()
    }

    pub fn manifest(&self) -> TruthManifest {
        TruthManifest {
            seed: self.config.seed,
            scas: self.scas(),
            feature_names: feature_names(&self.config),
            projects: self.projects.iter().map(|p| p.truth.clone()).collect(),
        }
    }

    pub fn features_csv(&self) -> String {
        let rows: Vec<(String, Vec<f64>)> = self
            .projects
            .iter()
            .map(|p| (p.truth.project.clone(), p.truth.features.clone()))
            .collect();
        features_to_csv(&feature_names(&self.config), &rows)
    }
}

struct Method {
    name: String,
    header: usize,
    /// Body occupies `header + 1 ..= close - 1`.
    close: usize,
}

struct ClassFile {
    path: String,
    class_path: String,
    lines: Vec<String>,
    methods: Vec<Method>,
    filler: usize,
}

struct Shape {
    files: (usize, usize),
    methods: (usize, usize),
    body: (usize, usize),
    filler: usize,
}

fn pick(rng: &mut SplitMix64, (lo, hi): (usize, usize)) -> usize {
    rng.range_inclusive(lo as u64, hi as u64) as usize
}

fn shape(cfg: &SynthConfig, archetype: Option<usize>, rng: &mut SplitMix64) -> Shape {
    match archetype {
        None => Shape {
            files: cfg.files_per_project,
            methods: cfg.methods_per_class,
            body: cfg.lines_per_method,
            filler: 10 + rng.below(3) as usize,
        },
        Some(a) => {
            let (files, methods, body) = match a % 3 {
                0 => ((8, 10), (3, 4), (6, 8)),
                1 => ((3, 4), (9, 12), (6, 8)),
                _ => ((4, 5), (5, 6), (14, 18)),
            };
            Shape {
                files,
                methods,
                body,
                filler: 10 + 3 * a,
            }
        }
    }
}

fn build_class(project: &str, c: usize, shape: &Shape, rng: &mut SplitMix64) -> ClassFile {
    let name = format!("Class{c}");
    let mut lines = vec![
        format!("package com.synth.{project};"),
        String::new(),
        format!("public class {name} {{"),
    ];
    for k in 0..shape.filler {
        lines.push(format!(
            "    private long c{c}f{k} = {}L + c{c}g{k} * {};",
            rng.below(100_000),
            rng.below(1000)
        ));
    }
    lines.push(String::new());
    let mut methods = Vec::new();
    for m in 0..pick(rng, shape.methods) {
        let header = lines.len();
        lines.push(format!("    public void m{m}() {{"));
        for l in 0..pick(rng, shape.body) {
            lines.push(format!(
                "        long v{c}_{m}_{l} = {} ^ w{c}_{m}_{l}({});",
                rng.below(1_000_000),
                rng.below(100)
            ));
        }
        methods.push(Method {
            name: format!("m{m}"),
            header,
            close: lines.len(),
        });
        lines.push("    }".to_string());
        lines.push(String::new());
    }
    lines.push("}".to_string());
    ClassFile {
        path: format!("com/synth/{project}/{name}.java"),
        class_path: format!("com.synth.{project}.{name}"),
        lines,
        methods,
        filler: shape.filler,
    }
}

struct Site {
    kind: SiteKind,
    file: usize,
    method: usize,
    /// 0-based index of the first of the two site lines.
    line: usize,
    gdc_id: String,
    fixed: bool,
    moved: bool,
    /// Per analyzer in corpus order: the start offset (0 or 1) if reported.
    reports: Vec<Option<u32>>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum FileFate {
    Normal,
    Renamed,
    Deleted,
}

fn features(files: &[ClassFile], noise: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let n = files.len() as f64;
    let lines: usize = files.iter().map(|f| f.lines.len()).sum();
    let methods: usize = files.iter().map(|f| f.methods.len()).sum();
    let method_lines: usize = files
        .iter()
        .flat_map(|f| f.methods.iter().map(|m| m.close - m.header + 1))
        .sum();
    let filler: usize = files.iter().map(|f| f.filler).sum();
    let mut v = vec![
        n,
        lines as f64,
        lines as f64 / n,
        methods as f64 / n,
        filler as f64 / n,
        method_lines as f64 / methods.max(1) as f64,
    ];
    v.extend((0..noise).map(|_| rng.next_f64()));
    v
}

/// Generates project number `index` of the corpus described by `cfg`.
pub fn generate_project(cfg: &SynthConfig, taxonomy: &GdcTaxonomy, index: usize) -> GeneratedProject {
    let mut rng = SplitMix64::derive(cfg.seed, index as u64);
    let project = format!("p{index:03}");
    let scas = cfg.sca_ids();
    let archetype = cfg.planted_preferences.then_some(index % scas.len());
    let shape = shape(cfg, archetype, &mut rng);
    let files: Vec<ClassFile> = (0..pick(&mut rng, shape.files))
        .map(|c| build_class(&project, c, &shape, &mut rng))
        .collect();
    let categories: Vec<String> = taxonomy.categories().iter().map(|c| c.gdc_id.clone()).collect();

    let p = cfg.perturbations;
    let fates: Vec<FileFate> = files
        .iter()
        .map(|_| {
            if rng.bernoulli(p.file_delete) {
                FileFate::Deleted
            } else if rng.bernoulli(p.file_rename) {
                FileFate::Renamed
            } else {
                FileFate::Normal
            }
        })
        .collect();

    let mut slots: Vec<(usize, usize)> = files
        .iter()
        .enumerate()
        .flat_map(|(f, cf)| (0..cf.methods.len()).map(move |m| (f, m)))
        .collect();
    rng.shuffle(&mut slots);
    let mut slots = slots.into_iter();
    let mut sites: Vec<Site> = Vec::new();

    let new_site = |kind: SiteKind, (file, method): (usize, usize), rng: &mut SplitMix64| {
        let m = &files[file].methods[method];
        let body_len = m.close - m.header - 1;
        let line = m.header + 1 + rng.below((body_len - 1) as u64) as usize;
        Site {
            kind,
            file,
            method,
            line,
            gdc_id: categories[rng.below(categories.len() as u64) as usize].clone(),
            fixed: false,
            moved: false,
            reports: vec![None; scas.len()],
        }
    };
    let jitter = |rng: &mut SplitMix64| if cfg.line_jitter { rng.below(2) as u32 } else { 0 };

    let n_defects = pick(&mut rng, cfg.defects_per_project);
    for _ in 0..n_defects {
        let Some(slot) = slots.next() else { break };
        let mut s = new_site(SiteKind::Defect, slot, &mut rng);
        s.fixed = fates[s.file] == FileFate::Normal && rng.bernoulli(cfg.edit_intensity);
        for (k, prof) in cfg.scas.iter().enumerate() {
            let detect = match archetype {
                Some(a) if a == k => {
                    if s.fixed {
                        1.0
                    } else {
                        0.05
                    }
                }
                _ => prof.detection,
            };
            if rng.bernoulli(detect) {
                s.reports[k] = Some(jitter(&mut rng));
            }
        }
        sites.push(s);
    }
    let planted = sites.len();
    'noise: for (k, prof) in cfg.scas.iter().enumerate() {
        if archetype == Some(k) {
            continue;
        }
        let count = (0..planted).filter(|_| rng.bernoulli(prof.fp_rate)).count();
        for _ in 0..count {
            let Some(slot) = slots.next() else { break 'noise };
            let mut s = new_site(SiteKind::Noise, slot, &mut rng);
            s.reports[k] = Some(jitter(&mut rng));
            sites.push(s);
        }
    }
    for s in &mut sites {
        let last_method = files[s.file].methods.len() - 1;
        s.moved = fates[s.file] == FileFate::Normal
            && !s.fixed
            && s.method != last_method
            && rng.bernoulli(p.method_move);
    }
    // A method moves at most once even if several draws select it.
    let mut moved_methods: BTreeMap<(usize, usize), ()> = BTreeMap::new();
    for s in &sites {
        if s.moved {
            moved_methods.insert((s.file, s.method), ());
        }
    }

    // Older release and reports.
    let old_date = NaiveDate::from_ymd_opt(2022, 1, 1).expect("valid date");
    let new_date = NaiveDate::from_ymd_opt(2023, 1, 1).expect("valid date");
    let mut old = Release::new("r1", old_date);
    for f in &files {
        old.files.insert(f.path.clone(), f.lines.clone());
    }

    // Newer release: per file, the new text plus where each old line went.
    let mut new = Release::new("r2", new_date);
    let mut positions: Vec<Vec<Option<usize>>> = Vec::new();
    let mut new_class: Vec<String> = Vec::new();
    for (fi, f) in files.iter().enumerate() {
        let mut tagged: Vec<(Option<usize>, String)> =
            f.lines.iter().cloned().enumerate().map(|(i, l)| (Some(i), l)).collect();
        for s in sites.iter().filter(|s| s.file == fi && s.fixed) {
            for i in [s.line, s.line + 1] {
                tagged[i].1 = format!("        checked{fi}_{i}(r{});", rng.below(1_000_000));
            }
        }
        for (mi, m) in f.methods.iter().enumerate().rev() {
            if moved_methods.contains_key(&(fi, mi)) {
                // The block includes the blank line after the closing brace.
                let start = tagged.iter().position(|t| t.0 == Some(m.header)).expect("header present");
                let block: Vec<_> = tagged.drain(start..start + (m.close - m.header + 2)).collect();
                let end = tagged.len() - 1;
                tagged.splice(end..end, block);
            }
        }
        if fates[fi] == FileFate::Normal && rng.bernoulli(p.top_insert) {
            let k = 1 + rng.below(3) as usize;
            let imports: Vec<_> = (0..k)
                .map(|j| (None, format!("import com.synth.shared.Helper{fi}_{j};")))
                .collect();
            tagged.splice(1..1, imports);
        }
        let mut pos = vec![None; f.lines.len()];
        for (ni, (oi, _)) in tagged.iter().enumerate() {
            if let Some(oi) = oi {
                pos[*oi] = Some(ni);
            }
        }
        let mut class_path = f.class_path.clone();
        let mut path = f.path.clone();
        if fates[fi] == FileFate::Renamed {
            class_path = f.class_path.replace(".Class", ".Renamed");
            path = f.path.replace("/Class", "/Renamed");
            tagged[2].1 = tagged[2].1.replace("class Class", "class Renamed");
        }
        if fates[fi] != FileFate::Deleted {
            new.files.insert(path, tagged.into_iter().map(|t| t.1).collect());
        }
        positions.push(pos);
        new_class.push(class_path);
    }

    let mut reports_old: BTreeMap<ScaId, Vec<RawWarning>> = scas.iter().map(|s| (s.clone(), Vec::new())).collect();
    let mut reports_new = reports_old.clone();
    let mut truth_sites = Vec::new();
    let mut truth_warnings = Vec::new();
    sites.sort_by_key(|s| (s.file, s.line));
    for s in &sites {
        let f = &files[s.file];
        let category = taxonomy
            .categories()
            .iter()
            .find(|c| c.gdc_id == s.gdc_id)
            .expect("category from taxonomy");
        let (fate, expected) = match fates[s.file] {
            FileFate::Deleted => (Fate::Deleted, WarningLabel::Unknown),
            FileFate::Renamed => (Fate::Renamed, WarningLabel::Unactionable),
            FileFate::Normal if s.fixed => (Fate::Fixed, WarningLabel::Actionable),
            FileFate::Normal if s.moved => (Fate::Moved, WarningLabel::Unactionable),
            FileFate::Normal => (Fate::Kept, WarningLabel::Unactionable),
        };
        let method = f.methods[s.method].name.clone();
        let mut reported_by = Vec::new();
        for (k, offset) in s.reports.iter().enumerate() {
            let Some(j) = offset else { continue };
            let sca = &scas[k];
            reported_by.push(sca.clone());
            let original = original_type(sca, &category.name);
            let raw = |class_path: &str, first: usize| RawWarning {
                sca: sca.clone(),
                original_type: original.clone(),
                class_path: class_path.to_string(),
                method_path: Some(method.clone()),
                start_line: first as u32 + 1 + j,
                end_line: first as u32 + 2,
                message: Some(format!("{} in {method}", category.name)),
                severity: None,
            };
            let w = raw(&f.class_path, s.line);
            truth_warnings.push(WarningTruth {
                sca: sca.clone(),
                class: w.class_path.clone(),
                start_line: w.start_line,
                end_line: w.end_line,
                original_type: original.clone(),
                expected,
            });
            reports_old.get_mut(sca).expect("declared").push(w);
            if matches!(fate, Fate::Kept | Fate::Moved | Fate::Renamed) {
                let first = positions[s.file][s.line].expect("unfixed site lines survive");
                reports_new
                    .get_mut(sca)
                    .expect("declared")
                    .push(raw(&new_class[s.file], first));
            }
        }
        truth_sites.push(SiteTruth {
            kind: s.kind,
            class: f.class_path.clone(),
            method,
            line: s.line as u32 + 1,
            gdc_id: s.gdc_id.clone(),
            fate,
            expected,
            reported_by,
        });
    }

    let features = features(&files, cfg.noise_features, &mut rng);
    let snapshot = ProjectSnapshot::new(project.clone(), old, new, reports_old, reports_new)
        .expect("generated releases are ordered");
    GeneratedProject {
        snapshot,
        truth: ProjectTruth {
            project,
            archetype,
            preferred: archetype.map(|a| scas[a].clone()),
            sites: truth_sites,
            warnings: truth_warnings,
            features,
        },
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<GeneratedCorpus> {
    cfg.validate()?;
    let taxonomy = GdcTaxonomy::illustrative_default();
    let mapping = gdc_mapping(&cfg.sca_ids(), &taxonomy);
    let projects = (0..cfg.n_projects)
        .map(|i| generate_project(cfg, &taxonomy, i))
        .collect();
    Ok(GeneratedCorpus {
        config: cfg.clone(),
        taxonomy,
        mapping,
        projects,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("manifest serializes");
    s.push('\n');
    s
}

fn write_release(dir: &Path, project: &str, release: &Release, reports: &BTreeMap<ScaId, Vec<RawWarning>>) -> Result<()> {
    let rdir = dir.join(&release.release_id);
    for (path, lines) in &release.files {
        let mut text = lines.join("\n");
        text.push('\n');
        write(&rdir.join("src").join(path), &text)?;
    }
    for (sca, ws) in reports {
        let report = CanonicalReport::from_warnings(project, &release.release_id, sca, ws);
        write(&rdir.join("reports").join(format!("{sca}.json")), &report.to_json())?;
    }
    Ok(())
}

/// Writes the generated corpus under `out_dir`:
///
/// ```text
/// corpus/...        ingestion layout
/// taxonomy.tsv
/// gdc_map.tsv
/// features.csv
/// truth.json
/// ```
pub fn write_corpus(corpus: &GeneratedCorpus, out_dir: &Path) -> Result<TruthManifest> {
    let root = out_dir.join("corpus");
    fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    write(
        &root.join("corpus.json"),
        &json(&CorpusManifest { scas: corpus.scas() }),
    )?;
    for p in &corpus.projects {
        let s = &p.snapshot;
        let dir = root.join(&s.project_id);
        let info = |r: &Release| ReleaseInfo {
            id: r.release_id.clone(),
            date: r.timestamp,
        };
        let manifest = ProjectManifest {
            project: s.project_id.clone(),
            releases: [info(&s.release_old), info(&s.release_new)],
        };
        write(&dir.join("project.json"), &json(&manifest))?;
        write_release(&dir, &s.project_id, &s.release_old, &s.reports_old)?;
        write_release(&dir, &s.project_id, &s.release_new, &s.reports_new)?;
    }
    write(&out_dir.join("taxonomy.tsv"), &corpus.taxonomy.to_tsv())?;
    write(&out_dir.join("gdc_map.tsv"), &corpus.mapping.to_tsv())?;
    write(&out_dir.join("features.csv"), &corpus.features_csv())?;
    let manifest = corpus.manifest();
    write(&out_dir.join("truth.json"), &json(&manifest))?;
    Ok(manifest)
}

pub fn generate_corpus(cfg: &SynthConfig, out_dir: &Path) -> Result<TruthManifest> {
    write_corpus(&generate(cfg)?, out_dir)
}

/// Labeled warnings of several analyzers clustered around well separated
/// sites: every cluster holds at most one warning per analyzer, so the best
/// grouping is unique. Member labels occasionally disagree with their
/// cluster to exercise voting.
pub fn alignment_case(seed: u64, scas: &[ScaId], max_per_sca: usize) -> BTreeMap<ScaId, Vec<AlignedWarning>> {
    let mut rng = SplitMix64::new(seed);
    let mut out: BTreeMap<ScaId, Vec<AlignedWarning>> = scas.iter().map(|s| (s.clone(), Vec::new())).collect();
    let clusters = rng.range_inclusive(1, max_per_sca.max(1) as u64) as usize;
    let classes = ["a.A", "a.B"];
    let types = ["F01", "F02", "N03"];
    for k in 0..clusters {
        let base = 10 + 20 * k as u32;
        let class = classes[rng.below(2) as usize];
        let ty = types[rng.below(3) as usize];
        let cluster_label = if rng.bernoulli(0.5) {
            WarningLabel::Actionable
        } else {
            WarningLabel::Unactionable
        };
        for sca in scas {
            if !rng.bernoulli(0.7) {
                continue;
            }
            let start = base + rng.below(2) as u32;
            let end = base + 1 + rng.below(2) as u32;
            let label = if rng.bernoulli(0.15) {
                match cluster_label {
                    WarningLabel::Actionable => WarningLabel::Unactionable,
                    _ => WarningLabel::Actionable,
                }
            } else {
                cluster_label
            };
            let list = out.get_mut(sca).expect("declared");
            let index = list.len();
            list.push(AlignedWarning {
                new_type: ty.to_string(),
                class_info: class.to_string(),
                start_line: start,
                end_line: end,
                label,
                origin: Origin {
                    sca: sca.clone(),
                    index,
                },
            });
        }
    }
    for list in out.values_mut() {
        rng.shuffle(list);
        for (i, w) in list.iter_mut().enumerate() {
            w.origin.index = i;
        }
    }
    out
}

/// A small, deliberately repetitive release pair with random edits and
/// random warnings, for invariant checks where matches may be ambiguous.
#[derive(Debug, Clone)]
pub struct FuzzPair {
    pub old: Release,
    pub new: Release,
    pub old_warnings: Vec<RawWarning>,
    pub new_warnings: Vec<RawWarning>,
    pub mapping: GdcMapping,
}

pub fn fuzz_release_pair(seed: u64) -> FuzzPair {
    let mut rng = SplitMix64::new(seed);
    let sca = ScaId::new("fz").expect("valid id");
    let mut mapping = GdcMapping::new();
    for (t, g) in [("T1", "F01"), ("T2", "F02")] {
        mapping
            .insert(sca.clone(), t.to_string(), g.to_string())
            .expect("unique");
    }
    let vocab = ["x = 1;", "y++;", "call(a, b);", "return z;", "}", "if (q) {"];
    let date = |y| NaiveDate::from_ymd_opt(y, 1, 1).expect("valid date");
    let mut old = Release::new("old", date(2020));
    let mut new = Release::new("new", date(2021));
    let n_files = 1 + rng.below(2) as usize;
    for f in 0..n_files {
        let path = format!("z/C{f}.java");
        let len = 10 + rng.below(25) as usize;
        let lines: Vec<String> = (0..len)
            .map(|_| vocab[rng.below(vocab.len() as u64) as usize].to_string())
            .collect();
        let mut edited = lines.clone();
        for _ in 0..rng.below(5) {
            let i = rng.below(edited.len() as u64) as usize;
            match rng.below(3) {
                0 => {
                    edited.remove(i);
                    if edited.is_empty() {
                        edited.push("x = 1;".into());
                    }
                }
                1 => edited.insert(i, vocab[rng.below(vocab.len() as u64) as usize].to_string()),
                _ => edited[i] = format!("w{};", rng.below(3)),
            }
        }
        old.files.insert(path.clone(), lines);
        if !rng.bernoulli(0.1) {
            new.files.insert(path, edited);
        }
    }
    let warnings = |release: &Release, rng: &mut SplitMix64| -> Vec<RawWarning> {
        let files: Vec<(&String, &Vec<String>)> = release.files.iter().collect();
        if files.is_empty() {
            return Vec::new();
        }
        (0..rng.below(8))
            .map(|_| {
                let (path, lines) = files[rng.below(files.len() as u64) as usize];
                let stem = path.trim_end_matches(".java").replace('/', ".");
                let start = 1 + rng.below(lines.len() as u64) as u32;
                let end = (start + rng.below(2) as u32).min(lines.len() as u32);
                RawWarning {
                    sca: sca.clone(),
                    original_type: if rng.bernoulli(0.5) { "T1" } else { "T2" }.to_string(),
                    class_path: stem,
                    method_path: rng.bernoulli(0.5).then(|| format!("m{}", rng.below(2))),
                    start_line: start,
                    end_line: end,
                    message: None,
                    severity: None,
                }
            })
            .collect()
    };
    let old_warnings = warnings(&old, &mut rng);
    let new_warnings = warnings(&new, &mut rng);
    FuzzPair {
        old,
        new,
        old_warnings,
        new_warnings,
        mapping,
    }
}

/// Five features over `n` projects and three classes. Two features are
/// informative: the class is the number of them that are positive. The
/// other three are independent noise. Returns the dataset and the names of
/// the informative pair.
pub fn rfe_benchmark(seed: u64, n: usize) -> (crate::dataset::PreferenceDataset, [String; 2]) {
    let mut rng = SplitMix64::new(seed);
    let names: Vec<String> = (0..5).map(|i| format!("f{i}")).collect();
    let mut cols: Vec<usize> = (0..5).collect();
    rng.shuffle(&mut cols);
    let (a, b) = (cols[0].min(cols[1]), cols[0].max(cols[1]));
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..5).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let class = (row[a] > 0.0) as usize + (row[b] > 0.0) as usize;
        rows.push(row);
        labels.push(vec![class]);
    }
    let scas = ["c0", "c1", "c2"].iter().map(|s| ScaId::new(*s).expect("valid id")).collect();
    let ds = crate::dataset::PreferenceDataset::new(
        names.clone(),
        (0..n).map(|i| format!("b{i:03}")).collect(),
        rows,
        labels,
        scas,
    )
    .expect("consistent by construction");
    (ds, [names[a].clone(), names[b].clone()])
}
