//! Dataset manifest: a JSON document listing cases, view images and lesion polygons.
//!
//! ```json
//! { "dataset_id": "demo",
//!   "cases": [ { "id": "c001",
//!                "views": { "LCC": "img/c001_LCC.png", "LMLO": "...", "RCC": "...", "RMLO": "..." },
//!                "birads": "4A", "density": "B",
//!                "report_findings": [ { "category": "Mass", "suspicious": true } ],
//!                "lesions": [ { "view": "LCC", "category": "Mass", "suspicious": true,
//!                               "polygon": [[10, 10], [40, 10], [25, 40]], "frame": "Original" } ] } ] }
//! ```
//!
//! Image paths are relative to the manifest's directory.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::{validate_polygon, GeometryError};
use crate::imageio::raster_dimensions;
use crate::types::{
    truth_from_findings, Birads, Case, Density, FinalCategory, Frame, GroundTruthLesion, Region, ReportFinding,
    TruthLabel, ViewLabel, CANONICAL_HEIGHT, CANONICAL_WIDTH,
};

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed manifest: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("case {case_id}: missing view {view}")]
    MissingView { case_id: String, view: ViewLabel },
    #[error("case {case_id}: unknown view `{view}`")]
    UnknownView { case_id: String, view: String },
    #[error("case {case_id}: image {path} is unreadable: {reason}")]
    MissingImage { case_id: String, path: String, reason: String },
    #[error("case {case_id}: bad polygon on lesion {index}: {source}")]
    BadPolygon { case_id: String, index: usize, source: GeometryError },
    #[error("duplicate case id {0}")]
    DuplicateCaseId(String),
    #[error("case {0}: suspicious lesion annotated on a case with no suspicious findings")]
    InconsistentTruth(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionEntry {
    pub view: ViewLabel,
    pub category: FinalCategory,
    pub suspicious: bool,
    pub polygon: Vec<[f64; 2]>,
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseEntry {
    pub id: String,
    pub views: BTreeMap<String, String>,
    pub birads: Birads,
    pub density: Density,
    #[serde(default)]
    pub report_findings: Vec<ReportFinding>,
    #[serde(default)]
    pub lesions: Vec<LesionEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_input: Option<u16>,
}

/// The on-disk document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestDoc {
    #[serde(default = "default_dataset_id")]
    pub dataset_id: String,
    pub cases: Vec<CaseEntry>,
}

fn default_dataset_id() -> String {
    "dataset".to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub dataset_id: String,
    pub cases: Vec<Case>,
}

/// Loads and validates a manifest file, returning its cases in file order.
pub fn load_manifest(path: &Path) -> Result<Vec<Case>, ManifestError> {
    Manifest::load(path).map(|m| m.cases)
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ManifestError::Io { path: path.display().to_string(), source })?;
        let doc: ManifestDoc = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_doc(doc, base)
    }

    /// Loads a manifest written by [`Manifest::save`] after validation, without
    /// opening the images again. Later stages report unreadable images per case.
    pub fn load_validated(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ManifestError::Io { path: path.display().to_string(), source })?;
        let doc: ManifestDoc = serde_json::from_str(&text)?;
        Self::build(doc, path.parent().unwrap_or(Path::new(".")), false)
    }

    pub fn from_doc(doc: ManifestDoc, base: &Path) -> Result<Self, ManifestError> {
        Self::build(doc, base, true)
    }

    fn build(doc: ManifestDoc, base: &Path, check_images: bool) -> Result<Self, ManifestError> {
        let mut seen = HashSet::new();
        let mut cases = Vec::with_capacity(doc.cases.len());
        for entry in doc.cases {
            if !seen.insert(entry.id.clone()) {
                return Err(ManifestError::DuplicateCaseId(entry.id));
            }
            cases.push(case_from_entry(entry, base, check_images)?);
        }
        Ok(Self { dataset_id: doc.dataset_id, cases })
    }

    /// Inverse of [`Manifest::from_doc`]; image paths are made relative to `base` where possible.
    pub fn to_doc(&self, base: &Path) -> ManifestDoc {
        ManifestDoc {
            dataset_id: self.dataset_id.clone(),
            cases: self.cases.iter().map(|c| case_to_entry(c, base)).collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        let base = path.parent().unwrap_or(Path::new("."));
        let text = serde_json::to_string_pretty(&self.to_doc(base))?;
        std::fs::write(path, text).map_err(|source| ManifestError::Io { path: path.display().to_string(), source })
    }
}

fn case_from_entry(entry: CaseEntry, base: &Path, check_images: bool) -> Result<Case, ManifestError> {
    let case_id = entry.id;
    let mut views = BTreeMap::new();
    for (key, rel) in &entry.views {
        let view: ViewLabel =
            key.parse().map_err(|_| ManifestError::UnknownView { case_id: case_id.clone(), view: key.clone() })?;
        views.insert(view, base.join(rel));
    }
    if let Some(view) = ViewLabel::ALL.into_iter().find(|v| !views.contains_key(v)) {
        return Err(ManifestError::MissingView { case_id, view });
    }

    let mut dims = BTreeMap::new();
    for (view, path) in views.iter().filter(|_| check_images) {
        let d = raster_dimensions(path).map_err(|e| ManifestError::MissingImage {
            case_id: case_id.clone(),
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        dims.insert(*view, d);
    }

    let mut gt_lesions = Vec::with_capacity(entry.lesions.len());
    for (index, lesion) in entry.lesions.into_iter().enumerate() {
        let polygon: Vec<(f64, f64)> = lesion.polygon.iter().map(|p| (p[0], p[1])).collect();
        let dims = match lesion.frame {
            Frame::Original => dims.get(&lesion.view).copied(),
            Frame::Canonical => Some((CANONICAL_WIDTH, CANONICAL_HEIGHT)),
        };
        if let Some((w, h)) = dims {
            validate_polygon(&polygon, w, h).map_err(|source| ManifestError::BadPolygon {
                case_id: case_id.clone(),
                index,
                source,
            })?;
        }
        gt_lesions.push(GroundTruthLesion {
            case_id: case_id.clone(),
            view: lesion.view,
            category: lesion.category,
            suspicious: lesion.suspicious,
            region: Region { polygon, frame: lesion.frame },
        });
    }

    let report_findings: BTreeSet<ReportFinding> = entry.report_findings.into_iter().collect();
    let truth_label = truth_from_findings(&report_findings);
    if truth_label != TruthLabel::Malignant && gt_lesions.iter().any(|l| l.suspicious) {
        return Err(ManifestError::InconsistentTruth(case_id));
    }
    Ok(Case {
        case_id,
        views,
        birads: entry.birads,
        density: entry.density,
        report_findings,
        gt_lesions,
        truth_label,
        max_input: entry.max_input,
    })
}

fn relative_to(path: &Path, base: &Path) -> PathBuf {
    path.strip_prefix(base).map(Path::to_path_buf).unwrap_or_else(|_| path.to_path_buf())
}

fn case_to_entry(case: &Case, base: &Path) -> CaseEntry {
    CaseEntry {
        id: case.case_id.clone(),
        views: case
            .views
            .iter()
            .map(|(v, p)| (v.to_string(), relative_to(p, base).to_string_lossy().into_owned()))
            .collect(),
        birads: case.birads,
        density: case.density,
        report_findings: case.report_findings.iter().copied().collect(),
        lesions: case
            .gt_lesions
            .iter()
            .map(|l| LesionEntry {
                view: l.view,
                category: l.category,
                suspicious: l.suspicious,
                polygon: l.region.polygon.iter().map(|&(x, y)| [x, y]).collect(),
                frame: l.region.frame,
            })
            .collect(),
        max_input: case.max_input,
    }
}
