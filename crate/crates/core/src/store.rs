//! Directory layout of a workbench store.
//!
//! ```text
//! <root>/manifest.json
//! <root>/stages/<stage>.json               settings of the last preprocess / infer run
//! <root>/preprocessed/<case>/<view>.png      8-bit canonical image
//! <root>/preprocessed/<case>/<view>.mask.png
//! <root>/preprocessed/<case>/<view>.transform.json
//! <root>/bundles/<case>/scores.json, maps/<view>_<node>.png
//! <root>/assessments/<case>.json
//! <root>/concordance.jsonl
//! <root>/reviews.jsonl
//! <root>/sus.csv
//! <root>/session.json
//! <root>/report/
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::fsutil::write_atomic;
use crate::imageio::{load_mask, load_raster, save_mask, save_raster, ImageIoError};
use crate::inference::CaseAssessment;
use crate::manifest::{Manifest, ManifestError};
use crate::preprocess::PreprocessedView;
use crate::types::{TransformRecord, ViewLabel};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store {0} does not exist")]
    NotFound(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error(transparent)]
    Image(#[from] ImageIoError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("case {case_id}: missing {what}")]
    Missing { case_id: String, what: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    /// Opens an existing store directory.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        if !root.is_dir() {
            return Err(StoreError::NotFound(root.display().to_string()));
        }
        Ok(Self { root })
    }

    /// Opens `root`, creating it if needed.
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn stage_config_path(&self, stage: &str) -> PathBuf {
        self.root.join("stages").join(format!("{stage}.json"))
    }

    pub fn preprocessed_dir(&self, case_id: &str) -> PathBuf {
        self.root.join("preprocessed").join(case_id)
    }

    pub fn bundles_dir(&self) -> PathBuf {
        self.root.join("bundles")
    }

    pub fn bundle_dir(&self, case_id: &str) -> PathBuf {
        self.bundles_dir().join(case_id)
    }

    pub fn assessment_path(&self, case_id: &str) -> PathBuf {
        self.root.join("assessments").join(format!("{case_id}.json"))
    }

    pub fn concordance_path(&self) -> PathBuf {
        self.root.join("concordance.jsonl")
    }

    pub fn reviews_path(&self) -> PathBuf {
        self.root.join("reviews.jsonl")
    }

    pub fn sus_path(&self) -> PathBuf {
        self.root.join("sus.csv")
    }

    pub fn session_path(&self) -> PathBuf {
        self.root.join("session.json")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn load_manifest(&self) -> Result<Manifest, StoreError> {
        let p = self.manifest_path();
        if !p.exists() {
            return Err(StoreError::Missing { case_id: "*".into(), what: "manifest.json (run ingest)".into() });
        }
        Ok(Manifest::load_validated(&p)?)
    }

    pub fn save_manifest(&self, manifest: &Manifest) -> Result<(), StoreError> {
        let p = self.manifest_path();
        let doc = manifest.to_doc(&self.root);
        self.write_json(&p, &doc)
    }

    pub fn write_json<T: serde::Serialize>(&self, path: &Path, value: &T) -> Result<(), StoreError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|source| StoreError::Json { path: path.display().to_string(), source })?;
        text.push('\n');
        write_atomic(path, text.as_bytes()).map_err(io_err(path))
    }

    pub fn read_json<T: serde::de::DeserializeOwned>(&self, path: &Path) -> Result<T, StoreError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| StoreError::Json { path: path.display().to_string(), source })
    }

    fn view_paths(&self, case_id: &str, view: ViewLabel) -> (PathBuf, PathBuf, PathBuf) {
        let dir = self.preprocessed_dir(case_id);
        (
            dir.join(format!("{view}.png")),
            dir.join(format!("{view}.mask.png")),
            dir.join(format!("{view}.transform.json")),
        )
    }

    pub fn overlay_base_path(&self, case_id: &str, view: ViewLabel) -> PathBuf {
        self.view_paths(case_id, view).0
    }

    pub fn has_preprocessed(&self, case_id: &str) -> bool {
        ViewLabel::ALL.into_iter().all(|v| {
            let (a, b, c) = self.view_paths(case_id, v);
            a.exists() && b.exists() && c.exists()
        })
    }

    pub fn save_preprocessed(&self, case_id: &str, pv: &PreprocessedView) -> Result<(), StoreError> {
        let dir = self.preprocessed_dir(case_id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let (img, mask, tr) = self.view_paths(case_id, pv.view);
        save_raster(&pv.image, &img)?;
        save_mask(&pv.mask, &mask)?;
        self.write_json(&tr, &pv.transform)
    }

    pub fn load_preprocessed(&self, case_id: &str, view: ViewLabel) -> Result<PreprocessedView, StoreError> {
        let (img, mask, tr) = self.view_paths(case_id, view);
        if !img.exists() {
            return Err(StoreError::Missing {
                case_id: case_id.to_string(),
                what: format!("preprocessed view {view} (run preprocess)"),
            });
        }
        Ok(PreprocessedView {
            view,
            image: load_raster(&img)?,
            mask: load_mask(&mask)?,
            transform: self.read_json(&tr)?,
        })
    }

    pub fn load_transforms(&self, case_id: &str) -> Result<BTreeMap<ViewLabel, TransformRecord>, StoreError> {
        ViewLabel::ALL
            .into_iter()
            .map(|v| {
                let (_, _, tr) = self.view_paths(case_id, v);
                if !tr.exists() {
                    return Err(StoreError::Missing {
                        case_id: case_id.to_string(),
                        what: format!("transform for {v} (run preprocess)"),
                    });
                }
                Ok((v, self.read_json(&tr)?))
            })
            .collect()
    }

    pub fn has_assessment(&self, case_id: &str) -> bool {
        self.assessment_path(case_id).exists()
    }

    pub fn save_assessment(&self, a: &CaseAssessment) -> Result<(), StoreError> {
        self.write_json(&self.assessment_path(&a.case_id), a)
    }

    pub fn load_assessment(&self, case_id: &str) -> Result<CaseAssessment, StoreError> {
        let p = self.assessment_path(case_id);
        if !p.exists() {
            return Err(StoreError::Missing { case_id: case_id.to_string(), what: "assessment (run infer)".into() });
        }
        self.read_json(&p)
    }
}
