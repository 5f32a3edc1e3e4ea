//! TOML run configuration. Every key is optional; command-line flags win.
//!
//! ```toml
//! store = "work/store"
//! seed = 7
//! jobs = 4
//!
//! [preprocess]
//! closing_radius = 15
//!
//! [baseline]
//! calc_cluster_cells = 2
//!
//! [eval]
//! level = 0.95
//! operating_thresholds = { Cancer = 0.4 }
//! localization = { tau_hit = 0.5, tau_fp = 0.25 }
//!
//! [serve]
//! port = 8080
//! blinded = true
//! reviewers = ["r1", "r2"]
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use mammo_core::inference::BaselineConfig;
use mammo_core::preprocess::PreprocessConfig;
use mammo_core::report::EvalConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub store: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub preprocess: PreprocessConfig,
    pub baseline: BaselineConfig,
    pub eval: EvalConfig,
    pub serve: ServeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub port: u16,
    pub blinded: bool,
    pub reviewers: Vec<String>,
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self { port: 8080, blinded: true, reviewers: Vec::new(), ui_dir: None }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(cfg)
    }

    /// Rejects thresholds outside `[0, 1]` and a confidence level outside `(0, 1)`.
    pub fn validate(&self) -> anyhow::Result<()> {
        let e = &self.eval;
        let t = &e.aggregate.heatmap_thresholds;
        let mut checks = vec![
            ("eval.aggregate.heatmap_thresholds.calcification", t.calcification),
            ("eval.aggregate.heatmap_thresholds.mass", t.mass),
            ("eval.aggregate.heatmap_thresholds.other", t.other),
            ("eval.aggregate.benign_cap", e.aggregate.benign_cap),
            ("eval.localization.tau_hit", e.localization.tau_hit),
            ("eval.localization.tau_fp", e.localization.tau_fp),
            ("eval.fallback_threshold", e.fallback_threshold),
        ];
        let names: Vec<String> =
            e.operating_thresholds.keys().map(|c| format!("eval.operating_thresholds.{c}")).collect();
        checks.extend(names.iter().map(String::as_str).zip(e.operating_thresholds.values().copied()));
        for (name, v) in checks {
            if !(0.0..=1.0).contains(&v) {
                bail!("{name} = {v} is outside [0, 1]");
            }
        }
        if !(e.level > 0.0 && e.level < 1.0) {
            bail!("eval.level = {} must lie strictly between 0 and 1", e.level);
        }
        if e.bootstrap.reps == 0 {
            bail!("eval.bootstrap.reps must be positive");
        }
        if self.jobs == Some(0) {
            bail!("jobs must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_files_keep_defaults() {
        let cfg: RunConfig = toml::from_str(
            "seed = 3\n[eval]\nlevel = 0.9\noperating_thresholds = { Cancer = 0.4 }\n[eval.localization]\ntau_hit = 0.6\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.eval.level, 0.9);
        assert_eq!(cfg.eval.localization.tau_hit, 0.6);
        assert_eq!(cfg.eval.localization.tau_fp, 0.25);
        assert_eq!(cfg.preprocess, PreprocessConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn out_of_range_thresholds_are_rejected() {
        let cfg: RunConfig = toml::from_str("[eval]\noperating_thresholds = { Mass = 1.5 }\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("Mass"));
        let cfg: RunConfig = toml::from_str("[eval.localization]\ntau_fp = -0.1\n").unwrap();
        assert!(cfg.validate().is_err());
        assert!(toml::from_str::<RunConfig>("stor = \"x\"\n").is_err());
    }
}
