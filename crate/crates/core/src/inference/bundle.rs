//! On-disk prediction bundle: `<case>/scores.json` plus `<case>/maps/<view>_<node>.png`,
//! map pixels encoding `probability * 255`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use image::GrayImage;

use super::{InferenceError, PredictionBundle, ProbabilityMap};
use crate::imageio::load_raster;
use crate::types::{ModelNode, ViewLabel};

type RawScores = BTreeMap<String, BTreeMap<String, f64>>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> InferenceError + '_ {
    move |source| InferenceError::Io { path: path.display().to_string(), source }
}

fn parse_view(case_id: &str, s: &str) -> Result<ViewLabel, InferenceError> {
    s.parse().map_err(|_| InferenceError::UnknownView { case_id: case_id.to_string(), view: s.to_string() })
}

fn parse_node(case_id: &str, s: &str) -> Result<ModelNode, InferenceError> {
    s.parse().map_err(|_| InferenceError::UnknownNode { case_id: case_id.to_string(), node: s.to_string() })
}

/// Loads and validates the bundle in `case_dir`; the directory name is the case id.
pub fn load_bundle(case_dir: &Path) -> Result<PredictionBundle, InferenceError> {
    let case_id = case_dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let scores_path = case_dir.join("scores.json");
    let text = fs::read_to_string(&scores_path).map_err(io_err(&scores_path))?;
    let raw: RawScores = serde_json::from_str(&text)
        .map_err(|source| InferenceError::Json { path: scores_path.display().to_string(), source })?;

    let mut node_scores = BTreeMap::new();
    for (view, nodes) in raw {
        let view = parse_view(&case_id, &view)?;
        let mut per_view = BTreeMap::new();
        for (node, score) in nodes {
            per_view.insert(parse_node(&case_id, &node)?, score);
        }
        node_scores.insert(view, per_view);
    }

    let mut maps = Vec::new();
    let maps_dir = case_dir.join("maps");
    if maps_dir.is_dir() {
        let mut entries: Vec<_> =
            fs::read_dir(&maps_dir).map_err(io_err(&maps_dir))?.collect::<Result<_, _>>().map_err(io_err(&maps_dir))?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("png") {
                continue;
            }
            let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let (view, node) = stem.split_once('_').unwrap_or((stem.as_str(), ""));
            let view = parse_view(&case_id, view)?;
            let node = parse_node(&case_id, node)?;
            let img = load_raster(&path)?;
            let full = img.depth().max_value() as f32;
            let values = img.samples().iter().map(|&v| v as f32 / full).collect();
            maps.push(ProbabilityMap { node, view, width: img.width(), height: img.height(), values });
        }
    }

    let bundle = PredictionBundle { case_id, node_scores, maps };
    bundle.validate()?;
    Ok(bundle)
}

/// Writes `bundle` under `root/<case_id>`, replacing any previous maps.
pub fn write_bundle(bundle: &PredictionBundle, root: &Path) -> Result<(), InferenceError> {
    bundle.validate()?;
    let dir = root.join(&bundle.case_id);
    let maps_dir = dir.join("maps");
    if maps_dir.exists() {
        fs::remove_dir_all(&maps_dir).map_err(io_err(&maps_dir))?;
    }
    fs::create_dir_all(&maps_dir).map_err(io_err(&maps_dir))?;

    let raw: RawScores = bundle
        .node_scores
        .iter()
        .map(|(v, nodes)| (v.to_string(), nodes.iter().map(|(n, &s)| (n.to_string(), s)).collect()))
        .collect();
    let scores_path = dir.join("scores.json");
    let json = serde_json::to_string_pretty(&raw).expect("scores serialise");
    fs::write(&scores_path, json).map_err(io_err(&scores_path))?;

    for m in &bundle.maps {
        let raw: Vec<u8> = m.values.iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect();
        let img = GrayImage::from_raw(m.width, m.height, raw).expect("validated map shape");
        let path = maps_dir.join(format!("{}_{}.png", m.view, m.node));
        img.save(&path).map_err(|source| {
            InferenceError::Image(crate::imageio::ImageIoError::Decode { path: path.display().to_string(), source })
        })?;
    }
    Ok(())
}

/// Rounds map values to the 8-bit grid used on disk.
pub fn quantize_map(values: &mut [f32]) {
    for v in values {
        *v = (*v * 255.0).round() / 255.0;
    }
}

#[cfg(test)]
mod tests {
    use super::super::{NATIVE_HEIGHT, NATIVE_WIDTH};
    use super::*;

    fn full_bundle(case_id: &str) -> PredictionBundle {
        let node_scores =
            ViewLabel::ALL.into_iter().map(|v| (v, ModelNode::ALL.into_iter().map(|n| (n, 0.25)).collect())).collect();
        let mut values = vec![0.0f32; (NATIVE_WIDTH * NATIVE_HEIGHT) as usize];
        values[5] = 0.8;
        let maps = vec![ProbabilityMap {
            node: ModelNode::SuspMass,
            view: ViewLabel::LCC,
            width: NATIVE_WIDTH,
            height: NATIVE_HEIGHT,
            values,
        }];
        PredictionBundle { case_id: case_id.into(), node_scores, maps }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = full_bundle("case-1");
        write_bundle(&b, dir.path()).unwrap();
        let loaded = load_bundle(&dir.path().join("case-1")).unwrap();
        quantize_map(&mut b.maps[0].values);
        assert_eq!(loaded, b);
    }

    #[test]
    fn missing_node_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&full_bundle("c"), dir.path()).unwrap();
        let path = dir.path().join("c/scores.json");
        let mut raw: RawScores = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        raw.get_mut("LMLO").unwrap().remove("SuspMass");
        fs::write(&path, serde_json::to_string(&raw).unwrap()).unwrap();
        assert!(matches!(
            load_bundle(&dir.path().join("c")),
            Err(InferenceError::MissingNode { node: ModelNode::SuspMass, .. })
        ));
    }

    #[test]
    fn out_of_range_score_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = full_bundle("c");
        write_bundle(&b, dir.path()).unwrap();
        b.node_scores.get_mut(&ViewLabel::RCC).unwrap().insert(ModelNode::SuspCalc, 1.2);
        let path = dir.path().join("c/scores.json");
        let raw: RawScores = b
            .node_scores
            .iter()
            .map(|(v, n)| (v.to_string(), n.iter().map(|(k, &s)| (k.to_string(), s)).collect()))
            .collect();
        fs::write(&path, serde_json::to_string(&raw).unwrap()).unwrap();
        assert!(matches!(load_bundle(&dir.path().join("c")), Err(InferenceError::ValueOutOfRange { .. })));
    }

    #[test]
    fn unknown_view_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_bundle(&full_bundle("c"), dir.path()).unwrap();
        let path = dir.path().join("c/scores.json");
        let mut raw: RawScores = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let lcc = raw.remove("LCC").unwrap();
        raw.insert("XCC".into(), lcc);
        fs::write(&path, serde_json::to_string(&raw).unwrap()).unwrap();
        assert!(matches!(load_bundle(&dir.path().join("c")), Err(InferenceError::UnknownView { .. })));
    }
}
