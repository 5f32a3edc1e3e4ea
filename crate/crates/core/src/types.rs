//! Domain types shared by every stage of the workbench.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Canonical width of a preprocessed view, in pixels.
pub const CANONICAL_WIDTH: u32 = 1024;
/// Canonical height of a preprocessed view, in pixels.
pub const CANONICAL_HEIGHT: u32 = 1536;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Laterality {
    Left,
    Right,
}

/// One of the four standard screening views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViewLabel {
    LCC,
    LMLO,
    RCC,
    RMLO,
}

impl ViewLabel {
    pub const ALL: [ViewLabel; 4] = [ViewLabel::LCC, ViewLabel::LMLO, ViewLabel::RCC, ViewLabel::RMLO];

    pub fn laterality(self) -> Laterality {
        match self {
            ViewLabel::LCC | ViewLabel::LMLO => Laterality::Left,
            ViewLabel::RCC | ViewLabel::RMLO => Laterality::Right,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ViewLabel::LCC => "LCC",
            ViewLabel::LMLO => "LMLO",
            ViewLabel::RCC => "RCC",
            ViewLabel::RMLO => "RMLO",
        }
    }
}

impl fmt::Display for ViewLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for ViewLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ViewLabel::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// The three reporting categories every model output collapses into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FinalCategory {
    Calcification,
    Mass,
    Other,
}

impl FinalCategory {
    pub const ALL: [FinalCategory; 3] = [FinalCategory::Calcification, FinalCategory::Mass, FinalCategory::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            FinalCategory::Calcification => "Calcification",
            FinalCategory::Mass => "Mass",
            FinalCategory::Other => "Other",
        }
    }
}

impl fmt::Display for FinalCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Suspicious,
    Benign,
    Normal,
}

/// The nine classification outputs of the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelNode {
    SuspCalc,
    SuspMass,
    SuspAxAdeno,
    SuspArchDist,
    BenignCalc,
    BenignMass,
    BenignAxAdeno,
    BenignArchDist,
    Normal,
}

impl ModelNode {
    pub const ALL: [ModelNode; 9] = [
        ModelNode::SuspCalc,
        ModelNode::SuspMass,
        ModelNode::SuspAxAdeno,
        ModelNode::SuspArchDist,
        ModelNode::BenignCalc,
        ModelNode::BenignMass,
        ModelNode::BenignAxAdeno,
        ModelNode::BenignArchDist,
        ModelNode::Normal,
    ];

    pub fn kind(self) -> NodeKind {
        use ModelNode::*;
        match self {
            SuspCalc | SuspMass | SuspAxAdeno | SuspArchDist => NodeKind::Suspicious,
            BenignCalc | BenignMass | BenignAxAdeno | BenignArchDist => NodeKind::Benign,
            Normal => NodeKind::Normal,
        }
    }

    pub fn as_str(self) -> &'static str {
        use ModelNode::*;
        match self {
            SuspCalc => "SuspCalc",
            SuspMass => "SuspMass",
            SuspAxAdeno => "SuspAxAdeno",
            SuspArchDist => "SuspArchDist",
            BenignCalc => "BenignCalc",
            BenignMass => "BenignMass",
            BenignAxAdeno => "BenignAxAdeno",
            BenignArchDist => "BenignArchDist",
            Normal => "Normal",
        }
    }

    /// Lesion type shown to the user for this node, ignoring the suspicious
    /// score path. Only `Normal` has none.
    pub fn display_category(self) -> Option<(FinalCategory, bool)> {
        use ModelNode::*;
        match self {
            SuspCalc => Some((FinalCategory::Calcification, true)),
            SuspMass => Some((FinalCategory::Mass, true)),
            SuspAxAdeno | SuspArchDist => Some((FinalCategory::Other, true)),
            BenignCalc => Some((FinalCategory::Calcification, false)),
            BenignMass => Some((FinalCategory::Mass, false)),
            BenignAxAdeno | BenignArchDist => Some((FinalCategory::Other, false)),
            Normal => None,
        }
    }
}

impl fmt::Display for ModelNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelNode {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelNode::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Category aggregation of a model node.
///
/// Calcification only counts when suspicious, so `BenignCalc` maps to nothing
/// here (it still gets a display category, see [`ModelNode::display_category`]).
pub fn node_to_category(node: ModelNode) -> Option<(FinalCategory, bool)> {
    match node {
        ModelNode::BenignCalc | ModelNode::Normal => None,
        other => other.display_category(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Birads {
    #[serde(rename = "1")]
    B1,
    #[serde(rename = "2")]
    B2,
    #[serde(rename = "3")]
    B3,
    #[serde(rename = "4")]
    B4,
    #[serde(rename = "4A")]
    B4A,
    #[serde(rename = "4B")]
    B4B,
    #[serde(rename = "4C")]
    B4C,
    #[serde(rename = "5")]
    B5,
    #[serde(rename = "6")]
    B6,
}

/// ACR breast composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Density {
    A,
    B,
    C,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TruthLabel {
    Malignant,
    Benign,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReportFinding {
    pub category: FinalCategory,
    pub suspicious: bool,
}

/// Malignant if any suspicious finding, else Benign if any finding, else Normal.
pub fn truth_from_findings(findings: &BTreeSet<ReportFinding>) -> TruthLabel {
    if findings.iter().any(|f| f.suspicious) {
        TruthLabel::Malignant
    } else if !findings.is_empty() {
        TruthLabel::Benign
    } else {
        TruthLabel::Normal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn max_value(self) -> u32 {
        (1u32 << self.bits()) - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RasterError {
    #[error("sample buffer has {got} entries, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("sample {value} at index {index} does not fit in {bits} bits")]
    SampleOverflow { index: usize, value: u16, bits: u32 },
}

/// Single-channel image with 8- or 16-bit samples stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    depth: BitDepth,
    samples: Vec<u16>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, depth: BitDepth, samples: Vec<u16>) -> Result<Self, RasterError> {
        let expected = width as usize * height as usize;
        if samples.len() != expected {
            return Err(RasterError::SizeMismatch { expected, got: samples.len() });
        }
        if depth == BitDepth::Eight {
            if let Some((index, &value)) = samples.iter().enumerate().find(|(_, &v)| v > 255) {
                return Err(RasterError::SampleOverflow { index, value, bits: 8 });
            }
        }
        Ok(Self { width, height, depth, samples })
    }

    pub fn zeros(width: u32, height: u32, depth: BitDepth) -> Self {
        Self { width, height, depth, samples: vec![0; width as usize * height as usize] }
    }

    pub fn from_fn(width: u32, height: u32, depth: BitDepth, f: impl Fn(u32, u32) -> u16) -> Result<Self, RasterError> {
        let mut samples = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, depth, samples)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn depth(&self) -> BitDepth {
        self.depth
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.samples[y as usize * self.width as usize + x as usize]
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [u16] {
        &mut self.samples
    }
}

/// Row-major boolean mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width as usize * height as usize, "mask buffer size");
        Self { width, height, bits }
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self::new(width, height, vec![false; width as usize * height as usize])
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let w = self.width as usize;
        self.bits[y as usize * w + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the foreground.
    pub fn bounding_box(&self) -> Option<(u32, u32, u32, u32)> {
        let mut bbox: Option<(u32, u32, u32, u32)> = None;
        let w = self.width as usize;
        for (i, _) in self.bits.iter().enumerate().filter(|(_, &b)| b) {
            let (x, y) = ((i % w) as u32, (i / w) as u32);
            bbox = Some(match bbox {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        bbox
    }

    /// Whether every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

/// Coordinate frame a polygon is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    Original,
    Canonical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub polygon: Vec<(f64, f64)>,
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthLesion {
    pub case_id: String,
    pub view: ViewLabel,
    pub category: FinalCategory,
    pub suspicious: bool,
    pub region: Region,
}

/// One screening exam.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub case_id: String,
    /// Absolute paths, one per view; images are only read on demand.
    pub views: std::collections::BTreeMap<ViewLabel, PathBuf>,
    pub birads: Birads,
    pub density: Density,
    pub report_findings: BTreeSet<ReportFinding>,
    pub gt_lesions: Vec<GroundTruthLesion>,
    pub truth_label: TruthLabel,
    /// Full-scale intensity of the stored samples when it differs from the default.
    pub max_input: Option<u16>,
}

impl Case {
    /// Categories reported as suspicious.
    pub fn suspicious_categories(&self) -> BTreeSet<FinalCategory> {
        self.report_findings.iter().filter(|f| f.suspicious).map(|f| f.category).collect()
    }
}

/// Bookkeeping that maps original-frame coordinates onto the canonical frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub original_size: (u32, u32),
    pub crop_offset: (u32, u32),
    /// Padded size, i.e. the extent that is scaled to the canonical frame.
    pub pre_resize_size: (u32, u32),
    /// `(left, top, right, bottom)`.
    pub pad: (u32, u32, u32, u32),
    pub scale: (f64, f64),
}

impl TransformRecord {
    pub fn identity(width: u32, height: u32) -> Self {
        Self {
            original_size: (width, height),
            crop_offset: (0, 0),
            pre_resize_size: (width, height),
            pad: (0, 0, 0, 0),
            scale: (1.0, 1.0),
        }
    }

    /// Size of the cropped (pre-padding) region.
    pub fn crop_size(&self) -> (u32, u32) {
        (self.pre_resize_size.0 - self.pad.0 - self.pad.2, self.pre_resize_size.1 - self.pad.1 - self.pad.3)
    }

    pub fn forward_point(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let cx = (x - self.crop_offset.0 as f64 + self.pad.0 as f64) * self.scale.0;
        let cy = (y - self.crop_offset.1 as f64 + self.pad.1 as f64) * self.scale.1;
        (cx.clamp(0.0, CANONICAL_WIDTH as f64), cy.clamp(0.0, CANONICAL_HEIGHT as f64))
    }

    pub fn inverse_point(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (
            x / self.scale.0 - self.pad.0 as f64 + self.crop_offset.0 as f64,
            y / self.scale.1 - self.pad.1 as f64 + self.crop_offset.1 as f64,
        )
    }
}

/// Set of pixel indices (`y * width + x`) in a fixed raster, kept sorted.
///
/// Serialised as run-lengths `[start, len]` to keep large blobs compact.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "PixelRuns", from = "PixelRuns")]
pub struct PixelSet {
    pub width: u32,
    indices: Vec<u32>,
}

impl PixelSet {
    pub fn from_indices(width: u32, mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { width, indices }
    }

    pub fn from_points(width: u32, points: impl IntoIterator<Item = (u32, u32)>) -> Self {
        Self::from_indices(width, points.into_iter().map(|(x, y)| y * width + x).collect())
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn contains(&self, idx: u32) -> bool {
        self.indices.binary_search(&idx).is_ok()
    }

    pub fn points(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.indices.iter().map(move |&i| (i % self.width, i / self.width))
    }

    pub fn intersection_len(&self, other: &PixelSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        let (a, b) = (&self.indices, &other.indices);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn union<'a>(width: u32, sets: impl IntoIterator<Item = &'a PixelSet>) -> PixelSet {
        let all: Vec<u32> = sets.into_iter().flat_map(|s| s.indices.iter().copied()).collect();
        PixelSet::from_indices(width, all)
    }
}

#[derive(Serialize, Deserialize)]
struct PixelRuns {
    width: u32,
    runs: Vec<[u32; 2]>,
}

impl From<PixelSet> for PixelRuns {
    fn from(set: PixelSet) -> Self {
        let mut runs: Vec<[u32; 2]> = Vec::new();
        for &i in &set.indices {
            match runs.last_mut() {
                Some(r) if r[0] + r[1] == i => r[1] += 1,
                _ => runs.push([i, 1]),
            }
        }
        PixelRuns { width: set.width, runs }
    }
}

impl From<PixelRuns> for PixelSet {
    fn from(r: PixelRuns) -> Self {
        let indices = r.runs.iter().flat_map(|&[start, len]| start..start + len).collect();
        PixelSet::from_indices(r.width, indices)
    }
}
