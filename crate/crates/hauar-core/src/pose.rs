//! Occupancy pose classification over detected regions.
//!
//! Replaces the final CNN stage with a nearest-centroid classifier over an
//! engineered feature: the HOG of the crop resized to 48x48, plus the box
//! log-aspect and the figure fill fraction. The empty room is a first-class
//! label so that detector false positives are absorbed instead of switching
//! appliances on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{resize_bilinear, Frame};
use crate::vision::{hog_descriptor, HogConfig, Rect, RoiSegment};

/// Side of the square crop fed to the pose HOG.
pub const POSE_CROP: u32 = 48;
/// How many times each scalar feature is repeated to balance the HOG mass.
pub const SCALAR_REPEAT: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum PoseError {
    #[error("segment too small to classify: {w}x{h}")]
    DegenerateSegment { w: u32, h: u32 },
    #[error("feature dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no training samples for class {0}")]
    MissingClass(PoseLabel),
}

/// Room occupancy state. The order is fixed and doubles as the confusion
/// matrix axis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoseLabel {
    Empty,
    Sit,
    Stand,
    Lie,
}

impl PoseLabel {
    pub const ALL: [PoseLabel; 4] = [PoseLabel::Empty, PoseLabel::Sit, PoseLabel::Stand, PoseLabel::Lie];

    pub fn index(self) -> usize {
        match self {
            PoseLabel::Empty => 0,
            PoseLabel::Sit => 1,
            PoseLabel::Stand => 2,
            PoseLabel::Lie => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PoseLabel::Empty => "empty",
            PoseLabel::Sit => "sit",
            PoseLabel::Stand => "stand",
            PoseLabel::Lie => "lie",
        }
    }

    pub fn parse(s: &str) -> Option<PoseLabel> {
        match s {
            "empty" => Some(PoseLabel::Empty),
            "sit" => Some(PoseLabel::Sit),
            "stand" => Some(PoseLabel::Stand),
            "lie" => Some(PoseLabel::Lie),
            _ => None,
        }
    }
}

impl std::fmt::Display for PoseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Feature vector for one segment: pose HOG, then log-aspect and fill, each
/// repeated [`SCALAR_REPEAT`] times.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFeature {
    values: Vec<f64>,
}

impl PoseFeature {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Extracts the pose feature of a segment: the crop is bilinearly resized
/// to 48x48 before the HOG; the box aspect and the fill fraction ride along
/// as repeated scalars.
pub fn extract_pose_feature(segment: &RoiSegment) -> Result<PoseFeature, PoseError> {
    let (w, h) = (segment.crop.width(), segment.crop.height());
    if w < 4 || h < 4 {
        return Err(PoseError::DegenerateSegment { w, h });
    }
    let resized = resize_bilinear(&segment.crop, POSE_CROP, POSE_CROP);
    let cfg = HogConfig::default();
    let mut values =
        hog_descriptor(&resized, Rect::new(0, 0, POSE_CROP, POSE_CROP), &cfg)
            .expect("48x48 crop is cell-aligned");
    let log_aspect = segment.bbox.log_aspect();
    let fill = fill_fraction(&segment.crop);
    values.extend(std::iter::repeat(log_aspect).take(SCALAR_REPEAT));
    values.extend(std::iter::repeat(fill).take(SCALAR_REPEAT));
    Ok(PoseFeature { values })
}

/// Fraction of crop pixels above the background level, with the background
/// estimated from the crop's 2-pixel border ring. A constant crop has fill
/// exactly 0.
pub fn fill_fraction(crop: &Frame) -> f64 {
    let (w, h) = (crop.width(), crop.height());
    let ring_width = 2.min(w / 2).max(1);
    let ring_height = 2.min(h / 2).max(1);
    let mut ring = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let on_ring = x < ring_width
                || y < ring_height
                || x >= w - ring_width
                || y >= h - ring_height;
            if on_ring {
                ring.push(crop.get(x, y));
            }
        }
    }
    ring.sort_unstable();
    let median = ring[ring.len() / 2];
    let mut dev: Vec<u8> = ring.iter().map(|&v| v.abs_diff(median)).collect();
    dev.sort_unstable();
    let mad = dev[dev.len() / 2] as f64;
    let threshold = median as f64 + (3.0 * 1.4826 * mad).max(16.0);
    let above = crop.pixels().iter().filter(|&&v| v as f64 > threshold).count();
    above as f64 / crop.pixels().len() as f64
}

/// Per-label centroids plus the empty-decision margin: when the distance to
/// the empty centroid comes within `empty_margin` of the best pose
/// distance, the vote goes to Empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseModel {
    /// One centroid per label, indexed by [`PoseLabel::index`].
    pub centroids: Vec<Vec<f64>>,
    pub empty_margin: f64,
}

pub const DEFAULT_EMPTY_MARGIN: f64 = 0.15;

impl PoseModel {
    pub fn dimension(&self) -> usize {
        self.centroids.first().map(Vec::len).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), PoseError> {
        if self.centroids.len() != 4 {
            return Err(PoseError::MissingClass(PoseLabel::Empty));
        }
        let dim = self.dimension();
        for c in &self.centroids {
            if c.len() != dim || dim == 0 {
                return Err(PoseError::DimensionMismatch { expected: dim, got: c.len() });
            }
        }
        Ok(())
    }
}

/// Fits one centroid per label as the arithmetic mean of that label's
/// features. Kahan-compensated, so sample order does not matter.
pub fn train_centroids(samples: &[(PoseFeature, PoseLabel)]) -> Result<PoseModel, PoseError> {
    let dim = samples.first().map(|(f, _)| f.len()).unwrap_or(0);
    let mut sums = vec![vec![0.0f64; dim]; 4];
    let mut compensation = vec![vec![0.0f64; dim]; 4];
    let mut counts = [0u64; 4];
    for (feature, label) in samples {
        if feature.len() != dim {
            return Err(PoseError::DimensionMismatch { expected: dim, got: feature.len() });
        }
        let k = label.index();
        counts[k] += 1;
        for (i, &v) in feature.values().iter().enumerate() {
            let y = v - compensation[k][i];
            let t = sums[k][i] + y;
            compensation[k][i] = (t - sums[k][i]) - y;
            sums[k][i] = t;
        }
    }
    for label in PoseLabel::ALL {
        if counts[label.index()] == 0 {
            return Err(PoseError::MissingClass(label));
        }
    }
    let centroids = sums
        .into_iter()
        .zip(counts)
        .map(|(sum, n)| sum.into_iter().map(|v| v / n as f64).collect())
        .collect();
    Ok(PoseModel { centroids, empty_margin: DEFAULT_EMPTY_MARGIN })
}

/// Nearest centroid by Euclidean distance, except that Empty wins whenever
/// its distance comes within `empty_margin` of the best pose distance.
/// Exact ties among poses resolve in the order Sit, Stand, Lie; the
/// returned distance is the winner's.
pub fn classify_roi(
    model: &PoseModel,
    feature: &PoseFeature,
) -> Result<(PoseLabel, f64), PoseError> {
    if feature.len() != model.dimension() {
        return Err(PoseError::DimensionMismatch {
            expected: model.dimension(),
            got: feature.len(),
        });
    }
    let distance = |label: PoseLabel| -> f64 {
        model.centroids[label.index()]
            .iter()
            .zip(feature.values())
            .map(|(c, v)| (c - v) * (c - v))
            .sum::<f64>()
            .sqrt()
    };
    let d_empty = distance(PoseLabel::Empty);
    let mut best = (PoseLabel::Sit, distance(PoseLabel::Sit));
    for label in [PoseLabel::Stand, PoseLabel::Lie] {
        let d = distance(label);
        if d < best.1 {
            best = (label, d);
        }
    }
    if d_empty <= best.1 + model.empty_margin {
        Ok((PoseLabel::Empty, d_empty))
    } else {
        Ok(best)
    }
}

/// Non-empty vote counts per pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PoseCounts {
    pub sit: u32,
    pub stand: u32,
    pub lie: u32,
}

impl PoseCounts {
    pub fn total(&self) -> u32 {
        self.sit + self.stand + self.lie
    }
}

/// Folds per-segment votes into one room state: all-Empty means Empty,
/// otherwise Empty votes are dropped and the majority pose wins with ties
/// resolved Stand over Sit over Lie.
pub fn aggregate_votes(votes: &[PoseLabel]) -> (PoseLabel, PoseCounts) {
    let mut counts = PoseCounts::default();
    for vote in votes {
        match vote {
            PoseLabel::Empty => {}
            PoseLabel::Sit => counts.sit += 1,
            PoseLabel::Stand => counts.stand += 1,
            PoseLabel::Lie => counts.lie += 1,
        }
    }
    if counts.total() == 0 {
        return (PoseLabel::Empty, counts);
    }
    // Tie precedence: Stand, then Sit, then Lie.
    let ranked = [
        (counts.stand, 2, PoseLabel::Stand),
        (counts.sit, 1, PoseLabel::Sit),
        (counts.lie, 0, PoseLabel::Lie),
    ];
    let winner = ranked
        .into_iter()
        .max_by_key(|&(count, rank, _)| (count, rank))
        .map(|(_, _, label)| label)
        .expect("non-empty ranking");
    (winner, counts)
}

/// Classifies the whole frame (as one segment covering everything) plus
/// every ROI, then aggregates with [`aggregate_votes`].
pub fn classify_frame(
    model: &PoseModel,
    frame: &Frame,
    segments: &[RoiSegment],
) -> (PoseLabel, PoseCounts) {
    let whole = RoiSegment {
        crop: frame.clone(),
        bbox: Rect::new(0, 0, frame.width(), frame.height()),
    };
    let mut votes = Vec::with_capacity(segments.len() + 1);
    for segment in std::iter::once(&whole).chain(segments) {
        let vote = extract_pose_feature(segment)
            .and_then(|f| classify_roi(model, &f))
            .map(|(label, _)| label)
            .unwrap_or(PoseLabel::Empty);
        votes.push(vote);
    }
    aggregate_votes(&votes)
}
