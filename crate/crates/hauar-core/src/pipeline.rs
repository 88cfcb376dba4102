//! The frame-analysis pipeline and the versioned model file that
//! configures it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{preprocess, Frame, PreprocessConfig};
use crate::pose::{classify_frame, PoseCounts, PoseLabel, PoseModel};
use crate::vision::{detect_people, segment_rois, Detection, DetectorModel};

/// Version tag written into every model file.
pub const MODEL_VERSION: &str = "hauar-model v1";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported model version {0:?}")]
    Version(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Detector, pose classifier, and the preprocessing they were trained
/// with, serialized together as one versioned JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub version: String,
    pub preprocess: PreprocessConfig,
    pub detector: DetectorModel,
    pub pose: PoseModel,
}

impl ModelBundle {
    pub fn new(preprocess: PreprocessConfig, detector: DetectorModel, pose: PoseModel) -> Self {
        Self { version: MODEL_VERSION.to_string(), preprocess, detector, pose }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.version != MODEL_VERSION {
            return Err(ModelError::Version(self.version.clone()));
        }
        self.detector.validate().map_err(|e| ModelError::Invalid(e.to_string()))?;
        self.pose.validate().map_err(|e| ModelError::Invalid(e.to_string()))?;
        if self.preprocess.target_width == 0 || self.preprocess.target_height == 0 {
            return Err(ModelError::Invalid("preprocess target dimensions".into()));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("model serializes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let bundle: ModelBundle = serde_json::from_slice(bytes)?;
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        Ok(fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Everything the pipeline concludes about one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnalysis {
    pub label: PoseLabel,
    pub counts: PoseCounts,
    pub detections: Vec<Detection>,
}

/// Runs preprocess, person detection, ROI segmentation, and pose
/// classification on one frame.
pub fn analyze_frame(frame: &Frame, bundle: &ModelBundle) -> FrameAnalysis {
    let prepared = preprocess(frame, &bundle.preprocess);
    let detections = detect_people(&prepared, &bundle.detector);
    let segments = segment_rois(&prepared, &detections);
    let (label, counts) = classify_frame(&bundle.pose, &prepared, &segments);
    FrameAnalysis { label, counts, detections }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::DEFAULT_EMPTY_MARGIN;

    fn tiny_bundle() -> ModelBundle {
        let detector = DetectorModel::default();
        let dim = 4;
        let pose = PoseModel {
            centroids: vec![vec![0.0; dim]; 4],
            empty_margin: DEFAULT_EMPTY_MARGIN,
        };
        ModelBundle::new(PreprocessConfig::default(), detector, pose)
    }

    #[test]
    fn model_file_roundtrip_is_byte_identical() {
        let bundle = tiny_bundle();
        let bytes = bundle.to_bytes();
        let reloaded = ModelBundle::from_bytes(&bytes).unwrap();
        assert_eq!(reloaded, bundle);
        assert_eq!(reloaded.to_bytes(), bytes);
    }

    #[test]
    fn version_mismatch_rejected() {
        let mut bundle = tiny_bundle();
        bundle.version = "hauar-model v999".into();
        let bytes = serde_json::to_vec(&bundle).unwrap();
        assert!(matches!(ModelBundle::from_bytes(&bytes), Err(ModelError::Version(_))));
    }

    #[test]
    fn corrupt_model_rejected() {
        assert!(ModelBundle::from_bytes(b"{not json").is_err());
    }
}
