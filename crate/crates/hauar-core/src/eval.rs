//! Accuracy evaluation over generated datasets.
//!
//! The confusion matrix convention is fixed: rows are ground truth,
//! columns are predictions, both in the label order Empty, Sit, Stand,
//! Lie. Reports carry the convention in their own fields so the numbers
//! cannot be misread.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::load_pgm;
use crate::pipeline::{analyze_frame, ModelBundle};
use crate::pose::PoseLabel;
use crate::synth::DatasetManifest;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("confusion matrix is all zero")]
    EmptyMatrix,
    #[error("manifest has no entries")]
    EmptyManifest,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 4x4 truth-by-prediction counts in the fixed label order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 4],
}

impl ConfusionMatrix {
    pub fn add(&mut self, truth: PoseLabel, prediction: PoseLabel) {
        self.counts[truth.index()][prediction.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..4).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_total(&self, label: PoseLabel) -> u64 {
        self.counts[label.index()].iter().sum()
    }
}

/// Fraction of correct classifications: trace over total.
pub fn accuracy(matrix: &ConfusionMatrix) -> Result<f64, EvalError> {
    let total = matrix.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    Ok(matrix.diagonal() as f64 / total as f64)
}

/// Evaluation result over one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: String,
    /// Axis convention, spelled out for report readers.
    pub rows: String,
    pub columns: String,
    pub labels: [String; 4],
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
    pub per_class_recall: [f64; 4],
    pub sample_count: u64,
    pub skipped: u64,
}

pub const EVAL_REPORT_VERSION: &str = "hauar-eval v1";

impl EvalReport {
    pub fn from_matrix(matrix: ConfusionMatrix, skipped: u64) -> Result<Self, EvalError> {
        let accuracy = accuracy(&matrix)?;
        let mut per_class_recall = [0.0; 4];
        for label in PoseLabel::ALL {
            let row = matrix.row_total(label);
            if row > 0 {
                per_class_recall[label.index()] =
                    matrix.counts[label.index()][label.index()] as f64 / row as f64;
            }
        }
        Ok(Self {
            version: EVAL_REPORT_VERSION.to_string(),
            rows: "truth".to_string(),
            columns: "prediction".to_string(),
            labels: PoseLabel::ALL.map(|l| l.name().to_string()),
            matrix,
            accuracy,
            per_class_recall,
            sample_count: matrix.total() + skipped,
            skipped,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("report serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), EvalError> {
        Ok(fs::write(path, self.to_bytes())?)
    }

    /// Human-readable table, accuracy rounded to 4 decimal places.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("rows=truth columns=prediction\n");
        out.push_str(&format!("{:>8}", ""));
        for label in PoseLabel::ALL {
            out.push_str(&format!("{:>8}", label.name()));
        }
        out.push('\n');
        for truth in PoseLabel::ALL {
            out.push_str(&format!("{:>8}", truth.name()));
            for pred in PoseLabel::ALL {
                out.push_str(&format!(
                    "{:>8}",
                    self.matrix.counts[truth.index()][pred.index()]
                ));
            }
            out.push('\n');
        }
        out.push_str(&format!("accuracy {:.4}\n", self.accuracy));
        out
    }
}

/// Runs the full pipeline over every manifest entry and tallies the
/// confusion matrix. Unreadable frames are skipped and counted, not fatal.
pub fn evaluate(
    manifest: &DatasetManifest,
    base_dir: &Path,
    bundle: &ModelBundle,
) -> Result<EvalReport, EvalError> {
    if manifest.entries().is_empty() {
        return Err(EvalError::EmptyManifest);
    }
    let mut matrix = ConfusionMatrix::default();
    let mut skipped = 0u64;
    for entry in manifest.entries() {
        let frame = match fs::read(base_dir.join(&entry.path)).map_err(|_| ()).and_then(|bytes| {
            load_pgm(&bytes).map_err(|_| ())
        }) {
            Ok(frame) => frame,
            Err(()) => {
                skipped += 1;
                continue;
            }
        };
        let analysis = analyze_frame(&frame, bundle);
        matrix.add(entry.label, analysis.label);
    }
    EvalReport::from_matrix(matrix, skipped)
}
