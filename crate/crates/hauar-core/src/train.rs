//! Model fitting from a generated dataset.
//!
//! The detector's linear scorer is a two-class centroid discriminant over
//! HOG window descriptors: `w = mu_person - mu_background`,
//! `b = -w . (mu_person + mu_background) / 2`. Person windows are the
//! sliding windows that pass the cascade and overlap a located figure, so
//! training sees exactly the distribution the detector scores at runtime.
//! Pose centroids are fit over figure crops (plus partially-visible
//! variants), whole-frame views, and background crops from empty rooms.
//! Everything is iterated in manifest order with compensated sums, so the
//! same manifest always yields a byte-identical model.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use thiserror::Error;

use crate::frame::{load_pgm, preprocess, Frame, FrameError, PreprocessConfig};
use crate::pipeline::ModelBundle;
use crate::pose::{
    extract_pose_feature, train_centroids, PoseError, PoseFeature, PoseLabel,
};
use crate::synth::DatasetManifest;
use crate::vision::{
    background_stats, eval_cascade, hog_descriptor, integral_image, salient_box_in,
    salient_threshold, DetectorModel, Rect, RoiSegment, ROI_MARGIN,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("manifest has no samples for class {0}")]
    MissingClass(PoseLabel),
    #[error("no usable person windows found in the training set")]
    NoPersonWindows,
    #[error("no background windows found in the training set")]
    NoBackgroundWindows,
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("frame {path}: {source}")]
    Decode { path: String, source: FrameError },
    #[error(transparent)]
    Pose(#[from] PoseError),
}

/// Fraction of the smaller of (window, figure) that must be covered for a
/// window to count as a person example.
const PERSON_OVERLAP: f64 = 0.45;
/// Keep every Nth background window from occupied / empty frames.
const BACKGROUND_STRIDE: usize = 7;
/// Simulated visibility for the partial-figure training variants.
const PARTIAL_VISIBILITY: f64 = 0.6;
/// Sensor-noise / illumination jitter applied to each training frame so
/// the model also sees the degraded regime: (noise sigma, gain) pairs.
const JITTERS: [(f64, f64); 2] = [(8.0, 0.75), (16.0, 1.3)];
/// Seed salt for the deterministic jitter stream.
const JITTER_SALT: u64 = 0x6a69_7474_6572_3031;

/// Trains a full model bundle from the dataset behind `manifest`, with
/// frame paths resolved against `base_dir`.
pub fn train(manifest: &DatasetManifest, base_dir: &Path) -> Result<ModelBundle, TrainError> {
    for label in PoseLabel::ALL {
        if manifest.counts().get(label) == 0 {
            return Err(TrainError::MissingClass(label));
        }
    }
    // The pipeline runs on raw intensities; equalization would flatten the
    // silhouette/background contrast the features rely on.
    let preprocess_cfg =
        PreprocessConfig { target_width: 128, target_height: 96, equalize: false };
    let mut detector = DetectorModel::default();

    let mut person_descriptors: Vec<Vec<f64>> = Vec::new();
    let mut background_sum = KahanVec::new(detector.weights.len());
    let mut pose_samples: Vec<(PoseFeature, PoseLabel)> = Vec::new();

    for (index, entry) in manifest.entries().iter().enumerate() {
        let path = base_dir.join(&entry.path);
        let bytes = fs::read(&path)
            .map_err(|source| TrainError::Read { path: entry.path.clone(), source })?;
        let frame = load_pgm(&bytes)
            .map_err(|source| TrainError::Decode { path: entry.path.clone(), source })?;
        let frame = preprocess(&frame, &preprocess_cfg);

        let figure = if entry.label == PoseLabel::Empty {
            None
        } else {
            let stats = background_stats(&frame);
            salient_box_in(
                &frame,
                Rect::new(0, 0, frame.width(), frame.height()),
                salient_threshold(&stats),
            )
        };

        // The figure geometry is unchanged by noise and gain, so the
        // located box carries over to every jittered version.
        let mut jittered = Vec::with_capacity(JITTERS.len());
        for (jitter_index, &(sigma, gain)) in JITTERS.iter().enumerate() {
            let seed = JITTER_SALT
                .wrapping_add(index as u64 * JITTERS.len() as u64 + jitter_index as u64);
            jittered.push(jitter_frame(&frame, sigma, gain, seed));
        }
        for version in std::iter::once(&frame).chain(&jittered) {
            collect_window_descriptors(
                version,
                figure,
                &detector,
                &mut person_descriptors,
                &mut background_sum,
            );
            collect_pose_samples(version, entry.label, figure, &mut pose_samples);
        }
    }

    if person_descriptors.is_empty() {
        return Err(TrainError::NoPersonWindows);
    }
    if background_sum.count == 0 {
        return Err(TrainError::NoBackgroundWindows);
    }
    let mut person_sum = KahanVec::new(detector.weights.len());
    for descriptor in &person_descriptors {
        person_sum.add(descriptor);
    }
    let mu_person = person_sum.mean();
    let mu_background = background_sum.mean();
    let weights: Vec<f64> =
        mu_person.iter().zip(&mu_background).map(|(p, n)| p - n).collect();
    let bias = -weights
        .iter()
        .zip(mu_person.iter().zip(&mu_background))
        .map(|(w, (p, n))| w * (p + n) / 2.0)
        .sum::<f64>();
    detector.weights = weights;
    detector.bias = bias;
    detector.score_threshold = calibrate_threshold(&detector, &person_descriptors);

    let pose = train_centroids(&pose_samples)?;
    Ok(ModelBundle::new(preprocess_cfg, detector, pose))
}

/// Recall-oriented score gate: low enough that nearly every training
/// person window passes, but never permissive beyond [`MIN_THRESHOLD`] —
/// the empty-room class absorbs the extra false positives this admits.
fn calibrate_threshold(detector: &DetectorModel, person_descriptors: &[Vec<f64>]) -> f64 {
    const RECALL_QUANTILE: f64 = 0.05;
    const MIN_THRESHOLD: f64 = -0.15;
    let mut scores: Vec<f64> = person_descriptors
        .iter()
        .map(|d| crate::vision::score_window(d, detector).expect("matching dimensions"))
        .collect();
    scores.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let idx = ((scores.len() as f64 * RECALL_QUANTILE) as usize).min(scores.len() - 1);
    scores[idx].clamp(MIN_THRESHOLD, 0.0)
}

/// Walks the same scale/stride window grid the detector uses and feeds the
/// class collections: cascade-passing windows over the figure are person
/// examples; windows clear of the figure are background examples.
fn collect_window_descriptors(
    frame: &Frame,
    figure: Option<Rect>,
    detector: &DetectorModel,
    person_descriptors: &mut Vec<Vec<f64>>,
    background_sum: &mut KahanVec,
) {
    let (win_w, win_h) = detector.window;
    let mut background_index = 0usize;
    for level in 0..detector.scale_levels {
        let factor = detector.scale_factor.powi(level as i32);
        let sw = (frame.width() as f64 * factor).round() as u32;
        let sh = (frame.height() as f64 * factor).round() as u32;
        if sw < win_w || sh < win_h {
            break;
        }
        let scaled = crate::frame::resize_bilinear(frame, sw, sh);
        let ii = integral_image(&scaled);
        let figure_scaled = figure.map(|f| Rect::new(
            (f.x as f64 * factor).round() as u32,
            (f.y as f64 * factor).round() as u32,
            ((f.w as f64 * factor).round() as u32).max(1),
            ((f.h as f64 * factor).round() as u32).max(1),
        ));
        for wy in (0..=sh - win_h).step_by(detector.stride as usize) {
            for wx in (0..=sw - win_w).step_by(detector.stride as usize) {
                let window = Rect::new(wx, wy, win_w, win_h);
                let overlap = figure_scaled
                    .map(|f| window.intersection_area(f))
                    .unwrap_or(0);
                if overlap == 0 {
                    background_index += 1;
                    if background_index % BACKGROUND_STRIDE != 0 {
                        continue;
                    }
                    let descriptor = hog_descriptor(&scaled, window, &detector.hog)
                        .expect("window aligned to cell grid");
                    background_sum.add(&descriptor);
                    continue;
                }
                let figure_scaled = figure_scaled.expect("overlap implies figure");
                let needed = (PERSON_OVERLAP
                    * window.area().min(figure_scaled.area()) as f64)
                    as u64;
                if overlap < needed.max(1) {
                    continue;
                }
                if !eval_cascade(&ii, (wx, wy), 1.0, &detector.cascade) {
                    continue;
                }
                let descriptor = hog_descriptor(&scaled, window, &detector.hog)
                    .expect("window aligned to cell grid");
                person_descriptors.push(descriptor);
            }
        }
    }
}

/// Pose feature samples for one frame. Whole-frame views always train as
/// Empty: at aggregation time the whole-frame vote is then dropped
/// whenever a real crop vote exists, so the crops decide the room state
/// and a lone whole-frame vote correctly reports an empty room. Occupied
/// frames contribute the figure crop plus two partial-visibility
/// variants; empty frames contribute window-shaped background crops that
/// stand in for detector false positives.
fn collect_pose_samples(
    frame: &Frame,
    label: PoseLabel,
    figure: Option<Rect>,
    samples: &mut Vec<(PoseFeature, PoseLabel)>,
) {
    let whole = RoiSegment {
        crop: frame.clone(),
        bbox: Rect::new(0, 0, frame.width(), frame.height()),
    };
    if let Ok(feature) = extract_pose_feature(&whole) {
        samples.push((feature, PoseLabel::Empty));
    }

    match (label, figure) {
        (PoseLabel::Empty, _) => {
            for bbox in [Rect::new(20, 24, 24, 48), Rect::new(84, 24, 24, 48)] {
                push_crop_sample(frame, bbox, PoseLabel::Empty, samples);
            }
        }
        (_, Some(bbox)) => {
            push_crop_sample(frame, bbox, label, samples);
            for variant in partial_variants(bbox, label) {
                push_crop_sample(frame, variant, label, samples);
            }
        }
        // Occupied frame whose figure could not be located: only the
        // whole-frame sample above.
        (_, None) => {}
    }
}

/// Adds Gaussian noise then a gain swing, matching the camera's own
/// degradation order.
fn jitter_frame(frame: &Frame, sigma: f64, gain: f64, seed: u64) -> Frame {
    use rand_distr::Distribution;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, sigma).expect("finite sigma");
    let pixels = frame
        .pixels()
        .iter()
        .map(|&v| ((v as f64 + normal.sample(&mut rng)) * gain).round().clamp(0.0, 255.0) as u8)
        .collect();
    Frame::new(frame.width(), frame.height(), pixels).expect("same dimensions")
}

fn push_crop_sample(
    frame: &Frame,
    bbox: Rect,
    label: PoseLabel,
    samples: &mut Vec<(PoseFeature, PoseLabel)>,
) {
    let region = bbox.expanded(ROI_MARGIN, frame.width(), frame.height());
    let segment = RoiSegment { crop: frame.crop(region.x, region.y, region.w, region.h), bbox };
    if let Ok(feature) = extract_pose_feature(&segment) {
        samples.push((feature, label));
    }
}

/// Sub-boxes matching the generator's partial-visibility clipping: sitters
/// and standers lose a side, liers lose their top or bottom.
fn partial_variants(bbox: Rect, label: PoseLabel) -> Vec<Rect> {
    let vf = PARTIAL_VISIBILITY;
    match label {
        PoseLabel::Stand | PoseLabel::Sit => {
            let w = ((bbox.w as f64 * vf).round() as u32).max(4);
            if w >= bbox.w {
                return Vec::new();
            }
            vec![
                Rect::new(bbox.x, bbox.y, w, bbox.h),
                Rect::new(bbox.x + bbox.w - w, bbox.y, w, bbox.h),
            ]
        }
        PoseLabel::Lie => {
            let h = ((bbox.h as f64 * vf).round() as u32).max(4);
            if h >= bbox.h {
                return Vec::new();
            }
            vec![
                Rect::new(bbox.x, bbox.y, bbox.w, h),
                Rect::new(bbox.x, bbox.y + bbox.h - h, bbox.w, h),
            ]
        }
        PoseLabel::Empty => Vec::new(),
    }
}

/// Compensated running mean over fixed-length vectors.
struct KahanVec {
    sums: Vec<f64>,
    compensation: Vec<f64>,
    count: u64,
}

impl KahanVec {
    fn new(dim: usize) -> Self {
        Self { sums: vec![0.0; dim], compensation: vec![0.0; dim], count: 0 }
    }

    fn add(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.sums.len());
        self.count += 1;
        for (i, &v) in values.iter().enumerate() {
            let y = v - self.compensation[i];
            let t = self.sums[i] + y;
            self.compensation[i] = (t - self.sums[i]) - y;
            self.sums[i] = t;
        }
    }

    fn mean(&self) -> Vec<f64> {
        self.sums.iter().map(|s| s / self.count as f64).collect()
    }
}
