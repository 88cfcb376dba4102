//! Person detection: integral images, rectangle-feature cascade, HOG
//! descriptors, linear window scoring, multi-scale sliding-window search,
//! non-max suppression, and region-of-interest segmentation.

pub mod haar;
pub mod hog;
pub mod integral;
pub mod nms;
pub mod salience;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{resize_bilinear, Frame};

pub use haar::{default_person_cascade, eval_cascade, Cascade, CascadeStage, RectFeature, RectFeatureKind};
pub use hog::{descriptor_len, hog_descriptor, HogConfig};
pub use integral::{integral_image, rect_sum, IntegralImage};
pub use nms::{iou, nms, Detection};
pub use salience::{background_stats, salient_box_in, salient_threshold};

/// Margin added around a detection when cropping its region of interest.
pub const ROI_MARGIN: u32 = 4;

#[derive(Debug, Error, PartialEq)]
pub enum VisionError {
    #[error("rect {rect:?} out of bounds for {width}x{height} image")]
    RectOutOfBounds { rect: Rect, width: u32, height: u32 },
    #[error("region {rect:?} not aligned to the {cell}-pixel cell grid")]
    RegionMisaligned { rect: Rect, cell: u32 },
    #[error("descriptor length {got} does not match model weights {expected}")]
    DescriptorLength { expected: usize, got: usize },
    #[error("invalid rectangle feature: {0}")]
    BadFeature(String),
    #[error("invalid detector model: {0}")]
    BadModel(String),
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn intersection_area(&self, other: Rect) -> u64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 <= x0 || y1 <= y0 {
            0
        } else {
            (x1 - x0) as u64 * (y1 - y0) as u64
        }
    }

    /// Grows the rect by `margin` on every side, clamped to a `w x h` frame.
    pub fn expanded(&self, margin: u32, frame_w: u32, frame_h: u32) -> Rect {
        let x0 = self.x.saturating_sub(margin);
        let y0 = self.y.saturating_sub(margin);
        let x1 = (self.right() + margin).min(frame_w);
        let y1 = (self.bottom() + margin).min(frame_h);
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    }

    /// Log of height over width.
    pub fn log_aspect(&self) -> f64 {
        (self.h as f64 / self.w as f64).ln()
    }
}

/// Everything the detector needs: cascade pre-filter, HOG layout, linear
/// scorer, window geometry, scale ladder, and NMS threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub cascade: Cascade,
    pub hog: HogConfig,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub score_threshold: f64,
    pub window: (u32, u32),
    pub stride: u32,
    pub scale_factor: f64,
    pub scale_levels: u32,
    pub nms_iou: f64,
}

impl Default for DetectorModel {
    /// Structural defaults with zero weights; training fills in the scorer.
    fn default() -> Self {
        let hog = HogConfig::default();
        let weights = vec![0.0; descriptor_len(24, 48, &hog)];
        Self {
            cascade: default_person_cascade(),
            hog,
            weights,
            bias: 0.0,
            score_threshold: 0.0,
            window: (24, 48),
            stride: 8,
            scale_factor: 0.8,
            scale_levels: 3,
            nms_iou: 0.4,
        }
    }
}

impl DetectorModel {
    /// Checks the weight vector against the descriptor length implied by
    /// the window and HOG config.
    pub fn validate(&self) -> Result<(), VisionError> {
        let expected = descriptor_len(self.window.0, self.window.1, &self.hog);
        if expected == 0 {
            return Err(VisionError::BadModel("window holds no HOG block".into()));
        }
        if self.weights.len() != expected {
            return Err(VisionError::DescriptorLength {
                expected,
                got: self.weights.len(),
            });
        }
        if self.window.0 % self.hog.cell != 0 || self.window.1 % self.hog.cell != 0 {
            return Err(VisionError::BadModel(
                "window not aligned to the HOG cell grid".into(),
            ));
        }
        if self.stride == 0 || self.scale_levels == 0 {
            return Err(VisionError::BadModel("stride and scale levels must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.scale_factor) {
            return Err(VisionError::BadModel("scale factor must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Linear decision function: `dot(weights, descriptor) + bias`.
pub fn score_window(descriptor: &[f64], model: &DetectorModel) -> Result<f64, VisionError> {
    if descriptor.len() != model.weights.len() {
        return Err(VisionError::DescriptorLength {
            expected: model.weights.len(),
            got: descriptor.len(),
        });
    }
    let dot: f64 = descriptor.iter().zip(&model.weights).map(|(d, w)| d * w).sum();
    Ok(dot + model.bias)
}

/// A cropped person region plus the detection box it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiSegment {
    pub crop: Frame,
    pub bbox: Rect,
}

/// Multi-scale sliding-window person detector.
///
/// At each scale level the frame is downscaled by `scale_factor^level` and
/// a fixed window slides at `stride`. A window is a candidate when it
/// passes the cascade and its HOG score reaches the threshold. Candidate
/// boxes are mapped back to frame coordinates and snapped to the salient
/// silhouette they cover, so the surviving boxes hug the figure rather
/// than the window grid; duplicates then collapse in NMS. Results are
/// sorted by descending score.
pub fn detect_people(frame: &Frame, model: &DetectorModel) -> Vec<Detection> {
    model.validate().expect("detector model validated at load");
    let stats = background_stats(frame);
    let threshold = salient_threshold(&stats);
    let (win_w, win_h) = model.window;
    let mut candidates = Vec::new();

    for level in 0..model.scale_levels {
        let factor = model.scale_factor.powi(level as i32);
        let sw = (frame.width() as f64 * factor).round() as u32;
        let sh = (frame.height() as f64 * factor).round() as u32;
        if sw < win_w || sh < win_h {
            break;
        }
        let scaled = resize_bilinear(frame, sw, sh);
        let ii = integral_image(&scaled);
        for wy in (0..=sh - win_h).step_by(model.stride as usize) {
            for wx in (0..=sw - win_w).step_by(model.stride as usize) {
                if !eval_cascade(&ii, (wx, wy), 1.0, &model.cascade) {
                    continue;
                }
                let descriptor =
                    hog_descriptor(&scaled, Rect::new(wx, wy, win_w, win_h), &model.hog)
                        .expect("window aligned to cell grid");
                let score = score_window(&descriptor, model).expect("validated weights");
                if score < model.score_threshold {
                    continue;
                }
                let mapped = map_window_back(wx, wy, win_w, win_h, factor, frame);
                let refined = refine_box(frame, mapped, threshold);
                candidates.push(Detection { bbox: refined, score });
            }
        }
    }
    let kept = nms(&candidates, model.nms_iou);
    suppress_fragments(kept)
}

/// Fraction of a box that must lie inside a better detection for the box
/// to be discarded as a fragment.
const FRAGMENT_CONTAINMENT: f64 = 0.65;

/// Box refinement can snap two windows over the same figure to nested
/// boxes (the torso column inside the full silhouette). Their
/// intersection-over-union stays under the NMS threshold, so they are
/// dropped here instead: a detection mostly contained in a higher-scored
/// one describes the same person.
fn suppress_fragments(sorted: Vec<Detection>) -> Vec<Detection> {
    let mut kept: Vec<Detection> = Vec::with_capacity(sorted.len());
    for det in sorted {
        let contained = kept.iter().any(|k| {
            k.bbox.intersection_area(det.bbox) as f64
                >= FRAGMENT_CONTAINMENT * det.bbox.area() as f64
        });
        if !contained {
            kept.push(det);
        }
    }
    kept
}

/// One margin-expanded crop per detection, clamped to the frame. Boxes are
/// passed through untouched and never merged.
pub fn segment_rois(frame: &Frame, dets: &[Detection]) -> Vec<RoiSegment> {
    dets.iter()
        .map(|det| {
            let r = det.bbox.expanded(ROI_MARGIN, frame.width(), frame.height());
            RoiSegment { crop: frame.crop(r.x, r.y, r.w, r.h), bbox: det.bbox }
        })
        .collect()
}

fn map_window_back(wx: u32, wy: u32, ww: u32, wh: u32, factor: f64, frame: &Frame) -> Rect {
    let x = (wx as f64 / factor).round() as u32;
    let y = (wy as f64 / factor).round() as u32;
    let w = (ww as f64 / factor).round() as u32;
    let h = (wh as f64 / factor).round() as u32;
    let x = x.min(frame.width() - 1);
    let y = y.min(frame.height() - 1);
    Rect::new(x, y, w.min(frame.width() - x), h.min(frame.height() - y))
}

/// Snaps a window box to the tight box of the silhouette it covers. The
/// search region grows while the salient box presses against it, so a
/// window seeing only a slice of a wide figure (a lying body is wider
/// than the window) still reports the whole silhouette. The growth step
/// stays below the generator's minimum figure separation, so two distinct
/// people never merge. Falls back to the window box when nothing salient
/// is found.
fn refine_box(frame: &Frame, window: Rect, threshold: u8) -> Rect {
    const GROWTH_STEP: u32 = 4;
    const MAX_GROWTH_ROUNDS: u32 = 16;
    let mut search = window.expanded(ROI_MARGIN, frame.width(), frame.height());
    let mut best = None;
    for _ in 0..MAX_GROWTH_ROUNDS {
        let Some(bbox) = salient_box_in(frame, search, threshold) else { break };
        let pressing = (bbox.x == search.x && search.x > 0)
            || (bbox.y == search.y && search.y > 0)
            || (bbox.right() == search.right() && search.right() < frame.width())
            || (bbox.bottom() == search.bottom() && search.bottom() < frame.height());
        best = Some(bbox);
        if !pressing {
            break;
        }
        search = search.expanded(GROWTH_STEP, frame.width(), frame.height());
    }
    best.unwrap_or(window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_rois_empty_input() {
        let frame = Frame::filled(128, 96, 0);
        assert!(segment_rois(&frame, &[]).is_empty());
    }

    #[test]
    fn segment_rois_interior_box_margin_arithmetic() {
        let frame = Frame::filled(128, 96, 0);
        let det = Detection { bbox: Rect::new(10, 10, 24, 48), score: 1.0 };
        let segs = segment_rois(&frame, &[det]);
        assert_eq!(segs.len(), 1);
        assert_eq!((segs[0].crop.width(), segs[0].crop.height()), (32, 56));
        assert_eq!(segs[0].bbox, Rect::new(10, 10, 24, 48));
    }

    #[test]
    fn segment_rois_clamps_at_frame_corner() {
        let frame = Frame::filled(128, 96, 0);
        let det = Detection { bbox: Rect::new(0, 0, 24, 48), score: 1.0 };
        let segs = segment_rois(&frame, &[det]);
        assert_eq!((segs[0].crop.width(), segs[0].crop.height()), (28, 52));
    }

    #[test]
    fn flat_frame_yields_no_detections() {
        let frame = Frame::filled(128, 96, 90);
        let model = DetectorModel::default();
        assert!(detect_people(&frame, &model).is_empty());
    }

    #[test]
    fn score_window_zero_weights_returns_bias() {
        let model = DetectorModel { bias: 0.5, ..DetectorModel::default() };
        let d = vec![0.25; model.weights.len()];
        assert_eq!(score_window(&d, &model).unwrap(), 0.5);
    }

    #[test]
    fn score_window_self_dot_is_squared_norm() {
        let mut model = DetectorModel::default();
        for (i, w) in model.weights.iter_mut().enumerate() {
            *w = (i % 7) as f64 * 0.01;
        }
        let descriptor = model.weights.clone();
        let norm_sq: f64 = descriptor.iter().map(|v| v * v).sum();
        let got = score_window(&descriptor, &model).unwrap();
        assert!((got - norm_sq).abs() < 1e-12);
    }

    #[test]
    fn score_window_length_mismatch_is_error() {
        let model = DetectorModel::default();
        assert!(matches!(
            score_window(&[0.0; 3], &model),
            Err(VisionError::DescriptorLength { .. })
        ));
    }
}
