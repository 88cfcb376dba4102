//! Rectangle-difference features and the reject-early cascade pre-filter.
//!
//! Feature values are differences of adjacent rectangle mean intensities,
//! normalized by the window mean, so a uniform gain change leaves every
//! feature value untouched.

use serde::{Deserialize, Serialize};

use crate::vision::integral::{rect_mean, IntegralImage};
use crate::vision::{Rect, VisionError};

/// How the feature's rectangle is split into adjacent regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RectFeatureKind {
    /// Left half minus right half.
    TwoRectH,
    /// Top half minus bottom half.
    TwoRectV,
    /// Outer thirds minus twice the middle third, split along x.
    ThreeRectH,
}

/// A single decision stump over one rectangle feature.
///
/// `rect` is window-relative. The stump votes 1 when
/// `polarity * (value - threshold) > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectFeature {
    pub kind: RectFeatureKind,
    pub rect: Rect,
    pub polarity: i8,
    pub threshold: f64,
}

impl RectFeature {
    pub fn new(
        kind: RectFeatureKind,
        rect: Rect,
        polarity: i8,
        threshold: f64,
    ) -> Result<Self, VisionError> {
        if polarity != 1 && polarity != -1 {
            return Err(VisionError::BadFeature("polarity must be +1 or -1".into()));
        }
        if rect.w == 0 || rect.h == 0 {
            return Err(VisionError::BadFeature("feature rect must be non-empty".into()));
        }
        let (split_extent, divisor) = match kind {
            RectFeatureKind::TwoRectH => (rect.w, 2),
            RectFeatureKind::TwoRectV => (rect.h, 2),
            RectFeatureKind::ThreeRectH => (rect.w, 3),
        };
        if split_extent < divisor || split_extent % divisor != 0 {
            return Err(VisionError::BadFeature(format!(
                "rect extent {split_extent} not divisible into {divisor} parts"
            )));
        }
        Ok(Self { kind, rect, polarity, threshold })
    }

    /// Raw feature value: mean difference of the split regions, before the
    /// window-mean normalization.
    fn raw_value(&self, ii: &IntegralImage, origin: (u32, u32), scale: f64) -> f64 {
        let r = scale_rect(self.rect, origin, scale);
        match self.kind {
            RectFeatureKind::TwoRectH => {
                let half = r.w / 2;
                let left = Rect::new(r.x, r.y, half, r.h);
                let right = Rect::new(r.x + half, r.y, r.w - half, r.h);
                rect_mean(ii, left) - rect_mean(ii, right)
            }
            RectFeatureKind::TwoRectV => {
                let half = r.h / 2;
                let top = Rect::new(r.x, r.y, r.w, half);
                let bottom = Rect::new(r.x, r.y + half, r.w, r.h - half);
                rect_mean(ii, top) - rect_mean(ii, bottom)
            }
            RectFeatureKind::ThreeRectH => {
                let third = r.w / 3;
                let left = Rect::new(r.x, r.y, third, r.h);
                let mid = Rect::new(r.x + third, r.y, third, r.h);
                let right = Rect::new(r.x + 2 * third, r.y, r.w - 2 * third, r.h);
                rect_mean(ii, left) + rect_mean(ii, right) - 2.0 * rect_mean(ii, mid)
            }
        }
    }
}

/// One stage: a set of stumps whose vote count must reach `stage_threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeStage {
    pub stumps: Vec<RectFeature>,
    pub stage_threshold: f64,
}

/// Reject-early pre-filter: a window must pass every stage. The empty
/// cascade accepts everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cascade {
    /// Base detection window the stump rectangles are relative to.
    pub window: (u32, u32),
    pub stages: Vec<CascadeStage>,
}

impl Cascade {
    pub fn empty(window: (u32, u32)) -> Self {
        Self { window, stages: Vec::new() }
    }
}

/// Evaluates the cascade on the window at `origin`, scaled by `window_scale`.
/// The caller guarantees the scaled window lies inside the image.
pub fn eval_cascade(
    ii: &IntegralImage,
    origin: (u32, u32),
    window_scale: f64,
    cascade: &Cascade,
) -> bool {
    let window_rect = scale_rect(
        Rect::new(0, 0, cascade.window.0, cascade.window.1),
        origin,
        window_scale,
    );
    let window_mean = rect_mean(ii, window_rect);
    let norm = window_mean.max(1.0);
    for stage in &cascade.stages {
        let mut votes = 0u32;
        for stump in &stage.stumps {
            let value = stump.raw_value(ii, origin, window_scale) / norm;
            if stump.polarity as f64 * (value - stump.threshold) > 0.0 {
                votes += 1;
            }
        }
        if (votes as f64) < stage.stage_threshold {
            return false;
        }
    }
    true
}

fn scale_rect(rect: Rect, origin: (u32, u32), scale: f64) -> Rect {
    if scale == 1.0 {
        return Rect::new(origin.0 + rect.x, origin.1 + rect.y, rect.w, rect.h);
    }
    let x = origin.0 + (rect.x as f64 * scale).round() as u32;
    let y = origin.1 + (rect.y as f64 * scale).round() as u32;
    let w = ((rect.w as f64 * scale).round() as u32).max(1);
    let h = ((rect.h as f64 * scale).round() as u32).max(1);
    Rect::new(x, y, w, h)
}

/// The shipped body-contrast cascade for the 24x48 detection window.
///
/// A single stage that fires when any of its contrast stumps sees a strong
/// mean difference. Uniform windows produce all-zero feature values and are
/// rejected; windows containing part of a person light up at least one stump.
pub fn default_person_cascade() -> Cascade {
    let full = Rect::new(0, 0, 24, 48);
    let upper = Rect::new(0, 0, 24, 24);
    let lower = Rect::new(0, 24, 24, 24);
    let mut stumps = Vec::new();
    for rect in [full, upper, lower] {
        stumps.push(pair(RectFeatureKind::TwoRectV, rect, 0.06));
    }
    stumps.push(pair(RectFeatureKind::TwoRectH, full, 0.06));
    stumps.push(pair(RectFeatureKind::ThreeRectH, full, 0.08));
    let stumps = stumps.into_iter().flatten().collect();
    Cascade {
        window: (24, 48),
        stages: vec![CascadeStage { stumps, stage_threshold: 1.0 }],
    }
}

/// Two stumps covering both signs of a contrast.
fn pair(kind: RectFeatureKind, rect: Rect, magnitude: f64) -> [RectFeature; 2] {
    [
        RectFeature::new(kind, rect, 1, magnitude).expect("valid stump"),
        RectFeature::new(kind, rect, -1, -magnitude).expect("valid stump"),
    ]
}
