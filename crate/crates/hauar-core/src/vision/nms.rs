//! Greedy non-maximum suppression over scored boxes.

use serde::{Deserialize, Serialize};

use crate::vision::Rect;

/// A scored candidate box from the sliding-window search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: Rect,
    pub score: f64,
}

/// Intersection-over-union of two boxes, in [0, 1].
pub fn iou(a: Rect, b: Rect) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Greedy suppression by descending score, ties broken by smaller x then y.
/// Keeps a box, then drops every remaining box with IoU strictly greater
/// than `iou_threshold` against any kept box.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<&Detection> = dets.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.bbox.x.cmp(&b.bbox.x))
            .then(a.bbox.y.cmp(&b.bbox.y))
    });
    let mut kept: Vec<Detection> = Vec::new();
    for det in order {
        if kept.iter().all(|k| iou(k.bbox, det.bbox) <= iou_threshold) {
            kept.push(det.clone());
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(x: u32, y: u32, w: u32, h: u32, score: f64) -> Detection {
        Detection { bbox: Rect::new(x, y, w, h), score }
    }

    #[test]
    fn empty_input_empty_output() {
        assert!(nms(&[], 0.5).is_empty());
    }

    #[test]
    fn single_detection_kept() {
        let d = det(3, 4, 10, 20, 0.7);
        assert_eq!(nms(&[d.clone()], 0.5), vec![d]);
    }

    #[test]
    fn lower_scored_overlap_suppressed() {
        // A = (0,0,10,10) score .9, B = (0,4,10,10) score .8.
        // Intersection 10x6 = 60, union 140, IoU = 3/7 ~ 0.43... use boxes
        // with IoU 0.6 instead: B = (0,2,10,10): inter 80, union 120,
        // IoU = 2/3 > 0.5.
        let a = det(0, 0, 10, 10, 0.9);
        let b = det(0, 2, 10, 10, 0.8);
        assert!((iou(a.bbox, b.bbox) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(nms(&[b.clone(), a.clone()], 0.5), vec![a]);
    }

    #[test]
    fn disjoint_boxes_all_kept_sorted() {
        let a = det(0, 0, 8, 8, 0.2);
        let b = det(50, 50, 8, 8, 0.9);
        let out = nms(&[a.clone(), b.clone()], 0.4);
        assert_eq!(out, vec![b, a]);
    }

    #[test]
    fn score_tie_broken_by_position() {
        let left = det(0, 0, 8, 8, 0.5);
        let right = det(40, 0, 8, 8, 0.5);
        let out = nms(&[right.clone(), left.clone()], 0.4);
        assert_eq!(out, vec![left, right]);
    }

    #[test]
    fn iou_at_threshold_is_not_suppressed() {
        // Identical scores; IoU exactly 0.5: two 10x10 boxes overlapping
        // in a 10x? region... use A=(0,0,10,10), B=(0,5,10,10):
        // inter 50, union 150 -> 1/3. Pick threshold 1/3 exactly.
        let a = det(0, 0, 10, 10, 0.9);
        let b = det(0, 5, 10, 10, 0.8);
        let t = iou(a.bbox, b.bbox);
        let out = nms(&[a.clone(), b.clone()], t);
        assert_eq!(out.len(), 2, "IoU == threshold must survive");
    }

    proptest! {
        #[test]
        fn prop_nms_output_is_antichain_subset_sorted(
            boxes in proptest::collection::vec(
                (0u32..100, 0u32..80, 1u32..40, 1u32..40, 0.0f64..1.0),
                0..20,
            ),
            threshold in 0.0f64..1.0,
        ) {
            let dets: Vec<Detection> = boxes
                .into_iter()
                .map(|(x, y, w, h, s)| det(x, y, w, h, s))
                .collect();
            let out = nms(&dets, threshold);
            // Subset of input.
            for d in &out {
                prop_assert!(dets.contains(d));
            }
            // Scores non-increasing.
            for pair in out.windows(2) {
                prop_assert!(pair[0].score >= pair[1].score);
            }
            // No kept pair exceeds the IoU threshold.
            for i in 0..out.len() {
                for j in i + 1..out.len() {
                    prop_assert!(iou(out[i].bbox, out[j].bbox) <= threshold);
                }
            }
        }
    }
}
