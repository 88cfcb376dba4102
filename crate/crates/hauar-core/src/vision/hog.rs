//! Histogram-of-oriented-gradients descriptors.
//!
//! Central-difference gradients with replicated borders, unsigned
//! orientation binning with linear interpolation between adjacent bins, and
//! L2-hys block normalization. The descriptor of a region depends only on
//! the region's own pixels.

use serde::{Deserialize, Serialize};

use crate::frame::Frame;
use crate::vision::{Rect, VisionError};

/// HOG layout and normalization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HogConfig {
    /// Cell side in pixels.
    pub cell: u32,
    /// Block side in cells.
    pub block: u32,
    /// Number of unsigned orientation bins over 0..180 degrees.
    pub bins: usize,
    /// Block stride in cells.
    pub block_stride: u32,
    /// L2-hys clip value.
    pub clip: f64,
    /// Normalization guard.
    pub epsilon: f64,
}

impl Default for HogConfig {
    fn default() -> Self {
        Self { cell: 8, block: 2, bins: 9, block_stride: 1, clip: 0.2, epsilon: 1e-6 }
    }
}

/// Descriptor length for a `w x h` region under `cfg`.
pub fn descriptor_len(w: u32, h: u32, cfg: &HogConfig) -> usize {
    let cells_x = w / cfg.cell;
    let cells_y = h / cfg.cell;
    if cells_x < cfg.block || cells_y < cfg.block {
        return 0;
    }
    let blocks_x = (cells_x - cfg.block) / cfg.block_stride + 1;
    let blocks_y = (cells_y - cfg.block) / cfg.block_stride + 1;
    (blocks_x * blocks_y * cfg.block * cfg.block) as usize * cfg.bins
}

/// Computes the HOG descriptor of `region` within `frame`.
///
/// The region dimensions must be divisible by the cell size and hold at
/// least one block. Blocks are emitted in row-major order.
pub fn hog_descriptor(
    frame: &Frame,
    region: Rect,
    cfg: &HogConfig,
) -> Result<Vec<f64>, VisionError> {
    if region.x + region.w > frame.width() || region.y + region.h > frame.height() {
        return Err(VisionError::RectOutOfBounds {
            rect: region,
            width: frame.width(),
            height: frame.height(),
        });
    }
    if region.w % cfg.cell != 0 || region.h % cfg.cell != 0 {
        return Err(VisionError::RegionMisaligned { rect: region, cell: cfg.cell });
    }
    let cells_x = region.w / cfg.cell;
    let cells_y = region.h / cfg.cell;
    if cells_x < cfg.block || cells_y < cfg.block {
        return Err(VisionError::RegionMisaligned { rect: region, cell: cfg.cell });
    }

    // Orientation histogram per cell.
    let mut hist = vec![0.0f64; (cells_x * cells_y) as usize * cfg.bins];
    let bin_width = 180.0 / cfg.bins as f64;
    for py in 0..region.h {
        for px in 0..region.w {
            let (gx, gy) = central_gradient(frame, region, px, py);
            let magnitude = (gx * gx + gy * gy).sqrt();
            if magnitude == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            if angle >= 180.0 {
                angle -= 180.0;
            }
            // Linear vote split between the two nearest bin centers; centers
            // sit at 0, 20, ..., 160 degrees and wrap at 180.
            let pos = angle / bin_width;
            let lo = pos.floor();
            let hi_weight = pos - lo;
            let lo_bin = lo as usize % cfg.bins;
            let hi_bin = (lo_bin + 1) % cfg.bins;
            let cell = (py / cfg.cell) * cells_x + px / cfg.cell;
            let base = cell as usize * cfg.bins;
            hist[base + lo_bin] += magnitude * (1.0 - hi_weight);
            hist[base + hi_bin] += magnitude * hi_weight;
        }
    }

    // L2-hys per block, blocks concatenated row-major.
    let blocks_x = (cells_x - cfg.block) / cfg.block_stride + 1;
    let blocks_y = (cells_y - cfg.block) / cfg.block_stride + 1;
    let block_len = (cfg.block * cfg.block) as usize * cfg.bins;
    let mut descriptor = Vec::with_capacity((blocks_x * blocks_y) as usize * block_len);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let mut block = Vec::with_capacity(block_len);
            for cy in 0..cfg.block {
                for cx in 0..cfg.block {
                    let cell = (by * cfg.block_stride + cy) * cells_x
                        + bx * cfg.block_stride
                        + cx;
                    let base = cell as usize * cfg.bins;
                    block.extend_from_slice(&hist[base..base + cfg.bins]);
                }
            }
            l2_hys(&mut block, cfg.clip, cfg.epsilon);
            descriptor.extend_from_slice(&block);
        }
    }
    Ok(descriptor)
}

/// Central differences with borders replicated at the region edges.
#[inline]
fn central_gradient(frame: &Frame, region: Rect, px: u32, py: u32) -> (f64, f64) {
    let sample = |dx: i64, dy: i64| -> f64 {
        let x = (px as i64 + dx).clamp(0, region.w as i64 - 1) as u32;
        let y = (py as i64 + dy).clamp(0, region.h as i64 - 1) as u32;
        frame.get(region.x + x, region.y + y) as f64
    };
    (sample(1, 0) - sample(-1, 0), sample(0, 1) - sample(0, -1))
}

fn l2_hys(block: &mut [f64], clip: f64, epsilon: f64) {
    let norm = (block.iter().map(|v| v * v).sum::<f64>() + epsilon * epsilon).sqrt();
    for v in block.iter_mut() {
        *v = (*v / norm).min(clip);
    }
    let norm = (block.iter().map(|v| v * v).sum::<f64>() + epsilon * epsilon).sqrt();
    for v in block.iter_mut() {
        *v /= norm;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Unoptimized reference implementation: per-pixel loops, no shared
    /// state, written independently of `hog_descriptor`.
    pub(crate) fn naive_hog(frame: &Frame, region: Rect, cfg: &HogConfig) -> Vec<f64> {
        let cells_x = region.w / cfg.cell;
        let cells_y = region.h / cfg.cell;
        let fetch = |x: i64, y: i64| -> f64 {
            let cx = x.clamp(0, region.w as i64 - 1) as u32;
            let cy = y.clamp(0, region.h as i64 - 1) as u32;
            frame.get(region.x + cx, region.y + cy) as f64
        };
        let mut cell_hists =
            vec![vec![0.0f64; cfg.bins]; (cells_x * cells_y) as usize];
        for y in 0..region.h as i64 {
            for x in 0..region.w as i64 {
                let gx = fetch(x + 1, y) - fetch(x - 1, y);
                let gy = fetch(x, y + 1) - fetch(x, y - 1);
                let mag = (gx * gx + gy * gy).sqrt();
                if mag == 0.0 {
                    continue;
                }
                let mut theta = gy.atan2(gx).to_degrees();
                while theta < 0.0 {
                    theta += 180.0;
                }
                while theta >= 180.0 {
                    theta -= 180.0;
                }
                let bin_width = 180.0 / cfg.bins as f64;
                let pos = theta / bin_width;
                let lower = pos.floor();
                let frac = pos - lower;
                let lower_bin = lower as usize % cfg.bins;
                let cell_idx =
                    ((y as u32 / cfg.cell) * cells_x + (x as u32 / cfg.cell)) as usize;
                cell_hists[cell_idx][lower_bin] += mag * (1.0 - frac);
                cell_hists[cell_idx][(lower_bin + 1) % cfg.bins] += mag * frac;
            }
        }
        let mut out = Vec::new();
        let blocks_x = (cells_x - cfg.block) / cfg.block_stride + 1;
        let blocks_y = (cells_y - cfg.block) / cfg.block_stride + 1;
        for by in 0..blocks_y {
            for bx in 0..blocks_x {
                let mut block = Vec::new();
                for cy in 0..cfg.block {
                    for cx in 0..cfg.block {
                        let idx = ((by * cfg.block_stride + cy) * cells_x
                            + bx * cfg.block_stride
                            + cx) as usize;
                        block.extend_from_slice(&cell_hists[idx]);
                    }
                }
                let n1 = (block.iter().map(|v| v * v).sum::<f64>()
                    + cfg.epsilon * cfg.epsilon)
                    .sqrt();
                let clipped: Vec<f64> =
                    block.iter().map(|v| (v / n1).min(cfg.clip)).collect();
                let n2 = (clipped.iter().map(|v| v * v).sum::<f64>()
                    + cfg.epsilon * cfg.epsilon)
                    .sqrt();
                out.extend(clipped.iter().map(|v| v / n2));
            }
        }
        out
    }

    #[test]
    fn constant_region_gives_zero_descriptor() {
        let frame = Frame::filled(24, 48, 131);
        let d = hog_descriptor(&frame, Rect::new(0, 0, 24, 48), &HogConfig::default())
            .unwrap();
        assert_eq!(d.len(), descriptor_len(24, 48, &HogConfig::default()));
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vertical_step_edge_votes_into_horizontal_gradient_bin() {
        // Left half dark, right half bright: gradient points along +x,
        // unsigned orientation 0 degrees.
        let mut frame = Frame::filled(16, 16, 20);
        for y in 0..16 {
            for x in 8..16 {
                frame.set(x, y, 220);
            }
        }
        let cfg = HogConfig::default();
        let d = hog_descriptor(&frame, Rect::new(0, 0, 16, 16), &cfg).unwrap();
        // One 2x2 block of 8x8 cells; cells straddling the edge put all
        // their mass in the 0-degree bin.
        let total: f64 = d.iter().sum();
        assert!(total > 0.0);
        for (i, &v) in d.iter().enumerate() {
            if i % cfg.bins != 0 {
                assert!(v.abs() < 1e-12, "unexpected mass in bin {}: {v}", i % cfg.bins);
            }
        }
    }

    #[test]
    fn matches_naive_reference_on_random_regions() {
        let cfg = HogConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pixels = (0..64 * 64).map(|_| rng.random()).collect();
        let frame = Frame::new(64, 64, pixels).unwrap();
        let region = Rect::new(8, 8, 24, 48);
        let fast = hog_descriptor(&frame, region, &cfg).unwrap();
        let slow = naive_hog(&frame, region, &cfg);
        assert_eq!(fast.len(), slow.len());
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9, "descriptor mismatch: {a} vs {b}");
        }
    }

    #[test]
    fn entries_bounded_to_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pixels = (0..48 * 48).map(|_| rng.random()).collect();
        let frame = Frame::new(48, 48, pixels).unwrap();
        let d = hog_descriptor(&frame, Rect::new(0, 0, 48, 48), &HogConfig::default())
            .unwrap();
        assert!(d.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn misaligned_region_is_error() {
        let frame = Frame::filled(40, 40, 0);
        let err = hog_descriptor(&frame, Rect::new(0, 0, 20, 40), &HogConfig::default());
        assert!(matches!(err, Err(VisionError::RegionMisaligned { .. })));
    }
}
