//! Robust figure/background separation on raw intensities.
//!
//! The synthetic camera renders people brighter than the room background.
//! A median/MAD estimate of the background survives both sensor noise and
//! illumination gain, which makes the threshold usable across the whole
//! difficulty range without any per-frame tuning.

use crate::frame::Frame;
use crate::vision::Rect;

/// Gaussian consistency factor for the median absolute deviation.
const MAD_TO_SIGMA: f64 = 1.4826;
/// Floor on the figure/background contrast, in intensity levels.
const MIN_CONTRAST: f64 = 18.0;
/// Noise multiples a pixel must clear to count as figure. High enough
/// that, after the neighbour filter, a 128x96 noise field almost never
/// produces a marked cluster.
const SIGMA_FACTOR: f64 = 3.9;

/// Background intensity statistics of a frame.
#[derive(Debug, Clone, Copy)]
pub struct BackgroundStats {
    pub median: u8,
    pub sigma: f64,
}

/// Median and robust noise estimate over the whole frame. Figures cover a
/// minority of pixels, so the median lands on the background.
pub fn background_stats(frame: &Frame) -> BackgroundStats {
    let median = median_u8(frame.pixels());
    let deviations: Vec<u8> =
        frame.pixels().iter().map(|&v| v.abs_diff(median)).collect();
    let mad = median_u8(&deviations);
    BackgroundStats { median, sigma: mad as f64 * MAD_TO_SIGMA }
}

/// Intensity above which a pixel is treated as figure rather than
/// background.
pub fn salient_threshold(stats: &BackgroundStats) -> u8 {
    let offset = (SIGMA_FACTOR * stats.sigma).max(MIN_CONTRAST);
    (stats.median as f64 + offset).min(255.0) as u8
}

/// Tight bounding box of the above-threshold pixels inside `region`,
/// ignoring isolated specks. Returns `None` when nothing salient remains.
pub fn salient_box_in(frame: &Frame, region: Rect, threshold: u8) -> Option<Rect> {
    let (mut min_x, mut min_y) = (u32::MAX, u32::MAX);
    let (mut max_x, mut max_y) = (0u32, 0u32);
    let mut found = false;
    for y in region.y..region.y + region.h {
        for x in region.x..region.x + region.w {
            if frame.get(x, y) <= threshold {
                continue;
            }
            // A real figure pixel has salient neighbours; lone noise
            // excursions do not.
            if neighbour_count(frame, region, x, y, threshold) < 4 {
                continue;
            }
            found = true;
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
    }
    if !found {
        return None;
    }
    let bbox = Rect::new(min_x, min_y, max_x - min_x + 1, max_y - min_y + 1);
    if bbox.w < 3 || bbox.h < 3 {
        None
    } else {
        Some(bbox)
    }
}

fn neighbour_count(frame: &Frame, region: Rect, x: u32, y: u32, threshold: u8) -> u32 {
    let mut count = 0;
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx < region.x as i64
                || ny < region.y as i64
                || nx >= (region.x + region.w) as i64
                || ny >= (region.y + region.h) as i64
            {
                continue;
            }
            if frame.get(nx as u32, ny as u32) > threshold {
                count += 1;
            }
        }
    }
    count
}

fn median_u8(values: &[u8]) -> u8 {
    let mut hist = [0usize; 256];
    for &v in values {
        hist[v as usize] += 1;
    }
    let half = values.len().div_ceil(2);
    let mut seen = 0;
    for (v, &count) in hist.iter().enumerate() {
        seen += count;
        if seen >= half {
            return v as u8;
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_frame_has_zero_sigma_and_no_salient_box() {
        let frame = Frame::filled(32, 32, 80);
        let stats = background_stats(&frame);
        assert_eq!(stats.median, 80);
        assert_eq!(stats.sigma, 0.0);
        let thr = salient_threshold(&stats);
        assert_eq!(thr, 98);
        assert!(salient_box_in(&frame, Rect::new(0, 0, 32, 32), thr).is_none());
    }

    #[test]
    fn bright_block_is_boxed_tightly() {
        let mut frame = Frame::filled(40, 40, 60);
        for y in 10..30 {
            for x in 5..15 {
                frame.set(x, y, 170);
            }
        }
        let stats = background_stats(&frame);
        let thr = salient_threshold(&stats);
        let bbox = salient_box_in(&frame, Rect::new(0, 0, 40, 40), thr).unwrap();
        assert_eq!(bbox, Rect::new(5, 10, 10, 20));
    }

    #[test]
    fn isolated_speck_is_ignored() {
        let mut frame = Frame::filled(32, 32, 60);
        frame.set(3, 3, 255);
        let thr = salient_threshold(&background_stats(&frame));
        assert!(salient_box_in(&frame, Rect::new(0, 0, 32, 32), thr).is_none());
    }
}
