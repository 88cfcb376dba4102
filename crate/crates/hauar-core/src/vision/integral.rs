//! Summed-area tables and O(1) rectangle sums.

use crate::frame::Frame;
use crate::vision::{Rect, VisionError};

/// Summed-area table with a zero first row and column: entry `(i, j)` holds
/// the sum of all pixels above and left of `(i, j)`.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: u32,
    height: u32,
    sums: Vec<u64>,
}

impl IntegralImage {
    pub fn new(frame: &Frame) -> Self {
        let (w, h) = (frame.width() as usize, frame.height() as usize);
        let stride = w + 1;
        let mut sums = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row_acc = 0u64;
            for x in 0..w {
                row_acc += frame.pixels()[y * w + x] as u64;
                sums[(y + 1) * stride + (x + 1)] = sums[y * stride + (x + 1)] + row_acc;
            }
        }
        Self { width: frame.width(), height: frame.height(), sums }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Cumulative sum at grid point `(i, j)`, `i` in `0..=width`, `j` in
    /// `0..=height`.
    #[inline]
    pub fn at(&self, i: u32, j: u32) -> u64 {
        self.sums[j as usize * (self.width as usize + 1) + i as usize]
    }
}

/// Builds the integral image of a frame.
pub fn integral_image(frame: &Frame) -> IntegralImage {
    IntegralImage::new(frame)
}

/// Sum of the pixels covered by `rect`, in O(1).
pub fn rect_sum(ii: &IntegralImage, rect: Rect) -> Result<u64, VisionError> {
    if rect.w == 0
        || rect.h == 0
        || rect.x + rect.w > ii.width()
        || rect.y + rect.h > ii.height()
    {
        return Err(VisionError::RectOutOfBounds {
            rect,
            width: ii.width(),
            height: ii.height(),
        });
    }
    let (x0, y0) = (rect.x, rect.y);
    let (x1, y1) = (rect.x + rect.w, rect.y + rect.h);
    Ok(ii.at(x1, y1) + ii.at(x0, y0) - ii.at(x1, y0) - ii.at(x0, y1))
}

/// Mean intensity over `rect`; the caller guarantees bounds.
pub(crate) fn rect_mean(ii: &IntegralImage, rect: Rect) -> f64 {
    let sum = rect_sum(ii, rect).expect("rect within integral image");
    sum as f64 / rect.area() as f64
}
