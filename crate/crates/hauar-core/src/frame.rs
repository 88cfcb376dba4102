//! Grayscale frames, PGM file I/O, and the canonical preprocessing step.
//!
//! Every image flowing through the pipeline is an 8-bit grayscale [`Frame`].
//! Frames are read and written as PGM (`P5` binary, `P2` ASCII accepted on
//! read; canonical `P5` emitted on write, bit-exact).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from frame construction and PGM decoding.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("pixel buffer length {got} does not match {width}x{height}")]
    PixelCount { width: u32, height: u32, got: usize },
    #[error("frame dimensions must be positive")]
    ZeroDimension,
    #[error("not a PGM file: expected P5 or P2 magic")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("PGM maxval {0} exceeds 255")]
    MaxvalTooLarge(u32),
    #[error("truncated PGM payload: expected {expected} values, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("trailing bytes after PGM payload")]
    TrailingData,
    #[error("PGM sample value {0} exceeds maxval")]
    SampleOutOfRange(u32),
}

/// An 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Frame {
    /// Builds a frame, checking that `pixels.len() == width * height` and
    /// that both dimensions are positive.
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::ZeroDimension);
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(FrameError::PixelCount { width, height, got: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    /// A frame filled with a single intensity.
    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        Self::new(width, height, vec![value; width as usize * height as usize])
            .expect("positive dimensions")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        self.pixels[y as usize * self.width as usize + x as usize] = value;
    }

    /// Copies the rectangle `(x, y, w, h)` into a new frame. The rectangle
    /// must lie inside the frame.
    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Frame {
        assert!(w > 0 && h > 0, "crop must be non-empty");
        assert!(x + w <= self.width && y + h <= self.height, "crop out of bounds");
        let mut pixels = Vec::with_capacity(w as usize * h as usize);
        for row in y..y + h {
            let start = row as usize * self.width as usize + x as usize;
            pixels.extend_from_slice(&self.pixels[start..start + w as usize]);
        }
        Frame { width: w, height: h, pixels }
    }

    /// Multiplies every pixel by `gain`, rounding and clamping to [0, 255].
    pub fn scaled_intensity(&self, gain: f64) -> Frame {
        let pixels = self
            .pixels
            .iter()
            .map(|&v| (v as f64 * gain).round().clamp(0.0, 255.0) as u8)
            .collect();
        Frame { width: self.width, height: self.height, pixels }
    }
}

/// Preprocessing parameters: canonical pipeline resolution and whether to
/// apply global histogram equalization after the resize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub target_width: u32,
    pub target_height: u32,
    pub equalize: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { target_width: 128, target_height: 96, equalize: true }
    }
}

/// Decodes a binary (`P5`) or ASCII (`P2`) PGM image.
///
/// `maxval` must be at most 255; sample values are taken verbatim with no
/// rescaling. The payload must contain exactly `width * height` samples and
/// nothing more.
pub fn load_pgm(bytes: &[u8]) -> Result<Frame, FrameError> {
    let mut cursor = HeaderCursor::new(bytes);
    let magic = cursor.take_magic()?;
    let width = cursor.next_number()?;
    let height = cursor.next_number()?;
    let maxval = cursor.next_number()?;
    if maxval > 255 {
        return Err(FrameError::MaxvalTooLarge(maxval));
    }
    if maxval == 0 {
        return Err(FrameError::MalformedHeader("maxval must be positive".into()));
    }
    if width == 0 || height == 0 {
        return Err(FrameError::ZeroDimension);
    }
    let expected = width as usize * height as usize;

    let pixels = match magic {
        Magic::Binary => {
            // Exactly one whitespace byte separates the header from the payload.
            cursor.skip_single_whitespace()?;
            let rest = cursor.rest();
            if rest.len() < expected {
                return Err(FrameError::Truncated { expected, got: rest.len() });
            }
            if rest.len() > expected {
                return Err(FrameError::TrailingData);
            }
            for &b in rest {
                if b as u32 > maxval {
                    return Err(FrameError::SampleOutOfRange(b as u32));
                }
            }
            rest.to_vec()
        }
        Magic::Ascii => {
            let mut pixels = Vec::with_capacity(expected);
            while pixels.len() < expected {
                match cursor.try_next_number()? {
                    Some(v) if v <= maxval => pixels.push(v as u8),
                    Some(v) => return Err(FrameError::SampleOutOfRange(v)),
                    None => {
                        return Err(FrameError::Truncated { expected, got: pixels.len() })
                    }
                }
            }
            if cursor.try_next_number()?.is_some() {
                return Err(FrameError::TrailingData);
            }
            pixels
        }
    };

    Frame::new(width, height, pixels)
}

/// Encodes a frame as canonical binary PGM: `P5\n<w> <h>\n255\n` followed by
/// the raw pixel bytes.
pub fn write_pgm(frame: &Frame) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", frame.width, frame.height);
    let mut out = Vec::with_capacity(header.len() + frame.pixels.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&frame.pixels);
    out
}

/// Resizes to the configured dimensions with bilinear interpolation, then
/// optionally applies global histogram equalization.
pub fn preprocess(frame: &Frame, cfg: &PreprocessConfig) -> Frame {
    assert!(cfg.target_width > 0 && cfg.target_height > 0, "target dimensions positive");
    let resized = resize_bilinear(frame, cfg.target_width, cfg.target_height);
    if cfg.equalize {
        equalize_hist(&resized)
    } else {
        resized
    }
}

/// Bilinear resampling with pixel-center alignment. Resizing to the source
/// dimensions is an exact copy.
pub fn resize_bilinear(frame: &Frame, dst_w: u32, dst_h: u32) -> Frame {
    assert!(dst_w > 0 && dst_h > 0, "target dimensions positive");
    if dst_w == frame.width && dst_h == frame.height {
        return frame.clone();
    }
    let sx = frame.width as f64 / dst_w as f64;
    let sy = frame.height as f64 / dst_h as f64;
    let mut pixels = Vec::with_capacity(dst_w as usize * dst_h as usize);
    for oy in 0..dst_h {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, frame.height as f64 - 1.0);
        let y0 = fy.floor() as u32;
        let y1 = (y0 + 1).min(frame.height - 1);
        let wy = fy - y0 as f64;
        for ox in 0..dst_w {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, frame.width as f64 - 1.0);
            let x0 = fx.floor() as u32;
            let x1 = (x0 + 1).min(frame.width - 1);
            let wx = fx - x0 as f64;
            let top = frame.get(x0, y0) as f64 * (1.0 - wx) + frame.get(x1, y0) as f64 * wx;
            let bottom = frame.get(x0, y1) as f64 * (1.0 - wx) + frame.get(x1, y1) as f64 * wx;
            let v = top * (1.0 - wy) + bottom * wy;
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    Frame { width: dst_w, height: dst_h, pixels }
}

/// Global histogram equalization. Constant frames are returned unchanged:
/// the usual cdf remap degenerates to 0/0 there, so identity is the defined
/// behaviour.
pub fn equalize_hist(frame: &Frame) -> Frame {
    let mut hist = [0u64; 256];
    for &v in &frame.pixels {
        hist[v as usize] += 1;
    }
    let total = frame.pixels.len() as u64;
    let cdf_min = hist.iter().find(|&&c| c > 0).copied().unwrap_or(0);
    if cdf_min == total {
        return frame.clone();
    }
    let mut lut = [0u8; 256];
    let mut cdf = 0u64;
    let denom = (total - cdf_min) as f64;
    for (v, &count) in hist.iter().enumerate() {
        cdf += count;
        if count > 0 || cdf > 0 {
            let mapped = ((cdf.saturating_sub(cdf_min)) as f64 * 255.0 / denom).round();
            lut[v] = mapped.clamp(0.0, 255.0) as u8;
        }
    }
    let pixels = frame.pixels.iter().map(|&v| lut[v as usize]).collect();
    Frame { width: frame.width, height: frame.height, pixels }
}

enum Magic {
    Binary,
    Ascii,
}

/// Whitespace/comment-aware cursor over a PGM header.
struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take_magic(&mut self) -> Result<Magic, FrameError> {
        if self.bytes.len() < 2 {
            return Err(FrameError::BadMagic);
        }
        let magic = &self.bytes[..2];
        self.pos = 2;
        match magic {
            b"P5" => Ok(Magic::Binary),
            b"P2" => Ok(Magic::Ascii),
            _ => Err(FrameError::BadMagic),
        }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn next_number(&mut self) -> Result<u32, FrameError> {
        self.try_next_number()?
            .ok_or_else(|| FrameError::MalformedHeader("unexpected end of header".into()))
    }

    fn try_next_number(&mut self) -> Result<Option<u32>, FrameError> {
        self.skip_whitespace_and_comments();
        if self.pos >= self.bytes.len() {
            return Ok(None);
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(FrameError::MalformedHeader(format!(
                "expected digit, found byte 0x{:02x}",
                self.bytes[self.pos]
            )));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse::<u32>()
            .map(Some)
            .map_err(|_| FrameError::MalformedHeader(format!("number out of range: {text}")))
    }

    fn skip_single_whitespace(&mut self) -> Result<(), FrameError> {
        if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
            Ok(())
        } else {
            Err(FrameError::MalformedHeader(
                "missing whitespace between header and payload".into(),
            ))
        }
    }

    fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(w: u32, h: u32, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pixels = (0..w as usize * h as usize).map(|_| rng.random()).collect();
        Frame::new(w, h, pixels).unwrap()
    }

    /// Naive per-pixel bilinear resampler, kept independent of the
    /// implementation it checks.
    fn bilinear_oracle(frame: &Frame, dst_w: u32, dst_h: u32) -> Vec<f64> {
        let mut out = Vec::new();
        for oy in 0..dst_h {
            for ox in 0..dst_w {
                let fx = ((ox as f64 + 0.5) * frame.width() as f64 / dst_w as f64 - 0.5)
                    .clamp(0.0, frame.width() as f64 - 1.0);
                let fy = ((oy as f64 + 0.5) * frame.height() as f64 / dst_h as f64 - 0.5)
                    .clamp(0.0, frame.height() as f64 - 1.0);
                let (x0, y0) = (fx.floor() as u32, fy.floor() as u32);
                let (x1, y1) = ((x0 + 1).min(frame.width() - 1), (y0 + 1).min(frame.height() - 1));
                let (ax, ay) = (fx - x0 as f64, fy - y0 as f64);
                let mut acc = 0.0;
                acc += frame.get(x0, y0) as f64 * (1.0 - ax) * (1.0 - ay);
                acc += frame.get(x1, y0) as f64 * ax * (1.0 - ay);
                acc += frame.get(x0, y1) as f64 * (1.0 - ax) * ay;
                acc += frame.get(x1, y1) as f64 * ax * ay;
                out.push(acc);
            }
        }
        out
    }

    #[test]
    fn decode_p5_direct() {
        let mut bytes = b"P5 4 3 255\n".to_vec();
        let payload: Vec<u8> = (1..=12).collect();
        bytes.extend_from_slice(&payload);
        let frame = load_pgm(&bytes).unwrap();
        assert_eq!((frame.width(), frame.height()), (4, 3));
        assert_eq!(frame.pixels(), payload.as_slice());
    }

    #[test]
    fn decode_p2_ascii() {
        let bytes = b"P2\n# comment\n2 2\n255\n0 64\n128 255\n";
        let frame = load_pgm(bytes).unwrap();
        assert_eq!(frame.pixels(), &[0, 64, 128, 255]);
    }

    #[test]
    fn reject_large_maxval() {
        let bytes = b"P5 1 1 65535\n\x00\x00";
        assert_eq!(load_pgm(bytes), Err(FrameError::MaxvalTooLarge(65535)));
    }

    #[test]
    fn reject_zero_dimension() {
        assert_eq!(load_pgm(b"P5 0 3 255\n"), Err(FrameError::ZeroDimension));
    }

    #[test]
    fn reject_truncated_payload() {
        let bytes = b"P5 2 2 255\nab";
        assert!(matches!(load_pgm(bytes), Err(FrameError::Truncated { expected: 4, got: 2 })));
    }

    #[test]
    fn reject_bad_magic() {
        assert_eq!(load_pgm(b"P6 1 1 255\n\x00"), Err(FrameError::BadMagic));
    }

    #[test]
    fn write_single_pixel() {
        let frame = Frame::new(1, 1, vec![7]).unwrap();
        assert_eq!(write_pgm(&frame), b"P5\n1 1\n255\n\x07");
    }

    #[test]
    fn write_zero_payload() {
        let frame = Frame::filled(2, 2, 0);
        let bytes = write_pgm(&frame);
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 0, 0, 0]);
    }

    #[test]
    fn roundtrip_canonical_bytes() {
        let frame = random_frame(5, 5, 1);
        let bytes = write_pgm(&frame);
        let reloaded = load_pgm(&bytes).unwrap();
        assert_eq!(reloaded, frame);
        assert_eq!(write_pgm(&reloaded), bytes);
    }

    #[test]
    fn preprocess_shape_contract() {
        let frame = Frame::filled(256, 192, 77);
        let out = preprocess(&frame, &PreprocessConfig::default());
        assert_eq!((out.width(), out.height()), (128, 96));
    }

    #[test]
    fn equalization_is_identity_on_constant_input() {
        let frame = Frame::filled(16, 16, 100);
        let out = preprocess(&frame, &PreprocessConfig::default());
        assert!(out.pixels().iter().all(|&v| v == 100));
    }

    #[test]
    fn resize_matches_naive_oracle() {
        let frame = random_frame(16, 16, 3);
        let out = resize_bilinear(&frame, 8, 8);
        let oracle = bilinear_oracle(&frame, 8, 8);
        for (got, want) in out.pixels().iter().zip(&oracle) {
            assert!(
                (*got as f64 - want).abs() <= 1.0,
                "resized pixel {got} too far from oracle {want}"
            );
        }
    }

    #[test]
    fn resize_to_same_size_is_copy() {
        let frame = random_frame(13, 7, 9);
        assert_eq!(resize_bilinear(&frame, 13, 7), frame);
    }

    #[test]
    fn equalize_stretches_two_level_frame() {
        let mut frame = Frame::filled(4, 2, 100);
        frame.set(0, 0, 50);
        frame.set(1, 0, 50);
        frame.set(2, 0, 50);
        frame.set(3, 0, 50);
        let out = equalize_hist(&frame);
        // Half the mass at each level: low maps to 0, high to 255.
        assert_eq!(out.get(0, 0), 0);
        assert_eq!(out.get(0, 1), 255);
    }

    proptest! {
        #[test]
        fn prop_roundtrip_is_identity(
            w in 1u32..24,
            h in 1u32..24,
            seed in 0u64..1000,
        ) {
            let frame = random_frame(w, h, seed);
            let bytes = write_pgm(&frame);
            prop_assert_eq!(load_pgm(&bytes).unwrap(), frame);
        }

        #[test]
        fn prop_preprocess_deterministic_and_valid(
            w in 1u32..64,
            h in 1u32..64,
            seed in 0u64..1000,
            equalize in proptest::bool::ANY,
        ) {
            let frame = random_frame(w, h, seed);
            let cfg = PreprocessConfig { target_width: 32, target_height: 24, equalize };
            let a = preprocess(&frame, &cfg);
            let b = preprocess(&frame, &cfg);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!((a.width(), a.height()), (32, 24));
            prop_assert_eq!(a.pixels().len(), 32 * 24);
        }
    }
}
