//! Real-valued 2D rasters and portable graymap (P2/P5) I/O.
//!
//! Intensities are conventionally unit-scaled: loading divides by the file's
//! maxval, saving clamps to [0, 1] and quantizes to 8 bits.

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major grid of real samples. `samples[y * width + x]` is the value at
/// column x (first axis) and row y (second axis).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                samples.len()
            )));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite sample {bad} in image"
            )));
        }
        Ok(ImageGrid {
            width,
            height,
            samples,
        })
    }

    /// Build from a function of (x, y) pixel coordinates.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        ImageGrid {
            width,
            height,
            samples,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        ImageGrid {
            width,
            height,
            samples: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.samples[y * self.width + x] = v;
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &s in &self.samples {
            lo = lo.min(s);
            hi = hi.max(s);
        }
        (lo, hi)
    }

    /// Guard used by every frequency-domain operation.
    pub fn require_min_dims(&self, min: usize) -> Result<()> {
        if self.width < min || self.height < min {
            return Err(Error::InvalidParameter(format!(
                "operation requires dimensions >= {min}, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

const MAX_SUPPORTED_MAXVAL: u32 = 255;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
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

    fn next_uint(&mut self, what: &str) -> Result<(u32, usize)> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        if start >= self.bytes.len() {
            return Err(Error::MalformedHeader {
                detail: format!("unexpected end of file while reading {what}"),
                offset: start,
            });
        }
        let mut value: u64 = 0;
        let mut digits = 0;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            value = value * 10 + u64::from(self.bytes[self.pos] - b'0');
            if value > u64::from(u32::MAX) {
                return Err(Error::MalformedHeader {
                    detail: format!("{what} overflows"),
                    offset: start,
                });
            }
            self.pos += 1;
            digits += 1;
        }
        if digits == 0 {
            return Err(Error::MalformedHeader {
                detail: format!(
                    "expected digits for {what}, found byte 0x{:02x}",
                    self.bytes[start]
                ),
                offset: start,
            });
        }
        Ok((value as u32, start))
    }
}

/// Read a P2 (ASCII) or P5 (binary) graymap and scale samples to [0, 1]
/// by the header's maxval.
pub fn load_raster(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let bytes = std::fs::read(path)?;
    load_raster_bytes(&bytes)
}

pub fn load_raster_bytes(bytes: &[u8]) -> Result<ImageGrid> {
    if bytes.len() < 2 {
        return Err(Error::MalformedHeader {
            detail: "file shorter than a magic number".into(),
            offset: 0,
        });
    }
    let magic = &bytes[..2];
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(Error::UnsupportedMagic {
                found: String::from_utf8_lossy(other).into_owned(),
                offset: 0,
            })
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let (width, w_off) = cur.next_uint("width")?;
    let (height, h_off) = cur.next_uint("height")?;
    let (maxval, m_off) = cur.next_uint("maxval")?;
    if width == 0 {
        return Err(Error::MalformedHeader {
            detail: "width must be positive".into(),
            offset: w_off,
        });
    }
    if height == 0 {
        return Err(Error::MalformedHeader {
            detail: "height must be positive".into(),
            offset: h_off,
        });
    }
    if maxval == 0 || maxval > MAX_SUPPORTED_MAXVAL {
        return Err(Error::MalformedHeader {
            detail: format!("maxval {maxval} outside supported range 1..={MAX_SUPPORTED_MAXVAL}"),
            offset: m_off,
        });
    }
    let count = width as usize * height as usize;
    let scale = 1.0 / f64::from(maxval);
    let mut samples = Vec::with_capacity(count);

    if binary {
        // Exactly one whitespace byte separates the header from the payload.
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(Error::MalformedHeader {
                detail: "expected single whitespace byte after maxval".into(),
                offset: cur.pos,
            });
        }
        cur.pos += 1;
        let available = bytes.len() - cur.pos;
        if available < count {
            return Err(Error::TruncatedPayload {
                expected: count,
                found: available,
                offset: cur.pos,
            });
        }
        for i in 0..count {
            let b = bytes[cur.pos + i];
            if u32::from(b) > maxval {
                return Err(Error::MalformedHeader {
                    detail: format!("sample {b} exceeds maxval {maxval}"),
                    offset: cur.pos + i,
                });
            }
            samples.push(f64::from(b) * scale);
        }
    } else {
        for read in 0..count {
            cur.skip_whitespace_and_comments();
            if cur.pos >= bytes.len() {
                return Err(Error::TruncatedPayload {
                    expected: count,
                    found: read,
                    offset: cur.pos,
                });
            }
            let (v, off) = cur.next_uint("sample")?;
            if v > maxval {
                return Err(Error::MalformedHeader {
                    detail: format!("sample {v} exceeds maxval {maxval}"),
                    offset: off,
                });
            }
            samples.push(f64::from(v) * scale);
        }
    }
    ImageGrid::new(width as usize, height as usize, samples)
}

/// Quantize a unit-scaled sample to 8 bits, rounding half away from zero.
fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Write a binary P5 graymap with maxval 255. Samples are clamped to
/// [0, 1]; the round trip differs from the clamped input by at most 1/510
/// per pixel.
pub fn save_raster(image: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_raster(image);
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn encode_raster(image: &ImageGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.samples().iter().map(|&v| quantize(v)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p5_bytes(w: usize, h: usize, maxval: u32, payload: &[u8]) -> Vec<u8> {
        let mut v = format!("P5\n{w} {h}\n{maxval}\n").into_bytes();
        v.extend_from_slice(payload);
        v
    }

    #[test]
    fn p5_all_255_loads_as_ones() {
        let bytes = p5_bytes(8, 8, 255, &[255u8; 64]);
        let img = load_raster_bytes(&bytes).unwrap();
        assert_eq!(img.dims(), (8, 8));
        assert!(img.samples().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn p2_parses_ascii_samples() {
        let img = load_raster_bytes(b"P2 2 2 255\n0 255 0 255").unwrap();
        assert_eq!(img.samples(), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn p6_is_rejected_with_offset() {
        let err = load_raster_bytes(b"P6 2 2 255 junk").unwrap_err();
        match err {
            Error::UnsupportedMagic { found, offset } => {
                assert_eq!(found, "P6");
                assert_eq!(offset, 0);
            }
            other => panic!("wrong error {other:?}"),
        }
    }

    #[test]
    fn maxval_normalization_uses_header_maxval() {
        let img = load_raster_bytes(b"P2 1 1 100\n50").unwrap();
        assert!((img.at(0, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn maxval_above_255_rejected() {
        let err = load_raster_bytes(b"P2 1 1 65535\n50").unwrap_err();
        assert!(matches!(err, Error::MalformedHeader { .. }));
    }

    #[test]
    fn truncated_p5_payload_reports_counts_and_offset() {
        let bytes = p5_bytes(4, 4, 255, &[7u8; 10]);
        match load_raster_bytes(&bytes).unwrap_err() {
            Error::TruncatedPayload {
                expected,
                found,
                offset,
            } => {
                assert_eq!(expected, 16);
                assert_eq!(found, 10);
                assert_eq!(offset, 11);
            }
            other => panic!("wrong error {other:?}"),
        }
    }

    #[test]
    fn truncated_p2_payload_detected() {
        let err = load_raster_bytes(b"P2 2 2 255\n0 255 0").unwrap_err();
        assert!(matches!(err, Error::TruncatedPayload { .. }));
    }

    #[test]
    fn header_comments_are_skipped() {
        let img = load_raster_bytes(b"P2 # a comment\n2 1 # another\n255\n3 4").unwrap();
        assert_eq!(img.dims(), (2, 1));
    }

    #[test]
    fn half_intensity_rounds_away_from_zero() {
        let img = ImageGrid::new(2, 1, vec![0.5, 0.5]).unwrap();
        let bytes = encode_raster(&img);
        let payload = &bytes[bytes.len() - 2..];
        assert_eq!(payload, &[128, 128]);
    }

    #[test]
    fn out_of_range_samples_clamp() {
        let img = ImageGrid::new(2, 1, vec![1.7, -0.3]).unwrap();
        let bytes = encode_raster(&img);
        let payload = &bytes[bytes.len() - 2..];
        assert_eq!(payload, &[255, 0]);
    }

    #[test]
    fn save_load_round_trip_within_half_step() {
        let mut vals = Vec::new();
        for i in 0..64 {
            vals.push(i as f64 / 63.0);
        }
        let img = ImageGrid::new(8, 8, vals).unwrap();
        let bytes = encode_raster(&img);
        let back = load_raster_bytes(&bytes).unwrap();
        for (a, b) in img.samples().iter().zip(back.samples()) {
            assert!(
                (a.clamp(0.0, 1.0) - b).abs() <= 1.0 / 510.0 + 1e-12,
                "round trip error {a} vs {b}"
            );
        }
    }

    #[test]
    fn non_finite_samples_rejected() {
        assert!(ImageGrid::new(2, 1, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn sample_count_must_match_dims() {
        assert!(ImageGrid::new(3, 3, vec![0.0; 8]).is_err());
    }
}
