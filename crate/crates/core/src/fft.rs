//! 2D discrete Fourier transforms between rasters and spectra.
//!
//! Convention: the forward transform is unnormalized, the inverse carries
//! the full 1/(width*height) factor, so a pointwise filter gain of 1.0 is
//! gain-exact through a forward/filter/inverse chain. DC sits at bin (0, 0)
//! and bin frequencies wrap to [-pi, pi) radians/sample per axis.

pub use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::ImageGrid;

/// Frequency-domain workspace matching a source raster. Bins are row-major
/// with the k1 (width) index fastest, like `ImageGrid` samples.
#[derive(Debug, Clone)]
pub struct SpectrumGrid {
    width: usize,
    height: usize,
    bins: Vec<Complex64>,
}

impl SpectrumGrid {
    pub fn new(width: usize, height: usize, bins: Vec<Complex64>) -> Result<Self> {
        if bins.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "expected {} bins for {width}x{height}, got {}",
                width * height,
                bins.len()
            )));
        }
        Ok(SpectrumGrid {
            width,
            height,
            bins,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        SpectrumGrid {
            width,
            height,
            bins: vec![Complex64::new(0.0, 0.0); width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn bins_mut(&mut self) -> &mut [Complex64] {
        &mut self.bins
    }

    pub fn at(&self, k1: usize, k2: usize) -> Complex64 {
        self.bins[k2 * self.width + k1]
    }

    /// Frequency of bin index along an axis of length n, wrapped to
    /// [-pi, pi) radians/sample.
    pub fn bin_frequency(index: usize, n: usize) -> f64 {
        let signed = if index <= (n - 1) / 2 {
            index as f64
        } else {
            index as f64 - n as f64
        };
        2.0 * std::f64::consts::PI * signed / n as f64
    }
}

/// Complex-valued grid in the spatial domain; the analytic image that
/// demodulation consumes.
#[derive(Debug, Clone)]
pub struct ComplexGrid {
    width: usize,
    height: usize,
    values: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn new(width: usize, height: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for {width}x{height}, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(ComplexGrid {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        ComplexGrid {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, x: usize, y: usize) -> Complex64 {
        self.values[y * self.width + x]
    }

    pub fn real_part(&self) -> ImageGrid {
        ImageGrid::from_fn(self.width, self.height, |x, y| self.at(x, y).re)
    }

    pub fn magnitude(&self) -> ImageGrid {
        ImageGrid::from_fn(self.width, self.height, |x, y| self.at(x, y).norm())
    }
}

fn transform_in_place(width: usize, height: usize, data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let direction = if inverse {
        rustfft::FftDirection::Inverse
    } else {
        rustfft::FftDirection::Forward
    };
    let row_fft = planner.plan_fft(width, direction);
    let mut scratch = vec![Complex64::default(); row_fft.get_inplace_scratch_len()];
    for row in data.chunks_exact_mut(width) {
        row_fft.process_with_scratch(row, &mut scratch);
    }

    let col_fft = planner.plan_fft(height, direction);
    scratch.resize(
        col_fft
            .get_inplace_scratch_len()
            .max(col_fft.get_outofplace_scratch_len()),
        Complex64::default(),
    );
    let mut column = vec![Complex64::default(); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = data[y * width + x];
        }
        col_fft.process_with_scratch(&mut column, &mut scratch);
        for y in 0..height {
            data[y * width + x] = column[y];
        }
    }
}

/// Unnormalized forward 2D DFT of a real raster.
pub fn forward_transform(image: &ImageGrid) -> Result<SpectrumGrid> {
    image.require_min_dims(8)?;
    let (w, h) = image.dims();
    let mut data: Vec<Complex64> = image
        .samples()
        .iter()
        .map(|&s| Complex64::new(s, 0.0))
        .collect();
    transform_in_place(w, h, &mut data, false);
    SpectrumGrid::new(w, h, data)
}

/// Inverse 2D DFT with 1/(width*height) normalization. The result stays
/// complex: demodulation needs the analytic image, other callers take the
/// real part or magnitude explicitly.
pub fn inverse_transform(spectrum: &SpectrumGrid) -> ComplexGrid {
    let (w, h) = (spectrum.width(), spectrum.height());
    let mut data = spectrum.bins().to_vec();
    transform_in_place(w, h, &mut data, true);
    let norm = 1.0 / (w * h) as f64;
    for v in &mut data {
        *v *= norm;
    }
    ComplexGrid {
        width: w,
        height: h,
        values: data,
    }
}

/// Move DC to the grid center for display (fftshift).
pub fn shift_dc_to_center(grid: &ImageGrid) -> ImageGrid {
    let (w, h) = grid.dims();
    ImageGrid::from_fn(w, h, |x, y| {
        let sx = (x + w - w / 2) % w;
        let sy = (y + h - h / 2) % h;
        grid.at(sx, sy)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use std::f64::consts::PI;

    #[test]
    fn constant_image_has_only_dc() {
        let img = ImageGrid::new(8, 8, vec![0.3; 64]).unwrap();
        let spec = forward_transform(&img).unwrap();
        assert!((spec.at(0, 0).re - 0.3 * 64.0).abs() < 1e-9);
        assert!(spec.at(0, 0).im.abs() < 1e-9);
        for k2 in 0..8 {
            for k1 in 0..8 {
                if (k1, k2) != (0, 0) {
                    assert!(spec.at(k1, k2).norm() < 1e-9, "bin ({k1},{k2}) nonzero");
                }
            }
        }
    }

    #[test]
    fn integer_cosine_hits_two_bins() {
        let w = 16;
        let k = 3;
        let img = ImageGrid::from_fn(w, w, |x, _| (2.0 * PI * k as f64 * x as f64 / w as f64).cos());
        let spec = forward_transform(&img).unwrap();
        let expected = (w * w) as f64 / 2.0;
        assert!((spec.at(k, 0).re - expected).abs() < 1e-6);
        assert!((spec.at(w - k, 0).re - expected).abs() < 1e-6);
        let mut energy_elsewhere = 0.0;
        for k2 in 0..w {
            for k1 in 0..w {
                if (k1, k2) != (k, 0) && (k1, k2) != (w - k, 0) {
                    energy_elsewhere += spec.at(k1, k2).norm_sqr();
                }
            }
        }
        assert!(energy_elsewhere < 1e-12);
    }

    #[test]
    fn round_trip_reproduces_random_image() {
        let mut rng = Rng::new(5);
        let img = ImageGrid::from_fn(16, 16, |_, _| rng.uniform());
        let back = inverse_transform(&forward_transform(&img).unwrap());
        let mut num = 0.0;
        let mut den = 0.0;
        for y in 0..16 {
            for x in 0..16 {
                let d = back.at(x, y).re - img.at(x, y);
                num += d * d + back.at(x, y).im * back.at(x, y).im;
                den += img.at(x, y) * img.at(x, y);
            }
        }
        assert!((num / den).sqrt() < 1e-9, "relative error {}", (num / den).sqrt());
    }

    #[test]
    fn inverse_of_real_image_spectrum_is_real() {
        let mut rng = Rng::new(9);
        let img = ImageGrid::from_fn(12, 10, |_, _| rng.uniform());
        let back = inverse_transform(&forward_transform(&img).unwrap());
        for v in back.values() {
            assert!(v.im.abs() < 1e-9);
        }
    }

    #[test]
    fn single_bin_is_complex_exponential() {
        let (w, h) = (16, 8);
        let mut spec = SpectrumGrid::zeros(w, h);
        let k = 5;
        spec.bins_mut()[k] = Complex64::new(1.0, 0.0);
        let grid = inverse_transform(&spec);
        for y in 0..h {
            for x in 0..w {
                let phase = 2.0 * PI * k as f64 * x as f64 / w as f64;
                let expected = Complex64::new(phase.cos(), phase.sin()) / (w * h) as f64;
                assert!((grid.at(x, y) - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_spectrum_gives_zero_grid() {
        let grid = inverse_transform(&SpectrumGrid::zeros(8, 8));
        assert!(grid.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn parseval_holds_under_declared_normalization() {
        let mut rng = Rng::new(77);
        let (w, h) = (24, 18);
        let img = ImageGrid::from_fn(w, h, |_, _| rng.uniform_in(-1.0, 1.0));
        let spec = forward_transform(&img).unwrap();
        let space: f64 = img.samples().iter().map(|s| s * s).sum();
        let freq: f64 =
            spec.bins().iter().map(|b| b.norm_sqr()).sum::<f64>() / (w * h) as f64;
        assert!(
            ((space - freq) / space).abs() < 1e-9,
            "parseval mismatch {space} vs {freq}"
        );
    }

    #[test]
    fn bin_frequency_wraps_to_half_open_interval() {
        assert_eq!(SpectrumGrid::bin_frequency(0, 8), 0.0);
        assert!((SpectrumGrid::bin_frequency(1, 8) - PI / 4.0).abs() < 1e-15);
        assert!((SpectrumGrid::bin_frequency(4, 8) + PI).abs() < 1e-15);
        assert!((SpectrumGrid::bin_frequency(7, 8) + PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn shift_moves_dc_to_center() {
        let mut img = ImageGrid::zeros(8, 8);
        img.set(0, 0, 1.0);
        let shifted = shift_dc_to_center(&img);
        assert_eq!(shifted.at(4, 4), 1.0);
    }

    #[test]
    fn small_images_rejected() {
        let img = ImageGrid::new(4, 4, vec![0.0; 16]).unwrap();
        assert!(forward_transform(&img).is_err());
    }
}
