//! Structural similarity index over Gaussian-weighted local windows.
//!
//! Mean of local SSIM values across all fully-interior window positions,
//! with the usual stabilizers C1 = (0.01 L)^2 and C2 = (0.03 L)^2. The
//! default parameterization (11x11 window, sigma 1.5, L = 1 for unit-scaled
//! images) keeps the 0.85 acceptance threshold used by the dominant-filter
//! selection comparable with common practice.

use crate::error::{Error, Result};
use crate::image::ImageGrid;

pub const DEFAULT_WINDOW: usize = 11;
pub const DEFAULT_DYNAMIC_RANGE: f64 = 1.0;
const GAUSSIAN_SIGMA: f64 = 1.5;

/// Gaussian window weights, normalized to sum to 1.
fn window_weights(window: usize) -> Vec<f64> {
    let half = (window as isize - 1) / 2;
    let mut weights = Vec::with_capacity(window * window);
    let mut total = 0.0;
    for dy in -half..=half {
        for dx in -half..=half {
            let w = (-((dx * dx + dy * dy) as f64) / (2.0 * GAUSSIAN_SIGMA * GAUSSIAN_SIGMA)).exp();
            weights.push(w);
            total += w;
        }
    }
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// Mean local SSIM between two same-sized grids. Symmetric in its
/// arguments bit-for-bit; `ssim(x, x)` is exactly 1.
pub fn ssim(a: &ImageGrid, b: &ImageGrid, window: usize, dynamic_range: f64) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!(
            "ssim inputs {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if window % 2 == 0 || window == 0 {
        return Err(Error::InvalidParameter(format!(
            "ssim window must be odd and positive, got {window}"
        )));
    }
    if window > a.width().min(a.height()) {
        return Err(Error::InvalidParameter(format!(
            "ssim window {window} exceeds image side {}",
            a.width().min(a.height())
        )));
    }
    if !(dynamic_range > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dynamic range must be positive, got {dynamic_range}"
        )));
    }

    let c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
    let c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
    let weights = window_weights(window);
    let (width, height) = a.dims();
    let sa = a.samples();
    let sb = b.samples();

    let mut total = 0.0;
    let mut positions = 0usize;
    for wy in 0..=(height - window) {
        for wx in 0..=(width - window) {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            let mut aa = 0.0;
            let mut bb = 0.0;
            let mut ab = 0.0;
            let mut wi = 0;
            for dy in 0..window {
                let row = (wy + dy) * width + wx;
                for dx in 0..window {
                    let va = sa[row + dx];
                    let vb = sb[row + dx];
                    let w = weights[wi];
                    wi += 1;
                    mu_a += w * va;
                    mu_b += w * vb;
                    aa += w * (va * va);
                    bb += w * (vb * vb);
                    // Association keeps the argument swap bit-exact.
                    ab += w * (va * vb);
                }
            }
            let var_a = aa - mu_a * mu_a;
            let var_b = bb - mu_b * mu_b;
            let cov = ab - mu_a * mu_b;
            let local = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            total += local;
            positions += 1;
        }
    }
    Ok(total / positions as f64)
}

/// SSIM at the crate defaults (11x11 window shrunk to fit small images,
/// unit dynamic range).
pub fn ssim_default(a: &ImageGrid, b: &ImageGrid) -> Result<f64> {
    let side = a.width().min(a.height()).min(b.width().min(b.height()));
    let mut window = DEFAULT_WINDOW.min(side);
    if window % 2 == 0 {
        window -= 1;
    }
    ssim(a, b, window, DEFAULT_DYNAMIC_RANGE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn identical_images_score_exactly_one() {
        let mut rng = Rng::new(4);
        let img = ImageGrid::from_fn(24, 16, |_, _| rng.uniform());
        assert_eq!(ssim(&img, &img, 11, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn symmetric_bit_for_bit() {
        let mut rng = Rng::new(8);
        let a = ImageGrid::from_fn(20, 20, |_, _| rng.uniform());
        let b = ImageGrid::from_fn(20, 20, |_, _| rng.uniform());
        let ab = ssim(&a, &b, 11, 1.0).unwrap();
        let ba = ssim(&b, &a, 11, 1.0).unwrap();
        assert_eq!(ab.to_bits(), ba.to_bits());
    }

    #[test]
    fn constant_images_match_closed_form() {
        let a = ImageGrid::new(16, 16, vec![0.2; 256]).unwrap();
        let b = ImageGrid::new(16, 16, vec![0.4; 256]).unwrap();
        let c1 = 0.01f64.powi(2);
        let expected = (2.0 * 0.2 * 0.4 + c1) / (0.2f64.powi(2) + 0.4f64.powi(2) + c1);
        let got = ssim(&a, &b, 11, 1.0).unwrap();
        assert!(
            (got - expected).abs() < 1e-12,
            "got {got}, expected {expected}"
        );
    }

    #[test]
    fn noise_lowers_similarity_below_identity() {
        let mut rng = Rng::new(21);
        let clean = ImageGrid::from_fn(32, 32, |x, y| {
            0.5 + 0.4 * ((x as f64 * 0.6).sin() * (y as f64 * 0.4).cos())
        });
        let noisy = ImageGrid::from_fn(32, 32, |x, y| clean.at(x, y) + 0.2 * rng.normal());
        let s = ssim(&clean, &noisy, 11, 1.0).unwrap();
        assert!(s < 0.95);
        assert!(s > -1.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = ImageGrid::zeros(16, 16);
        let b = ImageGrid::zeros(16, 12);
        assert!(matches!(
            ssim(&a, &b, 11, 1.0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn even_window_rejected() {
        let a = ImageGrid::zeros(16, 16);
        assert!(ssim(&a, &a, 10, 1.0).is_err());
    }

    #[test]
    fn oversized_window_rejected() {
        let a = ImageGrid::zeros(8, 8);
        assert!(ssim(&a, &a, 11, 1.0).is_err());
    }

    #[test]
    fn default_shrinks_window_for_small_images() {
        let a = ImageGrid::zeros(8, 8);
        assert_eq!(ssim_default(&a, &a).unwrap(), 1.0);
    }
}
