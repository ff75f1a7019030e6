//! Multiscale AM-FM decomposition: per-channel demodulation into
//! instantaneous amplitude, phase and frequency, dominant component
//! analysis per scale, reconstruction, and greedy SSIM-gated selection of
//! the dominant channels.
//!
//! Demodulation filters the spectrum with one-sided channels (gain doubled
//! to restore the energy of the suppressed half-plane), so the inverse
//! transform is directly the analytic component: amplitude is its modulus,
//! phase its argument. The instantaneous frequency comes from the
//! quasi-eigenfunction estimator, which reads the local oscillation rate
//! off the ratio of symmetric neighbors without unwrapping the phase.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{forward_transform, inverse_transform, ComplexGrid, SpectrumGrid};
use crate::gabor::{FilterBank, GaborChannel};
use crate::image::ImageGrid;
use crate::ssim::ssim_default;

/// Relative magnitude below which a pixel's phase is numerically
/// meaningless and its frequency is borrowed from a neighbor.
pub const AMPLITUDE_FLOOR_RATIO: f64 = 1e-8;

pub const DEFAULT_SSIM_THRESHOLD: f64 = 0.85;

/// One demodulated channel: per-pixel amplitude, phase, and frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct AMFMComponent {
    pub channel_id: usize,
    pub amplitude: ImageGrid,
    /// Wrapped to (-pi, pi].
    pub phase: ImageGrid,
    pub omega1: ImageGrid,
    pub omega2: ImageGrid,
}

impl AMFMComponent {
    pub fn dims(&self) -> (usize, usize) {
        self.amplitude.dims()
    }

    /// Total component energy, the dominance measure used for selection.
    pub fn energy(&self) -> f64 {
        self.amplitude.samples().iter().map(|a| a * a).sum()
    }
}

/// All components of an image under a bank, in bank channel order.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub components: Vec<AMFMComponent>,
    pub bank: FilterBank,
    pub width: usize,
    pub height: usize,
}

/// Per-pixel winner of one scale: the channel with maximal instantaneous
/// amplitude, plus the component assembled from the winners.
#[derive(Debug, Clone)]
pub struct DominantMap {
    pub scale_id: usize,
    /// Winning bank channel index per pixel, row-major.
    pub winner: Vec<usize>,
    pub amplitude: ImageGrid,
    pub phase: ImageGrid,
    pub omega1: ImageGrid,
    pub omega2: ImageGrid,
}

impl DominantMap {
    /// Unit-amplitude reconstruction cos(phase), the texture rendering.
    pub fn fm_image(&self) -> ImageGrid {
        let (w, h) = self.phase.dims();
        ImageGrid::from_fn(w, h, |x, y| self.phase.at(x, y).cos())
    }
}

/// Frequency field estimated from an analytic grid.
#[derive(Debug, Clone)]
pub struct FrequencyEstimate {
    pub omega1: ImageGrid,
    pub omega2: ImageGrid,
    /// Row-major flat indices of pixels below the amplitude floor, whose
    /// frequency was copied from the nearest reliable pixel.
    pub flagged: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructionMode {
    /// Sum of amplitude * cos(phase).
    Amfm,
    /// Sum of cos(phase): unit amplitudes exposing phase structure.
    FmOnly,
}

fn wrap_phase(value: Complex64) -> f64 {
    let p = value.im.atan2(value.re);
    if p == -PI {
        PI
    } else {
        p
    }
}

/// Quasi-eigenfunction frequency estimation.
///
/// Per axis i, omega_i = acos(clamp(Re[(z(x+e_i) + z(x-e_i)) / (2 z(x))]))
/// with the sign taken from the wrapped one-step phase difference. Border
/// pixels replicate the nearest interior estimate. Pixels whose magnitude
/// falls below `AMPLITUDE_FLOOR_RATIO * max|z|` are flagged and inherit
/// the frequency of their nearest unflagged neighbor.
pub fn estimate_frequency(analytic: &ComplexGrid) -> FrequencyEstimate {
    let (w, h) = (analytic.width(), analytic.height());
    let z = analytic.values();
    let mut omega1 = vec![0.0; w * h];
    let mut omega2 = vec![0.0; w * h];

    let max_mag = z.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floor = AMPLITUDE_FLOOR_RATIO * max_mag;

    let axis_estimate = |center: Complex64, prev: Complex64, next: Complex64| -> f64 {
        let ratio = ((next + prev) / (2.0 * center)).re;
        let magnitude = ratio.clamp(-1.0, 1.0).acos();
        let step = (next * center.conj()).arg();
        if step < 0.0 {
            -magnitude
        } else {
            magnitude
        }
    };

    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            let center = z[idx];
            if center.norm() <= floor {
                continue;
            }
            if x > 0 && x + 1 < w {
                omega1[idx] = axis_estimate(center, z[idx - 1], z[idx + 1]);
            }
            if y > 0 && y + 1 < h {
                omega2[idx] = axis_estimate(center, z[idx - w], z[idx + w]);
            }
        }
    }

    // Replicate the nearest interior estimate onto each axis's borders.
    for y in 0..h {
        omega1[y * w] = omega1[y * w + 1];
        omega1[y * w + w - 1] = omega1[y * w + w - 2];
    }
    for x in 0..w {
        omega2[x] = omega2[w + x];
        omega2[(h - 1) * w + x] = omega2[(h - 2) * w + x];
    }

    // Flagged pixels borrow the frequency of the nearest unflagged pixel
    // (multi-source BFS, 4-connected, deterministic visit order).
    let mut flagged: Vec<usize> = Vec::new();
    let mut reliable = vec![false; w * h];
    let mut any_reliable = false;
    for (idx, v) in z.iter().enumerate() {
        if v.norm() > floor {
            reliable[idx] = true;
            any_reliable = true;
        } else {
            flagged.push(idx);
        }
    }
    if !flagged.is_empty() && any_reliable {
        let mut queue: std::collections::VecDeque<usize> = (0..w * h)
            .filter(|&i| reliable[i])
            .collect();
        let mut visited = reliable.clone();
        while let Some(idx) = queue.pop_front() {
            let x = idx % w;
            let y = idx / w;
            let push = |n: usize, queue: &mut std::collections::VecDeque<usize>,
                            visited: &mut Vec<bool>,
                            omega1: &mut Vec<f64>,
                            omega2: &mut Vec<f64>| {
                if !visited[n] {
                    visited[n] = true;
                    omega1[n] = omega1[idx];
                    omega2[n] = omega2[idx];
                    queue.push_back(n);
                }
            };
            if x > 0 {
                push(idx - 1, &mut queue, &mut visited, &mut omega1, &mut omega2);
            }
            if x + 1 < w {
                push(idx + 1, &mut queue, &mut visited, &mut omega1, &mut omega2);
            }
            if y > 0 {
                push(idx - w, &mut queue, &mut visited, &mut omega1, &mut omega2);
            }
            if y + 1 < h {
                push(idx + w, &mut queue, &mut visited, &mut omega1, &mut omega2);
            }
        }
    }

    FrequencyEstimate {
        omega1: ImageGrid::new(w, h, omega1).expect("estimates are finite"),
        omega2: ImageGrid::new(w, h, omega2).expect("estimates are finite"),
        flagged,
    }
}

fn demodulate_spectrum(
    spectrum: &SpectrumGrid,
    channel: &GaborChannel,
    channel_id: usize,
) -> AMFMComponent {
    let (w, h) = (spectrum.width(), spectrum.height());
    // Factor 2 restores the energy of the suppressed half-plane so real
    // signal amplitudes come out at physical scale; the lowpass channel is
    // two-sided already.
    let factor = if channel.is_lowpass { 1.0 } else { 2.0 };
    let mut filtered = SpectrumGrid::zeros(w, h);
    for k2 in 0..h {
        let v = SpectrumGrid::bin_frequency(k2, h);
        for k1 in 0..w {
            let u = SpectrumGrid::bin_frequency(k1, w);
            let gain = channel.gain_at(u, v);
            filtered.bins_mut()[k2 * w + k1] = spectrum.at(k1, k2) * (factor * gain);
        }
    }
    let analytic = inverse_transform(&filtered);

    let amplitude = analytic.magnitude();
    let phase = ImageGrid::from_fn(w, h, |x, y| wrap_phase(analytic.at(x, y)));
    let (omega1, omega2) = if channel.is_lowpass {
        (ImageGrid::zeros(w, h), ImageGrid::zeros(w, h))
    } else {
        let est = estimate_frequency(&analytic);
        (est.omega1, est.omega2)
    };
    AMFMComponent {
        channel_id,
        amplitude,
        phase,
        omega1,
        omega2,
    }
}

/// Demodulate one channel of an image.
pub fn demodulate_channel(
    image: &ImageGrid,
    channel: &GaborChannel,
    channel_id: usize,
) -> Result<AMFMComponent> {
    let spectrum = forward_transform(image)?;
    Ok(demodulate_spectrum(&spectrum, channel, channel_id))
}

/// Demodulate every channel of the bank, in bank order.
pub fn decompose(image: &ImageGrid, bank: &FilterBank) -> Result<Decomposition> {
    decompose_with_workers(image, bank, 1)
}

/// Same decomposition with channels spread over `workers` threads. The
/// output is identical to the sequential path: each worker fills disjoint,
/// pre-assigned slots.
pub fn decompose_with_workers(
    image: &ImageGrid,
    bank: &FilterBank,
    workers: usize,
) -> Result<Decomposition> {
    let spectrum = forward_transform(image)?;
    let n = bank.channel_count();
    let workers = workers.clamp(1, n.max(1));
    let components: Vec<AMFMComponent> = if workers == 1 {
        bank.channels
            .iter()
            .enumerate()
            .map(|(id, c)| demodulate_spectrum(&spectrum, c, id))
            .collect()
    } else {
        let mut slots: Vec<Option<AMFMComponent>> = Vec::new();
        slots.resize_with(n, || None);
        let chunk = n.div_ceil(workers);
        std::thread::scope(|scope| {
            for (slice_idx, slice) in slots.chunks_mut(chunk).enumerate() {
                let spectrum = &spectrum;
                let bank = &bank;
                scope.spawn(move || {
                    let base = slice_idx * chunk;
                    for (offset, slot) in slice.iter_mut().enumerate() {
                        let id = base + offset;
                        *slot = Some(demodulate_spectrum(&spectrum, &bank.channels[id], id));
                    }
                });
            }
        });
        slots.into_iter().map(|c| c.expect("slot filled")).collect()
    };
    Ok(Decomposition {
        components,
        bank: bank.clone(),
        width: image.width(),
        height: image.height(),
    })
}

impl Decomposition {
    /// Per-pixel winner among one scale's channels, ties broken by the
    /// lowest channel index.
    pub fn dominant_analysis(&self, scale_id: usize) -> Result<DominantMap> {
        let ids = self.bank.scale_channel_ids(scale_id);
        if ids.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "scale {scale_id} has no channels in this bank"
            )));
        }
        let n = self.width * self.height;
        let mut winner = vec![ids[0]; n];
        let mut amplitude = vec![f64::NEG_INFINITY; n];
        let mut phase = vec![0.0; n];
        let mut omega1 = vec![0.0; n];
        let mut omega2 = vec![0.0; n];
        for &id in &ids {
            let c = &self.components[id];
            for i in 0..n {
                let a = c.amplitude.samples()[i];
                if a > amplitude[i] {
                    amplitude[i] = a;
                    winner[i] = id;
                    phase[i] = c.phase.samples()[i];
                    omega1[i] = c.omega1.samples()[i];
                    omega2[i] = c.omega2.samples()[i];
                }
            }
        }
        Ok(DominantMap {
            scale_id,
            winner,
            amplitude: ImageGrid::new(self.width, self.height, amplitude)?,
            phase: ImageGrid::new(self.width, self.height, phase)?,
            omega1: ImageGrid::new(self.width, self.height, omega1)?,
            omega2: ImageGrid::new(self.width, self.height, omega2)?,
        })
    }

    pub fn reconstruct(&self, mode: ReconstructionMode) -> Result<ImageGrid> {
        reconstruct(&self.components, mode, self.width, self.height)
    }

    pub fn reconstruct_subset(
        &self,
        channel_ids: &[usize],
        mode: ReconstructionMode,
    ) -> Result<ImageGrid> {
        let subset: Vec<AMFMComponent> = channel_ids
            .iter()
            .map(|&id| {
                self.components
                    .get(id)
                    .cloned()
                    .ok_or_else(|| Error::InvalidParameter(format!("channel id {id} out of range")))
            })
            .collect::<Result<_>>()?;
        reconstruct(&subset, mode, self.width, self.height)
    }
}

/// Sum the components back into an image.
pub fn reconstruct(
    components: &[AMFMComponent],
    mode: ReconstructionMode,
    width: usize,
    height: usize,
) -> Result<ImageGrid> {
    let mut out = vec![0.0; width * height];
    for c in components {
        if c.dims() != (width, height) {
            return Err(Error::DimensionMismatch(format!(
                "component {} is {}x{}, expected {width}x{height}",
                c.channel_id,
                c.amplitude.width(),
                c.amplitude.height()
            )));
        }
        let amps = c.amplitude.samples();
        let phases = c.phase.samples();
        match mode {
            ReconstructionMode::Amfm => {
                for i in 0..out.len() {
                    out[i] += amps[i] * phases[i].cos();
                }
            }
            ReconstructionMode::FmOnly => {
                for i in 0..out.len() {
                    out[i] += phases[i].cos();
                }
            }
        }
    }
    ImageGrid::new(width, height, out)
}

/// Result of the greedy SSIM-gated channel selection.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    /// Channel ids in decreasing component-energy order; the accepted
    /// prefix when the threshold was reached, otherwise every channel.
    pub selected: Vec<usize>,
    pub reconstruction: ImageGrid,
    /// SSIM against the input after each added channel.
    pub ssim_trace: Vec<f64>,
    pub reached: bool,
}

/// Decompose once, order channels by component energy, and accumulate
/// components greedily until the reconstruction's SSIM against the input
/// exceeds the threshold.
pub fn select_dominant_filters(
    image: &ImageGrid,
    bank: &FilterBank,
    threshold: f64,
) -> Result<SelectionResult> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "ssim threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let decomp = decompose(image, bank)?;
    select_from_decomposition(&decomp, image, threshold)
}

/// Selection on an existing decomposition (the CLI reuses the expensive
/// part for its reports).
pub fn select_from_decomposition(
    decomp: &Decomposition,
    image: &ImageGrid,
    threshold: f64,
) -> Result<SelectionResult> {
    let mut order: Vec<usize> = (0..decomp.components.len()).collect();
    let energies: Vec<f64> = decomp.components.iter().map(|c| c.energy()).collect();
    order.sort_by(|&a, &b| {
        energies[b]
            .partial_cmp(&energies[a])
            .expect("energies are finite")
            .then(a.cmp(&b))
    });

    let (w, h) = image.dims();
    let mut running = vec![0.0; w * h];
    let mut trace = Vec::new();
    let mut selected = Vec::new();
    let mut reached = false;
    for &id in &order {
        let c = &decomp.components[id];
        let amps = c.amplitude.samples();
        let phases = c.phase.samples();
        for i in 0..running.len() {
            running[i] += amps[i] * phases[i].cos();
        }
        selected.push(id);
        let recon = ImageGrid::new(w, h, running.clone())?;
        let score = ssim_default(&recon, image)?;
        trace.push(score);
        if score > threshold {
            reached = true;
            break;
        }
    }
    let reconstruction = ImageGrid::new(w, h, running)?;
    Ok(SelectionResult {
        selected,
        reconstruction,
        ssim_trace: trace,
        reached,
    })
}

/// Per-scale feature grids: dominant amplitude, frequency magnitude, and
/// orientation, the classifier-input maps.
#[derive(Debug, Clone)]
pub struct FeatureLayer {
    pub name: String,
    pub grid: ImageGrid,
}

pub fn export_features(decomp: &Decomposition) -> Result<Vec<FeatureLayer>> {
    let mut layers = Vec::with_capacity(3 * decomp.bank.scales);
    for scale in 0..decomp.bank.scales {
        let map = decomp.dominant_analysis(scale)?;
        let (w, h) = map.amplitude.dims();
        let magnitude =
            ImageGrid::from_fn(w, h, |x, y| map.omega1.at(x, y).hypot(map.omega2.at(x, y)));
        let orientation =
            ImageGrid::from_fn(w, h, |x, y| map.omega2.at(x, y).atan2(map.omega1.at(x, y)));
        layers.push(FeatureLayer {
            name: format!("scale{scale}_amplitude"),
            grid: map.amplitude,
        });
        layers.push(FeatureLayer {
            name: format!("scale{scale}_frequency_magnitude"),
            grid: magnitude,
        });
        layers.push(FeatureLayer {
            name: format!("scale{scale}_orientation"),
            grid: orientation,
        });
    }
    Ok(layers)
}
