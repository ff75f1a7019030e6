//! End-to-end decomposition pipeline checks on the frozen synthetic
//! corpus: full-bank reconstruction quality, greedy selection against an
//! independent prefix oracle, and trace monotonicity.

use std::f64::consts::PI;

use amfmx_core::amfm::{
    decompose, select_from_decomposition, ReconstructionMode, DEFAULT_SSIM_THRESHOLD,
};
use amfmx_core::gabor::default_bank;
use amfmx_core::image::ImageGrid;
use amfmx_core::ssim::ssim_default;
use amfmx_core::synth::{generate_image, Harmonic, SyntheticSpec};

/// Five in-band harmonics across the bank's scales, placed on rings where
/// the mirrored channel gains sum to ~1 so the bank can represent them.
pub fn five_harmonics() -> Vec<Harmonic> {
    let polar = [
        (0.63, 0.5),
        (0.63, 2.5),
        (1.24, 1.5),
        (2.18, 3.5),
        (2.18, 5.5),
    ];
    polar
        .iter()
        .map(|&(rho, k): &(f64, f64)| {
            let theta = PI * k / 8.0;
            Harmonic {
                amplitude: 0.2,
                u: rho * theta.cos(),
                v: rho * theta.sin(),
            }
        })
        .collect()
}

fn five_harmonic_image() -> ImageGrid {
    let spec = SyntheticSpec::MultiHarmonic {
        width: 256,
        height: 256,
        offset: 0.5,
        components: five_harmonics(),
    };
    generate_image(&spec).unwrap().image
}

fn snr_db(signal: &ImageGrid, estimate: &ImageGrid) -> f64 {
    let mut energy = 0.0;
    let mut error = 0.0;
    for (s, e) in signal.samples().iter().zip(estimate.samples()) {
        energy += s * s;
        let d = e - s;
        error += d * d;
    }
    10.0 * (energy / error).log10()
}

#[test]
fn full_bank_reconstruction_snr_at_least_20_db() {
    let image = five_harmonic_image();
    let bank = default_bank();
    let decomp = decompose(&image, &bank).unwrap();
    let recon = decomp.reconstruct(ReconstructionMode::Amfm).unwrap();
    let snr = snr_db(&image, &recon);
    // Measured 33.6 dB on the frozen corpus; 20 dB is the acceptance bound.
    assert!(snr >= 20.0, "reconstruction SNR {snr:.2} dB");
}

#[test]
fn greedy_selection_matches_prefix_oracle_within_budget() {
    let image = five_harmonic_image();
    let bank = default_bank();
    let decomp = decompose(&image, &bank).unwrap();
    let selection = select_from_decomposition(&decomp, &image, DEFAULT_SSIM_THRESHOLD).unwrap();
    assert!(selection.reached, "threshold not reached");
    assert!(
        selection.selected.len() <= 10,
        "needed {} channels",
        selection.selected.len()
    );

    // Independent oracle: rebuild each energy-ordered prefix from scratch
    // and find the first one that passes the threshold.
    let mut order: Vec<usize> = (0..decomp.components.len()).collect();
    let energies: Vec<f64> = decomp.components.iter().map(|c| c.energy()).collect();
    order.sort_by(|&a, &b| {
        energies[b]
            .partial_cmp(&energies[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut oracle_prefix = None;
    for k in 1..=order.len() {
        let recon = decomp
            .reconstruct_subset(&order[..k], ReconstructionMode::Amfm)
            .unwrap();
        if ssim_default(&recon, &image).unwrap() > DEFAULT_SSIM_THRESHOLD {
            oracle_prefix = Some(k);
            break;
        }
    }
    let oracle_prefix = oracle_prefix.expect("some prefix passes");
    assert!(oracle_prefix <= 10, "oracle prefix {oracle_prefix}");
    assert_eq!(selection.selected.len(), oracle_prefix);
    assert_eq!(&selection.selected[..], &order[..oracle_prefix]);
}

#[test]
fn ssim_trace_is_non_decreasing_on_the_regression_corpus() {
    // SSIM is not additive, so monotonicity is a corpus property, not a
    // theorem; this corpus is frozen as the regression set.
    let bank = default_bank();
    let corpus: Vec<ImageGrid> = vec![
        generate_image(&SyntheticSpec::PureCosine {
            width: 128,
            height: 128,
            harmonic: Harmonic {
                amplitude: 0.7,
                u: 0.9,
                v: 0.3,
            },
        })
        .unwrap()
        .image,
        five_harmonic_image(),
    ];
    for (i, image) in corpus.iter().enumerate() {
        let decomp = decompose(image, &bank).unwrap();
        let selection =
            select_from_decomposition(&decomp, image, DEFAULT_SSIM_THRESHOLD).unwrap();
        for (j, pair) in selection.ssim_trace.windows(2).enumerate() {
            assert!(
                pair[1] >= pair[0],
                "corpus image {i}: trace decreased at step {} ({} -> {})",
                j + 1,
                pair[0],
                pair[1]
            );
        }
    }
}

#[test]
fn trace_violations_are_detectable_when_ssim_dips() {
    // The half-split texture produces a genuine dip in the greedy trace
    // before the threshold is reached; the run report must surface it.
    // Frozen: step 2 dips (measured 0.830 -> 0.806).
    let image = generate_image(&SyntheticSpec::HalfSplit {
        width: 128,
        height: 128,
        left: Harmonic {
            amplitude: 1.0,
            u: 0.5,
            v: 0.0,
        },
        right: Harmonic {
            amplitude: 1.0,
            u: 2.0,
            v: 0.0,
        },
        seam: 8,
    })
    .unwrap()
    .image;
    let bank = default_bank();
    let decomp = decompose(&image, &bank).unwrap();
    let selection = select_from_decomposition(&decomp, &image, DEFAULT_SSIM_THRESHOLD).unwrap();
    let violations: Vec<usize> = selection
        .ssim_trace
        .windows(2)
        .enumerate()
        .filter(|(_, pair)| pair[1] < pair[0])
        .map(|(j, _)| j + 1)
        .collect();
    assert!(
        violations.contains(&2),
        "expected the frozen dip at trace entry 2, got {violations:?}"
    );
    // This texture never clears the threshold (its left tone sits on the
    // bank's over-covered first ring), so the fallback contract applies:
    // every channel comes back and the flags carry the dips.
    assert!(!selection.reached);
    assert_eq!(selection.selected.len(), bank.channel_count());
    assert_eq!(selection.ssim_trace.len(), bank.channel_count());
}
