//! `amfmx synth`: render a synthetic image or dataset from a declarative
//! spec, with optional ground-truth layers.

use std::path::PathBuf;

use amfmx_core::error::{Error, Result};
use amfmx_core::image::ImageGrid;
use amfmx_core::stack::{write_layers, Layer, WrittenLayer};
use amfmx_core::synth::{generate_dataset, generate_image, Harmonic, SyntheticSpec, Truth};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::common;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// pure-cosine | multi-harmonic | radial-chirp | half-split | two-blob | xor
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long)]
    pub v: Option<f64>,
    /// Harmonic as "amplitude,u,v"; repeat for several components.
    #[arg(long = "component")]
    pub components: Vec<String>,
    #[arg(long)]
    pub offset: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    /// Left/right harmonics of a half-split, as "amplitude,u,v".
    #[arg(long)]
    pub left: Option<String>,
    #[arg(long)]
    pub right: Option<String>,
    #[arg(long)]
    pub seam: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    /// Blob means as "x,y".
    #[arg(long)]
    pub mean_a: Option<String>,
    #[arg(long)]
    pub mean_b: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub min_margin: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub emit_ground_truth: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub out_dir: PathBuf,
    pub spec: SyntheticSpec,
    pub emit_ground_truth: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            out_dir: PathBuf::from("synth_out"),
            spec: SyntheticSpec::PureCosine {
                width: 256,
                height: 256,
                harmonic: Harmonic {
                    amplitude: 0.7,
                    u: 0.9,
                    v: 0.3,
                },
            },
            emit_ground_truth: false,
        }
    }
}

#[derive(Serialize)]
struct SynthReport<'a> {
    command: &'a str,
    config: &'a SynthConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    image: Option<ImageRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset_file: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    layers: Vec<WrittenLayer>,
}

#[derive(Serialize)]
struct ImageRecord {
    file: String,
    lo: f64,
    hi: f64,
}

fn parse_harmonic(text: &str) -> Result<Harmonic> {
    let parts: Vec<f64> = common::parse_list(text, "harmonic")?;
    if parts.len() != 3 {
        return Err(Error::InvalidParameter(format!(
            "harmonic must be amplitude,u,v; got {text:?}"
        )));
    }
    Ok(Harmonic {
        amplitude: parts[0],
        u: parts[1],
        v: parts[2],
    })
}

fn parse_point(text: &str) -> Result<[f64; 2]> {
    let parts: Vec<f64> = common::parse_list(text, "point")?;
    if parts.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "point must be x,y; got {text:?}"
        )));
    }
    Ok([parts[0], parts[1]])
}

fn default_spec_for(kind: &str) -> Result<SyntheticSpec> {
    Ok(match kind {
        "pure-cosine" | "pure_cosine" => SynthConfig::default().spec,
        "multi-harmonic" | "multi_harmonic" => SyntheticSpec::MultiHarmonic {
            width: 256,
            height: 256,
            offset: 0.5,
            components: vec![Harmonic {
                amplitude: 0.2,
                u: 0.9,
                v: 0.3,
            }],
        },
        "radial-chirp" | "radial_chirp" => SyntheticSpec::RadialChirp {
            width: 256,
            height: 256,
            rate: 0.002,
        },
        "half-split" | "half_split" => SyntheticSpec::HalfSplit {
            width: 256,
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
        },
        "two-blob" | "two_blob" => SyntheticSpec::TwoBlob {
            count: 200,
            mean_a: [-3.0, 0.0],
            mean_b: [3.0, 0.0],
            sigma: 1.0,
            min_margin: 1.0,
            seed: 1,
        },
        "xor" => SyntheticSpec::Xor,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown synthetic kind {other:?}"
            )))
        }
    })
}

fn apply_flags(spec: &mut SyntheticSpec, args: &SynthArgs) -> Result<()> {
    match spec {
        SyntheticSpec::PureCosine {
            width,
            height,
            harmonic,
        } => {
            if let Some(w) = args.width {
                *width = w;
            }
            if let Some(h) = args.height {
                *height = h;
            }
            if let Some(a) = args.amplitude {
                harmonic.amplitude = a;
            }
            if let Some(u) = args.u {
                harmonic.u = u;
            }
            if let Some(v) = args.v {
                harmonic.v = v;
            }
        }
        SyntheticSpec::MultiHarmonic {
            width,
            height,
            offset,
            components,
        } => {
            if let Some(w) = args.width {
                *width = w;
            }
            if let Some(h) = args.height {
                *height = h;
            }
            if let Some(o) = args.offset {
                *offset = o;
            }
            if !args.components.is_empty() {
                *components = args
                    .components
                    .iter()
                    .map(|c| parse_harmonic(c))
                    .collect::<Result<_>>()?;
            }
        }
        SyntheticSpec::RadialChirp {
            width,
            height,
            rate,
        } => {
            if let Some(w) = args.width {
                *width = w;
            }
            if let Some(h) = args.height {
                *height = h;
            }
            if let Some(r) = args.rate {
                *rate = r;
            }
        }
        SyntheticSpec::HalfSplit {
            width,
            height,
            left,
            right,
            seam,
        } => {
            if let Some(w) = args.width {
                *width = w;
            }
            if let Some(h) = args.height {
                *height = h;
            }
            if let Some(text) = &args.left {
                *left = parse_harmonic(text)?;
            }
            if let Some(text) = &args.right {
                *right = parse_harmonic(text)?;
            }
            if let Some(s) = args.seam {
                *seam = s;
            }
        }
        SyntheticSpec::TwoBlob {
            count,
            mean_a,
            mean_b,
            sigma,
            min_margin,
            seed,
        } => {
            if let Some(c) = args.count {
                *count = c;
            }
            if let Some(text) = &args.mean_a {
                *mean_a = parse_point(text)?;
            }
            if let Some(text) = &args.mean_b {
                *mean_b = parse_point(text)?;
            }
            if let Some(s) = args.sigma {
                *sigma = s;
            }
            if let Some(m) = args.min_margin {
                *min_margin = m;
            }
            if let Some(s) = args.seed {
                *seed = s;
            }
        }
        SyntheticSpec::Xor => {}
    }
    Ok(())
}

pub fn effective_config(args: &SynthArgs) -> Result<SynthConfig> {
    let mut config: SynthConfig = common::load_config(args.config.as_deref())?;
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(kind) = &args.kind {
        config.spec = default_spec_for(kind)?;
    }
    apply_flags(&mut config.spec, args)?;
    if let Some(emit) = args.emit_ground_truth {
        config.emit_ground_truth = emit;
    }
    Ok(config)
}

fn truth_layers(image: &ImageGrid, truth: &Truth) -> Vec<Layer> {
    use std::f64::consts::PI;
    let (w, h) = image.dims();
    match truth {
        Truth::RadialChirp { rate } => {
            let rate = *rate;
            vec![
                Layer::fixed(
                    "truth_omega1",
                    ImageGrid::from_fn(w, h, |x, _| 2.0 * rate * x as f64),
                    -PI,
                    PI,
                ),
                Layer::fixed(
                    "truth_omega2",
                    ImageGrid::from_fn(w, h, |_, y| 2.0 * rate * y as f64),
                    -PI,
                    PI,
                ),
            ]
        }
        Truth::HalfSplit { winners, .. } => {
            vec![Layer::fixed(
                "truth_winners",
                ImageGrid::from_fn(w, h, |x, y| f64::from(winners[y * w + x])),
                0.0,
                1.0,
            )]
        }
        // Constant-field truths are fully described in the report JSON.
        Truth::PureCosine(_) | Truth::MultiHarmonic { .. } => Vec::new(),
    }
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let config = effective_config(args)?;
    let out_dir = common::resolve_out_dir(&config.out_dir);
    common::ensure_dir(&out_dir)?;

    let mut report = SynthReport {
        command: "synth",
        config: &config,
        image: None,
        dataset_file: None,
        layers: Vec::new(),
    };

    match &config.spec {
        SyntheticSpec::TwoBlob { .. } | SyntheticSpec::Xor => {
            let dataset = generate_dataset(&config.spec)?;
            common::write_json(&out_dir.join("dataset.json"), &dataset)?;
            report.dataset_file = Some("dataset.json".into());
        }
        _ => {
            let generated = generate_image(&config.spec)?;
            let mut layers = vec![Layer::min_max("image", generated.image.clone())];
            if config.emit_ground_truth {
                layers.extend(truth_layers(&generated.image, &generated.truth));
            }
            let written = write_layers(&out_dir, &layers)?;
            report.image = Some(ImageRecord {
                file: written[0].file.clone(),
                lo: written[0].lo,
                hi: written[0].hi,
            });
            report.layers = written[1..].to_vec();
        }
    }

    common::write_json(&out_dir.join("report.json"), &report)?;
    Ok(())
}
