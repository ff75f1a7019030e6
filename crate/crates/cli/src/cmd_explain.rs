//! `amfmx explain`: fit a sparse local surrogate to a saved net's score
//! around one instance, emitting weights and (for rasters) a heat map.

use std::path::PathBuf;

use amfmx_core::error::{Error, Result};
use amfmx_core::image::load_raster;
use amfmx_core::net::{DenseNet, OutputKind};
use amfmx_core::posthoc::{
    fit_local_surrogate, BlockMasking, LocalExplanation, TabularMasking,
    DEFAULT_BLOCK,
};
use amfmx_core::stack::{write_layers, Layer, WrittenLayer};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::common;

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Black-box net JSON: softmax heads score p(class|x), linear heads
    /// score the raw output coordinate.
    #[arg(long)]
    pub net: Option<PathBuf>,
    #[arg(long)]
    pub class: Option<usize>,
    /// Raster instance path (block masking).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub block: Option<usize>,
    /// Inline vector instance, comma-separated (feature zeroing).
    #[arg(long)]
    pub vector: Option<String>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub kernel_width: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    Raster { path: PathBuf, block: usize },
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    pub out_dir: PathBuf,
    pub net: PathBuf,
    pub class: usize,
    pub instance: InstanceSource,
    pub budget: usize,
    pub samples: usize,
    pub kernel_width: f64,
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            out_dir: PathBuf::from("explain_out"),
            net: PathBuf::from("model.json"),
            class: 0,
            instance: InstanceSource::Vector(vec![1.0, 1.0]),
            budget: 2,
            samples: 64,
            kernel_width: 0.75,
            seed: 0,
        }
    }
}

#[derive(Serialize)]
struct ExplainReport<'a> {
    command: &'a str,
    config: &'a ExplainConfig,
    explanation: &'a LocalExplanation,
    #[serde(skip_serializing_if = "Option::is_none")]
    heatmap: Option<WrittenLayer>,
}

pub fn effective_config(args: &ExplainArgs) -> Result<ExplainConfig> {
    let mut config: ExplainConfig = common::load_config(args.config.as_deref())?;
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(net) = &args.net {
        config.net = net.clone();
    }
    if let Some(class) = args.class {
        config.class = class;
    }
    if let Some(input) = &args.input {
        config.instance = InstanceSource::Raster {
            path: input.clone(),
            block: args.block.unwrap_or(DEFAULT_BLOCK),
        };
    } else if let Some(block) = args.block {
        if let InstanceSource::Raster { block: b, .. } = &mut config.instance {
            *b = block;
        }
    }
    if let Some(vector) = &args.vector {
        config.instance = InstanceSource::Vector(common::parse_list(vector, "vector")?);
    }
    if let Some(budget) = args.budget {
        config.budget = budget;
    }
    if let Some(samples) = args.samples {
        config.samples = samples;
    }
    if let Some(width) = args.kernel_width {
        config.kernel_width = width;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

pub fn run(args: &ExplainArgs) -> Result<()> {
    let config = effective_config(args)?;
    let out_dir = common::resolve_out_dir(&config.out_dir);
    let net = DenseNet::from_json(&std::fs::read_to_string(&config.net)?)?;
    common::ensure_dir(&out_dir)?;
    let class = config.class;
    if class >= net.output_dim() {
        return Err(Error::LabelOutOfRange {
            label: class,
            classes: net.output_dim(),
        });
    }
    let score = |x: &[f64]| -> f64 {
        match net.output {
            OutputKind::Softmax => net.forward(x).map(|p| p[class]).unwrap_or(f64::NAN),
            OutputKind::Linear => net.forward(x).map(|y| y[class]).unwrap_or(f64::NAN),
        }
    };

    let (explanation, heatmap) = match &config.instance {
        InstanceSource::Vector(instance) => {
            if instance.len() != net.input_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "instance dim {} vs net input {}",
                    instance.len(),
                    net.input_dim()
                )));
            }
            let mapping = TabularMasking {
                instance: instance.clone(),
            };
            let explanation = fit_local_surrogate(
                score,
                &mapping,
                config.budget,
                config.samples,
                config.kernel_width,
                config.seed,
            )?;
            (explanation, None)
        }
        InstanceSource::Raster { path, block } => {
            let image = load_raster(path)?;
            if image.samples().len() != net.input_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "raster has {} pixels vs net input {}",
                    image.samples().len(),
                    net.input_dim()
                )));
            }
            let mapping = BlockMasking::new(image, *block)?;
            let explanation = fit_local_surrogate(
                score,
                &mapping,
                config.budget,
                config.samples,
                config.kernel_width,
                config.seed,
            )?;
            let heat = mapping.block_map(&explanation.feature_weights)?;
            let written = write_layers(&out_dir, &[Layer::min_max("heatmap", heat)])?;
            (
                explanation,
                Some(written.into_iter().next().expect("one layer written")),
            )
        }
    };

    let report = ExplainReport {
        command: "explain",
        config: &config,
        explanation: &explanation,
        heatmap,
    };
    common::write_json(&out_dir.join("report.json"), &report)?;
    Ok(())
}
