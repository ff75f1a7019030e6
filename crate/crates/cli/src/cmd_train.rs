//! `amfmx train`: train the dense classifier or the RBM density expert on
//! a synthetic or file-backed dataset, saving the model and its traces.

use std::path::PathBuf;

use amfmx_core::actmax::train_rbm;
use amfmx_core::dataset::Dataset;
use amfmx_core::error::{Error, Result};
use amfmx_core::net::{train, DenseNet, OutputKind, TrainConfig};
use amfmx_core::synth::{generate_dataset, SyntheticSpec};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::common;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// dense | rbm
    #[arg(long)]
    pub model: Option<String>,
    /// xor | two-blob (synthetic defaults), overriding any config dataset.
    #[arg(long)]
    pub dataset: Option<String>,
    /// JSON file holding {inputs, labels, classes}.
    #[arg(long)]
    pub data_file: Option<PathBuf>,
    /// Dense net layer sizes, e.g. "2,8,2".
    #[arg(long)]
    pub layer_sizes: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// RBM hidden unit count.
    #[arg(long)]
    pub hidden: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dense,
    Rbm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Synth(SyntheticSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainCmdConfig {
    pub out_dir: PathBuf,
    pub model: ModelKind,
    pub dataset: DatasetSource,
    pub layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub hidden: usize,
}

impl Default for TrainCmdConfig {
    fn default() -> Self {
        TrainCmdConfig {
            out_dir: PathBuf::from("train_out"),
            model: ModelKind::Dense,
            dataset: DatasetSource::Synth(SyntheticSpec::Xor),
            layer_sizes: vec![2, 8, 2],
            learning_rate: 0.5,
            epochs: 2000,
            batch_size: 4,
            seed: 7,
            hidden: 4,
        }
    }
}

#[derive(Serialize)]
struct TrainReportJson<'a> {
    command: &'a str,
    config: &'a TrainCmdConfig,
    model_file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    loss_trace: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reconstruction_trace: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
}

pub fn effective_config(args: &TrainArgs) -> Result<TrainCmdConfig> {
    let mut config: TrainCmdConfig = common::load_config(args.config.as_deref())?;
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(model) = &args.model {
        config.model = match model.as_str() {
            "dense" => ModelKind::Dense,
            "rbm" => ModelKind::Rbm,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown model kind {other:?}"
                )))
            }
        };
    }
    if let Some(name) = &args.dataset {
        config.dataset = DatasetSource::Synth(match name.as_str() {
            "xor" => SyntheticSpec::Xor,
            "two-blob" | "two_blob" => SyntheticSpec::TwoBlob {
                count: 200,
                mean_a: [-3.0, 0.0],
                mean_b: [3.0, 0.0],
                sigma: 1.0,
                min_margin: 1.0,
                seed: 1,
            },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown dataset {other:?} (use xor, two-blob, or --data-file)"
                )))
            }
        });
    }
    if let Some(file) = &args.data_file {
        config.dataset = DatasetSource::File(file.clone());
    }
    if let Some(sizes) = &args.layer_sizes {
        config.layer_sizes = common::parse_list(sizes, "layer sizes")?;
    }
    if let Some(lr) = args.learning_rate {
        config.learning_rate = lr;
    }
    if let Some(e) = args.epochs {
        config.epochs = e;
    }
    if let Some(b) = args.batch_size {
        config.batch_size = b;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(h) = args.hidden {
        config.hidden = h;
    }
    Ok(config)
}

fn load_dataset(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Synth(spec) => generate_dataset(spec),
        DatasetSource::File(path) => {
            let dataset: Dataset = common::read_json(path)?;
            Dataset::new(dataset.inputs, dataset.labels, dataset.classes)
        }
    }
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let config = effective_config(args)?;
    let out_dir = common::resolve_out_dir(&config.out_dir);
    let data = load_dataset(&config.dataset)?;
    common::ensure_dir(&out_dir)?;

    match config.model {
        ModelKind::Dense => {
            let mut sizes = config.layer_sizes.clone();
            if sizes.first() != Some(&data.input_dim()) || sizes.len() < 2 {
                return Err(Error::InvalidParameter(format!(
                    "layer sizes {sizes:?} do not start at the data dimension {}",
                    data.input_dim()
                )));
            }
            if *sizes.last().unwrap() != data.classes {
                return Err(Error::InvalidParameter(format!(
                    "output layer {} does not match {} classes",
                    sizes.last().unwrap(),
                    data.classes
                )));
            }
            sizes.shrink_to_fit();
            let net = DenseNet::init(&sizes, OutputKind::Softmax, config.seed)?;
            let train_config = TrainConfig {
                learning_rate: config.learning_rate,
                epochs: config.epochs,
                batch_size: config.batch_size,
                seed: config.seed,
            };
            let (trained, trace) = train(&net, &data, &train_config)?;
            let accuracy = trained.accuracy(&data)?;
            std::fs::write(out_dir.join("model.json"), trained.to_json()?)?;
            let report = TrainReportJson {
                command: "train",
                config: &config,
                model_file: "model.json".into(),
                loss_trace: Some(trace.loss_trace),
                reconstruction_trace: None,
                accuracy: Some(accuracy),
            };
            common::write_json(&out_dir.join("report.json"), &report)?;
        }
        ModelKind::Rbm => {
            let (expert, trace) = train_rbm(
                &data.inputs,
                config.hidden,
                config.epochs,
                config.learning_rate,
                config.seed,
            )?;
            std::fs::write(out_dir.join("model.json"), expert.to_json()?)?;
            let report = TrainReportJson {
                command: "train",
                config: &config,
                model_file: "model.json".into(),
                loss_trace: None,
                reconstruction_trace: Some(trace),
                accuracy: None,
            };
            common::write_json(&out_dir.join("report.json"), &report)?;
        }
    }
    Ok(())
}
