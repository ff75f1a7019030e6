//! `amfmx actmax`: prototype search against a saved classifier, in the
//! plain, expert-regularized, or code-space regime.

use std::path::PathBuf;

use amfmx_core::actmax::{
    maximize_class, maximize_in_code_space, maximize_with_expert, AscentConfig, Decoder,
    PrototypeResult, RBMExpert, DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE,
};
use amfmx_core::error::{Error, Result};
use amfmx_core::image::ImageGrid;
use amfmx_core::net::DenseNet;
use amfmx_core::stack::{write_layers, Layer, WrittenLayer};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::common;

#[derive(Debug, Args)]
pub struct ActmaxArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Classifier JSON (softmax head).
    #[arg(long)]
    pub net: Option<PathBuf>,
    #[arg(long)]
    pub class: Option<usize>,
    /// plain | expert | code
    #[arg(long)]
    pub regime: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// RBM expert JSON (expert regime).
    #[arg(long)]
    pub expert: Option<PathBuf>,
    /// Decoder JSON (code regime; linear head).
    #[arg(long)]
    pub decoder: Option<PathBuf>,
    /// Start point as a comma-separated list; zeros when omitted.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Emit the prototype as a raster when width*height equals its dim.
    #[arg(long)]
    pub raster_width: Option<usize>,
    #[arg(long)]
    pub raster_height: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Plain,
    Expert,
    Code,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ActmaxCmdConfig {
    pub out_dir: PathBuf,
    pub net: PathBuf,
    pub class: usize,
    pub regime: Regime,
    pub lambda: f64,
    pub alpha: f64,
    pub expert: Option<PathBuf>,
    pub decoder: Option<PathBuf>,
    pub init: Option<Vec<f64>>,
    pub step: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub raster_width: Option<usize>,
    pub raster_height: Option<usize>,
}

impl Default for ActmaxCmdConfig {
    fn default() -> Self {
        ActmaxCmdConfig {
            out_dir: PathBuf::from("actmax_out"),
            net: PathBuf::from("model.json"),
            class: 0,
            regime: Regime::Plain,
            lambda: 0.1,
            alpha: 1.0,
            expert: None,
            decoder: None,
            init: None,
            step: 0.1,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOLERANCE,
            raster_width: None,
            raster_height: None,
        }
    }
}

#[derive(Serialize)]
struct ActmaxReport<'a> {
    command: &'a str,
    config: &'a ActmaxCmdConfig,
    x_star: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    z_star: Option<&'a [f64]>,
    objective_trace: &'a [f64],
    iterations: usize,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    prototype_raster: Option<WrittenLayer>,
}

pub fn effective_config(args: &ActmaxArgs) -> Result<ActmaxCmdConfig> {
    let mut config: ActmaxCmdConfig = common::load_config(args.config.as_deref())?;
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(net) = &args.net {
        config.net = net.clone();
    }
    if let Some(class) = args.class {
        config.class = class;
    }
    if let Some(regime) = &args.regime {
        config.regime = match regime.as_str() {
            "plain" => Regime::Plain,
            "expert" => Regime::Expert,
            "code" => Regime::Code,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown regime {other:?}"
                )))
            }
        };
    }
    if let Some(lambda) = args.lambda {
        config.lambda = lambda;
    }
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    if let Some(expert) = &args.expert {
        config.expert = Some(expert.clone());
    }
    if let Some(decoder) = &args.decoder {
        config.decoder = Some(decoder.clone());
    }
    if let Some(init) = &args.init {
        config.init = Some(common::parse_list(init, "init")?);
    }
    if let Some(step) = args.step {
        config.step = step;
    }
    if let Some(iters) = args.max_iters {
        config.max_iters = iters;
    }
    if let Some(tol) = args.tol {
        config.tol = tol;
    }
    if let Some(w) = args.raster_width {
        config.raster_width = Some(w);
    }
    if let Some(h) = args.raster_height {
        config.raster_height = Some(h);
    }
    Ok(config)
}

fn run_search(config: &ActmaxCmdConfig, net: &DenseNet) -> Result<PrototypeResult> {
    let ascent = AscentConfig {
        step: config.step,
        max_iters: config.max_iters,
        tol: config.tol,
    };
    match config.regime {
        Regime::Plain => {
            let init = config
                .init
                .clone()
                .unwrap_or_else(|| vec![0.0; net.input_dim()]);
            maximize_class(net, config.class, config.lambda, &init, &ascent)
        }
        Regime::Expert => {
            let path = config.expert.as_ref().ok_or_else(|| {
                Error::InvalidParameter("expert regime needs --expert <file>".into())
            })?;
            let expert = RBMExpert::from_json(&std::fs::read_to_string(path)?)?;
            let init = config
                .init
                .clone()
                .unwrap_or_else(|| vec![0.0; net.input_dim()]);
            maximize_with_expert(
                net,
                config.class,
                &expert,
                config.alpha,
                config.lambda,
                &init,
                &ascent,
            )
        }
        Regime::Code => {
            let path = config.decoder.as_ref().ok_or_else(|| {
                Error::InvalidParameter("code regime needs --decoder <file>".into())
            })?;
            let decoder = Decoder::new(DenseNet::from_json(&std::fs::read_to_string(path)?)?)?;
            let init = config
                .init
                .clone()
                .unwrap_or_else(|| vec![0.0; decoder.code_dim()]);
            maximize_in_code_space(net, config.class, &decoder, config.lambda, &init, &ascent)
        }
    }
}

pub fn run(args: &ActmaxArgs) -> Result<()> {
    let config = effective_config(args)?;
    let out_dir = common::resolve_out_dir(&config.out_dir);
    let net = DenseNet::from_json(&std::fs::read_to_string(&config.net)?)?;
    let result = run_search(&config, &net)?;
    common::ensure_dir(&out_dir)?;

    let prototype_raster = match (config.raster_width, config.raster_height) {
        (Some(w), Some(h)) => {
            if w * h != result.x_star.len() {
                return Err(Error::InvalidParameter(format!(
                    "raster {w}x{h} does not match prototype dimension {}",
                    result.x_star.len()
                )));
            }
            let grid = ImageGrid::new(w, h, result.x_star.clone())?;
            let written = write_layers(&out_dir, &[Layer::min_max("prototype", grid)])?;
            Some(written.into_iter().next().expect("one layer written"))
        }
        _ => None,
    };

    let report = ActmaxReport {
        command: "actmax",
        config: &config,
        x_star: &result.x_star,
        z_star: result.z_star.as_deref(),
        objective_trace: &result.objective_trace,
        iterations: result.iterations,
        converged: result.converged,
        prototype_raster,
    };
    common::write_json(&out_dir.join("report.json"), &report)?;
    Ok(())
}
