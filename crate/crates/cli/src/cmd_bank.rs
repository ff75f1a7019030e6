//! `amfmx coverage`, `amfmx decompose`, and `amfmx dominant-filters`: the
//! filter-bank pipeline commands sharing the bank parameter set.

use std::path::PathBuf;

use amfmx_core::amfm::{
    decompose_with_workers, export_features, select_from_decomposition, ReconstructionMode,
    DEFAULT_SSIM_THRESHOLD,
};
use amfmx_core::error::{Error, Result};
use amfmx_core::gabor::{
    coverage_map, coverage_map_of, design_bank, FilterBank, DEFAULT_LOWPASS_CUTOFF,
    DEFAULT_ORIENTATIONS, DEFAULT_SCALES,
};
use amfmx_core::image::load_raster;
use amfmx_core::stack::{write_layers, Layer, WrittenLayer};
use clap::Args;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::common;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankParams {
    pub scales: usize,
    pub orientations: usize,
    pub lowpass_cutoff: f64,
}

impl Default for BankParams {
    fn default() -> Self {
        BankParams {
            scales: DEFAULT_SCALES,
            orientations: DEFAULT_ORIENTATIONS,
            lowpass_cutoff: DEFAULT_LOWPASS_CUTOFF,
        }
    }
}

impl BankParams {
    pub fn build(&self) -> Result<FilterBank> {
        design_bank(self.scales, self.orientations, self.lowpass_cutoff)
    }
}

#[derive(Debug, Args)]
pub struct BankFlags {
    #[arg(long)]
    pub scales: Option<usize>,
    #[arg(long)]
    pub orientations: Option<usize>,
    #[arg(long)]
    pub lowpass_cutoff: Option<f64>,
}

impl BankFlags {
    fn apply(&self, params: &mut BankParams) {
        if let Some(s) = self.scales {
            params.scales = s;
        }
        if let Some(o) = self.orientations {
            params.orientations = o;
        }
        if let Some(c) = self.lowpass_cutoff {
            params.lowpass_cutoff = c;
        }
    }
}

// ---------------------------------------------------------------- coverage

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub bank: BankFlags,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverageConfig {
    pub out_dir: PathBuf,
    pub bank: BankParams,
    pub width: usize,
    pub height: usize,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        CoverageConfig {
            out_dir: PathBuf::from("coverage_out"),
            bank: BankParams::default(),
            width: 256,
            height: 256,
        }
    }
}

#[derive(Serialize)]
struct CoverageReport<'a> {
    command: &'a str,
    config: &'a CoverageConfig,
    coverage: WrittenLayer,
    bank: &'a FilterBank,
}

pub fn effective_coverage_config(args: &CoverageArgs) -> Result<CoverageConfig> {
    let mut config: CoverageConfig = common::load_config(args.config.as_deref())?;
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    }
    args.bank.apply(&mut config.bank);
    if let Some(w) = args.width {
        config.width = w;
    }
    if let Some(h) = args.height {
        config.height = h;
    }
    Ok(config)
}

pub fn run_coverage(args: &CoverageArgs) -> Result<()> {
    let config = effective_coverage_config(args)?;
    let out_dir = common::resolve_out_dir(&config.out_dir);
    common::ensure_dir(&out_dir)?;
    let bank = config.bank.build()?;
    let map = coverage_map(&bank, config.width, config.height)?;
    let written = write_layers(&out_dir, &[Layer::min_max("coverage", map)])?;
    let report = CoverageReport {
        command: "coverage",
        config: &config,
        coverage: written.into_iter().next().expect("one layer written"),
        bank: &bank,
    };
    common::write_json(&out_dir.join("report.json"), &report)?;
    Ok(())
}

// -------------------------------------------------------------- decompose

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub bank: BankFlags,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also dump every per-channel amplitude/phase/frequency raster.
    #[arg(long)]
    pub dump_components: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DecomposeConfig {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub bank: BankParams,
    pub workers: usize,
    pub dump_components: bool,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig {
            input: PathBuf::from("image.pgm"),
            out_dir: PathBuf::from("decompose_out"),
            bank: BankParams::default(),
            workers: 1,
            dump_components: false,
        }
    }
}

#[derive(Serialize)]
struct DecomposeReport<'a> {
    command: &'a str,
    config: &'a DecomposeConfig,
    layers: Vec<WrittenLayer>,
    bank: &'a FilterBank,
}

pub fn effective_decompose_config(args: &DecomposeArgs) -> Result<DecomposeConfig> {
    let mut config: DecomposeConfig = common::load_config(args.config.as_deref())?;
    if let Some(input) = &args.input {
        config.input = input.clone();
    }
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    }
    args.bank.apply(&mut config.bank);
    if let Some(w) = args.workers {
        config.workers = w;
    }
    if let Some(d) = args.dump_components {
        config.dump_components = d;
    }
    Ok(config)
}

pub fn run_decompose(args: &DecomposeArgs) -> Result<()> {
    let config = effective_decompose_config(args)?;
    let out_dir = common::resolve_out_dir(&config.out_dir);
    let image = load_raster(&config.input)?;
    let bank = config.bank.build()?;
    common::ensure_dir(&out_dir)?;
    let decomp = decompose_with_workers(&image, &bank, config.workers.max(1))?;

    let mut layers: Vec<Layer> = Vec::new();
    for feature in export_features(&decomp)? {
        let normalization = if feature.name.ends_with("_amplitude") {
            None
        } else if feature.name.ends_with("_frequency_magnitude") {
            Some((0.0, PI * std::f64::consts::SQRT_2))
        } else {
            Some((-PI, PI))
        };
        layers.push(match normalization {
            None => Layer::min_max(feature.name, feature.grid),
            Some((lo, hi)) => Layer::fixed(feature.name, feature.grid, lo, hi),
        });
    }
    for scale in 0..bank.scales {
        let map = decomp.dominant_analysis(scale)?;
        layers.push(Layer::fixed(
            format!("scale{scale}_phase"),
            map.phase.clone(),
            -PI,
            PI,
        ));
        layers.push(Layer::min_max(format!("fm_only_scale{scale}"), map.fm_image()));
    }
    layers.push(Layer::min_max(
        "recon_amfm",
        decomp.reconstruct(ReconstructionMode::Amfm)?,
    ));
    layers.push(Layer::min_max(
        "recon_fm_only",
        decomp.reconstruct(ReconstructionMode::FmOnly)?,
    ));
    if config.dump_components {
        for component in &decomp.components {
            let id = component.channel_id;
            layers.push(Layer::min_max(
                format!("channel{id}_amplitude"),
                component.amplitude.clone(),
            ));
            layers.push(Layer::fixed(
                format!("channel{id}_phase"),
                component.phase.clone(),
                -PI,
                PI,
            ));
            layers.push(Layer::fixed(
                format!("channel{id}_omega1"),
                component.omega1.clone(),
                -PI,
                PI,
            ));
            layers.push(Layer::fixed(
                format!("channel{id}_omega2"),
                component.omega2.clone(),
                -PI,
                PI,
            ));
        }
    }

    let written = write_layers(&out_dir, &layers)?;
    if written.len() != layers.len() {
        return Err(Error::Internal(format!(
            "wrote {} rasters for {} layers",
            written.len(),
            layers.len()
        )));
    }
    let report = DecomposeReport {
        command: "decompose",
        config: &config,
        layers: written,
        bank: &bank,
    };
    common::write_json(&out_dir.join("report.json"), &report)?;
    Ok(())
}

// -------------------------------------------------------- dominant-filters

#[derive(Debug, Args)]
pub struct DominantArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub bank: BankFlags,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DominantConfig {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub bank: BankParams,
    pub threshold: f64,
    pub workers: usize,
}

impl Default for DominantConfig {
    fn default() -> Self {
        DominantConfig {
            input: PathBuf::from("image.pgm"),
            out_dir: PathBuf::from("dominant_out"),
            bank: BankParams::default(),
            threshold: DEFAULT_SSIM_THRESHOLD,
            workers: 1,
        }
    }
}

#[derive(Serialize)]
struct DominantReport<'a> {
    command: &'a str,
    config: &'a DominantConfig,
    selected: &'a [usize],
    ssim_trace: &'a [f64],
    reached: bool,
    /// Indices where the trace decreased, if any; the greedy trace is not
    /// guaranteed monotone in general.
    trace_violations: Vec<usize>,
    coverage: WrittenLayer,
    reconstruction: WrittenLayer,
    bank: &'a FilterBank,
}

pub fn effective_dominant_config(args: &DominantArgs) -> Result<DominantConfig> {
    let mut config: DominantConfig = common::load_config(args.config.as_deref())?;
    if let Some(input) = &args.input {
        config.input = input.clone();
    }
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    }
    args.bank.apply(&mut config.bank);
    if let Some(t) = args.threshold {
        config.threshold = t;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    Ok(config)
}

pub fn run_dominant(args: &DominantArgs) -> Result<()> {
    let config = effective_dominant_config(args)?;
    let out_dir = common::resolve_out_dir(&config.out_dir);
    let image = load_raster(&config.input)?;
    let bank = config.bank.build()?;
    common::ensure_dir(&out_dir)?;
    let decomp = decompose_with_workers(&image, &bank, config.workers.max(1))?;
    let selection = select_from_decomposition(&decomp, &image, config.threshold)?;

    let coverage = coverage_map_of(&bank, &selection.selected, image.width(), image.height())?;
    let written = write_layers(
        &out_dir,
        &[
            Layer::min_max("coverage_selected", coverage),
            Layer::min_max("reconstruction", selection.reconstruction.clone()),
        ],
    )?;

    let trace_violations: Vec<usize> = selection
        .ssim_trace
        .windows(2)
        .enumerate()
        .filter(|(_, pair)| pair[1] < pair[0])
        .map(|(i, _)| i + 1)
        .collect();

    let report = DominantReport {
        command: "dominant-filters",
        config: &config,
        selected: &selection.selected,
        ssim_trace: &selection.ssim_trace,
        reached: selection.reached,
        trace_violations,
        coverage: written[0].clone(),
        reconstruction: written[1].clone(),
        bank: &bank,
    };
    common::write_json(&out_dir.join("report.json"), &report)?;
    Ok(())
}
