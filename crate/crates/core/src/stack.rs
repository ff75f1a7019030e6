//! Multi-layer raster stacks: quantized P5 files plus the normalization
//! records a manifest needs for bit-exact replay.
//!
//! Amplitude-like layers are normalized by their own min/max; phase and
//! frequency layers use their fixed invariant ranges so values map the
//! same way in every run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::image::{save_raster, ImageGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Affine map from the layer's own [min, max] onto [0, 1].
    MinMax,
    /// Affine map from a fixed range onto [0, 1].
    Fixed { lo: f64, hi: f64 },
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub name: String,
    pub grid: ImageGrid,
    pub normalization: Normalization,
}

impl Layer {
    pub fn min_max(name: impl Into<String>, grid: ImageGrid) -> Self {
        Layer {
            name: name.into(),
            grid,
            normalization: Normalization::MinMax,
        }
    }

    pub fn fixed(name: impl Into<String>, grid: ImageGrid, lo: f64, hi: f64) -> Self {
        Layer {
            name: name.into(),
            grid,
            normalization: Normalization::Fixed { lo, hi },
        }
    }
}

/// Manifest record for one written layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrittenLayer {
    pub name: String,
    pub file: String,
    /// Values mapped to byte 0 and byte 255; v = lo + (hi - lo) * byte/255.
    pub lo: f64,
    pub hi: f64,
}

/// Write each layer as `<name>.pgm` under `dir` and return the manifest
/// records. A degenerate (constant) min/max layer writes zeros with
/// lo = hi recorded.
pub fn write_layers(dir: &Path, layers: &[Layer]) -> Result<Vec<WrittenLayer>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(layers.len());
    for layer in layers {
        let (lo, hi) = match layer.normalization {
            Normalization::MinMax => layer.grid.min_max(),
            Normalization::Fixed { lo, hi } => (lo, hi),
        };
        let span = hi - lo;
        let normalized = if span > 0.0 {
            let (w, h) = layer.grid.dims();
            ImageGrid::from_fn(w, h, |x, y| (layer.grid.at(x, y) - lo) / span)
        } else {
            ImageGrid::zeros(layer.grid.width(), layer.grid.height())
        };
        let file = format!("{}.pgm", layer.name);
        save_raster(&normalized, dir.join(&file))?;
        written.push(WrittenLayer {
            name: layer.name.clone(),
            file,
            lo,
            hi,
        });
    }
    Ok(written)
}
