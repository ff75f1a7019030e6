//! Labeled vector datasets shared by the trainer and the data generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if inputs.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} inputs vs {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        let dim = inputs[0].len();
        for x in &inputs {
            if x.len() != dim {
                return Err(Error::DimensionMismatch(
                    "ragged dataset input dimensions".into(),
                ));
            }
        }
        for &label in &labels {
            if label >= classes {
                return Err(Error::LabelOutOfRange {
                    label,
                    classes,
                });
            }
        }
        Ok(Dataset {
            inputs,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }
}
