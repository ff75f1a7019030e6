//! Multiscale AM-FM image decomposition with dominant-filter selection,
//! activation-maximization prototype search, and local surrogate
//! explanations, plus the synthetic data needed to verify all of it at
//! desk scale.

pub mod actmax;
pub mod amfm;
pub mod dataset;
pub mod error;
pub mod fft;
pub mod gabor;
pub mod image;
pub mod net;
pub mod posthoc;
pub mod rng;
pub mod ssim;
pub mod stack;
pub mod synth;

pub use error::{Error, Result};
