//! Frequency-to-information transformation (FIT) for 1D spectra.
//!
//! A FIT model is trained from a labeled library of spectra sharing one
//! ppm grid and turns any spectrum on that grid into an information
//! spectrum: per channel, one minus the library frequency of the observed
//! intensity bin. Around the transform sit the tools to judge it:
//! correlation-matrix distances, a histogram Bayes error on intra/inter
//! class correlations, a small backpropagation network, and a seeded
//! generator of synthetic carbohydrate-like spectra.

pub mod ann;
pub mod error;
pub mod eval;
pub mod fit;
pub mod io;
pub mod spectrum;
pub mod synth;

pub use error::{Error, Result};
pub use eval::ClassMultiplicities;
pub use fit::{FitModel, FitParams, InformationSpectrum, ThresholdChoice};
pub use spectrum::{LabeledSpectrum, PpmGrid, PpmInterval, Spectrum, SpectrumLibrary};
