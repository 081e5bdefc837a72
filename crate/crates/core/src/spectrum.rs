//! Spectrum, grid and library types, plus the two per-spectrum primitives
//! every other stage builds on: unit-norm scaling and grid resampling.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ClassMultiplicities;

/// Uniform chemical-shift axis. Channel `c` sits at
/// `start_ppm + c * (end_ppm - start_ppm) / (n_channels - 1)`; either
/// direction is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFields")]
pub struct PpmGrid {
    start_ppm: f64,
    end_ppm: f64,
    n_channels: usize,
}

#[derive(Deserialize)]
struct GridFields {
    start_ppm: f64,
    end_ppm: f64,
    n_channels: usize,
}

impl TryFrom<GridFields> for PpmGrid {
    type Error = Error;

    fn try_from(g: GridFields) -> Result<Self> {
        PpmGrid::new(g.start_ppm, g.end_ppm, g.n_channels)
    }
}

impl PpmGrid {
    pub fn new(start_ppm: f64, end_ppm: f64, n_channels: usize) -> Result<Self> {
        if n_channels < 2 {
            return Err(Error::GridTooSmall(n_channels));
        }
        if !start_ppm.is_finite() || !end_ppm.is_finite() {
            return Err(Error::InvalidInput("grid bounds must be finite".into()));
        }
        if start_ppm == end_ppm {
            return Err(Error::DegenerateGrid(start_ppm));
        }
        Ok(Self { start_ppm, end_ppm, n_channels })
    }

    pub fn start_ppm(&self) -> f64 {
        self.start_ppm
    }

    pub fn end_ppm(&self) -> f64 {
        self.end_ppm
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Signed spacing between adjacent channels.
    pub fn step(&self) -> f64 {
        (self.end_ppm - self.start_ppm) / (self.n_channels - 1) as f64
    }

    pub fn ppm(&self, channel: usize) -> f64 {
        self.start_ppm + channel as f64 * self.step()
    }

    pub fn ppm_values(&self) -> Vec<f64> {
        (0..self.n_channels).map(|c| self.ppm(c)).collect()
    }

    /// The window as an ordered interval, regardless of axis direction.
    pub fn window(&self) -> PpmInterval {
        PpmInterval::new(self.start_ppm, self.end_ppm)
    }

    /// Channel position on the [0, 1] scale used by the drift model.
    pub fn unit_position(&self, channel: usize) -> f64 {
        channel as f64 / (self.n_channels - 1) as f64
    }
}

/// Closed ppm interval with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpmInterval {
    pub lo: f64,
    pub hi: f64,
}

impl PpmInterval {
    pub fn new(a: f64, b: f64) -> Self {
        Self { lo: a.min(b), hi: a.max(b) }
    }

    pub fn contains(&self, ppm: f64) -> bool {
        ppm >= self.lo && ppm <= self.hi
    }

    pub fn contains_interval(&self, other: &PpmInterval) -> bool {
        let tol = 1e-9 * (self.hi - self.lo).abs().max(1.0);
        other.lo >= self.lo - tol && other.hi <= self.hi + tol
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: PpmGrid,
    intensities: Vec<f64>,
}

impl Spectrum {
    /// Fails only on a length mismatch; finiteness is checked by the
    /// operations that need it so that malformed data can still be inspected.
    pub fn new(grid: PpmGrid, intensities: Vec<f64>) -> Result<Self> {
        if intensities.len() != grid.n_channels() {
            return Err(Error::LengthMismatch {
                expected: grid.n_channels(),
                actual: intensities.len(),
            });
        }
        Ok(Self { grid, intensities })
    }

    pub fn from_fn(grid: PpmGrid, f: impl Fn(f64) -> f64) -> Self {
        let intensities = grid.ppm_values().into_iter().map(f).collect();
        Self { grid, intensities }
    }

    pub fn grid(&self) -> &PpmGrid {
        &self.grid
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn into_intensities(self) -> Vec<f64> {
        self.intensities
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.intensities.iter().position(|v| !v.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.first_non_finite() {
            Some(channel) => Err(Error::NonFinite { channel }),
            None => Ok(()),
        }
    }

    pub fn scaled(&self, k: f64) -> Spectrum {
        self.map(|v| v * k)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Spectrum {
        Spectrum {
            grid: self.grid,
            intensities: self.intensities.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSpectrum {
    pub label: String,
    pub spectrum: Spectrum,
}

/// Labeled spectra sharing one grid, grouped contiguously by class.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumLibrary {
    grid: PpmGrid,
    entries: Vec<LabeledSpectrum>,
}

impl SpectrumLibrary {
    /// Builds without checking; call [`validate_library`] or
    /// [`SpectrumLibrary::validated`] before relying on the invariants.
    pub fn new(grid: PpmGrid, entries: Vec<LabeledSpectrum>) -> Self {
        Self { grid, entries }
    }

    pub fn validated(grid: PpmGrid, entries: Vec<LabeledSpectrum>) -> Result<Self> {
        let lib = Self::new(grid, entries);
        lib.ensure_valid()?;
        Ok(lib)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = validate_library(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidLibrary(v))
        }
    }

    pub fn grid(&self) -> &PpmGrid {
        &self.grid
    }

    pub fn entries(&self) -> &[LabeledSpectrum] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn spectra(&self) -> impl Iterator<Item = &Spectrum> {
        self.entries.iter().map(|e| &e.spectrum)
    }

    /// Class labels in block order.
    pub fn class_labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in &self.entries {
            if out.last() != Some(&e.label.as_str()) {
                out.push(&e.label);
            }
        }
        out
    }

    /// Class index (block order) of every entry.
    pub fn class_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.entries.len());
        let mut class = 0;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 && e.label != self.entries[i - 1].label {
                class += 1;
            }
            out.push(class);
        }
        out
    }

    /// Block sizes of consecutive equal labels.
    pub fn multiplicities(&self) -> Result<ClassMultiplicities> {
        let mut counts: Vec<usize> = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 && e.label == self.entries[i - 1].label {
                *counts.last_mut().expect("non-empty") += 1;
            } else {
                counts.push(1);
            }
        }
        ClassMultiplicities::new(counts)
    }

    /// Same labels, spectra replaced one-for-one.
    pub fn with_spectra(&self, spectra: Vec<Spectrum>) -> Result<SpectrumLibrary> {
        if spectra.len() != self.entries.len() {
            return Err(Error::LengthMismatch { expected: self.entries.len(), actual: spectra.len() });
        }
        let grid = spectra.first().map(|s| *s.grid()).unwrap_or(self.grid);
        let entries = self
            .entries
            .iter()
            .zip(spectra)
            .map(|(e, spectrum)| LabeledSpectrum { label: e.label.clone(), spectrum })
            .collect();
        Ok(SpectrumLibrary { grid, entries })
    }

    pub fn resampled(&self, target: PpmGrid) -> Result<SpectrumLibrary> {
        let spectra = self
            .spectra()
            .map(|s| resample(s, target))
            .collect::<Result<Vec<_>>>()?;
        let mut lib = self.with_spectra(spectra)?;
        lib.grid = target;
        Ok(lib)
    }
}

/// One broken library invariant, tied to the offending entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    GridMismatch { index: usize },
    NonContiguousClass { index: usize, label: String },
    NonFinite { index: usize, channel: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::GridMismatch { index } => write!(f, "entry {index}: grid mismatch"),
            Violation::NonContiguousClass { index, label } => {
                write!(f, "entry {index}: class '{label}' reappears after another class")
            }
            Violation::NonFinite { index, channel } => {
                write!(f, "entry {index}: non-finite intensity at channel {channel}")
            }
        }
    }
}

pub fn validate_library(lib: &SpectrumLibrary) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut closed: Vec<&str> = Vec::new();
    for (index, e) in lib.entries.iter().enumerate() {
        if e.spectrum.grid() != &lib.grid {
            out.push(Violation::GridMismatch { index });
        }
        if let Some(channel) = e.spectrum.first_non_finite() {
            out.push(Violation::NonFinite { index, channel });
        }
        if index > 0 && lib.entries[index - 1].label != e.label {
            closed.push(&lib.entries[index - 1].label);
            if closed.contains(&e.label.as_str()) {
                out.push(Violation::NonContiguousClass { index, label: e.label.clone() });
            }
        }
    }
    out
}

/// Scales the spectrum to unit Euclidean norm.
pub fn vector_normalize(s: &Spectrum) -> Result<Spectrum> {
    s.check_finite()?;
    let norm = s.intensities.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroSpectrum);
    }
    Ok(s.map(|v| v / norm))
}

/// Piecewise-linear resampling onto `target`, which must lie inside the
/// source window.
pub fn resample(s: &Spectrum, target: PpmGrid) -> Result<Spectrum> {
    s.check_finite()?;
    let source = *s.grid();
    if source == target {
        return Ok(s.clone());
    }
    let (src, dst) = (source.window(), target.window());
    if !src.contains_interval(&dst) {
        return Err(Error::WindowOutOfRange { lo: dst.lo, hi: dst.hi, src_lo: src.lo, src_hi: src.hi });
    }

    let last = (source.n_channels() - 1) as f64;
    let step = source.step();
    let y = s.intensities();
    let out = (0..target.n_channels())
        .map(|c| {
            let mut pos = ((target.ppm(c) - source.start_ppm()) / step).clamp(0.0, last);
            if (pos - pos.round()).abs() < 1e-9 {
                pos = pos.round();
            }
            let i = (pos.floor() as usize).min(source.n_channels() - 2);
            let frac = pos - i as f64;
            if frac == 0.0 {
                y[i]
            } else if frac == 1.0 {
                y[i + 1]
            } else {
                y[i] + (y[i + 1] - y[i]) * frac
            }
        })
        .collect();
    Spectrum::new(target, out)
}
