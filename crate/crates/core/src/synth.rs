//! Seeded generator of carbohydrate-like 1D spectra: class-specific
//! Lorentzian lines in the anomeric and hump regions, a dominant solvent
//! line, polynomial baseline drift, concentration changes, small chemical
//! shift jitter and white noise.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ClassMultiplicities;
use crate::spectrum::{LabeledSpectrum, PpmGrid, PpmInterval, Spectrum, SpectrumLibrary};

pub const ANOMERIC_WINDOW: PpmInterval = PpmInterval { lo: 4.5, hi: 5.5 };
pub const HUMP_WINDOW: PpmInterval = PpmInterval { lo: 3.3, hi: 4.3 };
/// Lines are truncated this many half-widths from their centre.
pub const LINE_CUTOFF_WIDTHS: f64 = 10.0;
pub const AMPLITUDE_RANGE: (f64, f64) = (0.3, 1.0);
pub const WIDTH_RANGE_PPM: (f64, f64) = (0.002, 0.01);
pub const DEFAULT_PEAKS_PER_CLASS: (usize, usize) = (6, 12);
/// Minimum separation, in line widths, between a distinguishing peak and
/// every peak of another class.
const MIN_DISTINCT_WIDTHS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakSpec {
    pub center_ppm: f64,
    pub amplitude: f64,
    /// Half-width at half-maximum.
    pub width_ppm: f64,
}

impl PeakSpec {
    /// Lorentzian line value at `ppm`, zero beyond the cutoff.
    pub fn line(&self, ppm: f64) -> f64 {
        lorentzian(ppm, self.center_ppm, self.amplitude, self.width_ppm)
    }
}

pub fn lorentzian(ppm: f64, center: f64, amplitude: f64, width: f64) -> f64 {
    let u = (ppm - center) / width;
    if u.abs() > LINE_CUTOFF_WIDTHS {
        0.0
    } else {
        amplitude / (1.0 + u * u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub label: String,
    pub peaks: Vec<PeakSpec>,
}

impl ClassSpec {
    pub fn max_amplitude(&self) -> f64 {
        self.peaks.iter().map(|p| p.amplitude).fold(0.0, f64::max)
    }

    /// True if some peak here lies well clear of every peak in `other`.
    pub fn distinct_from(&self, other: &ClassSpec) -> bool {
        self.peaks.iter().any(|p| {
            other
                .peaks
                .iter()
                .all(|q| (p.center_ppm - q.center_ppm).abs() > MIN_DISTINCT_WIDTHS * p.width_ppm.max(q.width_ppm))
        })
    }
}

/// Per-spectrum corruptions. Ranges are `(lo, hi)` and sampled uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariationConfig {
    pub concentration_range: (f64, f64),
    pub shift_jitter_ppm: f64,
    /// Noise standard deviation relative to the largest analyte intensity.
    pub noise_sigma: f64,
    pub drift_coeff_range: (f64, f64),
    pub drift_degree: usize,
    pub solvent_enabled: bool,
    pub solvent_amplitude_factor: f64,
    pub solvent_ppm: f64,
    pub solvent_width_ppm: f64,
}

impl Default for VariationConfig {
    fn default() -> Self {
        Self {
            concentration_range: (0.5, 2.0),
            shift_jitter_ppm: 0.001,
            noise_sigma: 0.01,
            drift_coeff_range: (0.0, 0.8),
            drift_degree: 3,
            solvent_enabled: true,
            solvent_amplitude_factor: 1000.0,
            solvent_ppm: 4.7,
            solvent_width_ppm: 0.002,
        }
    }
}

impl VariationConfig {
    /// Every corruption switched off: one unit-concentration copy of the class lines.
    pub fn clean() -> Self {
        Self {
            concentration_range: (1.0, 1.0),
            shift_jitter_ppm: 0.0,
            noise_sigma: 0.0,
            drift_coeff_range: (0.0, 0.0),
            solvent_enabled: false,
            solvent_amplitude_factor: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (clo, chi) = self.concentration_range;
        let (dlo, dhi) = self.drift_coeff_range;
        let checks = [
            (clo > 0.0 && clo <= chi && chi.is_finite(), "concentration_range must be a positive interval"),
            (self.shift_jitter_ppm >= 0.0, "shift_jitter_ppm must be >= 0"),
            (self.noise_sigma >= 0.0 && self.noise_sigma.is_finite(), "noise_sigma must be >= 0"),
            (dlo <= dhi && dlo.is_finite() && dhi.is_finite(), "drift_coeff_range must be an interval"),
            (self.solvent_amplitude_factor >= 1.0, "solvent_amplitude_factor must be >= 1"),
            (self.solvent_width_ppm > 0.0, "solvent_width_ppm must be > 0"),
            (self.solvent_ppm.is_finite(), "solvent_ppm must be finite"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::InvalidInput((*msg).into())),
            None => Ok(()),
        }
    }
}

/// Baseline polynomial `sum_j b_j t^j (1 - t)^(M - j)` with `M = coeffs.len() - 1`.
/// No binomial weights are applied.
pub fn bernstein_baseline(coeffs: &[f64], t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::TOutOfRange(t));
    }
    if coeffs.is_empty() {
        return Err(Error::InvalidInput("at least one drift coefficient is required".into()));
    }
    let m = coeffs.len() - 1;
    Ok(coeffs
        .iter()
        .enumerate()
        .map(|(j, b)| b * t.powi(j as i32) * (1.0 - t).powi((m - j) as i32))
        .sum())
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn random_peak(rng: &mut impl Rng) -> PeakSpec {
    let width_ppm = uniform(rng, WIDTH_RANGE_PPM);
    let window = if rng.random_bool(0.5) { ANOMERIC_WINDOW } else { HUMP_WINDOW };
    let margin = LINE_CUTOFF_WIDTHS * width_ppm;
    PeakSpec {
        center_ppm: uniform(rng, (window.lo + margin, window.hi - margin)),
        amplitude: uniform(rng, AMPLITUDE_RANGE),
        width_ppm,
    }
}

/// Random, mutually distinguishable class line lists.
pub fn gen_class_specs(n_classes: usize, peaks_per_class: (usize, usize), seed: u64) -> Result<Vec<ClassSpec>> {
    let (pmin, pmax) = peaks_per_class;
    if n_classes == 0 {
        return Err(Error::InvalidInput("n_classes must be >= 1".into()));
    }
    if pmin == 0 || pmin > pmax {
        return Err(Error::InvalidInput(format!("invalid peaks_per_class range ({pmin}, {pmax})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs: Vec<ClassSpec> = Vec::with_capacity(n_classes);
    for m in 0..n_classes {
        let label = format!("class{:02}", m + 1);
        let spec = (0..1000)
            .map(|_| {
                let n = rng.random_range(pmin..=pmax);
                ClassSpec { label: label.clone(), peaks: (0..n).map(|_| random_peak(&mut rng)).collect() }
            })
            .find(|cand| specs.iter().all(|s| cand.distinct_from(s) && s.distinct_from(cand)))
            .ok_or_else(|| Error::InvalidInput("could not generate distinguishable classes".into()))?;
        specs.push(spec);
    }
    Ok(specs)
}

/// The additive parts of one synthetic spectrum, channel by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumComponents {
    pub analyte: Vec<f64>,
    pub solvent: Vec<f64>,
    pub drift: Vec<f64>,
    pub noise: Vec<f64>,
    pub concentration: f64,
    /// Largest analyte intensity on the grid.
    pub analyte_max: f64,
}

impl SpectrumComponents {
    pub fn total(&self) -> Vec<f64> {
        (0..self.analyte.len())
            .map(|c| self.analyte[c] + self.solvent[c] + self.drift[c] + self.noise[c])
            .collect()
    }
}

pub fn gen_components(spec: &ClassSpec, var: &VariationConfig, grid: &PpmGrid, seed: u64) -> Result<SpectrumComponents> {
    var.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ppm = grid.ppm_values();
    let n = ppm.len();

    let concentration = uniform(&mut rng, var.concentration_range);
    let lines: Vec<PeakSpec> = spec
        .peaks
        .iter()
        .map(|p| PeakSpec {
            center_ppm: p.center_ppm + uniform(&mut rng, (-var.shift_jitter_ppm, var.shift_jitter_ppm)),
            amplitude: p.amplitude * concentration,
            width_ppm: p.width_ppm,
        })
        .collect();
    let analyte: Vec<f64> = ppm.iter().map(|&x| lines.iter().map(|p| p.line(x)).sum()).collect();
    let analyte_max = analyte.iter().copied().fold(0.0, f64::max);

    let solvent = if var.solvent_enabled && grid.window().contains(var.solvent_ppm) {
        // Centre the line on the nearest channel so its apex is sampled.
        let c = ((var.solvent_ppm - grid.start_ppm()) / grid.step()).round() as usize;
        let center = grid.ppm(c.min(n - 1));
        let amp = var.solvent_amplitude_factor * analyte_max;
        ppm.iter().map(|&x| lorentzian(x, center, amp, var.solvent_width_ppm)).collect()
    } else {
        vec![0.0; n]
    };

    let coeffs: Vec<f64> = (0..=var.drift_degree).map(|_| uniform(&mut rng, var.drift_coeff_range)).collect();
    let drift = (0..n)
        .map(|c| bernstein_baseline(&coeffs, grid.unit_position(c)))
        .collect::<Result<Vec<_>>>()?;

    let sigma = var.noise_sigma * analyte_max;
    let noise = if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    } else {
        vec![0.0; n]
    };

    Ok(SpectrumComponents { analyte, solvent, drift, noise, concentration, analyte_max })
}

pub fn gen_spectrum(spec: &ClassSpec, var: &VariationConfig, grid: &PpmGrid, seed: u64) -> Result<Spectrum> {
    Spectrum::new(*grid, gen_components(spec, var, grid, seed)?.total())
}

/// Library from explicit class specs, `multiplicities[m]` spectra of class `m`.
pub fn gen_library_from_specs(
    specs: &[ClassSpec],
    mult: &ClassMultiplicities,
    var: &VariationConfig,
    grid: &PpmGrid,
    seed: u64,
) -> Result<SpectrumLibrary> {
    if specs.len() != mult.n_classes() {
        return Err(Error::InvalidInput(format!(
            "{} class specs but {} multiplicities",
            specs.len(),
            mult.n_classes()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(mult.total());
    for (spec, &count) in specs.iter().zip(mult.counts()) {
        for _ in 0..count {
            let spectrum = gen_spectrum(spec, var, grid, rng.next_u64())?;
            entries.push(LabeledSpectrum { label: spec.label.clone(), spectrum });
        }
    }
    Ok(SpectrumLibrary::new(*grid, entries))
}

pub fn gen_library(
    n_classes: usize,
    mult: &ClassMultiplicities,
    var: &VariationConfig,
    grid: &PpmGrid,
    seed: u64,
) -> Result<SpectrumLibrary> {
    if mult.n_classes() != n_classes {
        return Err(Error::InvalidInput(format!(
            "{n_classes} classes but {} multiplicities",
            mult.n_classes()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = gen_class_specs(n_classes, DEFAULT_PEAKS_PER_CLASS, rng.next_u64())?;
    gen_library_from_specs(&specs, mult, var, grid, rng.next_u64())
}
