//! Frequency-to-information transformation.
//!
//! Training collects, for every channel of a library, the spread of
//! intensities after solvent suppression and a coarse histogram of where
//! each library spectrum falls in that spread. Applying the model replaces
//! every intensity by one minus the relative population of its bin, so
//! values shared by most of the library carry little information and rare
//! values carry a lot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{vector_normalize, PpmGrid, PpmInterval, Spectrum, SpectrumLibrary};

pub const DEFAULT_BINS: usize = 11;
/// Headroom applied to the largest non-solvent intensity when suggesting a threshold.
pub const THRESHOLD_SAFETY: f64 = 1.05;

/// Per-channel minimum and maximum over a set of spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEnvelope {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl ChannelEnvelope {
    fn from_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut rows = rows.into_iter();
        let first = rows.next().ok_or(Error::EmptyLibrary)?;
        let mut env = ChannelEnvelope { mins: first.to_vec(), maxs: first.to_vec() };
        for row in rows {
            if row.len() != env.mins.len() {
                return Err(Error::LengthMismatch { expected: env.mins.len(), actual: row.len() });
            }
            for (c, &v) in row.iter().enumerate() {
                if v < env.mins[c] {
                    env.mins[c] = v;
                }
                if v > env.maxs[c] {
                    env.maxs[c] = v;
                }
            }
        }
        Ok(env)
    }

    pub fn len(&self) -> usize {
        self.mins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mins.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelHistogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ChannelHistogram {
    pub fn empty(n_bins: usize) -> Self {
        Self { counts: vec![0; n_bins], total: 0 }
    }

    pub fn add(&mut self, bin: usize) {
        self.counts[bin] += 1;
        self.total += 1;
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }
}

/// How the clipping ceiling is chosen during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdChoice {
    Fixed(f64),
    /// Derived from the pre-clip envelope, ignoring the given solvent windows.
    Auto { solvent_windows: Vec<PpmInterval> },
}

impl ThresholdChoice {
    /// Auto selection excluding a window of `half_width` ppm around the solvent line.
    pub fn auto_around(solvent_ppm: f64, half_width: f64) -> Self {
        ThresholdChoice::Auto {
            solvent_windows: vec![PpmInterval::new(solvent_ppm - half_width, solvent_ppm + half_width)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub n_bins: usize,
    pub threshold: ThresholdChoice,
    /// Normalize before clipping; only needed when solvent peaks dominate.
    pub suppress_solvent: bool,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            n_bins: DEFAULT_BINS,
            threshold: ThresholdChoice::auto_around(4.7, 0.05),
            suppress_solvent: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitModel {
    grid: PpmGrid,
    max_threshold: f64,
    n_bins: usize,
    suppress_solvent: bool,
    envelope: ChannelEnvelope,
    histograms: Vec<ChannelHistogram>,
}

impl FitModel {
    /// Reassembles a model, checking the structural invariants.
    pub fn from_parts(
        grid: PpmGrid,
        max_threshold: f64,
        n_bins: usize,
        suppress_solvent: bool,
        envelope: ChannelEnvelope,
        histograms: Vec<ChannelHistogram>,
    ) -> Result<Self> {
        let n = grid.n_channels();
        if n_bins < 2 {
            return Err(Error::InvalidInput(format!("n_bins must be >= 2, got {n_bins}")));
        }
        if !(max_threshold > 0.0) {
            return Err(Error::NonPositiveThreshold(max_threshold));
        }
        if envelope.mins.len() != n || envelope.maxs.len() != n || histograms.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "model arrays must have {n} channels (mins {}, maxs {}, histograms {})",
                envelope.mins.len(),
                envelope.maxs.len(),
                histograms.len()
            )));
        }
        if envelope.mins.iter().zip(&envelope.maxs).any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::InvalidInput("envelope has min > max".into()));
        }
        let total = histograms.first().map_or(0, |h| h.total);
        for h in &histograms {
            if h.counts.len() != n_bins {
                return Err(Error::DimensionMismatch(format!("histogram has {} bins, expected {n_bins}", h.counts.len())));
            }
            if h.counts.iter().sum::<u64>() != h.total || h.total != total || total == 0 {
                return Err(Error::InvalidInput("histogram totals are inconsistent".into()));
            }
        }
        Ok(Self { grid, max_threshold, n_bins, suppress_solvent, envelope, histograms })
    }

    pub fn grid(&self) -> &PpmGrid {
        &self.grid
    }

    pub fn max_threshold(&self) -> f64 {
        self.max_threshold
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn suppress_solvent(&self) -> bool {
        self.suppress_solvent
    }

    pub fn envelope(&self) -> &ChannelEnvelope {
        &self.envelope
    }

    pub fn histograms(&self) -> &[ChannelHistogram] {
        &self.histograms
    }

    /// Number of training spectra behind every histogram.
    pub fn library_size(&self) -> u64 {
        self.histograms[0].total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InformationSpectrum {
    pub grid: PpmGrid,
    pub info: Vec<f64>,
}

pub fn compute_envelope(lib: &SpectrumLibrary) -> Result<ChannelEnvelope> {
    if lib.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    lib.ensure_valid()?;
    ChannelEnvelope::from_rows(lib.spectra().map(|s| s.intensities()))
}

/// Zeroes every point strictly above `threshold`.
pub fn clip_threshold(s: &Spectrum, threshold: f64) -> Result<Spectrum> {
    if !(threshold > 0.0) {
        return Err(Error::NonPositiveThreshold(threshold));
    }
    Ok(s.map(|v| if v > threshold { 0.0 } else { v }))
}

/// Lowest ceiling that spares every channel outside the solvent windows,
/// with [`THRESHOLD_SAFETY`] headroom.
pub fn suggest_threshold(env: &ChannelEnvelope, grid: &PpmGrid, solvent_windows: &[PpmInterval]) -> Result<f64> {
    if solvent_windows.is_empty() {
        return Err(Error::InvalidInput("at least one solvent window is required".into()));
    }
    if env.len() != grid.n_channels() {
        return Err(Error::LengthMismatch { expected: grid.n_channels(), actual: env.len() });
    }
    let window = grid.window();
    for w in solvent_windows {
        if !window.contains_interval(w) {
            return Err(Error::WindowOutOfRange { lo: w.lo, hi: w.hi, src_lo: window.lo, src_hi: window.hi });
        }
    }
    let max = (0..grid.n_channels())
        .filter(|&c| !solvent_windows.iter().any(|w| w.contains(grid.ppm(c))))
        .map(|c| env.maxs[c])
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or_else(|| Error::InvalidInput("solvent windows cover every channel".into()))?;
    Ok(THRESHOLD_SAFETY * max)
}

/// Histogram bin of `value` within `[min, max]`, clamped into range.
/// A constant channel (`max == min`) maps everything to bin 0.
pub fn bin_index(value: f64, min: f64, max: f64, n_bins: usize) -> usize {
    debug_assert!(n_bins >= 2);
    if max == min {
        return 0;
    }
    let k = ((value - min) / (max - min) * n_bins as f64).floor();
    if k <= 0.0 {
        0
    } else if k >= (n_bins - 1) as f64 {
        n_bins - 1
    } else {
        k as usize
    }
}

/// One minus the relative population of bin `k`.
pub fn information_content(k: usize, h: &ChannelHistogram) -> Result<f64> {
    if k >= h.counts.len() {
        return Err(Error::BinOutOfRange { bin: k, n_bins: h.counts.len() });
    }
    if h.total == 0 {
        return Err(Error::InvalidInput("histogram is empty".into()));
    }
    Ok(1.0 - h.counts[k] as f64 / h.total as f64)
}

/// Per-spectrum preamble shared by training and application:
/// optional normalization, clipping, renormalization.
pub fn preprocess(s: &Spectrum, threshold: f64, suppress_solvent: bool) -> Result<Spectrum> {
    let base = if suppress_solvent { vector_normalize(s)? } else { s.clone() };
    vector_normalize(&clip_threshold(&base, threshold)?)
}

pub fn fit_train(lib: &SpectrumLibrary, params: &FitParams) -> Result<FitModel> {
    if lib.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    lib.ensure_valid()?;
    if params.n_bins < 2 {
        return Err(Error::InvalidInput(format!("n_bins must be >= 2, got {}", params.n_bins)));
    }
    let grid = *lib.grid();

    let stage1 = lib
        .spectra()
        .map(|s| if params.suppress_solvent { vector_normalize(s) } else { Ok(s.clone()) })
        .collect::<Result<Vec<_>>>()?;

    let threshold = match &params.threshold {
        ThresholdChoice::Fixed(t) => *t,
        ThresholdChoice::Auto { solvent_windows } => {
            let pre = ChannelEnvelope::from_rows(stage1.iter().map(|s| s.intensities()))?;
            suggest_threshold(&pre, &grid, solvent_windows)?
        }
    };

    let processed = stage1
        .iter()
        .map(|s| vector_normalize(&clip_threshold(s, threshold)?))
        .collect::<Result<Vec<_>>>()?;

    let envelope = ChannelEnvelope::from_rows(processed.iter().map(|s| s.intensities()))?;
    let mut histograms = vec![ChannelHistogram::empty(params.n_bins); grid.n_channels()];
    for s in &processed {
        for (c, &v) in s.intensities().iter().enumerate() {
            histograms[c].add(bin_index(v, envelope.mins[c], envelope.maxs[c], params.n_bins));
        }
    }

    Ok(FitModel {
        grid,
        max_threshold: threshold,
        n_bins: params.n_bins,
        suppress_solvent: params.suppress_solvent,
        envelope,
        histograms,
    })
}

pub fn fit_apply(model: &FitModel, s: &Spectrum) -> Result<InformationSpectrum> {
    if s.grid() != &model.grid {
        return Err(Error::GridMismatch);
    }
    let processed = preprocess(s, model.max_threshold, model.suppress_solvent)?;
    let env = &model.envelope;
    let info = processed
        .intensities()
        .iter()
        .enumerate()
        .map(|(c, &v)| {
            let k = bin_index(v, env.mins[c], env.maxs[c], model.n_bins);
            information_content(k, &model.histograms[c])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InformationSpectrum { grid: model.grid, info })
}

/// Applies the model to every library entry, in order.
pub fn fit_apply_library(model: &FitModel, lib: &SpectrumLibrary) -> Result<Vec<InformationSpectrum>> {
    lib.spectra().map(|s| fit_apply(model, s)).collect()
}

/// Contiguous run of information-rich channels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HotRegion {
    pub interval: PpmInterval,
    pub mean_information: f64,
    pub first_channel: usize,
    pub last_channel: usize,
}

/// Ranks channels by library-mean information, keeps the top
/// `top_fraction`, and merges neighbours into ppm intervals sorted by
/// mean information, highest first.
pub fn hot_regions(model: &FitModel, lib: &SpectrumLibrary, top_fraction: f64) -> Result<Vec<HotRegion>> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("top_fraction must be in (0, 1], got {top_fraction}")));
    }
    if lib.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    let n = model.grid.n_channels();
    let mut mean = vec![0.0; n];
    for fis in fit_apply_library(model, lib)? {
        for (m, v) in mean.iter_mut().zip(&fis.info) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= lib.len() as f64;
    }

    let keep = ((top_fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut sorted = mean.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cutoff = sorted[keep - 1];

    let mut regions = Vec::new();
    let mut c = 0;
    while c < n {
        if mean[c] < cutoff {
            c += 1;
            continue;
        }
        let first = c;
        while c + 1 < n && mean[c + 1] >= cutoff {
            c += 1;
        }
        let run = &mean[first..=c];
        regions.push(HotRegion {
            interval: PpmInterval::new(model.grid.ppm(first), model.grid.ppm(c)),
            mean_information: run.iter().sum::<f64>() / run.len() as f64,
            first_channel: first,
            last_channel: c,
        });
        c += 1;
    }
    regions.sort_by(|a, b| b.mean_information.total_cmp(&a.mean_information).then(a.first_channel.cmp(&b.first_channel)));
    Ok(regions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::LabeledSpectrum;

    fn grid(n: usize) -> PpmGrid {
        PpmGrid::new(1.0, 5.5, n).unwrap()
    }

    fn lib(rows: &[(&str, &[f64])]) -> SpectrumLibrary {
        let g = grid(rows[0].1.len());
        let entries = rows
            .iter()
            .map(|(l, v)| LabeledSpectrum { label: l.to_string(), spectrum: Spectrum::new(g, v.to_vec()).unwrap() })
            .collect();
        SpectrumLibrary::new(g, entries)
    }

    #[test]
    fn envelope_examples() {
        let env = compute_envelope(&lib(&[("a", &[1.0, 3.0]), ("b", &[2.0, 0.0])])).unwrap();
        assert_eq!(env.mins, vec![1.0, 0.0]);
        assert_eq!(env.maxs, vec![2.0, 3.0]);
        let single = compute_envelope(&lib(&[("a", &[5.0, 7.0])])).unwrap();
        assert_eq!(single.mins, vec![5.0, 7.0]);
        assert_eq!(single.maxs, vec![5.0, 7.0]);
        let empty = SpectrumLibrary::new(grid(2), vec![]);
        assert!(matches!(compute_envelope(&empty), Err(Error::EmptyLibrary)));
    }

    #[test]
    fn clip_examples() {
        let g = grid(3);
        let s = Spectrum::new(g, vec![0.1, 0.5, 0.15]).unwrap();
        assert_eq!(clip_threshold(&s, 0.2).unwrap().intensities(), &[0.1, 0.0, 0.15]);
        assert_eq!(clip_threshold(&s, 0.5).unwrap(), s);
        let neg = Spectrum::new(grid(2), vec![-0.3, 0.3]).unwrap();
        assert_eq!(clip_threshold(&neg, 0.2).unwrap().intensities(), &[-0.3, 0.0]);
        assert!(matches!(clip_threshold(&s, 0.0), Err(Error::NonPositiveThreshold(_))));
    }

    #[test]
    fn suggest_threshold_examples() {
        let g = grid(3); // channels at 1.0, 3.25, 5.5
        let env = ChannelEnvelope { mins: vec![0.0; 3], maxs: vec![0.1, 900.0, 0.15] };
        let t = suggest_threshold(&env, &g, &[PpmInterval::new(3.0, 3.5)]).unwrap();
        assert!((t - 0.1575).abs() < 1e-12);
        let t = suggest_threshold(&env, &g, &[PpmInterval::new(2.0, 2.5)]).unwrap();
        assert!((t - 945.0).abs() < 1e-9);
        assert!(matches!(
            suggest_threshold(&env, &g, &[PpmInterval::new(5.0, 6.0)]),
            Err(Error::WindowOutOfRange { .. })
        ));
    }

    #[test]
    fn bin_index_examples() {
        assert_eq!(bin_index(0.0, 0.0, 1.0, 11), 0);
        assert_eq!(bin_index(1.0, 0.0, 1.0, 11), 10);
        assert_eq!(bin_index(0.5, 0.0, 1.0, 11), 5);
        assert_eq!(bin_index(-3.0, 0.0, 1.0, 11), 0);
        assert_eq!(bin_index(7.0, 0.0, 1.0, 11), 10);
        assert_eq!(bin_index(4.2, 2.0, 2.0, 11), 0);
    }

    #[test]
    fn information_content_examples() {
        let full = ChannelHistogram { counts: vec![80, 0], total: 80 };
        assert_eq!(information_content(0, &full).unwrap(), 0.0);
        assert_eq!(information_content(1, &full).unwrap(), 1.0);
        let h = ChannelHistogram { counts: vec![8, 72], total: 80 };
        assert!((information_content(0, &h).unwrap() - 0.9).abs() < 1e-15);
        assert!(matches!(information_content(2, &h), Err(Error::BinOutOfRange { bin: 2, n_bins: 2 })));
    }

    #[test]
    fn singleton_library_has_no_information() {
        let l = lib(&[("a", &[0.1, 0.4, -0.2, 0.3])]);
        let params = FitParams { n_bins: 11, threshold: ThresholdChoice::Fixed(10.0), suppress_solvent: true };
        let m = fit_train(&l, &params).unwrap();
        for h in m.histograms() {
            assert_eq!(h.total, 1);
            assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        }
        let fis = fit_apply(&m, &l.entries()[0].spectrum).unwrap();
        assert!(fis.info.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn clipping_everything_is_an_error() {
        let l = lib(&[("a", &[1.0, 2.0]), ("b", &[2.0, 1.0])]);
        let params = FitParams { n_bins: 4, threshold: ThresholdChoice::Fixed(0.1), suppress_solvent: true };
        assert!(matches!(fit_train(&l, &params), Err(Error::ZeroSpectrum)));
    }

    #[test]
    fn apply_rejects_other_grid() {
        let l = lib(&[("a", &[1.0, 2.0, 0.5]), ("b", &[2.0, 1.0, 0.5])]);
        let params = FitParams { n_bins: 4, threshold: ThresholdChoice::Fixed(1.0), suppress_solvent: true };
        let m = fit_train(&l, &params).unwrap();
        let other = Spectrum::new(grid(2), vec![1.0, 1.0]).unwrap();
        assert!(matches!(fit_apply(&m, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn constant_channel_is_uninformative() {
        let l = lib(&[("a", &[0.0, 0.3, 0.5]), ("b", &[0.0, 0.5, 0.3]), ("c", &[0.0, 0.4, 0.4])]);
        let params = FitParams { n_bins: 11, threshold: ThresholdChoice::Fixed(10.0), suppress_solvent: false };
        let m = fit_train(&l, &params).unwrap();
        let q = Spectrum::new(*l.grid(), vec![0.9, 0.1, 0.2]).unwrap();
        assert_eq!(fit_apply(&m, &q).unwrap().info[0], 0.0);
    }

    #[test]
    fn hot_regions_whole_grid_at_full_fraction() {
        let l = lib(&[("a", &[0.1, 0.3, 0.5, 0.2]), ("b", &[0.2, 0.5, 0.3, 0.1])]);
        let params = FitParams { n_bins: 4, threshold: ThresholdChoice::Fixed(10.0), suppress_solvent: false };
        let m = fit_train(&l, &params).unwrap();
        let r = hot_regions(&m, &l, 1.0).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].interval, PpmInterval::new(1.0, 5.5));
        assert!(hot_regions(&m, &l, 0.0).is_err());
    }

    #[test]
    fn model_roundtrip_validation() {
        let env = ChannelEnvelope { mins: vec![0.0, 0.0], maxs: vec![1.0, 1.0] };
        let h = ChannelHistogram { counts: vec![1, 1], total: 2 };
        assert!(FitModel::from_parts(grid(2), 0.2, 2, true, env.clone(), vec![h.clone(), h.clone()]).is_ok());
        let bad = ChannelHistogram { counts: vec![1, 0], total: 1 };
        assert!(FitModel::from_parts(grid(2), 0.2, 2, true, env.clone(), vec![h.clone(), bad]).is_err());
        assert!(FitModel::from_parts(grid(2), -1.0, 2, true, env, vec![h.clone(), h]).is_err());
    }
}
