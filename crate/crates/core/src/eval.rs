//! Separability metrics for a transformed library: distances between the
//! measured correlation matrix and the ideal block matrix, and a
//! histogram-based two-hypothesis Bayes error on the intra/inter
//! correlation samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{bin_index, ChannelHistogram};
use crate::spectrum::SpectrumLibrary;

pub const DEFAULT_BAYES_BINS: usize = 25;

/// Number of spectra per class, in library block order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ClassMultiplicities(Vec<usize>);

impl TryFrom<Vec<usize>> for ClassMultiplicities {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ClassMultiplicities> for Vec<usize> {
    fn from(m: ClassMultiplicities) -> Self {
        m.0
    }
}

impl ClassMultiplicities {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidInput("at least one class is required".into()));
        }
        if counts.contains(&0) {
            return Err(Error::InvalidInput("every class needs at least one spectrum".into()));
        }
        Ok(Self(counts))
    }

    /// Nineteen classes of four spectra followed by four singletons: 80 spectra, 23 classes.
    pub fn reference_pattern() -> Self {
        let mut v = vec![4; 19];
        v.extend([1; 4]);
        Self(v)
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    pub fn n_classes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Class index of every spectrum position.
    pub fn class_of_each(&self) -> Vec<usize> {
        self.0.iter().enumerate().flat_map(|(m, &n)| std::iter::repeat_n(m, n)).collect()
    }
}

/// Dense symmetric `n x n` matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i, j));
            }
        }
        Self { n, values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }
}

/// Intra- and inter-class coordinates of an `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexPartition {
    pub n: usize,
    pub intra: Vec<(usize, usize)>,
    pub inter: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub d_intra: f64,
    pub d_inter: f64,
    pub d_total: f64,
    pub d_avg: f64,
    pub intra_size: usize,
    pub inter_size: usize,
}

impl DistanceReport {
    /// Assembles a report from already-summed distances; `d_avg` weights
    /// each part by the size of its coordinate set.
    pub fn from_components(d_intra: f64, d_inter: f64, intra_size: usize, inter_size: usize) -> Self {
        let avg = |d: f64, n: usize| if n == 0 { 0.0 } else { d / n as f64 };
        Self {
            d_intra,
            d_inter,
            d_total: d_intra + d_inter,
            d_avg: avg(d_intra, intra_size) + avg(d_inter, inter_size),
            intra_size,
            inter_size,
        }
    }
}

/// How the two hypotheses are weighted in the decision rule and the error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorWeighting {
    /// Sample proportions of the two sets.
    Empirical,
    /// One half each, i.e. the class-balanced error.
    #[default]
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesConfig {
    pub n_bins: usize,
    pub priors: PriorWeighting,
}

impl Default for BayesConfig {
    fn default() -> Self {
        Self { n_bins: DEFAULT_BAYES_BINS, priors: PriorWeighting::Equal }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesReport {
    /// Values at or above the threshold are classified intra-class.
    pub threshold: f64,
    pub error_probability: f64,
    pub prior_intra: f64,
    pub prior_inter: f64,
    pub range_lo: f64,
    pub range_hi: f64,
    pub intra_histogram: ChannelHistogram,
    pub inter_histogram: ChannelHistogram,
}

/// Pearson correlation with population (1/n) moments throughout.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), actual: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("pearson needs at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let cov = sxy / n;
    let r = cov / ((sxx / n).sqrt() * (syy / n).sqrt());
    Ok(r.clamp(-1.0, 1.0))
}

pub fn correlation_matrix<V: AsRef<[f64]>>(vectors: &[V]) -> Result<CorrelationMatrix> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::InvalidInput("correlation matrix needs at least 2 vectors".into()));
    }
    let mut m = CorrelationMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let r = pearson(vectors[i].as_ref(), vectors[j].as_ref())
                .map_err(|e| Error::PairFailed { i, j, source: Box::new(e) })?;
            let r = if i == j { 1.0 } else { r };
            m.values[i * n + j] = r;
            m.values[j * n + i] = r;
        }
    }
    Ok(m)
}

/// Block-diagonal 0/1 matrix: 1 where both indices share a class.
pub fn ideal_matrix(mult: &ClassMultiplicities) -> CorrelationMatrix {
    let class = mult.class_of_each();
    CorrelationMatrix::from_fn(class.len(), |i, j| if class[i] == class[j] { 1.0 } else { 0.0 })
}

/// Splits all `n^2` coordinates into same-class blocks (diagonal included)
/// and the rest.
pub fn partition_indices(mult: &ClassMultiplicities) -> IndexPartition {
    let class = mult.class_of_each();
    let n = class.len();
    let mut intra = Vec::with_capacity(mult.counts().iter().map(|c| c * c).sum());
    let mut inter = Vec::with_capacity(n * n - intra.capacity());
    for i in 0..n {
        for j in 0..n {
            if class[i] == class[j] {
                intra.push((i, j));
            } else {
                inter.push((i, j));
            }
        }
    }
    IndexPartition { n, intra, inter }
}

pub fn distances(measured: &CorrelationMatrix, ideal: &CorrelationMatrix, part: &IndexPartition) -> Result<DistanceReport> {
    if measured.n != ideal.n || measured.n != part.n {
        return Err(Error::DimensionMismatch(format!(
            "measured {}, ideal {}, partition {}",
            measured.n, ideal.n, part.n
        )));
    }
    let sq = |&(i, j): &(usize, usize)| {
        let d = ideal.get(i, j) - measured.get(i, j);
        d * d
    };
    let d_intra: f64 = part.intra.iter().map(sq).sum();
    let d_inter: f64 = part.inter.iter().map(sq).sum();
    let mut report = DistanceReport::from_components(d_intra, d_inter, part.intra.len(), part.inter.len());
    report.d_total = measured.values.iter().zip(&ideal.values).map(|(m, c)| (c - m) * (c - m)).sum();
    Ok(report)
}

/// Matrix entries at the partition's intra and inter coordinates.
pub fn split_samples(measured: &CorrelationMatrix, part: &IndexPartition) -> (Vec<f64>, Vec<f64>) {
    let pick = |v: &[(usize, usize)]| v.iter().map(|&(i, j)| measured.get(i, j)).collect();
    (pick(&part.intra), pick(&part.inter))
}

/// Histogram Bayes classifier on a scalar feature: intra samples are
/// expected to sit high, inter samples low. The threshold is placed where
/// the prior-weighted histograms cross; among several crossings (or none),
/// the candidate with the smallest weighted misclassification on the
/// samples wins.
pub fn bayes_error(intra: &[f64], inter: &[f64], cfg: &BayesConfig) -> Result<BayesReport> {
    if intra.is_empty() || inter.is_empty() {
        return Err(Error::EmptySamples);
    }
    if cfg.n_bins < 2 {
        return Err(Error::InvalidInput(format!("bayes bins must be >= 2, got {}", cfg.n_bins)));
    }
    if intra.iter().chain(inter).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("samples must be finite".into()));
    }
    let lo = intra.iter().chain(inter).copied().fold(f64::INFINITY, f64::min);
    let hi = intra.iter().chain(inter).copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::DegenerateRange);
    }

    let (n0, n1) = (intra.len() as f64, inter.len() as f64);
    let (p_intra, p_inter) = match cfg.priors {
        PriorWeighting::Empirical => (n0 / (n0 + n1), n1 / (n0 + n1)),
        PriorWeighting::Equal => (0.5, 0.5),
    };

    let hist = |xs: &[f64]| {
        let mut h = ChannelHistogram::empty(cfg.n_bins);
        for &x in xs {
            h.add(bin_index(x, lo, hi, cfg.n_bins));
        }
        h
    };
    let (h_intra, h_inter) = (hist(intra), hist(inter));

    let width = (hi - lo) / cfg.n_bins as f64;
    let edge = |k: usize| lo + k as f64 * width;

    // Sign of the weighted density difference per bin; empty-difference bins are skipped.
    let signed: Vec<(usize, f64)> = (0..cfg.n_bins)
        .map(|k| {
            let d = p_intra * h_intra.counts[k] as f64 / n0 - p_inter * h_inter.counts[k] as f64 / n1;
            (k, d)
        })
        .filter(|&(_, d)| d != 0.0)
        .collect();
    let mut candidates: Vec<f64> = signed
        .windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .map(|w| 0.5 * (edge(w[0].0 + 1) + edge(w[1].0)))
        .collect();
    candidates.extend([lo, hi + width]);

    let error_at = |t: f64| {
        let missed_intra = intra.iter().filter(|&&x| x < t).count() as f64 / n0;
        let false_intra = inter.iter().filter(|&&x| x >= t).count() as f64 / n1;
        p_intra * missed_intra + p_inter * false_intra
    };
    let (threshold, error_probability) = candidates
        .into_iter()
        .map(|t| (t, error_at(t)))
        .fold(None, |best: Option<(f64, f64)>, (t, e)| match best {
            Some((_, be)) if be <= e => best,
            _ => Some((t, e)),
        })
        .expect("edge candidates always present");

    Ok(BayesReport {
        threshold,
        error_probability,
        prior_intra: p_intra,
        prior_inter: p_inter,
        range_lo: lo,
        range_hi: hi,
        intra_histogram: h_intra,
        inter_histogram: h_inter,
    })
}

/// Everything the evaluation of one transformed library produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformEvaluation {
    pub distances: DistanceReport,
    pub bayes: BayesReport,
    #[serde(skip)]
    pub intra_samples: Vec<f64>,
    #[serde(skip)]
    pub inter_samples: Vec<f64>,
    #[serde(skip)]
    pub partition: Option<IndexPartition>,
}

/// Correlation distances and Bayes error for `transformed`, whose rows
/// correspond one-for-one to the entries of `raw_lib`.
pub fn evaluate_transform<V: AsRef<[f64]>>(
    raw_lib: &SpectrumLibrary,
    transformed: &[V],
    mult: &ClassMultiplicities,
    cfg: &BayesConfig,
) -> Result<TransformEvaluation> {
    if transformed.len() != raw_lib.len() || mult.total() != raw_lib.len() {
        return Err(Error::DimensionMismatch(format!(
            "library has {} spectra, transformed {}, multiplicities sum to {}",
            raw_lib.len(),
            transformed.len(),
            mult.total()
        )));
    }
    if &raw_lib.multiplicities()? != mult {
        return Err(Error::InvalidInput("multiplicities do not match the library's class blocks".into()));
    }
    let measured = correlation_matrix(transformed)?;
    let part = partition_indices(mult);
    let distances = distances(&measured, &ideal_matrix(mult), &part)?;
    let (intra_samples, inter_samples) = split_samples(&measured, &part);
    let bayes = bayes_error(&intra_samples, &inter_samples, cfg)?;
    Ok(TransformEvaluation { distances, bayes, intra_samples, inter_samples, partition: Some(part) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::ZeroVariance)));
    }

    #[test]
    fn correlation_matrix_examples() {
        let m = correlation_matrix(&[vec![1.0, 2.0, 4.0], vec![1.0, 2.0, 4.0]]).unwrap();
        assert!(m.rows().flatten().all(|&v| (v - 1.0).abs() < 1e-15));
        let err = correlation_matrix(&[vec![1.0, 2.0], vec![3.0, 3.0]]).unwrap_err();
        assert!(matches!(err, Error::PairFailed { i: 0, j: 1, .. }), "{err}");
    }

    #[test]
    fn ideal_matrix_two_three() {
        let m = ideal_matrix(&ClassMultiplicities::new(vec![2, 3]).unwrap());
        let want = [
            [1., 1., 0., 0., 0.],
            [1., 1., 0., 0., 0.],
            [0., 0., 1., 1., 1.],
            [0., 0., 1., 1., 1.],
            [0., 0., 1., 1., 1.],
        ];
        for (row, w) in m.rows().zip(want) {
            assert_eq!(row, &w);
        }
        let one = ideal_matrix(&ClassMultiplicities::new(vec![1]).unwrap());
        assert_eq!(one.rows().next().unwrap(), &[1.0]);
    }

    #[test]
    fn partition_counts() {
        let p = partition_indices(&ClassMultiplicities::reference_pattern());
        assert_eq!((p.intra.len(), p.inter.len()), (308, 6092));
        let single = partition_indices(&ClassMultiplicities::new(vec![1]).unwrap());
        assert_eq!(single.intra, vec![(0, 0)]);
        assert!(single.inter.is_empty());
    }

    #[test]
    fn distances_errors_and_zero() {
        let mult = ClassMultiplicities::new(vec![2, 3]).unwrap();
        let ideal = ideal_matrix(&mult);
        let part = partition_indices(&mult);
        let r = distances(&ideal, &ideal, &part).unwrap();
        assert_eq!((r.d_intra, r.d_inter, r.d_total, r.d_avg), (0.0, 0.0, 0.0, 0.0));
        let small = CorrelationMatrix::zeros(3);
        assert!(matches!(distances(&small, &ideal, &part), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn multiplicities_reject_zero() {
        assert!(ClassMultiplicities::new(vec![]).is_err());
        assert!(ClassMultiplicities::new(vec![2, 0]).is_err());
        assert_eq!(ClassMultiplicities::reference_pattern().total(), 80);
    }

    #[test]
    fn bayes_disjoint_and_errors() {
        let intra: Vec<f64> = (0..50).map(|i| 0.9 + 0.002 * i as f64).collect();
        let inter: Vec<f64> = (0..200).map(|i| 0.0005 * i as f64).collect();
        for priors in [PriorWeighting::Equal, PriorWeighting::Empirical] {
            let r = bayes_error(&intra, &inter, &BayesConfig { n_bins: 25, priors }).unwrap();
            assert_eq!(r.error_probability, 0.0);
            assert!(r.threshold > 0.1 && r.threshold <= 0.9);
        }
        assert!(matches!(bayes_error(&[], &[1.0], &BayesConfig::default()), Err(Error::EmptySamples)));
        assert!(matches!(bayes_error(&[0.5], &[0.5, 0.5], &BayesConfig::default()), Err(Error::DegenerateRange)));
    }
}
