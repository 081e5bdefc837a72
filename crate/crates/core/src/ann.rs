//! Two-layer sigmoid perceptron trained by per-pattern backpropagation on
//! squared error, with a fixed step size and no momentum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the uniform initial weight distribution.
pub const INIT_WEIGHT_RANGE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpTopology {
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub n_outputs: usize,
}

impl MlpTopology {
    pub fn new(n_inputs: usize, n_hidden: usize, n_outputs: usize) -> Result<Self> {
        let t = Self { n_inputs, n_hidden, n_outputs };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_inputs == 0 || self.n_hidden == 0 || self.n_outputs == 0 {
            return Err(Error::InvalidInput(format!("topology layers must be >= 1, got {self:?}")));
        }
        Ok(())
    }

    fn hidden_len(&self) -> usize {
        self.n_hidden * (self.n_inputs + 1)
    }

    fn output_len(&self) -> usize {
        self.n_outputs * (self.n_hidden + 1)
    }
}

/// Weights are stored row-major with the bias in the last column of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    topology: MlpTopology,
    hidden_weights: Vec<f64>,
    output_weights: Vec<f64>,
    rng_seed: u64,
}

impl MlpNetwork {
    pub fn from_weights(topology: MlpTopology, hidden_weights: Vec<f64>, output_weights: Vec<f64>, rng_seed: u64) -> Result<Self> {
        topology.validate()?;
        if hidden_weights.len() != topology.hidden_len() || output_weights.len() != topology.output_len() {
            return Err(Error::DimensionMismatch(format!(
                "weights {}+{} do not fit topology {topology:?}",
                hidden_weights.len(),
                output_weights.len()
            )));
        }
        if hidden_weights.iter().chain(&output_weights).any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("weights must be finite".into()));
        }
        Ok(Self { topology, hidden_weights, output_weights, rng_seed })
    }

    pub fn topology(&self) -> &MlpTopology {
        &self.topology
    }

    pub fn hidden_weights(&self) -> &[f64] {
        &self.hidden_weights
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn n_weights(&self) -> usize {
        self.hidden_weights.len() + self.output_weights.len()
    }

    /// Flat view over all weights, hidden layer first.
    pub fn weight(&self, idx: usize) -> f64 {
        let h = self.hidden_weights.len();
        if idx < h {
            self.hidden_weights[idx]
        } else {
            self.output_weights[idx - h]
        }
    }

    pub fn set_weight(&mut self, idx: usize, value: f64) {
        let h = self.hidden_weights.len();
        if idx < h {
            self.hidden_weights[idx] = value;
        } else {
            self.output_weights[idx - h] = value;
        }
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.topology.n_inputs {
            return Err(Error::DimensionMismatch(format!(
                "input has {} values, network expects {}",
                input.len(),
                self.topology.n_inputs
            )));
        }
        Ok(())
    }

    fn activations(&self, input: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let t = &self.topology;
        let hidden: Vec<f64> = self
            .hidden_weights
            .chunks_exact(t.n_inputs + 1)
            .map(|row| sigmoid(dot_bias(row, input)))
            .collect();
        let output = self
            .output_weights
            .chunks_exact(t.n_hidden + 1)
            .map(|row| sigmoid(dot_bias(row, &hidden)))
            .collect();
        (hidden, output)
    }

    /// Gradient of `0.5 * sum (target - output)^2` with respect to every
    /// weight, in the flat order of [`MlpNetwork::weight`].
    pub fn loss_gradient(&self, input: &[f64], target: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        if target.len() != self.topology.n_outputs {
            return Err(Error::DimensionMismatch("target length differs from output count".into()));
        }
        let (hidden, output) = self.activations(input);
        let (d_out, d_hid) = self.deltas(&hidden, &output, target);
        let t = &self.topology;
        let mut grad = Vec::with_capacity(self.n_weights());
        for dh in &d_hid {
            grad.extend(input.iter().map(|x| -dh * x));
            grad.push(-dh);
        }
        for d in &d_out {
            grad.extend(hidden.iter().map(|h| -d * h));
            grad.push(-d);
        }
        debug_assert_eq!(grad.len(), t.hidden_len() + t.output_len());
        Ok(grad)
    }

    /// Error signals (negative loss derivatives w.r.t. pre-activations).
    fn deltas(&self, hidden: &[f64], output: &[f64], target: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let nh = self.topology.n_hidden;
        let d_out: Vec<f64> = output.iter().zip(target).map(|(o, t)| (t - o) * o * (1.0 - o)).collect();
        let d_hid = (0..nh)
            .map(|h| {
                let back: f64 = d_out
                    .iter()
                    .enumerate()
                    .map(|(k, d)| d * self.output_weights[k * (nh + 1) + h])
                    .sum();
                back * hidden[h] * (1.0 - hidden[h])
            })
            .collect();
        (d_out, d_hid)
    }

    /// One stochastic gradient step on a single pattern.
    fn step(&mut self, input: &[f64], target: &[f64], step_size: f64) {
        let (hidden, output) = self.activations(input);
        let (d_out, d_hid) = self.deltas(&hidden, &output, target);
        let ni = self.topology.n_inputs;
        let nh = self.topology.n_hidden;
        for (row, d) in self.output_weights.chunks_exact_mut(nh + 1).zip(&d_out) {
            let g = step_size * d;
            for (w, h) in row.iter_mut().zip(&hidden) {
                *w += g * h;
            }
            row[nh] += g;
        }
        for (row, d) in self.hidden_weights.chunks_exact_mut(ni + 1).zip(&d_hid) {
            let g = step_size * d;
            for (w, x) in row.iter_mut().zip(input) {
                *w += g * x;
            }
            row[ni] += g;
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn dot_bias(row: &[f64], x: &[f64]) -> f64 {
    let (w, bias) = row.split_at(x.len());
    w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias[0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub step_size: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    pub target_max_bit_error: Option<f64>,
    pub n_repeats: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { step_size: 0.01, momentum: 0.0, max_epochs: 100_000, target_max_bit_error: None, n_repeats: 4 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size >= 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidInput(format!("step_size must be >= 0, got {}", self.step_size)));
        }
        if self.momentum != 0.0 {
            return Err(Error::InvalidInput("momentum is not supported; it must be 0".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidInput("max_epochs must be >= 1".into()));
        }
        if self.n_repeats == 0 {
            return Err(Error::InvalidInput("n_repeats must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    /// Entry `e` is measured after epoch `e + 1`.
    pub max_bit_error: Vec<f64>,
    pub accuracy: f64,
}

impl LearningCurve {
    pub fn epochs(&self) -> usize {
        self.max_bit_error.len()
    }

    pub fn final_error(&self) -> f64 {
        *self.max_bit_error.last().expect("curves have at least one epoch")
    }

    /// 1-based epoch at which the error first drops to `level`.
    pub fn epochs_to_reach(&self, level: f64) -> Option<usize> {
        self.max_bit_error.iter().position(|&e| e <= level).map(|i| i + 1)
    }
}

pub fn init_network(topology: MlpTopology, seed: u64) -> Result<MlpNetwork> {
    topology.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-INIT_WEIGHT_RANGE..=INIT_WEIGHT_RANGE)).collect()
    };
    let hidden_weights = draw(topology.hidden_len());
    let output_weights = draw(topology.output_len());
    Ok(MlpNetwork { topology, hidden_weights, output_weights, rng_seed: seed })
}

pub fn forward(net: &MlpNetwork, input: &[f64]) -> Result<Vec<f64>> {
    net.check_input(input)?;
    Ok(net.activations(input).1)
}

/// Index of the largest output; ties go to the lowest index.
pub fn classify(net: &MlpNetwork, input: &[f64]) -> Result<usize> {
    Ok(argmax(&forward(net, input)?))
}

pub fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, &x)| if x > v[best] { i } else { best })
}

fn one_hot_class(target: &[f64], idx: usize) -> Result<usize> {
    let ones = target.iter().filter(|&&v| v == 1.0).count();
    let zeros = target.iter().filter(|&&v| v == 0.0).count();
    if ones != 1 || zeros != target.len() - 1 {
        return Err(Error::NonOneHotTarget(idx));
    }
    Ok(argmax(target))
}

fn check_data(net: &MlpNetwork, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Vec<usize>> {
    if inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch(format!("{} inputs vs {} targets", inputs.len(), targets.len())));
    }
    if inputs.is_empty() {
        return Err(Error::InvalidInput("no training patterns".into()));
    }
    for x in inputs {
        net.check_input(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("inputs must be finite".into()));
        }
    }
    targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if t.len() != net.topology.n_outputs {
                return Err(Error::DimensionMismatch(format!("target {i} has length {}", t.len())));
            }
            one_hot_class(t, i)
        })
        .collect()
}

/// Largest `|target - output|` over all patterns and outputs, plus accuracy.
pub fn evaluate(net: &MlpNetwork, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<(f64, f64)> {
    let classes = check_data(net, inputs, targets)?;
    Ok(evaluate_unchecked(net, inputs, targets, &classes))
}

fn evaluate_unchecked(net: &MlpNetwork, inputs: &[Vec<f64>], targets: &[Vec<f64>], classes: &[usize]) -> (f64, f64) {
    let mut max_err: f64 = 0.0;
    let mut correct = 0;
    for ((x, t), &cls) in inputs.iter().zip(targets).zip(classes) {
        let out = net.activations(x).1;
        for (o, y) in out.iter().zip(t) {
            max_err = max_err.max((y - o).abs());
        }
        if argmax(&out) == cls {
            correct += 1;
        }
    }
    (max_err, correct as f64 / inputs.len() as f64)
}

/// Presents every pattern once per epoch in the given order, recording the
/// maximum bit error after each epoch. Stops early once the error reaches
/// `target_max_bit_error`.
pub fn train(net: &MlpNetwork, inputs: &[Vec<f64>], targets: &[Vec<f64>], cfg: &TrainConfig) -> Result<(MlpNetwork, LearningCurve)> {
    cfg.validate()?;
    let classes = check_data(net, inputs, targets)?;
    let mut net = net.clone();
    let mut curve = Vec::new();
    let mut accuracy = 0.0;
    for _ in 0..cfg.max_epochs {
        for (x, t) in inputs.iter().zip(targets) {
            net.step(x, t, cfg.step_size);
        }
        let (err, acc) = evaluate_unchecked(&net, inputs, targets, &classes);
        curve.push(err);
        accuracy = acc;
        if cfg.target_max_bit_error.is_some_and(|goal| err <= goal) {
            break;
        }
    }
    Ok((net, LearningCurve { max_bit_error: curve, accuracy }))
}

/// Result of training one network per seed.
#[derive(Debug, Clone)]
pub struct RepeatedRuns {
    /// Element-wise mean curve; shorter runs are padded with their final value.
    pub averaged: LearningCurve,
    pub runs: Vec<(MlpNetwork, LearningCurve)>,
}

/// Trains one freshly initialised network per seed (in parallel) and
/// averages the learning curves.
pub fn train_repeated(
    topology: MlpTopology,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<RepeatedRuns> {
    cfg.validate()?;
    if seeds.len() != cfg.n_repeats {
        return Err(Error::InvalidInput(format!("{} seeds given for {} repeats", seeds.len(), cfg.n_repeats)));
    }
    let runs = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| scope.spawn(move || train(&init_network(topology, seed)?, inputs, targets, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    let averaged = average_curves(runs.iter().map(|(_, c)| c));
    Ok(RepeatedRuns { averaged, runs })
}

pub fn average_curves<'a>(curves: impl IntoIterator<Item = &'a LearningCurve>) -> LearningCurve {
    let curves: Vec<&LearningCurve> = curves.into_iter().collect();
    let len = curves.iter().map(|c| c.epochs()).max().unwrap_or(0);
    let k = curves.len() as f64;
    let max_bit_error = (0..len)
        .map(|e| curves.iter().map(|c| c.max_bit_error.get(e).copied().unwrap_or_else(|| c.final_error())).sum::<f64>() / k)
        .collect();
    let accuracy = curves.iter().map(|c| c.accuracy).sum::<f64>() / k;
    LearningCurve { max_bit_error, accuracy }
}

/// One-hot rows for class indices `0..n_classes`.
pub fn one_hot_targets(classes: &[usize], n_classes: usize) -> Vec<Vec<f64>> {
    classes
        .iter()
        .map(|&c| (0..n_classes).map(|k| if k == c { 1.0 } else { 0.0 }).collect())
        .collect()
}
