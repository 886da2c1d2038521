//! Fully connected ReLU network with a two-way softmax output, trained by
//! mini-batch Adam with an L2 penalty and early stopping.

use rand::seq::SliceRandom;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use super::sample::{check_samples, fingerprint, normalize_features, stratified_split, Normalization, Sample, DELOCALIZED};
use super::svm::MIN_HOLDOUT_ACCURACY;
use crate::error::{Error, Result};
use crate::randomness::{derive_seed, walk_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpParams {
    pub hidden_layers: Vec<usize>,
    pub l2_alpha: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Epochs without a validation-loss improvement larger than `tol`
    /// before training stops.
    pub patience: usize,
    pub tol: f64,
    pub max_epochs: usize,
    /// Share of the training split used for early stopping.
    pub validation_fraction: f64,
    pub holdout_fraction: f64,
    pub normalization: Normalization,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_layers: vec![400, 200, 100, 50],
            l2_alpha: 1e-3,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            patience: 10,
            tol: 1e-4,
            max_epochs: 300,
            validation_fraction: 0.1,
            holdout_fraction: 0.2,
            normalization: Normalization::Max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifier {
    /// Input size, hidden sizes, then 2.
    pub layer_sizes: Vec<usize>,
    /// Layer `l` maps `layer_sizes[l]` to `layer_sizes[l + 1]`, stored
    /// row-major as `in x out`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub l2_alpha: f64,
    pub params: MlpParams,
    pub holdout_accuracy: f64,
    pub epochs_run: usize,
    pub training_fingerprint: String,
    pub warning: Option<String>,
}

/// Gradient with the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// `c = op(a) op(b) + beta c` for row-major matrices; `op(a)` is `m x k`,
/// `op(b)` is `k x n`.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], ta: bool, b: &[f64], tb: bool, beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if ta { (1, m) } else { (k, 1) };
    let (rsb, csb) = if tb { (1, k) } else { (n, 1) };
    // SAFETY: the asserts above bound every index the strides can reach.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0,
            a.as_ptr(), rsa as isize, csa as isize,
            b.as_ptr(), rsb as isize, csb as isize,
            beta, c.as_mut_ptr(), n as isize, 1,
        );
    }
}

impl MlpClassifier {
    /// Glorot-uniform weights, zero biases.
    pub fn initialize(layer_sizes: &[usize], l2_alpha: f64, seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) || *layer_sizes.last().unwrap() != 2 {
            return Err(Error::InvalidConfig(format!("layer sizes {layer_sizes:?} must be positive and end in 2")));
        }
        let mut rng = walk_rng(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in layer_sizes.windows(2) {
            let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
            weights.push((0..w[0] * w[1]).map(|_| bound * (2.0 * rng.random::<f64>() - 1.0)).collect());
            biases.push(vec![0.0; w[1]]);
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            l2_alpha,
            params: MlpParams::default(),
            holdout_accuracy: f64::NAN,
            epochs_run: 0,
            training_fingerprint: String::new(),
            warning: None,
        })
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    fn n_layers(&self) -> usize {
        self.weights.len()
    }

    /// Activations of every layer after the input for `rows` stacked inputs;
    /// the last entry holds softmax probabilities.
    fn forward(&self, x: &[f64], rows: usize) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let mut z = Vec::with_capacity(rows * fan_out);
            for _ in 0..rows {
                z.extend_from_slice(&self.biases[l]);
            }
            let input = if l == 0 { x } else { &acts[l - 1] };
            gemm(rows, fan_in, fan_out, input, false, &self.weights[l], false, 1.0, &mut z);
            if l + 1 < self.n_layers() {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            } else {
                for r in z.chunks_mut(fan_out) {
                    softmax_in_place(r);
                }
            }
            acts.push(z);
        }
        acts
    }

    /// Class probabilities `[p_delocalized, p_localized]` for inputs that are
    /// already normalized.
    pub fn predict_normalized(&self, x: &[f64], rows: usize) -> Vec<[f64; 2]> {
        let out = self.forward(x, rows).pop().unwrap();
        out.chunks(2).map(|p| [p[0], p[1]]).collect()
    }

    pub fn predict_proba(&self, features: &[f64]) -> Result<[f64; 2]> {
        if features.len() != self.input_size() {
            return Err(Error::InvalidParameter(format!(
                "network expects {} features, got {}",
                self.input_size(),
                features.len()
            )));
        }
        let x = normalize_features(features, self.params.normalization)?;
        Ok(self.predict_normalized(&x, 1)[0])
    }

    pub fn p_delocalized(&self, features: &[f64]) -> Result<f64> {
        Ok(self.predict_proba(features)?[0])
    }

    /// Mean cross-entropy plus `alpha / (2 rows)` times the squared weights,
    /// and its gradient by backpropagation.
    pub fn loss_and_gradient(&self, x: &[f64], labels: &[u8]) -> (f64, Gradient) {
        let rows = labels.len();
        let acts = self.forward(x, rows);
        let l_out = self.n_layers() - 1;
        let scale = 1.0 / rows as f64;

        let probs = &acts[l_out];
        let mut loss = 0.0;
        let mut delta = probs.clone();
        for (r, &y) in labels.iter().enumerate() {
            let y = y as usize;
            loss -= probs[r * 2 + y].max(f64::MIN_POSITIVE).ln();
            delta[r * 2 + y] -= 1.0;
        }
        delta.iter_mut().for_each(|d| *d *= scale);
        loss *= scale;
        let sq: f64 = self.weights.iter().flatten().map(|w| w * w).sum();
        loss += 0.5 * self.l2_alpha * scale * sq;

        let mut gw = vec![Vec::new(); self.n_layers()];
        let mut gb = vec![Vec::new(); self.n_layers()];
        for l in (0..self.n_layers()).rev() {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let input = if l == 0 { x } else { &acts[l - 1] };
            let mut g: Vec<f64> = self.weights[l].iter().map(|w| self.l2_alpha * scale * w).collect();
            gemm(fan_in, rows, fan_out, input, true, &delta, false, 1.0, &mut g);
            let mut b = vec![0.0; fan_out];
            for r in delta.chunks(fan_out) {
                b.iter_mut().zip(r).for_each(|(b, d)| *b += d);
            }
            gw[l] = g;
            gb[l] = b;
            if l > 0 {
                let mut prev = vec![0.0; rows * fan_in];
                gemm(rows, fan_out, fan_in, &delta, false, &self.weights[l], true, 0.0, &mut prev);
                for (p, a) in prev.iter_mut().zip(&acts[l - 1]) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        (loss, Gradient { weights: gw, biases: gb })
    }

    /// Mean cross-entropy without the penalty.
    fn data_loss(&self, x: &[f64], labels: &[u8]) -> f64 {
        let probs = self.predict_normalized(x, labels.len());
        -probs.iter().zip(labels).map(|(p, &y)| p[y as usize].max(f64::MIN_POSITIVE).ln()).sum::<f64>()
            / labels.len() as f64
    }

    /// Parameters as one vector: per layer, weights then biases.
    pub fn flat_params(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.biases).flat_map(|(w, b)| w.iter().chain(b)).copied().collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let mut i = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for v in w.iter_mut().chain(b.iter_mut()) {
                *v = flat[i];
                i += 1;
            }
        }
        assert_eq!(i, flat.len(), "flat parameter length mismatch");
    }
}

impl Gradient {
    pub fn flat(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.biases).flat_map(|(w, b)| w.iter().chain(b)).copied().collect()
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], p: &MlpParams) {
        self.t += 1;
        let c1 = 1.0 - p.beta1.powi(self.t);
        let c2 = 1.0 - p.beta2.powi(self.t);
        let lr = p.learning_rate * c2.sqrt() / c1;
        for i in 0..params.len() {
            self.m[i] = p.beta1 * self.m[i] + (1.0 - p.beta1) * grad[i];
            self.v[i] = p.beta2 * self.v[i] + (1.0 - p.beta2) * grad[i] * grad[i];
            params[i] -= lr * self.m[i] / (self.v[i].sqrt() + p.epsilon);
        }
    }
}

fn stack(xs: &[Vec<f64>], idx: &[usize]) -> Vec<f64> {
    idx.iter().flat_map(|&i| xs[i].iter().copied()).collect()
}

/// Trains the network; the weights with the lowest validation loss are kept.
pub fn train_mlp(samples: &[Sample], params: &MlpParams, seed: u64) -> Result<MlpClassifier> {
    let dim = check_samples(samples)?;
    if params.batch_size == 0 || params.max_epochs == 0 || !(params.learning_rate > 0.0) {
        return Err(Error::InvalidConfig(format!("invalid MLP parameters {params:?}")));
    }
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let (train, holdout) = stratified_split(&labels, params.holdout_fraction, derive_seed(seed, &[0]))?;
    let train_labels: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
    let (fit_pos, val_pos) = stratified_split(&train_labels, params.validation_fraction, derive_seed(seed, &[1]))?;
    let mut fit: Vec<usize> = fit_pos.iter().map(|&k| train[k]).collect();
    let val: Vec<usize> = val_pos.iter().map(|&k| train[k]).collect();

    let xs: Vec<Vec<f64>> =
        samples.iter().map(|s| normalize_features(&s.features, params.normalization)).collect::<Result<_>>()?;
    let mut sizes = vec![dim];
    sizes.extend_from_slice(&params.hidden_layers);
    sizes.push(2);
    let mut model = MlpClassifier::initialize(&sizes, params.l2_alpha, derive_seed(seed, &[2]))?;
    model.params = params.clone();

    let (val_x, val_y) = if val.is_empty() {
        (stack(&xs, &fit), fit.iter().map(|&i| labels[i]).collect::<Vec<_>>())
    } else {
        (stack(&xs, &val), val.iter().map(|&i| labels[i]).collect())
    };

    let mut flat = model.flat_params();
    let mut adam = Adam::new(flat.len());
    let mut rng = walk_rng(derive_seed(seed, &[3]));
    let mut best = (f64::INFINITY, flat.clone(), 0usize);
    let mut stale = 0;
    let mut epochs = 0;
    for epoch in 0..params.max_epochs {
        epochs = epoch + 1;
        fit.shuffle(&mut rng);
        for batch in fit.chunks(params.batch_size) {
            let x = stack(&xs, batch);
            let y: Vec<u8> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, grad) = model.loss_and_gradient(&x, &y);
            if !loss.is_finite() {
                return Err(Error::TrainingFailed(format!("loss diverged in epoch {epochs}")));
            }
            adam.step(&mut flat, &grad.flat(), params);
            model.set_flat_params(&flat);
        }
        let val_loss = model.data_loss(&val_x, &val_y);
        if !val_loss.is_finite() {
            return Err(Error::TrainingFailed(format!("validation loss diverged in epoch {epochs}")));
        }
        if val_loss < best.0 - params.tol {
            best = (val_loss, flat.clone(), epochs);
            stale = 0;
        } else {
            stale += 1;
            if stale >= params.patience {
                break;
            }
        }
    }
    model.set_flat_params(&best.1);
    model.epochs_run = epochs;
    model.training_fingerprint = fingerprint(samples);

    let scored = if holdout.is_empty() { &train } else { &holdout };
    let probs = model.predict_normalized(&stack(&xs, scored), scored.len());
    let correct = scored.iter().zip(&probs).filter(|(&i, p)| (p[0] >= 0.5) == (labels[i] == DELOCALIZED)).count();
    model.holdout_accuracy = correct as f64 / scored.len() as f64;
    if model.holdout_accuracy < MIN_HOLDOUT_ACCURACY {
        model.warning = Some(format!("holdout accuracy {:.3} is below {MIN_HOLDOUT_ACCURACY}", model.holdout_accuracy));
    }
    Ok(model)
}

/// One entry of a hyper-parameter search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchEntry {
    pub hidden_layers: Vec<usize>,
    pub l2_alpha: f64,
    pub holdout_accuracy: f64,
}

/// Trains every `(hidden_layers, alpha)` pair and returns the model with the
/// best holdout accuracy (first on ties) and the full table.
pub fn grid_search(
    samples: &[Sample],
    layer_candidates: &[Vec<usize>],
    alpha_candidates: &[f64],
    base: &MlpParams,
    seed: u64,
) -> Result<(MlpClassifier, Vec<GridSearchEntry>)> {
    let mut table = Vec::new();
    let mut best: Option<MlpClassifier> = None;
    for layers in layer_candidates {
        for &alpha in alpha_candidates {
            let params = MlpParams { hidden_layers: layers.clone(), l2_alpha: alpha, ..base.clone() };
            let model = train_mlp(samples, &params, seed)?;
            table.push(GridSearchEntry { hidden_layers: layers.clone(), l2_alpha: alpha, holdout_accuracy: model.holdout_accuracy });
            if best.as_ref().is_none_or(|b| model.holdout_accuracy > b.holdout_accuracy) {
                best = Some(model);
            }
        }
    }
    let best = best.ok_or_else(|| Error::InvalidConfig("grid search needs at least one candidate".into()))?;
    Ok((best, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_set(swap: bool) -> Vec<Sample> {
        (0..200)
            .map(|i| {
                let class = (i % 2) as u8;
                let features = if class == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
                Sample {
                    features,
                    label: if swap { 1 - class } else { class },
                    param_value: 0.0,
                    seed: i,
                    normalization: Normalization::Raw,
                }
            })
            .collect()
    }

    fn small() -> MlpParams {
        MlpParams { hidden_layers: vec![8, 4], max_epochs: 200, ..MlpParams::default() }
    }

    #[test]
    fn gemm_transposes() {
        // a = [[1,2,3],[4,5,6]], b = [[1,0],[0,1],[1,1]]
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let mut c = [0.0; 4];
        gemm(2, 3, 2, &a, false, &b, false, 0.0, &mut c);
        assert_eq!(c, [4.0, 5.0, 10.0, 11.0]);
        let at = [1.0, 4.0, 2.0, 5.0, 3.0, 6.0];
        let bt = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        let mut d = [0.0; 4];
        gemm(2, 3, 2, &at, true, &bt, true, 0.0, &mut d);
        assert_eq!(c, d);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut net = MlpClassifier::initialize(&[5, 4, 3, 2], 1e-3, 11).unwrap();
        let mut rng = walk_rng(5);
        for b in net.biases.iter_mut().flatten() {
            *b = 0.1 * (rng.random::<f64>() - 0.5);
        }
        let x: Vec<f64> = (0..50).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let y: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let (_, grad) = net.loss_and_gradient(&x, &y);
        let analytic = grad.flat();
        let base = net.flat_params();
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] += eps;
            net.set_flat_params(&p);
            let up = net.loss_and_gradient(&x, &y).0;
            p[i] -= 2.0 * eps;
            net.set_flat_params(&p);
            let down = net.loss_and_gradient(&x, &y).0;
            let numeric = (up - down) / (2.0 * eps);
            let denom = analytic[i].abs().max(numeric.abs()).max(1e-10);
            worst = worst.max((analytic[i] - numeric).abs() / denom);
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn outputs_sum_to_one() {
        let net = MlpClassifier::initialize(&[6, 5, 2], 0.0, 2).unwrap();
        let mut rng = walk_rng(9);
        for _ in 0..200 {
            let x: Vec<f64> = (0..6).map(|_| 50.0 * (rng.random::<f64>() - 0.5)).collect();
            let p = net.predict_normalized(&x, 1)[0];
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn separable_toy_set() {
        let m = train_mlp(&toy_set(false), &small(), 4).unwrap();
        assert_eq!(m.holdout_accuracy, 1.0);
        assert!(m.p_delocalized(&[1.0, 0.0]).unwrap() > 0.5);
        assert_eq!(m, train_mlp(&toy_set(false), &small(), 4).unwrap());
    }

    #[test]
    fn swapped_labels_flip_probabilities() {
        let a = train_mlp(&toy_set(false), &small(), 4).unwrap();
        let b = train_mlp(&toy_set(true), &small(), 4).unwrap();
        for x in [[1.0, 0.0], [0.0, 1.0]] {
            let (pa, pb) = (a.p_delocalized(&x).unwrap(), b.p_delocalized(&x).unwrap());
            assert!((pa - (1.0 - pb)).abs() < 0.05, "{pa} {pb}");
        }
    }

    #[test]
    fn nan_input_fails_training() {
        let mut set = toy_set(false);
        for s in set.iter_mut().step_by(7) {
            s.features[0] = f64::NAN;
        }
        let p = MlpParams { normalization: Normalization::Raw, ..small() };
        assert!(matches!(train_mlp(&set, &p, 0), Err(Error::TrainingFailed(_))));
    }

    #[test]
    fn grid_search_picks_a_candidate() {
        let p = MlpParams { max_epochs: 30, ..small() };
        let (m, table) = grid_search(&toy_set(false), &[vec![4], vec![8, 4]], &[1e-3, 1e-2], &p, 1).unwrap();
        assert_eq!(table.len(), 4);
        assert_eq!(m.holdout_accuracy, table.iter().map(|e| e.holdout_accuracy).fold(0.0, f64::max));
    }
}
