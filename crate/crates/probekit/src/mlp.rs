//! Single-hidden-layer MLP for two-class image tasks, trained with Adam
//! under cosine learning-rate annealing.
//!
//! The network is `input -> hidden (ReLU) -> 2 logits` with softmax
//! cross-entropy loss. Training evaluates test accuracy after every
//! epoch and returns the weights of the best epoch, earliest on ties.
//! Probes operate on the weight matrices only; biases are never touched.

use crate::error::{Error, Result};
use crate::matrix::{gemm_slices, Matrix};
use crate::probes::ProbeScope;
use crate::rng::RngStream;
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// Hidden layer weights, `hidden_dim x input_dim`.
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// Output layer weights, `2 x hidden_dim`.
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl MlpModel {
    pub fn hidden_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    fn check_consistent(&self) {
        assert_eq!(self.b1.len(), self.w1.rows());
        assert_eq!(self.w2.cols(), self.w1.rows());
        assert_eq!(self.w2.rows(), 2);
        assert_eq!(self.b2.len(), 2);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub peak_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 10,
            batch_size: 128,
            peak_lr: 3e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights of the epoch with the highest test accuracy.
    pub model: MlpModel,
    pub best_epoch: usize,
    pub best_test_accuracy: f64,
    pub test_accuracy_per_epoch: Vec<f64>,
}

/// Inputs a training or probing step reads; bundles the features with
/// their 0/1 targets.
#[derive(Debug, Clone, Copy)]
pub struct LabeledBatch<'a> {
    pub inputs: &'a Matrix,
    pub targets: &'a [u8],
}

/// Half-width of the uniform weight init, both layers.
///
/// Deliberately large: with weights starting at unit scale, Adam's
/// bounded per-coordinate steps rework magnitudes far more than signs,
/// so trained models keep much of their random sign pattern and encode
/// the task mostly in magnitude structure. That is the regime where
/// sign-level probes (binarization, sign-preserving shuffles) separate
/// easy from hard tasks; with classic `1/sqrt(fan_in)` init the sign
/// pattern itself trains and every sign probe reads near the unprobed
/// accuracy.
pub const INIT_BOUND: f64 = 1.2;

/// Fresh weights: both layers uniform in `(-INIT_BOUND, INIT_BOUND)`
/// drawn row-major from `rng` (hidden layer first), biases zero.
pub fn init_model(hidden_dim: usize, input_dim: usize, rng: &mut RngStream) -> MlpModel {
    assert!(hidden_dim >= 1 && input_dim >= 1);
    let w1 = Matrix::from_vec(
        hidden_dim,
        input_dim,
        (0..hidden_dim * input_dim)
            .map(|_| rng.uniform(-INIT_BOUND, INIT_BOUND))
            .collect(),
    );
    let w2 = Matrix::from_vec(
        2,
        hidden_dim,
        (0..2 * hidden_dim)
            .map(|_| rng.uniform(-INIT_BOUND, INIT_BOUND))
            .collect(),
    );
    MlpModel {
        w1,
        b1: vec![0.0; hidden_dim],
        w2,
        b2: vec![0.0; 2],
    }
}

/// Cosine annealing from `peak` toward zero over `total_steps` updates;
/// `step` counts completed updates, so the first step uses the peak rate.
pub fn cosine_lr(peak: f64, step: usize, total_steps: usize) -> f64 {
    assert!(total_steps >= 1);
    debug_assert!(step < total_steps);
    let t = step as f64 / total_steps as f64;
    peak * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
}

/// Logits for one input vector.
pub fn forward(model: &MlpModel, input: &[f64]) -> [f64; 2] {
    model.check_consistent();
    assert_eq!(input.len(), model.input_dim(), "input length mismatch");
    let d = model.hidden_dim();
    let mut logits = [model.b2[0], model.b2[1]];
    for i in 0..d {
        let mut z = model.b1[i];
        for (w, x) in model.w1.row(i).iter().zip(input) {
            z += w * x;
        }
        let h = z.max(0.0);
        logits[0] += model.w2.get(0, i) * h;
        logits[1] += model.w2.get(1, i) * h;
    }
    logits
}

/// Writes hidden pre-activations, activations, and logits for a batch
/// into caller-provided buffers sized for `b` rows.
fn forward_batch_into(
    model: &MlpModel,
    x: &[f64],
    b: usize,
    z1: &mut [f64],
    h: &mut [f64],
    logits: &mut [f64],
) {
    let f = model.input_dim();
    let d = model.hidden_dim();
    // z1 = x * w1^T, biases added row-wise.
    gemm_slices(b, f, d, 1.0, x, false, model.w1.values(), true, 0.0, z1);
    for row in 0..b {
        let zr = &mut z1[row * d..(row + 1) * d];
        for (z, &bias) in zr.iter_mut().zip(&model.b1) {
            *z += bias;
        }
    }
    for i in 0..b * d {
        h[i] = z1[i].max(0.0);
    }
    gemm_slices(b, d, 2, 1.0, h, false, model.w2.values(), true, 0.0, logits);
    for row in 0..b {
        logits[row * 2] += model.b2[0];
        logits[row * 2 + 1] += model.b2[1];
    }
}

/// Logits for every row of `inputs`, as an `n x 2` matrix.
pub fn forward_batch(model: &MlpModel, inputs: &Matrix) -> Matrix {
    model.check_consistent();
    assert_eq!(inputs.cols(), model.input_dim(), "input width mismatch");
    let b = inputs.rows();
    let d = model.hidden_dim();
    let mut z1 = vec![0.0; b * d];
    let mut h = vec![0.0; b * d];
    let mut logits = vec![0.0; b * 2];
    forward_batch_into(model, inputs.values(), b, &mut z1, &mut h, &mut logits);
    Matrix::from_vec(b, 2, logits)
}

/// Fraction of rows whose predicted class matches the target. The
/// prediction is class 1 iff its logit is strictly larger, so exact ties
/// resolve to class 0.
pub fn accuracy(model: &MlpModel, batch: LabeledBatch<'_>) -> Result<f64> {
    if batch.inputs.rows() != batch.targets.len() {
        return Err(Error::LengthMismatch {
            left: batch.inputs.rows(),
            right: batch.targets.len(),
        });
    }
    let logits = forward_batch(model, batch.inputs);
    let mut correct = 0usize;
    for (row, &target) in batch.targets.iter().enumerate() {
        let predicted = u8::from(logits.get(row, 1) > logits.get(row, 0));
        if predicted == target {
            correct += 1;
        }
    }
    Ok(correct as f64 / batch.targets.len() as f64)
}

/// Mean softmax cross-entropy over the batch.
pub fn batch_loss(model: &MlpModel, batch: LabeledBatch<'_>) -> Result<f64> {
    if batch.inputs.rows() != batch.targets.len() {
        return Err(Error::LengthMismatch {
            left: batch.inputs.rows(),
            right: batch.targets.len(),
        });
    }
    let logits = forward_batch(model, batch.inputs);
    let mut total = 0.0;
    for (row, &target) in batch.targets.iter().enumerate() {
        debug_assert!(target <= 1);
        let z0 = logits.get(row, 0);
        let z1 = logits.get(row, 1);
        let m = z0.max(z1);
        let lse = m + ((z0 - m).exp() + (z1 - m).exp()).ln();
        let zt = if target == 0 { z0 } else { z1 };
        total += lse - zt;
    }
    Ok(total / batch.targets.len() as f64)
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

/// Analytic gradient of [`batch_loss`] with respect to every parameter.
pub fn gradients(model: &MlpModel, batch: LabeledBatch<'_>) -> Result<Gradients> {
    if batch.inputs.rows() != batch.targets.len() {
        return Err(Error::LengthMismatch {
            left: batch.inputs.rows(),
            right: batch.targets.len(),
        });
    }
    model.check_consistent();
    assert_eq!(batch.inputs.cols(), model.input_dim());
    let b = batch.inputs.rows();
    let f = model.input_dim();
    let d = model.hidden_dim();
    let mut z1 = vec![0.0; b * d];
    let mut h = vec![0.0; b * d];
    let mut logits = vec![0.0; b * 2];
    forward_batch_into(
        model,
        batch.inputs.values(),
        b,
        &mut z1,
        &mut h,
        &mut logits,
    );

    let mut grads = Gradients {
        w1: Matrix::zeros(d, f),
        b1: vec![0.0; d],
        w2: Matrix::zeros(2, d),
        b2: vec![0.0; 2],
    };
    let mut dlogits = vec![0.0; b * 2];
    let mut dh = vec![0.0; b * d];
    backward_into(
        model,
        batch.inputs.values(),
        batch.targets,
        b,
        &z1,
        &h,
        &logits,
        &mut dlogits,
        &mut dh,
        &mut grads,
    );
    Ok(grads)
}

/// Backpropagation through softmax cross-entropy, the output layer, and
/// the ReLU hidden layer. `dlogits` and `dh` are scratch buffers.
#[allow(clippy::too_many_arguments)]
fn backward_into(
    model: &MlpModel,
    x: &[f64],
    targets: &[u8],
    b: usize,
    z1: &[f64],
    h: &[f64],
    logits: &[f64],
    dlogits: &mut [f64],
    dh: &mut [f64],
    grads: &mut Gradients,
) {
    let f = model.input_dim();
    let d = model.hidden_dim();
    let inv_b = 1.0 / b as f64;
    for (row, &target) in targets.iter().enumerate() {
        let z0 = logits[row * 2];
        let z1v = logits[row * 2 + 1];
        let m = z0.max(z1v);
        let e0 = (z0 - m).exp();
        let e1 = (z1v - m).exp();
        let denom = e0 + e1;
        let p0 = e0 / denom;
        let p1 = e1 / denom;
        dlogits[row * 2] = (p0 - f64::from(target == 0)) * inv_b;
        dlogits[row * 2 + 1] = (p1 - f64::from(target == 1)) * inv_b;
    }
    // dW2 = dlogits^T * h; db2 = column sums of dlogits.
    gemm_slices(
        2,
        b,
        d,
        1.0,
        dlogits,
        true,
        h,
        false,
        0.0,
        grads.w2.values_mut(),
    );
    grads.b2[0] = (0..b).map(|r| dlogits[r * 2]).sum();
    grads.b2[1] = (0..b).map(|r| dlogits[r * 2 + 1]).sum();
    // dh = dlogits * w2, masked by the ReLU gate (zero where z1 <= 0).
    gemm_slices(
        b,
        2,
        d,
        1.0,
        dlogits,
        false,
        model.w2.values(),
        false,
        0.0,
        dh,
    );
    for i in 0..b * d {
        if z1[i] <= 0.0 {
            dh[i] = 0.0;
        }
    }
    // dW1 = dh^T * x; db1 = column sums of dh.
    gemm_slices(d, b, f, 1.0, dh, true, x, false, 0.0, grads.w1.values_mut());
    for gb in grads.b1.iter_mut() {
        *gb = 0.0;
    }
    for row in 0..b {
        for (gb, &g) in grads.b1.iter_mut().zip(&dh[row * d..(row + 1) * d]) {
            *gb += g;
        }
    }
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    /// One Adam update with bias correction; `t` counts updates starting
    /// at 1.
    fn update(&mut self, params: &mut [f64], grads: &[f64], lr: f64, cfg: &TrainConfig, t: usize) {
        let c1 = 1.0 - cfg.beta1.powi(t as i32);
        let c2 = 1.0 - cfg.beta2.powi(t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= lr * mhat / (vhat.sqrt() + cfg.epsilon);
        }
    }
}

/// Trains a fresh model on the task and keeps the epoch checkpoint with
/// the best test accuracy.
///
/// All randomness (initialization and per-epoch shuffles) derives from
/// `config.seed`, so equal inputs give bitwise equal results.
pub fn train(
    task: &crate::data::PairTask,
    hidden_dim: usize,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if hidden_dim == 0 {
        return Err(Error::invalid("hidden_dim must be positive"));
    }
    if config.batch_size == 0 || config.max_epochs == 0 {
        return Err(Error::invalid("batch_size and max_epochs must be positive"));
    }
    if config.peak_lr <= 0.0 || !config.peak_lr.is_finite() {
        return Err(Error::invalid("peak_lr must be positive and finite"));
    }
    let n = task.train_inputs.rows();
    if task.train_targets.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: task.train_targets.len(),
        });
    }
    if task.test_inputs.rows() != task.test_targets.len() {
        return Err(Error::LengthMismatch {
            left: task.test_inputs.rows(),
            right: task.test_targets.len(),
        });
    }
    if task
        .train_targets
        .iter()
        .chain(&task.test_targets)
        .any(|&t| t > 1)
    {
        return Err(Error::invalid("pair task targets must be 0 or 1"));
    }

    let f = task.feature_dim();
    let d = hidden_dim;
    let mut master = RngStream::new(config.seed, 0);
    let mut model = init_model(d, f, &mut master);

    let bs = config.batch_size.min(n);
    let steps_per_epoch = n.div_ceil(bs);
    let total_steps = steps_per_epoch * config.max_epochs;

    let mut adam_w1 = AdamState::new(d * f);
    let mut adam_b1 = AdamState::new(d);
    let mut adam_w2 = AdamState::new(2 * d);
    let mut adam_b2 = AdamState::new(2);

    let mut order: Vec<usize> = (0..n).collect();
    let mut xb = vec![0.0; bs * f];
    let mut yb = vec![0u8; bs];
    let mut z1 = vec![0.0; bs * d];
    let mut h = vec![0.0; bs * d];
    let mut logits = vec![0.0; bs * 2];
    let mut dlogits = vec![0.0; bs * 2];
    let mut dh = vec![0.0; bs * d];
    let mut grads = Gradients {
        w1: Matrix::zeros(d, f),
        b1: vec![0.0; d],
        w2: Matrix::zeros(2, d),
        b2: vec![0.0; 2],
    };

    let test_batch = LabeledBatch {
        inputs: &task.test_inputs,
        targets: &task.test_targets,
    };
    let mut best: Option<(f64, usize, MlpModel)> = None;
    let mut per_epoch = Vec::with_capacity(config.max_epochs);
    let mut step = 0usize;

    for epoch in 0..config.max_epochs {
        for (i, slot) in order.iter_mut().enumerate() {
            *slot = i;
        }
        master.substream(epoch as u64).shuffle(&mut order);
        for chunk in order.chunks(bs) {
            let b = chunk.len();
            for (row, &src) in chunk.iter().enumerate() {
                xb[row * f..(row + 1) * f].copy_from_slice(task.train_inputs.row(src));
                yb[row] = task.train_targets[src];
            }
            forward_batch_into(&model, &xb[..b * f], b, &mut z1, &mut h, &mut logits);
            backward_into(
                &model,
                &xb[..b * f],
                &yb[..b],
                b,
                &z1,
                &h,
                &logits,
                &mut dlogits,
                &mut dh,
                &mut grads,
            );
            let lr = cosine_lr(config.peak_lr, step, total_steps);
            let t = step + 1;
            adam_w1.update(model.w1.values_mut(), grads.w1.values(), lr, config, t);
            adam_b1.update(&mut model.b1, &grads.b1, lr, config, t);
            adam_w2.update(model.w2.values_mut(), grads.w2.values(), lr, config, t);
            adam_b2.update(&mut model.b2, &grads.b2, lr, config, t);
            step += 1;
        }
        let acc = accuracy(&model, test_batch)?;
        per_epoch.push(acc);
        let improved = match &best {
            Some((best_acc, _, _)) => acc > *best_acc,
            None => true,
        };
        if improved {
            best = Some((acc, epoch, model.clone()));
        }
    }

    let (best_test_accuracy, best_epoch, best_model) = best.expect("at least one epoch runs");
    Ok(TrainOutcome {
        model: best_model,
        best_epoch,
        best_test_accuracy,
        test_accuracy_per_epoch: per_epoch,
    })
}

/// Standard deviation (population form) over all entries of the
/// in-scope weight matrices.
pub fn weight_std(model: &MlpModel, scope: ProbeScope) -> Result<f64> {
    let mut values: Vec<f64> = Vec::new();
    if scope.w1 {
        values.extend_from_slice(model.w1.values());
    }
    if scope.w2 {
        values.extend_from_slice(model.w2.values());
    }
    stats::std_dev(&values)
}

/// Relative L2 error between analytic and central-difference gradients
/// of the batch loss, over the full parameter vector.
///
/// The step should be small enough for accuracy but large enough to
/// stay clear of cancellation; `1e-5` suits unit-scale weights.
pub fn gradient_check(model: &MlpModel, batch: LabeledBatch<'_>, step: f64) -> Result<f64> {
    let analytic = gradients(model, batch)?;
    let mut work = model.clone();
    let mut numeric: Vec<f64> = Vec::new();

    // Parameter slots are visited in a fixed order; the closure nudges
    // one coordinate and re-evaluates the loss.
    let slots = model.w1.values().len() + model.b1.len() + model.w2.values().len() + model.b2.len();
    for idx in 0..slots {
        let read = |m: &MlpModel, i: usize| -> f64 {
            let n1 = m.w1.values().len();
            let nb1 = m.b1.len();
            let n2 = m.w2.values().len();
            if i < n1 {
                m.w1.values()[i]
            } else if i < n1 + nb1 {
                m.b1[i - n1]
            } else if i < n1 + nb1 + n2 {
                m.w2.values()[i - n1 - nb1]
            } else {
                m.b2[i - n1 - nb1 - n2]
            }
        };
        let write = |m: &mut MlpModel, i: usize, v: f64| {
            let n1 = m.w1.values().len();
            let nb1 = m.b1.len();
            let n2 = m.w2.values().len();
            if i < n1 {
                m.w1.values_mut()[i] = v;
            } else if i < n1 + nb1 {
                m.b1[i - n1] = v;
            } else if i < n1 + nb1 + n2 {
                m.w2.values_mut()[i - n1 - nb1] = v;
            } else {
                m.b2[i - n1 - nb1 - n2] = v;
            }
        };
        let original = read(model, idx);
        write(&mut work, idx, original + step);
        let plus = batch_loss(&work, batch)?;
        write(&mut work, idx, original - step);
        let minus = batch_loss(&work, batch)?;
        write(&mut work, idx, original);
        numeric.push((plus - minus) / (2.0 * step));
    }

    let analytic_flat: Vec<f64> = analytic
        .w1
        .values()
        .iter()
        .chain(&analytic.b1)
        .chain(analytic.w2.values())
        .chain(&analytic.b2)
        .copied()
        .collect();
    let mut diff2 = 0.0;
    let mut na = 0.0;
    let mut nn = 0.0;
    for (a, n) in analytic_flat.iter().zip(&numeric) {
        diff2 += (a - n) * (a - n);
        na += a * a;
        nn += n * n;
    }
    let denom = (na.sqrt() + nn.sqrt()).max(1e-12);
    Ok(diff2.sqrt() / denom)
}
