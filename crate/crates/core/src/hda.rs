//! Hadamard deep autoencoder.
//!
//! A fully connected encoder-decoder trained one configuration column at a
//! time. The reconstruction loss is multiplied entrywise by the observation
//! indicator, so missing coordinates (zero-filled in the input) never pull on
//! the weights; after training, the network's output fills them in.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::trajectory::{denormalize, IndicatorMask, NormalizationRecord, TrajectorySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpArchitecture {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpArchitecture {
    /// `[2n, 2n, max(2, ceil(2n/4)), 2n, 2n]`, ReLU hidden, linear output.
    pub fn default_for(agents: usize) -> Self {
        let width = 2 * agents;
        let code = width.div_ceil(4).max(2);
        MlpArchitecture {
            layer_sizes: vec![width, width, code, width, width],
            hidden_activation: Activation::Relu,
            output_activation: Activation::Linear,
        }
    }

    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Checks the autoencoder shape: at least one hidden layer, equal input
    /// and output widths, and a unique narrowest interior layer.
    pub fn validate(&self, width: usize) -> Result<()> {
        let sizes = &self.layer_sizes;
        if sizes.len() < 3 {
            return Err(Error::invalid("autoencoder needs at least 3 layers"));
        }
        if sizes.contains(&0) {
            return Err(Error::invalid("layer sizes must be >= 1"));
        }
        if sizes[0] != width || sizes[sizes.len() - 1] != width {
            return Err(Error::dim(format!(
                "input and output layers must both have width {width}, got {} and {}",
                sizes[0],
                sizes[sizes.len() - 1]
            )));
        }
        let interior = &sizes[1..sizes.len() - 1];
        let narrowest = *interior.iter().min().expect("non-empty interior");
        if narrowest > width {
            return Err(Error::invalid("code layer must not be wider than the input"));
        }
        if interior.iter().filter(|&&s| s == narrowest).count() != 1 {
            return Err(Error::invalid("interior layers need a unique narrowest (code) layer"));
        }
        Ok(())
    }

}

/// Weights `W_k` (`sizes[k+1] x sizes[k]`) and biases `b_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpParams {
    pub fn new(
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::dim("need one bias vector per weight matrix"));
        }
        for (k, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.rows() != b.len() {
                return Err(Error::dim(format!("layer {k}: {} outputs but {} biases", w.rows(), b.len())));
            }
            if k > 0 && weights[k - 1].rows() != w.cols() {
                return Err(Error::dim(format!("layer {k} expects {} inputs", w.cols())));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric { layer: k, what: "bias" });
            }
        }
        Ok(MlpParams { hidden_activation, output_activation, weights, biases })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(arch: &MlpArchitecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(arch.depth());
        let mut biases = Vec::with_capacity(arch.depth());
        for pair in arch.layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(Matrix::from_fn(fan_out, fan_in, |_, _| rng.gen_range(-limit..=limit)));
            biases.push(vec![0.0; fan_out]);
        }
        MlpParams {
            hidden_activation: arch.hidden_activation,
            output_activation: arch.output_activation,
            weights,
            biases,
        }
    }

    pub fn architecture(&self) -> MlpArchitecture {
        let mut layer_sizes = vec![self.weights[0].cols()];
        layer_sizes.extend(self.weights.iter().map(Matrix::rows));
        MlpArchitecture {
            layer_sizes,
            hidden_activation: self.hidden_activation,
            output_activation: self.output_activation,
        }
    }

    pub fn input_width(&self) -> usize {
        self.weights[0].cols()
    }

    pub fn output_width(&self) -> usize {
        self.weights[self.weights.len() - 1].rows()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.weights.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }
}

/// Output of a forward pass plus the cached per-layer values needed by
/// backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    /// `activations[0]` is the input, the last entry the output.
    pub activations: Vec<Vec<f64>>,
    /// Pre-activation `W_k a_k + b_k` per layer.
    pub pre_activations: Vec<Vec<f64>>,
}

impl ForwardPass {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("at least the input")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Reusable buffers for one forward/backward pass.
struct Scratch {
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

impl Scratch {
    fn new(params: &MlpParams) -> Self {
        let mut acts = vec![vec![0.0; params.input_width()]];
        acts.extend(params.weights.iter().map(|w| vec![0.0; w.rows()]));
        let pre = params.weights.iter().map(|w| vec![0.0; w.rows()]).collect();
        Scratch { acts, pre, delta: Vec::new(), next_delta: Vec::new() }
    }

    fn output(&self) -> &[f64] {
        self.acts.last().expect("output layer")
    }
}

fn forward_into(params: &MlpParams, input: &[f64], s: &mut Scratch) -> Result<()> {
    if input.len() != params.input_width() {
        return Err(Error::dim(format!(
            "input of length {} for a network of width {}",
            input.len(),
            params.input_width()
        )));
    }
    s.acts[0].copy_from_slice(input);
    for (k, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        let act = params.activation(k);
        let (head, tail) = s.acts.split_at_mut(k + 1);
        let x = &head[k];
        let out = &mut tail[0];
        let pre = &mut s.pre[k];
        let mut finite = true;
        for r in 0..w.rows() {
            let z = b[r] + w.row(r).iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            finite &= z.is_finite();
            pre[r] = z;
            out[r] = act.apply(z);
        }
        if !finite {
            return Err(Error::Numeric { layer: k, what: "activation" });
        }
    }
    Ok(())
}

pub fn forward(params: &MlpParams, input: &[f64]) -> Result<ForwardPass> {
    let mut s = Scratch::new(params);
    forward_into(params, input, &mut s)?;
    Ok(ForwardPass { activations: s.acts, pre_activations: s.pre })
}

/// `||(a - a_hat) * omega||^2`.
pub fn masked_loss(a: &[f64], a_hat: &[f64], omega: &[f64]) -> Result<f64> {
    if a.len() != a_hat.len() || a.len() != omega.len() {
        return Err(Error::dim(format!(
            "lengths {}, {} and {} differ",
            a.len(),
            a_hat.len(),
            omega.len()
        )));
    }
    Ok(a.iter().zip(a_hat).zip(omega).map(|((x, y), w)| ((x - y) * w).powi(2)).sum())
}

/// Output-layer error signal `d loss / d pre_activation`.
fn output_delta(params: &MlpParams, s: &mut Scratch, target: &[f64], omega: &[f64]) -> Result<()> {
    let last = params.weights.len() - 1;
    let act = params.activation(last);
    if target.len() != params.output_width() || omega.len() != params.output_width() {
        return Err(Error::dim("target and mask must match the output width"));
    }
    let out = s.acts.last().expect("output");
    s.delta.clear();
    s.delta.extend(
        out.iter()
            .zip(target)
            .zip(omega)
            .zip(&s.pre[last])
            .map(|(((o, t), w), z)| 2.0 * w * w * (o - t) * act.derivative(*z)),
    );
    Ok(())
}

/// Error signal for layer `k - 1` from the signal of layer `k`, using the
/// current weights of layer `k`.
fn propagate(params: &MlpParams, k: usize, s: &mut Scratch) {
    let w = &params.weights[k];
    let act = params.activation(k - 1);
    s.next_delta.clear();
    s.next_delta.resize(w.cols(), 0.0);
    for (r, &d) in s.delta.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        for (nd, &wv) in s.next_delta.iter_mut().zip(w.row(r)) {
            *nd += wv * d;
        }
    }
    for (nd, z) in s.next_delta.iter_mut().zip(&s.pre[k - 1]) {
        *nd *= act.derivative(*z);
    }
}

fn check_delta(s: &Scratch, layer: usize) -> Result<()> {
    if s.delta.iter().any(|d| !d.is_finite()) {
        return Err(Error::Numeric { layer, what: "gradient" });
    }
    Ok(())
}

/// Gradient of `masked_loss(target, forward(input), omega)` with respect to
/// every weight and bias.
pub fn gradients(params: &MlpParams, input: &[f64], target: &[f64], omega: &[f64]) -> Result<Gradients> {
    let mut s = Scratch::new(params);
    forward_into(params, input, &mut s)?;
    output_delta(params, &mut s, target, omega)?;
    let mut gw: Vec<Matrix> = params.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect();
    let mut gb: Vec<Vec<f64>> = params.biases.iter().map(|b| vec![0.0; b.len()]).collect();
    for k in (0..params.weights.len()).rev() {
        check_delta(&s, k)?;
        for (r, &d) in s.delta.iter().enumerate() {
            gb[k][r] = d;
            for (g, &x) in gw[k].row_mut(r).iter_mut().zip(&s.acts[k]) {
                *g = d * x;
            }
        }
        if k > 0 {
            propagate(params, k, &mut s);
            std::mem::swap(&mut s.delta, &mut s.next_delta);
        }
    }
    Ok(Gradients { weights: gw, biases: gb })
}

/// One plain SGD step on a single configuration, with the input doubling as
/// the target.
pub fn backprop_step(params: &MlpParams, a: &[f64], omega: &[f64], lr: f64) -> Result<MlpParams> {
    if !(lr > 0.0) || !lr.is_finite() {
        return Err(Error::invalid(format!("learning rate must be > 0, got {lr}")));
    }
    let g = gradients(params, a, a, omega)?;
    let mut next = params.clone();
    for (w, gw) in next.weights.iter_mut().zip(&g.weights) {
        for (v, d) in w.as_mut_slice().iter_mut().zip(gw.as_slice()) {
            *v -= lr * d;
        }
    }
    for (b, gb) in next.biases.iter_mut().zip(&g.biases) {
        for (v, d) in b.iter_mut().zip(gb) {
            *v -= lr * d;
        }
    }
    Ok(next)
}

/// Fused forward + backward + update. Each layer's error is propagated
/// before its weights change, so the result equals [`backprop_step`].
fn sgd_step_in_place(params: &mut MlpParams, s: &mut Scratch, input: &[f64], omega: &[f64], lr: f64) -> Result<()> {
    forward_into(params, input, s)?;
    output_delta(params, s, input, omega)?;
    if s.delta.iter().all(|&d| d == 0.0) {
        return Ok(());
    }
    for k in (0..params.weights.len()).rev() {
        check_delta(s, k)?;
        if k > 0 {
            propagate(params, k, s);
        }
        let (w, b) = (&mut params.weights[k], &mut params.biases[k]);
        for (r, &d) in s.delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let step = lr * d;
            b[r] -= step;
            for (wv, &x) in w.row_mut(r).iter_mut().zip(&s.acts[k]) {
                *wv -= step * x;
            }
        }
        if k > 0 {
            std::mem::swap(&mut s.delta, &mut s.next_delta);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub tolerance: f64,
    pub learning_rate: f64,
    pub seed: u64,
    pub shuffle_columns: bool,
    pub shuffle_agent_pairs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 1000,
            tolerance: 1e-6,
            learning_rate: 1e-3,
            seed: 0,
            shuffle_columns: true,
            shuffle_agent_pairs: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs < 1 {
            return Err(Error::invalid("max_epochs must be >= 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be > 0"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid("learning_rate must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: MlpParams,
    pub epochs: usize,
    /// `||(X - X_hat) * Omega||_F` after the last epoch, in normalized units.
    pub final_error: f64,
    pub converged: bool,
    /// Masked error after each epoch.
    pub history: Vec<f64>,
}

/// Trains on a normalized, zero-filled trajectory matrix.
///
/// Every epoch visits all configuration columns (in shuffled order when
/// enabled) with one SGD step each, recording the network output right after
/// the step. Training stops when the masked Frobenius error of those outputs
/// drops below the tolerance or after `max_epochs` epochs.
pub fn train(
    x_frag: &TrajectorySet,
    omega: &IndicatorMask,
    arch: &MlpArchitecture,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let width = x_frag.coords().rows();
    arch.validate(width)?;
    if omega.agent_count() != x_frag.agent_count() || omega.step_count() != x_frag.step_count() {
        return Err(Error::dim("mask shape differs from trajectories"));
    }
    let steps = x_frag.step_count();
    let agents = x_frag.agent_count();
    let mut params = MlpParams::init(arch, cfg.seed);
    let mut scratch = Scratch::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));

    let columns: Vec<Vec<f64>> = (0..steps).map(|t| x_frag.configuration(t)).collect();
    let masks: Vec<Vec<f64>> = (0..steps).map(|t| omega.column(t)).collect();

    // X_hat starts at zero.
    let mut error = masks
        .iter()
        .zip(&columns)
        .map(|(w, a)| a.iter().zip(w).map(|(v, m)| (v * m).powi(2)).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..steps).collect();
    let mut agent_order: Vec<usize> = (0..agents).collect();
    let mut input = vec![0.0; width];
    let mut mask = vec![0.0; width];

    while error >= cfg.tolerance && history.len() < cfg.max_epochs {
        if cfg.shuffle_columns {
            order.shuffle(&mut rng);
        }
        if cfg.shuffle_agent_pairs {
            agent_order.shuffle(&mut rng);
        }
        let mut sq_error = 0.0;
        for &t in &order {
            for (slot, &agent) in agent_order.iter().enumerate() {
                for c in 0..2 {
                    input[2 * slot + c] = columns[t][2 * agent + c];
                    mask[2 * slot + c] = masks[t][2 * agent + c];
                }
            }
            sgd_step_in_place(&mut params, &mut scratch, &input, &mask, cfg.learning_rate)?;
            forward_into(&params, &input, &mut scratch)?;
            sq_error += masked_loss(&input, scratch.output(), &mask)?;
        }
        error = sq_error.sqrt();
        history.push(error);
    }
    Ok(TrainOutcome {
        params,
        epochs: history.len(),
        final_error: error,
        converged: error < cfg.tolerance,
        history,
    })
}

/// Runs every column through the network and maps the result back to
/// trajectory units.
pub fn reconstruct(params: &MlpParams, x_norm: &TrajectorySet, rec: &NormalizationRecord) -> Result<TrajectorySet> {
    let (rows, steps) = x_norm.coords().shape();
    if params.input_width() != rows || params.output_width() != rows {
        return Err(Error::dim(format!(
            "network width {} does not match {rows} trajectory rows",
            params.input_width()
        )));
    }
    let mut out = Matrix::zeros(rows, steps);
    let mut s = Scratch::new(params);
    for t in 0..steps {
        forward_into(params, &x_norm.configuration(t), &mut s)?;
        out.set_column(t, s.output());
    }
    denormalize(&TrajectorySet::new(out)?, rec)
}

/// Serialized trained network with everything needed to reuse it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HdaModel {
    pub architecture: MlpArchitecture,
    /// Row-major weight matrices.
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub normalization: NormalizationRecord,
    pub train_config: TrainConfig,
    pub epochs: usize,
    pub final_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl HdaModel {
    pub fn new(outcome: &TrainOutcome, normalization: NormalizationRecord, train_config: TrainConfig) -> Self {
        let p = &outcome.params;
        HdaModel {
            architecture: p.architecture(),
            weights: p
                .weights
                .iter()
                .map(|w| (0..w.rows()).map(|r| w.row(r).to_vec()).collect())
                .collect(),
            biases: p.biases.clone(),
            normalization,
            train_config,
            epochs: outcome.epochs,
            final_error: outcome.final_error,
            config_hash: None,
        }
    }

    pub fn params(&self) -> Result<MlpParams> {
        let weights = self.weights.iter().map(|rows| Matrix::from_rows(rows)).collect::<Result<Vec<_>>>()?;
        let params = MlpParams::new(
            weights,
            self.biases.clone(),
            self.architecture.hidden_activation,
            self.architecture.output_activation,
        )?;
        if params.architecture().layer_sizes != self.architecture.layer_sizes {
            return Err(Error::dim("weights disagree with the stored architecture"));
        }
        Ok(params)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
