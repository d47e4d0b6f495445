//! Classical layers, quantum layer variants, loss, Adam, and training.
//!
//! A [`HybridModel`] chains dense classical layers around a quantum layer:
//! input -> pre dense stack (ReLU) -> quantum layer -> post dense stack
//! (Softmax on the last layer). The quantum layer is either a single
//! depth-L circuit with data re-uploading ([`QuantumLayerVariant::Reference`])
//! or L depth-1 circuits whose outputs are mixed by a learned convex
//! combination ([`QuantumLayerVariant::Ensemble`]). The mixing weights are
//! kept on the simplex by construction: free logits passed through softmax,
//! so every optimizer step preserves `sum p_l = 1` and `p_l > 0`.
//!
//! Gradients flow through the dense layers by the chain rule and through the
//! quantum layer by the parameter-shift Jacobians of [`crate::gradients`].

use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::TAU;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::circuits::AnsatzConfig;
use crate::error::{Error, Result};
use crate::gradients::quantum_jacobians;
use crate::mat::Mat;
use crate::rng::{substream, STREAM_SHUFFLE, STREAM_THETA, STREAM_WEIGHTS};

/// Activation applied after the affine map of a dense layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Softmax,
    Identity,
}

/// Fully connected layer computing `phi(x W + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    /// in_dim x out_dim.
    pub weights: Mat,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Values captured by a dense forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct DenseCache {
    input: Vec<f64>,
    output: Vec<f64>,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    /// Weights drawn uniformly from [-1/sqrt(in_dim), 1/sqrt(in_dim)],
    /// biases zero.
    pub fn init_uniform(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut impl Rng,
    ) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let weights = Mat::from_fn(in_dim, out_dim, |_, _| rng.gen_range(-bound..bound));
        DenseLayer {
            weights,
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        if x.len() != self.in_dim() {
            return Err(Error::Shape {
                what: "dense layer input",
                expected: self.in_dim(),
                got: x.len(),
            });
        }
        let mut z = self.bias.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (zo, w) in z.iter_mut().zip(self.weights.row(i)) {
                *zo += xi * w;
            }
        }
        let output = match self.activation {
            Activation::Identity => z,
            Activation::Relu => z.into_iter().map(|v| v.max(0.0)).collect(),
            Activation::Softmax => softmax(&z),
        };
        let cache = DenseCache {
            input: x.to_vec(),
            output: output.clone(),
        };
        Ok((output, cache))
    }

    /// Chain rule through the activation and affine map. Returns the
    /// gradients with respect to the input, the weights, and the bias.
    pub fn backward(
        &self,
        cache: &DenseCache,
        upstream: &[f64],
    ) -> Result<(Vec<f64>, Mat, Vec<f64>)> {
        if upstream.len() != self.out_dim() {
            return Err(Error::Shape {
                what: "dense layer upstream gradient",
                expected: self.out_dim(),
                got: upstream.len(),
            });
        }
        let dz: Vec<f64> = match self.activation {
            Activation::Identity => upstream.to_vec(),
            // output > 0 exactly where the pre-activation was positive
            Activation::Relu => cache
                .output
                .iter()
                .zip(upstream)
                .map(|(&o, &g)| if o > 0.0 { g } else { 0.0 })
                .collect(),
            Activation::Softmax => {
                // full Jacobian: diag(p) - p p^T
                let p = &cache.output;
                let dot: f64 = upstream.iter().zip(p.iter()).map(|(g, pi)| g * pi).sum();
                p.iter()
                    .zip(upstream)
                    .map(|(&pi, &g)| pi * (g - dot))
                    .collect()
            }
        };
        let mut grad_w = Mat::zeros(self.in_dim(), self.out_dim());
        let mut grad_x = vec![0.0; self.in_dim()];
        for (i, &xi) in cache.input.iter().enumerate() {
            let row = self.weights.row(i);
            let mut acc = 0.0;
            for (o, &dzo) in dz.iter().enumerate() {
                grad_w[(i, o)] = xi * dzo;
                acc += row[o] * dzo;
            }
            grad_x[i] = acc;
        }
        Ok((grad_x, grad_w, dz))
    }
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean squared error over components, with its gradient w.r.t. the
/// prediction. Batch losses are means of these per-sample values.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::Shape {
            what: "loss target",
            expected: pred.len(),
            got: target.len(),
        });
    }
    let c = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for (g, (&p, &t)) in grad.iter_mut().zip(pred.iter().zip(target)) {
        let d = p - t;
        loss += d * d;
        *g = 2.0 * d / c;
    }
    Ok((loss / c, grad))
}

/// Free mixing parameters for an ensemble; the actual weights are
/// `softmax(logits)`, which keeps them strictly positive and summing to one
/// under any unconstrained update.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexWeights {
    logits: Vec<f64>,
}

impl SimplexWeights {
    /// Zero logits: uniform weights 1/L.
    pub fn uniform(len: usize) -> Self {
        SimplexWeights {
            logits: vec![0.0; len],
        }
    }

    pub fn from_logits(logits: Vec<f64>) -> Self {
        SimplexWeights { logits }
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn weights(&self) -> Vec<f64> {
        softmax(&self.logits)
    }
}

/// Convex combination `sum_l p_l y_l` of the member outputs.
pub fn ensemble_combine(ys: &[Vec<f64>], weights: &SimplexWeights) -> Result<Vec<f64>> {
    if ys.len() != weights.len() {
        return Err(Error::Shape {
            what: "ensemble member outputs",
            expected: weights.len(),
            got: ys.len(),
        });
    }
    let n = ys.first().map_or(0, Vec::len);
    let p = weights.weights();
    let mut out = vec![0.0; n];
    for (yl, &pl) in ys.iter().zip(p.iter()) {
        if yl.len() != n {
            return Err(Error::Shape {
                what: "ensemble member output",
                expected: n,
                got: yl.len(),
            });
        }
        for (o, &v) in out.iter_mut().zip(yl.iter()) {
            *o += pl * v;
        }
    }
    Ok(out)
}

/// The quantum layer: one depth-L re-uploading circuit, or L depth-1
/// circuits combined by simplex weights.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumLayerVariant {
    Reference {
        config: AnsatzConfig,
        theta: Vec<f64>,
    },
    Ensemble {
        /// Shared member circuit family; depth is 1.
        member_config: AnsatzConfig,
        /// One parameter vector of length 2n per member.
        thetas: Vec<Vec<f64>>,
        weights: SimplexWeights,
    },
}

/// Forward values needed by the quantum backward pass.
#[derive(Clone, Debug)]
pub struct QuantumCache {
    input: Vec<f64>,
    member_outputs: Vec<Vec<f64>>,
}

/// Gradients produced by the quantum backward pass.
#[derive(Clone, Debug)]
pub struct QuantumGrads {
    pub input: Vec<f64>,
    /// One entry per circuit (a single entry for the reference variant).
    pub thetas: Vec<Vec<f64>>,
    /// Empty for the reference variant.
    pub logits: Vec<f64>,
}

impl QuantumLayerVariant {
    pub fn n_qubits(&self) -> usize {
        match self {
            QuantumLayerVariant::Reference { config, .. } => config.n_qubits,
            QuantumLayerVariant::Ensemble { member_config, .. } => member_config.n_qubits,
        }
    }

    /// Number of circuits evaluated per forward pass.
    pub fn member_count(&self) -> usize {
        match self {
            QuantumLayerVariant::Reference { .. } => 1,
            QuantumLayerVariant::Ensemble { thetas, .. } => thetas.len(),
        }
    }

    /// Simplex weights of the ensemble, `None` for the reference variant.
    pub fn simplex_weights(&self) -> Option<Vec<f64>> {
        match self {
            QuantumLayerVariant::Reference { .. } => None,
            QuantumLayerVariant::Ensemble { weights, .. } => Some(weights.weights()),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, QuantumCache)> {
        let (output, member_outputs) = match self {
            QuantumLayerVariant::Reference { config, theta } => {
                let y = crate::circuits::run_reference_circuit(config, theta, x)?;
                (y.clone(), vec![y])
            }
            QuantumLayerVariant::Ensemble {
                member_config,
                thetas,
                weights,
            } => {
                let mut ys = Vec::with_capacity(thetas.len());
                for theta in thetas {
                    ys.push(crate::circuits::run_depth1_circuit(
                        member_config,
                        theta,
                        x,
                    )?);
                }
                (ensemble_combine(&ys, weights)?, ys)
            }
        };
        let cache = QuantumCache {
            input: x.to_vec(),
            member_outputs,
        };
        Ok((output, cache))
    }

    pub fn backward(&self, cache: &QuantumCache, upstream: &[f64]) -> Result<QuantumGrads> {
        let n = self.n_qubits();
        if upstream.len() != n {
            return Err(Error::Shape {
                what: "quantum layer upstream gradient",
                expected: n,
                got: upstream.len(),
            });
        }
        match self {
            QuantumLayerVariant::Reference { config, theta } => {
                let jac = quantum_jacobians(config, theta, &cache.input)?;
                let mut grad_theta = vec![0.0; theta.len()];
                for (k, g) in grad_theta.iter_mut().enumerate() {
                    *g = (0..n).map(|o| upstream[o] * jac.d_theta[(o, k)]).sum();
                }
                let mut grad_input = vec![0.0; n];
                for (j, g) in grad_input.iter_mut().enumerate() {
                    *g = (0..n).map(|o| upstream[o] * jac.d_input[(o, j)]).sum();
                }
                Ok(QuantumGrads {
                    input: grad_input,
                    thetas: vec![grad_theta],
                    logits: Vec::new(),
                })
            }
            QuantumLayerVariant::Ensemble {
                member_config,
                thetas,
                weights,
            } => {
                let depth1 = member_config.with_depth(1);
                let p = weights.weights();
                // per-member upstream projections drive the logit gradient
                let s: Vec<f64> = cache
                    .member_outputs
                    .iter()
                    .map(|y| y.iter().zip(upstream).map(|(a, b)| a * b).sum())
                    .collect();
                let s_bar: f64 = s.iter().zip(p.iter()).map(|(si, pi)| si * pi).sum();
                let logits: Vec<f64> = s
                    .iter()
                    .zip(p.iter())
                    .map(|(si, pi)| pi * (si - s_bar))
                    .collect();

                let mut grad_input = vec![0.0; n];
                let mut grad_thetas = Vec::with_capacity(thetas.len());
                for (theta, &pl) in thetas.iter().zip(p.iter()) {
                    let jac = quantum_jacobians(&depth1, theta, &cache.input)?;
                    let mut grad_theta = vec![0.0; theta.len()];
                    for (k, g) in grad_theta.iter_mut().enumerate() {
                        *g = pl
                            * (0..n)
                                .map(|o| upstream[o] * jac.d_theta[(o, k)])
                                .sum::<f64>();
                    }
                    grad_thetas.push(grad_theta);
                    for (j, g) in grad_input.iter_mut().enumerate() {
                        *g += pl
                            * (0..n)
                                .map(|o| upstream[o] * jac.d_input[(o, j)])
                                .sum::<f64>();
                    }
                }
                Ok(QuantumGrads {
                    input: grad_input,
                    thetas: grad_thetas,
                    logits,
                })
            }
        }
    }
}

/// Which quantum layer a model uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantKind {
    Reference,
    Ensemble,
}

/// Architecture of a hybrid model. `ansatz.depth` is the reference circuit
/// depth and, equally, the ensemble member count.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub classes: usize,
    pub ansatz: AnsatzConfig,
    pub variant: VariantKind,
    /// Hidden widths of extra pre-quantum dense layers (usually empty).
    pub pre_hidden: Vec<usize>,
    /// Hidden widths of extra post-quantum dense layers (usually empty).
    pub post_hidden: Vec<usize>,
}

impl ModelConfig {
    pub fn new(
        input_dim: usize,
        classes: usize,
        ansatz: AnsatzConfig,
        variant: VariantKind,
    ) -> Self {
        ModelConfig {
            input_dim,
            classes,
            ansatz,
            variant,
            pre_hidden: Vec::new(),
            post_hidden: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config(alloc::string::String::from(
                "input dimension must be positive",
            )));
        }
        if self.classes < 2 {
            return Err(Error::Config(alloc::string::String::from(
                "need at least two output classes",
            )));
        }
        if self
            .pre_hidden
            .iter()
            .chain(&self.post_hidden)
            .any(|&w| w == 0)
        {
            return Err(Error::Config(alloc::string::String::from(
                "hidden layer widths must be positive",
            )));
        }
        // re-validate the ansatz in case the config was built literally
        AnsatzConfig::new(
            self.ansatz.n_qubits,
            self.ansatz.depth,
            self.ansatz.topology,
            self.ansatz.observable,
        )?;
        Ok(())
    }
}

/// Dense input stack, quantum layer, dense output stack, with every
/// trainable parameter owned by the model.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridModel {
    pub config: ModelConfig,
    pub pre: Vec<DenseLayer>,
    pub quantum: QuantumLayerVariant,
    pub post: Vec<DenseLayer>,
}

struct Trace {
    pre: Vec<DenseCache>,
    quantum: QuantumCache,
    post: Vec<DenseCache>,
    output: Vec<f64>,
}

impl HybridModel {
    /// Builds a model with freshly drawn parameters. Classical weights come
    /// from one seed stream, quantum angles (uniform in [0, 2pi)) from
    /// another, so repetitions re-draw both.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let nq = config.ansatz.n_qubits;
        let depth = config.ansatz.depth;
        let mut wrng = substream(seed, STREAM_WEIGHTS);
        let mut trng = substream(seed, STREAM_THETA);

        let mut pre = Vec::new();
        let mut in_dim = config.input_dim;
        for &width in config.pre_hidden.iter().chain(core::iter::once(&nq)) {
            pre.push(DenseLayer::init_uniform(
                in_dim,
                width,
                Activation::Relu,
                &mut wrng,
            ));
            in_dim = width;
        }

        let mut post = Vec::new();
        let mut dim = nq;
        for &width in &config.post_hidden {
            post.push(DenseLayer::init_uniform(
                dim,
                width,
                Activation::Relu,
                &mut wrng,
            ));
            dim = width;
        }
        post.push(DenseLayer::init_uniform(
            dim,
            config.classes,
            Activation::Softmax,
            &mut wrng,
        ));

        let quantum = match config.variant {
            VariantKind::Reference => QuantumLayerVariant::Reference {
                config: config.ansatz,
                theta: (0..config.ansatz.param_count())
                    .map(|_| trng.gen_range(0.0..TAU))
                    .collect(),
            },
            VariantKind::Ensemble => {
                let member_config = config.ansatz.with_depth(1);
                let thetas = (0..depth)
                    .map(|_| {
                        (0..member_config.param_count())
                            .map(|_| trng.gen_range(0.0..TAU))
                            .collect()
                    })
                    .collect();
                QuantumLayerVariant::Ensemble {
                    member_config,
                    thetas,
                    weights: SimplexWeights::uniform(depth),
                }
            }
        };

        Ok(HybridModel {
            config: config.clone(),
            pre,
            quantum,
            post,
        })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x)?.output)
    }

    fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        let mut pre_caches = Vec::with_capacity(self.pre.len());
        let mut cur = x.to_vec();
        for layer in &self.pre {
            let (out, cache) = layer.forward(&cur)?;
            pre_caches.push(cache);
            cur = out;
        }
        let (qout, qcache) = self.quantum.forward(&cur)?;
        cur = qout;
        let mut post_caches = Vec::with_capacity(self.post.len());
        for layer in &self.post {
            let (out, cache) = layer.forward(&cur)?;
            post_caches.push(cache);
            cur = out;
        }
        Ok(Trace {
            pre: pre_caches,
            quantum: qcache,
            post: post_caches,
            output: cur,
        })
    }

    /// Loss and the flat gradient vector (aligned with [`Self::flat_params`])
    /// for one sample.
    pub fn loss_grads(&self, x: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
        let trace = self.forward_trace(x)?;
        let (loss, mut upstream) = mse_loss(&trace.output, target)?;

        let mut post_grads = Vec::with_capacity(self.post.len());
        for (layer, cache) in self.post.iter().zip(&trace.post).rev() {
            let (gx, gw, gb) = layer.backward(cache, &upstream)?;
            post_grads.push((gw, gb));
            upstream = gx;
        }
        post_grads.reverse();

        let qgrads = self.quantum.backward(&trace.quantum, &upstream)?;
        upstream = qgrads.input.clone();

        let mut pre_grads = Vec::with_capacity(self.pre.len());
        for (layer, cache) in self.pre.iter().zip(&trace.pre).rev() {
            let (gx, gw, gb) = layer.backward(cache, &upstream)?;
            pre_grads.push((gw, gb));
            upstream = gx;
        }
        pre_grads.reverse();

        let mut flat = Vec::with_capacity(self.param_count());
        for (gw, gb) in &pre_grads {
            flat.extend_from_slice(gw.as_slice());
            flat.extend_from_slice(gb);
        }
        for gt in &qgrads.thetas {
            flat.extend_from_slice(gt);
        }
        flat.extend_from_slice(&qgrads.logits);
        for (gw, gb) in &post_grads {
            flat.extend_from_slice(gw.as_slice());
            flat.extend_from_slice(gb);
        }
        Ok((loss, flat))
    }

    pub fn param_count(&self) -> usize {
        self.flat_params().len()
    }

    /// All trainable parameters in canonical order: pre dense layers
    /// (weights row-major, then bias), quantum angles circuit by circuit,
    /// ensemble logits, post dense layers.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for layer in &self.pre {
            flat.extend_from_slice(layer.weights.as_slice());
            flat.extend_from_slice(&layer.bias);
        }
        match &self.quantum {
            QuantumLayerVariant::Reference { theta, .. } => flat.extend_from_slice(theta),
            QuantumLayerVariant::Ensemble {
                thetas, weights, ..
            } => {
                for t in thetas {
                    flat.extend_from_slice(t);
                }
                flat.extend_from_slice(weights.logits());
            }
        }
        for layer in &self.post {
            flat.extend_from_slice(layer.weights.as_slice());
            flat.extend_from_slice(&layer.bias);
        }
        flat
    }

    /// Writes a flat parameter vector (from [`Self::flat_params`]) back into
    /// the model.
    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.param_count();
        if flat.len() != expected {
            return Err(Error::Shape {
                what: "flat parameter vector",
                expected,
                got: flat.len(),
            });
        }
        let mut pos = 0;
        let mut take = |len: usize, flat: &[f64]| {
            let s = &flat[pos..pos + len];
            pos += len;
            s.to_vec()
        };
        for layer in &mut self.pre {
            let w = take(layer.weights.as_slice().len(), flat);
            layer.weights.as_mut_slice().copy_from_slice(&w);
            layer.bias = take(layer.bias.len(), flat);
        }
        match &mut self.quantum {
            QuantumLayerVariant::Reference { theta, .. } => {
                *theta = take(theta.len(), flat);
            }
            QuantumLayerVariant::Ensemble {
                thetas, weights, ..
            } => {
                for t in thetas.iter_mut() {
                    *t = take(t.len(), flat);
                }
                let logits = take(weights.len(), flat);
                *weights = SimplexWeights::from_logits(logits);
            }
        }
        for layer in &mut self.post {
            let w = take(layer.weights.as_slice().len(), flat);
            layer.weights.as_mut_slice().copy_from_slice(&w);
            layer.bias = take(layer.bias.len(), flat);
        }
        debug_assert_eq!(pos, flat.len());
        Ok(())
    }

    /// Named index ranges of the flat parameter vector, per parameter class.
    pub fn param_classes(&self) -> Vec<(&'static str, core::ops::Range<usize>)> {
        let pre_len: usize = self
            .pre
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum();
        let (theta_len, logit_len) = match &self.quantum {
            QuantumLayerVariant::Reference { theta, .. } => (theta.len(), 0),
            QuantumLayerVariant::Ensemble {
                thetas, weights, ..
            } => (thetas.iter().map(Vec::len).sum(), weights.len()),
        };
        let post_len: usize = self
            .post
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum();
        let mut classes = Vec::new();
        let mut pos = 0;
        for (name, len) in [
            ("pre_dense", pre_len),
            ("quantum_theta", theta_len),
            ("ensemble_logits", logit_len),
            ("post_dense", post_len),
        ] {
            if len > 0 {
                classes.push((name, pos..pos + len));
            }
            pos += len;
        }
        classes
    }
}

/// Adam hyperparameters. Defaults: lr 0.001, beta1 0.9, beta2 0.999,
/// epsilon 1e-8.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamHyper {
            learning_rate,
            ..AdamHyper::default()
        }
    }
}

/// First/second moment accumulators and step counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub hyper: AdamHyper,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, hyper: AdamHyper) -> Self {
        AdamState {
            hyper,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != state.m.len() {
        return Err(Error::Shape {
            what: "optimizer parameter vector",
            expected: state.m.len(),
            got: if params.len() != state.m.len() {
                params.len()
            } else {
                grads.len()
            },
        });
    }
    state.t += 1;
    let h = state.hyper;
    let bc1 = 1.0 - h.beta1.powi(state.t as i32);
    let bc2 = 1.0 - h.beta2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
        state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= h.learning_rate * m_hat / (v_hat.sqrt() + h.epsilon);
    }
    Ok(())
}

/// Loss/accuracy pair recorded after each epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
}

/// Index of the largest component; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Fraction of samples where the predicted class matches the one-hot label.
pub fn evaluate_accuracy(
    model: &HybridModel,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::Config(alloc::string::String::from(
            "cannot evaluate accuracy on an empty set",
        )));
    }
    if inputs.len() != targets.len() {
        return Err(Error::Shape {
            what: "evaluation labels",
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    let mut correct = 0;
    for (x, t) in inputs.iter().zip(targets) {
        let out = model.forward(x)?;
        if argmax(&out) == argmax(t) {
            correct += 1;
        }
    }
    Ok(correct as f64 / inputs.len() as f64)
}

/// Incremental mini-batch trainer. Owns the optimizer state and the shuffle
/// stream so callers can run one epoch at a time (for timing or per-step
/// inspection) while keeping results identical to [`train`].
pub struct TrainSession<'m> {
    model: &'m mut HybridModel,
    adam: AdamState,
    shuffle_rng: ChaCha8Rng,
}

impl<'m> TrainSession<'m> {
    pub fn new(model: &'m mut HybridModel, hyper: AdamHyper, seed: u64) -> Self {
        let adam = AdamState::new(model.param_count(), hyper);
        TrainSession {
            model,
            adam,
            shuffle_rng: substream(seed, STREAM_SHUFFLE),
        }
    }

    pub fn model(&self) -> &HybridModel {
        self.model
    }

    /// Runs one epoch of mini-batch Adam and returns the epoch training loss
    /// (mean over samples of the pre-update batch losses).
    pub fn run_epoch(
        &mut self,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
        batch_size: usize,
    ) -> Result<f64> {
        self.run_epoch_observed(inputs, targets, batch_size, &mut |_| {})
    }

    /// As [`Self::run_epoch`], invoking `observer` after every optimizer step.
    pub fn run_epoch_observed(
        &mut self,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
        batch_size: usize,
        observer: &mut dyn FnMut(&HybridModel),
    ) -> Result<f64> {
        if inputs.is_empty() {
            return Err(Error::Config(alloc::string::String::from(
                "cannot train on an empty dataset",
            )));
        }
        if inputs.len() != targets.len() {
            return Err(Error::Shape {
                what: "training labels",
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        if batch_size == 0 {
            return Err(Error::Config(alloc::string::String::from(
                "batch size must be positive",
            )));
        }
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        order.shuffle(&mut self.shuffle_rng);

        let mut params = self.model.flat_params();
        let mut loss_sum = 0.0;
        for batch in order.chunks(batch_size) {
            let mut grad_acc = vec![0.0; params.len()];
            for &i in batch {
                let (loss, grads) = self.model.loss_grads(&inputs[i], &targets[i])?;
                loss_sum += loss;
                for (acc, g) in grad_acc.iter_mut().zip(&grads) {
                    *acc += g;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grad_acc {
                *g *= scale;
            }
            adam_step(&mut self.adam, &mut params, &grad_acc)?;
            self.model.set_flat_params(&params)?;
            observer(self.model);
        }
        Ok(loss_sum / inputs.len() as f64)
    }
}

/// Trains for `epochs` epochs and returns the learning curve. Deterministic
/// given the seed: shuffling comes from a dedicated seed stream, and batch
/// gradients are reduced in a fixed order.
#[allow(clippy::too_many_arguments)]
pub fn train(
    model: &mut HybridModel,
    train_inputs: &[Vec<f64>],
    train_targets: &[Vec<f64>],
    test_inputs: &[Vec<f64>],
    test_targets: &[Vec<f64>],
    epochs: usize,
    batch_size: usize,
    hyper: AdamHyper,
    seed: u64,
) -> Result<Vec<EpochRecord>> {
    let mut session = TrainSession::new(model, hyper, seed);
    let mut records = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        let train_loss = session.run_epoch(train_inputs, train_targets, batch_size)?;
        let test_accuracy = evaluate_accuracy(session.model(), test_inputs, test_targets)?;
        records.push(EpochRecord {
            epoch,
            train_loss,
            test_accuracy,
        });
    }
    Ok(records)
}
