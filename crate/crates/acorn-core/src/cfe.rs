//! Continual feature extractor: an MLP autoencoder trained with a combined
//! triplet-margin and reconstruction objective.
//!
//! The total loss is the sum of the two terms with unit weights. The metric
//! term is the classic triplet margin loss max(Δ_ap − Δ_an + margin, 0) on
//! encoder outputs, with Δ the plain Euclidean distance; triplets are mined
//! uniformly at random within each mini-batch, one per eligible anchor. The
//! reconstruction term is the mean squared error between the batch and its
//! decode(encode(·)) image. Both gradients flow into the encoder; the
//! reconstruction gradient additionally trains the decoder. Optimization is
//! bias-corrected Adam. Everything is implemented directly — forward,
//! backward, and the optimizer — so training is exactly reproducible.

// the numeric kernels index several slices per loop; explicit indices read
// better than zipped iterators there
#![allow(clippy::needless_range_loop)]

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative at a pre-activation value; relu uses 0 at the kink.
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

/// One affine layer, weights stored out_dim × in_dim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(spec: LayerSpec) -> Self {
        Layer {
            weights: Matrix::zeros(spec.out_dim, spec.in_dim),
            biases: vec![0.0; spec.out_dim],
            activation: spec.activation,
        }
    }

    /// Glorot-uniform init: U(±sqrt(6/(fan_in+fan_out))), zero biases.
    pub fn glorot<R: Rng>(spec: LayerSpec, rng: &mut R) -> Self {
        let bound = (6.0 / (spec.in_dim + spec.out_dim) as f64).sqrt();
        let mut layer = Layer::zeros(spec);
        for w in layer.weights.data_mut() {
            *w = bound * (2.0 * rng.random::<f64>() - 1.0);
        }
        layer
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }
}

/// Encoder/decoder weight stacks. The decoder's dimension chain is always
/// the reverse of the encoder's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderDecoderParams {
    pub encoder: Vec<Layer>,
    pub decoder: Vec<Layer>,
}

impl EncoderDecoderParams {
    /// Build an autoencoder for `input_dim` inputs. `hidden` lists the
    /// encoder layer widths in order; the last entry is the latent width.
    /// Hidden layers are relu, latent and reconstruction outputs identity.
    pub fn new<R: Rng>(input_dim: usize, hidden: &[usize], rng: &mut R) -> Result<Self> {
        if input_dim == 0 || hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::config(
                "autoencoder needs a positive input dim and at least one positive hidden width",
            ));
        }
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);

        let mut encoder = Vec::with_capacity(hidden.len());
        for w in dims.windows(2) {
            let last = encoder.len() + 1 == hidden.len();
            encoder.push(Layer::glorot(
                LayerSpec {
                    in_dim: w[0],
                    out_dim: w[1],
                    activation: if last { Activation::Identity } else { Activation::Relu },
                },
                rng,
            ));
        }
        let mut decoder = Vec::with_capacity(hidden.len());
        let rev: Vec<usize> = dims.iter().rev().copied().collect();
        for w in rev.windows(2) {
            let last = decoder.len() + 1 == hidden.len();
            decoder.push(Layer::glorot(
                LayerSpec {
                    in_dim: w[0],
                    out_dim: w[1],
                    activation: if last { Activation::Identity } else { Activation::Relu },
                },
                rng,
            ));
        }
        Ok(EncoderDecoderParams { encoder, decoder })
    }

    /// Assemble from explicit layers, enforcing that dimensions chain and
    /// that the decoder mirrors the encoder.
    pub fn from_layers(encoder: Vec<Layer>, decoder: Vec<Layer>) -> Result<Self> {
        if encoder.is_empty() || decoder.is_empty() {
            return Err(Error::config("encoder and decoder must be non-empty"));
        }
        let chain_ok = |layers: &[Layer]| layers.windows(2).all(|w| w[0].out_dim() == w[1].in_dim());
        if !chain_ok(&encoder) || !chain_ok(&decoder) {
            return Err(Error::config("layer dimensions do not chain"));
        }
        let enc_dims: Vec<usize> = std::iter::once(encoder[0].in_dim())
            .chain(encoder.iter().map(Layer::out_dim))
            .collect();
        let dec_dims: Vec<usize> = std::iter::once(decoder[0].in_dim())
            .chain(decoder.iter().map(Layer::out_dim))
            .collect();
        let mirrored: Vec<usize> = enc_dims.iter().rev().copied().collect();
        if dec_dims != mirrored {
            return Err(Error::config(format!(
                "decoder dims {dec_dims:?} do not mirror encoder dims {enc_dims:?}"
            )));
        }
        Ok(EncoderDecoderParams { encoder, decoder })
    }

    pub fn input_dim(&self) -> usize {
        self.encoder[0].in_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.last().expect("non-empty encoder").out_dim()
    }

    pub fn all_finite(&self) -> bool {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .all(|l| l.weights.all_finite() && l.biases.iter().all(|b| b.is_finite()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::data(format!("bad parameter checkpoint: {e}")))
    }
}

fn forward_layer(layer: &Layer, x: &Matrix) -> (Matrix, Matrix) {
    let n = x.rows();
    let (din, dout) = (layer.in_dim(), layer.out_dim());
    debug_assert_eq!(x.cols(), din);
    let mut pre = Matrix::zeros(n, dout);
    for r in 0..n {
        let xrow = x.row(r);
        let prow = pre.row_mut(r);
        for o in 0..dout {
            let wrow = layer.weights.row(o);
            let mut acc = layer.biases[o];
            for i in 0..din {
                acc += wrow[i] * xrow[i];
            }
            prow[o] = acc;
        }
    }
    let mut act = pre.clone();
    if layer.activation != Activation::Identity {
        for v in act.data_mut() {
            *v = layer.activation.apply(*v);
        }
    }
    (pre, act)
}

/// Per-stack forward pass keeping what backward needs: `acts[0]` is the
/// input, `acts[l+1]` the activated output of layer l, `pres[l]` its
/// pre-activation.
struct StackCache {
    acts: Vec<Matrix>,
    pres: Vec<Matrix>,
}

fn forward_stack(layers: &[Layer], x: &Matrix) -> StackCache {
    let mut acts = Vec::with_capacity(layers.len() + 1);
    let mut pres = Vec::with_capacity(layers.len());
    acts.push(x.clone());
    for layer in layers {
        let (pre, act) = forward_layer(layer, acts.last().unwrap());
        pres.push(pre);
        acts.push(act);
    }
    StackCache { acts, pres }
}

#[derive(Clone, Debug)]
pub struct LayerGrad {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Gradients {
    pub encoder: Vec<LayerGrad>,
    pub decoder: Vec<LayerGrad>,
}

impl Gradients {
    fn zeros_like(layers: &[Layer]) -> Vec<LayerGrad> {
        layers
            .iter()
            .map(|l| LayerGrad {
                weights: Matrix::zeros(l.out_dim(), l.in_dim()),
                biases: vec![0.0; l.out_dim()],
            })
            .collect()
    }
}

/// Backpropagate `d_out` through a stack; returns per-layer gradients and
/// the gradient with respect to the stack input.
fn backward_stack(layers: &[Layer], cache: &StackCache, d_out: Matrix) -> (Vec<LayerGrad>, Matrix) {
    let mut grads = Gradients::zeros_like(layers);
    let mut upstream = d_out;
    for (l, layer) in layers.iter().enumerate().rev() {
        let pre = &cache.pres[l];
        let input = &cache.acts[l];
        let n = pre.rows();
        let (din, dout) = (layer.in_dim(), layer.out_dim());

        // d_pre = upstream ⊙ act'(pre)
        let mut d_pre = upstream;
        for r in 0..n {
            let prow = pre.row(r);
            let drow = d_pre.row_mut(r);
            for o in 0..dout {
                drow[o] *= layer.activation.derivative(prow[o]);
            }
        }

        let g = &mut grads[l];
        for r in 0..n {
            let drow = d_pre.row(r);
            let xrow = input.row(r);
            for o in 0..dout {
                let dv = drow[o];
                if dv != 0.0 {
                    g.biases[o] += dv;
                    let wrow = g.weights.row_mut(o);
                    for i in 0..din {
                        wrow[i] += dv * xrow[i];
                    }
                }
            }
        }

        let mut d_in = Matrix::zeros(n, din);
        for r in 0..n {
            let drow = d_pre.row(r);
            let irow = d_in.row_mut(r);
            for o in 0..dout {
                let dv = drow[o];
                if dv != 0.0 {
                    let wrow = layer.weights.row(o);
                    for i in 0..din {
                        irow[i] += dv * wrow[i];
                    }
                }
            }
        }
        upstream = d_in;
    }
    (grads, upstream)
}

/// Inference-path forward: no pre-activation caching, activation applied
/// in place.
fn forward_infer(layers: &[Layer], x: &Matrix) -> Matrix {
    let mut cur = x.clone();
    for layer in layers {
        let n = cur.rows();
        let (din, dout) = (layer.in_dim(), layer.out_dim());
        let mut next = Matrix::zeros(n, dout);
        for r in 0..n {
            let xrow = cur.row(r);
            let orow = next.row_mut(r);
            for o in 0..dout {
                let wrow = layer.weights.row(o);
                let mut acc = layer.biases[o];
                for i in 0..din {
                    acc += wrow[i] * xrow[i];
                }
                orow[o] = layer.activation.apply(acc);
            }
        }
        cur = next;
    }
    cur
}

/// Encode rows through the encoder stack.
pub fn encode(p: &EncoderDecoderParams, x: &Matrix) -> Result<Matrix> {
    if x.cols() != p.input_dim() {
        return Err(Error::data(format!(
            "encode expects {} columns, got {}",
            p.input_dim(),
            x.cols()
        )));
    }
    Ok(forward_infer(&p.encoder, x))
}

/// Decode latent rows through the decoder stack.
pub fn decode(p: &EncoderDecoderParams, h: &Matrix) -> Result<Matrix> {
    if h.cols() != p.latent_dim() {
        return Err(Error::data(format!(
            "decode expects {} columns, got {}",
            p.latent_dim(),
            h.cols()
        )));
    }
    Ok(forward_infer(&p.decoder, h))
}

/// Mean squared error over all entries.
pub fn recon_loss(x: &Matrix, xhat: &Matrix) -> Result<f64> {
    if x.rows() != xhat.rows() || x.cols() != xhat.cols() {
        return Err(Error::data(format!(
            "reconstruction shapes differ: {}x{} vs {}x{}",
            x.rows(),
            x.cols(),
            xhat.rows(),
            xhat.cols()
        )));
    }
    let n = x.data().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = x
        .data()
        .iter()
        .zip(xhat.data())
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum();
    Ok(sum / n as f64)
}

/// Triplet margin loss for a single (anchor, positive, negative) triple with
/// plain Euclidean distances.
pub fn triplet_loss(anchor: &[f64], positive: &[f64], negative: &[f64], margin: f64) -> f64 {
    let d_ap = crate::linalg::distance(anchor, positive);
    let d_an = crate::linalg::distance(anchor, negative);
    (d_ap - d_an + margin).max(0.0)
}

/// Mined (anchor, positive, negative) triples, as positions into the batch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TripletBatch {
    pub triples: Vec<(usize, usize, usize)>,
    pub margin: f64,
}

impl TripletBatch {
    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Mine one triplet per eligible anchor: a uniformly random same-label
/// positive (≠ anchor) and a uniformly random other-label negative, both
/// from the batch. A batch lacking either pseudo-class yields an empty
/// result, which skips the metric term for the step.
pub fn mine_triplets<R: Rng>(batch_labels: &[u8], margin: f64, rng: &mut R) -> TripletBatch {
    let positives: Vec<usize> = (0..batch_labels.len()).filter(|&i| batch_labels[i] == 1).collect();
    let negatives: Vec<usize> = (0..batch_labels.len()).filter(|&i| batch_labels[i] == 0).collect();
    if positives.is_empty() || negatives.is_empty() {
        return TripletBatch {
            triples: Vec::new(),
            margin,
        };
    }
    let mut triples = Vec::with_capacity(batch_labels.len());
    for anchor in 0..batch_labels.len() {
        let (same, other) = if batch_labels[anchor] == 1 {
            (&positives, &negatives)
        } else {
            (&negatives, &positives)
        };
        if same.len() < 2 {
            continue;
        }
        // uniform over same-label rows excluding the anchor itself
        let anchor_pos = same.iter().position(|&s| s == anchor).expect("anchor in own class");
        let r = rng.random_range(0..same.len() - 1);
        let positive = same[if r >= anchor_pos { r + 1 } else { r }];
        let negative = other[rng.random_range(0..other.len())];
        triples.push((anchor, positive, negative));
    }
    TripletBatch { triples, margin }
}

/// Mean triplet loss over the mined triples and its gradient w.r.t. the
/// latent rows. Distances below 1e-12 contribute a zero direction.
fn triplet_loss_batch(h: &Matrix, batch: &TripletBatch) -> (f64, Matrix) {
    let mut d_h = Matrix::zeros(h.rows(), h.cols());
    if batch.is_empty() {
        return (0.0, d_h);
    }
    let count = batch.triples.len() as f64;
    let mut total = 0.0;
    for &(a, p, n) in &batch.triples {
        let (ha, hp, hn) = (h.row(a), h.row(p), h.row(n));
        let d_ap = crate::linalg::distance(ha, hp);
        let d_an = crate::linalg::distance(ha, hn);
        let hinge = d_ap - d_an + batch.margin;
        if hinge <= 0.0 {
            continue;
        }
        total += hinge;
        let scale = 1.0 / count;
        if d_ap > 1e-12 {
            for i in 0..h.cols() {
                let u = (ha[i] - hp[i]) / d_ap * scale;
                d_h.row_mut(a)[i] += u;
                d_h.row_mut(p)[i] -= u;
            }
        }
        if d_an > 1e-12 {
            for i in 0..h.cols() {
                let u = (ha[i] - hn[i]) / d_an * scale;
                d_h.row_mut(a)[i] -= u;
                d_h.row_mut(n)[i] += u;
            }
        }
    }
    (total / count, d_h)
}

/// Loss and gradients for one batch, without updating anything.
#[derive(Clone, Debug)]
pub struct BatchEval {
    pub metric_loss: f64,
    pub recon_loss: f64,
    pub grads: Gradients,
}

impl BatchEval {
    pub fn total(&self) -> f64 {
        self.metric_loss + self.recon_loss
    }
}

/// Evaluate the combined objective on one batch: metric loss over the given
/// triples (on encoder outputs) plus, when enabled, reconstruction loss
/// through the decoder. Gradients flow into the encoder from both terms and
/// into the decoder from the reconstruction term only.
pub fn evaluate_batch(
    p: &EncoderDecoderParams,
    x: &Matrix,
    triplets: &TripletBatch,
    use_recon: bool,
) -> Result<BatchEval> {
    if x.cols() != p.input_dim() {
        return Err(Error::data(format!(
            "batch has {} columns, expected {}",
            x.cols(),
            p.input_dim()
        )));
    }
    let enc_cache = forward_stack(&p.encoder, x);
    let h = enc_cache.acts.last().unwrap();

    let (metric, d_h_metric) = triplet_loss_batch(h, triplets);

    let (recon, dec_grads, d_h_recon) = if use_recon {
        let dec_cache = forward_stack(&p.decoder, h);
        let xhat = dec_cache.acts.last().unwrap();
        let loss = recon_loss(x, xhat)?;
        let scale = 2.0 / (x.rows() * x.cols()).max(1) as f64;
        let mut d_xhat = Matrix::zeros(x.rows(), x.cols());
        for r in 0..x.rows() {
            let (xr, hr) = (x.row(r), xhat.row(r));
            let dr = d_xhat.row_mut(r);
            for c in 0..x.cols() {
                dr[c] = scale * (hr[c] - xr[c]);
            }
        }
        let (grads, d_h) = backward_stack(&p.decoder, &dec_cache, d_xhat);
        (loss, grads, Some(d_h))
    } else {
        (0.0, Gradients::zeros_like(&p.decoder), None)
    };

    let mut d_h = d_h_metric;
    if let Some(dr) = d_h_recon {
        for (a, b) in d_h.data_mut().iter_mut().zip(dr.data()) {
            *a += b;
        }
    }
    let (enc_grads, _) = backward_stack(&p.encoder, &enc_cache, d_h);

    Ok(BatchEval {
        metric_loss: metric,
        recon_loss: recon,
        grads: Gradients {
            encoder: enc_grads,
            decoder: dec_grads,
        },
    })
}

/// Adam moments for every parameter tensor, plus the step counter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    encoder: Vec<Moments>,
    decoder: Vec<Moments>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Moments {
    w_m: Matrix,
    w_v: Matrix,
    b_m: Vec<f64>,
    b_v: Vec<f64>,
}

impl Moments {
    fn zeros(layer: &Layer) -> Self {
        Moments {
            w_m: Matrix::zeros(layer.out_dim(), layer.in_dim()),
            w_v: Matrix::zeros(layer.out_dim(), layer.in_dim()),
            b_m: vec![0.0; layer.out_dim()],
            b_v: vec![0.0; layer.out_dim()],
        }
    }
}

impl AdamState {
    pub fn new(p: &EncoderDecoderParams, learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            encoder: p.encoder.iter().map(Moments::zeros).collect(),
            decoder: p.decoder.iter().map(Moments::zeros).collect(),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_update(
    theta: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..theta.len() {
        let g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// One bias-corrected Adam step over every parameter tensor.
pub fn adam_step(p: &mut EncoderDecoderParams, grads: &Gradients, opt: &mut AdamState) {
    opt.step += 1;
    let bc1 = 1.0 - opt.beta1.powi(opt.step as i32);
    let bc2 = 1.0 - opt.beta2.powi(opt.step as i32);
    let (lr, b1, b2, eps) = (opt.learning_rate, opt.beta1, opt.beta2, opt.epsilon);
    let stacks = [
        (&mut p.encoder, &grads.encoder, &mut opt.encoder),
        (&mut p.decoder, &grads.decoder, &mut opt.decoder),
    ];
    for (layers, layer_grads, moments) in stacks {
        for ((layer, grad), mom) in layers.iter_mut().zip(layer_grads).zip(moments) {
            adam_update(
                layer.weights.data_mut(),
                grad.weights.data(),
                mom.w_m.data_mut(),
                mom.w_v.data_mut(),
                lr,
                b1,
                b2,
                eps,
                bc1,
                bc2,
            );
            adam_update(
                &mut layer.biases,
                &grad.biases,
                &mut mom.b_m,
                &mut mom.b_v,
                lr,
                b1,
                b2,
                eps,
                bc1,
                bc2,
            );
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainHyper {
    pub epochs: usize,
    pub batch_size: usize,
    pub margin: f64,
    pub use_metric_loss: bool,
    pub use_recon_loss: bool,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            epochs: 20,
            batch_size: 256,
            margin: 0.2,
            use_metric_loss: true,
            use_recon_loss: true,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if self.use_metric_loss && self.margin <= 0.0 {
            return Err(Error::config("triplet margin must be positive"));
        }
        if !self.use_metric_loss && !self.use_recon_loss {
            return Err(Error::config(
                "at least one of the metric and reconstruction losses must be enabled",
            ));
        }
        Ok(())
    }
}

/// Loss values of one optimization step, recorded before the update.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StepTrace {
    pub step: u64,
    pub metric_loss: f64,
    pub recon_loss: f64,
    pub total_loss: f64,
}

/// Train for `hyper.epochs` epochs of shuffled mini-batches.
///
/// Returns the per-step loss trace. Zero epochs return immediately with the
/// parameters untouched. A non-finite loss aborts with a diagnostic naming
/// the step — the usual cause is a runaway learning rate.
pub fn train_epochs<R1: Rng, R2: Rng>(
    p: &mut EncoderDecoderParams,
    opt: &mut AdamState,
    x: &Matrix,
    labels: &[u8],
    hyper: &TrainHyper,
    shuffle_rng: &mut R1,
    mining_rng: &mut R2,
) -> Result<Vec<StepTrace>> {
    hyper.validate()?;
    if x.rows() == 0 {
        return Err(Error::data("training data is empty"));
    }
    if labels.len() != x.rows() {
        return Err(Error::data("label count does not match training rows"));
    }

    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut trace = Vec::new();
    let mut step = 0u64;
    for _ in 0..hyper.epochs {
        order.shuffle(shuffle_rng);
        for batch in order.chunks(hyper.batch_size) {
            let xb = x.select_rows(batch);
            let lb: Vec<u8> = batch.iter().map(|&i| labels[i]).collect();
            let triplets = if hyper.use_metric_loss {
                mine_triplets(&lb, hyper.margin, mining_rng)
            } else {
                TripletBatch::default()
            };
            let eval = evaluate_batch(p, &xb, &triplets, hyper.use_recon_loss)?;
            let total = eval.total();
            if !total.is_finite() {
                return Err(Error::numeric(format!(
                    "non-finite loss at step {step} (metric {}, reconstruction {}); \
                     lower the learning rate or check the inputs",
                    eval.metric_loss, eval.recon_loss
                )));
            }
            adam_step(p, &eval.grads, opt);
            trace.push(StepTrace {
                step,
                metric_loss: eval.metric_loss,
                recon_loss: eval.recon_loss,
                total_loss: total,
            });
            step += 1;
        }
    }
    Ok(trace)
}

/// Write a loss trace as CSV with columns step, metric, reconstruction, total.
pub fn write_loss_trace_csv(path: &std::path::Path, trace: &[StepTrace]) -> Result<()> {
    let mut out = String::from("step,metric_loss,recon_loss,total_loss\n");
    for t in trace {
        out += &format!(
            "{},{:.9},{:.9},{:.9}\n",
            t.step, t.metric_loss, t.recon_loss, t.total_loss
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}
