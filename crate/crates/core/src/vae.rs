//! AE and VAE model assembly, loss functions, reparameterized sampling,
//! training loop, and deterministic encoding.
//!
//! The encoder pyramid is fixed to `n -> n/2 -> n/4` with ReLU activations,
//! followed by identity-activation mean and log-variance heads of width `ls`
//! (`ls < n/4`); the decoder mirrors it (`ls -> n/4 -> n/2 -> n`) with a
//! sigmoid output layer. `sigma` denotes the log variance throughout, so the
//! sampling scale is `exp(sigma/2)` and the KL term uses `exp(sigma)`.
//!
//! Training minimizes `beta * L_KL + L_MSE` (reconstruction error summed over
//! the vector, averaged over the batch) with Adam. Everything is seeded:
//! weight init, the train/validation split, epoch shuffles, and the one
//! noise draw per example per epoch. Validation losses are computed with
//! zero noise so they are a pure function of the weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::{
    backward, forward, Activation, AdamHyper, AdamState, DenseLayer, GradientTape,
};
use crate::rng::SplitMix64;
use crate::sampling::LandscapeVector;

/// Latent feature vector produced by [`encode`].
pub type LatentVector = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Ae,
    Vae,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ae => "ae",
            ModelKind::Vae => "vae",
        }
    }

    pub fn from_str(s: &str) -> Result<Self> {
        match s {
            "ae" => Ok(ModelKind::Ae),
            "vae" => Ok(ModelKind::Vae),
            other => Err(Error::InvalidArgument {
                context: "model kind",
                message: format!("expected 'ae' or 'vae', got {other:?}"),
            }),
        }
    }
}

/// Losses recorded after each training epoch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_vae: f64,
    pub train_mse: f64,
    pub val_vae: f64,
    pub val_mse: f64,
    pub val_kl: f64,
}

/// Training provenance stored with the weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs: usize,
    pub dataset_fingerprint: u64,
    pub final_train_mse: f64,
    pub history: Vec<EpochRecord>,
}

impl TrainMeta {
    pub fn empty() -> Self {
        TrainMeta {
            seed: 0,
            epochs: 0,
            dataset_fingerprint: 0,
            final_train_mse: f64::NAN,
            history: Vec::new(),
        }
    }
}

/// Architecture descriptor plus all dense-layer parameters of an AE or VAE.
#[derive(Debug, Clone)]
pub struct ModelWeights {
    pub kind: ModelKind,
    pub n: usize,
    pub ls: usize,
    /// `n -> n/2 -> n/4`, ReLU
    pub encoder: Vec<DenseLayer>,
    /// `n/4 -> ls`, identity; the bottleneck layer for an AE
    pub mu_head: DenseLayer,
    /// `n/4 -> ls`, identity; present only for a VAE
    pub sigma_head: Option<DenseLayer>,
    /// `ls -> n/4 -> n/2 -> n`, ReLU with sigmoid output
    pub decoder: Vec<DenseLayer>,
    /// KL weight used at training time
    pub kl_weight: f64,
    pub meta: TrainMeta,
}

impl ModelWeights {
    /// Fresh seeded model with the fixed layer pyramid.
    pub fn init(kind: ModelKind, n: usize, ls: usize, kl_weight: f64, seed: u64) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidArgument {
                context: "ModelWeights::init",
                message: format!("input size {n} too small for the n/2, n/4 pyramid"),
            });
        }
        if ls == 0 || ls >= n / 4 {
            return Err(Error::InvalidArgument {
                context: "ModelWeights::init",
                message: format!("latent size must satisfy 0 < ls < n/4 (ls={ls}, n={n})"),
            });
        }
        let (h1, h2) = (n / 2, n / 4);
        let mut rng = SplitMix64::new(seed);
        let encoder = vec![
            DenseLayer::init(n, h1, Activation::Relu, &mut rng),
            DenseLayer::init(h1, h2, Activation::Relu, &mut rng),
        ];
        let mu_head = DenseLayer::init(h2, ls, Activation::Identity, &mut rng);
        let sigma_head = match kind {
            ModelKind::Vae => Some(DenseLayer::init(h2, ls, Activation::Identity, &mut rng)),
            ModelKind::Ae => None,
        };
        let decoder = vec![
            DenseLayer::init(ls, h2, Activation::Relu, &mut rng),
            DenseLayer::init(h2, h1, Activation::Relu, &mut rng),
            DenseLayer::init(h1, n, Activation::Sigmoid, &mut rng),
        ];
        Ok(ModelWeights {
            kind,
            n,
            ls,
            encoder,
            mu_head,
            sigma_head,
            decoder,
            kl_weight,
            meta: TrainMeta::empty(),
        })
    }

    /// All layers in serialization order.
    pub fn layers(&self) -> Vec<&DenseLayer> {
        let mut out: Vec<&DenseLayer> = self.encoder.iter().collect();
        out.push(&self.mu_head);
        if let Some(s) = &self.sigma_head {
            out.push(s);
        }
        out.extend(self.decoder.iter());
        out
    }

    /// Mutable view of all layers, in the same order as [`Self::layers`].
    pub fn layers_mut(&mut self) -> Vec<&mut DenseLayer> {
        let mut out: Vec<&mut DenseLayer> = self.encoder.iter_mut().collect();
        out.push(&mut self.mu_head);
        if let Some(s) = self.sigma_head.as_mut() {
            out.push(s);
        }
        out.extend(self.decoder.iter_mut());
        out
    }
}

/// Per-tensor gradients of the combined objective for one example, in
/// [`ModelWeights::layers`] order with the weight tensor before the bias of
/// each layer, plus the losses observed with the given noise.
#[derive(Debug, Clone)]
pub struct LossGradients {
    pub tensors: Vec<Vec<f64>>,
    pub loss_vae: f64,
    pub loss_mse: f64,
}

/// Exact reverse-mode gradients of `beta * L_KL + L_MSE` for one example,
/// differentiating through the reparameterized sampling path.
pub fn loss_gradients(
    model: &ModelWeights,
    x: &LandscapeVector,
    eps: &[f64],
) -> Result<LossGradients> {
    let (grads, loss_vae, loss_mse) = example_gradients(model, x, eps)?;
    let tensors = grads.flat().iter().map(|t| t.to_vec()).collect();
    Ok(LossGradients { tensors, loss_vae, loss_mse })
}

/// Training hyperparameters. `validation_fraction` of the (shuffled) dataset
/// is held out; with a zero fraction validation metrics fall back to the
/// training set.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub kl_weight: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            kl_weight: 0.001,
            lr: 1e-3,
            epochs: 100,
            batch_size: 32,
            seed: 0,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.kl_weight < 0.0 {
            return Err(Error::InvalidArgument {
                context: "TrainConfig",
                message: "KL weight must be non-negative".into(),
            });
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidArgument {
                context: "TrainConfig",
                message: "batch size and epochs must be at least 1".into(),
            });
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidArgument {
                context: "TrainConfig",
                message: "validation fraction must lie in [0, 1)".into(),
            });
        }
        Ok(())
    }
}

/// KL divergence of the encoded Gaussian against the unit normal:
/// `0.5 * sum(exp(sigma) - (1 + sigma) + mu^2)`, non-negative.
pub fn loss_kl(mu: &[f64], sigma: &[f64]) -> f64 {
    mu.iter()
        .zip(sigma)
        .map(|(&m, &s)| s.exp() - (1.0 + s) + m * m)
        .sum::<f64>()
        * 0.5
}

/// Squared reconstruction error summed over the vector.
pub fn loss_mse(x: &[f64], xhat: &[f64]) -> Result<f64> {
    if x.len() != xhat.len() {
        return Err(Error::DimensionMismatch {
            context: "loss_mse",
            expected: x.len(),
            actual: xhat.len(),
        });
    }
    Ok(x.iter().zip(xhat).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Combined objective `beta * L_KL + L_MSE`.
pub fn loss_vae(x: &[f64], xhat: &[f64], mu: &[f64], sigma: &[f64], beta: f64) -> Result<f64> {
    Ok(beta * loss_kl(mu, sigma) + loss_mse(x, xhat)?)
}

/// One stochastic forward pass: `z = mu + exp(sigma/2) * eps`, decoded to
/// `xhat`. Returns `(xhat, mu, sigma)`.
pub fn vae_forward(
    model: &ModelWeights,
    x: &LandscapeVector,
    eps: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if model.kind != ModelKind::Vae {
        return Err(Error::InvalidArgument {
            context: "vae_forward",
            message: "model is not a VAE".into(),
        });
    }
    if x.len() != model.n {
        return Err(Error::DimensionMismatch {
            context: "vae_forward input",
            expected: model.n,
            actual: x.len(),
        });
    }
    if eps.len() != model.ls {
        return Err(Error::DimensionMismatch {
            context: "vae_forward noise",
            expected: model.ls,
            actual: eps.len(),
        });
    }
    let (trunk, _) = forward(&model.encoder, &x.values)?;
    let (mu, _) = forward(std::slice::from_ref(&model.mu_head), &trunk)?;
    let (sigma, _) = forward(
        std::slice::from_ref(model.sigma_head.as_ref().expect("vae has a sigma head")),
        &trunk,
    )?;
    let z: Vec<f64> = (0..model.ls)
        .map(|i| mu[i] + (sigma[i] / 2.0).exp() * eps[i])
        .collect();
    let (xhat, _) = forward(&model.decoder, &z)?;
    Ok((xhat, mu, sigma))
}

/// Deterministic feature vector: the encoder mean for a VAE, the bottleneck
/// activation for an AE. No sampling is involved.
pub fn encode(model: &ModelWeights, x: &LandscapeVector) -> Result<LatentVector> {
    if x.len() != model.n {
        return Err(Error::DimensionMismatch {
            context: "encode",
            expected: model.n,
            actual: x.len(),
        });
    }
    let (trunk, _) = forward(&model.encoder, &x.values)?;
    let (mu, _) = forward(std::slice::from_ref(&model.mu_head), &trunk)?;
    Ok(mu)
}

/// Decode a latent vector to a landscape; entries lie in (0,1) via the
/// sigmoid output layer.
pub fn decode(model: &ModelWeights, z: &[f64]) -> Result<LandscapeVector> {
    if z.len() != model.ls {
        return Err(Error::DimensionMismatch {
            context: "decode",
            expected: model.ls,
            actual: z.len(),
        });
    }
    let (xhat, _) = forward(&model.decoder, z)?;
    Ok(LandscapeVector { values: xhat, source_id: None })
}

/// Encode then decode with zero noise; returns the reconstruction and its
/// summed squared error.
pub fn reconstruct(model: &ModelWeights, x: &LandscapeVector) -> Result<(LandscapeVector, f64)> {
    let z = encode(model, x)?;
    let xhat = decode(model, &z)?;
    let mse = loss_mse(&x.values, &xhat.values)?;
    Ok((xhat, mse))
}

/// Per-example loss with fixed noise; the quantity the trainer minimizes in
/// expectation. For an AE the noise is ignored and the KL term is absent.
pub fn example_loss(model: &ModelWeights, x: &LandscapeVector, eps: &[f64]) -> Result<f64> {
    match model.kind {
        ModelKind::Vae => {
            let (xhat, mu, sigma) = vae_forward(model, x, eps)?;
            loss_vae(&x.values, &xhat, &mu, &sigma, model.kl_weight)
        }
        ModelKind::Ae => {
            let (_, mse) = reconstruct(model, x)?;
            Ok(mse)
        }
    }
}

/// Gradients for every tensor of the model, in serialization order.
struct ModelGrads {
    enc: GradientTape,
    mu: GradientTape,
    sigma: Option<GradientTape>,
    dec: GradientTape,
}

impl ModelGrads {
    fn zeros(model: &ModelWeights) -> Self {
        ModelGrads {
            enc: GradientTape::zeros_like(&model.encoder),
            mu: GradientTape::zeros_like(std::slice::from_ref(&model.mu_head)),
            sigma: model
                .sigma_head
                .as_ref()
                .map(|s| GradientTape::zeros_like(std::slice::from_ref(s))),
            dec: GradientTape::zeros_like(&model.decoder),
        }
    }

    fn accumulate(&mut self, other: &ModelGrads) {
        self.enc.accumulate(&other.enc);
        self.mu.accumulate(&other.mu);
        if let (Some(a), Some(b)) = (self.sigma.as_mut(), other.sigma.as_ref()) {
            a.accumulate(b);
        }
        self.dec.accumulate(&other.dec);
    }

    fn scale(&mut self, f: f64) {
        self.enc.scale(f);
        self.mu.scale(f);
        if let Some(s) = self.sigma.as_mut() {
            s.scale(f);
        }
        self.dec.scale(f);
    }

    fn flat(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for i in 0..self.enc.dw.len() {
            out.push(&self.enc.dw[i]);
            out.push(&self.enc.db[i]);
        }
        out.push(&self.mu.dw[0]);
        out.push(&self.mu.db[0]);
        if let Some(s) = &self.sigma {
            out.push(&s.dw[0]);
            out.push(&s.db[0]);
        }
        for i in 0..self.dec.dw.len() {
            out.push(&self.dec.dw[i]);
            out.push(&self.dec.db[i]);
        }
        out
    }
}

fn flat_params(model: &mut ModelWeights) -> Vec<&mut [f64]> {
    let mut out: Vec<&mut [f64]> = Vec::new();
    for layer in model.encoder.iter_mut() {
        out.push(&mut layer.w);
        out.push(&mut layer.b);
    }
    out.push(&mut model.mu_head.w);
    out.push(&mut model.mu_head.b);
    if let Some(s) = model.sigma_head.as_mut() {
        out.push(&mut s.w);
        out.push(&mut s.b);
    }
    for layer in model.decoder.iter_mut() {
        out.push(&mut layer.w);
        out.push(&mut layer.b);
    }
    out
}

/// Forward + backward for one example. Returns the gradients and the
/// `(loss_vae, loss_mse)` pair observed with the given noise.
fn example_gradients(
    model: &ModelWeights,
    x: &LandscapeVector,
    eps: &[f64],
) -> Result<(ModelGrads, f64, f64)> {
    let beta = model.kl_weight;
    let (trunk, enc_cache) = forward(&model.encoder, &x.values)?;
    let mu_stack = std::slice::from_ref(&model.mu_head);
    let (mu, mu_cache) = forward(mu_stack, &trunk)?;

    let (z, sigma, sig_cache) = match (&model.kind, &model.sigma_head) {
        (ModelKind::Vae, Some(head)) => {
            let stack = std::slice::from_ref(head);
            let (sigma, cache) = forward(stack, &trunk)?;
            let z = (0..model.ls)
                .map(|i| mu[i] + (sigma[i] / 2.0).exp() * eps[i])
                .collect();
            (z, sigma, Some(cache))
        }
        _ => (mu.clone(), vec![0.0; model.ls], None),
    };

    let (xhat, dec_cache) = forward(&model.decoder, &z)?;
    let mse = loss_mse(&x.values, &xhat)?;
    let kl = match model.kind {
        ModelKind::Vae => loss_kl(&mu, &sigma),
        ModelKind::Ae => 0.0,
    };
    let total = beta * kl + mse;

    let dxhat: Vec<f64> = xhat.iter().zip(&x.values).map(|(h, v)| 2.0 * (h - v)).collect();
    let dec_tape = backward(&model.decoder, &dec_cache, &dxhat)?;
    let dz = &dec_tape.input_grad;

    let (mu_tape, sigma_tape, trunk_grad) = match (&model.kind, &model.sigma_head, sig_cache) {
        (ModelKind::Vae, Some(head), Some(cache)) => {
            let dmu: Vec<f64> = (0..model.ls).map(|i| dz[i] + beta * mu[i]).collect();
            let dsigma: Vec<f64> = (0..model.ls)
                .map(|i| {
                    dz[i] * eps[i] * 0.5 * (sigma[i] / 2.0).exp()
                        + beta * 0.5 * (sigma[i].exp() - 1.0)
                })
                .collect();
            let mu_tape = backward(mu_stack, &mu_cache, &dmu)?;
            let sigma_tape = backward(std::slice::from_ref(head), &cache, &dsigma)?;
            let trunk_grad: Vec<f64> = mu_tape
                .input_grad
                .iter()
                .zip(&sigma_tape.input_grad)
                .map(|(a, b)| a + b)
                .collect();
            (mu_tape, Some(sigma_tape), trunk_grad)
        }
        _ => {
            let mu_tape = backward(mu_stack, &mu_cache, dz)?;
            let trunk_grad = mu_tape.input_grad.clone();
            (mu_tape, None, trunk_grad)
        }
    };

    let enc_tape = backward(&model.encoder, &enc_cache, &trunk_grad)?;
    Ok((
        ModelGrads { enc: enc_tape, mu: mu_tape, sigma: sigma_tape, dec: dec_tape },
        total,
        mse,
    ))
}

/// Losses of a model on a slice of the dataset with zero noise.
fn evaluate_split(
    model: &ModelWeights,
    dataset: &[LandscapeVector],
    indices: &[usize],
) -> Result<(f64, f64, f64)> {
    let zero = vec![0.0; model.ls];
    let mut vae_sum = 0.0;
    let mut mse_sum = 0.0;
    let mut kl_sum = 0.0;
    for &i in indices {
        let x = &dataset[i];
        match model.kind {
            ModelKind::Vae => {
                let (xhat, mu, sigma) = vae_forward(model, x, &zero)?;
                let mse = loss_mse(&x.values, &xhat)?;
                let kl = loss_kl(&mu, &sigma);
                vae_sum += model.kl_weight * kl + mse;
                mse_sum += mse;
                kl_sum += kl;
            }
            ModelKind::Ae => {
                let (_, mse) = reconstruct(model, x)?;
                vae_sum += mse;
                mse_sum += mse;
            }
        }
    }
    let count = indices.len().max(1) as f64;
    Ok((vae_sum / count, mse_sum / count, kl_sum / count))
}

/// FNV-1a over the canonical content bytes of a landscape collection:
/// vector length, record count, then every value truncated to `f32`,
/// all little-endian. Matches the payload of the binary dataset format.
pub fn dataset_fingerprint(dataset: &[LandscapeVector]) -> u64 {
    let mut hash = crate::persistence::Fnv1a::new();
    let n = dataset.first().map_or(0, |v| v.len());
    hash.write(&(n as u64).to_le_bytes());
    hash.write(&(dataset.len() as u64).to_le_bytes());
    for record in dataset {
        for &v in &record.values {
            hash.write(&(v as f32).to_le_bytes());
        }
    }
    hash.finish()
}

/// Train a model of the given kind and latent size. Deterministic for a
/// fixed config; records per-epoch train and validation losses.
pub fn train(
    dataset: &[LandscapeVector],
    config: &TrainConfig,
    kind: ModelKind,
    ls: usize,
) -> Result<ModelWeights> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset[0].len();
    for (i, v) in dataset.iter().enumerate() {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                context: "train dataset record",
                expected: n,
                actual: dataset[i].len(),
            });
        }
    }

    let mut model = ModelWeights::init(kind, n, ls, config.kl_weight, config.seed)?;
    let mut rng = SplitMix64::new(config.seed ^ 0x7EA1_0001);

    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    rng.shuffle(&mut indices);
    let val_count = (config.validation_fraction * dataset.len() as f64).floor() as usize;
    let (train_idx, val_idx) = indices.split_at(dataset.len() - val_count);
    let mut train_order: Vec<usize> = train_idx.to_vec();
    let eval_idx: Vec<usize> = if val_idx.is_empty() { train_order.clone() } else { val_idx.to_vec() };

    let tensor_sizes: Vec<usize> = {
        let mut sizes = Vec::new();
        for l in model.layers() {
            sizes.push(l.w.len());
            sizes.push(l.b.len());
        }
        sizes
    };
    let mut adam = AdamState::new(&tensor_sizes, AdamHyper::with_lr(config.lr));

    let mut history = Vec::with_capacity(config.epochs);
    let mut final_train_mse = f64::NAN;
    for epoch in 1..=config.epochs {
        rng.shuffle(&mut train_order);
        let mut epoch_loss = 0.0;
        let mut epoch_mse = 0.0;
        for batch in train_order.chunks(config.batch_size) {
            let mut acc = ModelGrads::zeros(&model);
            for &i in batch {
                let eps: Vec<f64> = match kind {
                    ModelKind::Vae => (0..ls).map(|_| rng.normal()).collect(),
                    ModelKind::Ae => vec![0.0; ls],
                };
                let (grads, total, mse) = example_gradients(&model, &dataset[i], &eps)?;
                if !total.is_finite() {
                    return Err(Error::Divergence { context: "training loss" });
                }
                acc.accumulate(&grads);
                epoch_loss += total;
                epoch_mse += mse;
            }
            acc.scale(1.0 / batch.len() as f64);
            let grad_refs = acc.flat();
            let mut param_refs = flat_params(&mut model);
            adam.step(&mut param_refs, &grad_refs)?;
        }
        let train_count = train_order.len() as f64;
        let (val_vae, val_mse, val_kl) = evaluate_split(&model, dataset, &eval_idx)?;
        if !val_vae.is_finite() {
            return Err(Error::Divergence { context: "validation loss" });
        }
        final_train_mse = epoch_mse / train_count;
        history.push(EpochRecord {
            epoch,
            train_vae: epoch_loss / train_count,
            train_mse: final_train_mse,
            val_vae,
            val_mse,
            val_kl,
        });
    }

    model.meta = TrainMeta {
        seed: config.seed,
        epochs: config.epochs,
        dataset_fingerprint: dataset_fingerprint(dataset),
        final_train_mse,
        history,
    };
    Ok(model)
}
