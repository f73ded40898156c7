//! Minimal dense-network engine: forward pass, exact reverse-mode gradients,
//! and an Adam optimizer. All arithmetic is in `f64`; layers store `out x in`
//! row-major weight matrices. The ReLU subgradient at zero is fixed to 0.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the post-activation value.
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => out * (1.0 - out),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `out_dim x in_dim`, row-major
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    /// Seeded uniform initialization in `±sqrt(6/(in+out))`, zero biases.
    pub fn init(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut SplitMix64) -> Self {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let w = (0..in_dim * out_dim).map(|_| rng.uniform(-bound, bound)).collect();
        DenseLayer { in_dim, out_dim, w, b: vec![0.0; out_dim], activation }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.out_dim {
            let row = &self.w[r * self.in_dim..(r + 1) * self.in_dim];
            let z = self.b[r] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            out.push(self.activation.apply(z));
        }
    }
}

/// Post-activation values recorded by a forward pass; consumed by
/// [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[i]` is the input fed to layer `i`; one extra entry at the end
    /// holds the final output.
    values: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.values.last().expect("cache holds at least the input")
    }
}

/// Gradients for one layer stack plus the gradient w.r.t. the stack input.
#[derive(Debug, Clone)]
pub struct GradientTape {
    pub dw: Vec<Vec<f64>>,
    pub db: Vec<Vec<f64>>,
    pub input_grad: Vec<f64>,
}

impl GradientTape {
    pub fn zeros_like(layers: &[DenseLayer]) -> Self {
        GradientTape {
            dw: layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            db: layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
            input_grad: Vec::new(),
        }
    }

    pub fn accumulate(&mut self, other: &GradientTape) {
        for (a, b) in self.dw.iter_mut().zip(&other.dw) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.db.iter_mut().zip(&other.db) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in self.dw.iter_mut().chain(self.db.iter_mut()) {
            for x in a.iter_mut() {
                *x *= factor;
            }
        }
    }
}

/// Run `x` through the layer stack, recording per-layer activations.
pub fn forward(layers: &[DenseLayer], x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    if let Some(first) = layers.first() {
        if x.len() != first.in_dim {
            return Err(Error::DimensionMismatch {
                context: "forward",
                expected: first.in_dim,
                actual: x.len(),
            });
        }
    }
    let mut values = Vec::with_capacity(layers.len() + 1);
    values.push(x.to_vec());
    let mut current = x.to_vec();
    let mut next = Vec::new();
    for layer in layers {
        if current.len() != layer.in_dim {
            return Err(Error::DimensionMismatch {
                context: "forward",
                expected: layer.in_dim,
                actual: current.len(),
            });
        }
        layer.apply(&current, &mut next);
        values.push(next.clone());
        std::mem::swap(&mut current, &mut next);
    }
    Ok((current, ForwardCache { values }))
}

/// Reverse-mode gradients of a scalar loss through the stack, given
/// `dL/d(output)`. Returns per-layer gradients and `dL/d(input)`.
pub fn backward(
    layers: &[DenseLayer],
    cache: &ForwardCache,
    output_grad: &[f64],
) -> Result<GradientTape> {
    if cache.values.len() != layers.len() + 1 {
        return Err(Error::CacheMismatch);
    }
    for (i, layer) in layers.iter().enumerate() {
        if cache.values[i].len() != layer.in_dim || cache.values[i + 1].len() != layer.out_dim {
            return Err(Error::CacheMismatch);
        }
    }
    let last_dim = layers.last().map_or(cache.values[0].len(), |l| l.out_dim);
    if output_grad.len() != last_dim {
        return Err(Error::DimensionMismatch {
            context: "backward",
            expected: last_dim,
            actual: output_grad.len(),
        });
    }

    let mut tape = GradientTape::zeros_like(layers);
    let mut delta = output_grad.to_vec();
    for (i, layer) in layers.iter().enumerate().rev() {
        let input = &cache.values[i];
        let output = &cache.values[i + 1];
        // delta <- dL/dz for this layer
        for (d, &out) in delta.iter_mut().zip(output) {
            *d *= layer.activation.derivative_from_output(out);
        }
        for r in 0..layer.out_dim {
            let dw_row = &mut tape.dw[i][r * layer.in_dim..(r + 1) * layer.in_dim];
            for (c, slot) in dw_row.iter_mut().enumerate() {
                *slot = delta[r] * input[c];
            }
            tape.db[i][r] = delta[r];
        }
        // propagate: dL/d(input) = W^T delta
        let mut below = vec![0.0; layer.in_dim];
        for r in 0..layer.out_dim {
            let row = &layer.w[r * layer.in_dim..(r + 1) * layer.in_dim];
            for (c, slot) in below.iter_mut().enumerate() {
                *slot += row[c] * delta[r];
            }
        }
        delta = below;
    }
    tape.input_grad = delta;
    Ok(tape)
}

#[derive(Debug, Clone, Copy)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        AdamHyper { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Optimizer state: one pair of moment buffers per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    hyper: AdamHyper,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(tensor_sizes: &[usize], hyper: AdamHyper) -> Self {
        AdamState {
            step: 0,
            hyper,
            m: tensor_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: tensor_sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    pub fn hyper(&self) -> AdamHyper {
        self.hyper
    }

    /// Apply one bias-corrected Adam update across all parameter tensors.
    /// `params` and `grads` must line up with the sizes passed at
    /// construction.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                context: "adam_step",
                expected: self.m.len(),
                actual: params.len().min(grads.len()),
            });
        }
        for g in grads {
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::Divergence { context: "adam_step gradient" });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let AdamHyper { lr, beta1, beta2, eps } = self.hyper;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for slot in 0..self.m.len() {
            let (p, g) = (&mut *params[slot], grads[slot]);
            let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// One Adam update over a list of parameter tensors. Thin wrapper around
/// [`AdamState::step`].
pub fn adam_step(state: &mut AdamState, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
    state.step(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_layer(dim: usize, activation: Activation) -> DenseLayer {
        let mut w = vec![0.0; dim * dim];
        for i in 0..dim {
            w[i * dim + i] = 1.0;
        }
        DenseLayer { in_dim: dim, out_dim: dim, w, b: vec![0.0; dim], activation }
    }

    #[test]
    fn forward_identity() {
        let layers = vec![identity_layer(2, Activation::Identity)];
        let (y, _) = forward(&layers, &[1.0, 2.0]).unwrap();
        assert_eq!(y, vec![1.0, 2.0]);
    }

    #[test]
    fn forward_relu_clamps() {
        let layers = vec![identity_layer(2, Activation::Relu)];
        let (y, _) = forward(&layers, &[-1.0, 2.0]).unwrap();
        assert_eq!(y, vec![0.0, 2.0]);
    }

    #[test]
    fn forward_sigmoid_of_zero() {
        let layers = vec![DenseLayer {
            in_dim: 3,
            out_dim: 2,
            w: vec![0.0; 6],
            b: vec![0.0; 2],
            activation: Activation::Sigmoid,
        }];
        let (y, _) = forward(&layers, &[5.0, -3.0, 0.1]).unwrap();
        assert_eq!(y, vec![0.5, 0.5]);
    }

    #[test]
    fn forward_dimension_mismatch() {
        let layers = vec![identity_layer(2, Activation::Identity)];
        assert!(matches!(
            forward(&layers, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn backward_hand_derivative() {
        // loss = 0.5 * y^2 through a 1x1 identity layer, x = 3:
        // y = 3, dL/dy = 3, dW = 3*3 = 9, db = 3
        let layers = vec![identity_layer(1, Activation::Identity)];
        let (y, cache) = forward(&layers, &[3.0]).unwrap();
        let tape = backward(&layers, &cache, &[y[0]]).unwrap();
        assert_eq!(tape.dw[0], vec![9.0]);
        assert_eq!(tape.db[0], vec![3.0]);
        assert_eq!(tape.input_grad, vec![3.0]);
    }

    #[test]
    fn gradient_shapes_match_parameters() {
        let mut rng = SplitMix64::new(1);
        let layers = vec![
            DenseLayer::init(4, 7, Activation::Relu, &mut rng),
            DenseLayer::init(7, 3, Activation::Sigmoid, &mut rng),
        ];
        let (y, cache) = forward(&layers, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let tape = backward(&layers, &cache, &vec![1.0; y.len()]).unwrap();
        for (layer, (dw, db)) in layers.iter().zip(tape.dw.iter().zip(&tape.db)) {
            assert_eq!(dw.len(), layer.w.len());
            assert_eq!(db.len(), layer.b.len());
        }
    }

    #[test]
    fn stale_cache_rejected() {
        let mut rng = SplitMix64::new(2);
        let a = vec![DenseLayer::init(3, 3, Activation::Relu, &mut rng)];
        let b = vec![
            DenseLayer::init(3, 5, Activation::Relu, &mut rng),
            DenseLayer::init(5, 3, Activation::Identity, &mut rng),
        ];
        let (_, cache) = forward(&a, &[0.1, 0.2, 0.3]).unwrap();
        assert!(matches!(
            backward(&b, &cache, &[1.0, 1.0, 1.0]),
            Err(Error::CacheMismatch)
        ));
    }

    /// Squared-error loss gradients match central finite differences on
    /// random small networks.
    #[test]
    fn gradient_check_small_networks() {
        let mut seed_rng = SplitMix64::new(0xC0FFEE);
        for case in 0..10u64 {
            let mut rng = SplitMix64::new(seed_rng.next_u64() ^ case);
            let depth = 2 + rng.below(3);
            let mut dims = vec![2 + rng.below(15)];
            for _ in 0..depth {
                dims.push(2 + rng.below(15));
            }
            let mut layers = Vec::new();
            for i in 0..depth {
                let act = match rng.below(3) {
                    0 => Activation::Relu,
                    1 => Activation::Sigmoid,
                    _ => Activation::Identity,
                };
                layers.push(DenseLayer::init(dims[i], dims[i + 1], act, &mut rng));
            }
            let x: Vec<f64> = (0..dims[0]).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let target: Vec<f64> = (0..dims[depth]).map(|_| rng.uniform(-1.0, 1.0)).collect();

            let loss = |layers: &[DenseLayer]| -> f64 {
                let (y, _) = forward(layers, &x).unwrap();
                y.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum()
            };

            let (y, cache) = forward(&layers, &x).unwrap();
            let grad_out: Vec<f64> = y.iter().zip(&target).map(|(a, b)| 2.0 * (a - b)).collect();
            let tape = backward(&layers, &cache, &grad_out).unwrap();

            let h = 1e-5;
            let mut worst = 0.0f64;
            for li in 0..layers.len() {
                for wi in 0..layers[li].w.len() {
                    let mut pert = layers.clone();
                    pert[li].w[wi] += h;
                    let up = loss(&pert);
                    pert[li].w[wi] -= 2.0 * h;
                    let down = loss(&pert);
                    let numeric = (up - down) / (2.0 * h);
                    let analytic = tape.dw[li][wi];
                    let denom = analytic.abs().max(numeric.abs()).max(1e-6);
                    worst = worst.max((analytic - numeric).abs() / denom);
                }
            }
            assert!(worst < 1e-4, "case {case}: max relative error {worst}");
        }
    }

    #[test]
    fn adam_zero_gradient_is_identity() {
        let mut state = AdamState::new(&[3], AdamHyper::with_lr(0.1));
        let mut p = vec![1.0, -2.0, 0.5];
        let g = vec![0.0; 3];
        adam_step(&mut state, &mut [&mut p], &[&g]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn adam_first_step_magnitude() {
        let mut state = AdamState::new(&[1], AdamHyper::with_lr(0.1));
        let mut p = vec![0.0];
        adam_step(&mut state, &mut [&mut p], &[&[1.0]]).unwrap();
        assert!((p[0] + 0.1).abs() < 1e-7, "got {}", p[0]);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn adam_deterministic() {
        let run = || {
            let mut rng = SplitMix64::new(9);
            let mut state = AdamState::new(&[4], AdamHyper::with_lr(1e-3));
            let mut p = vec![0.1, 0.2, 0.3, 0.4];
            for _ in 0..100 {
                let g: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
                adam_step(&mut state, &mut [&mut p], &[&g]).unwrap();
            }
            p
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }

    #[test]
    fn adam_rejects_non_finite() {
        let mut state = AdamState::new(&[1], AdamHyper::with_lr(0.1));
        let mut p = vec![0.0];
        assert!(matches!(
            adam_step(&mut state, &mut [&mut p], &[&[f64::NAN]]),
            Err(Error::Divergence { .. })
        ));
    }
}
