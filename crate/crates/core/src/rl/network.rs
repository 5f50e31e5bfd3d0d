//! Fully connected Q-network: rectifier hidden layers, linear head.
//!
//! Parameters live in one flat buffer, layer by layer, each layer as its
//! row-major weight matrix (`out × in`) followed by its bias vector. Gradient
//! buffers use the same layout so optimizers work on flat slices.
//!
//! Shape mismatches are programmer errors and panic.

use rand::Rng;

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork<T> {
    dims: Vec<usize>,
    params: Vec<T>,
}

/// Per-layer outputs of the last cached forward pass (index 0 is the input).
#[derive(Clone, Debug, Default)]
pub struct Activations<T> {
    layers: Vec<Vec<T>>,
}

impl<T> Activations<T> {
    pub fn output(&self) -> &[T] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Clone, Copy)]
struct LayerView {
    w: usize,
    b: usize,
    n_in: usize,
    n_out: usize,
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl<T: Scalar> QNetwork<T> {
    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        assert!(dims.iter().all(|&d| d > 0), "layer dims must be positive");
        Self {
            dims: dims.to_vec(),
            params: vec![T::zero(); param_count(dims)],
        }
    }

    /// He-uniform weights, zero biases.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(dims);
        for l in 0..net.num_layers() {
            let v = net.view(l);
            let bound = (6.0 / v.n_in as f64).sqrt();
            for p in &mut net.params[v.w..v.w + v.n_in * v.n_out] {
                *p = T::lit(rng.gen_range(-bound..bound));
            }
        }
        net
    }

    pub fn from_params(dims: &[usize], params: Vec<T>) -> Option<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) || params.len() != param_count(dims) {
            return None;
        }
        Some(Self {
            dims: dims.to_vec(),
            params,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    /// Same network in another scalar type.
    pub fn cast<U: Scalar>(&self) -> QNetwork<U> {
        QNetwork {
            dims: self.dims.clone(),
            params: self.params.iter().map(|p| U::lit(p.as_f64())).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Flat offset ranges `(weights, biases)` of layer `l`.
    pub fn layer_ranges(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let v = self.view(l);
        (v.w..v.b, v.b..v.b + v.n_out)
    }

    fn view(&self, l: usize) -> LayerView {
        let mut off = 0;
        for k in 0..l {
            off += self.dims[k] * self.dims[k + 1] + self.dims[k + 1];
        }
        let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
        LayerView {
            w: off,
            b: off + n_in * n_out,
            n_in,
            n_out,
        }
    }

    fn layer_forward(&self, v: LayerView, input: &[T], out: &mut Vec<T>, rectify: bool) {
        out.clear();
        let w = &self.params[v.w..v.b];
        let b = &self.params[v.b..v.b + v.n_out];
        for j in 0..v.n_out {
            let row = &w[j * v.n_in..(j + 1) * v.n_in];
            let mut acc = b[j];
            for (wi, xi) in row.iter().zip(input) {
                acc += *wi * *xi;
            }
            out.push(if rectify && acc < T::zero() { T::zero() } else { acc });
        }
    }

    pub fn forward(&self, s: &[T]) -> Vec<T> {
        let mut cache = Activations::default();
        self.forward_cached(s, &mut cache);
        cache.layers.pop().unwrap()
    }

    /// Forward pass keeping every layer's output for a following `backward`.
    pub fn forward_cached<'a>(&self, s: &[T], cache: &'a mut Activations<T>) -> &'a [T] {
        assert_eq!(s.len(), self.input_dim(), "observation dimension mismatch");
        let n = self.num_layers();
        cache.layers.resize_with(n + 1, Vec::new);
        cache.layers[0].clear();
        cache.layers[0].extend_from_slice(s);
        for l in 0..n {
            let (done, rest) = cache.layers.split_at_mut(l + 1);
            self.layer_forward(self.view(l), &done[l], &mut rest[0], l + 1 < n);
        }
        cache.output()
    }

    /// Accumulates into `grad` the gradient of `½ (Q(s, action) − target)²`
    /// with respect to every parameter and returns that loss. Only the
    /// selected output receives an error signal.
    pub fn backward(&self, s: &[T], action: usize, target: T, grad: &mut [T], cache: &mut Activations<T>) -> T {
        assert_eq!(grad.len(), self.params.len(), "gradient buffer size mismatch");
        assert!(action < self.output_dim(), "action index out of range");
        self.forward_cached(s, cache);
        let n = self.num_layers();
        let residual = cache.layers[n][action] - target;
        let mut delta = vec![T::zero(); self.output_dim()];
        delta[action] = residual;
        for l in (0..n).rev() {
            let v = self.view(l);
            let input = &cache.layers[l];
            for j in 0..v.n_out {
                let d = delta[j];
                if d == T::zero() {
                    continue;
                }
                grad[v.b + j] += d;
                let row = &mut grad[v.w + j * v.n_in..v.w + (j + 1) * v.n_in];
                for (g, xi) in row.iter_mut().zip(input) {
                    *g += d * *xi;
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[v.w..v.b];
            let mut prev = vec![T::zero(); v.n_in];
            for j in 0..v.n_out {
                let d = delta[j];
                if d == T::zero() {
                    continue;
                }
                let row = &w[j * v.n_in..(j + 1) * v.n_in];
                for (p, wi) in prev.iter_mut().zip(row) {
                    *p += *wi * d;
                }
            }
            // rectifier derivative, taken as 0 at the kink
            for (p, a) in prev.iter_mut().zip(&cache.layers[l]) {
                if *a <= T::zero() {
                    *p = T::zero();
                }
            }
            delta = prev;
        }
        T::lit(0.5) * residual * residual
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
