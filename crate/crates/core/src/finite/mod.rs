//! Finite-width reference networks.
//!
//! A [`BottleneckNet`] is the composition `F = f ∘ g` of two MLPs in NTK
//! parametrization: every layer computes `W a / sqrt(fan_in)` with standard
//! normal `W`, hidden layers apply the activation, and neither network
//! applies it to its output. The output of `g` is the bottleneck embedding.
//!
//! Everything is `f64` and backpropagated by hand.

mod sweep;

pub use sweep::{sweep_bottleneck, SweepConfig, SweepResult};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::activation::Activation;
use crate::error::{check_len, Error, Result};
use crate::rng;

/// Plain MLP `W_L φ(… φ(W_1 x / √d_0) …) / √n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    /// Layer matrices, each `fan_out × fan_in`.
    pub weights: Vec<Array2<f64>>,
    pub activation: Activation,
}

/// Pre-activations of every layer for a batch (rows are samples).
#[derive(Debug, Clone)]
pub struct Trace {
    pub pre: Vec<Array2<f64>>,
}

impl Trace {
    pub fn output(&self) -> &Array2<f64> {
        self.pre.last().expect("an MLP has at least one layer")
    }
}

impl Mlp {
    /// Standard normal weights times `init_scale` for the layer widths
    /// `dims = [d_in, h_1, …, d_out]`.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], activation: Activation, init_scale: f64, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::invalid(format!("invalid layer widths {dims:?}")));
        }
        let weights = dims
            .windows(2)
            .map(|w| rng::normal_matrix(rng, w[1], w[0]) * init_scale)
            .collect();
        Ok(Mlp { weights, activation })
    }

    pub fn from_weights(weights: Vec<Array2<f64>>, activation: Activation) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("an MLP needs at least one layer"));
        }
        for pair in weights.windows(2) {
            check_len("MLP layer chain", pair[0].nrows(), pair[1].ncols())?;
        }
        Ok(Mlp { weights, activation })
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().unwrap().nrows()
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    fn scale(w: &Array2<f64>) -> f64 {
        1.0 / (w.ncols() as f64).sqrt()
    }

    /// Input of layer `l` given the pre-activation of layer `l - 1`.
    fn activate(&self, pre: &Array2<f64>) -> Array2<f64> {
        let act = self.activation;
        pre.mapv(|a| act.apply(a))
    }

    pub fn trace(&self, x: ArrayView2<'_, f64>) -> Result<Trace> {
        check_len("MLP input", self.input_dim(), x.ncols())?;
        let mut pre = Vec::with_capacity(self.depth());
        let mut input = x.to_owned();
        for (l, w) in self.weights.iter().enumerate() {
            if l > 0 {
                input = self.activate(&pre[l - 1]);
            }
            pre.push(input.dot(&w.t()) * Self::scale(w));
        }
        Ok(Trace { pre })
    }

    /// Outputs for a batch of inputs (one per row).
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_len("MLP input", self.input_dim(), x.ncols())?;
        let mut h = x.dot(&self.weights[0].t()) * Self::scale(&self.weights[0]);
        for w in &self.weights[1..] {
            let a = self.activate(&h);
            h = a.dot(&w.t()) * Self::scale(w);
        }
        Ok(h)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        Ok(self.forward_batch(view)?.into_raw_vec_and_offset().0)
    }

    /// Input-output Jacobian `∂out/∂x` at `x`, shape `out × in`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Array2<f64>> {
        check_len("MLP input", self.input_dim(), x.len())?;
        let mut h = ArrayView1::from(x).to_owned();
        let mut jac = self.weights[0].clone() * Self::scale(&self.weights[0]);
        h = self.weights[0].dot(&h) * Self::scale(&self.weights[0]);
        for w in &self.weights[1..] {
            let act = self.activation;
            let slope = h.mapv(|a| act.derivative(a));
            jac *= &slope.view().insert_axis(Axis(1));
            let a = h.mapv(|v| act.apply(v));
            jac = w.dot(&jac) * Self::scale(w);
            h = w.dot(&a) * Self::scale(w);
        }
        Ok(jac)
    }

    /// Vector-Jacobian product `Jᵀ c` at `x`.
    pub fn vjp(&self, x: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
        check_len("MLP cotangent", self.output_dim(), cotangent.len())?;
        let xv = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        let trace = self.trace(xv)?;
        let mut delta = Array1::from(cotangent.to_vec());
        for l in (0..self.depth()).rev() {
            let w = &self.weights[l];
            let mut back = w.t().dot(&delta) * Self::scale(w);
            if l > 0 {
                let act = self.activation;
                Zip::from(&mut back)
                    .and(trace.pre[l - 1].row(0))
                    .for_each(|b, &a| *b *= act.derivative(a));
            }
            delta = back;
        }
        Ok(delta.to_vec())
    }

    /// Row-wise `J(x_b)ᵀ c_b` for a batch of inputs and cotangents.
    pub fn vjp_batch(&self, x: ArrayView2<'_, f64>, cotangent: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_len("MLP cotangent", self.output_dim(), cotangent.ncols())?;
        check_len("MLP cotangent rows", x.nrows(), cotangent.nrows())?;
        let trace = self.trace(x)?;
        let mut delta = cotangent.to_owned();
        for l in (0..self.depth()).rev() {
            let w = &self.weights[l];
            let mut back = delta.dot(w) * Self::scale(w);
            if l > 0 {
                let act = self.activation;
                Zip::from(&mut back)
                    .and(&trace.pre[l - 1])
                    .for_each(|b, &a| *b *= act.derivative(a));
            }
            delta = back;
        }
        Ok(delta)
    }

    /// Row-wise `J(x_b) v_b` (forward mode).
    pub fn jvp_batch(&self, x: ArrayView2<'_, f64>, tangent: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_len("MLP tangent", self.input_dim(), tangent.ncols())?;
        check_len("MLP tangent rows", x.nrows(), tangent.nrows())?;
        let trace = self.trace(x)?;
        let act = self.activation;
        let mut t = tangent.dot(&self.weights[0].t()) * Self::scale(&self.weights[0]);
        for (l, w) in self.weights.iter().enumerate().skip(1) {
            Zip::from(&mut t)
                .and(&trace.pre[l - 1])
                .for_each(|v, &a| *v *= act.derivative(a));
            t = t.dot(&w.t()) * Self::scale(w);
        }
        Ok(t)
    }

    /// Backpropagated signals `∂out_α/∂h_l` for every layer, each
    /// `out × width_l`, plus the inputs `a_{l-1}` seen by every layer.
    fn output_sensitivities(&self, x: &[f64]) -> Result<Sensitivities> {
        let xv = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        let trace = self.trace(xv)?;
        let act = self.activation;
        let mut inputs = Vec::with_capacity(self.depth());
        inputs.push(Array1::from(x.to_vec()));
        for l in 1..self.depth() {
            inputs.push(trace.pre[l - 1].row(0).mapv(|a| act.apply(a)));
        }
        let mut sens = vec![Array2::zeros((0, 0)); self.depth()];
        let mut delta = Array2::eye(self.output_dim());
        for l in (0..self.depth()).rev() {
            sens[l] = delta.clone();
            if l > 0 {
                let w = &self.weights[l];
                let mut back = delta.dot(w) * Self::scale(w);
                let slope = trace.pre[l - 1].row(0).mapv(|a| act.derivative(a));
                back *= &slope.view().insert_axis(Axis(0));
                delta = back;
            }
        }
        Ok((sens, inputs))
    }

    /// Empirical NTK `(∂out(x)/∂W)(∂out(x̃)/∂W)ᵀ`, shape `out × out`.
    pub fn empirical_ntk(&self, x: &[f64], y: &[f64]) -> Result<Array2<f64>> {
        let (sx, ax) = self.output_sensitivities(x)?;
        let (sy, ay) = self.output_sensitivities(y)?;
        let mut ntk = Array2::zeros((self.output_dim(), self.output_dim()));
        for l in 0..self.depth() {
            let fan_in = self.weights[l].ncols() as f64;
            let input_overlap = ax[l].dot(&ay[l]) / fan_in;
            ntk.scaled_add(input_overlap, &sx[l].dot(&sy[l].t()));
        }
        Ok(ntk)
    }
}

/// Layer widths, activations and seed of a [`BottleneckNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    /// `[d₀, n, …, d]`
    pub g_dims: Vec<usize>,
    /// `[d, n, …, d_r]`
    pub f_dims: Vec<usize>,
    pub g_activation: Activation,
    pub f_activation: Activation,
    pub seed: u64,
    /// Multiplier on the standard normal initialization.
    pub init_scale: f64,
}

impl MlpSpec {
    /// `g` and `f` with one hidden layer of width `n` each.
    pub fn four_layer(d0: usize, n: usize, d: usize, dr: usize, activation: Activation, seed: u64) -> Self {
        MlpSpec {
            g_dims: vec![d0, n, d],
            f_dims: vec![d, n, dr],
            g_activation: activation,
            f_activation: activation,
            seed,
            init_scale: 1.0,
        }
    }
}

/// Training-set state recorded before a step's update.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainCheckpoint {
    pub step: usize,
    /// `F(ξ_i)`, `N × d_r`.
    pub f_values: Array2<f64>,
    /// `g(ξ_i)`, `N × d`.
    pub g_values: Array2<f64>,
    /// `J` at the fixed probe embedding, `d_r × d`.
    pub j_probe: Array2<f64>,
    /// Loss derivatives `∂L/∂F_i`, `N × d_r`.
    pub chi: Array2<f64>,
    /// `J(g(ξ_i))` for every training input.
    pub j_train: Vec<Array2<f64>>,
}

/// Loss gradients of every weight matrix, in the layout of the network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub g: Vec<Array2<f64>>,
    pub f: Vec<Array2<f64>>,
    pub loss: f64,
}

type Sensitivities = (Vec<Array2<f64>>, Vec<Array1<f64>>);

/// The composed network `F = f ∘ g`.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckNet {
    pub g: Mlp,
    pub f: Mlp,
}

/// Result of a single forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub g: Vec<f64>,
    pub output: Vec<f64>,
    pub g_trace: Trace,
    pub f_trace: Trace,
}

impl BottleneckNet {
    pub fn new(g: Mlp, f: Mlp) -> Result<Self> {
        check_len("bottleneck width", g.output_dim(), f.input_dim())?;
        Ok(BottleneckNet { g, f })
    }

    pub fn init(spec: &MlpSpec) -> Result<Self> {
        let mut rng = rng::stream(spec.seed, 0);
        let g = Mlp::random(&spec.g_dims, spec.g_activation, spec.init_scale, &mut rng)?;
        let f = Mlp::random(&spec.f_dims, spec.f_activation, spec.init_scale, &mut rng)?;
        Self::new(g, f)
    }

    pub fn input_dim(&self) -> usize {
        self.g.input_dim()
    }

    pub fn bottleneck_dim(&self) -> usize {
        self.g.output_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.f.output_dim()
    }

    pub fn forward(&self, xi: &[f64]) -> Result<Forward> {
        let xv = ArrayView2::from_shape((1, xi.len()), xi).expect("row view");
        let g_trace = self.g.trace(xv)?;
        let g = g_trace.output().row(0).to_vec();
        let gv = ArrayView2::from_shape((1, g.len()), &g[..]).expect("row view");
        let f_trace = self.f.trace(gv)?;
        let output = f_trace.output().row(0).to_vec();
        Ok(Forward {
            g,
            output,
            g_trace,
            f_trace,
        })
    }

    /// `(G, F)` for a batch of inputs.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        let g = self.g.forward_batch(x)?;
        let out = self.f.forward_batch(g.view())?;
        Ok((g, out))
    }

    /// `∂f/∂x` at the bottleneck point `x`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Array2<f64>> {
        self.f.jacobian(x)
    }

    /// Empirical NTK of `f` at bottleneck points `x, x̃`.
    pub fn empirical_ntk_f(&self, x: &[f64], y: &[f64]) -> Result<Array2<f64>> {
        self.f.empirical_ntk(x, y)
    }

    /// Empirical NTK of `g` at inputs `ξ, ξ̃`.
    pub fn empirical_ntk_g(&self, x: &[f64], y: &[f64]) -> Result<Array2<f64>> {
        self.g.empirical_ntk(x, y)
    }

    /// Gradients of `L = loss_scale · Σ_i ½|F(ξ_i) − y_i|²`.
    pub fn gradients(&self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, loss_scale: f64) -> Result<Gradients> {
        check_len("targets", x.nrows(), y.nrows())?;
        check_len("target width", self.output_dim(), y.ncols())?;
        let g_trace = self.g.trace(x)?;
        let f_trace = self.f.trace(g_trace.output().view())?;
        let residual = f_trace.output() - &y;
        let loss = 0.5 * loss_scale * residual.iter().map(|r| r * r).sum::<f64>();
        let chi = residual * loss_scale;

        let (f_grads, d_embedding) = backprop(&self.f, &f_trace, g_trace.output(), chi);
        let (g_grads, _) = backprop(&self.g, &g_trace, &x.to_owned(), d_embedding);
        Ok(Gradients {
            g: g_grads,
            f: f_grads,
            loss,
        })
    }

    /// One gradient step on the batch `(x, y)`; `x` is the whole training
    /// set for full-batch descent. Returns the pre-update loss.
    pub fn sgd_update(&mut self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, lr: f64, loss_scale: f64) -> Result<f64> {
        if !(lr >= 0.0) {
            return Err(Error::invalid("learning rate must be non-negative"));
        }
        let grads = self.gradients(x, y, loss_scale)?;
        let finite = grads.g.iter().chain(&grads.f).all(|m| m.iter().all(|v| v.is_finite()));
        if !finite || !grads.loss.is_finite() {
            return Err(Error::NonFinite("gradient of the finite network".into()));
        }
        for (w, dw) in self.g.weights.iter_mut().zip(&grads.g) {
            w.scaled_add(-lr, dw);
        }
        for (w, dw) in self.f.weights.iter_mut().zip(&grads.f) {
            w.scaled_add(-lr, dw);
        }
        Ok(grads.loss)
    }

    /// All weight matrices in declaration order (`g` first, then `f`).
    pub fn parameters(&self) -> impl Iterator<Item = &Array2<f64>> {
        self.g.weights.iter().chain(&self.f.weights)
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut Array2<f64>> {
        self.g.weights.iter_mut().chain(self.f.weights.iter_mut())
    }
}

/// Backpropagates `delta = ∂L/∂out` (rows are samples) through `net`.
/// Returns the weight gradients and `∂L/∂input`.
fn backprop(net: &Mlp, trace: &Trace, input: &Array2<f64>, mut delta: Array2<f64>) -> (Vec<Array2<f64>>, Array2<f64>) {
    let act = net.activation;
    let mut grads = vec![Array2::zeros((0, 0)); net.depth()];
    for l in (0..net.depth()).rev() {
        let w = &net.weights[l];
        let scale = Mlp::scale(w);
        let layer_input = if l == 0 {
            input.clone()
        } else {
            trace.pre[l - 1].mapv(|a| act.apply(a))
        };
        grads[l] = delta.t().dot(&layer_input) * scale;
        let mut back = delta.dot(w) * scale;
        if l > 0 {
            Zip::from(&mut back)
                .and(&trace.pre[l - 1])
                .for_each(|b, &a| *b *= act.derivative(a));
        }
        delta = back;
    }
    (grads, delta)
}

/// Mean over samples of `½|F − y|²`.
pub fn mean_half_sq_error(pred: ArrayView2<'_, f64>, target: ArrayView2<'_, f64>) -> f64 {
    let n = pred.nrows().max(1) as f64;
    0.5 * (&pred - &target).iter().map(|r| r * r).sum::<f64>() / n
}

/// Fraction of rows whose arg-max agrees with the target's arg-max.
pub fn argmax_accuracy(pred: ArrayView2<'_, f64>, target: ArrayView2<'_, f64>) -> f64 {
    let argmax = |row: ArrayView1<'_, f64>| {
        row.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    let hits = pred
        .rows()
        .into_iter()
        .zip(target.rows())
        .filter(|(p, t)| argmax(*p) == argmax(*t))
        .count();
    hits as f64 / pred.nrows().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn unit_net(activation: Activation) -> BottleneckNet {
        let one = || array![[1.0]];
        BottleneckNet::new(
            Mlp::from_weights(vec![one(), one()], activation).unwrap(),
            Mlp::from_weights(vec![one(), one()], activation).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn unit_relu_forward() {
        let out = unit_net(Activation::Relu).forward(&[2.0]).unwrap();
        assert_eq!(out.g, vec![2.0]);
        assert_eq!(out.output, vec![2.0]);
    }

    #[test]
    fn zero_input_relu() {
        let net = BottleneckNet::init(&MlpSpec::four_layer(3, 16, 2, 2, Activation::Relu, 1)).unwrap();
        let out = net.forward(&[0.0; 3]).unwrap();
        assert_eq!(out.g, vec![0.0, 0.0]);
        assert_eq!(out.output, vec![0.0, 0.0]);
    }

    #[test]
    fn composition_is_exact() {
        let net = BottleneckNet::init(&MlpSpec::four_layer(4, 32, 3, 2, Activation::Relu, 7)).unwrap();
        let xi = [0.3, -1.0, 0.8, 0.1];
        let full = net.forward(&xi).unwrap();
        let g = net.g.forward(&xi).unwrap();
        assert_eq!(full.g, g);
        assert_eq!(full.output, net.f.forward(&g).unwrap());
    }

    #[test]
    fn linear_jacobian_is_constant() {
        let net = BottleneckNet::init(&MlpSpec::four_layer(2, 8, 3, 2, Activation::Linear, 3)).unwrap();
        let j1 = net.jacobian(&[1.0, 2.0, 3.0]).unwrap();
        let j2 = net.jacobian(&[-4.0, 0.5, 0.0]).unwrap();
        let expected = net.f.weights[1].dot(&net.f.weights[0]) / (8.0f64 * 3.0).sqrt();
        for ((a, b), c) in j1.iter().zip(&j2).zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
            assert_abs_diff_eq!(a, c, epsilon = 1e-14);
        }
    }

    #[test]
    fn vjp_matches_jacobian() {
        let net = BottleneckNet::init(&MlpSpec::four_layer(2, 20, 3, 4, Activation::Relu, 5)).unwrap();
        let x = [0.2, -0.7, 1.1];
        let c = [1.0, -2.0, 0.5, 0.3];
        let j = net.jacobian(&x).unwrap();
        let expected = j.t().dot(&Array1::from(c.to_vec()));
        let got = net.f.vjp(&x, &c).unwrap();
        for (a, b) in got.iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn jvp_matches_jacobian() {
        let net = BottleneckNet::init(&MlpSpec::four_layer(2, 20, 3, 4, Activation::Relu, 6)).unwrap();
        let x = array![[0.2, -0.7, 1.1]];
        let v = array![[0.5, 1.0, -2.0]];
        let j = net.jacobian(x.row(0).as_slice().unwrap()).unwrap();
        let expected = j.dot(&v.row(0));
        let got = net.f.jvp_batch(x.view(), v.view()).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(got[[0, k]], expected[k], epsilon = 1e-13);
        }
    }

    #[test]
    fn lr_zero_and_zero_residual_leave_weights() {
        let mut net = BottleneckNet::init(&MlpSpec::four_layer(3, 10, 2, 2, Activation::Relu, 9)).unwrap();
        let x = array![[0.5, -0.2, 1.0], [1.0, 1.0, -1.0]];
        let y = array![[1.0, 0.0], [0.0, 1.0]];
        let before = net.clone();
        net.sgd_update(x.view(), y.view(), 0.0, 1.0).unwrap();
        assert_eq!(net, before);
        let (_, f) = net.forward_batch(x.view()).unwrap();
        net.sgd_update(x.view(), f.view(), 0.3, 1.0).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn unit_network_hand_backprop() {
        // g = θ₂ relu(θ₁ ξ), F = v relu(u g) with all weights 1 and ξ = 2.
        // ∂L/∂w = (F − y)·2 for every weight when all pre-activations are 2.
        let mut net = unit_net(Activation::Relu);
        let x = array![[2.0]];
        let y = array![[0.0]];
        let loss = net.sgd_update(x.view(), y.view(), 0.1, 1.0).unwrap();
        assert_abs_diff_eq!(loss, 2.0, epsilon = 1e-15);
        for w in net.parameters() {
            assert_abs_diff_eq!(w[[0, 0]], 1.0 - 0.1 * 4.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn empirical_ntk_matches_decomposition() {
        // One hidden layer: K_n = (xᵀx̃/d)(1/n)(v diag φ'(y))(v diag φ'(ỹ))ᵀ + (zᵀz̃/n) I.
        let net = BottleneckNet::init(&MlpSpec::four_layer(2, 50, 3, 2, Activation::Relu, 11)).unwrap();
        let (u, v) = (&net.f.weights[0], &net.f.weights[1]);
        let x = Array1::from(vec![0.4, -1.0, 0.9]);
        let y = Array1::from(vec![-0.3, 0.8, 1.2]);
        let (n, d) = (50.0f64, 3.0f64);
        let px = u.dot(&x) / d.sqrt();
        let py = u.dot(&y) / d.sqrt();
        let dx = px.mapv(|a| Activation::Relu.derivative(a));
        let dy = py.mapv(|a| Activation::Relu.derivative(a));
        let zx = px.mapv(|a| a.max(0.0));
        let zy = py.mapv(|a| a.max(0.0));
        let vx = v * &dx.view().insert_axis(Axis(0));
        let vy = v * &dy.view().insert_axis(Axis(0));
        let expected = vx.dot(&vy.t()) * (x.dot(&y) / d / n) + Array2::<f64>::eye(2) * (zx.dot(&zy) / n);
        let got = net.empirical_ntk_f(x.as_slice().unwrap(), y.as_slice().unwrap()).unwrap();
        for (a, b) in got.iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn empirical_ntk_unit_linear() {
        // n = 1, d = 1: f = v u x, K = x x̃ (v² + u²).
        let net = BottleneckNet::new(
            Mlp::from_weights(vec![array![[1.0]]], Activation::Linear).unwrap(),
            Mlp::from_weights(vec![array![[2.0]], array![[3.0]]], Activation::Linear).unwrap(),
        )
        .unwrap();
        let k = net.empirical_ntk_f(&[1.5], &[-2.0]).unwrap();
        assert_abs_diff_eq!(k[[0, 0]], 1.5 * -2.0 * (9.0 + 4.0), epsilon = 1e-13);
    }

    #[test]
    fn accuracy_and_loss() {
        let p = array![[0.9, 0.1], [0.2, 0.3]];
        let t = array![[1.0, 0.0], [1.0, 0.0]];
        assert_eq!(argmax_accuracy(p.view(), t.view()), 0.5);
        assert_abs_diff_eq!(mean_half_sq_error(p.view(), t.view()), 0.5 * (0.01 + 0.01 + 0.64 + 0.09) / 2.0, epsilon = 1e-15);
    }
}
