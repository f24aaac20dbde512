//! Function-space training of a network with infinitely wide `f` and `g`
//! and a finite bottleneck.
//!
//! The state is the bottleneck embedding `g_t(ξ)` of every tracked input
//! together with the history of `(g_{s,i}, χ_{s,i}, J_{s,i}ᵀχ_{s,i})` of all
//! past steps. Outputs and Jacobians are never stored as functions; they are
//! rebuilt on demand as the initial value minus a kernel-weighted sum over
//! the history:
//!
//! ```text
//! g_{t+1}(ξ) = g_t(ξ) − μ Σ_i Θ(ξ, ξ_i) J_{t,i}ᵀ χ_{t,i}
//! J_t(x)     = J_0(x) − μ Σ_s χ_s Ξ(x, g_s)ᵀ
//! F_t(ξ)     = F_0(ξ) − μ Σ_s K(g_t(ξ), g_s) χ_s
//! ```
//!
//! Initial values come from a frozen wide network ([`WideNetSnapshot`]).
//! The gradient-flow variant keeps `F` incrementally with the forward Euler
//! step of `Ḟ = −Σ_i [K(g, g_i) χ_i + Θ(ξ, ξ_i) J J_iᵀ χ_i]`.

mod baseline;
mod history;
mod persist;
mod run;

pub use baseline::{baseline_initial_outputs, infinite_bottleneck_gram, BaselineState};
pub use history::{History, HistoryEntry};
pub use run::{run_training, run_training_with, Mode, TrainConfig, TrainingOutcome, TrainedState};

use std::ops::Range;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis, Zip};
use rayon::prelude::*;

use crate::activation::Activation;
use crate::error::{check_len, Error, Result};
use crate::finite::TrainCheckpoint;
use crate::kernels::{KernelActivation, KernelConfig};
use crate::linalg::{norm, row_norms};
use crate::oracle::WideNetSnapshot;

/// History rows per kernel block.
const HISTORY_CHUNK: usize = 4096;
/// Query rows per parallel task.
const QUERY_CHUNK: usize = 32;
/// Largest input gram (entries) that is precomputed instead of rebuilt.
const MAX_DENSE_THETA: usize = 40_000_000;

/// `χ = F − y`, the derivative of `½‖F − y‖²`.
pub fn mse_loss_derivative(f: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_len("mse_loss_derivative", f.len(), y.len())?;
    Ok(f.iter().zip(y).map(|(a, b)| a - b).collect())
}

/// `Θ` acts on inputs (dimension `d₀`), `K` and `Ξ` on embeddings
/// (dimension `d`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernels {
    pub theta: KernelConfig,
    pub k: KernelConfig,
}

impl Kernels {
    /// Limit kernels of the architecture of `snapshot`.
    pub fn for_snapshot(snapshot: &WideNetSnapshot) -> Result<Self> {
        let act = match snapshot.activation() {
            Activation::Relu => KernelActivation::Relu,
            Activation::Linear => KernelActivation::Linear,
            other => return Err(Error::invalid(format!("no closed-form kernels for {other}"))),
        };
        let mut theta = KernelConfig::relu(snapshot.input_dim());
        theta.activation = act;
        theta.depth = snapshot.depth_g();
        let mut k = KernelConfig::relu(snapshot.bottleneck_dim());
        k.activation = act;
        k.depth = snapshot.f.depth();
        let kernels = Kernels { theta, k };
        kernels.validate()?;
        Ok(kernels)
    }

    pub fn validate(&self) -> Result<()> {
        self.theta.validate()?;
        self.k.validate()?;
        if !self.k.supports_xi() {
            return Err(Error::invalid("the post-bottleneck kernel has no closed-form Ξ"));
        }
        Ok(())
    }
}

/// How `F` is advanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Recompute `F` from `F₀` and the full history at the current `g`.
    Sgd,
    /// Forward Euler on the `F` equation; `F` is tracked incrementally.
    Euler,
}

/// Which inputs [`FunctionState::eval_f`] evaluates.
#[derive(Debug, Clone, Copy)]
pub enum Points<'a> {
    Train,
    Test,
    /// Arbitrary inputs, pushed through the oracle and the recorded `g`
    /// updates.
    Inputs(ArrayView2<'a, f64>),
}

#[derive(Debug, Clone, PartialEq)]
enum ThetaCache {
    Dense(Array2<f64>),
    OnTheFly,
}

/// Kernel values for a block of (query, history) pairs.
struct PairBlock {
    k: Array2<f64>,
    cb: Array2<f64>,
    ca: Array2<f64>,
}

/// Live function-space training state.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionState {
    pub(crate) step: usize,
    pub(crate) lr: f64,
    pub(crate) loss_scale: f64,
    pub(crate) kernels: Kernels,
    pub(crate) integrator: Integrator,
    pub(crate) oracle: WideNetSnapshot,
    /// Train inputs followed by test inputs.
    pub(crate) inputs: Array2<f64>,
    pub(crate) input_norms: Array1<f64>,
    pub(crate) n_train: usize,
    theta: ThetaCache,
    pub(crate) g0: Array2<f64>,
    pub(crate) g: Array2<f64>,
    pub(crate) f0: Array2<f64>,
    /// Tracked outputs under [`Integrator::Euler`].
    pub(crate) f: Option<Array2<f64>>,
    pub(crate) history: History,
}

impl FunctionState {
    /// Evaluates the oracle on every train and test input and starts with an
    /// empty history.
    pub fn new(
        oracle: WideNetSnapshot,
        kernels: Kernels,
        train_x: ArrayView2<'_, f64>,
        test_x: ArrayView2<'_, f64>,
        lr: f64,
        loss_scale: f64,
        integrator: Integrator,
    ) -> Result<Self> {
        kernels.validate()?;
        check_len("oracle input dimension", oracle.input_dim(), train_x.ncols())?;
        check_len("test input dimension", train_x.ncols(), test_x.ncols())?;
        check_len("Θ input dimension", kernels.theta.input_dim, train_x.ncols())?;
        check_len("K input dimension", kernels.k.input_dim, oracle.bottleneck_dim())?;
        if !(lr >= 0.0) || !(loss_scale > 0.0) {
            return Err(Error::invalid("lr must be non-negative and loss_scale positive"));
        }
        let inputs = concatenate(Axis(0), &[train_x, test_x]).expect("matching widths");
        let (g0, f0) = oracle.eval_batch(inputs.view())?;
        Self::from_parts(oracle, kernels, inputs, train_x.nrows(), g0, f0, lr, loss_scale, integrator)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        oracle: WideNetSnapshot,
        kernels: Kernels,
        inputs: Array2<f64>,
        n_train: usize,
        g0: Array2<f64>,
        f0: Array2<f64>,
        lr: f64,
        loss_scale: f64,
        integrator: Integrator,
    ) -> Result<Self> {
        let input_norms = row_norms(inputs.view());
        let n_all = inputs.nrows();
        let theta = if n_all * n_train <= MAX_DENSE_THETA {
            let mut state_theta = Array2::zeros((n_all, n_train));
            let dots = inputs.dot(&inputs.slice(s![..n_train, ..]).t());
            Zip::indexed(&mut state_theta).and(&dots).par_for_each(|(j, i), t, &dt| {
                *t = kernels.theta.ntk_scalar(dt, input_norms[j], input_norms[i]);
            });
            ThetaCache::Dense(state_theta)
        } else {
            ThetaCache::OnTheFly
        };
        let f = (integrator == Integrator::Euler).then(|| f0.clone());
        Ok(FunctionState {
            step: 0,
            lr,
            loss_scale,
            kernels,
            integrator,
            history: History::new(oracle.bottleneck_dim(), oracle.output_dim()),
            oracle,
            inputs,
            input_norms,
            n_train,
            theta,
            g: g0.clone(),
            g0,
            f0,
            f,
        })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn loss_scale(&self) -> f64 {
        self.loss_scale
    }

    pub fn kernels(&self) -> &Kernels {
        &self.kernels
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn oracle(&self) -> &WideNetSnapshot {
        &self.oracle
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn n_test(&self) -> usize {
        self.inputs.nrows() - self.n_train
    }

    /// Current `g_t` of the training inputs.
    pub fn train_g(&self) -> ArrayView2<'_, f64> {
        self.g.slice(s![..self.n_train, ..])
    }

    pub fn test_g(&self) -> ArrayView2<'_, f64> {
        self.g.slice(s![self.n_train.., ..])
    }

    pub fn train_f0(&self) -> ArrayView2<'_, f64> {
        self.f0.slice(s![..self.n_train, ..])
    }

    pub fn test_f0(&self) -> ArrayView2<'_, f64> {
        self.f0.slice(s![self.n_train.., ..])
    }

    fn theta_columns(&self, cols: &[usize]) -> Array2<f64> {
        match &self.theta {
            ThetaCache::Dense(m) => m.select(Axis(1), cols),
            ThetaCache::OnTheFly => {
                let batch = self.inputs.select(Axis(0), cols);
                self.theta_against(self.inputs.view(), self.input_norms.as_slice().unwrap(), &batch, cols)
            }
        }
    }

    /// `Θ(q_j, ξ_{cols_i})` for arbitrary query inputs.
    fn theta_against(&self, q: ArrayView2<'_, f64>, qn: &[f64], cols_x: &Array2<f64>, cols: &[usize]) -> Array2<f64> {
        let mut out = q.dot(&cols_x.t());
        let cfg = self.kernels.theta;
        Zip::indexed(&mut out).par_for_each(|(j, i), v| {
            *v = cfg.ntk_scalar(*v, qn[j], self.input_norms[cols[i]]);
        });
        out
    }

    fn pair_block(&self, q: ArrayView2<'_, f64>, qn: &[f64], hist: Range<usize>, want_xi: bool) -> PairBlock {
        let hg = self.history.g_view();
        let hg = hg.slice(s![hist.clone(), ..]);
        let hn = &self.history.norms()[hist];
        let mut k = q.dot(&hg.t());
        let cfg = self.kernels.k;
        if !want_xi {
            Zip::indexed(&mut k).for_each(|(i, h), v| *v = cfg.ntk_scalar(*v, qn[i], hn[h]));
            return PairBlock {
                k,
                cb: Array2::zeros((0, 0)),
                ca: Array2::zeros((0, 0)),
            };
        }
        let mut cb = Array2::zeros(k.dim());
        let mut ca = Array2::zeros(k.dim());
        Zip::indexed(&mut k).and(&mut cb).and(&mut ca).for_each(|(i, h), kv, b, a| {
            let (kk, cbv, cav) = cfg.ntk_xi_scalar(*kv, qn[i], hn[h]);
            *kv = kk;
            *b = cbv;
            *a = cav;
        });
        PairBlock { k, cb, ca }
    }

    fn check_xi_norms(&self, qn: &[f64]) -> Result<()> {
        if self.kernels.k.activation == KernelActivation::Relu
            && (qn.contains(&0.0) || self.history.norms().contains(&0.0))
        {
            return Err(Error::Degenerate("Ξ needs nonzero bottleneck embeddings".into()));
        }
        Ok(())
    }

    /// Runs `body` over query chunks in parallel and stacks the results.
    fn per_query_chunk<F>(&self, q: ArrayView2<'_, f64>, width: usize, body: F) -> Array2<f64>
    where
        F: Fn(Range<usize>, ArrayView2<'_, f64>, &[f64]) -> Array2<f64> + Sync,
    {
        let nq = q.nrows();
        let qn = row_norms(q);
        let starts: Vec<usize> = (0..nq).step_by(QUERY_CHUNK).collect();
        let blocks: Vec<Array2<f64>> = starts
            .par_iter()
            .map(|&a| {
                let b = (a + QUERY_CHUNK).min(nq);
                body(a..b, q.slice(s![a..b, ..]), &qn.as_slice().unwrap()[a..b])
            })
            .collect();
        let mut out = Array2::zeros((nq, width));
        for (&a, block) in starts.iter().zip(&blocks) {
            out.slice_mut(s![a..a + block.nrows(), ..]).assign(block);
        }
        out
    }

    fn history_ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let rows = self.history.rows();
        (0..rows).step_by(HISTORY_CHUNK).map(move |a| a..(a + HISTORY_CHUNK).min(rows))
    }

    /// `Σ_h K(q, g_h) χ_h` for every query row.
    fn kernel_chi_sum(&self, q: ArrayView2<'_, f64>) -> Array2<f64> {
        let chi = self.history.chi_view();
        self.per_query_chunk(q, chi.ncols(), |_, qc, qn| {
            let mut acc = Array2::zeros((qc.nrows(), chi.ncols()));
            for r in self.history_ranges() {
                let blk = self.pair_block(qc, qn, r.clone(), false);
                acc += &blk.k.dot(&chi.slice(s![r, ..]));
            }
            acc
        })
    }

    /// `Σ_h (c_q·χ_h) Ξ(q, g_h)` for every query row `q` with weight `c_q`.
    fn xi_weighted_sum(&self, q: ArrayView2<'_, f64>, weights: ArrayView2<'_, f64>) -> Array2<f64> {
        let chi = self.history.chi_view();
        let hg = self.history.g_view();
        self.per_query_chunk(q, q.ncols(), |rows, qc, qn| {
            let wq = weights.slice(s![rows, ..]);
            let mut acc = Array2::zeros(qc.dim());
            let mut self_coef = Array1::<f64>::zeros(qc.nrows());
            for r in self.history_ranges() {
                let blk = self.pair_block(qc, qn, r.clone(), true);
                let w = wq.dot(&chi.slice(s![r.clone(), ..]).t());
                acc += &(&w * &blk.cb).dot(&hg.slice(s![r, ..]));
                self_coef += &(&w * &blk.ca).sum_axis(Axis(1));
            }
            acc + &(&qc * &self_coef.insert_axis(Axis(1)))
        })
    }

    /// `Σ_h χ_h (Ξ(q, g_h) · v_q)` for every query row.
    fn xi_directional_sum(&self, q: ArrayView2<'_, f64>, v: ArrayView2<'_, f64>) -> Array2<f64> {
        let chi = self.history.chi_view();
        let hg = self.history.g_view();
        self.per_query_chunk(q, chi.ncols(), |rows, qc, qn| {
            let vq = v.slice(s![rows, ..]);
            let qv: Array1<f64> = Zip::from(qc.rows()).and(vq.rows()).map_collect(|a, b| a.dot(&b));
            let mut acc = Array2::zeros((qc.nrows(), chi.ncols()));
            for r in self.history_ranges() {
                let blk = self.pair_block(qc, qn, r.clone(), true);
                let s = &blk.cb * &vq.dot(&hg.slice(s![r.clone(), ..]).t()) + &blk.ca * &qv.view().insert_axis(Axis(1));
                acc += &s.dot(&chi.slice(s![r, ..]));
            }
            acc
        })
    }

    /// One training step on `batch` (indices into the training set) with
    /// the matching target rows.
    pub fn sgd_step(&mut self, batch: &[usize], targets: ArrayView2<'_, f64>) -> Result<()> {
        check_len("targets per batch index", batch.len(), targets.nrows())?;
        check_len("target width", self.oracle.output_dim(), targets.ncols())?;
        if batch.is_empty() || batch.iter().any(|&i| i >= self.n_train) {
            return Err(Error::invalid("batch indices must be nonempty and within the training set"));
        }
        let mu = self.lr;
        let gb = self.g.select(Axis(0), batch);
        let gb_norms = row_norms(gb.view());
        self.check_xi_norms(gb_norms.as_slice().unwrap())?;

        let f_batch = match &self.f {
            Some(f) => f.select(Axis(0), batch),
            None => {
                let mut f = self.f0.select(Axis(0), batch);
                if !self.history.is_empty() {
                    f.scaled_add(-mu, &self.kernel_chi_sum(gb.view()));
                }
                f
            }
        };
        let chi = (&f_batch - &targets) * self.loss_scale;
        if chi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("loss derivative at step {}", self.step)));
        }

        let mut p = self.oracle.jacobian_transpose_product(gb.view(), chi.view())?;
        if !self.history.is_empty() {
            p.scaled_add(-mu, &self.xi_weighted_sum(gb.view(), chi.view()));
        }

        let theta = self.theta_columns(batch);
        let delta_g = theta.dot(&p) * -mu;

        if self.f.is_some() {
            let delta_f = self.euler_output_increment(&gb, &chi, &delta_g)?;
            if let Some(f) = self.f.as_mut() {
                *f += &delta_f;
            }
        }

        self.history.push(&HistoryEntry {
            batch_indices: batch.to_vec(),
            g_batch: gb,
            chi_batch: chi,
            p_batch: p,
        })?;
        self.g += &delta_g;
        self.step += 1;
        Ok(())
    }

    /// `−μ Σ_i K(g_j, g_i) χ_i + J_t(g_j) Δg_j` for every tracked input.
    fn euler_output_increment(&self, gb: &Array2<f64>, chi: &Array2<f64>, delta_g: &Array2<f64>) -> Result<Array2<f64>> {
        let mu = self.lr;
        let qn = row_norms(self.g.view());
        self.check_xi_norms(qn.as_slice().unwrap())?;
        let gbn = row_norms(gb.view());
        let mut kb = self.g.dot(&gb.t());
        let cfg = self.kernels.k;
        Zip::indexed(&mut kb).for_each(|(j, i), v| *v = cfg.ntk_scalar(*v, qn[j], gbn[i]));
        let mut out = kb.dot(chi) * -mu;
        out += &self.oracle.jacobian_vector_product(self.g.view(), delta_g.view())?;
        if !self.history.is_empty() {
            out.scaled_add(-mu, &self.xi_directional_sum(self.g.view(), delta_g.view()));
        }
        Ok(out)
    }

    /// `g` of arbitrary inputs: the oracle's `g₀` moved by every recorded
    /// update.
    pub fn eval_g_inputs(&self, xi: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        let (mut g, f0) = self.oracle.eval_batch(xi)?;
        if !self.history.is_empty() {
            let idx = self.history.indices();
            let cols_x = self.inputs.select(Axis(0), idx);
            let theta = self.theta_against(xi, row_norms(xi).as_slice().unwrap(), &cols_x, idx);
            g.scaled_add(-self.lr, &theta.dot(&self.history.p_view()));
        }
        Ok((g, f0))
    }

    /// `F_t` at the requested inputs.
    pub fn eval_f(&self, points: Points<'_>) -> Result<Array2<f64>> {
        let (range, explicit) = match points {
            Points::Train => (0..self.n_train, None),
            Points::Test => (self.n_train..self.inputs.nrows(), None),
            Points::Inputs(x) => (0..0, Some(x)),
        };
        if let Some(x) = explicit {
            if self.integrator == Integrator::Euler {
                return Err(Error::invalid("gradient-flow states only track their own inputs"));
            }
            let (g, mut f) = self.eval_g_inputs(x)?;
            if !self.history.is_empty() {
                f.scaled_add(-self.lr, &self.kernel_chi_sum(g.view()));
            }
            return Ok(f);
        }
        if let Some(f) = &self.f {
            return Ok(f.slice(s![range, ..]).to_owned());
        }
        let mut f = self.f0.slice(s![range.clone(), ..]).to_owned();
        if !self.history.is_empty() && !range.is_empty() {
            f.scaled_add(-self.lr, &self.kernel_chi_sum(self.g.slice(s![range, ..])));
        }
        Ok(f)
    }

    /// `J_t(x) = J₀(x) − μ Σ_s χ_s Ξ(x, g_s)ᵀ`, shape `d_r × d`.
    pub fn eval_j(&self, x: &[f64]) -> Result<Array2<f64>> {
        check_len("eval_j point", self.oracle.bottleneck_dim(), x.len())?;
        let mut j = self.oracle.jacobian(x)?;
        if self.history.is_empty() {
            return Ok(j);
        }
        let xn = norm(x);
        self.check_xi_norms(&[xn])?;
        let q = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        let chi = self.history.chi_view();
        let hg = self.history.g_view();
        for r in self.history_ranges() {
            let blk = self.pair_block(q, &[xn], r.clone(), true);
            let chi_r = chi.slice(s![r.clone(), ..]);
            let weighted = &chi_r * &blk.cb.row(0).insert_axis(Axis(1));
            j.scaled_add(-self.lr, &weighted.t().dot(&hg.slice(s![r, ..])));
            let self_term = chi_r.t().dot(&blk.ca.row(0));
            for (a, &c) in self_term.iter().enumerate() {
                for (b, &xb) in x.iter().enumerate() {
                    j[[a, b]] -= self.lr * c * xb;
                }
            }
        }
        Ok(j)
    }

    /// `g` of tracked input `j` rebuilt from `g₀` and the whole history.
    pub fn recompute_g(&self, j: usize) -> Vec<f64> {
        let mut g = self.g0.row(j).to_owned();
        let xj = self.inputs.row(j);
        let p = self.history.p_view();
        for (h, &i) in self.history.indices().iter().enumerate() {
            let th = self
                .kernels
                .theta
                .ntk_scalar(xj.dot(&self.inputs.row(i)), self.input_norms[j], self.input_norms[i]);
            g.scaled_add(-self.lr * th, &p.row(h));
        }
        g.to_vec()
    }

    /// State of the training set in the layout of a finite-network
    /// checkpoint, with Jacobians at `probe` and at every training embedding.
    pub fn checkpoint(&self, train_y: ArrayView2<'_, f64>, probe: &[f64]) -> Result<TrainCheckpoint> {
        check_len("checkpoint targets", self.n_train, train_y.nrows())?;
        let f = self.eval_f(Points::Train)?;
        let chi = (&f - &train_y) * self.loss_scale;
        let j_train = (0..self.n_train)
            .map(|i| self.eval_j(self.g.row(i).as_slice().unwrap()))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainCheckpoint {
            step: self.step,
            f_values: f,
            g_values: self.train_g().to_owned(),
            j_probe: self.eval_j(probe)?,
            chi,
            j_train,
        })
    }
}
