//! Numerical checks of the limit theory against finite networks.
//!
//! [`covariance`] compares Monte-Carlo covariances of `f` and its Jacobian
//! at initialization with the limit kernels. The residual checks record a
//! finite network trained by full-batch gradient descent and measure how
//! well the forward differences of `f`, `g` and `J` match the right-hand
//! sides of the limit evolution equations:
//!
//! ```text
//! residual_t = ‖(ψ[t+1] − ψ[t]) / lr − rhs_ψ[t]‖ / ‖rhs_ψ[t]‖
//! ```

mod covariance;

pub use covariance::{
    jackknife_stderr, mc_covariance_deviation, mc_covariance_deviations, random_input_pairs, relative_frobenius,
    theory_covariance, write_deviation_csv, CovKind, DeviationReport, DEVIATION_HEADER, JACKKNIFE_BLOCKS,
};

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};

use crate::activation::Activation;
use crate::data::gen_projection_labels;
use crate::dynamics::{FunctionState, Kernels};
use crate::error::{check_len, Error, Result};
use crate::finite::{BottleneckNet, MlpSpec, TrainCheckpoint};
use crate::kernels::KernelConfig;
use crate::linalg::{frobenius, row_norms};
use crate::rng;

pub const RESIDUAL_HEADER: [&str; 6] = ["quantity", "step", "residual", "n", "d", "lr"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    F,
    G,
    J,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::F, Quantity::G, Quantity::J];
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::F => "f",
            Quantity::G => "g",
            Quantity::J => "J",
        })
    }
}

/// Per-step residuals of one quantity. Steps whose right-hand side vanishes
/// are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    pub quantity: Quantity,
    pub residuals: Vec<Option<f64>>,
    pub n: usize,
    pub d: usize,
    pub lr: f64,
}

impl ResidualSeries {
    /// Median over the defined residuals among the first `steps` steps.
    pub fn median(&self, steps: usize) -> Option<f64> {
        let mut v: Vec<f64> = self.residuals.iter().take(steps).flatten().copied().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
    }

    pub fn max(&self) -> Option<f64> {
        self.residuals.iter().flatten().copied().reduce(f64::max)
    }
}

/// Training-set state of a finite network before an update.
pub fn finite_checkpoint(
    net: &BottleneckNet,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    probe: &[f64],
    step: usize,
) -> Result<TrainCheckpoint> {
    let (g, f) = net.forward_batch(x)?;
    let chi = &f - &y;
    let j_train = g
        .rows()
        .into_iter()
        .map(|row| net.jacobian(row.as_slice().expect("contiguous row")))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainCheckpoint {
        step,
        f_values: f,
        g_values: g,
        j_probe: net.jacobian(probe)?,
        chi,
        j_train,
    })
}

/// Trains `net` by full-batch gradient descent on `Σ_i ½‖F(ξ_i) − y_i‖²`
/// for `steps` steps and returns the `steps + 1` checkpoints taken before
/// every update and after the last one.
pub fn record_finite_trajectory(
    net: &mut BottleneckNet,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    lr: f64,
    steps: usize,
    probe: &[f64],
) -> Result<Vec<TrainCheckpoint>> {
    check_len("probe embedding", net.bottleneck_dim(), probe.len())?;
    let mut out = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        out.push(finite_checkpoint(net, x, y, probe, step)?);
        if step < steps {
            net.sgd_update(x, y, lr, 1.0)?;
        }
    }
    Ok(out)
}

/// Full-batch gradient-flow trajectory of a function-space state, in the
/// same layout as [`record_finite_trajectory`].
pub fn function_space_trajectory(
    state: &mut FunctionState,
    train_y: ArrayView2<'_, f64>,
    steps: usize,
    probe: &[f64],
) -> Result<Vec<TrainCheckpoint>> {
    let all: Vec<usize> = (0..state.n_train()).collect();
    let mut out = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        out.push(state.checkpoint(train_y, probe)?);
        if step < steps {
            state.sgd_step(&all, train_y)?;
        }
    }
    Ok(out)
}

/// Right-hand sides `(ḟ, ġ, J̇)` of the limit equations at one checkpoint.
fn right_hand_sides(
    cp: &TrainCheckpoint,
    theta_gram: &Array2<f64>,
    kernels: &Kernels,
    probe: &[f64],
) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
    let n = cp.g_values.nrows();
    let d = cp.g_values.ncols();
    let p = Array2::from_shape_fn((n, d), |(i, k)| cp.j_train[i].column(k).dot(&cp.chi.row(i)));
    let rhs_g = -theta_gram.dot(&p);

    let norms = row_norms(cp.g_values.view());
    let dots = cp.g_values.dot(&cp.g_values.t());
    let kcfg = kernels.k;
    let k_gram = Array2::from_shape_fn((n, n), |(a, b)| kcfg.ntk_scalar(dots[[a, b]], norms[a], norms[b]));
    let mut rhs_f = -k_gram.dot(&cp.chi);
    for (j, mut row) in rhs_f.axis_iter_mut(Axis(0)).enumerate() {
        row += &cp.j_train[j].dot(&rhs_g.row(j));
    }

    let mut xi = Array2::zeros((n, d));
    for (i, mut row) in xi.axis_iter_mut(Axis(0)).enumerate() {
        let v = kcfg.xi(probe, cp.g_values.row(i).as_slice().expect("contiguous row"))?;
        row.assign(&ndarray::ArrayView1::from(&v[..]));
    }
    let rhs_j = -cp.chi.t().dot(&xi);
    Ok((rhs_f, rhs_g, rhs_j))
}

fn relative_residual(next: ArrayView2<'_, f64>, cur: ArrayView2<'_, f64>, lr: f64, rhs: &Array2<f64>) -> Option<f64> {
    let denom = frobenius(rhs.view());
    if !(denom > 0.0) || !denom.is_finite() {
        return None;
    }
    let diff = (&next - &cur) / lr - rhs;
    Some(frobenius(diff.view()) / denom)
}

/// Residual series of `f`, `g` and `J` (in that order) along a trajectory
/// recorded with learning rate `lr` on the inputs `train_x`.
pub fn residual_errors(
    checkpoints: &[TrainCheckpoint],
    train_x: ArrayView2<'_, f64>,
    kernels: &Kernels,
    probe: &[f64],
    lr: f64,
    n: usize,
) -> Result<Vec<ResidualSeries>> {
    if checkpoints.len() < 2 {
        return Err(Error::invalid("residuals need at least two checkpoints"));
    }
    if !(lr > 0.0) {
        return Err(Error::invalid("residuals need a positive learning rate"));
    }
    kernels.validate()?;
    let first = &checkpoints[0];
    check_len("checkpoint rows", train_x.nrows(), first.g_values.nrows())?;
    check_len("probe embedding", first.g_values.ncols(), probe.len())?;
    let xn = row_norms(train_x);
    let xd = train_x.dot(&train_x.t());
    let tcfg = kernels.theta;
    let theta_gram = Array2::from_shape_fn(xd.dim(), |(a, b)| tcfg.ntk_scalar(xd[[a, b]], xn[a], xn[b]));

    let d = first.g_values.ncols();
    let mut series: Vec<ResidualSeries> = Quantity::ALL
        .iter()
        .map(|&quantity| ResidualSeries {
            quantity,
            residuals: Vec::with_capacity(checkpoints.len() - 1),
            n,
            d,
            lr,
        })
        .collect();
    for pair in checkpoints.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        let (rf, rg, rj) = right_hand_sides(cur, &theta_gram, kernels, probe)?;
        series[0].residuals.push(relative_residual(next.f_values.view(), cur.f_values.view(), lr, &rf));
        series[1].residuals.push(relative_residual(next.g_values.view(), cur.g_values.view(), lr, &rg));
        series[2].residuals.push(relative_residual(next.j_probe.view(), cur.j_probe.view(), lr, &rj));
    }
    Ok(series)
}

/// Setup of a residual experiment on synthetic regression data: standard
/// normal inputs labelled by a fixed random projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualConfig {
    pub n_train: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    pub bottleneck: usize,
    pub width: usize,
    pub lr: f64,
    pub steps: usize,
    pub activation: Activation,
    /// Weight matrices in each of `g` and `f`.
    pub depth: usize,
    pub seed: u64,
}

impl ResidualConfig {
    /// The four-layer ReLU setup.
    pub fn relu(width: usize) -> Self {
        ResidualConfig {
            n_train: 100,
            input_dim: 5,
            output_dim: 2,
            bottleneck: 3,
            width,
            lr: 1e-3,
            steps: 100,
            activation: Activation::Relu,
            depth: 2,
            seed: 0,
        }
    }

    pub fn kernels(&self) -> Result<Kernels> {
        let act = self
            .activation
            .kernel()
            .ok_or_else(|| Error::invalid("residual checks need relu or linear activations"))?;
        let k = Kernels {
            theta: KernelConfig {
                activation: act,
                depth: self.depth,
                ..KernelConfig::relu(self.input_dim)
            },
            k: KernelConfig {
                activation: act,
                depth: self.depth,
                ..KernelConfig::relu(self.bottleneck)
            },
        };
        k.validate()?;
        Ok(k)
    }

    /// Inputs, projection labels and the probe embedding.
    pub fn problem(&self) -> Result<(Array2<f64>, Array2<f64>, Vec<f64>)> {
        let mut r = rng::stream(self.seed, 10);
        let x = rng::normal_matrix(&mut r, self.n_train, self.input_dim);
        let y = gen_projection_labels(x.view(), self.output_dim, self.seed)?;
        let probe = rng::normal_vec(&mut r, self.bottleneck);
        Ok((x, y, probe))
    }

    pub fn network(&self) -> Result<BottleneckNet> {
        let mut g_dims = vec![self.input_dim];
        g_dims.extend(std::iter::repeat_n(self.width, self.depth - 1));
        g_dims.push(self.bottleneck);
        let mut f_dims = vec![self.bottleneck];
        f_dims.extend(std::iter::repeat_n(self.width, self.depth - 1));
        f_dims.push(self.output_dim);
        BottleneckNet::init(&MlpSpec {
            g_dims,
            f_dims,
            g_activation: self.activation,
            f_activation: self.activation,
            seed: self.seed,
            init_scale: 1.0,
        })
    }
}

/// Trains the finite network of `cfg` and returns its residual series.
pub fn finite_residuals(cfg: &ResidualConfig) -> Result<Vec<ResidualSeries>> {
    if cfg.depth == 0 {
        return Err(Error::invalid("depth must be positive"));
    }
    let kernels = cfg.kernels()?;
    let (x, y, probe) = cfg.problem()?;
    let mut net = cfg.network()?;
    let cps = record_finite_trajectory(&mut net, x.view(), y.view(), cfg.lr, cfg.steps, &probe)?;
    residual_errors(&cps, x.view(), &kernels, &probe, cfg.lr, cfg.width)
}

/// The two linear architectures of the residual check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearMode {
    /// `g` and `f` each with two weight matrices and hidden width `n`.
    Deep4,
    /// `F(ξ) = w_eff θ_eff ξ`.
    Effective2,
}

impl fmt::Display for LinearMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinearMode::Deep4 => "deep4",
            LinearMode::Effective2 => "effective2",
        })
    }
}

impl FromStr for LinearMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deep4" => Ok(LinearMode::Deep4),
            "effective2" => Ok(LinearMode::Effective2),
            _ => Err(Error::invalid(format!("unknown linear mode {s:?}"))),
        }
    }
}

/// Residuals of a linear network trained like [`finite_residuals`], with
/// the linear kernels of its depth. `cfg.activation` and `cfg.depth` are
/// overridden by `mode`.
pub fn linear_residuals(mode: LinearMode, cfg: &ResidualConfig) -> Result<Vec<ResidualSeries>> {
    let depth = match mode {
        LinearMode::Deep4 => 2,
        LinearMode::Effective2 => 1,
    };
    finite_residuals(&ResidualConfig {
        activation: Activation::Linear,
        depth,
        ..cfg.clone()
    })
}

pub fn write_residual_csv<W: Write>(out: W, series: &[ResidualSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESIDUAL_HEADER)?;
    for s in series {
        for (step, r) in s.residuals.iter().enumerate() {
            w.write_record([
                s.quantity.to_string(),
                step.to_string(),
                r.map_or_else(|| "NaN".to_string(), |v| v.to_string()),
                s.n.to_string(),
                s.d.to_string(),
                s.lr.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
