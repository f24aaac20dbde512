use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{concatenate, Array2, Axis};

use super::{baseline_initial_outputs, BaselineState, FunctionState, Integrator, Kernels, Points};
use crate::activation::Activation;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{KernelActivation, KernelConfig};
use crate::metrics::{evaluate, MetricsRow};
use crate::oracle::{init_wide_net, WideNetSnapshot, DEFAULT_WIDTH};
use crate::rng::{self, BatchSampler};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    BottleneckSgd,
    BottleneckGradientFlowEuler,
    InfiniteNtkBaseline,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::BottleneckSgd => "bottleneck_sgd",
            Mode::BottleneckGradientFlowEuler => "bottleneck_gradient_flow_euler",
            Mode::InfiniteNtkBaseline => "infinite_ntk_baseline",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bottleneck_sgd" | "sgd" => Ok(Mode::BottleneckSgd),
            "bottleneck_gradient_flow_euler" | "euler" => Ok(Mode::BottleneckGradientFlowEuler),
            "infinite_ntk_baseline" | "baseline" => Ok(Mode::InfiniteNtkBaseline),
            other => Err(Error::invalid(format!("unknown training mode {other:?}"))),
        }
    }
}

/// Settings of a function-space training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub lr: f64,
    /// Ignored by the gradient-flow mode, which always uses the full batch.
    pub batch_size: usize,
    pub steps: usize,
    pub eval_every: usize,
    pub seed: u64,
    /// Multiplies `χ = F − y`.
    pub loss_scale: f64,
    /// Bottleneck width `d`; `None` is an infinite bottleneck.
    pub bottleneck: Option<usize>,
    /// Hidden width of the initialization snapshot.
    pub oracle_width: usize,
    /// Weight matrices in `g`.
    pub depth_g: usize,
    pub activation: Activation,
}

impl TrainConfig {
    pub fn new(mode: Mode, bottleneck: Option<usize>) -> Self {
        TrainConfig {
            mode,
            lr: 250.0,
            batch_size: 20,
            steps: 1000,
            eval_every: 100,
            seed: 0,
            loss_scale: 1.0,
            bottleneck,
            oracle_width: DEFAULT_WIDTH,
            depth_g: 2,
            activation: Activation::Relu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::invalid("lr must be a finite non-negative number"));
        }
        if self.batch_size == 0 || self.depth_g == 0 || self.oracle_width == 0 {
            return Err(Error::invalid("batch size, depth and oracle width must be positive"));
        }
        if !(self.loss_scale > 0.0) {
            return Err(Error::invalid("loss scale must be positive"));
        }
        match (self.mode, self.bottleneck) {
            (Mode::InfiniteNtkBaseline, _) => {}
            (_, None) => return Err(Error::invalid("an infinite bottleneck requires the NTK baseline mode")),
            (_, Some(0)) => return Err(Error::invalid("bottleneck width must be positive")),
            _ => {}
        }
        if self.activation.kernel().is_none() {
            return Err(Error::invalid("function-space training needs relu or linear activations"));
        }
        Ok(())
    }

    fn kernel_activation(&self) -> KernelActivation {
        self.activation.kernel().expect("validated")
    }
}

#[derive(Debug, Clone)]
pub enum TrainedState {
    Bottleneck(Box<FunctionState>),
    Baseline(BaselineState),
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub rows: Vec<MetricsRow>,
    pub state: TrainedState,
}

pub fn run_training(config: &TrainConfig, data: &Dataset) -> Result<TrainingOutcome> {
    run_training_with(config, data, None, |_| {})
}

/// Runs `config` on `data`, calling `on_row` for every metrics row as it is
/// produced. `oracle` replaces the snapshot drawn from the config seed.
pub fn run_training_with<F>(
    config: &TrainConfig,
    data: &Dataset,
    oracle: Option<WideNetSnapshot>,
    mut on_row: F,
) -> Result<TrainingOutcome>
where
    F: FnMut(&MetricsRow),
{
    config.validate()?;
    let start = Instant::now();
    let mut state = init_state(config, data, oracle)?;
    let mut sampler = BatchSampler::new(data.n_train(), config.batch_size, config.seed, 1);
    let full: Vec<usize> = (0..data.n_train()).collect();
    let mut rows = Vec::new();

    let mut emit = |state: &TrainedState, step: usize, rows: &mut Vec<MetricsRow>| -> Result<()> {
        let (train_pred, test_pred) = predictions(state)?;
        let train = evaluate(train_pred.view(), data.train_y.view(), data.classification);
        let test = evaluate(test_pred.view(), data.test_y.view(), data.classification);
        if !train.loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at step {step}")));
        }
        let row = MetricsRow {
            step,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            train_loss: train.loss,
            test_loss: test.loss,
            train_acc: train.accuracy,
            test_acc: test.accuracy,
            bottleneck_width: config.bottleneck.filter(|_| config.mode != Mode::InfiniteNtkBaseline),
            mode: config.mode.to_string(),
            seed: config.seed,
        };
        on_row(&row);
        rows.push(row);
        Ok(())
    };

    emit(&state, 0, &mut rows)?;
    for step in 1..=config.steps {
        let batch = if config.mode == Mode::BottleneckGradientFlowEuler {
            full.clone()
        } else {
            sampler.next_batch()
        };
        let y = data.train_y.select(Axis(0), &batch);
        match &mut state {
            TrainedState::Bottleneck(s) => s.sgd_step(&batch, y.view())?,
            TrainedState::Baseline(s) => s.ntk_baseline_step(&batch, y.view())?,
        }
        if step == config.steps || (config.eval_every > 0 && step % config.eval_every == 0) {
            emit(&state, step, &mut rows)?;
        }
    }
    Ok(TrainingOutcome { rows, state })
}

fn predictions(state: &TrainedState) -> Result<(Array2<f64>, Array2<f64>)> {
    Ok(match state {
        TrainedState::Bottleneck(s) => (s.eval_f(Points::Train)?, s.eval_f(Points::Test)?),
        TrainedState::Baseline(s) => (s.train_f().to_owned(), s.test_f().to_owned()),
    })
}

fn init_state(config: &TrainConfig, data: &Dataset, oracle: Option<WideNetSnapshot>) -> Result<TrainedState> {
    let act = config.kernel_activation();
    if config.mode == Mode::InfiniteNtkBaseline {
        let g_cfg = KernelConfig {
            activation: act,
            depth: config.depth_g,
            ..KernelConfig::relu(data.input_dim())
        };
        let f_cfg = KernelConfig {
            activation: act,
            ..KernelConfig::relu(data.input_dim())
        };
        let all = concatenate(Axis(0), &[data.train_x.view(), data.test_x.view()]).expect("same width");
        let f0_seed: u64 = rng::stream(config.seed, 2).random();
        let f0 = baseline_initial_outputs(all.view(), &g_cfg, &f_cfg, data.output_dim(), f0_seed)?;
        let state = BaselineState::new(
            data.train_x.view(),
            data.test_x.view(),
            &g_cfg,
            &f_cfg,
            f0,
            config.lr,
            config.loss_scale,
        )?;
        return Ok(TrainedState::Baseline(state));
    }
    let d = config.bottleneck.expect("validated");
    let oracle = match oracle {
        Some(o) => o,
        None => init_wide_net(
            (data.input_dim(), d, data.output_dim()),
            config.depth_g,
            config.activation,
            config.oracle_width,
            config.seed,
        )?,
    };
    let kernels = Kernels::for_snapshot(&oracle)?;
    let integrator = if config.mode == Mode::BottleneckGradientFlowEuler {
        Integrator::Euler
    } else {
        Integrator::Sgd
    };
    let state = FunctionState::new(
        oracle,
        kernels,
        data.train_x.view(),
        data.test_x.view(),
        config.lr,
        config.loss_scale,
        integrator,
    )?;
    Ok(TrainedState::Bottleneck(Box::new(state)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_synthetic_gp;

    fn small(mode: Mode, d: Option<usize>) -> TrainConfig {
        TrainConfig {
            lr: 0.5,
            batch_size: 4,
            steps: 6,
            eval_every: 3,
            oracle_width: 64,
            ..TrainConfig::new(mode, d)
        }
    }

    #[test]
    fn zero_steps_emit_initial_row() {
        let data = gen_synthetic_gp(10, 4, 3, 2, 1).unwrap();
        let cfg = TrainConfig {
            steps: 0,
            ..small(Mode::BottleneckSgd, Some(2))
        };
        let out = run_training(&cfg, &data).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.rows[0].step, 0);
    }

    #[test]
    fn zero_lr_rows_identical() {
        let data = gen_synthetic_gp(10, 4, 3, 2, 1).unwrap();
        for mode in [Mode::BottleneckSgd, Mode::InfiniteNtkBaseline, Mode::BottleneckGradientFlowEuler] {
            let cfg = TrainConfig {
                lr: 0.0,
                ..small(mode, Some(2))
            };
            let out = run_training(&cfg, &data).unwrap();
            assert_eq!(out.rows.len(), 3);
            for r in &out.rows {
                assert_eq!((r.train_loss, r.test_loss), (out.rows[0].train_loss, out.rows[0].test_loss));
            }
        }
    }

    #[test]
    fn training_reduces_loss() {
        let data = gen_synthetic_gp(16, 4, 3, 2, 5).unwrap();
        for mode in [Mode::BottleneckSgd, Mode::InfiniteNtkBaseline] {
            let cfg = TrainConfig {
                steps: 40,
                lr: 0.2,
                ..small(mode, Some(3))
            };
            let out = run_training(&cfg, &data).unwrap();
            assert!(out.rows.last().unwrap().train_loss < out.rows[0].train_loss, "{mode}");
        }
    }

    #[test]
    fn infinite_bottleneck_needs_baseline() {
        assert!(small(Mode::BottleneckSgd, None).validate().is_err());
        assert!(small(Mode::InfiniteNtkBaseline, None).validate().is_ok());
    }
}
