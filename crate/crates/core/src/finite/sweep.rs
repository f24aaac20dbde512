//! Mini-batch SGD of four-layer finite networks over a list of bottleneck
//! widths.

use std::time::Instant;

use ndarray::Axis;
use rayon::prelude::*;

use super::{BottleneckNet, MlpSpec};
use crate::activation::Activation;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsRow};
use crate::rng::BatchSampler;

pub const SWEEP_MODE: &str = "finite_sgd";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub widths: Vec<usize>,
    /// Hidden width `n` of `g` and `f`.
    pub hidden: usize,
    pub activation: Activation,
    pub lr: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub eval_every: usize,
    pub loss_scale: f64,
    pub seed: u64,
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::invalid("sweep widths must be a nonempty list of positive integers"));
        }
        if self.hidden == 0 || self.batch_size == 0 || !(self.lr > 0.0) || !(self.loss_scale > 0.0) {
            return Err(Error::invalid("sweep needs positive hidden width, batch size, lr and loss scale"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub width: usize,
    pub rows: Vec<MetricsRow>,
}

impl SweepResult {
    pub fn final_row(&self) -> &MetricsRow {
        self.rows.last().expect("every run emits the step-0 row")
    }
}

/// Trains one network per bottleneck width on the same data and batch
/// order. Widths run in parallel; each has its own initialization stream.
pub fn sweep_bottleneck(config: &SweepConfig, data: &Dataset) -> Result<Vec<SweepResult>> {
    config.validate()?;
    config
        .widths
        .par_iter()
        .enumerate()
        .map(|(k, &width)| train_one(config, data, width, k as u64))
        .collect()
}

fn train_one(config: &SweepConfig, data: &Dataset, width: usize, index: u64) -> Result<SweepResult> {
    let start = Instant::now();
    let mut spec = MlpSpec::four_layer(
        data.input_dim(),
        config.hidden,
        width,
        data.output_dim(),
        config.activation,
        config.seed,
    );
    spec.seed = config.seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut net = BottleneckNet::init(&spec)?;
    let mut sampler = BatchSampler::new(data.n_train(), config.batch_size, config.seed, 1);

    let record = |net: &BottleneckNet, step: usize| -> Result<MetricsRow> {
        let (_, train_pred) = net.forward_batch(data.train_x.view())?;
        let (_, test_pred) = net.forward_batch(data.test_x.view())?;
        let train = evaluate(train_pred.view(), data.train_y.view(), data.classification);
        let test = evaluate(test_pred.view(), data.test_y.view(), data.classification);
        if !train.loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at step {step} (width {width})")));
        }
        Ok(MetricsRow {
            step,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            train_loss: train.loss,
            test_loss: test.loss,
            train_acc: train.accuracy,
            test_acc: test.accuracy,
            bottleneck_width: Some(width),
            mode: SWEEP_MODE.into(),
            seed: config.seed,
        })
    };

    let mut rows = vec![record(&net, 0)?];
    for step in 1..=config.steps {
        let batch = sampler.next_batch();
        let x = data.train_x.select(Axis(0), &batch);
        let y = data.train_y.select(Axis(0), &batch);
        net.sgd_update(x.view(), y.view(), config.lr, config.loss_scale)?;
        if step == config.steps || (config.eval_every > 0 && step % config.eval_every == 0) {
            rows.push(record(&net, step)?);
        }
    }
    Ok(SweepResult { width, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_synthetic_gp;

    #[test]
    fn degenerate_width_list_runs() {
        let data = gen_synthetic_gp(12, 4, 3, 2, 1).unwrap();
        let config = SweepConfig {
            widths: vec![3],
            hidden: 16,
            activation: Activation::Relu,
            lr: 0.05,
            batch_size: 5,
            steps: 6,
            eval_every: 2,
            loss_scale: 1.0,
            seed: 2,
        };
        let out = sweep_bottleneck(&config, &data).unwrap();
        assert_eq!(out.len(), 1);
        let steps: Vec<usize> = out[0].rows.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 2, 4, 6]);
        assert!(out[0].rows.iter().all(|r| r.bottleneck_width == Some(3)));
    }
}
