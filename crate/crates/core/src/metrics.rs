//! Training metrics and their CSV form.

use std::io::Write;

use ndarray::ArrayView2;

use crate::error::Result;
use crate::finite::{argmax_accuracy, mean_half_sq_error};

pub const METRICS_HEADER: [&str; 9] = [
    "step",
    "wall_ms",
    "train_loss",
    "test_loss",
    "train_acc",
    "test_acc",
    "bottleneck_width",
    "mode",
    "seed",
];

/// One evaluation of a training run. Losses are means of `½‖F − y‖²`;
/// accuracies are `NaN` for regression data.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub step: usize,
    pub wall_ms: f64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    /// Bottleneck width, `None` for an infinite bottleneck.
    pub bottleneck_width: Option<usize>,
    pub mode: String,
    pub seed: u64,
}

/// Loss and accuracy of predictions against targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

pub fn evaluate(pred: ArrayView2<'_, f64>, target: ArrayView2<'_, f64>, classification: bool) -> Evaluation {
    if pred.nrows() == 0 {
        return Evaluation {
            loss: f64::NAN,
            accuracy: f64::NAN,
        };
    }
    Evaluation {
        loss: mean_half_sq_error(pred, target),
        accuracy: if classification {
            argmax_accuracy(pred, target)
        } else {
            f64::NAN
        },
    }
}

impl MetricsRow {
    pub fn width_label(&self) -> String {
        self.bottleneck_width.map_or_else(|| "inf".to_string(), |d| d.to_string())
    }

    fn record(&self) -> [String; 9] {
        [
            self.step.to_string(),
            format!("{:.3}", self.wall_ms),
            self.train_loss.to_string(),
            self.test_loss.to_string(),
            self.train_acc.to_string(),
            self.test_acc.to_string(),
            self.width_label(),
            self.mode.clone(),
            self.seed.to_string(),
        ]
    }
}

/// Writes rows under [`METRICS_HEADER`].
pub fn write_metrics<W: Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_file(path: impl AsRef<std::path::Path>, rows: &[MetricsRow]) -> Result<()> {
    write_metrics(std::fs::File::create(path)?, rows)
}
