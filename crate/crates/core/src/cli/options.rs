use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;

use crate::data::Normalization;
use crate::error::{Error, Result};

/// Multiplier of `χ = F − y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossScale {
    /// Per-sample `½‖F − y‖²` summed over the batch.
    Sum,
    /// The sum divided by batch size times output dimension.
    Mean,
    Value(f64),
}

impl LossScale {
    pub fn resolve(self, batch: usize, output_dim: usize) -> f64 {
        match self {
            LossScale::Sum => 1.0,
            LossScale::Mean => 1.0 / (batch * output_dim) as f64,
            LossScale::Value(v) => v,
        }
    }
}

impl fmt::Display for LossScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossScale::Sum => f.write_str("sum"),
            LossScale::Mean => f.write_str("mean"),
            LossScale::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for LossScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(LossScale::Sum),
            "mean" => Ok(LossScale::Mean),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && v.is_finite())
                .map(LossScale::Value)
                .ok_or_else(|| Error::invalid(format!("loss scale must be sum, mean or a positive number, got {s:?}"))),
        }
    }
}

/// Bottleneck width given on the command line: an integer or `inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Width(pub Option<usize>);

impl fmt::Display for Width {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(d) => write!(f, "{d}"),
            None => f.write_str("inf"),
        }
    }
}

impl FromStr for Width {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "inf" {
            return Ok(Width(None));
        }
        match s.parse::<usize>() {
            Ok(d) if d > 0 => Ok(Width(Some(d))),
            _ => Err(Error::invalid(format!("bottleneck width must be a positive integer or inf, got {s:?}"))),
        }
    }
}

/// Comma-separated positive integers.
pub fn parse_width_list(s: &str) -> Result<Vec<usize>> {
    let out: Vec<usize> = s
        .split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(Error::invalid(format!("expected a list of positive integers, got {s:?}"))),
        })
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::invalid("empty list"));
    }
    Ok(out)
}

/// Comma-separated `FxG` depth pairs such as `1x1,2x2`.
pub fn parse_depth_pairs(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .map(|t| {
            let (a, b) = t
                .trim()
                .split_once('x')
                .ok_or_else(|| Error::invalid(format!("depth pairs look like 2x2, got {t:?}")))?;
            match (a.parse::<usize>(), b.parse::<usize>()) {
                (Ok(f), Ok(g)) if f > 0 && g > 0 => Ok((f, g)),
                _ => Err(Error::invalid(format!("bad depth pair {t:?}"))),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    Synthetic,
    Mnist,
    Cifar,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Synthetic => "synthetic",
            DatasetKind::Mnist => "mnist",
            DatasetKind::Cifar => "cifar",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Generated deep-GP regression, lr 2000, batch 20.
    Synthetic,
    /// MNIST classification, lr 250, batch 20.
    Mnist,
    /// CIFAR-10 dog vs deer, lr 1000, batch 20.
    Cifar,
    /// Full-batch gradient descent with lr 1e-3 for the residual checks.
    VerifyGd,
    /// Gradient flow with lr 1e-4 for the deep linear experiments.
    VerifyLinear,
    /// Four-layer finite networks on MNIST with batch 5.
    FiniteSweep,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

/// Hyperparameters a preset fills in when the flag is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetValues {
    pub dataset: Option<DatasetKind>,
    pub lr: f64,
    pub batch: usize,
    pub steps: usize,
    pub loss_scale: LossScale,
    pub normalization: Normalization,
    pub width: usize,
    /// Desk-scale `(train, test)` sizes; `--full` lifts them.
    pub desk_size: (usize, usize),
    pub full_size: Option<(usize, usize)>,
}

impl Preset {
    pub fn values(self) -> PresetValues {
        match self {
            Preset::Synthetic => PresetValues {
                dataset: Some(DatasetKind::Synthetic),
                lr: 2000.0,
                batch: 20,
                steps: 1000,
                loss_scale: LossScale::Value(1e-4),
                normalization: Normalization::MeanSqNorm,
                width: crate::oracle::DEFAULT_WIDTH,
                desk_size: (500, 500),
                full_size: Some((2000, 2000)),
            },
            Preset::Mnist => PresetValues {
                dataset: Some(DatasetKind::Mnist),
                lr: 250.0,
                batch: 20,
                steps: 1000,
                loss_scale: LossScale::Mean,
                normalization: Normalization::UnitPixels,
                width: crate::oracle::DEFAULT_WIDTH,
                desk_size: (2000, 500),
                full_size: None,
            },
            Preset::Cifar => PresetValues {
                dataset: Some(DatasetKind::Cifar),
                lr: 1000.0,
                batch: 20,
                steps: 1000,
                loss_scale: LossScale::Mean,
                normalization: Normalization::UnitPixels,
                width: crate::oracle::DEFAULT_WIDTH,
                desk_size: (2000, 500),
                full_size: None,
            },
            Preset::VerifyGd => PresetValues {
                dataset: None,
                lr: 1e-3,
                batch: 100,
                steps: 100,
                loss_scale: LossScale::Sum,
                normalization: Normalization::None,
                width: 20_000,
                desk_size: (100, 0),
                full_size: None,
            },
            Preset::VerifyLinear => PresetValues {
                dataset: None,
                lr: 1e-4,
                batch: 100,
                steps: 200,
                loss_scale: LossScale::Sum,
                normalization: Normalization::None,
                width: 5000,
                desk_size: (100, 0),
                full_size: None,
            },
            Preset::FiniteSweep => PresetValues {
                dataset: Some(DatasetKind::Mnist),
                lr: 25.0,
                batch: 5,
                steps: 4000,
                loss_scale: LossScale::Mean,
                normalization: Normalization::UnitPixels,
                width: 2000,
                desk_size: (2000, 500),
                full_size: None,
            },
        }
    }

    pub fn for_dataset(kind: DatasetKind) -> Preset {
        match kind {
            DatasetKind::Synthetic => Preset::Synthetic,
            DatasetKind::Mnist => Preset::Mnist,
            DatasetKind::Cifar => Preset::Cifar,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trips() {
        for s in ["sum", "mean", "0.25"] {
            assert_eq!(s.parse::<LossScale>().unwrap().to_string(), s);
        }
        assert!("-1".parse::<LossScale>().is_err());
        assert_eq!("inf".parse::<Width>().unwrap(), Width(None));
        assert_eq!("12".parse::<Width>().unwrap().to_string(), "12");
        assert!("0".parse::<Width>().is_err());
        assert_eq!(parse_width_list("1, 4,16").unwrap(), vec![1, 4, 16]);
        assert_eq!(parse_depth_pairs("1x1,2x3").unwrap(), vec![(1, 1), (2, 3)]);
        assert!(parse_depth_pairs("2").is_err());
        assert_eq!(Preset::FiniteSweep.to_string(), "finite-sweep");
    }

    #[test]
    fn mean_scale_divides_by_batch_and_outputs() {
        assert_eq!(LossScale::Mean.resolve(20, 10), 0.005);
        assert_eq!(LossScale::Sum.resolve(20, 10), 1.0);
    }
}
