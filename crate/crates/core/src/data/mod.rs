//! Datasets: MNIST and CIFAR-10 readers, generated regression data and
//! input normalization.

mod cifar;
mod idx;
mod synthetic;

pub use cifar::{load_cifar10_dir, load_cifar10_pair, write_cifar10_records, CIFAR_DEER, CIFAR_DOG, CIFAR_RECORD_LEN};
pub use idx::{load_mnist_dir, load_mnist_idx, write_idx_images, write_idx_labels};
pub use synthetic::{gen_projection_labels, gen_projection_problem, gen_synthetic_gp, projection_matrix, SYNTHETIC_HIDDEN};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{s, Array2, ArrayView2, Axis};

use crate::error::{check_len, Error, Result};

/// How inputs were rescaled after loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// As produced by the loader or generator.
    None,
    /// One global factor so that the largest absolute training entry is 1.
    UnitPixels,
    /// One global factor so that the mean training `‖ξ‖²` equals `d₀`.
    #[default]
    MeanSqNorm,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::None => "none",
            Normalization::UnitPixels => "unit_pixels",
            Normalization::MeanSqNorm => "mean_sq_norm",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Normalization::None),
            "unit_pixels" => Ok(Normalization::UnitPixels),
            "mean_sq_norm" => Ok(Normalization::MeanSqNorm),
            other => Err(Error::invalid(format!("unknown normalization {other:?}"))),
        }
    }
}

/// Inputs and targets of one split, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
}

impl Split {
    pub fn new(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        check_len("targets per input", x.nrows(), y.nrows())?;
        Ok(Split { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    /// The first `n` samples.
    pub fn truncate(mut self, n: usize) -> Self {
        let n = n.min(self.len());
        self.x = self.x.slice(s![..n, ..]).to_owned();
        self.y = self.y.slice(s![..n, ..]).to_owned();
        self
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Split {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
        }
    }
}

/// Training and test data with their dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub train_x: Array2<f64>,
    pub train_y: Array2<f64>,
    pub test_x: Array2<f64>,
    pub test_y: Array2<f64>,
    pub normalization: Normalization,
    /// One-hot targets.
    pub classification: bool,
}

impl Dataset {
    pub fn from_splits(name: impl Into<String>, train: Split, test: Split, classification: bool) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::invalid("empty training set"));
        }
        check_len("test input dimension", train.x.ncols(), test.x.ncols())?;
        check_len("test target dimension", train.y.ncols(), test.y.ncols())?;
        let ds = Dataset {
            name: name.into(),
            train_x: train.x,
            train_y: train.y,
            test_x: test.x,
            test_y: test.y,
            normalization: Normalization::None,
            classification,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn input_dim(&self) -> usize {
        self.train_x.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.train_y.ncols()
    }

    pub fn n_train(&self) -> usize {
        self.train_x.nrows()
    }

    pub fn n_test(&self) -> usize {
        self.test_x.nrows()
    }

    pub fn train(&self) -> Split {
        Split {
            x: self.train_x.clone(),
            y: self.train_y.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [&self.train_x, &self.train_y, &self.test_x, &self.test_y];
        if all.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite(format!("dataset {}", self.name)));
        }
        if self.classification {
            for y in [&self.train_y, &self.test_y] {
                let ok = y.rows().into_iter().all(|r| {
                    r.iter().all(|&v| v == 0.0 || v == 1.0) && r.iter().filter(|&&v| v == 1.0).count() == 1
                });
                if !ok {
                    return Err(Error::Format("classification targets must be one-hot".into()));
                }
            }
        }
        Ok(())
    }

    /// Rescales train and test inputs by one common factor.
    pub fn normalize(&mut self, mode: Normalization) {
        let factor = match mode {
            Normalization::None => 1.0,
            Normalization::UnitPixels => {
                let max = self.train_x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if max > 0.0 {
                    1.0 / max
                } else {
                    1.0
                }
            }
            Normalization::MeanSqNorm => {
                let mean_sq = self.train_x.iter().map(|v| v * v).sum::<f64>() / self.n_train() as f64;
                if mean_sq > 0.0 {
                    (self.input_dim() as f64 / mean_sq).sqrt()
                } else {
                    1.0
                }
            }
        };
        if factor != 1.0 {
            self.train_x *= factor;
            self.test_x *= factor;
        }
        self.normalization = mode;
    }

    /// Keeps the first `n_train` training and `n_test` test samples.
    pub fn truncated(mut self, n_train: usize, n_test: usize) -> Self {
        let train = Split {
            x: self.train_x,
            y: self.train_y,
        }
        .truncate(n_train);
        let test = Split {
            x: self.test_x,
            y: self.test_y,
        }
        .truncate(n_test);
        self.train_x = train.x;
        self.train_y = train.y;
        self.test_x = test.x;
        self.test_y = test.y;
        self
    }

    /// Writes `<stem>_inputs.csv` and `<stem>_targets.csv` into `dir`, each
    /// row prefixed by its split.
    pub fn export_csv(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        write_split_csv(&dir.join(format!("{stem}_inputs.csv")), "x", self.train_x.view(), self.test_x.view())?;
        write_split_csv(&dir.join(format!("{stem}_targets.csv")), "y", self.train_y.view(), self.test_y.view())
    }
}

fn write_split_csv(path: &Path, prefix: &str, train: ArrayView2<'_, f64>, test: ArrayView2<'_, f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["split".to_string()];
    header.extend((0..train.ncols()).map(|j| format!("{prefix}{j}")));
    w.write_record(&header)?;
    for (split, m) in [("train", train), ("test", test)] {
        for row in m.rows() {
            let mut rec = vec![split.to_string()];
            rec.extend(row.iter().map(|v| format!("{v:e}")));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One-hot rows for integer labels.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<Array2<f64>> {
    let mut y = Array2::zeros((labels.len(), classes));
    for (i, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::Format(format!("label {l} out of range for {classes} classes")));
        }
        y[[i, l]] = 1.0;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn toy() -> Dataset {
        let train = Split::new(array![[1.0, 2.0], [3.0, -1.0]], array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let test = Split::new(array![[0.5, 0.5]], array![[1.0, 0.0]]).unwrap();
        Dataset::from_splits("toy", train, test, true).unwrap()
    }

    #[test]
    fn mean_sq_norm_is_idempotent() {
        let mut ds = toy();
        ds.normalize(Normalization::MeanSqNorm);
        let mean = ds.train_x.rows().into_iter().map(|r| r.dot(&r)).sum::<f64>() / 2.0;
        assert_relative_eq!(mean, 2.0, max_relative = 1e-12);
        let once = ds.clone();
        ds.normalize(Normalization::MeanSqNorm);
        for (a, b) in ds.train_x.iter().zip(&once.train_x) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn unit_pixels_scales_max_to_one() {
        let mut ds = toy();
        ds.normalize(Normalization::UnitPixels);
        assert_eq!(ds.train_x[[1, 0]], 1.0);
        assert_relative_eq!(ds.test_x[[0, 0]], 0.5 / 3.0);
    }

    #[test]
    fn rejects_bad_targets() {
        let train = Split::new(array![[1.0]], array![[1.0, 1.0]]).unwrap();
        let test = Split::new(Array2::zeros((0, 1)), Array2::zeros((0, 2))).unwrap();
        assert!(Dataset::from_splits("bad", train, test, true).is_err());
        let nan = Split::new(array![[f64::NAN]], array![[1.0]]).unwrap();
        let test = Split::new(Array2::zeros((0, 1)), Array2::zeros((0, 1))).unwrap();
        assert!(Dataset::from_splits("nan", nan, test, false).is_err());
    }

    #[test]
    fn one_hot_rows() {
        let y = one_hot(&[3], 10).unwrap();
        assert_eq!(y.row(0).iter().position(|&v| v == 1.0), Some(3));
        assert_eq!(y.sum(), 1.0);
        assert!(one_hot(&[10], 10).is_err());
    }

    #[test]
    fn csv_export_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        toy().export_csv(dir.path(), "toy").unwrap();
        let inputs = std::fs::read_to_string(dir.path().join("toy_inputs.csv")).unwrap();
        assert_eq!(inputs.lines().count(), 4);
        assert!(inputs.starts_with("split,x0,x1"));
        assert!(dir.path().join("toy_targets.csv").exists());
    }
}
