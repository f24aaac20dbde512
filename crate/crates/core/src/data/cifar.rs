//! CIFAR-10 binary batches (3073-byte records: label, then 3072 RGB bytes)
//! reduced to a two-class problem.

use std::path::Path;

use ndarray::Array2;

use super::{one_hot, Dataset, Split};
use crate::error::{Error, Result};

pub const CIFAR_RECORD_LEN: usize = 3073;
pub const CIFAR_DOG: u8 = 5;
pub const CIFAR_DEER: u8 = 4;

/// Keeps records labelled `class_a` (target `e₀`) or `class_b` (target
/// `e₁`) from the given batch files. Pixels are scaled to `[0, 1]`.
pub fn load_cifar10_pair<P: AsRef<Path>>(paths: &[P], class_a: u8, class_b: u8) -> Result<Split> {
    if class_a == class_b {
        return Err(Error::invalid("the two CIFAR classes must differ"));
    }
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for path in paths {
        let bytes = std::fs::read(path)?;
        if bytes.len() % CIFAR_RECORD_LEN != 0 {
            return Err(Error::Format(format!(
                "{} has {} bytes, not a multiple of {CIFAR_RECORD_LEN}",
                path.as_ref().display(),
                bytes.len()
            )));
        }
        for rec in bytes.chunks_exact(CIFAR_RECORD_LEN) {
            let label = if rec[0] == class_a {
                0
            } else if rec[0] == class_b {
                1
            } else {
                continue;
            };
            labels.push(label);
            pixels.extend(rec[1..].iter().map(|&p| f64::from(p) / 255.0));
        }
    }
    if labels.is_empty() {
        return Err(Error::invalid(format!("no CIFAR records with labels {class_a} or {class_b}")));
    }
    let x = Array2::from_shape_vec((labels.len(), CIFAR_RECORD_LEN - 1), pixels).expect("record shape");
    Split::new(x, one_hot(&labels, 2)?)
}

/// `data_batch_1.bin … data_batch_5.bin` and `test_batch.bin` from `dir`;
/// missing training batches are skipped.
pub fn load_cifar10_dir(dir: impl AsRef<Path>, class_a: u8, class_b: u8) -> Result<Dataset> {
    let dir = dir.as_ref();
    let train: Vec<_> = (1..=5)
        .map(|k| dir.join(format!("data_batch_{k}.bin")))
        .filter(|p| p.is_file())
        .collect();
    if train.is_empty() {
        return Err(Error::invalid(format!("no CIFAR-10 training batches in {}", dir.display())));
    }
    let train = load_cifar10_pair(&train, class_a, class_b)?;
    let test = load_cifar10_pair(&[dir.join("test_batch.bin")], class_a, class_b)?;
    Dataset::from_splits("cifar10", train, test, true)
}

/// Writes records `(label, 3072 pixel bytes)`.
pub fn write_cifar10_records(path: impl AsRef<Path>, records: &[(u8, Vec<u8>)]) -> Result<()> {
    let mut out = Vec::with_capacity(records.len() * CIFAR_RECORD_LEN);
    for (label, px) in records {
        if px.len() != CIFAR_RECORD_LEN - 1 {
            return Err(Error::invalid("a CIFAR record holds 3072 pixel bytes"));
        }
        out.push(*label);
        out.extend_from_slice(px);
    }
    std::fs::write(path, out)?;
    Ok(())
}
