//! MNIST in the IDX format (big-endian headers, row-major `u8` pixels),
//! optionally gzip-compressed.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};
use flate2::read::GzDecoder;
use ndarray::Array2;

use super::{one_hot, Dataset, Split};
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;
const MNIST_CLASSES: usize = 10;

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut raw)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn truncated(what: &str) -> Error {
    Error::Format(format!("truncated IDX {what} file"))
}

fn parse_images(bytes: &[u8]) -> Result<(usize, usize, &[u8])> {
    let mut r = bytes;
    let magic = r.read_u32::<BigEndian>().map_err(|_| truncated("image"))?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format(format!("bad IDX image magic {magic:#010x}")));
    }
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        *d = r.read_u32::<BigEndian>().map_err(|_| truncated("image"))? as usize;
    }
    let [n, rows, cols] = dims;
    let pixels = rows * cols;
    if r.len() < n * pixels {
        return Err(truncated("image"));
    }
    Ok((n, pixels, &r[..n * pixels]))
}

fn parse_labels(bytes: &[u8]) -> Result<&[u8]> {
    let mut r = bytes;
    let magic = r.read_u32::<BigEndian>().map_err(|_| truncated("label"))?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format(format!("bad IDX label magic {magic:#010x}")));
    }
    let n = r.read_u32::<BigEndian>().map_err(|_| truncated("label"))? as usize;
    if r.len() < n {
        return Err(truncated("label"));
    }
    Ok(&r[..n])
}

/// Reads an image/label file pair. Pixels are scaled to `[0, 1]` and
/// targets are 10-dimensional one-hot rows. `classes` keeps only the listed
/// digits; `limit` caps the number of samples kept.
pub fn load_mnist_idx(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    limit: Option<usize>,
    classes: Option<&[usize]>,
) -> Result<Split> {
    if limit == Some(0) {
        return Err(Error::invalid("MNIST limit must be positive"));
    }
    let image_bytes = read_all(images.as_ref())?;
    let label_bytes = read_all(labels.as_ref())?;
    let (n, pixels, data) = parse_images(&image_bytes)?;
    let labels = parse_labels(&label_bytes)?;
    if labels.len() != n {
        return Err(Error::Format(format!("{n} images but {} labels", labels.len())));
    }
    let cap = limit.unwrap_or(usize::MAX);
    let keep: Vec<usize> = (0..n)
        .filter(|&i| classes.is_none_or(|c| c.contains(&(labels[i] as usize))))
        .take(cap)
        .collect();
    if keep.is_empty() {
        return Err(Error::invalid("no MNIST samples selected"));
    }
    let mut x = Array2::zeros((keep.len(), pixels));
    for (row, &i) in keep.iter().enumerate() {
        for (j, &p) in data[i * pixels..(i + 1) * pixels].iter().enumerate() {
            x[[row, j]] = f64::from(p) / 255.0;
        }
    }
    let y = one_hot(&keep.iter().map(|&i| labels[i] as usize).collect::<Vec<_>>(), MNIST_CLASSES)?;
    Split::new(x, y)
}

fn find(dir: &Path, stems: &[&str]) -> Result<PathBuf> {
    for stem in stems {
        for suffix in ["", ".gz"] {
            let p = dir.join(format!("{stem}{suffix}"));
            if p.is_file() {
                return Ok(p);
            }
        }
    }
    Err(Error::invalid(format!("no {} file in {}", stems[0], dir.display())))
}

/// Loads the standard four MNIST files from `dir`.
pub fn load_mnist_dir(dir: impl AsRef<Path>, train_limit: Option<usize>, test_limit: Option<usize>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let train = load_mnist_idx(
        find(dir, &["train-images-idx3-ubyte", "train-images.idx3-ubyte"])?,
        find(dir, &["train-labels-idx1-ubyte", "train-labels.idx1-ubyte"])?,
        train_limit,
        None,
    )?;
    let test = load_mnist_idx(
        find(dir, &["t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"])?,
        find(dir, &["t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"])?,
        test_limit,
        None,
    )?;
    Dataset::from_splits("mnist", train, test, true)
}

/// Writes `images` (each `rows * cols` bytes) as an uncompressed IDX file.
pub fn write_idx_images(path: impl AsRef<Path>, rows: usize, cols: usize, images: &[Vec<u8>]) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    w.write_u32::<BigEndian>(IMAGES_MAGIC)?;
    for v in [images.len(), rows, cols] {
        w.write_u32::<BigEndian>(v as u32)?;
    }
    for img in images {
        if img.len() != rows * cols {
            return Err(Error::invalid("image size does not match rows * cols"));
        }
        w.write_all(img)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    w.write_u32::<BigEndian>(LABELS_MAGIC)?;
    w.write_u32::<BigEndian>(labels.len() as u32)?;
    w.write_all(labels)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;

    fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
        let images: Vec<Vec<u8>> = (0..4u8).map(|k| vec![k, 255, 0, 51 * k, 7, k * 2]).collect();
        let (ip, lp) = (dir.join("img"), dir.join("lab"));
        write_idx_images(&ip, 2, 3, &images).unwrap();
        write_idx_labels(&lp, &[3, 0, 9, 3]).unwrap();
        (ip, lp)
    }

    #[test]
    fn round_trips_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = fixture(dir.path());
        let s = load_mnist_idx(&ip, &lp, None, None).unwrap();
        assert_eq!(s.x.dim(), (4, 6));
        for k in 0..4 {
            let expected = [k as f64, 255.0, 0.0, 51.0 * k as f64, 7.0, 2.0 * k as f64];
            for (j, e) in expected.iter().enumerate() {
                assert_eq!(s.x[[k, j]], e / 255.0);
            }
        }
        assert_eq!(s.y[[0, 3]], 1.0);
        assert_eq!(s.y.row(0).sum(), 1.0);
        assert_eq!(s.y[[2, 9]], 1.0);
    }

    #[test]
    fn limit_and_classes() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = fixture(dir.path());
        assert_eq!(load_mnist_idx(&ip, &lp, Some(2), None).unwrap().len(), 2);
        let threes = load_mnist_idx(&ip, &lp, None, Some(&[3])).unwrap();
        assert_eq!(threes.len(), 2);
        assert!(load_mnist_idx(&ip, &lp, Some(0), None).is_err());
    }

    #[test]
    fn reads_gzip_and_rejects_bad_headers() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = fixture(dir.path());
        let gz = dir.path().join("img.gz");
        let mut enc = GzEncoder::new(File::create(&gz).unwrap(), Compression::default());
        enc.write_all(&std::fs::read(&ip).unwrap()).unwrap();
        enc.finish().unwrap();
        assert_eq!(load_mnist_idx(&gz, &lp, None, None).unwrap(), load_mnist_idx(&ip, &lp, None, None).unwrap());

        assert!(load_mnist_idx(&lp, &lp, None, None).is_err());
        let bytes = std::fs::read(&ip).unwrap();
        std::fs::write(&ip, &bytes[..bytes.len() - 1]).unwrap();
        assert!(load_mnist_idx(&ip, &lp, None, None).is_err());
    }
}
