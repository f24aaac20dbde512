use ndarray::{Array2, ArrayView2};

use crate::error::{check_len, Result};

/// One SGD step's stored quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub batch_indices: Vec<usize>,
    /// `g_{s,i}` for the batch, `B × d`.
    pub g_batch: Array2<f64>,
    /// `χ_{s,i}`, `B × d_r`.
    pub chi_batch: Array2<f64>,
    /// `J_{s,i}ᵀ χ_{s,i}`, `B × d`.
    pub p_batch: Array2<f64>,
}

/// All history rows in contiguous row-major buffers, so that history sums
/// reduce to matrix products.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub(crate) d: usize,
    pub(crate) dr: usize,
    pub(crate) g: Vec<f64>,
    pub(crate) chi: Vec<f64>,
    pub(crate) p: Vec<f64>,
    pub(crate) norms: Vec<f64>,
    pub(crate) indices: Vec<usize>,
    /// Row offset of every step, plus the total row count at the end.
    pub(crate) offsets: Vec<usize>,
}

impl History {
    pub fn new(d: usize, dr: usize) -> Self {
        History {
            d,
            dr,
            offsets: vec![0],
            ..Default::default()
        }
    }

    /// Number of recorded steps.
    pub fn steps(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of recorded samples over all steps.
    pub fn rows(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0
    }

    pub fn push(&mut self, entry: &HistoryEntry) -> Result<()> {
        let b = entry.batch_indices.len();
        check_len("history g rows", b, entry.g_batch.nrows())?;
        check_len("history χ rows", b, entry.chi_batch.nrows())?;
        check_len("history p rows", b, entry.p_batch.nrows())?;
        check_len("history g width", self.d, entry.g_batch.ncols())?;
        check_len("history χ width", self.dr, entry.chi_batch.ncols())?;
        check_len("history p width", self.d, entry.p_batch.ncols())?;
        self.g.extend(entry.g_batch.iter());
        self.chi.extend(entry.chi_batch.iter());
        self.p.extend(entry.p_batch.iter());
        self.norms
            .extend(entry.g_batch.rows().into_iter().map(|r| r.dot(&r).sqrt()));
        self.indices.extend_from_slice(&entry.batch_indices);
        self.offsets.push(self.rows());
        Ok(())
    }

    pub fn entry(&self, step: usize) -> HistoryEntry {
        let (a, b) = (self.offsets[step], self.offsets[step + 1]);
        let rows = |buf: &[f64], w: usize| {
            Array2::from_shape_vec((b - a, w), buf[a * w..b * w].to_vec()).expect("history block")
        };
        HistoryEntry {
            batch_indices: self.indices[a..b].to_vec(),
            g_batch: rows(&self.g, self.d),
            chi_batch: rows(&self.chi, self.dr),
            p_batch: rows(&self.p, self.d),
        }
    }

    pub fn g_view(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.rows(), self.d), &self.g).expect("history layout")
    }

    pub fn chi_view(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.rows(), self.dr), &self.chi).expect("history layout")
    }

    pub fn p_view(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.rows(), self.d), &self.p).expect("history layout")
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Training index of every history row.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn entries_round_trip() {
        let mut h = History::new(2, 1);
        let e0 = HistoryEntry {
            batch_indices: vec![3, 1],
            g_batch: array![[3.0, 4.0], [1.0, 0.0]],
            chi_batch: array![[0.5], [-1.0]],
            p_batch: array![[1.0, 1.0], [2.0, 2.0]],
        };
        let e1 = HistoryEntry {
            batch_indices: vec![0],
            g_batch: array![[0.0, 2.0]],
            chi_batch: array![[2.0]],
            p_batch: array![[0.0, 1.0]],
        };
        h.push(&e0).unwrap();
        h.push(&e1).unwrap();
        assert_eq!((h.steps(), h.rows()), (2, 3));
        assert_eq!(h.entry(0), e0);
        assert_eq!(h.entry(1), e1);
        assert_eq!(h.norms(), &[5.0, 1.0, 2.0]);
        assert_eq!(h.g_view().row(2).to_vec(), vec![0.0, 2.0]);
    }
}
