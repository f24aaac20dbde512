//! The infinite-bottleneck baseline: plain kernel gradient descent with the
//! frozen NTK of `f ∘ g` when the bottleneck is infinitely wide as well.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis, Zip};

use crate::error::{check_len, Error, Result};
use crate::kernels::KernelConfig;
use crate::linalg::row_norms;
use crate::oracle::gp_sample_from_gram;

/// `(Θ, Σ)` of the composed network between every row of `a` and every row
/// of `b`.
pub fn infinite_bottleneck_gram(
    a: ArrayView2<'_, f64>,
    b: ArrayView2<'_, f64>,
    g: &KernelConfig,
    f: &KernelConfig,
) -> Result<(Array2<f64>, Array2<f64>)> {
    g.validate()?;
    f.validate()?;
    check_len("gram input dimension", a.ncols(), b.ncols())?;
    let (na, nb) = (row_norms(a), row_norms(b));
    let mut ntk = a.dot(&b.t());
    let mut nngp = Array2::zeros(ntk.dim());
    Zip::indexed(&mut ntk).and(&mut nngp).par_for_each(|(i, j), t, s| {
        let (tv, sv) = crate::kernels::infinite_bottleneck_scalar(*t, na[i], nb[j], g, f);
        *t = tv;
        *s = sv;
    });
    Ok((ntk, nngp))
}

/// Initial outputs of the infinitely wide network on the rows of `points`:
/// one joint GP draw with the composed NNGP kernel.
pub fn baseline_initial_outputs(
    points: ArrayView2<'_, f64>,
    g: &KernelConfig,
    f: &KernelConfig,
    out_dim: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    let (_, nngp) = infinite_bottleneck_gram(points, points, g, f)?;
    Ok(gp_sample_from_gram(nngp.view(), points, out_dim, seed, 0.0)?.values)
}

/// Kernel gradient descent with a frozen NTK gram.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineState {
    step: usize,
    lr: f64,
    loss_scale: f64,
    n_train: usize,
    /// `Θ_∞(ξ_j, ξ_i)` for every tracked `j` (train then test) and training `i`.
    gram: Array2<f64>,
    f: Array2<f64>,
}

impl BaselineState {
    pub fn new(
        train_x: ArrayView2<'_, f64>,
        test_x: ArrayView2<'_, f64>,
        g: &KernelConfig,
        f: &KernelConfig,
        f0: Array2<f64>,
        lr: f64,
        loss_scale: f64,
    ) -> Result<Self> {
        let all = concatenate(Axis(0), &[train_x, test_x])
            .map_err(|_| Error::invalid("train and test inputs differ in width"))?;
        check_len("initial outputs", all.nrows(), f0.nrows())?;
        let (gram, _) = infinite_bottleneck_gram(all.view(), train_x, g, f)?;
        Self::from_gram(gram, train_x.nrows(), f0, lr, loss_scale)
    }

    /// State from a precomputed `tracked × train` gram.
    pub fn from_gram(gram: Array2<f64>, n_train: usize, f0: Array2<f64>, lr: f64, loss_scale: f64) -> Result<Self> {
        check_len("gram columns", n_train, gram.ncols())?;
        check_len("gram rows", f0.nrows(), gram.nrows())?;
        if !(lr >= 0.0) || !(loss_scale > 0.0) {
            return Err(Error::invalid("lr must be non-negative and loss_scale positive"));
        }
        Ok(BaselineState {
            step: 0,
            lr,
            loss_scale,
            n_train,
            gram,
            f: f0,
        })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn train_f(&self) -> ArrayView2<'_, f64> {
        self.f.slice(s![..self.n_train, ..])
    }

    pub fn test_f(&self) -> ArrayView2<'_, f64> {
        self.f.slice(s![self.n_train.., ..])
    }

    /// `F_{t+1}(ξ) = F_t(ξ) − μ Σ_{i ∈ batch} Θ_∞(ξ, ξ_i) χ_{t,i}` on every
    /// tracked input.
    pub fn ntk_baseline_step(&mut self, batch: &[usize], targets: ArrayView2<'_, f64>) -> Result<()> {
        check_len("targets per batch index", batch.len(), targets.nrows())?;
        check_len("target width", self.f.ncols(), targets.ncols())?;
        if batch.iter().any(|&i| i >= self.n_train) {
            return Err(Error::invalid("batch index outside the training set"));
        }
        let chi = (&self.f.select(Axis(0), batch) - &targets) * self.loss_scale;
        if chi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("loss derivative at step {}", self.step)));
        }
        let cols = self.gram.select(Axis(1), batch);
        self.f.scaled_add(-self.lr, &cols.dot(&chi));
        self.step += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn single_sample_scalar_update() {
        let c = 0.8;
        let mut s = BaselineState::from_gram(array![[c]], 1, array![[6.0]], 0.1, 1.0).unwrap();
        s.ntk_baseline_step(&[0], array![[0.0]].view()).unwrap();
        assert_abs_diff_eq!(s.train_f()[[0, 0]], 6.0 * (1.0 - 0.1 * c), epsilon = 1e-15);
        let before = s.clone();
        let target = s.train_f().to_owned();
        s.ntk_baseline_step(&[0], target.view()).unwrap();
        assert_eq!(s.train_f(), before.train_f());
    }

    #[test]
    fn gram_diagonal() {
        let x = array![[1.0, -1.0, 1.0], [1.0, 1.0, 1.0]];
        let (ntk, nngp) =
            infinite_bottleneck_gram(x.view(), x.view(), &KernelConfig::relu(3), &KernelConfig::relu(7)).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(ntk[[i, i]], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(nngp[[i, i]], 0.25, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(ntk[[0, 1]], ntk[[1, 0]], epsilon = 1e-15);
    }
}
