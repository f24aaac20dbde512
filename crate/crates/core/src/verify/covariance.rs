//! Monte-Carlo check of the joint Gaussian law of `f` and `J` at
//! initialization for a two-layer ReLU network.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::kernels::{sigma_grad_kernels, KernelActivation, KernelConfig};
use crate::rng;

/// Replica blocks of the jackknife.
pub const JACKKNIFE_BLOCKS: usize = 10;

pub const DEVIATION_HEADER: [&str; 6] = ["kind", "pair_id", "n", "R", "deviation", "stderr"];

/// Which joint covariance is compared.
///
/// For an input pair `(a, b)` the compared vectors are `(f(a), f(b))`,
/// `(f(a), J(b))` and `(J(a), J(b))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovKind {
    FF,
    JF,
    JJ,
}

impl CovKind {
    pub const ALL: [CovKind; 3] = [CovKind::FF, CovKind::JF, CovKind::JJ];

    fn len(self, d: usize) -> usize {
        match self {
            CovKind::FF => 2,
            CovKind::JF => 1 + d,
            CovKind::JJ => 2 * d,
        }
    }
}

impl fmt::Display for CovKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CovKind::FF => "ff",
            CovKind::JF => "Jf",
            CovKind::JJ => "JJ",
        })
    }
}

impl FromStr for CovKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ff" => Ok(CovKind::FF),
            "jf" | "fj" => Ok(CovKind::JF),
            "jj" => Ok(CovKind::JJ),
            _ => Err(Error::invalid(format!("unknown covariance kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub kind: CovKind,
    pub pair_id: usize,
    pub n: usize,
    pub replicas: usize,
    /// `‖cov_emp − cov_theory‖_F / ‖cov_theory‖_F`
    pub deviation: f64,
    /// Jackknife standard error of `deviation`.
    pub stderr: f64,
}

/// `count` pairs of standard normal inputs of dimension `dim`.
pub fn random_input_pairs(count: usize, dim: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut r = rng::stream(seed, 0);
    (0..count)
        .map(|_| (rng::normal_vec(&mut r, dim), rng::normal_vec(&mut r, dim)))
        .collect()
}

/// Limit covariance of the compared vector of `kind` for the pair `(a, b)`.
pub fn theory_covariance(kind: CovKind, a: &[f64], b: &[f64]) -> Result<Array2<f64>> {
    check_len("covariance pair", a.len(), b.len())?;
    let d = a.len();
    let nngp = KernelConfig::relu(d);
    let sig = |x: &[f64], y: &[f64]| nngp.nngp(x, y);
    let grads = |x: &[f64], y: &[f64]| sigma_grad_kernels(x, y, d, KernelActivation::Relu);
    let mut c = Array2::zeros((kind.len(d), kind.len(d)));
    match kind {
        CovKind::FF => {
            let ab = sig(a, b)?;
            c[[0, 0]] = sig(a, a)?;
            c[[0, 1]] = ab;
            c[[1, 0]] = ab;
            c[[1, 1]] = sig(b, b)?;
        }
        CovKind::JF => {
            let (s1, _) = grads(a, b)?;
            let (_, s2) = grads(b, b)?;
            c[[0, 0]] = sig(a, a)?;
            for k in 0..d {
                c[[0, 1 + k]] = s1[k];
                c[[1 + k, 0]] = s1[k];
            }
            c.slice_mut(s![1.., 1..]).assign(&s2);
        }
        CovKind::JJ => {
            let (_, aa) = grads(a, a)?;
            let (_, ab) = grads(a, b)?;
            let (_, bb) = grads(b, b)?;
            c.slice_mut(s![..d, ..d]).assign(&aa);
            c.slice_mut(s![..d, d..]).assign(&ab);
            c.slice_mut(s![d.., ..d]).assign(&ab.t());
            c.slice_mut(s![d.., d..]).assign(&bb);
        }
    }
    Ok(c)
}

/// `‖emp − theory‖_F / ‖theory‖_F`.
pub fn relative_frobenius(emp: &Array2<f64>, theory: &Array2<f64>) -> Result<f64> {
    check_len("covariance rows", theory.nrows(), emp.nrows())?;
    check_len("covariance cols", theory.ncols(), emp.ncols())?;
    let denom = theory.iter().map(|v| v * v).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(Error::Degenerate("theoretical covariance is zero".into()));
    }
    Ok(emp.iter().zip(theory).map(|(e, t)| (e - t).powi(2)).sum::<f64>().sqrt() / denom)
}

/// Running sums of a vector and its outer products.
#[derive(Debug, Clone)]
struct Moments {
    count: usize,
    sum: Array1<f64>,
    outer: Array2<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Moments {
            count: 0,
            sum: Array1::zeros(len),
            outer: Array2::zeros((len, len)),
        }
    }

    fn push(&mut self, v: &[f64]) {
        self.count += 1;
        for (i, &a) in v.iter().enumerate() {
            self.sum[i] += a;
            for (j, &b) in v.iter().enumerate() {
                self.outer[[i, j]] += a * b;
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += &other.sum;
        self.outer += &other.outer;
    }

    fn subtract(&self, other: &Moments) -> Moments {
        Moments {
            count: self.count - other.count,
            sum: &self.sum - &other.sum,
            outer: &self.outer - &other.outer,
        }
    }

    /// Unbiased sample covariance.
    fn covariance(&self) -> Array2<f64> {
        let n = self.count as f64;
        let mean = &self.sum / n;
        let mm = mean
            .view()
            .insert_axis(ndarray::Axis(1))
            .dot(&mean.view().insert_axis(ndarray::Axis(0)));
        (&self.outer - &(mm * n)) / (n - 1.0)
    }
}

/// `f(x)` and `J(x)` of `f(x) = Σ_k v_k φ(w_k·x/√d)/√n` with ReLU `φ`.
/// `w` is `n × d` row-major.
fn two_layer_features(w: &[f64], v: &[f64], x: &[f64], out_j: &mut [f64]) -> f64 {
    let d = x.len();
    let n = v.len();
    let in_scale = 1.0 / (d as f64).sqrt();
    let out_scale = 1.0 / (n as f64).sqrt();
    let mut f = 0.0;
    out_j.iter_mut().for_each(|j| *j = 0.0);
    for (row, &vk) in w.chunks_exact(d).zip(v) {
        let u: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() * in_scale;
        if u > 0.0 {
            f += vk * u;
            for (j, &wk) in out_j.iter_mut().zip(row) {
                *j += vk * wk;
            }
        }
    }
    out_j.iter_mut().for_each(|j| *j *= out_scale * in_scale);
    f * out_scale
}

/// Features of every pair for one network; `v` laid out per kind.
fn replica_vectors(kinds: &[CovKind], pairs: &[(Vec<f64>, Vec<f64>)], w: &[f64], v: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let d = pairs[0].0.len();
    let (mut ja, mut jb) = (vec![0.0; d], vec![0.0; d]);
    let per_pair: Vec<(f64, Vec<f64>, f64, Vec<f64>)> = pairs
        .iter()
        .map(|(a, b)| {
            let fa = two_layer_features(w, v, a, &mut ja);
            let fb = two_layer_features(w, v, b, &mut jb);
            (fa, ja.clone(), fb, jb.clone())
        })
        .collect();
    kinds
        .iter()
        .map(|kind| {
            per_pair
                .iter()
                .map(|(fa, ja, fb, jb)| match kind {
                    CovKind::FF => vec![*fa, *fb],
                    CovKind::JF => std::iter::once(*fa).chain(jb.iter().copied()).collect(),
                    CovKind::JJ => ja.iter().chain(jb).copied().collect(),
                })
                .collect()
        })
        .collect()
}

/// Empirical covariances of every `kind` and pair from `replicas` fresh
/// two-layer networks of width `n`, compared with the limit covariances.
///
/// Replica `r` draws its weights from stream `r` of `seed`; all kinds share
/// the same networks. Standard errors come from a delete-one jackknife over
/// [`JACKKNIFE_BLOCKS`] contiguous replica blocks.
pub fn mc_covariance_deviations(
    kinds: &[CovKind],
    pairs: &[(Vec<f64>, Vec<f64>)],
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<DeviationReport>> {
    if replicas < 100 {
        return Err(Error::invalid("at least 100 replicas are required"));
    }
    if pairs.is_empty() || kinds.is_empty() || n == 0 {
        return Err(Error::invalid("need at least one kind, one input pair and a positive width"));
    }
    let d = pairs[0].0.len();
    for (a, b) in pairs {
        check_len("input pair", d, a.len())?;
        check_len("input pair", d, b.len())?;
    }
    let theory = kinds
        .iter()
        .map(|&k| pairs.iter().map(|(a, b)| theory_covariance(k, a, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let blocks: Vec<Vec<Vec<Moments>>> = (0..JACKKNIFE_BLOCKS)
        .into_par_iter()
        .map(|blk| {
            let lo = blk * replicas / JACKKNIFE_BLOCKS;
            let hi = (blk + 1) * replicas / JACKKNIFE_BLOCKS;
            let mut acc: Vec<Vec<Moments>> = kinds
                .iter()
                .map(|k| vec![Moments::new(k.len(d)); pairs.len()])
                .collect();
            let mut w = vec![0.0; n * d];
            let mut v = vec![0.0; n];
            for r in lo..hi {
                let mut rng = rng::stream(seed, r as u64);
                w.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
                v.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
                for (ki, per_pair) in replica_vectors(kinds, pairs, &w, &v).into_iter().enumerate() {
                    for (pi, vec) in per_pair.iter().enumerate() {
                        acc[ki][pi].push(vec);
                    }
                }
            }
            acc
        })
        .collect();

    let mut reports = Vec::new();
    for (ki, &kind) in kinds.iter().enumerate() {
        for (pi, th) in theory[ki].iter().enumerate() {
            let mut total = Moments::new(kind.len(d));
            for b in &blocks {
                total.merge(&b[ki][pi]);
            }
            let deviation = relative_frobenius(&total.covariance(), th)?;
            let loo = blocks
                .iter()
                .map(|b| relative_frobenius(&total.subtract(&b[ki][pi]).covariance(), th))
                .collect::<Result<Vec<_>>>()?;
            reports.push(DeviationReport {
                kind,
                pair_id: pi,
                n,
                replicas,
                deviation,
                stderr: jackknife_stderr(&loo),
            });
        }
    }
    Ok(reports)
}

pub fn mc_covariance_deviation(
    kind: CovKind,
    pairs: &[(Vec<f64>, Vec<f64>)],
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<DeviationReport>> {
    mc_covariance_deviations(&[kind], pairs, n, replicas, seed)
}

/// `√((B − 1)/B · Σ (θ_b − θ̄)²)` over delete-one estimates `θ_b`.
pub fn jackknife_stderr(loo: &[f64]) -> f64 {
    let b = loo.len() as f64;
    if loo.len() < 2 {
        return f64::NAN;
    }
    let mean = loo.iter().sum::<f64>() / b;
    ((b - 1.0) / b * loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>()).sqrt()
}

pub fn write_deviation_csv<W: std::io::Write>(out: W, reports: &[DeviationReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DEVIATION_HEADER)?;
    for r in reports {
        w.write_record([
            r.kind.to_string(),
            r.pair_id.to_string(),
            r.n.to_string(),
            r.replicas.to_string(),
            r.deviation.to_string(),
            r.stderr.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
