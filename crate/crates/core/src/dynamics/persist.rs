//! `FSD1` checkpoints of a [`FunctionState`]. The initialization snapshot is
//! stored separately (`WNS1`) and supplied again on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use super::{FunctionState, HistoryEntry, Integrator, Kernels};
use crate::error::{check_len, Error, Result};
use crate::kernels::{KernelActivation, KernelConfig};
use crate::oracle::WideNetSnapshot;

const MAGIC: &[u8; 4] = b"FSD1";

fn write_u64<W: Write>(w: &mut W, v: usize) -> Result<()> {
    w.write_u64::<LittleEndian>(v as u64)?;
    Ok(())
}

fn read_usize<R: Read>(r: &mut R) -> Result<usize> {
    usize::try_from(r.read_u64::<LittleEndian>()?).map_err(|_| Error::Format("size field overflows".into()))
}

fn write_matrix<W: Write>(w: &mut W, m: &Array2<f64>) -> Result<()> {
    write_u64(w, m.nrows())?;
    write_u64(w, m.ncols())?;
    for &v in m.iter() {
        w.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

fn read_matrix<R: Read>(r: &mut R) -> Result<Array2<f64>> {
    let rows = read_usize(r)?;
    let cols = read_usize(r)?;
    let len = rows
        .checked_mul(cols)
        .filter(|&n| n <= 1 << 34)
        .ok_or_else(|| Error::Format("matrix too large".into()))?;
    let mut buf = vec![0f64; len];
    r.read_f64_into::<LittleEndian>(&mut buf)?;
    Ok(Array2::from_shape_vec((rows, cols), buf).expect("shape"))
}

fn write_kernel<W: Write>(w: &mut W, k: &KernelConfig) -> Result<()> {
    w.write_u32::<LittleEndian>(match k.activation {
        KernelActivation::Relu => 0,
        KernelActivation::Linear => 1,
    })?;
    write_u64(w, k.input_dim)?;
    write_u64(w, k.depth)?;
    w.write_f64::<LittleEndian>(k.eps_clamp)?;
    Ok(())
}

fn read_kernel<R: Read>(r: &mut R) -> Result<KernelConfig> {
    let activation = match r.read_u32::<LittleEndian>()? {
        0 => KernelActivation::Relu,
        1 => KernelActivation::Linear,
        c => return Err(Error::Format(format!("unknown kernel activation {c}"))),
    };
    let cfg = KernelConfig {
        activation,
        input_dim: read_usize(r)?,
        depth: read_usize(r)?,
        eps_clamp: r.read_f64::<LittleEndian>()?,
    };
    cfg.validate().map_err(|e| Error::Format(e.to_string()))?;
    Ok(cfg)
}

impl FunctionState {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, oracle: WideNetSnapshot) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?), oracle)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        write_u64(w, self.step)?;
        w.write_f64::<LittleEndian>(self.lr)?;
        w.write_f64::<LittleEndian>(self.loss_scale)?;
        w.write_u32::<LittleEndian>(match self.integrator {
            Integrator::Sgd => 0,
            Integrator::Euler => 1,
        })?;
        write_kernel(w, &self.kernels.theta)?;
        write_kernel(w, &self.kernels.k)?;
        write_u64(w, self.n_train)?;
        write_matrix(w, &self.inputs)?;
        write_matrix(w, &self.g0)?;
        write_matrix(w, &self.g)?;
        write_matrix(w, &self.f0)?;
        if let Some(f) = &self.f {
            write_matrix(w, f)?;
        }
        write_u64(w, self.history.steps())?;
        for s in 0..self.history.steps() {
            let e = self.history.entry(s);
            write_u64(w, e.batch_indices.len())?;
            for &i in &e.batch_indices {
                write_u64(w, i)?;
            }
            write_matrix(w, &e.g_batch)?;
            write_matrix(w, &e.chi_batch)?;
            write_matrix(w, &e.p_batch)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R, oracle: WideNetSnapshot) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not an FSD1 checkpoint".into()));
        }
        let step = read_usize(r)?;
        let lr = r.read_f64::<LittleEndian>()?;
        let loss_scale = r.read_f64::<LittleEndian>()?;
        let integrator = match r.read_u32::<LittleEndian>()? {
            0 => Integrator::Sgd,
            1 => Integrator::Euler,
            c => return Err(Error::Format(format!("unknown integrator {c}"))),
        };
        let kernels = Kernels {
            theta: read_kernel(r)?,
            k: read_kernel(r)?,
        };
        let n_train = read_usize(r)?;
        let inputs = read_matrix(r)?;
        let g0 = read_matrix(r)?;
        let g = read_matrix(r)?;
        let f0 = read_matrix(r)?;
        let f = match integrator {
            Integrator::Euler => Some(read_matrix(r)?),
            Integrator::Sgd => None,
        };
        check_len("checkpoint input dimension", oracle.input_dim(), inputs.ncols())?;
        check_len("checkpoint bottleneck", oracle.bottleneck_dim(), g.ncols())?;
        let mut state = FunctionState::from_parts(oracle, kernels, inputs, n_train, g0, f0, lr, loss_scale, integrator)?;
        check_len("checkpoint tracked inputs", state.g.nrows(), g.nrows())?;
        state.g = g;
        state.f = f;
        let steps = read_usize(r)?;
        for _ in 0..steps {
            let b = read_usize(r)?;
            let batch_indices = (0..b).map(|_| read_usize(r)).collect::<Result<Vec<_>>>()?;
            state.history.push(&HistoryEntry {
                batch_indices,
                g_batch: read_matrix(r)?,
                chi_batch: read_matrix(r)?,
                p_batch: read_matrix(r)?,
            })?;
        }
        if steps != step {
            return Err(Error::Format(format!("step {step} with {steps} history entries")));
        }
        state.step = step;
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::data::gen_synthetic_gp;
    use crate::oracle::init_wide_net;
    use ndarray::Axis;

    #[test]
    fn fsd1_round_trip_resumes_identically() {
        let data = gen_synthetic_gp(8, 3, 3, 2, 4).unwrap();
        let oracle = init_wide_net((3, 2, 2), 2, Activation::Relu, 32, 1).unwrap();
        let kernels = Kernels::for_snapshot(&oracle).unwrap();
        for integrator in [Integrator::Sgd, Integrator::Euler] {
            let mut s = FunctionState::new(
                oracle.clone(),
                kernels,
                data.train_x.view(),
                data.test_x.view(),
                0.1,
                1.0,
                integrator,
            )
            .unwrap();
            for b in [[0usize, 3], [5, 1]] {
                s.sgd_step(&b, data.train_y.select(Axis(0), &b).view()).unwrap();
            }
            let mut buf = Vec::new();
            s.write_to(&mut buf).unwrap();
            let back = FunctionState::read_from(&mut buf.as_slice(), oracle.clone()).unwrap();
            assert_eq!(back, s);
        }
    }
}
