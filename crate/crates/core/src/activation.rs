use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::kernels::KernelActivation;

/// Coordinatewise nonlinearity of a finite network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    Linear,
    /// `log(1 + e^{m a}) / m`, which tends to ReLU as `m → ∞`.
    Softplus { sharpness: f64 },
}

impl Activation {
    #[inline]
    pub fn apply(self, a: f64) -> f64 {
        match self {
            Activation::Relu => a.max(0.0),
            Activation::Linear => a,
            Activation::Softplus { sharpness: m } => {
                let z = m * a;
                if z > 30.0 {
                    a + (-z).exp().ln_1p() / m
                } else {
                    z.exp().ln_1p() / m
                }
            }
        }
    }

    /// First derivative; the ReLU derivative at zero is taken to be zero.
    #[inline]
    pub fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
            Activation::Softplus { sharpness: m } => sigmoid(m * a),
        }
    }

    /// The closed-form kernel family, if there is one.
    pub fn kernel(self) -> Option<KernelActivation> {
        match self {
            Activation::Relu => Some(KernelActivation::Relu),
            Activation::Linear => Some(KernelActivation::Linear),
            Activation::Softplus { .. } => None,
        }
    }

    pub(crate) fn code(self) -> (u32, f32) {
        match self {
            Activation::Relu => (0, 0.0),
            Activation::Linear => (1, 0.0),
            Activation::Softplus { sharpness } => (2, sharpness as f32),
        }
    }

    pub(crate) fn from_code(code: u32, param: f32) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Linear),
            2 => Some(Activation::Softplus {
                sharpness: param as f64,
            }),
            _ => None,
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Relu => write!(f, "relu"),
            Activation::Linear => write!(f, "linear"),
            Activation::Softplus { sharpness } => write!(f, "softplus:{sharpness}"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    /// `relu`, `linear` or `softplus:<m>`.
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "relu" => Ok(Activation::Relu),
            "linear" => Ok(Activation::Linear),
            _ => {
                let m = s
                    .strip_prefix("softplus:")
                    .and_then(|m| m.parse::<f64>().ok())
                    .filter(|m| *m > 0.0)
                    .ok_or_else(|| Error::invalid(format!("unknown activation '{s}'")))?;
                Ok(Activation::Softplus { sharpness: m })
            }
        }
    }
}
