//! Random variables on a finite sample space of equally weighted paths.
//!
//! A [`RandomVariable`] is either a deterministic scalar, broadcast against
//! any sample count, or a dense vector holding one value per Monte-Carlo path.
//! Path order is the identity that links random variables computed from the
//! same simulation, so no operation here ever reorders samples.
//!
//! Sample storage is shared (`Arc`), so clones are cheap and values are
//! immutable once built.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
enum Repr {
    Scalar(f64),
    Samples(Arc<[f64]>),
}

#[derive(Clone, PartialEq)]
pub struct RandomVariable {
    repr: Repr,
}

impl fmt::Debug for RandomVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Scalar(v) => write!(f, "RandomVariable::Scalar({v})"),
            Repr::Samples(s) if s.len() <= 8 => write!(f, "RandomVariable{:?}", &s[..]),
            Repr::Samples(s) => write!(
                f,
                "RandomVariable[{}, {}, .. ({} samples)]",
                s[0],
                s[1],
                s.len()
            ),
        }
    }
}

impl From<f64> for RandomVariable {
    fn from(value: f64) -> Self {
        Self::constant(value)
    }
}

impl From<Vec<f64>> for RandomVariable {
    fn from(samples: Vec<f64>) -> Self {
        Self::from_samples(samples)
    }
}

impl From<&RandomVariable> for RandomVariable {
    fn from(value: &RandomVariable) -> Self {
        value.clone()
    }
}

impl RandomVariable {
    pub fn constant(value: f64) -> Self {
        Self {
            repr: Repr::Scalar(value),
        }
    }

    /// Builds a path-wise random variable.
    ///
    /// Panics if `samples` is empty: a sample space has at least one path.
    pub fn from_samples(samples: Vec<f64>) -> Self {
        assert!(
            !samples.is_empty(),
            "a random variable needs at least one sample"
        );
        Self {
            repr: Repr::Samples(samples.into()),
        }
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self::from_samples((0..n).map(f).collect())
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.repr, Repr::Scalar(_))
    }

    /// Number of paths, `None` for a broadcast scalar.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Option<usize> {
        match &self.repr {
            Repr::Scalar(_) => None,
            Repr::Samples(s) => Some(s.len()),
        }
    }

    pub fn scalar(&self) -> Option<f64> {
        match self.repr {
            Repr::Scalar(v) => Some(v),
            Repr::Samples(_) => None,
        }
    }

    pub fn samples(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Scalar(_) => None,
            Repr::Samples(s) => Some(s),
        }
    }

    /// Value on path `i`; scalars return their value for every path.
    pub fn get(&self, i: usize) -> f64 {
        match &self.repr {
            Repr::Scalar(v) => *v,
            Repr::Samples(s) => s[i],
        }
    }

    /// Materialises the samples, broadcasting a scalar to `n` paths.
    pub fn to_vec(&self, n: usize) -> Vec<f64> {
        match &self.repr {
            Repr::Scalar(v) => vec![*v; n],
            Repr::Samples(s) => s.to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        match &self.repr {
            Repr::Scalar(v) => Self::constant(f(*v)),
            Repr::Samples(s) => Self::from_samples(s.iter().map(|&x| f(x)).collect()),
        }
    }

    /// Applies `f` path-wise to two operands, broadcasting scalars.
    pub fn zip_with(
        &self,
        other: &RandomVariable,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        Ok(match (&self.repr, &other.repr) {
            (Repr::Scalar(a), Repr::Scalar(b)) => Self::constant(f(*a, *b)),
            (Repr::Scalar(a), Repr::Samples(b)) => {
                Self::from_samples(b.iter().map(|&y| f(*a, y)).collect())
            }
            (Repr::Samples(a), Repr::Scalar(b)) => {
                Self::from_samples(a.iter().map(|&x| f(x, *b)).collect())
            }
            (Repr::Samples(a), Repr::Samples(b)) => {
                if a.len() != b.len() {
                    return Err(Error::LengthMismatch {
                        op,
                        left: a.len(),
                        right: b.len(),
                    });
                }
                Self::from_samples(a.iter().zip(b.iter()).map(|(&x, &y)| f(x, y)).collect())
            }
        })
    }

    fn check_all(&self, op: &'static str, ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
        let bad = match &self.repr {
            Repr::Scalar(v) => (!ok(*v)).then_some((0, *v)),
            Repr::Samples(s) => s.iter().position(|&x| !ok(x)).map(|i| (i, s[i])),
        };
        match bad {
            None => Ok(()),
            Some((i, v)) => Err(Error::Domain {
                op,
                detail: format!("sample {i} = {v} is not {what}"),
            }),
        }
    }

    pub fn add(&self, rhs: impl Into<RandomVariable>) -> Result<Self> {
        self.zip_with(&rhs.into(), "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: impl Into<RandomVariable>) -> Result<Self> {
        self.zip_with(&rhs.into(), "sub", |a, b| a - b)
    }

    pub fn mul(&self, rhs: impl Into<RandomVariable>) -> Result<Self> {
        self.zip_with(&rhs.into(), "mul", |a, b| a * b)
    }

    pub fn div(&self, rhs: impl Into<RandomVariable>) -> Result<Self> {
        let rhs = rhs.into();
        rhs.check_all("div", |x| x != 0.0, "a nonzero divisor")?;
        self.zip_with(&rhs, "div", |a, b| a / b)
    }

    /// Path-wise maximum; ties pick `rhs`.
    pub fn max(&self, rhs: impl Into<RandomVariable>) -> Result<Self> {
        self.zip_with(&rhs.into(), "max", |a, b| if a > b { a } else { b })
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn exp(&self) -> Self {
        self.map(f64::exp)
    }

    pub fn log(&self) -> Result<Self> {
        self.check_all("log", |x| x > 0.0, "positive")?;
        Ok(self.map(f64::ln))
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.check_all("sqrt", |x| x >= 0.0, "nonnegative")?;
        Ok(self.map(f64::sqrt))
    }

    /// `1_{X > 0}` path-wise. A sample exactly at zero maps to 0.
    pub fn indicator(&self) -> Self {
        self.map(|x| if x > 0.0 { 1.0 } else { 0.0 })
    }

    /// Arithmetic mean with equal path weights.
    ///
    /// Summation is pairwise over fixed blocks in path order, so the result is
    /// a deterministic function of the samples.
    pub fn expectation(&self) -> f64 {
        match &self.repr {
            Repr::Scalar(v) => *v,
            Repr::Samples(s) => pairwise_sum(s) / s.len() as f64,
        }
    }

    /// Population variance `E(Z^2) - E(Z)^2`, evaluated in the centred
    /// two-pass form. Scalars have variance zero.
    pub fn variance(&self) -> Result<f64> {
        match &self.repr {
            Repr::Scalar(_) => Ok(0.0),
            Repr::Samples(s) if s.len() < 2 => Err(Error::InvalidParameter {
                name: "samples",
                detail: "variance needs at least two paths".into(),
            }),
            Repr::Samples(s) => {
                let mean = pairwise_sum(s) / s.len() as f64;
                let centred: Vec<f64> = s.iter().map(|&x| (x - mean) * (x - mean)).collect();
                Ok(pairwise_sum(&centred) / s.len() as f64)
            }
        }
    }

    pub fn standard_deviation(&self) -> Result<f64> {
        self.variance().map(f64::sqrt)
    }
}

const PAIRWISE_BLOCK: usize = 128;

pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}
