use std::fmt;

use serde::{Deserialize, Serialize};

use super::IrError;

/// Tensor shape with the batch axis stored explicitly at position 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TensorShape(Vec<usize>);

impl TensorShape {
    pub fn new(dims: Vec<usize>) -> Result<Self, IrError> {
        if dims.is_empty() {
            return Err(IrError::InvalidShape {
                dims,
                reason: "rank must be at least 1".into(),
            });
        }
        if dims.contains(&0) {
            return Err(IrError::InvalidShape {
                dims,
                reason: "dimension sizes must be positive".into(),
            });
        }
        Ok(Self(dims))
    }

    /// Prepends a batch axis of size 1 to a shape given without one.
    pub fn with_batch(dims: &[usize]) -> Result<Self, IrError> {
        let mut all = Vec::with_capacity(dims.len() + 1);
        all.push(1);
        all.extend_from_slice(dims);
        Self::new(all)
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// Dimensions after the batch axis.
    pub fn without_batch(&self) -> &[usize] {
        &self.0[1..]
    }

    pub fn last(&self) -> usize {
        *self.0.last().expect("rank >= 1")
    }

    pub fn num_elements(&self) -> usize {
        self.0.iter().product()
    }

    /// Product of every dimension except the batch axis.
    pub fn feature_elements(&self) -> usize {
        self.0[1..].iter().product()
    }
}

impl TryFrom<Vec<usize>> for TensorShape {
    type Error = IrError;

    fn try_from(dims: Vec<usize>) -> Result<Self, Self::Error> {
        Self::new(dims)
    }
}

impl From<TensorShape> for Vec<usize> {
    fn from(s: TensorShape) -> Self {
        s.0
    }
}

impl fmt::Display for TensorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_dims(f, &self.0)
    }
}

/// Writes `[a,b,c]` with no spaces, the notation used in diagnostics.
pub fn write_dims<T: fmt::Display>(f: &mut impl fmt::Write, dims: &[T]) -> fmt::Result {
    f.write_char('[')?;
    for (i, d) in dims.iter().enumerate() {
        if i > 0 {
            f.write_char(',')?;
        }
        write!(f, "{d}")?;
    }
    f.write_char(']')
}

pub fn dims_string<T: fmt::Display>(dims: &[T]) -> String {
    let mut s = String::new();
    write_dims(&mut s, dims).expect("writing to a String cannot fail");
    s
}
