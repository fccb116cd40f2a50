use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};
use crate::linalg::Matrix;

/// Dense row-major tensor with at most three axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 3 {
            return shape_err(format!("tensors have 1 to 3 axes, got {shape:?}"));
        }
        if shape.iter().product::<usize>() != data.len() {
            return shape_err(format!("shape {shape:?} holds {} values", data.len()));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        Self { shape: shape.to_vec(), data: vec![value; shape.iter().product()] }
    }

    pub fn scalar(x: f64) -> Self {
        Self { shape: vec![1], data: vec![x] }
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        Self { shape: vec![m.rows(), m.cols()], data: m.as_slice().to_vec() }
    }

    /// Interprets a 2-axis tensor (or the single batch of a 3-axis one) as a matrix.
    pub fn to_matrix(&self) -> Result<Matrix> {
        match self.shape.as_slice() {
            [r, c] | [1, r, c] => Matrix::from_vec(*r, *c, self.data.clone()),
            [r] => Matrix::from_vec(*r, 1, self.data.clone()),
            s => shape_err(format!("cannot view {s:?} as a matrix")),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Splits the shape around `axis` into `(outer, dim, inner)` extents.
    pub(crate) fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
        let outer = shape[..axis].iter().product();
        let inner = shape[axis + 1..].iter().product();
        (outer, shape[axis], inner)
    }
}
