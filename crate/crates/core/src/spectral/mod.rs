//! Symmetric eigendecomposition, eigenspace grouping, projectors, and
//! samplers for the symmetry groups acting on eigenvectors.

mod jacobi;
mod sampling;

pub use jacobi::{eigh, MAX_SWEEPS, OFF_DIAGONAL_TOL};
pub use sampling::{
    haar_orthogonal, random_permutation, sample_orthogonal, sample_permutation, OrthogonalSample,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize_columns, Matrix, SymMatrix};

pub const DEFAULT_TOL_ABS: f64 = 1e-8;
pub const DEFAULT_TOL_REL: f64 = 1e-8;

/// Condition-number ceiling for the Gram matrix of a non-orthonormal basis.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Ascending eigenvalues with orthonormal eigenvector columns.
///
/// May be truncated to the first `k` pairs, in which case `vectors` is `n x k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "EigDecompJson", try_from = "EigDecompJson")]
pub struct EigDecomp {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

#[derive(Serialize, Deserialize)]
struct EigDecompJson {
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

impl From<EigDecomp> for EigDecompJson {
    fn from(e: EigDecomp) -> Self {
        Self { values: e.values, vectors: e.vectors.to_rows() }
    }
}

impl TryFrom<EigDecompJson> for EigDecomp {
    type Error = Error;
    fn try_from(j: EigDecompJson) -> Result<Self> {
        let vectors = Matrix::from_rows(&j.vectors)?;
        if vectors.cols() != j.values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} eigenvalues but {} eigenvector columns",
                j.values.len(),
                vectors.cols()
            )));
        }
        Ok(Self { values: j.values, vectors })
    }
}

impl EigDecomp {
    pub fn n(&self) -> usize {
        self.vectors.rows()
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }

    /// The first `k` eigenpairs.
    pub fn truncated(&self, k: usize) -> EigDecomp {
        let k = k.min(self.k());
        EigDecomp { values: self.values[..k].to_vec(), vectors: self.vectors.column_block(0, k) }
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> Matrix {
        let mut scaled = self.vectors.clone();
        for i in 0..scaled.rows() {
            for (x, &l) in scaled.row_mut(i).iter_mut().zip(&self.values) {
                *x *= l;
            }
        }
        scaled.matmul(&self.vectors.transpose()).expect("square shapes")
    }

    /// `max_i ||M v_i - lambda_i v_i||_2`.
    pub fn max_residual(&self, m: &Matrix) -> f64 {
        (0..self.k())
            .map(|i| {
                let v = self.vector(i);
                let mv = m.matvec(&v);
                mv.iter().zip(&v).map(|(a, b)| (a - self.values[i] * b).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `||V^T V - I||_max`.
    pub fn orthogonality_error(&self) -> f64 {
        let g = self.vectors.t_matmul(&self.vectors).expect("same rows");
        g.max_abs_diff(&Matrix::identity(self.k()))
    }

    /// Row-permuted copy: node `i` moves to `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> EigDecomp {
        let mut inv = vec![0usize; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        EigDecomp { values: self.values.clone(), vectors: self.vectors.select_rows(&inv) }
    }
}

/// One eigenspace: representative eigenvalue and an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenspace {
    pub mu: f64,
    pub basis: Matrix,
}

impl Eigenspace {
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn projector(&self) -> SymMatrix {
        orthogonal_projector(&self.basis)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenspacePartition {
    pub groups: Vec<Eigenspace>,
    /// The chaining threshold `tau` actually used.
    pub tol: f64,
}

impl EigenspacePartition {
    pub fn l(&self) -> usize {
        self.groups.len()
    }

    pub fn n(&self) -> usize {
        self.groups.first().map_or(0, |g| g.basis.rows())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.groups.iter().map(Eigenspace::dim).collect()
    }

    pub fn max_multiplicity(&self) -> usize {
        self.dims().into_iter().max().unwrap_or(0)
    }

    /// Multiplicity of the group whose representative lies within `tol` of `value`.
    pub fn multiplicity_near(&self, value: f64) -> usize {
        self.groups.iter().filter(|g| (g.mu - value).abs() <= self.tol).map(Eigenspace::dim).sum()
    }

    /// Replaces each basis `V_i` by `V_i Q_i`.
    pub fn rotated(&self, qs: &[Matrix]) -> Result<EigenspacePartition> {
        if qs.len() != self.l() {
            return Err(Error::ShapeMismatch(format!("{} rotations for {} groups", qs.len(), self.l())));
        }
        let groups = self
            .groups
            .iter()
            .zip(qs)
            .map(|(g, q)| Ok(Eigenspace { mu: g.mu, basis: g.basis.matmul(q)? }))
            .collect::<Result<_>>()?;
        Ok(EigenspacePartition { groups, tol: self.tol })
    }

    /// Row-permuted bases: node `i` moves to `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> EigenspacePartition {
        let mut inv = vec![0usize; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let groups = self
            .groups
            .iter()
            .map(|g| Eigenspace { mu: g.mu, basis: g.basis.select_rows(&inv) })
            .collect();
        EigenspacePartition { groups, tol: self.tol }
    }
}

/// Groups consecutive eigenvalues by single-linkage chaining.
///
/// `lambda_{i+1}` joins the group of `lambda_i` iff the gap is at most
/// `tau = tol_abs + tol_rel * max(1, max|lambda|)`. Each group's basis is
/// re-orthonormalized.
pub fn partition_eigenspaces(e: &EigDecomp, tol_abs: f64, tol_rel: f64) -> EigenspacePartition {
    let scale = e.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tau = tol_abs + tol_rel * scale;
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 0..e.k() {
        let end_here = i + 1 == e.k() || !(e.values[i + 1] - e.values[i] <= tau);
        if end_here {
            let d = i + 1 - start;
            let mu = e.values[start..=i].iter().sum::<f64>() / d as f64;
            let block = e.vectors.column_block(start, d);
            let basis = if d > 1 { orthonormalize_columns(&block).0 } else { block };
            groups.push(Eigenspace { mu, basis });
            start = i + 1;
        }
    }
    EigenspacePartition { groups, tol: tau }
}

pub fn partition_default(e: &EigDecomp) -> EigenspacePartition {
    partition_eigenspaces(e, DEFAULT_TOL_ABS, DEFAULT_TOL_REL)
}

/// `V V^T`, assuming orthonormal columns.
pub fn orthogonal_projector(v: &Matrix) -> SymMatrix {
    SymMatrix::new(v.gram_outer()).expect("V V^T is symmetric by construction")
}

/// Orthogonal projector onto the column space of `v`.
///
/// With `orthonormal` set this is `V V^T`; otherwise `V (V^T V)^{-1} V^T`,
/// formed as `W W^T` with `W = V (V^T V)^{-1/2}`.
pub fn projector(v: &Matrix, orthonormal: bool) -> Result<SymMatrix> {
    if orthonormal {
        return Ok(orthogonal_projector(v));
    }
    let gram = SymMatrix::new(symmetric_part(&v.t_matmul(v)?))?;
    let ge = eigh(&gram)?;
    let lo = ge.values.first().copied().unwrap_or(1.0);
    let hi = ge.values.last().copied().unwrap_or(1.0);
    if lo <= 0.0 || hi / lo > MAX_GRAM_CONDITION {
        let cond = if lo <= 0.0 { f64::INFINITY } else { hi / lo };
        return Err(Error::RankDeficient { cond });
    }
    let d = ge.k();
    let inv_sqrt = Matrix::from_fn(d, d, |i, j| {
        (0..d).map(|k| ge.vectors[(i, k)] * ge.vectors[(j, k)] / ge.values[k].sqrt()).sum()
    });
    Ok(orthogonal_projector(&v.matmul(&inv_sqrt)?))
}

fn symmetric_part(m: &Matrix) -> Matrix {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decomp(values: Vec<f64>) -> EigDecomp {
        let n = values.len();
        EigDecomp { values, vectors: Matrix::identity(n) }
    }

    #[test]
    fn chaining_groups() {
        let p = partition_default(&decomp(vec![0.0, 1.0, 1.0 + 1e-12, 2.0]));
        assert_eq!(p.dims(), vec![1, 2, 1]);
        let p = partition_eigenspaces(&decomp(vec![0.0, 1.0, 2.0]), f64::INFINITY, 0.0);
        assert_eq!(p.dims(), vec![3]);
    }

    #[test]
    fn chaining_is_transitive() {
        // consecutive gaps below tau chain even though the ends are far apart
        let p = partition_eigenspaces(&decomp(vec![0.0, 0.6, 1.2, 1.8]), 0.7, 0.0);
        assert_eq!(p.dims(), vec![4]);
    }

    #[test]
    fn projector_of_axis() {
        let v = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]).unwrap();
        let p = projector(&v, true).unwrap();
        assert_eq!(p.diagonal(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn non_orthonormal_projector() {
        let v = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let p = projector(&v, false).unwrap();
        let mut expect = Matrix::zeros(3, 3);
        expect[(0, 0)] = 1.0;
        expect[(1, 1)] = 1.0;
        assert!(p.max_abs_diff(&expect) < 1e-12);
        let bad = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(projector(&bad, false), Err(Error::RankDeficient { .. })));
    }
}
