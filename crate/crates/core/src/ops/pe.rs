use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::spectral::EigDecomp;

/// Positional-encoding family and its parameters.
///
/// The first two kinds are node-level (`n x |params|`), the rest are `n x n` kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PEConfig {
    HeatDiag { ts: Vec<f64> },
    Rwpe { ks: Vec<u32> },
    Diffusion { t: f64 },
    Pstep { gamma: f64, p: u32 },
    /// `gammas[0]` weights one step, `gammas[1]` two steps, and so on.
    Gpr { gammas: Vec<f64> },
    Landing { k: u32 },
}

impl PEConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadParams(m.to_string()));
        match self {
            PEConfig::HeatDiag { ts } if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0)) => bad("heat times must be > 0"),
            PEConfig::Rwpe { ks } if ks.is_empty() || ks.contains(&0) => bad("walk lengths must be >= 1"),
            PEConfig::Diffusion { t } if !(*t > 0.0) => bad("diffusion time must be > 0"),
            PEConfig::Pstep { p: 0, .. } => bad("p must be >= 1"),
            PEConfig::Gpr { gammas } if gammas.is_empty() => bad("at least one PageRank weight required"),
            PEConfig::Landing { k: 0 } => bad("k must be >= 1"),
            _ => Ok(()),
        }
    }

    pub fn is_node_level(&self) -> bool {
        matches!(self, PEConfig::HeatDiag { .. } | PEConfig::Rwpe { .. })
    }

    /// True when `gamma` lies outside `(0, 2/lambda_max]`, where powers of `I - gamma L` can blow up.
    pub fn pstep_unstable(&self, e: &EigDecomp) -> bool {
        match self {
            PEConfig::Pstep { gamma, .. } => {
                let lmax = e.values.last().copied().unwrap_or(0.0);
                *gamma <= 0.0 || (lmax > 0.0 && *gamma > 2.0 / lmax)
            }
            _ => false,
        }
    }
}

/// `sum_i f(lambda_i) v_ij^2` per node.
fn weighted_diag(e: &EigDecomp, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let w: Vec<f64> = e.values.iter().map(|&l| f(l)).collect();
    (0..e.n()).map(|j| e.vectors.row(j).iter().zip(&w).map(|(v, w)| w * v * v).sum()).collect()
}

/// `sum_i f(lambda_i) v_i v_i^T`.
fn weighted_kernel(e: &EigDecomp, f: impl Fn(f64) -> f64) -> Matrix {
    let n = e.n();
    let w: Vec<f64> = e.values.iter().map(|&l| f(l)).collect();
    let mut scaled = e.vectors.clone();
    for j in 0..n {
        scaled.row_mut(j).iter_mut().zip(&w).for_each(|(x, w)| *x *= w);
    }
    scaled.matmul(&e.vectors.transpose()).expect("n x k times k x n")
}

fn check_decomp(g: &Graph, e: &EigDecomp) -> Result<()> {
    if e.n() != g.n() {
        return shape_err(format!("eigenvectors have {} rows for a {}-node graph", e.n(), g.n()));
    }
    Ok(())
}

/// Heat-kernel diagonal, one column per diffusion time.
pub fn heat_pe(e: &EigDecomp, ts: &[f64]) -> Result<Matrix> {
    PEConfig::HeatDiag { ts: ts.to_vec() }.validate()?;
    let cols: Vec<Vec<f64>> = ts.iter().map(|&t| weighted_diag(e, |l| (-t * l).exp())).collect();
    Ok(Matrix::from_fn(e.n(), ts.len(), |j, c| cols[c][j]))
}

/// Random-walk return probabilities `diag((D^-1 A)^k)` from normalized-Laplacian eigenpairs.
pub fn rwpe(g: &Graph, e: &EigDecomp, ks: &[u32]) -> Result<Matrix> {
    PEConfig::Rwpe { ks: ks.to_vec() }.validate()?;
    g.check_no_isolated()?;
    check_decomp(g, e)?;
    let cols: Vec<Vec<f64>> = ks.iter().map(|&k| weighted_diag(e, |l| (1.0 - l).powi(k as i32))).collect();
    Ok(Matrix::from_fn(e.n(), ks.len(), |j, c| cols[c][j]))
}

/// `n x n` kernel for the matrix-valued configurations.
pub fn kernel_matrix(g: &Graph, e: &EigDecomp, cfg: &PEConfig) -> Result<Matrix> {
    cfg.validate()?;
    check_decomp(g, e)?;
    match cfg {
        PEConfig::Diffusion { t } => Ok(weighted_kernel(e, |l| (-t * l).exp())),
        PEConfig::Pstep { gamma, p } => Ok(weighted_kernel(e, |l| (1.0 - gamma * l).powi(*p as i32))),
        PEConfig::Gpr { gammas } => {
            g.check_no_isolated()?;
            let k = weighted_kernel(e, |l| {
                let r = 1.0 - l;
                gammas.iter().rev().fold(0.0, |acc, gk| (acc + gk) * r)
            });
            Ok(random_walk_conjugate(g, k))
        }
        PEConfig::Landing { k } => {
            g.check_no_isolated()?;
            Ok(random_walk_conjugate(g, weighted_kernel(e, |l| (1.0 - l).powi(*k as i32))))
        }
        PEConfig::HeatDiag { .. } | PEConfig::Rwpe { .. } => {
            Err(Error::BadParams("node-level encoding requested as a kernel matrix".into()))
        }
    }
}

/// Node-level encodings as `n x |params|`, kernels as `n x n`.
pub fn positional_encoding(g: &Graph, e: &EigDecomp, cfg: &PEConfig) -> Result<Matrix> {
    match cfg {
        PEConfig::HeatDiag { ts } => {
            check_decomp(g, e)?;
            heat_pe(e, ts)
        }
        PEConfig::Rwpe { ks } => rwpe(g, e, ks),
        _ => kernel_matrix(g, e, cfg),
    }
}

/// `D^{-1/2} K D^{1/2}`.
fn random_walk_conjugate(g: &Graph, mut k: Matrix) -> Matrix {
    let s = g.sqrt_degree_vector();
    for i in 0..k.rows() {
        for (j, x) in k.row_mut(i).iter_mut().enumerate() {
            *x *= s[j] / s[i];
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigh;

    fn k2() -> (Graph, EigDecomp) {
        let g = Graph::new(2, &[(0, 1)], None).unwrap();
        let e = eigh(&g.normalized_laplacian().unwrap()).unwrap();
        (g, e)
    }

    #[test]
    fn two_node_heat() {
        let (_, e) = k2();
        let h = heat_pe(&e, &[1.0]).unwrap();
        let expect = 0.5 * (1.0 + (-2.0f64).exp());
        assert!((h[(0, 0)] - expect).abs() < 1e-12);
        assert!((expect - 0.56767).abs() < 1e-5);
    }

    #[test]
    fn two_node_walk_parity() {
        let (g, e) = k2();
        let r = rwpe(&g, &e, &[1, 2]).unwrap();
        for j in 0..2 {
            assert!(r[(j, 0)].abs() < 1e-12);
            assert!((r[(j, 1)] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pstep_on_k2_is_normalized_adjacency() {
        let (g, e) = k2();
        let k = kernel_matrix(&g, &e, &PEConfig::Pstep { gamma: 1.0, p: 1 }).unwrap();
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(k.max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        let (g, e) = k2();
        assert!(heat_pe(&e, &[0.0]).is_err());
        assert!(rwpe(&g, &e, &[0]).is_err());
        assert!(kernel_matrix(&g, &e, &PEConfig::HeatDiag { ts: vec![1.0] }).is_err());
    }
}
