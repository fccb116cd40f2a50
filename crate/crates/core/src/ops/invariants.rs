use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::spectral::EigenspacePartition;

/// Absolute slack allowed when rounding spectral counts to integers.
pub const INTEGER_TOL: f64 = 1e-6;

/// Graph angles `alpha_ij = ||V_i V_i^T e_j||` of an adjacency eigenspace partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleTable {
    /// `l x n`
    pub alpha: Matrix,
    pub mu: Vec<f64>,
    pub mult: Vec<usize>,
}

impl AngleTable {
    pub fn l(&self) -> usize {
        self.mu.len()
    }

    pub fn n(&self) -> usize {
        self.alpha.cols()
    }

    /// `W_k(j) = sum_i mu_i^k alpha_ij^2`, i.e. `(A^k)_jj`.
    pub fn walk_weights(&self, k: u32) -> Vec<f64> {
        (0..self.n())
            .map(|j| (0..self.l()).map(|i| self.mu[i].powi(k as i32) * self.alpha[(i, j)].powi(2)).sum())
            .collect()
    }
}

pub fn graph_angles(part: &EigenspacePartition) -> AngleTable {
    let n = part.n();
    let mut alpha = Matrix::zeros(part.l(), n);
    for (i, g) in part.groups.iter().enumerate() {
        for j in 0..n {
            let s: f64 = g.basis.row(j).iter().map(|x| x * x).sum();
            alpha[(i, j)] = s.max(0.0).sqrt();
        }
    }
    AngleTable { alpha, mu: part.groups.iter().map(|g| g.mu).collect(), mult: part.dims() }
}

fn round_count(raw: f64, tol: f64) -> Result<u64> {
    let r = raw.round();
    if (raw - r).abs() > tol || r < 0.0 {
        return Err(Error::NonInteger { value: raw });
    }
    Ok(r as u64)
}

/// `(A^k)_jj` for `k = 1..=kmax`, rounded; `n x kmax`.
pub fn closed_walk_counts(at: &AngleTable, kmax: u32) -> Result<Vec<Vec<u64>>> {
    if kmax == 0 {
        return Err(Error::BadParams("kmax must be >= 1".into()));
    }
    let cols: Vec<Vec<f64>> = (1..=kmax).map(|k| at.walk_weights(k)).collect();
    (0..at.n())
        .map(|j| {
            cols.iter()
                .map(|c| {
                    let raw = c[j];
                    // walk counts grow quickly with k; the slack scales with them
                    round_count(raw, INTEGER_TOL * raw.abs().max(1.0))
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleCounts {
    pub c3: u64,
    pub c4: u64,
    pub c5: u64,
}

/// Numbers of 3-, 4- and 5-cycles from the angle table alone.
pub fn cycle_counts_from_spectrum(at: &AngleTable) -> Result<CycleCounts> {
    let d = at.walk_weights(2);
    let w3 = at.walk_weights(3);
    let w4 = at.walk_weights(4);
    let w5 = at.walk_weights(5);
    let m = 0.5 * d.iter().sum::<f64>();
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let sq_deg: f64 = d.iter().map(|x| x * x).sum();
    let c3 = sum(&w3) / 6.0;
    let c4 = (sum(&w4) - 2.0 * sq_deg + 2.0 * m) / 8.0;
    let deg_w3: f64 = d.iter().zip(&w3).map(|(dj, w)| (dj - 2.0) * w).sum();
    let c5 = (sum(&w5) - 5.0 * sum(&w3) - 5.0 * deg_w3) / 10.0;
    Ok(CycleCounts {
        c3: round_count(c3, INTEGER_TOL)?,
        c4: round_count(c4, INTEGER_TOL)?,
        c5: round_count(c5, INTEGER_TOL)?,
    })
}

/// Number of connected components: multiplicity of the Laplacian eigenvalue 0.
pub fn component_count_spectral(lap: &EigenspacePartition) -> usize {
    lap.multiplicity_near(0.0)
}

pub fn is_connected_spectral(lap: &EigenspacePartition) -> bool {
    component_count_spectral(lap) == 1
}

/// Every component is bipartite iff eigenvalue 2 is as frequent as eigenvalue 0.
pub fn is_bipartite_spectral(lap: &EigenspacePartition) -> bool {
    let zero = lap.multiplicity_near(0.0);
    zero > 0 && lap.multiplicity_near(2.0) == zero
}
