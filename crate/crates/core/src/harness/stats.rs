use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::thread_pool;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::{eigh, partition_eigenspaces, DEFAULT_TOL_ABS, DEFAULT_TOL_REL};

/// Grouping tolerances for the normalized-Laplacian spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: DEFAULT_TOL_ABS, rel: DEFAULT_TOL_REL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenspaceStats {
    /// Graphs that contributed, i.e. excluding skipped ones.
    pub graphs: usize,
    /// Graphs skipped because they contain an isolated node.
    pub skipped: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub max_multiplicity: usize,
    /// Percent of graphs with an eigenspace of dimension > 1.
    pub pct_graphs_multiplicity_gt1: f64,
    /// Filled when exactly one graph contributed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub single: Option<SingleGraphStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleGraphStats {
    pub nodes: usize,
    pub distinct_eigenvalues: usize,
    pub unique_multiplicities: usize,
    pub max_multiplicity: usize,
    /// Percent of eigenvectors lying in an eigenspace of dimension > 1.
    pub pct_eigvecs_multiplicity_gt1: f64,
}

/// Eigenspace dimensions of `L = I - D^{-1/2} A D^{-1/2}`.
pub fn multiplicities(g: &Graph, tol: Tolerance) -> Result<Vec<usize>> {
    let e = eigh(&g.normalized_laplacian()?)?;
    Ok(partition_eigenspaces(&e, tol.abs, tol.rel).dims())
}

pub fn single_graph_stats(g: &Graph, tol: Tolerance) -> Result<SingleGraphStats> {
    Ok(single_from_dims(g.n(), &multiplicities(g, tol)?))
}

fn single_from_dims(n: usize, dims: &[usize]) -> SingleGraphStats {
    let mut unique = dims.to_vec();
    unique.sort_unstable();
    unique.dedup();
    let in_degenerate: usize = dims.iter().filter(|&&d| d > 1).sum();
    SingleGraphStats {
        nodes: n,
        distinct_eigenvalues: dims.len(),
        unique_multiplicities: unique.len(),
        max_multiplicity: dims.iter().copied().max().unwrap_or(0),
        pct_eigvecs_multiplicity_gt1: percent(in_degenerate, n),
    }
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Statistics over a list of graphs; graphs with isolated nodes are skipped and counted.
pub fn eigenspace_stats(graphs: &[Graph], tol: Tolerance) -> Result<EigenspaceStats> {
    let pool = thread_pool()?;
    let per_graph: Vec<Result<Option<Vec<usize>>>> = pool.install(|| {
        graphs
            .par_iter()
            .map(|g| match multiplicities(g, tol) {
                Ok(d) => Ok(Some(d)),
                Err(Error::IsolatedNode(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    });
    let mut stats = EigenspaceStats {
        graphs: 0,
        skipped: 0,
        n_min: 0,
        n_max: 0,
        max_multiplicity: 0,
        pct_graphs_multiplicity_gt1: 0.0,
        single: None,
    };
    let mut degenerate = 0;
    let mut last = None;
    for (g, dims) in graphs.iter().zip(per_graph) {
        let Some(dims) = dims? else {
            stats.skipped += 1;
            continue;
        };
        let n = g.n();
        stats.n_min = if stats.graphs == 0 { n } else { stats.n_min.min(n) };
        stats.n_max = stats.n_max.max(n);
        stats.graphs += 1;
        let m = dims.iter().copied().max().unwrap_or(0);
        stats.max_multiplicity = stats.max_multiplicity.max(m);
        degenerate += usize::from(m > 1);
        last = Some((n, dims));
    }
    stats.pct_graphs_multiplicity_gt1 = percent(degenerate, stats.graphs);
    if stats.graphs == 1 {
        let (n, dims) = last.expect("one graph counted");
        stats.single = Some(single_from_dims(n, &dims));
    }
    Ok(stats)
}
