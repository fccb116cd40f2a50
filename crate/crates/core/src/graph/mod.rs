//! Simple undirected graphs in CSR form, with the matrices spectral methods
//! are built from.

mod generators;
mod io;

pub use generators::{generate, petersen, prop3_pair, Family, GraphPair};
pub use io::{emit_edge_list, parse_edge_list, parse_graph, parse_graph_json, to_json, GraphJson};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};

/// A simple undirected graph with optional dense node features.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted; the CSR adjacency
/// lists both directions with sorted neighbor lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    features: Option<Matrix>,
}

impl Graph {
    /// Builds a graph, collapsing duplicate `(u, v)` / `(v, u)` pairs.
    pub fn new(n: usize, edges: &[(usize, usize)], features: Option<Matrix>) -> Result<Self> {
        let mut canon = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::IndexOutOfRange { index: x, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        canon.dedup();
        if let Some(f) = &features {
            if f.rows() != n {
                return Err(Error::FeatureRowMismatch { expected: n, got: f.rows() });
            }
        }

        let mut deg = vec![0usize; n];
        for &(u, v) in &canon {
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0usize; offsets[n]];
        for &(u, v) in &canon {
            neighbors[fill[u]] = v;
            fill[u] += 1;
            neighbors[fill[v]] = u;
            fill[v] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok(Self { n, edges: canon, offsets, neighbors, features })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn features(&self) -> Option<&Matrix> {
        self.features.as_ref()
    }

    pub fn with_features(mut self, features: Matrix) -> Result<Self> {
        if features.rows() != self.n {
            return Err(Error::FeatureRowMismatch { expected: self.n, got: features.rows() });
        }
        self.features = Some(features);
        Ok(self)
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.offsets[i + 1] - self.offsets[i]).collect()
    }

    pub fn check_no_isolated(&self) -> Result<()> {
        match self.degrees().iter().position(|&d| d == 0) {
            Some(i) => Err(Error::IsolatedNode(i)),
            None => Ok(()),
        }
    }

    /// Dense 0/1 adjacency matrix.
    pub fn adjacency_matrix(&self) -> SymMatrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        SymMatrix::new(a).expect("adjacency is symmetric by construction")
    }

    /// `L = I - D^{-1/2} A D^{-1/2}`.
    pub fn normalized_laplacian(&self) -> Result<SymMatrix> {
        self.check_no_isolated()?;
        let inv_sqrt: Vec<f64> = self.degrees().iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
        let mut l = Matrix::identity(self.n);
        for &(u, v) in &self.edges {
            let w = -inv_sqrt[u] * inv_sqrt[v];
            l[(u, v)] = w;
            l[(v, u)] = w;
        }
        SymMatrix::new(l)
    }

    /// `D^{1/2} 1`, the null vector of the normalized Laplacian.
    pub fn sqrt_degree_vector(&self) -> Vec<f64> {
        self.degrees().iter().map(|&d| (d as f64).sqrt()).collect()
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`; features follow.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "permutation of length {} for {} nodes",
                perm.len(),
                self.n
            )));
        }
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        let features = self.features.as_ref().map(|f| {
            let mut inv = vec![0usize; self.n];
            for (i, &p) in perm.iter().enumerate() {
                inv[p] = i;
            }
            f.select_rows(&inv)
        });
        Graph::new(self.n, &edges, features)
    }

    /// Disjoint union; nodes of `other` are shifted by `self.n()`. Features are dropped.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let shift = self.n;
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(u, v)| (u + shift, v + shift)));
        Graph::new(self.n + other.n, &edges, None).expect("union of valid graphs is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_is_symmetric_and_sorted() {
        let g = Graph::new(4, &[(0, 1), (1, 0), (1, 2), (2, 3), (3, 0)], None).unwrap();
        assert_eq!(g.edge_count(), 4);
        for u in 0..4 {
            for &v in g.neighbors(u) {
                assert!(g.has_edge(v, u));
            }
            assert!(g.neighbors(u).windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn permuted_graph_moves_features() {
        let f = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let g = Graph::new(3, &[(0, 1)], Some(f)).unwrap();
        let p = g.permuted(&[2, 0, 1]).unwrap();
        assert!(p.has_edge(2, 0));
        let pf = p.features().unwrap();
        assert_eq!(pf.column(0), vec![1.0, 2.0, 0.0]);
    }
}
