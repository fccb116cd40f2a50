use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Graph families used throughout the tests and experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Family {
    Cycle { n: usize },
    Path { n: usize },
    /// 4-neighbor `h x w` lattice, node `(r, c)` has index `r * w + c`.
    Grid { h: usize, w: usize },
    Complete { n: usize },
    ErdosRenyi { n: usize, p: f64, seed: u64 },
}

/// The non-isomorphic, degree-matched pair used for the bipartite separation.
#[derive(Debug, Clone)]
pub struct GraphPair {
    /// Triangle with a pendant path; not bipartite.
    pub first: Graph,
    /// Bipartite graph with the same degree multiset.
    pub second: Graph,
}

pub fn generate(family: Family) -> Result<Graph> {
    match family {
        Family::Cycle { n } => {
            if n < 3 {
                return Err(Error::BadParams(format!("cycle needs n >= 3, got {n}")));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            Graph::new(n, &edges, None)
        }
        Family::Path { n } => {
            if n < 1 {
                return Err(Error::BadParams("path needs n >= 1".into()));
            }
            let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            Graph::new(n, &edges, None)
        }
        Family::Grid { h, w } => {
            if h == 0 || w == 0 {
                return Err(Error::BadParams(format!("grid needs positive sides, got {h}x{w}")));
            }
            let mut edges = Vec::with_capacity(2 * h * w);
            for r in 0..h {
                for c in 0..w {
                    let i = r * w + c;
                    if c + 1 < w {
                        edges.push((i, i + 1));
                    }
                    if r + 1 < h {
                        edges.push((i, i + w));
                    }
                }
            }
            Graph::new(h * w, &edges, None)
        }
        Family::Complete { n } => {
            if n < 1 {
                return Err(Error::BadParams("complete graph needs n >= 1".into()));
            }
            let mut edges = Vec::with_capacity(n * (n - 1) / 2);
            for u in 0..n {
                for v in (u + 1)..n {
                    edges.push((u, v));
                }
            }
            Graph::new(n, &edges, None)
        }
        Family::ErdosRenyi { n, p, seed } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::BadParams(format!("edge probability {p} not in [0, 1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.random::<f64>() < p {
                        edges.push((u, v));
                    }
                }
            }
            Graph::new(n, &edges, None)
        }
    }
}

/// Builds the pair `(G1, G2)` on `n >= 5` nodes.
///
/// `G1`: triangle `w0 w1 w2` with the path `w0 - w3 - ... - w_{n-1}`.
/// `G2`: left side `{v0, v1}`, right side `{v2, v3, v4}`, with `v0` joined to
/// the whole right side and `v1` to `v2, v3`; each further node `v_j` goes on
/// the side opposite `v_{j-1}` and is joined to `v_{j-1}` only.
///
/// Both carry the node feature `sqrt(degree)`.
pub fn prop3_pair(n: usize) -> Result<GraphPair> {
    if n < 5 {
        return Err(Error::BadParams(format!("prop3_pair needs n >= 5, got {n}")));
    }
    let mut e1 = vec![(0, 1), (1, 2), (0, 2), (0, 3)];
    for j in 4..n {
        e1.push((j - 1, j));
    }
    let mut e2 = vec![(0, 2), (0, 3), (0, 4), (1, 2), (1, 3)];
    for j in 5..n {
        e2.push((j - 1, j));
    }
    let with_sqrt_degree = |g: Graph| -> Result<Graph> {
        let x = Matrix::column_vector(&g.sqrt_degree_vector());
        g.with_features(x)
    };
    Ok(GraphPair {
        first: with_sqrt_degree(Graph::new(n, &e1, None)?)?,
        second: with_sqrt_degree(Graph::new(n, &e2, None)?)?,
    })
}

/// The Petersen graph: outer 5-cycle, inner pentagram, spokes.
pub fn petersen() -> Graph {
    let mut edges = Vec::with_capacity(15);
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
        edges.push((i, 5 + i));
    }
    Graph::new(10, &edges, None).expect("petersen edges are valid")
}
