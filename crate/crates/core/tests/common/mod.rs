//! Independent dense oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_pe::graph::Graph;
use spectral_pe::linalg::Matrix;
use spectral_pe::ops::PEConfig;

pub type Dense = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect()
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let (n, m, p) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut c = vec![vec![0.0; p]; n];
    for i in 0..n {
        for k in 0..m {
            let aik = a[i][k];
            for j in 0..p {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn add_scaled(a: &Dense, b: &Dense, s: f64) -> Dense {
    a.iter().zip(b).map(|(r, q)| r.iter().zip(q).map(|(x, y)| x + s * y).collect()).collect()
}

pub fn scale(a: &Dense, s: f64) -> Dense {
    a.iter().map(|r| r.iter().map(|x| x * s).collect()).collect()
}

pub fn pow(a: &Dense, k: u32) -> Dense {
    (0..k).fold(identity(a.len()), |acc, _| mul(&acc, a))
}

pub fn max_abs(a: &Dense) -> f64 {
    a.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_diff(a: &Dense, b: &Matrix) -> f64 {
    assert_eq!((a.len(), a.first().map_or(0, Vec::len)), b.shape());
    let mut d = 0.0f64;
    for (i, row) in a.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            d = d.max((x - b[(i, j)]).abs());
        }
    }
    d
}

/// `exp(M)` by scaling and squaring around a degree-24 Taylor series.
pub fn expm(m: &Dense) -> Dense {
    let norm = m.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = scale(m, 0.5f64.powi(s));
    let mut term = identity(m.len());
    let mut sum = identity(m.len());
    for k in 1..=24 {
        term = scale(&mul(&term, &a), 1.0 / f64::from(k));
        sum = add_scaled(&sum, &term, 1.0);
    }
    for _ in 0..s {
        sum = mul(&sum, &sum);
    }
    sum
}

pub fn adjacency(g: &Graph) -> Dense {
    let mut a = vec![vec![0.0; g.n()]; g.n()];
    for &(u, v) in g.edges() {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    a
}

pub fn degrees(g: &Graph) -> Vec<f64> {
    adjacency(g).iter().map(|r| r.iter().sum()).collect()
}

/// `I - D^{-1/2} A D^{-1/2}` formed entrywise.
pub fn normalized_laplacian(g: &Graph) -> Dense {
    let a = adjacency(g);
    let d = degrees(g);
    let n = g.n();
    (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j)) - a[i][j] / (d[i] * d[j]).sqrt()).collect())
        .collect()
}

/// `D^{-1} A`.
pub fn random_walk(g: &Graph) -> Dense {
    let a = adjacency(g);
    let d = degrees(g);
    a.iter().enumerate().map(|(i, r)| r.iter().map(|x| x / d[i]).collect()).collect()
}

/// Erdos-Renyi graph without isolated nodes, from a seeded ChaCha stream.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::new(n, &edges, None).unwrap();
        if g.degrees().iter().all(|&d| d > 0) {
            return g;
        }
    }
}

/// Connected Erdos-Renyi graph: a random spanning tree plus random extra edges.
pub fn random_connected_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p && !edges.contains(&(u, v)) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, &edges, None).unwrap()
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.sample(rand_distr::StandardNormal))
}

pub fn to_dense(m: &Matrix) -> Dense {
    m.to_rows()
}

/// Positional encoding computed from dense matrix functions of the graph alone.
pub fn pe_dense(g: &Graph, cfg: &PEConfig) -> Dense {
    let n = g.n();
    let l = normalized_laplacian(g);
    let p = random_walk(g);
    let diag_cols = |ms: Vec<Dense>| -> Dense { (0..n).map(|i| ms.iter().map(|m| m[i][i]).collect()).collect() };
    match cfg {
        PEConfig::HeatDiag { ts } => diag_cols(ts.iter().map(|&t| expm(&scale(&l, -t))).collect()),
        PEConfig::Rwpe { ks } => diag_cols(ks.iter().map(|&k| pow(&p, k)).collect()),
        PEConfig::Diffusion { t } => expm(&scale(&l, -t)),
        PEConfig::Pstep { gamma, p: steps } => pow(&add_scaled(&identity(n), &l, -gamma), *steps),
        PEConfig::Gpr { gammas } => {
            let mut acc = scale(&identity(n), 0.0);
            for (k, gk) in gammas.iter().enumerate() {
                acc = add_scaled(&acc, &pow(&p, k as u32 + 1), *gk);
            }
            acc
        }
        PEConfig::Landing { k } => pow(&p, *k),
    }
}
