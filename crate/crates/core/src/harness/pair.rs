use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{prop3_pair, Graph};
use crate::linalg::Matrix;
use crate::ops::{filter_bank, matrix_power_diag, spectral_conv, BANK};
use crate::spectral::eigh;

/// Sorted convolution outputs of the two graphs must agree to this.
pub const CONV_TOL: f64 = 1e-8;
/// `lambda_max` of the bipartite member must be 2 to this.
pub const BIPARTITE_TOL: f64 = 1e-8;
pub const MIN_SEPARATION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterComparison {
    pub filter: String,
    /// Max abs difference between the sorted outputs on the two graphs.
    pub max_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub n: usize,
    pub filters: Vec<FilterComparison>,
    pub conv_outputs_match: bool,
    /// Largest normalized-Laplacian eigenvalue of the first and second graph.
    pub lambda_max: [f64; 2],
    /// `lambda_max(second) - lambda_max(first)`.
    pub separation: f64,
    pub separates: bool,
    pub triangles: [u64; 2],
    /// Colour refinement ends with different colour histograms.
    pub refinement_distinguishes: bool,
    /// Triangle counts or refinement prove the graphs non-isomorphic.
    pub non_isomorphic: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub rows: Vec<PairRow>,
    pub pass: bool,
}

/// Checks, for each `n`, that the pair is invisible to spectral convolution
/// with `X = D^{1/2} 1` but separated by the top eigenvalue.
pub fn bipartite_pair_experiment(n_min: usize, n_max: usize) -> Result<PairReport> {
    if n_min < 5 || n_min > n_max {
        return Err(Error::BadParams(format!("need 5 <= n_min <= n_max, got {n_min}..{n_max}")));
    }
    let rows = (n_min..=n_max).map(pair_row).collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(PairReport { rows, pass })
}

fn pair_row(n: usize) -> Result<PairRow> {
    let pair = prop3_pair(n)?;
    let (g1, g2) = (&pair.first, &pair.second);
    let e1 = eigh(&g1.normalized_laplacian()?)?;
    let e2 = eigh(&g2.normalized_laplacian()?)?;
    let x1 = Matrix::column_vector(&g1.sqrt_degree_vector());
    let x2 = Matrix::column_vector(&g2.sqrt_degree_vector());
    let mut filters = Vec::new();
    for name in BANK {
        let f = filter_bank(name)?;
        let a = sorted(spectral_conv(&e1, &f, &x1)?);
        let b = sorted(spectral_conv(&e2, &f, &x2)?);
        let max_diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        filters.push(FilterComparison { filter: name.to_string(), max_diff });
    }
    let conv_outputs_match = filters.iter().all(|f| f.max_diff <= CONV_TOL);
    let lambda_max = [*e1.values.last().unwrap(), *e2.values.last().unwrap()];
    let separation = lambda_max[1] - lambda_max[0];
    let separates = (lambda_max[1] - 2.0).abs() <= BIPARTITE_TOL && separation >= MIN_SEPARATION;
    let triangles = [triangle_count(g1), triangle_count(g2)];
    let refinement_distinguishes = color_refinement_distinguishes(g1, g2);
    let non_isomorphic = triangles[0] != triangles[1] || refinement_distinguishes;
    Ok(PairRow {
        n,
        filters,
        conv_outputs_match,
        lambda_max,
        separation,
        separates,
        triangles,
        refinement_distinguishes,
        non_isomorphic,
        pass: conv_outputs_match && separates && non_isomorphic,
    })
}

fn sorted(m: Matrix) -> Vec<f64> {
    let mut v = m.into_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn triangle_count(g: &Graph) -> u64 {
    matrix_power_diag(g, 3).iter().sum::<u64>() / 6
}

/// 1-dimensional Weisfeiler-Leman refinement run on both graphs with a shared palette.
pub fn color_refinement_distinguishes(a: &Graph, b: &Graph) -> bool {
    if a.n() != b.n() {
        return true;
    }
    let mut ca = vec![0usize; a.n()];
    let mut cb = vec![0usize; b.n()];
    for _ in 0..=a.n() {
        let mut palette: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
        let sig = |g: &Graph, c: &[usize], v: usize| {
            let mut nb: Vec<usize> = g.neighbors(v).iter().map(|&u| c[u]).collect();
            nb.sort_unstable();
            (c[v], nb)
        };
        let sa: Vec<_> = (0..a.n()).map(|v| sig(a, &ca, v)).collect();
        let sb: Vec<_> = (0..b.n()).map(|v| sig(b, &cb, v)).collect();
        for s in sa.iter().chain(&sb) {
            let next = palette.len();
            palette.entry(s.clone()).or_insert(next);
        }
        let na: Vec<usize> = sa.iter().map(|s| palette[s]).collect();
        let nb: Vec<usize> = sb.iter().map(|s| palette[s]).collect();
        if histogram(&na) != histogram(&nb) {
            return true;
        }
        let stable = class_count(&na) == class_count(&ca) && class_count(&nb) == class_count(&cb);
        ca = na;
        cb = nb;
        if stable {
            break;
        }
    }
    false
}

fn histogram(c: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &x in c {
        *h.entry(x).or_default() += 1;
    }
    h
}

fn class_count(c: &[usize]) -> usize {
    histogram(c).len()
}
