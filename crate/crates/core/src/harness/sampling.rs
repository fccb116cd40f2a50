use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{generate, petersen, Family, Graph};
use crate::spectral::{eigh, partition_default, random_permutation};

const MAX_RESAMPLES: usize = 10_000;

/// Independent RNG stream for one trial of a seeded experiment.
pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng
}

/// Random graphs for the invariance checks. None contain isolated nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSampler {
    /// `G(n, p)` with `n` and `p` uniform in the given ranges.
    ErdosRenyi { n_min: usize, n_max: usize, p_min: f64, p_max: f64 },
    /// Cycles, grids, complete graphs, stars, Petersen and doubled random graphs,
    /// randomly relabelled; almost all have a repeated Laplacian eigenvalue.
    DegenerateRich { n_max: usize },
    /// Erdos-Renyi graphs whose Laplacian eigenvalues are all simple.
    SimpleSpectrum { n_min: usize, n_max: usize },
}

impl GraphSampler {
    pub fn erdos_renyi(n_max: usize) -> Self {
        GraphSampler::ErdosRenyi { n_min: 2, n_max, p_min: 0.2, p_max: 0.7 }
    }

    /// Samples a graph; `n` pins the node count where the family allows it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: Option<usize>) -> Result<Graph> {
        match *self {
            GraphSampler::ErdosRenyi { n_min, n_max, p_min, p_max } => {
                check_range(n_min.max(2), n_max)?;
                let n = n.unwrap_or_else(|| rng.random_range(n_min.max(2)..=n_max));
                er_without_isolated(rng, n, p_min, p_max)
            }
            GraphSampler::SimpleSpectrum { n_min, n_max } => {
                check_range(n_min.max(2), n_max)?;
                for _ in 0..MAX_RESAMPLES {
                    let n = n.unwrap_or_else(|| rng.random_range(n_min.max(2)..=n_max));
                    let g = er_without_isolated(rng, n, 0.3, 0.7)?;
                    let part = partition_default(&eigh(&g.normalized_laplacian()?)?);
                    if part.max_multiplicity() == 1 {
                        return Ok(g);
                    }
                }
                Err(Error::BadParams("no graph with a simple spectrum found".into()))
            }
            GraphSampler::DegenerateRich { n_max } => {
                if n.is_some() {
                    return Err(Error::BadParams("degenerate-rich sampler cannot pin n".into()));
                }
                check_range(4, n_max)?;
                let g = degenerate_graph(rng, n_max)?;
                let perm = random_permutation(g.n(), rng);
                g.permuted(&perm)
            }
        }
    }
}

fn check_range(lo: usize, hi: usize) -> Result<()> {
    if lo > hi {
        return Err(Error::BadParams(format!("empty node range {lo}..={hi}")));
    }
    Ok(())
}

fn er_without_isolated<R: Rng + ?Sized>(rng: &mut R, n: usize, p_min: f64, p_max: f64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::BadParams("isolated-free graphs need n >= 2".into()));
    }
    for _ in 0..MAX_RESAMPLES {
        let p = if p_max > p_min { rng.random_range(p_min..=p_max) } else { p_min };
        let g = generate(Family::ErdosRenyi { n, p, seed: rng.random() })?;
        if g.degrees().iter().all(|&d| d > 0) {
            return Ok(g);
        }
    }
    Err(Error::BadParams(format!("G({n}, p) kept producing isolated nodes")))
}

fn degenerate_graph<R: Rng + ?Sized>(rng: &mut R, n_max: usize) -> Result<Graph> {
    let mut kinds = vec!["cycle", "complete", "star", "double"];
    if n_max >= 6 {
        kinds.push("grid");
    }
    if n_max >= 10 {
        kinds.push("petersen");
    }
    match *kinds.choose(rng).expect("non-empty") {
        "cycle" => generate(Family::Cycle { n: rng.random_range(4..=n_max.min(16)) }),
        "complete" => generate(Family::Complete { n: rng.random_range(3..=n_max.min(8)) }),
        "star" => {
            let n = rng.random_range(4..=n_max.min(12));
            Graph::new(n, &(1..n).map(|i| (0, i)).collect::<Vec<_>>(), None)
        }
        "grid" => loop {
            let (h, w) = (rng.random_range(2..=5), rng.random_range(3..=5));
            if h * w <= n_max {
                break generate(Family::Grid { h, w });
            }
        },
        "petersen" => Ok(petersen()),
        _ => {
            let n = rng.random_range(2..=(n_max / 2).clamp(2, 8));
            let half = er_without_isolated(rng, n, 0.4, 0.8)?;
            Ok(half.disjoint_union(&half))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_and_repeatable() {
        let a: u64 = trial_rng(5, 0).random();
        let b: u64 = trial_rng(5, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, trial_rng(5, 0).random::<u64>());
    }

    #[test]
    fn samples_have_no_isolated_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for s in [GraphSampler::erdos_renyi(12), GraphSampler::DegenerateRich { n_max: 16 }] {
            for _ in 0..50 {
                let g = s.sample(&mut rng, None).unwrap();
                assert!(g.check_no_isolated().is_ok());
                assert!(g.n() <= 16);
            }
        }
        let g = GraphSampler::erdos_renyi(12).sample(&mut rng, Some(7)).unwrap();
        assert_eq!(g.n(), 7);
    }
}
