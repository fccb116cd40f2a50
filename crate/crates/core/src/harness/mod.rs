//! Randomized certification of invariance claims and the desk-scale experiments.

mod invariance;
mod pair;
mod pca;
mod regression;
mod sampling;
mod stats;

pub use invariance::{
    check_basis_invariance, check_perm_equivariance, check_sign_invariance, reference_basisnet, reference_signnet, replay, run_check, CheckConfig, Claim,
    InvarianceReport, ModelSource, Status, Witness, BASIS_THRESHOLD, PERM_THRESHOLD, SIGN_THRESHOLD,
};
pub use pair::{
    bipartite_pair_experiment, color_refinement_distinguishes, triangle_count, FilterComparison, PairReport, PairRow,
    BIPARTITE_TOL, CONV_TOL, MIN_SEPARATION,
};
pub use pca::{pca_top_component, PCA_MAX_ITERS, PCA_TOL};
pub use regression::{
    filter_regression_experiment, image_like_signal, train_one, RegressionConfig, RegressionModel, RegressionResult,
    RegressionTask, MAX_GRID, MAX_PARAMS,
};
pub use sampling::{trial_rng, GraphSampler};
pub use stats::{eigenspace_stats, multiplicities, single_graph_stats, EigenspaceStats, SingleGraphStats, Tolerance};

use crate::error::{Error, Result};

/// Caps the worker threads used by the harness.
pub const THREADS_ENV: &str = "SPECTRAL_PE_THREADS";

/// Thread pool sized by [`THREADS_ENV`], or by rayon's default when unset.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::BadParams(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::BadParams(format!("thread pool: {e}")))
}
