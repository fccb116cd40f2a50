use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{trial_rng, GraphSampler};
use super::thread_pool;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::nets::{
    Activation, Aggregation, BasisNetConfig, BasisNetModel, BlockKind, BlockSpec, Equivariance, Model, PhiSpec,
    SignNetConfig, SignNetModel, SpectralInput, IGN2_BASIS_MAPS,
};
use crate::spectral::{eigh, haar_orthogonal, partition_default, random_permutation, EigenspacePartition};

pub const SIGN_THRESHOLD: f64 = 1e-6;
pub const BASIS_THRESHOLD: f64 = 1e-5;
pub const PERM_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// Output unchanged when any subset of eigenvectors is negated.
    Sign,
    /// Output unchanged when each eigenspace basis is rotated by a Haar orthogonal matrix.
    Basis,
    /// Relabelling nodes relabels the output rows.
    Permutation,
}

impl Claim {
    pub fn threshold(self) -> f64 {
        match self {
            Claim::Sign => SIGN_THRESHOLD,
            Claim::Basis => BASIS_THRESHOLD,
            Claim::Permutation => PERM_THRESHOLD,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sign" => Ok(Claim::Sign),
            "basis" => Ok(Claim::Basis),
            "perm" | "permutation" => Ok(Claim::Permutation),
            _ => Err(Error::BadParams(format!("unknown claim {s:?} (sign, basis, perm)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The model makes no such claim; deviations are reported for information only.
    NotApplicable,
}

/// Seeds that reproduce one trial exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub graph_seed: u64,
    pub model_seed: u64,
    pub transform_seed: u64,
}

impl Witness {
    /// Seeds of trial `trial` under master seed `seed`.
    pub fn derive(seed: u64, trial: usize) -> Self {
        let mut rng = trial_rng(seed, trial as u64);
        Self { trial, graph_seed: rng.random(), model_seed: rng.random(), transform_seed: rng.random() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub claim: Claim,
    pub model: String,
    pub trials: usize,
    pub threshold: f64,
    pub max_deviation: f64,
    /// The worst trial; ties go to the earliest.
    pub witness: Witness,
    pub status: Status,
    /// Fraction of trials whose graph had a repeated eigenvalue.
    pub degenerate_fraction: f64,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Where each trial's model comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ModelSource {
    /// The same weights in every trial. Missing BasisNet multiplicities are
    /// initialised from the model's own seed.
    Fixed { model: Model },
    /// Fresh weights per trial, drawn from the trial's model seed.
    RandomSignNet { config: SignNetConfig },
    RandomBasisNet { config: BasisNetConfig },
}

impl ModelSource {
    fn instantiate(&self, seed: u64) -> Result<Model> {
        Ok(match self {
            ModelSource::Fixed { model } => model.clone(),
            ModelSource::RandomSignNet { config } => Model::SignNet(SignNetModel::new(config.clone(), seed)?),
            ModelSource::RandomBasisNet { config } => {
                let mut c = config.clone();
                c.seed = seed;
                Model::BasisNet(BasisNetModel::new(c)?)
            }
        })
    }

    pub fn descriptor(&self) -> Result<String> {
        let d = self.instantiate(0)?.descriptor();
        Ok(match self {
            ModelSource::Fixed { .. } => d,
            _ => format!("random {d}"),
        })
    }
}

/// SignNet used by the randomized checks: DeepSets `phi` over `[v, lambda]`,
/// DeepSets `rho`. `symmetrize = false` gives the `phi(v)`-only ablation.
pub fn reference_signnet(symmetrize: bool) -> SignNetConfig {
    let phi = BlockSpec::new(BlockKind::DeepSets, vec![2, 16, 16, 8], Activation::Relu).expect("valid widths");
    let rho = BlockSpec::new(BlockKind::DeepSets, vec![8, 16, 4], Activation::Relu).expect("valid widths");
    let mut c = SignNetConfig::new(phi, Some(rho));
    c.uses_eigvals = true;
    c.symmetrize = symmetrize;
    c
}

/// BasisNet used by the randomized checks: 2-IGN `phi_d`, DeepSets `rho`.
pub fn reference_basisnet() -> BasisNetConfig {
    let phi = BlockSpec::new(BlockKind::Ign2M2v, vec![IGN2_BASIS_MAPS + 1, 16, 8], Activation::Relu).expect("valid widths");
    let rho = BlockSpec::new(BlockKind::DeepSets, vec![8, 16, 4], Activation::Relu).expect("valid widths");
    BasisNetConfig::new(phi, Some(rho), 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    pub trials: usize,
    pub seed: u64,
    pub sampler: GraphSampler,
    /// Width of the Gaussian node features handed to the model; 0 for none.
    pub feature_dim: usize,
    /// Use only the first `k` eigenvectors (SignNet); `None` for all.
    pub max_eigvecs: Option<usize>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { trials: 100, seed: 0, sampler: GraphSampler::erdos_renyi(32), feature_dim: 0, max_eigvecs: None }
    }
}

pub fn check_sign_invariance(source: &ModelSource, cfg: &CheckConfig) -> Result<InvarianceReport> {
    run_check(Claim::Sign, source, cfg)
}

pub fn check_basis_invariance(source: &ModelSource, cfg: &CheckConfig) -> Result<InvarianceReport> {
    run_check(Claim::Basis, source, cfg)
}

pub fn check_perm_equivariance(source: &ModelSource, cfg: &CheckConfig) -> Result<InvarianceReport> {
    run_check(Claim::Permutation, source, cfg)
}

pub fn run_check(claim: Claim, source: &ModelSource, cfg: &CheckConfig) -> Result<InvarianceReport> {
    if cfg.trials == 0 {
        return Err(Error::BadParams("at least one trial is required".into()));
    }
    let pool = thread_pool()?;
    let outcomes: Vec<Result<Outcome>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(claim, source, cfg, Witness::derive(cfg.seed, t)))
            .collect()
    });
    let mut worst: Option<(f64, Witness)> = None;
    let mut degenerate = 0usize;
    let mut applicable = true;
    for (t, o) in outcomes.into_iter().enumerate() {
        let o = o?;
        degenerate += usize::from(o.degenerate);
        applicable &= o.applicable;
        if worst.is_none_or(|(d, _)| o.deviation > d) {
            worst = Some((o.deviation, Witness::derive(cfg.seed, t)));
        }
    }
    let (max_deviation, witness) = worst.expect("trials >= 1");
    let threshold = claim.threshold();
    let status = match (applicable, max_deviation <= threshold) {
        (false, _) => Status::NotApplicable,
        (true, true) => Status::Pass,
        (true, false) => Status::Fail,
    };
    Ok(InvarianceReport {
        claim,
        model: source.descriptor()?,
        trials: cfg.trials,
        threshold,
        max_deviation,
        witness,
        status,
        degenerate_fraction: degenerate as f64 / cfg.trials as f64,
    })
}

/// Recomputes the deviation of a single trial from its witness.
pub fn replay(claim: Claim, source: &ModelSource, cfg: &CheckConfig, witness: Witness) -> Result<f64> {
    Ok(run_trial(claim, source, cfg, witness)?.deviation)
}

struct Outcome {
    deviation: f64,
    degenerate: bool,
    applicable: bool,
}

/// Node count forced by a model whose input width depends on `n`.
fn pinned_n(model: &Model, feature_dim: usize) -> Option<usize> {
    match model {
        Model::SignNet(m) if m.config.equivariance == Equivariance::Unconstrained => match &m.config.phi {
            PhiSpec::Block(b) => Some(b.in_width() / m.config.phi_channels(feature_dim)),
            _ => None,
        },
        _ => None,
    }
}

fn run_trial(claim: Claim, source: &ModelSource, cfg: &CheckConfig, w: Witness) -> Result<Outcome> {
    let mut model = source.instantiate(w.model_seed)?;
    let mut grng = ChaCha8Rng::seed_from_u64(w.graph_seed);
    let g = cfg.sampler.sample(&mut grng, pinned_n(&model, cfg.feature_dim))?;
    let n = g.n();
    let x = (cfg.feature_dim > 0).then(|| Matrix::from_fn(n, cfg.feature_dim, |_, _| grng.sample(StandardNormal)));
    let eig = eigh(&g.normalized_laplacian()?)?;
    let part = partition_default(&eig);
    let mut trng = ChaCha8Rng::seed_from_u64(w.transform_seed);
    if let Model::BasisNet(b) = &mut model {
        b.prepare(&part);
    }

    let applicable = !matches!(
        (&model, claim),
        (Model::SignNet(m), Claim::Permutation) if m.config.equivariance == Equivariance::Unconstrained
    );
    let deviation = match (&model, claim) {
        (Model::SignNet(m), Claim::Sign) => {
            let k = eigvec_count(m, cfg, n)?;
            let e = eig.truncated(k);
            let mut flipped = e.vectors.clone();
            for i in 0..k {
                if trng.random::<bool>() {
                    let col: Vec<f64> = flipped.column(i).iter().map(|v| -v).collect();
                    flipped.set_column(i, &col);
                }
            }
            let a = eval_signnet(m, &e.vectors, &e.values, x.as_ref(), &g)?;
            let b = eval_signnet(m, &flipped, &e.values, x.as_ref(), &g)?;
            a.max_abs_diff(&b)
        }
        (Model::SignNet(m), Claim::Basis) => {
            // Columns are handed over independently, so a rotation inside an
            // eigenspace is invisible to the sign symmetry.
            let k = eigvec_count(m, cfg, n)?;
            let qs = haar_rotations(&part, &mut trng);
            let (va, values) = stacked(&part);
            let (vb, _) = stacked(&part.rotated(&qs)?);
            let a = eval_signnet(m, &va.column_block(0, k), &values[..k], x.as_ref(), &g)?;
            let b = eval_signnet(m, &vb.column_block(0, k), &values[..k], x.as_ref(), &g)?;
            a.max_abs_diff(&b)
        }
        (Model::SignNet(m), Claim::Permutation) => {
            let k = eigvec_count(m, cfg, n)?;
            let e = eig.truncated(k);
            let perm = random_permutation(n, &mut trng);
            let a = eval_signnet(m, &e.vectors, &e.values, x.as_ref(), &g)?;
            let ep = e.permute_rows(&perm);
            let xp = x.as_ref().map(|x| permute_rows(x, &perm));
            let b = eval_signnet(m, &ep.vectors, &ep.values, xp.as_ref(), &g.permuted(&perm)?)?;
            permuted_output(&a, &perm).max_abs_diff(&b)
        }
        (Model::BasisNet(m), Claim::Sign) => {
            let qs: Vec<Matrix> = part
                .groups
                .iter()
                .map(|grp| {
                    let d = grp.dim();
                    Matrix::from_fn(d, d, |i, j| if i != j { 0.0 } else if trng.random::<bool>() { -1.0 } else { 1.0 })
                })
                .collect();
            let a = m.forward(&part, x.as_ref(), Some(&g))?;
            let b = m.forward(&part.rotated(&qs)?, x.as_ref(), Some(&g))?;
            a.max_abs_diff(&b)
        }
        (Model::BasisNet(m), Claim::Basis) => {
            let qs = haar_rotations(&part, &mut trng);
            let a = m.forward(&part, x.as_ref(), Some(&g))?;
            let b = m.forward(&part.rotated(&qs)?, x.as_ref(), Some(&g))?;
            a.max_abs_diff(&b)
        }
        (Model::BasisNet(m), Claim::Permutation) => {
            let perm = random_permutation(n, &mut trng);
            let a = m.forward(&part, x.as_ref(), Some(&g))?;
            let xp = x.as_ref().map(|x| permute_rows(x, &perm));
            let b = m.forward(&part.permute_rows(&perm), xp.as_ref(), Some(&g.permuted(&perm)?))?;
            permuted_output(&a, &perm).max_abs_diff(&b)
        }
    };
    Ok(Outcome {
        deviation: if deviation.is_nan() { f64::INFINITY } else { deviation },
        degenerate: part.max_multiplicity() > 1,
        applicable,
    })
}

fn eigvec_count(m: &SignNetModel, cfg: &CheckConfig, n: usize) -> Result<usize> {
    let k = match m.config.aggregation {
        Aggregation::Concat { k } => k,
        Aggregation::Sum => cfg.max_eigvecs.unwrap_or(n).min(n),
    };
    if k == 0 || k > n {
        return Err(Error::BadParams(format!("model needs {k} eigenvectors but the graph has {n} nodes")));
    }
    Ok(k)
}

fn eval_signnet(m: &SignNetModel, v: &Matrix, values: &[f64], x: Option<&Matrix>, g: &Graph) -> Result<Matrix> {
    let mut input = SpectralInput::new(v, values).with_graph(g);
    if let Some(x) = x {
        input = input.with_features(x);
    }
    m.forward(&input)
}

fn haar_rotations<R: Rng + ?Sized>(part: &EigenspacePartition, rng: &mut R) -> Vec<Matrix> {
    part.groups.iter().map(|grp| haar_orthogonal(grp.dim(), rng)).collect()
}

/// All group bases side by side, with each column's eigenvalue.
fn stacked(part: &EigenspacePartition) -> (Matrix, Vec<f64>) {
    let n = part.n();
    let mut cols = Vec::new();
    let mut values = Vec::new();
    for grp in &part.groups {
        for j in 0..grp.dim() {
            cols.push(grp.basis.column(j));
            values.push(grp.mu);
        }
    }
    (Matrix::from_fn(n, cols.len(), |i, j| cols[j][i]), values)
}

/// Rows moved so that row `i` lands at `perm[i]`.
fn permute_rows(m: &Matrix, perm: &[usize]) -> Matrix {
    let mut inv = vec![0usize; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    m.select_rows(&inv)
}

/// `P f` for node-level outputs; graph-level outputs are left as they are.
fn permuted_output(out: &Matrix, perm: &[usize]) -> Matrix {
    if out.rows() == perm.len() {
        permute_rows(out, perm)
    } else {
        out.clone()
    }
}
