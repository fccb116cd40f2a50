//! Learning spectral filters on a grid from eigenpairs alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamConfig, ParamSet, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graph::{generate, Family, Graph};
use crate::linalg::Matrix;
use crate::nets::{
    Activation, Aggregation, BasisNetConfig, BasisNetModel, BlockKind, BlockSpec, Equivariance, PhiSpec,
    SignNetConfig, SignNetModel, SpectralInput,
};
use crate::ops::{filter_bank, spectral_conv};
use crate::spectral::{eigh, partition_default, EigDecomp, EigenspacePartition};

/// Largest grid side accepted.
pub const MAX_GRID: usize = 32;

/// Trainable-parameter ceiling per model.
pub const MAX_PARAMS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionModel {
    SignnetDeepsets,
    Basisnet,
    MlpSignflipBaseline,
    MlpAbsvalBaseline,
}

impl RegressionModel {
    pub const ALL: [RegressionModel; 4] = [
        RegressionModel::SignnetDeepsets,
        RegressionModel::Basisnet,
        RegressionModel::MlpSignflipBaseline,
        RegressionModel::MlpAbsvalBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegressionModel::SignnetDeepsets => "signnet-deepsets",
            RegressionModel::Basisnet => "basisnet",
            RegressionModel::MlpSignflipBaseline => "mlp-signflip-baseline",
            RegressionModel::MlpAbsvalBaseline => "mlp-absval-baseline",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::BadParams(format!("unknown model {name:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionConfig {
    /// Grid side; the graph is `grid x grid`.
    pub grid: usize,
    pub filters: Vec<String>,
    pub models: Vec<RegressionModel>,
    pub epochs: usize,
    pub seed: u64,
    pub lr: f64,
    /// Width of the boundary band excluded from the loss and the reported error.
    pub border: usize,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            grid: 16,
            filters: vec!["low-pass".into()],
            models: vec![RegressionModel::SignnetDeepsets],
            epochs: 2000,
            seed: 0,
            lr: 3e-3,
            border: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub filter: String,
    pub model: RegressionModel,
    /// Sum of squared errors over the interior nodes after training.
    pub sse: f64,
    /// The same error for the all-zero prediction, for scale.
    pub baseline_sse: f64,
    pub epochs: usize,
    pub seed: u64,
    pub parameters: usize,
    pub descriptor: String,
}

/// Grid, its spectrum, the signal and the interior mask shared by every run.
pub struct RegressionTask {
    pub graph: Graph,
    pub eig: EigDecomp,
    pub partition: EigenspacePartition,
    /// `n x 1` node signal.
    pub signal: Matrix,
    pub interior: Vec<usize>,
}

impl RegressionTask {
    pub fn new(side: usize, border: usize, seed: u64) -> Result<Self> {
        if side == 0 || side > MAX_GRID {
            return Err(Error::BadParams(format!("grid side must be in 1..={MAX_GRID}")));
        }
        if 2 * border >= side {
            return Err(Error::BadParams("border leaves no interior nodes".into()));
        }
        let graph = generate(Family::Grid { h: side, w: side })?;
        let eig = eigh(&graph.normalized_laplacian()?)?;
        let partition = partition_default(&eig);
        let signal = image_like_signal(side, seed);
        let interior = (0..side * side)
            .filter(|&i| {
                let (r, c) = (i / side, i % side);
                r >= border && c >= border && r < side - border && c < side - border
            })
            .collect();
        Ok(Self { graph, eig, partition, signal, interior })
    }

    pub fn target(&self, filter: &str) -> Result<Matrix> {
        spectral_conv(&self.eig, &filter_bank(filter)?, &self.signal)
    }

    fn sse(&self, pred: &Matrix, target: &Matrix) -> f64 {
        self.interior.iter().map(|&i| (pred[(i, 0)] - target[(i, 0)]).powi(2)).sum()
    }
}

/// Smooth bumps plus a sharp-edged rectangle and fine speckle, scaled into `[0, 1]`.
///
/// Mimics a small grayscale image: mostly low frequency with edges that reach
/// the top of the spectrum.
pub fn image_like_signal(side: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = side as f64;
    let bumps: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (rng.random_range(0.0..s), rng.random_range(0.0..s), rng.random_range(0.15 * s..0.35 * s), rng.random_range(-1.0..1.0))
        })
        .collect();
    let (r0, c0) = (rng.random_range(0..side / 2), rng.random_range(0..side / 2));
    let (r1, c1) = (r0 + side / 4 + rng.random_range(0..side / 4), c0 + side / 4 + rng.random_range(0..side / 4));
    let speckle: Vec<f64> = (0..side * side).map(|_| rng.random_range(-0.1..0.1)).collect();
    let raw: Vec<f64> = (0..side * side)
        .map(|i| {
            let (r, c) = ((i / side) as f64, (i % side) as f64);
            let smooth: f64 = bumps
                .iter()
                .map(|(br, bc, w, a)| a * (-((r - br).powi(2) + (c - bc).powi(2)) / (2.0 * w * w)).exp())
                .sum();
            let (ri, ci) = (i / side, i % side);
            let edge = if (r0..r1).contains(&ri) && (c0..c1).contains(&ci) { 0.8 } else { 0.0 };
            smooth + edge + speckle[i]
        })
        .collect();
    let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    Matrix::from_vec(side * side, 1, raw.into_iter().map(|x| (x - lo) / span).collect()).expect("n values")
}

enum Trainable {
    Sign(SignNetModel),
    Basis(BasisNetModel),
    Mlp { spec: BlockSpec, params: ParamSet, absval: bool },
}

impl Trainable {
    fn build(kind: RegressionModel, task: &RegressionTask, seed: u64) -> Result<Self> {
        let k = task.eig.k();
        Ok(match kind {
            RegressionModel::SignnetDeepsets => {
                let gate = BlockSpec::mlp(vec![1, 32, 32, 1], Activation::Tanh)?;
                let rho = BlockSpec::new(BlockKind::DeepSets, vec![2, 32, 32, 1], Activation::Relu)?;
                let cfg = SignNetConfig {
                    phi: PhiSpec::GatedRank1 { gate },
                    rho: Some(rho),
                    aggregation: Aggregation::Sum,
                    uses_eigvals: true,
                    uses_features: true,
                    rho_features: true,
                    equivariance: Equivariance::Equivariant,
                    symmetrize: true,
                };
                Trainable::Sign(SignNetModel::new(cfg, seed)?)
            }
            RegressionModel::Basisnet => {
                let phi = BlockSpec::new(BlockKind::Ign2M2v, vec![6, 32, 32, 16], Activation::Relu)?;
                let rho = BlockSpec::new(BlockKind::DeepSets, vec![17, 32, 32, 1], Activation::Relu)?;
                let mut cfg = BasisNetConfig::new(phi, Some(rho), seed);
                cfg.rho_features = true;
                let mut m = BasisNetModel::new(cfg)?;
                m.prepare(&task.partition);
                Trainable::Basis(m)
            }
            RegressionModel::MlpSignflipBaseline | RegressionModel::MlpAbsvalBaseline => {
                let spec = BlockSpec::mlp(vec![k + 1, 32, 32, 1], Activation::Relu)?;
                let mut params = ParamSet::new();
                spec.init("mlp", &mut params, &mut ChaCha8Rng::seed_from_u64(seed));
                Trainable::Mlp { spec, params, absval: kind == RegressionModel::MlpAbsvalBaseline }
            }
        })
    }

    fn params(&self) -> &ParamSet {
        match self {
            Trainable::Sign(m) => &m.params,
            Trainable::Basis(m) => &m.params,
            Trainable::Mlp { params, .. } => params,
        }
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        match self {
            Trainable::Sign(m) => &mut m.params,
            Trainable::Basis(m) => &mut m.params,
            Trainable::Mlp { params, .. } => params,
        }
    }

    fn descriptor(&self) -> String {
        match self {
            Trainable::Sign(_) => "SignNet: phi = tanh-MLP eigenvalue gate on the rank-one map v(v^T X); rho = DeepSets(32,32) over [sum phi, X]".into(),
            Trainable::Basis(_) => "BasisNet: phi_d = 2-IGN(32,32,16) per multiplicity; rho = DeepSets(32,32) over [sum phi, X]".into(),
            Trainable::Mlp { absval: false, .. } => "MLP(32,32) per node on [eigenvector entries with random sign flips, X]".into(),
            Trainable::Mlp { absval: true, .. } => "MLP(32,32) per node on [absolute eigenvector entries, X]".into(),
        }
    }

    /// Records the prediction; `flips` negates eigenvectors for the sign-flip baseline.
    fn record(&self, tape: &mut Tape, task: &RegressionTask, flips: Option<&[bool]>) -> Result<Var> {
        let params = self.params();
        match self {
            Trainable::Sign(m) => {
                let input = SpectralInput::new(&task.eig.vectors, &task.eig.values).with_features(&task.signal);
                m.record(tape, params, &input)
            }
            Trainable::Basis(m) => m.record(tape, params, &task.partition, Some(&task.signal), None),
            Trainable::Mlp { spec, absval, .. } => {
                let (n, k) = (task.eig.n(), task.eig.k());
                let mut data = Vec::with_capacity(n * (k + 1));
                for j in 0..n {
                    for i in 0..k {
                        let v = task.eig.vectors[(j, i)];
                        let v = if *absval { v.abs() } else if flips.is_some_and(|f| f[i]) { -v } else { v };
                        data.push(v);
                    }
                    data.push(task.signal[(j, 0)]);
                }
                let h = tape.input(Tensor::new(vec![n, k + 1], data)?);
                spec.forward("mlp", tape, params, h, &Default::default())
            }
        }
    }
}

/// Interior-masked squared error as a tape scalar.
fn masked_sse(tape: &mut Tape, pred: Var, target: &Matrix, mask: &Tensor) -> Result<Var> {
    let t = tape.input(Tensor::from_matrix(target));
    let diff = tape.sub(pred, t)?;
    let m = tape.input(mask.clone());
    let masked = tape.mul(diff, m)?;
    let sq = tape.mul(masked, masked)?;
    tape.sum_all(sq)
}

/// Trains one model on one filter and reports the final interior error.
pub fn train_one(task: &RegressionTask, filter: &str, kind: RegressionModel, epochs: usize, lr: f64, seed: u64) -> Result<RegressionResult> {
    let target = task.target(filter)?;
    let n = task.graph.n();
    let mut mask = Tensor::zeros(&[n, 1]);
    for &i in &task.interior {
        mask.data[i] = 1.0;
    }
    let mut model = Trainable::build(kind, task, seed)?;
    let parameters = model.params().num_scalars();
    if parameters > MAX_PARAMS {
        return Err(Error::BadParams(format!("{} has {parameters} parameters", kind.name())));
    }
    let adam = AdamConfig { lr, ..AdamConfig::default() };
    let mut flip_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5151_5151);
    let k = task.eig.k();
    for _ in 0..epochs {
        let flips: Option<Vec<bool>> =
            (kind == RegressionModel::MlpSignflipBaseline).then(|| (0..k).map(|_| flip_rng.random_bool(0.5)).collect());
        let mut tape = Tape::new();
        let pred = model.record(&mut tape, task, flips.as_deref())?;
        let loss = masked_sse(&mut tape, pred, &target, &mask)?;
        let grads = tape.backward(loss)?.params(&tape);
        let ps = model.params_mut();
        ps.set_grads(grads)?;
        ps.adam_step(&adam);
    }
    let mut tape = Tape::new();
    let pred = model.record(&mut tape, task, None)?;
    let pred = tape.value(pred).to_matrix()?;
    Ok(RegressionResult {
        filter: filter.to_string(),
        model: kind,
        sse: task.sse(&pred, &target),
        baseline_sse: task.sse(&Matrix::zeros(n, 1), &target),
        epochs,
        seed,
        parameters,
        descriptor: model.descriptor(),
    })
}

/// Every configured (filter, model) pair, in configuration order.
pub fn filter_regression_experiment(cfg: &RegressionConfig) -> Result<Vec<RegressionResult>> {
    let task = RegressionTask::new(cfg.grid, cfg.border, cfg.seed)?;
    let mut out = Vec::new();
    for f in &cfg.filters {
        filter_bank(f)?;
        for &m in &cfg.models {
            out.push(train_one(&task, f, m, cfg.epochs, cfg.lr, cfg.seed)?);
        }
    }
    Ok(out)
}
