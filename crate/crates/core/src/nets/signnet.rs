use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::blocks::{adjacency_input, BlockContext, BlockKind, BlockSpec};
use crate::autodiff::{ParamSet, Tape, Tensor, Var};
use crate::error::{shape_err, Error, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::ops::FilterSpec;

/// Unit-norm slack accepted on eigenvector columns.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// How the per-eigenvector outputs are combined before `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Sum over eigenvectors; works for any `k`.
    Sum,
    /// Channel-wise concatenation of exactly `k` outputs.
    Concat { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equivariance {
    /// `phi` and `rho` act per node and commute with node permutations.
    Equivariant,
    /// `phi` sees each eigenvector (with its channels) flattened into one row.
    Unconstrained,
}

/// The per-eigenvector map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiSpec {
    /// A learned block over the channels `[v, lambda, X]`.
    Block(BlockSpec),
    /// `phi(v, lambda, X) = g(lambda) * v (v^T X) / 2` with a learned gate `g: R -> R^{d_feat}`.
    GatedRank1 { gate: BlockSpec },
    /// `phi(v, lambda, X) = theta * v (v^T X) / 2` with fixed coefficients.
    SpectralConv(FilterSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignNetConfig {
    pub phi: PhiSpec,
    /// `None` passes the aggregate through unchanged.
    pub rho: Option<BlockSpec>,
    pub aggregation: Aggregation,
    /// Append `lambda_i` as a constant channel next to `v_i`.
    pub uses_eigvals: bool,
    /// Append the node features to the `phi` input.
    pub uses_features: bool,
    /// Append the node features to the `rho` input.
    pub rho_features: bool,
    pub equivariance: Equivariance,
    /// `false` evaluates `phi(v)` alone, dropping the mirrored term.
    pub symmetrize: bool,
}

impl SignNetConfig {
    /// Plain `rho(sum_i phi(v_i) + phi(-v_i))` with a learned block `phi`.
    pub fn new(phi: BlockSpec, rho: Option<BlockSpec>) -> Self {
        Self {
            phi: PhiSpec::Block(phi),
            rho,
            aggregation: Aggregation::Sum,
            uses_eigvals: false,
            uses_features: false,
            rho_features: false,
            equivariance: Equivariance::Equivariant,
            symmetrize: true,
        }
    }

    /// Channels per node seen by a block `phi`.
    pub fn phi_channels(&self, d_feat: usize) -> usize {
        1 + usize::from(self.uses_eigvals) + if self.uses_features { d_feat } else { 0 }
    }

    fn validate(&self) -> Result<()> {
        if let Some(r) = &self.rho {
            r.validate()?;
        }
        match &self.phi {
            PhiSpec::Block(b) => b.validate()?,
            PhiSpec::GatedRank1 { gate } => {
                gate.validate()?;
                if gate.kind != BlockKind::ElementwiseMlp || gate.in_width() != 1 {
                    return Err(Error::BadParams("the eigenvalue gate is an elementwise MLP from width 1".into()));
                }
            }
            PhiSpec::SpectralConv(_) => {}
        }
        if self.equivariance == Equivariance::Unconstrained {
            let ok_phi = matches!(&self.phi, PhiSpec::Block(b) if b.kind == BlockKind::ElementwiseMlp);
            let ok_rho = self.rho.as_ref().is_none_or(|r| r.kind == BlockKind::ElementwiseMlp);
            if !ok_phi || !ok_rho || self.rho_features {
                return Err(Error::BadParams("unconstrained SignNets use flattened elementwise MLPs only".into()));
            }
        }
        if let Aggregation::Concat { k: 0 } = self.aggregation {
            return Err(Error::BadParams("concatenation needs k >= 1".into()));
        }
        Ok(())
    }
}

/// Eigenpairs plus optional node features and graph.
#[derive(Debug, Clone, Copy)]
pub struct SpectralInput<'a> {
    /// `n x k`, one eigenvector per column.
    pub vectors: &'a Matrix,
    pub values: &'a [f64],
    pub features: Option<&'a Matrix>,
    pub graph: Option<&'a Graph>,
}

impl<'a> SpectralInput<'a> {
    pub fn new(vectors: &'a Matrix, values: &'a [f64]) -> Self {
        Self { vectors, values, features: None, graph: None }
    }

    pub fn with_features(mut self, x: &'a Matrix) -> Self {
        self.features = Some(x);
        self
    }

    pub fn with_graph(mut self, g: &'a Graph) -> Self {
        self.graph = Some(g);
        self
    }

    pub fn n(&self) -> usize {
        self.vectors.rows()
    }

    pub fn k(&self) -> usize {
        self.vectors.cols()
    }

    fn validate(&self) -> Result<()> {
        let (n, k) = (self.n(), self.k());
        if k == 0 {
            return Err(Error::BadParams("at least one eigenvector is required".into()));
        }
        if self.values.len() != k {
            return shape_err(format!("{} eigenvalues for {k} eigenvectors", self.values.len()));
        }
        if let Some(x) = self.features {
            if x.rows() != n {
                return Err(Error::FeatureRowMismatch { expected: n, got: x.rows() });
            }
        }
        if let Some(g) = self.graph {
            if g.n() != n {
                return shape_err(format!("graph has {} nodes, eigenvectors {n} rows", g.n()));
            }
        }
        for i in 0..k {
            let norm = self.vectors.column(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::BadParams(format!("eigenvector {i} has norm {norm}")));
            }
        }
        Ok(())
    }

    fn require_features(&self) -> Result<&'a Matrix> {
        self.features.ok_or_else(|| Error::BadParams("node features are required".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignNetModel {
    pub config: SignNetConfig,
    pub params: ParamSet,
}

impl SignNetModel {
    pub fn new(config: SignNetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        match &config.phi {
            PhiSpec::Block(b) => b.init("phi", &mut params, &mut rng),
            PhiSpec::GatedRank1 { gate } => gate.init("phi.gate", &mut params, &mut rng),
            PhiSpec::SpectralConv(_) => {}
        }
        if let Some(r) = &config.rho {
            r.init("rho", &mut params, &mut rng);
        }
        Ok(Self { config, params })
    }

    /// Evaluates the model; `n x d_out`, or `1 x d_out` when unconstrained.
    pub fn forward(&self, input: &SpectralInput) -> Result<Matrix> {
        let mut tape = Tape::new();
        let out = self.record(&mut tape, &self.params, input)?;
        tape.value(out).to_matrix()
    }

    /// `phi(v_i) + phi(-v_i)` for every eigenvector, before aggregation.
    ///
    /// One matrix per eigenvector: `n x c`, or `1 x c` when unconstrained.
    pub fn phi_outputs(&self, input: &SpectralInput) -> Result<Vec<Matrix>> {
        let mut tape = Tape::new();
        let (branches, _) = self.record_branches(&mut tape, &self.params, input)?;
        let t = tape.value(branches);
        let (k, rows, cols) = (t.shape[0], t.shape[1], t.shape[2]);
        (0..k)
            .map(|i| Matrix::from_vec(rows, cols, t.data[i * rows * cols..(i + 1) * rows * cols].to_vec()))
            .collect()
    }

    /// Records the forward pass with an explicit parameter set.
    pub fn record(&self, tape: &mut Tape, params: &ParamSet, input: &SpectralInput) -> Result<Var> {
        let cfg = &self.config;
        let (branches, ctx) = self.record_branches(tape, params, input)?;
        let mut h = match cfg.aggregation {
            Aggregation::Sum => tape.sum_axis(branches, 0)?,
            Aggregation::Concat { k } => {
                if k != input.k() {
                    return shape_err(format!("model concatenates {k} eigenvectors, got {}", input.k()));
                }
                let parts = (0..k).map(|i| tape.slice(branches, 0, i, 1)).collect::<Result<Vec<_>>>()?;
                tape.concat(&parts, 2)?
            }
        };
        if cfg.rho_features {
            let x = input.require_features()?;
            let xt = Tensor::from_matrix(x);
            let xt = if tape.value(h).rank() == 3 { Tensor::new(vec![1, x.rows(), x.cols()], xt.data)? } else { xt };
            let xv = tape.input(xt);
            let axis = tape.value(h).rank() - 1;
            h = tape.concat(&[h, xv], axis)?;
        }
        match &cfg.rho {
            Some(r) => r.forward("rho", tape, params, h, &ctx),
            None => Ok(h),
        }
    }

    /// The `(k, rows, channels)` stack of symmetrised `phi` outputs.
    fn record_branches(&self, tape: &mut Tape, params: &ParamSet, input: &SpectralInput) -> Result<(Var, BlockContext)> {
        self.config.validate()?;
        input.validate()?;
        let cfg = &self.config;
        let needs_graph = matches!(&cfg.phi, PhiSpec::Block(b) if b.needs_graph())
            || cfg.rho.as_ref().is_some_and(BlockSpec::needs_graph);
        let ctx = if needs_graph {
            let g = input.graph.ok_or(Error::GraphRequired)?;
            BlockContext { adjacency: Some(adjacency_input(tape, g.adjacency_matrix().matrix())) }
        } else {
            BlockContext::default()
        };

        let branches = match &cfg.phi {
            PhiSpec::Block(spec) => {
                let (zp, zm) = self.sign_pair_inputs(input)?;
                let zp = tape.input(zp);
                let op = spec.forward("phi", tape, params, zp, &ctx)?;
                if cfg.symmetrize {
                    let zm = tape.input(zm);
                    let om = spec.forward("phi", tape, params, zm, &ctx)?;
                    tape.add(op, om)?
                } else {
                    op
                }
            }
            PhiSpec::GatedRank1 { gate } => {
                let (k, n) = (input.k(), input.n());
                let x = input.require_features()?;
                let lam = tape.input(Tensor::new(vec![k, 1, 1], input.values.to_vec())?);
                let g = gate.forward("phi.gate", tape, params, lam, &ctx)?;
                let ones = tape.input(Tensor::full(&[n, 1], 1.0));
                let weights = tape.matmul(ones, g)?;
                self.rank1_branches(tape, input, x, weights)?
            }
            PhiSpec::SpectralConv(f) => {
                let (k, n) = (input.k(), input.n());
                let x = input.require_features()?;
                let d = x.cols();
                let theta = f.coefficients(input.values)?;
                let data = theta.iter().flat_map(|&t| std::iter::repeat_n(t, n * d)).collect();
                let weights = tape.input(Tensor::new(vec![k, n, d], data)?);
                self.rank1_branches(tape, input, x, weights)?
            }
        };
        Ok((branches, ctx))
    }

    /// `Z+` and `Z-`: identical except that the eigenvector channel is negated.
    fn sign_pair_inputs(&self, input: &SpectralInput) -> Result<(Tensor, Tensor)> {
        let cfg = &self.config;
        let (n, k) = (input.n(), input.k());
        let x = if cfg.uses_features { Some(input.require_features()?) } else { None };
        let c = cfg.phi_channels(x.map_or(0, Matrix::cols));
        let mut zp = Vec::with_capacity(k * n * c);
        let mut zm = Vec::with_capacity(k * n * c);
        for i in 0..k {
            for j in 0..n {
                let v = input.vectors[(j, i)];
                zp.push(v);
                zm.push(-v);
                let mut rest = Vec::with_capacity(c - 1);
                if cfg.uses_eigvals {
                    rest.push(input.values[i]);
                }
                if let Some(x) = x {
                    rest.extend_from_slice(x.row(j));
                }
                zp.extend_from_slice(&rest);
                zm.extend_from_slice(&rest);
            }
        }
        let shape = match cfg.equivariance {
            Equivariance::Equivariant => vec![k, n, c],
            Equivariance::Unconstrained => vec![k, 1, n * c],
        };
        Ok((Tensor::new(shape.clone(), zp)?, Tensor::new(shape, zm)?))
    }

    /// `sum over s = +-1` of `weights * (s v)((s v)^T X) / 2`, batched over eigenvectors.
    fn rank1_branches(&self, tape: &mut Tape, input: &SpectralInput, x: &Matrix, weights: Var) -> Result<Var> {
        let (n, k) = (input.n(), input.k());
        let xv = tape.input(Tensor::from_matrix(x));
        let vt = input.vectors.transpose();
        let plus = tape.input(Tensor::new(vec![k, n, 1], vt.as_slice().to_vec())?);
        let mut out = self.half_branch(tape, plus, xv, weights)?;
        if self.config.symmetrize {
            let minus = tape.input(Tensor::new(vec![k, n, 1], vt.as_slice().iter().map(|v| -v).collect())?);
            let m = self.half_branch(tape, minus, xv, weights)?;
            out = tape.add(out, m)?;
        }
        Ok(out)
    }

    fn half_branch(&self, tape: &mut Tape, v: Var, x: Var, weights: Var) -> Result<Var> {
        let r = tape.rank1(v, x)?;
        let w = tape.mul(weights, r)?;
        Ok(tape.scale(w, 0.5))
    }
}

/// The fixed-weight SignNet whose output is exactly `V diag(theta) V^T X`.
///
/// `phi(v_i, lambda_i, X) = theta_i v_i v_i^T X / 2` and `rho` is the sum.
pub fn construct_spectral_conv_signnet(filter: FilterSpec) -> SignNetModel {
    let config = SignNetConfig {
        phi: PhiSpec::SpectralConv(filter),
        rho: None,
        aggregation: Aggregation::Sum,
        uses_eigvals: true,
        uses_features: true,
        rho_features: false,
        equivariance: Equivariance::Equivariant,
        symmetrize: true,
    };
    SignNetModel { config, params: ParamSet::new() }
}
