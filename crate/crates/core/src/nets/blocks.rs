use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{glorot, ParamSet, Tape, Tensor, Var};
use crate::error::{shape_err, Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    ElementwiseMlp,
    DeepSets,
    Gin,
    /// 2-IGN: a matrix-to-vector layer followed by DeepSets layers.
    Ign2M2v,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

/// A stack of layers with widths `widths[0] -> ... -> widths[last]`.
///
/// The activation follows every layer but the last. For [`BlockKind::Ign2M2v`]
/// `widths[0]` counts the basis features produced by [`ign2_basis_features`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub kind: BlockKind,
    pub widths: Vec<usize>,
    pub activation: Activation,
}

/// Constants a block may need besides its input.
#[derive(Debug, Clone, Copy, Default)]
pub struct BlockContext {
    /// Dense `n x n` adjacency bound on the tape.
    pub adjacency: Option<Var>,
}

impl BlockSpec {
    pub fn new(kind: BlockKind, widths: Vec<usize>, activation: Activation) -> Result<Self> {
        let s = Self { kind, widths, activation };
        s.validate()?;
        Ok(s)
    }

    pub fn mlp(widths: Vec<usize>, activation: Activation) -> Result<Self> {
        Self::new(BlockKind::ElementwiseMlp, widths, activation)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 || self.widths.contains(&0) {
            return Err(Error::BadParams(format!("block widths {:?} need >= 2 positive entries", self.widths)));
        }
        Ok(())
    }

    pub fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn in_width(&self) -> usize {
        self.widths[0]
    }

    pub fn out_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    fn layer_kind(&self, i: usize) -> BlockKind {
        match self.kind {
            BlockKind::Ign2M2v if i == 0 => BlockKind::ElementwiseMlp,
            BlockKind::Ign2M2v => BlockKind::DeepSets,
            k => k,
        }
    }

    /// Adds freshly initialised parameters under `prefix`.
    pub fn init<R: Rng + ?Sized>(&self, prefix: &str, params: &mut ParamSet, rng: &mut R) {
        for i in 0..self.layers() {
            let (a, b) = (self.widths[i], self.widths[i + 1]);
            params.insert(format!("{prefix}.l{i}.w"), glorot(a, b, rng));
            if self.layer_kind(i) == BlockKind::DeepSets {
                params.insert(format!("{prefix}.l{i}.w2"), glorot(a, b, rng));
            }
            params.insert(format!("{prefix}.l{i}.b"), Tensor::zeros(&[b]));
        }
    }

    pub fn needs_graph(&self) -> bool {
        self.kind == BlockKind::Gin
    }

    /// Applies the block to `h` with channels on the last axis and nodes on the one before.
    pub fn forward(&self, prefix: &str, tape: &mut Tape, params: &ParamSet, h: Var, ctx: &BlockContext) -> Result<Var> {
        let width = *tape.value(h).shape.last().unwrap();
        if width != self.in_width() {
            return shape_err(format!("{prefix}: input width {width}, block expects {}", self.in_width()));
        }
        let adj = match (self.needs_graph(), ctx.adjacency) {
            (true, None) => return Err(Error::GraphRequired),
            (_, a) => a,
        };
        let mut h = h;
        for i in 0..self.layers() {
            let act = (i + 1 < self.layers()).then_some(self.activation);
            let p = format!("{prefix}.l{i}");
            h = match self.layer_kind(i) {
                BlockKind::ElementwiseMlp => dense_layer(tape, params, &p, h, act)?,
                BlockKind::DeepSets => deepsets_layer(tape, params, &p, h, act)?,
                BlockKind::Gin => gin_layer(tape, params, &p, adj.expect("checked above"), h, act)?,
                BlockKind::Ign2M2v => unreachable!("expanded by layer_kind"),
            };
        }
        Ok(h)
    }
}

fn activate(tape: &mut Tape, h: Var, act: Option<Activation>) -> Var {
    match act {
        Some(Activation::Relu) => tape.relu(h),
        Some(Activation::Tanh) => tape.tanh(h),
        None => h,
    }
}

/// `sigma(h W + b)`, applied per node.
pub fn dense_layer(tape: &mut Tape, params: &ParamSet, prefix: &str, h: Var, act: Option<Activation>) -> Result<Var> {
    let w = params.bind(tape, &format!("{prefix}.w"))?;
    let b = params.bind(tape, &format!("{prefix}.b"))?;
    let hw = tape.matmul(h, w)?;
    let z = tape.add(hw, b)?;
    Ok(activate(tape, z, act))
}

/// `sigma(h W1 + (11^T h / n) W2 + b)`, the node axis being second to last.
pub fn deepsets_layer(tape: &mut Tape, params: &ParamSet, prefix: &str, h: Var, act: Option<Activation>) -> Result<Var> {
    let w1 = params.bind(tape, &format!("{prefix}.w"))?;
    let w2 = params.bind(tape, &format!("{prefix}.w2"))?;
    let b = params.bind(tape, &format!("{prefix}.b"))?;
    let node_axis = tape.value(h).rank() - 2;
    let mean = tape.mean_broadcast(h, node_axis)?;
    let own = tape.matmul(h, w1)?;
    let pooled = tape.matmul(mean, w2)?;
    let s = tape.add(own, pooled)?;
    let z = tape.add(s, b)?;
    Ok(activate(tape, z, act))
}

/// `sigma((h + A h) W + b)`, i.e. GIN with `eps = 0` and a one-layer MLP.
pub fn gin_layer(
    tape: &mut Tape,
    params: &ParamSet,
    prefix: &str,
    adjacency: Var,
    h: Var,
    act: Option<Activation>,
) -> Result<Var> {
    let ah = tape.matmul(adjacency, h)?;
    let agg = tape.add(h, ah)?;
    dense_layer(tape, params, prefix, agg, act)
}

/// Number of features per matrix channel produced by [`ign2_basis_features`].
pub const IGN2_BASIS_MAPS: usize = 5;

/// The five equivariant matrix-to-vector maps, per channel:
/// `[diag, rowsum/n, colsum/n, total/n^2, trace/n]`, then `extra` as constant channels.
///
/// `m` is `n x n` or `n x n x c`; the result is `n x (5c + extra.len())`.
#[allow(clippy::needless_range_loop)]
pub fn ign2_basis_features(m: &Tensor, extra: &[f64]) -> Result<Tensor> {
    let (n, c) = match m.shape.as_slice() {
        [r, s] if r == s => (*r, 1),
        [r, s, c] if r == s => (*r, *c),
        [r, s] | [r, s, _] => return Err(Error::NotSquare { rows: *r, cols: *s }),
        s => return shape_err(format!("matrix input expected, got {s:?}")),
    };
    let at = |i: usize, j: usize, ch: usize| m.data[(i * n + j) * c + ch];
    let width = IGN2_BASIS_MAPS * c + extra.len();
    let nf = n as f64;
    let mut out = vec![0.0; n * width];
    for ch in 0..c {
        let mut row = vec![0.0; n];
        let mut col = vec![0.0; n];
        let mut trace = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = at(i, j, ch);
                row[i] += x;
                col[j] += x;
            }
            trace += at(i, i, ch);
        }
        let total: f64 = row.iter().sum();
        for j in 0..n {
            let o = &mut out[j * width + IGN2_BASIS_MAPS * ch..j * width + IGN2_BASIS_MAPS * (ch + 1)];
            o.copy_from_slice(&[at(j, j, ch), row[j] / nf, col[j] / nf, total / (nf * nf), trace / nf]);
        }
    }
    for j in 0..n {
        out[j * width + IGN2_BASIS_MAPS * c..(j + 1) * width].copy_from_slice(extra);
    }
    Tensor::new(vec![n, width], out)
}

/// One 2-IGN matrix-to-vector layer: basis maps, then a linear mix, bias and activation.
pub fn ign2_m2v(
    tape: &mut Tape,
    params: &ParamSet,
    prefix: &str,
    m: &Tensor,
    act: Option<Activation>,
) -> Result<Var> {
    let feats = tape.input(ign2_basis_features(m, &[])?);
    dense_layer(tape, params, prefix, feats, act)
}

/// Dense adjacency as a tape constant.
pub(crate) fn adjacency_input(tape: &mut Tape, a: &Matrix) -> Var {
    tape.input(Tensor::from_matrix(a))
}
