use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::blocks::{adjacency_input, ign2_basis_features, BlockContext, BlockKind, BlockSpec, IGN2_BASIS_MAPS};
use crate::autodiff::{ParamSet, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::Matrix;
use crate::spectral::EigenspacePartition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisNetConfig {
    /// Shared shape of every `IGN_d`; must be [`BlockKind::Ign2M2v`].
    pub phi: BlockSpec,
    pub rho: Option<BlockSpec>,
    /// Append `mu_i` as a constant channel to the basis features.
    pub uses_eigvals: bool,
    pub rho_features: bool,
    /// Seed from which each `IGN_d` is initialised on first use.
    pub seed: u64,
}

impl BasisNetConfig {
    pub fn new(phi: BlockSpec, rho: Option<BlockSpec>, seed: u64) -> Self {
        Self { phi, rho, uses_eigvals: true, rho_features: false, seed }
    }

    /// Width `phi` must accept.
    pub fn phi_in_width(&self) -> usize {
        IGN2_BASIS_MAPS + usize::from(self.uses_eigvals)
    }

    fn validate(&self) -> Result<()> {
        self.phi.validate()?;
        if let Some(r) = &self.rho {
            r.validate()?;
        }
        if self.phi.kind != BlockKind::Ign2M2v {
            return Err(Error::BadParams("BasisNet phi must be a 2-IGN block".into()));
        }
        if self.phi.in_width() != self.phi_in_width() {
            return Err(Error::BadParams(format!(
                "2-IGN input width {} but {} basis channels",
                self.phi.in_width(),
                self.phi_in_width()
            )));
        }
        Ok(())
    }
}

/// `rho( sum_i IGN_{d_i}(V_i V_i^T) )` with one `IGN_d` per multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisNetModel {
    pub config: BasisNetConfig,
    pub params: ParamSet,
}

impl BasisNetModel {
    pub fn new(config: BasisNetConfig) -> Result<Self> {
        config.validate()?;
        let mut params = ParamSet::new();
        if let Some(r) = &config.rho {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            r.init("rho", &mut params, &mut rng);
        }
        Ok(Self { config, params })
    }

    pub fn phi_prefix(d: usize) -> String {
        format!("phi.d{d}")
    }

    /// Multiplicities with instantiated parameters.
    pub fn prepared_dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self
            .params
            .names()
            .filter_map(|n| n.strip_prefix("phi.d")?.split('.').next()?.parse().ok())
            .collect();
        dims.sort_unstable();
        dims.dedup();
        dims
    }

    /// Instantiates `IGN_d` for every multiplicity in `part` not seen before.
    ///
    /// Initial weights depend only on the seed and `d`, never on preparation order.
    pub fn prepare(&mut self, part: &EigenspacePartition) {
        self.prepare_dims(&part.dims());
    }

    pub fn prepare_dims(&mut self, dims: &[usize]) {
        for &d in dims {
            let prefix = Self::phi_prefix(d);
            if self.params.contains(&format!("{prefix}.l0.w")) {
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ (d as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            self.config.phi.init(&prefix, &mut self.params, &mut rng);
        }
    }

    pub fn forward(&self, part: &EigenspacePartition, x: Option<&Matrix>, g: Option<&Graph>) -> Result<Matrix> {
        let mut tape = Tape::new();
        let out = self.record(&mut tape, &self.params, part, x, g)?;
        tape.value(out).to_matrix()
    }

    pub fn record(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        part: &EigenspacePartition,
        x: Option<&Matrix>,
        g: Option<&Graph>,
    ) -> Result<Var> {
        self.config.validate()?;
        let n = part.n();
        if part.l() == 0 {
            return Err(Error::BadParams("empty eigenspace partition".into()));
        }
        if let Some(x) = x {
            if x.rows() != n {
                return Err(Error::FeatureRowMismatch { expected: n, got: x.rows() });
            }
        }
        let ctx = match &self.config.rho {
            Some(r) if r.needs_graph() => {
                let g = g.ok_or(Error::GraphRequired)?;
                BlockContext { adjacency: Some(adjacency_input(tape, g.adjacency_matrix().matrix())) }
            }
            _ => BlockContext::default(),
        };

        let mut by_dim: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, grp) in part.groups.iter().enumerate() {
            by_dim.entry(grp.dim()).or_default().push(i);
        }
        let w = self.config.phi_in_width();
        let mut total: Option<Var> = None;
        for (d, members) in by_dim {
            let prefix = Self::phi_prefix(d);
            if !params.contains(&format!("{prefix}.l0.w")) {
                return Err(Error::MissingMultiplicity(d));
            }
            let mut data = Vec::with_capacity(members.len() * n * w);
            for &i in &members {
                let grp = &part.groups[i];
                let proj = Tensor::from_matrix(grp.projector().matrix());
                let extra: &[f64] = if self.config.uses_eigvals { &[grp.mu] } else { &[] };
                data.extend(ign2_basis_features(&proj, extra)?.data);
            }
            let feats = tape.input(Tensor::new(vec![members.len(), n, w], data)?);
            let out = self.config.phi.forward(&prefix, tape, params, feats, &BlockContext::default())?;
            let summed = tape.sum_axis(out, 0)?;
            total = Some(match total {
                None => summed,
                Some(t) => tape.add(t, summed)?,
            });
        }
        let mut h = total.expect("at least one group");
        if self.config.rho_features {
            let x = x.ok_or_else(|| Error::BadParams("node features are required".into()))?;
            let xv = tape.input(Tensor::from_matrix(x));
            h = tape.concat(&[h, xv], 1)?;
        }
        match &self.config.rho {
            Some(r) => r.forward("rho", tape, params, h, &ctx),
            None => Ok(h),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::Activation;
    use crate::spectral::{Eigenspace, EigenspacePartition};

    #[test]
    fn diag_picking_configuration() {
        let phi = BlockSpec::new(BlockKind::Ign2M2v, vec![6, 1], Activation::Relu).unwrap();
        let mut m = BasisNetModel::new(BasisNetConfig::new(phi, None, 1)).unwrap();
        let basis = Matrix::from_rows(&[vec![0.6], vec![0.8], vec![0.0]]).unwrap();
        let part = EigenspacePartition { groups: vec![Eigenspace { mu: 1.0, basis: basis.clone() }], tol: 1e-8 };
        assert!(matches!(m.forward(&part, None, None), Err(Error::MissingMultiplicity(1))));
        m.prepare(&part);
        let w = m.params.get_mut("phi.d1.l0.w").unwrap();
        w.data = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let out = m.forward(&part, None, None).unwrap();
        assert_eq!(out.column(0), basis.gram_outer().diagonal());
    }

    #[test]
    fn preparation_is_order_independent() {
        let phi = BlockSpec::new(BlockKind::Ign2M2v, vec![6, 4, 2], Activation::Tanh).unwrap();
        let mut a = BasisNetModel::new(BasisNetConfig::new(phi.clone(), None, 9)).unwrap();
        let mut b = BasisNetModel::new(BasisNetConfig::new(phi, None, 9)).unwrap();
        a.prepare_dims(&[1, 3]);
        b.prepare_dims(&[3]);
        b.prepare_dims(&[1]);
        assert_eq!(a.params, b.params);
        assert_eq!(a.prepared_dims(), vec![1, 3]);
    }
}
