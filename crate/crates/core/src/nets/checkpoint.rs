use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Aggregation, BasisNetModel, BlockSpec, Equivariance, PhiSpec, SignNetModel};
use crate::ops::FilterSpec;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "spectral-pe/model";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    SignNet(SignNetModel),
    BasisNet(BasisNetModel),
}

impl Model {
    /// One-line human-readable architecture summary.
    pub fn descriptor(&self) -> String {
        match self {
            Model::SignNet(m) => {
                let c = &m.config;
                let phi = match &c.phi {
                    PhiSpec::Block(b) => block_desc(b),
                    PhiSpec::GatedRank1 { gate } => format!("gated-rank1({})", block_desc(gate)),
                    PhiSpec::SpectralConv(f) => match f {
                        FilterSpec::Free(t) => format!("spectral-conv(free, {} coeffs)", t.len()),
                        FilterSpec::Parametric(f) => format!("spectral-conv({})", f.name()),
                    },
                };
                let agg = match c.aggregation {
                    Aggregation::Sum => "sum".to_string(),
                    Aggregation::Concat { k } => format!("concat{k}"),
                };
                let eq = match c.equivariance {
                    Equivariance::Equivariant => "equivariant",
                    Equivariance::Unconstrained => "unconstrained",
                };
                format!(
                    "signnet phi={phi} rho={} agg={agg} {eq} symmetrize={}",
                    c.rho.as_ref().map_or("none".into(), block_desc),
                    c.symmetrize
                )
            }
            Model::BasisNet(m) => format!(
                "basisnet phi={} rho={}",
                block_desc(&m.config.phi),
                m.config.rho.as_ref().map_or("none".into(), block_desc)
            ),
        }
    }
}

fn block_desc(b: &BlockSpec) -> String {
    let kind = serde_json::to_value(b.kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
    let widths: Vec<String> = b.widths.iter().map(usize::to_string).collect();
    format!("{kind}[{}]", widths.join(","))
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    model: Model,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

pub fn checkpoint_to_string(model: &Model) -> Result<String> {
    let env = Envelope { format: CHECKPOINT_FORMAT.into(), version: CHECKPOINT_VERSION, model: model.clone() };
    Ok(serde_json::to_string_pretty(&env)?)
}

pub fn checkpoint_from_str(text: &str) -> Result<Model> {
    let head: Header = serde_json::from_str(text)?;
    if head.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!("format {:?}", head.format)));
    }
    if head.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("version {}", head.version)));
    }
    let env: Envelope = serde_json::from_str(text)?;
    Ok(env.model)
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, checkpoint_to_string(model)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    checkpoint_from_str(&std::fs::read_to_string(path)?)
}
