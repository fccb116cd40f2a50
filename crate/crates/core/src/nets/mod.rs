//! Sign- and basis-invariant networks over eigenvectors.

mod basisnet;
mod blocks;
mod checkpoint;
mod signnet;

pub use basisnet::{BasisNetConfig, BasisNetModel};
pub use blocks::{
    deepsets_layer, dense_layer, gin_layer, ign2_basis_features, ign2_m2v, Activation, BlockContext, BlockKind,
    BlockSpec, IGN2_BASIS_MAPS,
};
pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint, Model, CHECKPOINT_FORMAT,
    CHECKPOINT_VERSION,
};
pub use signnet::{
    construct_spectral_conv_signnet, Aggregation, Equivariance, PhiSpec, SignNetConfig, SignNetModel, SpectralInput,
    UNIT_NORM_TOL,
};
