//! Spectral convolutions, positional encodings and spectral graph invariants.

mod filters;
mod invariants;
pub mod oracles;
mod pe;

pub use filters::{filter_bank, spectral_conv, Filter, FilterSpec, BANK};
pub use invariants::{
    closed_walk_counts, component_count_spectral, cycle_counts_from_spectrum, graph_angles, is_bipartite_spectral,
    is_connected_spectral, AngleTable, CycleCounts, INTEGER_TOL,
};
pub use oracles::{bipartite_bfs, connected_bfs, count_cycles_bruteforce, matrix_power_diag};
pub use pe::{heat_pe, kernel_matrix, positional_encoding, rwpe, PEConfig};
