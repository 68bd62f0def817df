//! An equivariant model mapping molecular-orbital coefficients to
//! coupled-cluster excitation amplitudes, built on a small reverse-mode
//! differentiation tape.

pub mod checks;
mod config;
mod error;
pub mod graph;
mod model;
mod params;
pub mod spec;
pub mod system;
pub mod tape;

pub use config::ModelConfig;
pub use error::ModelError;
pub use graph::{build_graph, cutoff_poly, radial_embedding, Graph, MoGraphs};
pub use model::{build_mo_graphs, forward, predict, Forward};
pub use params::{ModelParams, ModelShapes, ParamRegistry, Segment};
pub use system::{
    load_system, pad_coefficients, save_system, unpad_coefficients, Atom, BasisLayout,
    MolecularSystem,
};
