//! Graph construction and radial features.
//!
//! One graph per molecular orbital: nodes are atoms, edges connect pairs
//! closer than the cutoff radius (self edges excluded), and every orbital of
//! a system shares the same topology. Edges carry the distance and unit
//! direction; distances enter through a Bessel basis under a smooth
//! polynomial cutoff envelope.

use irreps::IrrepsArray;

use crate::config::ModelConfig;
use crate::error::ModelError;
use crate::system::MolecularSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Source atom (message sender).
    pub from: usize,
    /// Target atom (message receiver).
    pub to: usize,
    pub dist: f64,
    /// Unit vector from target to source.
    pub unit: [f64; 3],
}

/// Shared edge topology plus one-hot species attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub n_atoms: usize,
    pub edges: Vec<Edge>,
    pub species_onehot: Vec<Vec<f64>>,
}

pub fn build_graph(sys: &MolecularSystem, cfg: &ModelConfig) -> Graph {
    let n = sys.n_atoms();
    let mut edges = Vec::new();
    for to in 0..n {
        for from in 0..n {
            if from == to {
                continue;
            }
            let a = sys.atoms[to].position;
            let b = sys.atoms[from].position;
            let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if dist < cfg.r_max {
                edges.push(Edge {
                    from,
                    to,
                    dist,
                    unit: [d[0] / dist, d[1] / dist, d[2] / dist],
                });
            }
        }
    }
    let n_el = sys.layout.n_elements();
    let species_onehot = sys
        .atoms
        .iter()
        .map(|a| {
            let mut v = vec![0.0; n_el];
            if let Some(i) = sys.layout.element_index(&a.element) {
                v[i] = 1.0;
            }
            v
        })
        .collect();
    Graph { n_atoms: n, edges, species_onehot }
}

/// Smooth cutoff envelope: 1 at r = 0, identically 0 for r >= r_max, with
/// p >= 2 continuous derivatives at the boundary.
pub fn cutoff_poly(r: f64, r_max: f64, p: u32) -> f64 {
    if r >= r_max {
        return 0.0;
    }
    let x = r / r_max;
    let pf = p as f64;
    1.0 - (pf + 1.0) * (pf + 2.0) / 2.0 * x.powi(p as i32)
        + pf * (pf + 2.0) * x.powi(p as i32 + 1)
        - pf * (pf + 1.0) / 2.0 * x.powi(p as i32 + 2)
}

/// Distance features: `f_cutoff(d) * [phi_1 .. phi_N]` with
/// `phi_n(r) = sqrt(2/r_max) sin(n pi r / r_max) / r`.
pub fn radial_embedding(d: f64, cfg: &ModelConfig) -> Result<Vec<f64>, ModelError> {
    if !(d > 0.0) {
        return Err(ModelError::Dimensions(format!(
            "distance {d} must be positive"
        )));
    }
    let env = cutoff_poly(d, cfg.r_max, cfg.cutoff_p);
    let norm = (2.0 / cfg.r_max).sqrt();
    Ok((1..=cfg.n_bessel)
        .map(|n| {
            let arg = n as f64 * std::f64::consts::PI * d / cfg.r_max;
            env * norm * arg.sin() / d
        })
        .collect())
}

/// Per-orbital graphs: the shared topology plus each orbital's embedded
/// node features.
#[derive(Debug, Clone)]
pub struct MoGraphs {
    pub graph: Graph,
    /// features[mo][atom] in the hidden signature.
    pub features: Vec<Vec<IrrepsArray>>,
}
