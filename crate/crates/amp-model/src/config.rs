//! Model hyperparameters.

use irreps::{Irrep, IrrepsSignature, Parity};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelConfig {
    pub n_layers: usize,
    /// Feature signature kept through the transformer blocks.
    pub hidden: IrrepsSignature,
    /// Query/key projection signature; values stay in the hidden signature
    /// so head mixing preserves the feature shape.
    pub attention_latent: IrrepsSignature,
    pub n_heads: usize,
    /// Output signature of the shared single-orbital readout projection.
    pub t1_readout: IrrepsSignature,
    pub t1_mlp_hidden: usize,
    /// Irreps retained from the orbital-pair product.
    pub pair_keep: Vec<Irrep>,
    /// Signature of the projected pair features entering the quadruple
    /// contraction.
    pub quad: IrrepsSignature,
    pub t2_mlp_hidden: usize,
    pub t2_mlp_layers: usize,
    /// Separate single-orbital projections for occupied and virtual
    /// orbitals (ablation; shared by default).
    #[serde(default)]
    pub separate_single_weights: bool,
    pub n_bessel: usize,
    /// Edge cutoff radius in Angstrom.
    pub r_max: f64,
    /// Order of the polynomial cutoff envelope.
    pub cutoff_p: u32,
    /// Highest tensor-monomial order; odd orders only are evaluated.
    pub correlation: u32,
    /// Place layer norms before the attention / message blocks instead of
    /// after them.
    #[serde(default)]
    pub norm_before_block: bool,
    /// Debug switch: inject an even (order-2) monomial into the message
    /// block, deliberately breaking sign equivariance. Negative control for
    /// the symmetry check suite.
    #[serde(default)]
    pub debug_even_monomial: bool,
}

fn sig(s: &str) -> IrrepsSignature {
    IrrepsSignature::parse(s).expect("static signature")
}

fn all_parity_irreps(l_max: u32) -> Vec<Irrep> {
    let mut v = Vec::new();
    for l in 0..=l_max {
        v.push(Irrep::new(l, Parity::Even));
        v.push(Irrep::new(l, Parity::Odd));
    }
    v
}

impl ModelConfig {
    /// Desk-scale defaults: the full architecture at reduced widths.
    pub fn desk() -> Self {
        ModelConfig {
            n_layers: 2,
            hidden: sig("16x0e + 16x1o + 16x2e"),
            attention_latent: sig("8x0e + 8x1o + 8x2e"),
            n_heads: 2,
            t1_readout: sig("8x0e + 8x1o + 8x2e"),
            t1_mlp_hidden: 16,
            pair_keep: all_parity_irreps(2),
            quad: sig("4x0e + 2x1e + 1x2e"),
            t2_mlp_hidden: 8,
            t2_mlp_layers: 1,
            separate_single_weights: false,
            n_bessel: 8,
            r_max: 4.0,
            cutoff_p: 5,
            correlation: 3,
            norm_before_block: false,
            debug_even_monomial: false,
        }
    }

    /// Full-width preset.
    pub fn full() -> Self {
        ModelConfig {
            n_layers: 4,
            hidden: sig("128x0e + 128x1o + 128x2e"),
            attention_latent: sig("32x0e + 32x1o + 32x2e"),
            n_heads: 4,
            t1_readout: sig("16x0e + 16x1o + 16x2e"),
            t1_mlp_hidden: 16,
            pair_keep: all_parity_irreps(2),
            quad: sig("8x0e + 4x1e + 2x2e"),
            t2_mlp_hidden: 8,
            t2_mlp_layers: 1,
            separate_single_weights: false,
            n_bessel: 10,
            r_max: 4.0,
            cutoff_p: 5,
            correlation: 3,
            norm_before_block: false,
            debug_even_monomial: false,
        }
    }

    /// Minimal configuration for gradient checks (a few hundred parameters).
    pub fn tiny() -> Self {
        ModelConfig {
            n_layers: 1,
            hidden: sig("2x0e + 2x1o"),
            attention_latent: sig("2x0e + 2x1o"),
            n_heads: 1,
            t1_readout: sig("2x0e + 2x1o"),
            t1_mlp_hidden: 3,
            pair_keep: all_parity_irreps(1),
            quad: sig("2x0e + 1x1e"),
            t2_mlp_hidden: 3,
            t2_mlp_layers: 1,
            separate_single_weights: false,
            n_bessel: 4,
            r_max: 4.0,
            cutoff_p: 5,
            correlation: 3,
            norm_before_block: false,
            debug_even_monomial: false,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_layers == 0 && self.n_heads == 0 {
            return Err(ModelError::Config("model has no layers and no heads".into()));
        }
        if self.correlation % 2 == 0 || self.correlation == 0 {
            return Err(ModelError::Config(format!(
                "correlation order {} must be odd (sign equivariance)",
                self.correlation
            )));
        }
        if self.correlation > 5 {
            return Err(ModelError::Config(
                "correlation orders beyond 5 are not supported".into(),
            ));
        }
        if !(self.r_max > 0.0) {
            return Err(ModelError::Config(format!("r_max {} must be positive", self.r_max)));
        }
        if self.n_bessel == 0 {
            return Err(ModelError::Config("need at least one radial basis function".into()));
        }
        if self.hidden.total_dim() == 0 {
            return Err(ModelError::Config("empty hidden signature".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        ModelConfig::desk().validate().unwrap();
        ModelConfig::full().validate().unwrap();
        ModelConfig::tiny().validate().unwrap();
    }

    #[test]
    fn even_correlation_rejected() {
        let mut cfg = ModelConfig::desk();
        cfg.correlation = 2;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn serde_roundtrip() {
        let cfg = ModelConfig::desk();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ModelConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
