//! Trainable weights as one flat vector with a stable, named index map.
//!
//! The registry enumerates every weight segment of the architecture in a
//! fixed order derived from the configuration and the padded basis
//! signature. Weight matrices draw from a scaled uniform distribution with
//! gain 1/sqrt(fan_in) per block; norm epsilons start at 1e-3 and layer-norm
//! scales at 1. None of the readout multi-layer perceptrons carry biases.

use std::collections::HashMap;

use irreps::{Irrep, IrrepsSignature, Parity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::error::ModelError;
use crate::spec::{LayerNormSpec, LinearSpec, TpOptions, TpSpec};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone)]
enum Init {
    /// Spans of (relative offset, length, scale); values U(-1,1) * scale.
    Uniform(Vec<(usize, usize, f64)>),
    Const(f64),
}

/// All shape descriptors of the architecture, derived once from the config
/// and the padded basis signature. Specs here use `n_repeat = 1`; forward
/// passes re-instantiate them with the actual atom count.
pub struct ModelShapes {
    pub padded: IrrepsSignature,
    pub embed: LinearSpec,
    pub wq: LinearSpec,
    pub wk: LinearSpec,
    pub wv: LinearSpec,
    /// Edge harmonics signature (degrees 0..=2, natural parities).
    pub edge_sig: IrrepsSignature,
    pub msg_tp: TpSpec,
    pub msg_linear: LinearSpec,
    /// Tensor powers 2..=correlation of the node features; odd entries get a
    /// projection back to the hidden signature.
    pub powers: Vec<TpSpec>,
    pub poly1: LinearSpec,
    pub poly_odd: Vec<(u32, LinearSpec)>,
    pub dbg_even: Option<LinearSpec>,
    pub layer_norm: LayerNormSpec,
    pub single: LinearSpec,
    pub t1_inv: TpSpec,
    pub pair_tp: TpSpec,
    pub pair_linear: LinearSpec,
    pub quad_inv: TpSpec,
}

impl ModelShapes {
    pub fn new(cfg: &ModelConfig, padded: IrrepsSignature) -> Result<Self, ModelError> {
        cfg.validate()?;
        let hidden = cfg.hidden.clone();
        let hidden_irreps: Vec<Irrep> = hidden.entries().iter().map(|(_, ir)| *ir).collect();
        let l_hidden = hidden.max_degree();

        let edge_sig = irreps::sh::sh_signature(2);
        let msg_tp = TpSpec::new(
            hidden.clone(),
            edge_sig.clone(),
            TpOptions {
                n_repeat: 1,
                max_out_degree: l_hidden,
                target: Some(hidden_irreps.clone()),
                weighted: true,
                self_product: false,
                sum_repeats: false,
            },
        );
        let msg_linear = LinearSpec::new(msg_tp.out_sig.clone(), hidden.clone(), 1);

        let all_parities: Vec<Irrep> = (0..=l_hidden)
            .flat_map(|l| {
                [Irrep::new(l, Parity::Even), Irrep::new(l, Parity::Odd)]
            })
            .collect();
        let mut powers = Vec::new();
        let mut poly_odd = Vec::new();
        let mut acc_sig = hidden.clone();
        for step in 2..=cfg.correlation {
            let target = if step == cfg.correlation {
                hidden_irreps.clone()
            } else {
                all_parities.clone()
            };
            let tp = TpSpec::new(
                acc_sig.clone(),
                hidden.clone(),
                TpOptions {
                    n_repeat: 1,
                    max_out_degree: l_hidden,
                    target: Some(target),
                    weighted: false,
                    self_product: step == 2,
                    sum_repeats: false,
                },
            );
            acc_sig = tp.out_sig.clone();
            if step % 2 == 1 {
                poly_odd.push((step, LinearSpec::new(acc_sig.clone(), hidden.clone(), 1)));
            }
            powers.push(tp);
        }
        let dbg_even = if cfg.debug_even_monomial {
            powers
                .first()
                .map(|sq| LinearSpec::new(sq.out_sig.clone(), hidden.clone(), 1))
        } else {
            None
        };

        let pair_tp = TpSpec::new(
            hidden.clone(),
            hidden.clone(),
            TpOptions {
                n_repeat: 1,
                max_out_degree: 2,
                target: Some(cfg.pair_keep.clone()),
                weighted: true,
                self_product: false,
                sum_repeats: false,
            },
        );

        Ok(ModelShapes {
            embed: LinearSpec::new(padded.clone(), hidden.clone(), 1),
            padded,
            wq: LinearSpec::new(hidden.clone(), cfg.attention_latent.clone(), 1),
            wk: LinearSpec::new(hidden.clone(), cfg.attention_latent.clone(), 1),
            wv: LinearSpec::new(hidden.clone(), hidden.clone(), 1),
            edge_sig,
            msg_tp,
            msg_linear,
            powers,
            poly1: LinearSpec::new(hidden.clone(), hidden.clone(), 1),
            poly_odd,
            dbg_even,
            layer_norm: LayerNormSpec::new(hidden.clone(), 1),
            single: LinearSpec::new(hidden.clone(), cfg.t1_readout.clone(), 1),
            t1_inv: TpSpec::invariant_pairing(cfg.t1_readout.clone(), 1),
            pair_linear: LinearSpec::new(pair_tp.out_sig.clone(), cfg.quad.clone(), 1),
            pair_tp,
            quad_inv: TpSpec::invariant_pairing(cfg.quad.clone(), 1),
        })
    }

    pub fn n_invariants_t1(&self) -> usize {
        self.t1_inv.out_sig.num_channels()
    }

    pub fn n_invariants_t2(&self) -> usize {
        self.quad_inv.out_sig.num_channels()
    }
}

/// Named segments of the flat parameter vector.
pub struct ParamRegistry {
    pub segments: Vec<Segment>,
    inits: Vec<Init>,
    by_name: HashMap<String, usize>,
    pub total: usize,
}

const EPS_INIT: f64 = 1e-3;

impl ParamRegistry {
    pub fn new(cfg: &ModelConfig, shapes: &ModelShapes) -> Self {
        let mut reg = ParamRegistry {
            segments: Vec::new(),
            inits: Vec::new(),
            by_name: HashMap::new(),
            total: 0,
        };
        let lin = |s: &LinearSpec| Init::Uniform(s.init_scales());
        let dense = |rows: usize, cols: usize| {
            Init::Uniform(vec![(0, rows * cols, 1.0 / (cols as f64).sqrt())])
        };

        reg.push("embed.w", shapes.embed.weight_len, lin(&shapes.embed));
        for t in 0..cfg.n_layers {
            for h in 0..cfg.n_heads {
                reg.push(&format!("l{t}.h{h}.wq"), shapes.wq.weight_len, lin(&shapes.wq));
                reg.push(&format!("l{t}.h{h}.wk"), shapes.wk.weight_len, lin(&shapes.wk));
                reg.push(&format!("l{t}.h{h}.wv"), shapes.wv.weight_len, lin(&shapes.wv));
                reg.push(&format!("l{t}.h{h}.eps_q"), 1, Init::Const(EPS_INIT));
                reg.push(&format!("l{t}.h{h}.eps_k"), 1, Init::Const(EPS_INIT));
                reg.push(&format!("l{t}.h{h}.eps_o"), 1, Init::Const(EPS_INIT));
                reg.push(
                    &format!("l{t}.h{h}.mix"),
                    1,
                    Init::Uniform(vec![(0, 1, 1.0 / (cfg.n_heads as f64).sqrt())]),
                );
            }
            reg.push(
                &format!("l{t}.ln1.gamma"),
                shapes.layer_norm.n_channels,
                Init::Const(1.0),
            );
            reg.push(&format!("l{t}.ln1.eps0"), 1, Init::Const(EPS_INIT));
            reg.push(&format!("l{t}.ln1.eps1"), 1, Init::Const(EPS_INIT));
            reg.push(
                &format!("l{t}.radial.w"),
                shapes.msg_tp.n_weights * cfg.n_bessel,
                dense(shapes.msg_tp.n_weights, cfg.n_bessel),
            );
            reg.push(
                &format!("l{t}.msg.w"),
                shapes.msg_linear.weight_len,
                lin(&shapes.msg_linear),
            );
            reg.push(&format!("l{t}.poly1.w"), shapes.poly1.weight_len, lin(&shapes.poly1));
            for (step, spec) in &shapes.poly_odd {
                reg.push(&format!("l{t}.poly{step}.w"), spec.weight_len, lin(spec));
            }
            if let Some(spec) = &shapes.dbg_even {
                reg.push(&format!("l{t}.dbg_even.w"), spec.weight_len, lin(spec));
            }
            reg.push(
                &format!("l{t}.ln2.gamma"),
                shapes.layer_norm.n_channels,
                Init::Const(1.0),
            );
            reg.push(&format!("l{t}.ln2.eps0"), 1, Init::Const(EPS_INIT));
            reg.push(&format!("l{t}.ln2.eps1"), 1, Init::Const(EPS_INIT));
        }
        reg.push("t1.norm_eps", 1, Init::Const(EPS_INIT));
        reg.push("t1.single.w", shapes.single.weight_len, lin(&shapes.single));
        if cfg.separate_single_weights {
            reg.push("t1.single_virt.w", shapes.single.weight_len, lin(&shapes.single));
        }
        let n1 = shapes.n_invariants_t1();
        reg.push("t1.mlp.0", cfg.t1_mlp_hidden * n1, dense(cfg.t1_mlp_hidden, n1));
        reg.push("t1.mlp.out", cfg.t1_mlp_hidden, dense(1, cfg.t1_mlp_hidden));

        reg.push(
            "t2.pair.w",
            shapes.pair_tp.n_weights,
            Init::Uniform(vec![(
                0,
                shapes.pair_tp.n_weights,
                1.0 / (shapes.pair_tp.n_weights.max(1) as f64).sqrt(),
            )]),
        );
        reg.push("t2.pair_norm_eps", 1, Init::Const(EPS_INIT));
        reg.push(
            "t2.pairlin.w",
            shapes.pair_linear.weight_len,
            lin(&shapes.pair_linear),
        );
        let n2 = shapes.n_invariants_t2();
        reg.push("t2.mlp.0", cfg.t2_mlp_hidden * n2, dense(cfg.t2_mlp_hidden, n2));
        for k in 1..cfg.t2_mlp_layers {
            reg.push(
                &format!("t2.mlp.{k}"),
                cfg.t2_mlp_hidden * cfg.t2_mlp_hidden,
                dense(cfg.t2_mlp_hidden, cfg.t2_mlp_hidden),
            );
        }
        reg.push("t2.mlp.out", cfg.t2_mlp_hidden, dense(1, cfg.t2_mlp_hidden));
        reg
    }

    fn push(&mut self, name: &str, len: usize, init: Init) {
        let offset = self.total;
        self.by_name.insert(name.to_string(), self.segments.len());
        self.segments.push(Segment { name: name.to_string(), offset, len });
        self.inits.push(init);
        self.total += len;
    }

    pub fn index_of(&self, name: &str) -> usize {
        *self
            .by_name
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter segment '{name}'"))
    }

    pub fn segment(&self, name: &str) -> &Segment {
        &self.segments[self.index_of(name)]
    }
}

/// The flat trainable state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub values: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(reg: &ParamRegistry) -> Self {
        ModelParams { values: vec![0.0; reg.total] }
    }

    pub fn init(reg: &ParamRegistry, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0.0; reg.total];
        for (seg, init) in reg.segments.iter().zip(reg.inits.iter()) {
            let slot = &mut values[seg.offset..seg.offset + seg.len];
            match init {
                Init::Const(c) => slot.fill(*c),
                Init::Uniform(spans) => {
                    for &(off, len, scale) in spans {
                        for v in &mut slot[off..off + len] {
                            *v = rng.random_range(-1.0..1.0) * scale;
                        }
                    }
                }
            }
        }
        ModelParams { values }
    }

    pub fn get<'a>(&'a self, reg: &ParamRegistry, name: &str) -> &'a [f64] {
        let seg = reg.segment(name);
        &self.values[seg.offset..seg.offset + seg.len]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn padded() -> IrrepsSignature {
        IrrepsSignature::parse("2x0e + 1x1o").unwrap()
    }

    #[test]
    fn registry_is_deterministic_and_named() {
        let cfg = ModelConfig::tiny();
        let shapes = ModelShapes::new(&cfg, padded()).unwrap();
        let reg1 = ParamRegistry::new(&cfg, &shapes);
        let reg2 = ParamRegistry::new(&cfg, &shapes);
        assert_eq!(reg1.segments, reg2.segments);
        assert!(reg1.total > 0);
        assert!(reg1.segment("embed.w").len > 0);
    }

    #[test]
    fn tiny_model_fits_gradient_check_budget() {
        let cfg = ModelConfig::tiny();
        let shapes = ModelShapes::new(&cfg, padded()).unwrap();
        let reg = ParamRegistry::new(&cfg, &shapes);
        assert!(reg.total <= 500, "tiny registry has {} params", reg.total);
    }

    #[test]
    fn init_fills_epsilons_and_gammas() {
        let cfg = ModelConfig::tiny();
        let shapes = ModelShapes::new(&cfg, padded()).unwrap();
        let reg = ParamRegistry::new(&cfg, &shapes);
        let p = ModelParams::init(&reg, 7);
        assert_eq!(p.get(&reg, "t1.norm_eps"), &[1e-3]);
        assert!(p.get(&reg, "l0.ln1.gamma").iter().all(|v| *v == 1.0));
        // deterministic per seed
        let p2 = ModelParams::init(&reg, 7);
        assert_eq!(p.values, p2.values);
        let p3 = ModelParams::init(&reg, 8);
        assert_ne!(p.values, p3.values);
    }

    #[test]
    fn mlp_segments_have_no_bias() {
        // every registered segment is a weight matrix, scale vector or
        // epsilon; names ending in .bias must never appear
        let cfg = ModelConfig::desk();
        let shapes = ModelShapes::new(&cfg, padded()).unwrap();
        let reg = ParamRegistry::new(&cfg, &shapes);
        assert!(reg.segments.iter().all(|s| !s.name.contains("bias")));
    }
}
