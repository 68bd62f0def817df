//! The amplitude-prediction architecture: coefficient padding and
//! embedding, per-orbital graphs, attention across orbitals, odd-order
//! message passing within each orbital's graph, separable layer norms, and
//! the bilinear invariant readouts composed with the perturbative baseline.
//!
//! The forward pass is written against the differentiation tape; evaluating
//! it without a backward sweep is ordinary inference. It is a pure function
//! of (system, integrals, parameters).

use std::rc::Rc;

use cc_engine::{mp2_amplitudes, AmplitudeSet, IntegralSet};
use irreps::IrrepsArray;

use crate::config::ModelConfig;
use crate::error::ModelError;
use crate::graph::{build_graph, radial_embedding, Graph, MoGraphs};
use crate::params::{ModelParams, ModelShapes, ParamRegistry};
use crate::spec::{LayerNormSpec, LinearSpec, TpSpec};
use crate::system::{pad_coefficients, MolecularSystem};
use crate::tape::{NodeId, Tape};

/// A completed forward pass: the tape plus the output amplitude nodes
/// (network contribution only; the doubles baseline is added outside).
pub struct Forward {
    pub tape: Tape,
    pub n_occ: usize,
    pub n_virt: usize,
    /// t1_nodes[i * n_virt + a]
    pub t1_nodes: Vec<NodeId>,
    /// t2_nodes[((i*n_occ + j)*n_virt + a)*n_virt + b]
    pub t2_nodes: Vec<NodeId>,
    /// Final per-orbital feature nodes.
    pub features: Vec<NodeId>,
}

fn rep_linear(spec: &LinearSpec, n_repeat: usize) -> Rc<LinearSpec> {
    let mut s = spec.clone();
    s.n_repeat = n_repeat;
    Rc::new(s)
}

fn rep_tp(spec: &TpSpec, n_repeat: usize) -> Rc<TpSpec> {
    let mut s = spec.clone();
    s.n_repeat = n_repeat;
    Rc::new(s)
}

fn rep_ln(spec: &LayerNormSpec, n_repeat: usize) -> Rc<LayerNormSpec> {
    let mut s = spec.clone();
    s.n_repeat = n_repeat;
    Rc::new(s)
}

struct Builder<'a> {
    tape: Tape,
    cfg: &'a ModelConfig,
    shapes: &'a ModelShapes,
    reg: &'a ParamRegistry,
    params: &'a ModelParams,
    param_nodes: Vec<Option<NodeId>>,
}

impl<'a> Builder<'a> {
    fn new(
        cfg: &'a ModelConfig,
        shapes: &'a ModelShapes,
        reg: &'a ParamRegistry,
        params: &'a ModelParams,
    ) -> Self {
        Builder {
            tape: Tape::new(),
            cfg,
            shapes,
            reg,
            params,
            param_nodes: vec![None; reg.segments.len()],
        }
    }

    fn param(&mut self, name: &str) -> NodeId {
        let idx = self.reg.index_of(name);
        if let Some(id) = self.param_nodes[idx] {
            return id;
        }
        let seg = &self.reg.segments[idx];
        let id = self
            .tape
            .param(idx, self.params.values[seg.offset..seg.offset + seg.len].to_vec());
        self.param_nodes[idx] = Some(id);
        id
    }

    fn add_all(&mut self, a: &[NodeId], b: &[NodeId]) -> Vec<NodeId> {
        a.iter().zip(b).map(|(x, y)| self.tape.add(*x, *y)).collect()
    }

    fn attention(&mut self, t: usize, x: &[NodeId], n_atoms: usize) -> Vec<NodeId> {
        let n_mo = x.len();
        let wq_spec = rep_linear(&self.shapes.wq, n_atoms);
        let wk_spec = rep_linear(&self.shapes.wk, n_atoms);
        let wv_spec = rep_linear(&self.shapes.wv, n_atoms);
        let mut out: Vec<Option<NodeId>> = vec![None; n_mo];
        for h in 0..self.cfg.n_heads {
            let wq = self.param(&format!("l{t}.h{h}.wq"));
            let wk = self.param(&format!("l{t}.h{h}.wk"));
            let wv = self.param(&format!("l{t}.h{h}.wv"));
            let eps_q = self.param(&format!("l{t}.h{h}.eps_q"));
            let eps_k = self.param(&format!("l{t}.h{h}.eps_k"));
            let eps_o = self.param(&format!("l{t}.h{h}.eps_o"));
            let mix = self.param(&format!("l{t}.h{h}.mix"));

            let queries: Vec<NodeId> = x
                .iter()
                .map(|&xp| {
                    let q = self.tape.linear(&wq_spec, wq, xp);
                    self.tape.norm_eps(q, eps_q)
                })
                .collect();
            let keys: Vec<NodeId> = x
                .iter()
                .map(|&xp| {
                    let k = self.tape.linear(&wk_spec, wk, xp);
                    self.tape.norm_eps(k, eps_k)
                })
                .collect();
            let values: Vec<NodeId> =
                x.iter().map(|&xp| self.tape.linear(&wv_spec, wv, xp)).collect();

            for p in 0..n_mo {
                // scores are plain inner products; no softmax anywhere
                let mut acc: Option<NodeId> = None;
                for q in 0..n_mo {
                    let score = self.tape.dot(queries[p], keys[q]);
                    let term = self.tape.mul_scalar(values[q], score);
                    acc = Some(match acc {
                        Some(a) => self.tape.add(a, term),
                        None => term,
                    });
                }
                let o = self.tape.norm_eps(acc.expect("at least one orbital"), eps_o);
                let contrib = self.tape.mul_scalar(o, mix);
                out[p] = Some(match out[p] {
                    Some(a) => self.tape.add(a, contrib),
                    None => contrib,
                });
            }
        }
        out.into_iter().map(|o| o.expect("head output")).collect()
    }

    fn odd_mace(
        &mut self,
        t: usize,
        x: &[NodeId],
        graph: &Graph,
        edge_y: &[NodeId],
        edge_radial: &[NodeId],
    ) -> Result<Vec<NodeId>, ModelError> {
        let n_atoms = graph.n_atoms;
        let hidden_dim = self.cfg.hidden.total_dim();
        let msg_dim = self.shapes.msg_tp.out_sig.total_dim();

        // radial weights per edge, shared by all orbitals of the layer
        let w_radial = self.param(&format!("l{t}.radial.w"));
        let radial_nodes: Vec<NodeId> = edge_radial
            .iter()
            .map(|&feat| {
                self.tape.dense(
                    w_radial,
                    feat,
                    self.shapes.msg_tp.n_weights,
                    self.cfg.n_bessel,
                )
            })
            .collect();

        let msg_spec = rep_tp(&self.shapes.msg_tp, 1);
        let msg_lin_spec = rep_linear(&self.shapes.msg_linear, n_atoms);
        let poly1_spec = rep_linear(&self.shapes.poly1, n_atoms);
        let w_msg = self.param(&format!("l{t}.msg.w"));
        let w_poly1 = self.param(&format!("l{t}.poly1.w"));

        let mut out = Vec::with_capacity(x.len());
        for &xp in x {
            // aggregate messages per receiving atom
            let mut agg: Vec<Option<NodeId>> = vec![None; n_atoms];
            for (ei, e) in graph.edges.iter().enumerate() {
                let src = self.tape.slice(xp, e.from * hidden_dim, hidden_dim);
                let m =
                    self.tape
                        .tensor_product(&msg_spec, src, edge_y[ei], Some(radial_nodes[ei]));
                agg[e.to] = Some(match agg[e.to] {
                    Some(a) => self.tape.add(a, m),
                    None => m,
                });
            }
            let parts: Vec<NodeId> = agg
                .into_iter()
                .map(|a| a.unwrap_or_else(|| self.tape.zeros(msg_dim)))
                .collect();
            let m_all = self.tape.concat(&parts);
            let m_mixed = self.tape.linear(&msg_lin_spec, w_msg, m_all);
            let u = self.tape.add(xp, m_mixed);

            // odd tensor polynomial in u
            let mut poly = self.tape.linear(&poly1_spec, w_poly1, u);
            let mut acc = u;
            for (k, tp) in self.shapes.powers.iter().enumerate() {
                let step = (k + 2) as u32;
                let tp_spec = rep_tp(tp, n_atoms);
                acc = self.tape.tensor_product(&tp_spec, acc, u, None);
                if step % 2 == 1 {
                    let spec = self
                        .shapes
                        .poly_odd
                        .iter()
                        .find(|(s, _)| *s == step)
                        .map(|(_, spec)| spec)
                        .expect("registered odd power");
                    let w = self.param(&format!("l{t}.poly{step}.w"));
                    let term = self.tape.linear(&rep_linear(spec, n_atoms), w, acc);
                    poly = self.tape.add(poly, term);
                } else if step == 2 {
                    if let Some(spec) = &self.shapes.dbg_even {
                        let w = self.param(&format!("l{t}.dbg_even.w"));
                        let term = self.tape.linear(&rep_linear(spec, n_atoms), w, acc);
                        poly = self.tape.add(poly, term);
                    }
                }
            }
            out.push(poly);
        }
        Ok(out)
    }

    fn layer_norm_all(&mut self, t: usize, which: &str, x: &[NodeId], n_atoms: usize) -> Vec<NodeId> {
        let spec = rep_ln(&self.shapes.layer_norm, n_atoms);
        let gamma = self.param(&format!("l{t}.{which}.gamma"));
        let e0 = self.param(&format!("l{t}.{which}.eps0"));
        let e1 = self.param(&format!("l{t}.{which}.eps1"));
        x.iter()
            .map(|&xp| self.tape.layer_norm(&spec, xp, gamma, e0, e1))
            .collect()
    }
}

/// Builds the full forward pass for one system.
pub fn forward(
    sys: &MolecularSystem,
    cfg: &ModelConfig,
    shapes: &ModelShapes,
    reg: &ParamRegistry,
    params: &ModelParams,
) -> Result<Forward, ModelError> {
    sys.validate()?;
    if params.values.len() != reg.total {
        return Err(ModelError::Dimensions(format!(
            "parameter vector has {} entries, registry expects {}",
            params.values.len(),
            reg.total
        )));
    }
    let n_atoms = sys.n_atoms();
    let n_mo = sys.n_mo();
    let o = sys.n_occ;
    let v = n_mo - o;

    let padded = pad_coefficients(sys, &sys.layout)?;
    let graph = build_graph(sys, cfg);

    let mut b = Builder::new(cfg, shapes, reg, params);

    // embed coefficients into the hidden signature
    let embed_spec = rep_linear(&shapes.embed, n_atoms);
    let w_embed = b.param("embed.w");
    let mut x: Vec<NodeId> = padded
        .iter()
        .map(|per_atom| {
            let flat: Vec<f64> = per_atom
                .iter()
                .flat_map(|arr| arr.values().iter().copied())
                .collect();
            let leaf = b.tape.leaf(flat);
            b.tape.linear(&embed_spec, w_embed, leaf)
        })
        .collect();

    // per-edge constants shared by every layer
    let mut edge_y = Vec::with_capacity(graph.edges.len());
    let mut edge_radial = Vec::with_capacity(graph.edges.len());
    for e in &graph.edges {
        let sh = irreps::spherical_harmonics(2, e.unit)?;
        edge_y.push(b.tape.leaf(sh.into_values()));
        edge_radial.push(b.tape.leaf(radial_embedding(e.dist, cfg)?));
    }

    for t in 0..cfg.n_layers {
        if cfg.norm_before_block {
            let n1 = b.layer_norm_all(t, "ln1", &x, n_atoms);
            let att = b.attention(t, &n1, n_atoms);
            let x1 = b.add_all(&x, &att);
            let n2 = b.layer_norm_all(t, "ln2", &x1, n_atoms);
            let m = b.odd_mace(t, &n2, &graph, &edge_y, &edge_radial)?;
            x = b.add_all(&x1, &m);
        } else {
            let att = b.attention(t, &x, n_atoms);
            let x1 = b.add_all(&x, &att);
            let x2 = b.layer_norm_all(t, "ln1", &x1, n_atoms);
            let m = b.odd_mace(t, &x2, &graph, &edge_y, &edge_radial)?;
            let x3 = b.add_all(&x2, &m);
            x = b.layer_norm_all(t, "ln2", &x3, n_atoms);
        }
    }

    // singles readout
    let eps_t1 = b.param("t1.norm_eps");
    let w_single = b.param("t1.single.w");
    let w_single_virt = if cfg.separate_single_weights {
        b.param("t1.single_virt.w")
    } else {
        w_single
    };
    let single_spec = rep_linear(&shapes.single, n_atoms);
    let projected: Vec<NodeId> = x
        .iter()
        .enumerate()
        .map(|(p, &xp)| {
            let w = if p < o { w_single } else { w_single_virt };
            let norm = b.tape.norm_eps(xp, eps_t1);
            b.tape.linear(&single_spec, w, norm)
        })
        .collect();
    let t1_inv_spec = rep_tp(&shapes.t1_inv, n_atoms);
    let w_t1_0 = b.param("t1.mlp.0");
    let w_t1_out = b.param("t1.mlp.out");
    let n1 = shapes.n_invariants_t1();
    let mut t1_nodes = Vec::with_capacity(o * v);
    for i in 0..o {
        for a in 0..v {
            let inv = b.tape.tensor_product(&t1_inv_spec, projected[i], projected[o + a], None);
            let h = b.tape.dense(w_t1_0, inv, cfg.t1_mlp_hidden, n1);
            let ht = b.tape.tanh(h);
            t1_nodes.push(b.tape.dense(w_t1_out, ht, 1, cfg.t1_mlp_hidden));
        }
    }

    // doubles readout
    let pair_spec = rep_tp(&shapes.pair_tp, n_atoms);
    let pairlin_spec = rep_linear(&shapes.pair_linear, n_atoms);
    let w_pair = b.param("t2.pair.w");
    let eps_pair = b.param("t2.pair_norm_eps");
    let w_pairlin = b.param("t2.pairlin.w");
    let mut pair_features = vec![None; o * v];
    for i in 0..o {
        for a in 0..v {
            let raw = b.tape.tensor_product(&pair_spec, x[i], x[o + a], Some(w_pair));
            let normed = b.tape.norm_eps(raw, eps_pair);
            pair_features[i * v + a] = Some(b.tape.linear(&pairlin_spec, w_pairlin, normed));
        }
    }
    let quad_spec = rep_tp(&shapes.quad_inv, n_atoms);
    let n2 = shapes.n_invariants_t2();
    let w_t2_0 = b.param("t2.mlp.0");
    let w_t2_hidden: Vec<NodeId> = (1..cfg.t2_mlp_layers)
        .map(|k| b.param(&format!("t2.mlp.{k}")))
        .collect();
    let w_t2_out = b.param("t2.mlp.out");
    let mut t2_nodes = Vec::with_capacity(o * o * v * v);
    for i in 0..o {
        for j in 0..o {
            for a in 0..v {
                for b_ in 0..v {
                    let fia = pair_features[i * v + a].expect("pair feature");
                    let fjb = pair_features[j * v + b_].expect("pair feature");
                    let y = b.tape.tensor_product(&quad_spec, fia, fjb, None);
                    let mut h = b.tape.dense(w_t2_0, y, cfg.t2_mlp_hidden, n2);
                    h = b.tape.tanh(h);
                    for &w in &w_t2_hidden {
                        h = b.tape.dense(w, h, cfg.t2_mlp_hidden, cfg.t2_mlp_hidden);
                        h = b.tape.tanh(h);
                    }
                    t2_nodes.push(b.tape.dense(w_t2_out, h, 1, cfg.t2_mlp_hidden));
                }
            }
        }
    }

    Ok(Forward {
        tape: b.tape,
        n_occ: o,
        n_virt: v,
        t1_nodes,
        t2_nodes,
        features: x,
    })
}

/// Full prediction: network outputs composed with the perturbative doubles
/// baseline. All-zero parameters therefore return (t1 = 0, t2 = MP2).
pub fn predict(
    sys: &MolecularSystem,
    ints: &IntegralSet,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<AmplitudeSet, ModelError> {
    if ints.n_occ() != sys.n_occ || ints.n_orb() != sys.n_mo() {
        return Err(ModelError::Dimensions(format!(
            "integrals ({}, {}) do not match system ({}, {})",
            ints.n_occ(),
            ints.n_orb(),
            sys.n_occ,
            sys.n_mo()
        )));
    }
    let shapes = ModelShapes::new(cfg, sys.layout.padded_signature())?;
    let reg = ParamRegistry::new(cfg, &shapes);
    let fwd = forward(sys, cfg, &shapes, &reg, params)?;
    let mut amp = mp2_amplitudes(ints)?;
    let (o, v) = (fwd.n_occ, fwd.n_virt);
    for i in 0..o {
        for a in 0..v {
            amp.t1[(i, a)] = fwd.tape.value(fwd.t1_nodes[i * v + a])[0];
        }
    }
    for i in 0..o {
        for j in 0..o {
            for a in 0..v {
                for b in 0..v {
                    let net = fwd.tape.value(fwd.t2_nodes[((i * o + j) * v + a) * v + b])[0];
                    amp.t2[(i, j, a, b)] += net;
                }
            }
        }
    }
    Ok(amp)
}

/// The per-orbital graphs with embedded node features, as plain data.
pub fn build_mo_graphs(
    sys: &MolecularSystem,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<MoGraphs, ModelError> {
    let shapes = ModelShapes::new(cfg, sys.layout.padded_signature())?;
    let reg = ParamRegistry::new(cfg, &shapes);
    if params.values.len() != reg.total {
        return Err(ModelError::Dimensions("parameter vector length".into()));
    }
    let graph = build_graph(sys, cfg);
    let padded = pad_coefficients(sys, &sys.layout)?;
    let n_atoms = sys.n_atoms();
    let mut b = Builder::new(cfg, &shapes, &reg, params);
    let embed_spec = rep_linear(&shapes.embed, n_atoms);
    let w_embed = b.param("embed.w");
    let hidden_dim = cfg.hidden.total_dim();
    let features = padded
        .iter()
        .map(|per_atom| {
            let flat: Vec<f64> = per_atom
                .iter()
                .flat_map(|arr| arr.values().iter().copied())
                .collect();
            let leaf = b.tape.leaf(flat);
            let node = b.tape.linear(&embed_spec, w_embed, leaf);
            (0..n_atoms)
                .map(|at| {
                    IrrepsArray::new(
                        cfg.hidden.clone(),
                        b.tape.value(node)[at * hidden_dim..(at + 1) * hidden_dim].to_vec(),
                    )
                    .expect("hidden-sized block")
                })
                .collect()
        })
        .collect();
    Ok(MoGraphs { graph, features })
}
