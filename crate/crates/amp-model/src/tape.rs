//! A small reverse-mode differentiation tape over flat f64 blocks.
//!
//! Nodes are appended in evaluation order, so the node index order is a
//! topological order and the backward pass is a single reverse sweep. Only
//! parameter leaves collect gradients; every kernel has a hand-written
//! adjoint, pinned by finite-difference tests.

use std::rc::Rc;

use irreps::cg_table;

use crate::spec::{LayerNormSpec, LinearSpec, TpSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub usize);

#[derive(Clone)]
pub enum Op {
    Leaf,
    /// Trainable leaf; `segment` indexes the parameter registry.
    Param { segment: usize },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Scale(NodeId, f64),
    /// Elementwise product with a length-1 node.
    MulScalar(NodeId, NodeId),
    Dot(NodeId, NodeId),
    Tanh(NodeId),
    Concat(Vec<NodeId>),
    Slice { x: NodeId, offset: usize, len: usize },
    /// Plain dense matrix-vector product, weights row-major (rows, cols).
    Dense { x: NodeId, w: NodeId, rows: usize, cols: usize },
    Linear { x: NodeId, w: NodeId, spec: Rc<LinearSpec> },
    TensorProduct { x: NodeId, y: NodeId, w: Option<NodeId>, spec: Rc<TpSpec> },
    /// x / sqrt(sum x^2 + |eps|), eps a length-1 node. 0/0 yields 0.
    NormEps { x: NodeId, eps: NodeId },
    LayerNorm {
        x: NodeId,
        gamma: NodeId,
        eps_scalar: NodeId,
        eps_higher: NodeId,
        spec: Rc<LayerNormSpec>,
    },
}

struct Node {
    op: Op,
    value: Vec<f64>,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Vec<f64>) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn zeros(&mut self, len: usize) -> NodeId {
        self.push(Op::Leaf, vec![0.0; len])
    }

    pub fn param(&mut self, segment: usize, value: Vec<f64>) -> NodeId {
        self.push(Op::Param { segment }, value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v: Vec<f64> = self.nodes[a.0]
            .value
            .iter()
            .zip(self.nodes[b.0].value.iter())
            .map(|(x, y)| x + y)
            .collect();
        assert_eq!(self.nodes[a.0].value.len(), self.nodes[b.0].value.len());
        self.push(Op::Add(a, b), v)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.nodes[a.0].value.len(), self.nodes[b.0].value.len());
        let v: Vec<f64> = self.nodes[a.0]
            .value
            .iter()
            .zip(self.nodes[b.0].value.iter())
            .map(|(x, y)| x - y)
            .collect();
        self.push(Op::Sub(a, b), v)
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let v: Vec<f64> = self.nodes[a.0].value.iter().map(|x| c * x).collect();
        self.push(Op::Scale(a, c), v)
    }

    pub fn mul_scalar(&mut self, a: NodeId, s: NodeId) -> NodeId {
        assert_eq!(self.nodes[s.0].value.len(), 1);
        let c = self.nodes[s.0].value[0];
        let v: Vec<f64> = self.nodes[a.0].value.iter().map(|x| c * x).collect();
        self.push(Op::MulScalar(a, s), v)
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.nodes[a.0].value.len(), self.nodes[b.0].value.len());
        let v: f64 = self.nodes[a.0]
            .value
            .iter()
            .zip(self.nodes[b.0].value.iter())
            .map(|(x, y)| x * y)
            .sum();
        self.push(Op::Dot(a, b), vec![v])
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v: Vec<f64> = self.nodes[a.0].value.iter().map(|x| x.tanh()).collect();
        self.push(Op::Tanh(a), v)
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let mut v = Vec::new();
        for p in parts {
            v.extend_from_slice(&self.nodes[p.0].value);
        }
        self.push(Op::Concat(parts.to_vec()), v)
    }

    pub fn slice(&mut self, x: NodeId, offset: usize, len: usize) -> NodeId {
        let v = self.nodes[x.0].value[offset..offset + len].to_vec();
        self.push(Op::Slice { x, offset, len }, v)
    }

    pub fn dense(&mut self, w: NodeId, x: NodeId, rows: usize, cols: usize) -> NodeId {
        assert_eq!(self.nodes[x.0].value.len(), cols);
        assert_eq!(self.nodes[w.0].value.len(), rows * cols);
        let mut out = vec![0.0; rows];
        {
            let wv = &self.nodes[w.0].value;
            let xv = &self.nodes[x.0].value;
            for r in 0..rows {
                let mut acc = 0.0;
                for c in 0..cols {
                    acc += wv[r * cols + c] * xv[c];
                }
                out[r] = acc;
            }
        }
        self.push(Op::Dense { x, w, rows, cols }, out)
    }

    pub fn linear(&mut self, spec: &Rc<LinearSpec>, w: NodeId, x: NodeId) -> NodeId {
        assert_eq!(self.nodes[x.0].value.len(), spec.in_len());
        assert_eq!(self.nodes[w.0].value.len(), spec.weight_len);
        let mut out = vec![0.0; spec.out_len()];
        {
            let wv = &self.nodes[w.0].value;
            let xv = &self.nodes[x.0].value;
            let in_dim = spec.in_sig.total_dim();
            let out_dim = spec.out_sig.total_dim();
            for rep in 0..spec.n_repeat {
                let xs = &xv[rep * in_dim..(rep + 1) * in_dim];
                let os = &mut out[rep * out_dim..(rep + 1) * out_dim];
                for b in &spec.blocks {
                    for ko in 0..b.out_mult {
                        for ki in 0..b.in_mult {
                            let wv_ = wv[b.w_off + ko * b.in_mult + ki];
                            if wv_ == 0.0 {
                                continue;
                            }
                            for m in 0..b.dim {
                                os[b.out_off + ko * b.dim + m] +=
                                    wv_ * xs[b.in_off + ki * b.dim + m];
                            }
                        }
                    }
                }
            }
        }
        self.push(Op::Linear { x, w, spec: Rc::clone(spec) }, out)
    }

    pub fn tensor_product(
        &mut self,
        spec: &Rc<TpSpec>,
        x: NodeId,
        y: NodeId,
        w: Option<NodeId>,
    ) -> NodeId {
        assert_eq!(self.nodes[x.0].value.len(), spec.in1_len());
        assert_eq!(self.nodes[y.0].value.len(), spec.in2_len());
        if let Some(wn) = w {
            assert_eq!(self.nodes[wn.0].value.len(), spec.n_weights);
        } else {
            assert_eq!(spec.n_weights, 0);
        }
        let mut out = vec![0.0; spec.out_len()];
        {
            let xv = &self.nodes[x.0].value;
            let yv = &self.nodes[y.0].value;
            let wv = w.map(|wn| self.nodes[wn.0].value.as_slice());
            let table = cg_table();
            let d1_tot = spec.in1_sig.total_dim();
            let d2_tot = spec.in2_sig.total_dim();
            let d3_tot = spec.out_sig.total_dim();
            for rep in 0..spec.n_repeat {
                let xs = &xv[rep * d1_tot..(rep + 1) * d1_tot];
                let ys = &yv[rep * d2_tot..(rep + 1) * d2_tot];
                let out_base = if spec.sum_repeats { 0 } else { rep * d3_tot };
                for p in &spec.paths {
                    let theta = match p.weight_idx {
                        Some(i) => wv.expect("weighted spec")[i],
                        None => 1.0,
                    };
                    if theta == 0.0 {
                        continue;
                    }
                    let cg = table.tensor(p.l1, p.l2, p.l3).expect("tabulated path");
                    let (d1, d2, d3) = (
                        2 * p.l1 as usize + 1,
                        2 * p.l2 as usize + 1,
                        2 * p.l3 as usize + 1,
                    );
                    for k in 0..p.mult1 {
                        let x_off = p.off1 + k * d1;
                        let y_off = p.off2 + if p.mult2 == 1 { 0 } else { k * d2 };
                        let o_off = out_base + p.out_block_off + (p.out_ch_off + k) * d3;
                        for m1 in 0..d1 {
                            let xval = xs[x_off + m1];
                            if xval == 0.0 {
                                continue;
                            }
                            for m2 in 0..d2 {
                                let yval = ys[y_off + m2];
                                if yval == 0.0 {
                                    continue;
                                }
                                let base = (m1 * d2 + m2) * d3;
                                for m3 in 0..d3 {
                                    let c = cg[base + m3];
                                    if c != 0.0 {
                                        out[o_off + m3] += theta * c * xval * yval;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        self.push(Op::TensorProduct { x, y, w, spec: Rc::clone(spec) }, out)
    }

    pub fn norm_eps(&mut self, x: NodeId, eps: NodeId) -> NodeId {
        assert_eq!(self.nodes[eps.0].value.len(), 1);
        let xv = &self.nodes[x.0].value;
        let n2: f64 = xv.iter().map(|v| v * v).sum();
        let denom = (n2 + self.nodes[eps.0].value[0].abs()).sqrt();
        let v: Vec<f64> = if denom == 0.0 {
            vec![0.0; xv.len()]
        } else {
            xv.iter().map(|v| v / denom).collect()
        };
        self.push(Op::NormEps { x, eps }, v)
    }

    pub fn layer_norm(
        &mut self,
        spec: &Rc<LayerNormSpec>,
        x: NodeId,
        gamma: NodeId,
        eps_scalar: NodeId,
        eps_higher: NodeId,
    ) -> NodeId {
        assert_eq!(self.nodes[x.0].value.len(), spec.len());
        assert_eq!(self.nodes[gamma.0].value.len(), spec.n_channels);
        let mut out = vec![0.0; spec.len()];
        {
            let xv = &self.nodes[x.0].value;
            let gv = &self.nodes[gamma.0].value;
            let e0 = self.nodes[eps_scalar.0].value[0].abs();
            let e1 = self.nodes[eps_higher.0].value[0].abs();
            let dim = spec.sig.total_dim();
            for rep in 0..spec.n_repeat {
                let xs = &xv[rep * dim..(rep + 1) * dim];
                let os = &mut out[rep * dim..(rep + 1) * dim];
                layer_norm_forward(spec, xs, gv, e0, e1, os);
            }
        }
        self.push(
            Op::LayerNorm { x, gamma, eps_scalar, eps_higher, spec: Rc::clone(spec) },
            out,
        )
    }

    /// Reverse sweep from a scalar output node. Returns per-node gradient
    /// buffers for parameter extraction.
    pub fn backward(&self, output: NodeId) -> Gradients {
        assert_eq!(self.nodes[output.0].value.len(), 1, "seed must be scalar");
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(vec![1.0]);
        for idx in (0..=output.0).rev() {
            let g = match grads[idx].take() {
                Some(g) => g,
                None => continue,
            };
            self.accumulate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Gradients { grads }
    }

    fn accumulate(&self, idx: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[idx];
        let mut bump = |id: NodeId, f: &mut dyn FnMut(&mut [f64])| {
            let slot = &mut grads[id.0];
            if slot.is_none() {
                *slot = Some(vec![0.0; self.nodes[id.0].value.len()]);
            }
            f(slot.as_mut().unwrap());
        };
        match &node.op {
            Op::Leaf | Op::Param { .. } => {}
            Op::Add(a, b) => {
                bump(*a, &mut |d| {
                    for (di, gi) in d.iter_mut().zip(g) {
                        *di += gi;
                    }
                });
                bump(*b, &mut |d| {
                    for (di, gi) in d.iter_mut().zip(g) {
                        *di += gi;
                    }
                });
            }
            Op::Sub(a, b) => {
                bump(*a, &mut |d| {
                    for (di, gi) in d.iter_mut().zip(g) {
                        *di += gi;
                    }
                });
                bump(*b, &mut |d| {
                    for (di, gi) in d.iter_mut().zip(g) {
                        *di -= gi;
                    }
                });
            }
            Op::Scale(a, c) => {
                let c = *c;
                bump(*a, &mut |d| {
                    for (di, gi) in d.iter_mut().zip(g) {
                        *di += c * gi;
                    }
                });
            }
            Op::MulScalar(a, s) => {
                let sv = self.nodes[s.0].value[0];
                let av = &self.nodes[a.0].value;
                bump(*a, &mut |d| {
                    for (di, gi) in d.iter_mut().zip(g) {
                        *di += sv * gi;
                    }
                });
                let ds: f64 = g.iter().zip(av.iter()).map(|(gi, ai)| gi * ai).sum();
                bump(*s, &mut |d| d[0] += ds);
            }
            Op::Dot(a, b) => {
                let av = &self.nodes[a.0].value;
                let bv = &self.nodes[b.0].value;
                let g0 = g[0];
                bump(*a, &mut |d| {
                    for (di, bi) in d.iter_mut().zip(bv) {
                        *di += g0 * bi;
                    }
                });
                bump(*b, &mut |d| {
                    for (di, ai) in d.iter_mut().zip(av) {
                        *di += g0 * ai;
                    }
                });
            }
            Op::Tanh(a) => {
                let out = &node.value;
                bump(*a, &mut |d| {
                    for ((di, gi), oi) in d.iter_mut().zip(g).zip(out) {
                        *di += gi * (1.0 - oi * oi);
                    }
                });
            }
            Op::Concat(parts) => {
                let mut off = 0;
                for p in parts {
                    let len = self.nodes[p.0].value.len();
                    let gs = &g[off..off + len];
                    bump(*p, &mut |d| {
                        for (di, gi) in d.iter_mut().zip(gs) {
                            *di += gi;
                        }
                    });
                    off += len;
                }
            }
            Op::Slice { x, offset, len } => {
                let (offset, len) = (*offset, *len);
                bump(*x, &mut |d| {
                    for i in 0..len {
                        d[offset + i] += g[i];
                    }
                });
            }
            Op::Dense { x, w, rows, cols } => {
                let (rows, cols) = (*rows, *cols);
                let xv = &self.nodes[x.0].value;
                let wv = &self.nodes[w.0].value;
                bump(*w, &mut |d| {
                    for r in 0..rows {
                        for c in 0..cols {
                            d[r * cols + c] += g[r] * xv[c];
                        }
                    }
                });
                bump(*x, &mut |d| {
                    for c in 0..cols {
                        let mut acc = 0.0;
                        for r in 0..rows {
                            acc += wv[r * cols + c] * g[r];
                        }
                        d[c] += acc;
                    }
                });
            }
            Op::Linear { x, w, spec } => {
                let xv = &self.nodes[x.0].value;
                let wv = &self.nodes[w.0].value;
                let in_dim = spec.in_sig.total_dim();
                let out_dim = spec.out_sig.total_dim();
                bump(*w, &mut |d| {
                    for rep in 0..spec.n_repeat {
                        let xs = &xv[rep * in_dim..(rep + 1) * in_dim];
                        let gs = &g[rep * out_dim..(rep + 1) * out_dim];
                        for b in &spec.blocks {
                            for ko in 0..b.out_mult {
                                for ki in 0..b.in_mult {
                                    let mut acc = 0.0;
                                    for m in 0..b.dim {
                                        acc += gs[b.out_off + ko * b.dim + m]
                                            * xs[b.in_off + ki * b.dim + m];
                                    }
                                    d[b.w_off + ko * b.in_mult + ki] += acc;
                                }
                            }
                        }
                    }
                });
                bump(*x, &mut |d| {
                    for rep in 0..spec.n_repeat {
                        let ds = &mut d[rep * in_dim..(rep + 1) * in_dim];
                        let gs = &g[rep * out_dim..(rep + 1) * out_dim];
                        for b in &spec.blocks {
                            for ko in 0..b.out_mult {
                                for ki in 0..b.in_mult {
                                    let wv_ = wv[b.w_off + ko * b.in_mult + ki];
                                    if wv_ == 0.0 {
                                        continue;
                                    }
                                    for m in 0..b.dim {
                                        ds[b.in_off + ki * b.dim + m] +=
                                            wv_ * gs[b.out_off + ko * b.dim + m];
                                    }
                                }
                            }
                        }
                    }
                });
            }
            Op::TensorProduct { x, y, w, spec } => {
                self.tensor_product_backward(*x, *y, *w, spec, g, grads);
            }
            Op::NormEps { x, eps } => {
                let xv = &self.nodes[x.0].value;
                let ev = self.nodes[eps.0].value[0];
                let n2: f64 = xv.iter().map(|v| v * v).sum();
                let denom = (n2 + ev.abs()).sqrt();
                if denom == 0.0 {
                    return;
                }
                let gx_dot: f64 = g.iter().zip(xv.iter()).map(|(gi, xi)| gi * xi).sum();
                let d3 = denom * denom * denom;
                bump(*x, &mut |d| {
                    for (i, di) in d.iter_mut().enumerate() {
                        *di += g[i] / denom - xv[i] * gx_dot / d3;
                    }
                });
                let de = -ev.signum() * 0.5 * gx_dot / d3;
                if ev != 0.0 {
                    bump(*eps, &mut |d| d[0] += de);
                }
            }
            Op::LayerNorm { x, gamma, eps_scalar, eps_higher, spec } => {
                self.layer_norm_backward(
                    *x,
                    *gamma,
                    *eps_scalar,
                    *eps_higher,
                    spec,
                    g,
                    grads,
                );
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn tensor_product_backward(
        &self,
        x: NodeId,
        y: NodeId,
        w: Option<NodeId>,
        spec: &Rc<TpSpec>,
        g: &[f64],
        grads: &mut [Option<Vec<f64>>],
    ) {
        let xv = &self.nodes[x.0].value;
        let yv = &self.nodes[y.0].value;
        let wv = w.map(|wn| self.nodes[wn.0].value.clone());
        let table = cg_table();
        let d1_tot = spec.in1_sig.total_dim();
        let d2_tot = spec.in2_sig.total_dim();
        let d3_tot = spec.out_sig.total_dim();

        let mut dx = vec![0.0; xv.len()];
        let mut dy = vec![0.0; yv.len()];
        let mut dw = vec![0.0; spec.n_weights];

        for rep in 0..spec.n_repeat {
            let xs = &xv[rep * d1_tot..(rep + 1) * d1_tot];
            let ys = &yv[rep * d2_tot..(rep + 1) * d2_tot];
            let out_base = if spec.sum_repeats { 0 } else { rep * d3_tot };
            for p in &spec.paths {
                let theta = match p.weight_idx {
                    Some(i) => wv.as_ref().expect("weighted spec")[i],
                    None => 1.0,
                };
                let cg = table.tensor(p.l1, p.l2, p.l3).expect("tabulated path");
                let (d1, d2, d3) = (
                    2 * p.l1 as usize + 1,
                    2 * p.l2 as usize + 1,
                    2 * p.l3 as usize + 1,
                );
                for k in 0..p.mult1 {
                    let x_off = p.off1 + k * d1;
                    let y_off = p.off2 + if p.mult2 == 1 { 0 } else { k * d2 };
                    let o_off = out_base + p.out_block_off + (p.out_ch_off + k) * d3;
                    for m1 in 0..d1 {
                        for m2 in 0..d2 {
                            let base = (m1 * d2 + m2) * d3;
                            let mut cg_dot = 0.0;
                            for m3 in 0..d3 {
                                let c = cg[base + m3];
                                if c != 0.0 {
                                    cg_dot += c * g[o_off + m3];
                                }
                            }
                            if cg_dot == 0.0 {
                                continue;
                            }
                            let xval = xs[x_off + m1];
                            let yval = ys[y_off + m2];
                            dx[rep * d1_tot + x_off + m1] += theta * cg_dot * yval;
                            dy[rep * d2_tot + y_off + m2] += theta * cg_dot * xval;
                            if let Some(i) = p.weight_idx {
                                dw[i] += cg_dot * xval * yval;
                            }
                        }
                    }
                }
            }
        }

        accumulate_into(grads, x, &dx, xv.len());
        accumulate_into(grads, y, &dy, yv.len());
        if let Some(wn) = w {
            accumulate_into(grads, wn, &dw, spec.n_weights);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn layer_norm_backward(
        &self,
        x: NodeId,
        gamma: NodeId,
        eps_scalar: NodeId,
        eps_higher: NodeId,
        spec: &Rc<LayerNormSpec>,
        g: &[f64],
        grads: &mut [Option<Vec<f64>>],
    ) {
        let xv = &self.nodes[x.0].value;
        let gv = &self.nodes[gamma.0].value;
        let e0v = self.nodes[eps_scalar.0].value[0];
        let e1v = self.nodes[eps_higher.0].value[0];
        let (e0, e1) = (e0v.abs(), e1v.abs());
        let dim = spec.sig.total_dim();

        let mut dx = vec![0.0; xv.len()];
        let mut dgamma = vec![0.0; gv.len()];
        let mut de0 = 0.0;
        let mut de1 = 0.0;

        for rep in 0..spec.n_repeat {
            let xs = &xv[rep * dim..(rep + 1) * dim];
            let gs = &g[rep * dim..(rep + 1) * dim];
            let dxs_off = rep * dim;

            // scalar groups: y_k = gamma_k (x_k - mu) / (sigma + e0)
            for group in &spec.scalar_groups {
                let members: Vec<(usize, usize)> = group
                    .iter()
                    .flat_map(|&(off, mult, ch)| (0..mult).map(move |k| (off + k, ch + k)))
                    .collect();
                let nals = members.len() as f64;
                let mean: f64 = members.iter().map(|&(i, _)| xs[i]).sum::<f64>() / nals;
                let var: f64 = members
                    .iter()
                    .map(|&(i, _)| (xs[i] - mean) * (xs[i] - mean))
                    .sum::<f64>()
                    / nals;
                let sigma = var.sqrt();
                let denom = sigma + e0;
                if denom == 0.0 {
                    continue;
                }
                // common reductions
                let mut sum_ggamma = 0.0;
                let mut sum_ggamma_c = 0.0;
                for &(i, ch) in &members {
                    sum_ggamma += gs[i] * gv[ch];
                    sum_ggamma_c += gs[i] * gv[ch] * (xs[i] - mean);
                }
                for &(i, ch) in &members {
                    let c_i = xs[i] - mean;
                    dgamma[ch] += gs[i] * c_i / denom;
                    // dy_j/dx_i = gamma_j [ (d_ij - 1/n)/denom
                    //   - c_j c_i / (n sigma denom^2) ]
                    let mut acc = gv[ch] * gs[i] / denom;
                    acc -= sum_ggamma / (nals * denom);
                    if sigma > 0.0 {
                        acc -= c_i * sum_ggamma_c / (nals * sigma * denom * denom);
                    }
                    dx[dxs_off + i] += acc;
                }
                if e0v != 0.0 {
                    de0 += -e0v.signum() * sum_ggamma_c / (denom * denom);
                }
            }

            // higher part: y = gamma_k x / (sigma_gt + e1)
            if !spec.higher.is_empty() {
                let n_l = spec.higher.len() as f64;
                let mut mean_var = 0.0;
                let mut per_l_norm = Vec::with_capacity(spec.higher.len());
                for (_, blocks) in &spec.higher {
                    let mut sum_sq = 0.0;
                    let mut channels = 0usize;
                    let mut dim_l = 0usize;
                    for &(off, mult, d, _) in blocks {
                        for v in &xs[off..off + mult * d] {
                            sum_sq += v * v;
                        }
                        channels += mult;
                        dim_l = d;
                    }
                    let denom_l = channels as f64 * dim_l as f64;
                    per_l_norm.push(denom_l);
                    mean_var += sum_sq / denom_l;
                }
                mean_var /= n_l;
                let sigma = mean_var.sqrt();
                let denom = sigma + e1;
                if denom == 0.0 {
                    continue;
                }
                // sum over all higher components of g * gamma * x
                let mut ggx = 0.0;
                for (_, blocks) in &spec.higher {
                    for &(off, mult, d, ch) in blocks {
                        for k in 0..mult {
                            for m in 0..d {
                                let i = off + k * d + m;
                                ggx += gs[i] * gv[ch + k] * xs[i];
                            }
                        }
                    }
                }
                for (li, (_, blocks)) in spec.higher.iter().enumerate() {
                    let nl_denom = per_l_norm[li];
                    for &(off, mult, d, ch) in blocks {
                        for k in 0..mult {
                            for m in 0..d {
                                let i = off + k * d + m;
                                dgamma[ch + k] += gs[i] * xs[i] / denom;
                                let mut acc = gv[ch + k] * gs[i] / denom;
                                // d sigma / dx_i = x_i / (n_l * nl_denom * sigma)
                                if sigma > 0.0 {
                                    acc -= ggx * xs[i]
                                        / (n_l * nl_denom * sigma * denom * denom);
                                }
                                dx[dxs_off + i] += acc;
                            }
                        }
                    }
                }
                if e1v != 0.0 {
                    de1 += -e1v.signum() * ggx / (denom * denom);
                }
            }
        }

        accumulate_into(grads, x, &dx, xv.len());
        accumulate_into(grads, gamma, &dgamma, gv.len());
        accumulate_into(grads, eps_scalar, &[de0], 1);
        accumulate_into(grads, eps_higher, &[de1], 1);
    }

    /// Collects the gradient of every Param node into per-segment buffers.
    pub fn param_gradients(&self, grads: &Gradients, n_segments: usize) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); n_segments];
        for (idx, node) in self.nodes.iter().enumerate() {
            if let Op::Param { segment } = node.op {
                let buf = match &grads.grads[idx] {
                    Some(g) => g.clone(),
                    None => vec![0.0; node.value.len()],
                };
                if out[segment].is_empty() {
                    out[segment] = buf;
                } else {
                    for (a, b) in out[segment].iter_mut().zip(buf) {
                        *a += b;
                    }
                }
            }
        }
        out
    }
}

fn accumulate_into(grads: &mut [Option<Vec<f64>>], id: NodeId, add: &[f64], len: usize) {
    let slot = &mut grads[id.0];
    if slot.is_none() {
        *slot = Some(vec![0.0; len]);
    }
    let d = slot.as_mut().unwrap();
    for (di, ai) in d.iter_mut().zip(add) {
        *di += ai;
    }
}

pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&[f64]> {
        self.grads[id.0].as_deref()
    }
}

/// Shared forward kernel for one layer-norm segment.
pub(crate) fn layer_norm_forward(
    spec: &LayerNormSpec,
    xs: &[f64],
    gamma: &[f64],
    e0: f64,
    e1: f64,
    out: &mut [f64],
) {
    for group in &spec.scalar_groups {
        let members: Vec<(usize, usize)> = group
            .iter()
            .flat_map(|&(off, mult, ch)| (0..mult).map(move |k| (off + k, ch + k)))
            .collect();
        let n = members.len() as f64;
        let mean: f64 = members.iter().map(|&(i, _)| xs[i]).sum::<f64>() / n;
        let var: f64 =
            members.iter().map(|&(i, _)| (xs[i] - mean) * (xs[i] - mean)).sum::<f64>() / n;
        let denom = var.sqrt() + e0;
        for &(i, ch) in &members {
            out[i] = if denom == 0.0 {
                0.0
            } else {
                gamma[ch] * (xs[i] - mean) / denom
            };
        }
    }
    if !spec.higher.is_empty() {
        let n_l = spec.higher.len() as f64;
        let mut mean_var = 0.0;
        for (_, blocks) in &spec.higher {
            let mut sum_sq = 0.0;
            let mut channels = 0usize;
            let mut dim_l = 0usize;
            for &(off, mult, d, _) in blocks {
                for v in &xs[off..off + mult * d] {
                    sum_sq += v * v;
                }
                channels += mult;
                dim_l = d;
            }
            mean_var += sum_sq / (channels as f64 * dim_l as f64);
        }
        mean_var /= n_l;
        let denom = mean_var.sqrt() + e1;
        for (_, blocks) in &spec.higher {
            for &(off, mult, d, ch) in blocks {
                for k in 0..mult {
                    for m in 0..d {
                        let i = off + k * d + m;
                        out[i] = if denom == 0.0 { 0.0 } else { gamma[ch + k] * xs[i] / denom };
                    }
                }
            }
        }
    }
}
