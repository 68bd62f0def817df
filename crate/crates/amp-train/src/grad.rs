//! Exact parameter gradients of the amplitude loss, by a reverse sweep of
//! the recorded forward computation.

use amp_model::tape::NodeId;
use amp_model::{forward, Forward, ModelConfig, ModelParams, ModelShapes, ParamRegistry};
use cc_engine::mp2_amplitudes;

use crate::train::{TrainError, TrainingSample};

/// Builds the forward pass and attaches the squared-error loss node.
/// Returns the forward, the loss node, and the loss value.
pub fn loss_forward(
    params: &ModelParams,
    sample: &TrainingSample,
    cfg: &ModelConfig,
    shapes: &ModelShapes,
    reg: &ParamRegistry,
) -> Result<(Forward, NodeId, f64), TrainError> {
    let sys = &sample.system;
    if sample.integrals.n_occ() != sys.n_occ || sample.integrals.n_orb() != sys.n_mo() {
        return Err(TrainError::Shape("sample integrals do not match system".into()));
    }
    let (o, v) = (sys.n_occ, sys.n_mo() - sys.n_occ);
    if sample.target.n_occ() != o || sample.target.n_virt() != v {
        return Err(TrainError::Shape("target amplitudes do not match system".into()));
    }
    let mut fwd = forward(sys, cfg, shapes, reg, params)?;

    // network outputs in one vector, then the perturbative doubles baseline
    let mut nodes = fwd.t1_nodes.clone();
    nodes.extend_from_slice(&fwd.t2_nodes);
    let net = fwd.tape.concat(&nodes);

    let mp2 = mp2_amplitudes(&sample.integrals)?;
    let mut base = vec![0.0; o * v];
    base.extend(mp2.t2.iter().copied());
    let base_leaf = fwd.tape.leaf(base);
    let pred = fwd.tape.add(net, base_leaf);

    let mut target = Vec::with_capacity(o * v + o * o * v * v);
    target.extend(sample.target.t1.iter().copied());
    target.extend(sample.target.t2.iter().copied());
    let target_leaf = fwd.tape.leaf(target);

    let diff = fwd.tape.sub(pred, target_leaf);
    let loss_node = fwd.tape.dot(diff, diff);
    let value = fwd.tape.value(loss_node)[0];
    if !value.is_finite() {
        return Err(TrainError::NonFinite);
    }
    Ok((fwd, loss_node, value))
}

/// Loss value and its exact gradient with respect to the flat parameter
/// vector. Matches central finite differences by contract.
pub fn gradient(
    params: &ModelParams,
    sample: &TrainingSample,
    cfg: &ModelConfig,
) -> Result<(f64, Vec<f64>), TrainError> {
    let padded = sample.system.layout.padded_signature();
    let shapes = ModelShapes::new(cfg, padded)?;
    let reg = ParamRegistry::new(cfg, &shapes);
    let (fwd, loss_node, value) = loss_forward(params, sample, cfg, &shapes, &reg)?;
    let grads = fwd.tape.backward(loss_node);
    let per_segment = fwd.tape.param_gradients(&grads, reg.segments.len());
    let mut flat = vec![0.0; reg.total];
    for (seg, g) in reg.segments.iter().zip(per_segment) {
        if g.is_empty() {
            continue; // parameter with no path to the output
        }
        flat[seg.offset..seg.offset + seg.len].copy_from_slice(&g);
    }
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(TrainError::NonFinite);
    }
    Ok((value, flat))
}
