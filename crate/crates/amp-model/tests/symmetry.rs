//! End-to-end symmetry contracts of the prediction pipeline, on untrained
//! randomly initialized parameters.

use amp_model::checks::{
    self, pair_exchange_check, permutation_check, rotation_check, sign_check,
    size_extensivity_check, zero_orbital_check,
};
use amp_model::{predict, ModelConfig, ModelParams, ModelShapes, ParamRegistry};
use cc_engine::mp2_amplitudes;

fn setup(
    seed: u64,
    cfg: &ModelConfig,
) -> (
    amp_model::MolecularSystem,
    cc_engine::IntegralSet,
    ModelParams,
) {
    let (sys, ints) = checks::sample_system(seed, 3, 6, 2, 0.5);
    let shapes = ModelShapes::new(cfg, sys.layout.padded_signature()).unwrap();
    let reg = ParamRegistry::new(cfg, &shapes);
    let params = ModelParams::init(&reg, seed + 1000);
    (sys, ints, params)
}

#[test]
fn zero_parameters_reproduce_perturbative_baseline() {
    let cfg = ModelConfig::desk();
    let (sys, ints, _) = setup(1, &cfg);
    let shapes = ModelShapes::new(&cfg, sys.layout.padded_signature()).unwrap();
    let reg = ParamRegistry::new(&cfg, &shapes);
    let zero = ModelParams::zeros(&reg);
    let pred = predict(&sys, &ints, &zero, &cfg).unwrap();
    let mp2 = mp2_amplitudes(&ints).unwrap();
    assert!(pred.t1.iter().all(|v| *v == 0.0));
    for (a, b) in pred.t2.iter().zip(mp2.t2.iter()) {
        assert_eq!(*a, *b);
    }
}

#[test]
fn rotation_invariance_over_twenty_rotations() {
    let cfg = ModelConfig::desk();
    let (sys, ints, params) = setup(2, &cfg);
    let out = rotation_check(&sys, &ints, &params, &cfg, 20, 77).unwrap();
    assert!(out.pass, "{}: residual {:.3e}", out.name, out.max_residual);
}

#[test]
fn sign_equivariance_with_integral_transport() {
    let cfg = ModelConfig::desk();
    let (sys, ints, params) = setup(3, &cfg);
    let out = sign_check(&sys, &ints, &params, &cfg).unwrap();
    assert!(out.pass, "{}: residual {:.3e}", out.name, out.max_residual);
}

#[test]
fn permutation_invariance() {
    let cfg = ModelConfig::desk();
    let (sys, ints, params) = setup(4, &cfg);
    let out = permutation_check(&sys, &ints, &params, &cfg, 5, 41).unwrap();
    assert!(out.pass, "{}: residual {:.3e}", out.name, out.max_residual);
}

#[test]
fn pair_exchange_symmetry_is_exact() {
    let cfg = ModelConfig::desk();
    let (sys, ints, params) = setup(5, &cfg);
    let out = pair_exchange_check(&sys, &ints, &params, &cfg).unwrap();
    assert_eq!(out.max_residual, 0.0);
}

#[test]
fn size_extensivity_two_fragments() {
    let cfg = ModelConfig::desk();
    let shapes = ModelShapes::new(
        &cfg,
        checks::sample_system(1, 2, 3, 1, 0.1).0.layout.padded_signature(),
    )
    .unwrap();
    let reg = ParamRegistry::new(&cfg, &shapes);
    let params = ModelParams::init(&reg, 99);
    let out = size_extensivity_check(&params, &cfg, 11).unwrap();
    assert_eq!(
        out.max_residual, 0.0,
        "cross-fragment leakage {:.3e}",
        out.max_residual
    );
}

#[test]
fn zero_orbital_contributes_nothing() {
    let cfg = ModelConfig::desk();
    let (sys, ints, params) = setup(6, &cfg);
    let out = zero_orbital_check(&sys, &ints, &params, &cfg).unwrap();
    assert_eq!(out.max_residual, 0.0);
}

#[test]
fn even_monomial_injection_breaks_sign_equivariance() {
    // negative control: the debug switch must make the sign check fail
    // while rotation invariance keeps holding
    let mut cfg = ModelConfig::desk();
    cfg.debug_even_monomial = true;
    let (sys, ints, params) = setup(7, &cfg);
    let sign = sign_check(&sys, &ints, &params, &cfg).unwrap();
    assert!(!sign.pass, "even monomial went unnoticed");
    let rot = rotation_check(&sys, &ints, &params, &cfg, 5, 3).unwrap();
    assert!(rot.pass, "rotation residual {:.3e}", rot.max_residual);
}

#[test]
fn alternative_norm_placement_keeps_symmetries() {
    let mut cfg = ModelConfig::desk();
    cfg.norm_before_block = true;
    let (sys, ints, params) = setup(8, &cfg);
    assert!(sign_check(&sys, &ints, &params, &cfg).unwrap().pass);
    assert!(rotation_check(&sys, &ints, &params, &cfg, 5, 5).unwrap().pass);
}

#[test]
fn stack_without_layers_is_identity_on_features() {
    let mut cfg = ModelConfig::desk();
    cfg.n_layers = 0;
    let (sys, _, _) = setup(9, &cfg);
    let shapes = ModelShapes::new(&cfg, sys.layout.padded_signature()).unwrap();
    let reg = ParamRegistry::new(&cfg, &shapes);
    let params = ModelParams::init(&reg, 2);
    let fwd = amp_model::forward(&sys, &cfg, &shapes, &reg, &params).unwrap();
    // features come out exactly as embedded: rebuild the embedding alone
    let graphs = amp_model::build_mo_graphs(&sys, &params, &cfg).unwrap();
    for (p, node) in fwd.features.iter().enumerate() {
        let flat: Vec<f64> = graphs.features[p]
            .iter()
            .flat_map(|arr| arr.values().iter().copied())
            .collect();
        assert_eq!(fwd.tape.value(*node), flat.as_slice());
    }
}

#[test]
fn predict_rejects_mismatched_integrals() {
    let cfg = ModelConfig::desk();
    let (sys, _, params) = setup(10, &cfg);
    let wrong = cc_engine::generate_synthetic(1, 8, 2, 0.1).unwrap();
    assert!(predict(&sys, &wrong, &params, &cfg).is_err());
}

#[test]
fn mo_graphs_share_topology_and_respect_cutoff() {
    let cfg = ModelConfig::desk();
    let (sys, _, params) = setup(11, &cfg);
    let graphs = amp_model::build_mo_graphs(&sys, &params, &cfg).unwrap();
    assert_eq!(graphs.features.len(), sys.n_mo());
    for e in &graphs.graph.edges {
        assert!(e.dist < cfg.r_max);
        assert_ne!(e.from, e.to);
    }
    // translation leaves the edge set unchanged
    let mut shifted = sys.clone();
    for atom in &mut shifted.atoms {
        atom.position[0] += 13.7;
        atom.position[1] -= 4.1;
        atom.position[2] += 0.9;
    }
    let g2 = amp_model::build_graph(&shifted, &cfg);
    assert_eq!(graphs.graph.edges.len(), g2.edges.len());
    for (a, b) in graphs.graph.edges.iter().zip(g2.edges.iter()) {
        assert_eq!((a.from, a.to), (b.from, b.to));
        assert!((a.dist - b.dist).abs() < 1e-12);
    }
    // two atoms beyond the cutoff produce no edges
    let (far, _) = checks::sample_system(21, 2, 3, 1, 0.0);
    let mut far = far;
    far.atoms[1].position = [far.atoms[0].position[0] + 5.0, 0.0, 0.0];
    let g3 = amp_model::build_graph(&far, &cfg);
    assert!(g3.edges.is_empty());
}

#[test]
fn attention_single_row_closed_form() {
    // one feature vector attending to itself: with matching query/key
    // weights and zero norm epsilons the score is exactly 1 and the output
    // is the normalized value row scaled by the head weight
    use amp_model::spec::LinearSpec;
    use std::rc::Rc;
    let h = irreps::IrrepsSignature::parse("2x0e + 1x1o").unwrap();
    let spec = Rc::new(LinearSpec::new(h.clone(), h.clone(), 1));
    let mut tape = amp_model::tape::Tape::new();
    let x = tape.leaf(vec![0.3, -0.2, 0.9, 0.4, -1.1]);
    let wqk = tape.leaf(vec![0.7, -0.1, 0.2, 0.5, 0.3]); // shared q/k weights
    let wv = tape.leaf(vec![-0.4, 0.8, 0.1, 0.2, -0.6]);
    let zero = tape.leaf(vec![0.0]);
    let eps_o = tape.leaf(vec![0.25]);
    let mix = tape.leaf(vec![1.7]);

    let q = tape.linear(&spec, wqk, x);
    let qn = tape.norm_eps(q, zero);
    let k = tape.linear(&spec, wqk, x);
    let kn = tape.norm_eps(k, zero);
    let s = tape.dot(qn, kn);
    assert!((tape.value(s)[0] - 1.0).abs() < 1e-12);

    let v = tape.linear(&spec, wv, x);
    let o_tilde = tape.mul_scalar(v, s);
    let o = tape.norm_eps(o_tilde, eps_o);
    let out = tape.mul_scalar(o, mix);

    // closed form: Norm_eps(V) * mix
    let vn = tape.norm_eps(v, eps_o);
    let expect = tape.mul_scalar(vn, mix);
    for (a, b) in tape.value(out).iter().zip(tape.value(expect).iter()) {
        assert!((a - b).abs() < 1e-12);
    }
}
