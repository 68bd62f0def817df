//! Finite-difference verification of every tape kernel's adjoint.

use std::rc::Rc;

use amp_model::spec::{LayerNormSpec, LinearSpec, TpOptions, TpSpec};
use amp_model::tape::{NodeId, Tape};
use irreps::IrrepsSignature;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sig(s: &str) -> IrrepsSignature {
    IrrepsSignature::parse(s).unwrap()
}

fn randv(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-0.8..0.8)).collect()
}

/// Builds the graph twice per probe and compares the analytic parameter
/// gradient against central differences.
fn fd_check(params: Vec<Vec<f64>>, build: impl Fn(&mut Tape, &[NodeId]) -> NodeId) {
    let h = 1e-6;
    let run = |values: &[Vec<f64>]| -> (f64, Vec<Vec<f64>>) {
        let mut tape = Tape::new();
        let nodes: Vec<NodeId> = values
            .iter()
            .enumerate()
            .map(|(i, v)| tape.param(i, v.clone()))
            .collect();
        let out = build(&mut tape, &nodes);
        let loss = tape.value(out)[0];
        let grads = tape.backward(out);
        let pg = tape.param_gradients(&grads, values.len());
        let pg = pg
            .into_iter()
            .enumerate()
            .map(|(i, g)| if g.is_empty() { vec![0.0; values[i].len()] } else { g })
            .collect();
        (loss, pg)
    };
    let (_, analytic) = run(&params);
    for (pi, p) in params.iter().enumerate() {
        for k in 0..p.len() {
            let mut plus = params.clone();
            plus[pi][k] += h;
            let mut minus = params.clone();
            minus[pi][k] -= h;
            let (lp, _) = run(&plus);
            let (lm, _) = run(&minus);
            let numeric = (lp - lm) / (2.0 * h);
            let got = analytic[pi][k];
            let scale = numeric.abs().max(got.abs()).max(1.0);
            assert!(
                (numeric - got).abs() / scale < 1e-6,
                "param {pi}[{k}]: analytic {got:.9e} vs numeric {numeric:.9e}"
            );
        }
    }
}

#[test]
fn grad_elementwise_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = randv(&mut rng, 6);
    let b = randv(&mut rng, 6);
    let s = vec![0.7];
    fd_check(vec![a, b, s], |t, p| {
        let sum = t.add(p[0], p[1]);
        let dif = t.sub(sum, p[0]);
        let sc = t.scale(dif, -1.3);
        let ms = t.mul_scalar(sc, p[2]);
        let th = t.tanh(ms);
        t.dot(th, p[1])
    });
}

#[test]
fn grad_concat_slice() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = randv(&mut rng, 4);
    let b = randv(&mut rng, 3);
    fd_check(vec![a, b], |t, p| {
        let c = t.concat(&[p[0], p[1], p[0]]);
        let s = t.slice(c, 2, 6);
        t.dot(s, s)
    });
}

#[test]
fn grad_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = randv(&mut rng, 12); // 3 x 4
    let x = randv(&mut rng, 4);
    fd_check(vec![w, x], |t, p| {
        let y = t.dense(p[0], p[1], 3, 4);
        let z = t.tanh(y);
        t.dot(z, y)
    });
}

#[test]
fn grad_linear_blocks() {
    let spec = Rc::new(LinearSpec::new(sig("2x0e + 2x1o"), sig("3x0e + 1x1o"), 2));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let w = randv(&mut rng, spec.weight_len);
    let x = randv(&mut rng, spec.in_len());
    let spec2 = Rc::clone(&spec);
    fd_check(vec![w, x], move |t, p| {
        let y = t.linear(&spec2, p[0], p[1]);
        t.dot(y, y)
    });
}

#[test]
fn grad_tensor_product_weighted() {
    let h = sig("2x0e + 2x1o");
    let spec = Rc::new(TpSpec::new(
        h.clone(),
        irreps::sh::sh_signature(2),
        TpOptions {
            n_repeat: 2,
            max_out_degree: 1,
            target: None,
            weighted: true,
            self_product: false,
            sum_repeats: false,
        },
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = randv(&mut rng, spec.in1_len());
    let y = randv(&mut rng, spec.in2_len());
    let w = randv(&mut rng, spec.n_weights);
    let spec2 = Rc::clone(&spec);
    fd_check(vec![x, y, w], move |t, p| {
        let o = t.tensor_product(&spec2, p[0], p[1], Some(p[2]));
        t.dot(o, o)
    });
}

#[test]
fn grad_tensor_product_sum_repeats() {
    let q = sig("2x0e + 1x1e + 1x2e");
    let spec = Rc::new(TpSpec::invariant_pairing(q.clone(), 3));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = randv(&mut rng, spec.in1_len());
    let y = randv(&mut rng, spec.in2_len());
    let spec2 = Rc::clone(&spec);
    fd_check(vec![x, y], move |t, p| {
        let o = t.tensor_product(&spec2, p[0], p[1], None);
        t.dot(o, o)
    });
}

#[test]
fn grad_norm_eps() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = randv(&mut rng, 7);
    for eps in [0.3, -0.4, 1.2] {
        let xc = x.clone();
        fd_check(vec![xc, vec![eps]], |t, p| {
            let n = t.norm_eps(p[0], p[1]);
            let w = t.tanh(n);
            t.dot(n, w)
        });
    }
}

#[test]
fn grad_layer_norm() {
    let spec = Rc::new(LayerNormSpec::new(sig("3x0e + 2x1o + 1x2e"), 2));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = randv(&mut rng, spec.len());
    let gamma = randv(&mut rng, spec.n_channels);
    for (e0, e1) in [(0.2, 0.4), (-0.3, 0.15)] {
        let spec2 = Rc::clone(&spec);
        fd_check(
            vec![x.clone(), gamma.clone(), vec![e0], vec![e1]],
            move |t, p| {
                let y = t.layer_norm(&spec2, p[0], p[1], p[2], p[3]);
                t.dot(y, y)
            },
        );
    }
}

#[test]
fn grad_through_composition() {
    // a little network: linear -> norm -> tensor product -> dense -> tanh
    let h = sig("2x0e + 2x1o");
    let lin = Rc::new(LinearSpec::new(h.clone(), h.clone(), 1));
    let tp = Rc::new(TpSpec::new(
        h.clone(),
        h.clone(),
        TpOptions {
            n_repeat: 1,
            max_out_degree: 2,
            target: None,
            weighted: false,
            self_product: true,
            sum_repeats: false,
        },
    ));
    let out_dim = tp.out_len();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let w1 = randv(&mut rng, lin.weight_len);
    let x = randv(&mut rng, 8);
    let wd = randv(&mut rng, out_dim);
    let (lin2, tp2) = (Rc::clone(&lin), Rc::clone(&tp));
    fd_check(vec![w1, x, wd, vec![0.05]], move |t, p| {
        let y = t.linear(&lin2, p[0], p[1]);
        let n = t.norm_eps(y, p[3]);
        let sq = t.tensor_product(&tp2, n, n, None);
        let d = t.dense(p[2], sq, 1, out_dim);
        t.tanh(d)
    });
}

#[test]
fn zero_gradient_for_disconnected_params() {
    let mut tape = Tape::new();
    let a = tape.param(0, vec![1.0, 2.0]);
    let b = tape.param(1, vec![3.0, 4.0]);
    let loss = tape.dot(a, a);
    let grads = tape.backward(loss);
    let pg = tape.param_gradients(&grads, 2);
    assert_eq!(pg[0], vec![2.0, 4.0]);
    assert!(pg[1].is_empty() || pg[1].iter().all(|v| *v == 0.0));
    let _ = b;
}
