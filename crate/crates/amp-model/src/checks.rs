//! Runtime verification of the model's symmetry contracts: rotation
//! invariance, sign equivariance with consistent integral transport, atom
//! relabeling, pair-exchange symmetry, and two-fragment size extensivity.

use cc_engine::{generate_synthetic, mp2_amplitudes, AmplitudeSet, IntegralSet};
use irreps::{IrrepsArray, IrrepsSignature, Rotation};
use ndarray::{Array1, Array2, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;
use crate::error::ModelError;
use crate::model::predict;
use crate::params::ModelParams;
use crate::system::{Atom, BasisLayout, MolecularSystem};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckOutcome {
    fn new(name: &str, max_residual: f64, tolerance: f64) -> Self {
        CheckOutcome {
            name: name.to_string(),
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
        }
    }
}

fn max_abs_diff(a: &AmplitudeSet, b: &AmplitudeSet) -> f64 {
    let mut m: f64 = 0.0;
    for (x, y) in a.t1.iter().zip(b.t1.iter()) {
        m = m.max((x - y).abs());
    }
    for (x, y) in a.t2.iter().zip(b.t2.iter()) {
        m = m.max((x - y).abs());
    }
    m
}

fn max_rel_diff(a: &AmplitudeSet, b: &AmplitudeSet) -> f64 {
    let mut m: f64 = 0.0;
    for (x, y) in a.t1.iter().zip(b.t1.iter()) {
        m = m.max((x - y).abs() / y.abs().max(1.0));
    }
    for (x, y) in a.t2.iter().zip(b.t2.iter()) {
        m = m.max((x - y).abs() / y.abs().max(1.0));
    }
    m
}

/// Amplitudes are invariant under joint rotation of positions and
/// coefficient blocks.
pub fn rotation_check(
    sys: &MolecularSystem,
    ints: &IntegralSet,
    params: &ModelParams,
    cfg: &ModelConfig,
    trials: usize,
    seed: u64,
) -> Result<CheckOutcome, ModelError> {
    let base = predict(sys, ints, params, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let rot = Rotation::random(&mut rng);
        let rotated = sys.rotated(&rot)?;
        let pred = predict(&rotated, ints, params, cfg)?;
        worst = worst.max(max_rel_diff(&pred, &base));
    }
    Ok(CheckOutcome::new("rotation-invariance", worst, 1e-9))
}

/// Flips the integrals consistently with an overall sign change of orbital
/// `p`: every integral picks up (-1) per occurrence of p in its indices.
pub fn sign_flip_integrals(set: &IntegralSet, p: usize) -> IntegralSet {
    let n = set.n_orb();
    let mut h = set.h.clone();
    let mut eri = set.eri.clone();
    for q in 0..n {
        for r in 0..n {
            let count = (q == p) as u32 + (r == p) as u32;
            if count % 2 == 1 {
                h[(q, r)] = -h[(q, r)];
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let count = (a == p) as u32
                        + (b == p) as u32
                        + (c == p) as u32
                        + (d == p) as u32;
                    if count % 2 == 1 {
                        eri[(a, b, c, d)] = -eri[(a, b, c, d)];
                    }
                }
            }
        }
    }
    IntegralSet::new(n, set.n_occ(), set.core_energy, h, eri, set.eps.clone())
        .expect("sign transport preserves symmetry")
}

/// Flipping one orbital's coefficients (with consistent integral transport)
/// flips every amplitude in which that orbital appears an odd number of
/// times and leaves all others unchanged.
pub fn sign_check(
    sys: &MolecularSystem,
    ints: &IntegralSet,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<CheckOutcome, ModelError> {
    let base = predict(sys, ints, params, cfg)?;
    let (o, v) = (sys.n_occ, sys.n_mo() - sys.n_occ);
    let mut worst: f64 = 0.0;
    for p in 0..sys.n_mo() {
        let flipped_sys = sys.sign_flipped(p);
        let flipped_ints = sign_flip_integrals(ints, p);
        let pred = predict(&flipped_sys, &flipped_ints, params, cfg)?;
        for i in 0..o {
            for a in 0..v {
                let count = (i == p) as u32 + (o + a == p) as u32;
                let expect = if count % 2 == 1 { -base.t1[(i, a)] } else { base.t1[(i, a)] };
                worst = worst.max((pred.t1[(i, a)] - expect).abs());
            }
        }
        for i in 0..o {
            for j in 0..o {
                for a in 0..v {
                    for bq in 0..v {
                        let count = (i == p) as u32
                            + (j == p) as u32
                            + (o + a == p) as u32
                            + (o + bq == p) as u32;
                        let t = base.t2[(i, j, a, bq)];
                        let expect = if count % 2 == 1 { -t } else { t };
                        worst = worst.max((pred.t2[(i, j, a, bq)] - expect).abs());
                    }
                }
            }
        }
    }
    Ok(CheckOutcome::new("sign-equivariance", worst, 1e-12))
}

/// Relabeling atoms (with consistent coefficient reindexing) leaves the
/// amplitudes unchanged.
pub fn permutation_check(
    sys: &MolecularSystem,
    ints: &IntegralSet,
    params: &ModelParams,
    cfg: &ModelConfig,
    trials: usize,
    seed: u64,
) -> Result<CheckOutcome, ModelError> {
    let base = predict(sys, ints, params, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut perm: Vec<usize> = (0..sys.n_atoms()).collect();
        // Fisher-Yates
        for i in (1..perm.len()).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        let pred = predict(&sys.permuted(&perm), ints, params, cfg)?;
        worst = worst.max(max_abs_diff(&pred, &base));
    }
    Ok(CheckOutcome::new("permutation-invariance", worst, 1e-12))
}

/// Predicted doubles keep the pair-exchange symmetry exactly.
pub fn pair_exchange_check(
    sys: &MolecularSystem,
    ints: &IntegralSet,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<CheckOutcome, ModelError> {
    let pred = predict(sys, ints, params, cfg)?;
    let (o, v) = (pred.n_occ(), pred.n_virt());
    let mut worst: f64 = 0.0;
    for i in 0..o {
        for j in 0..o {
            for a in 0..v {
                for b in 0..v {
                    worst = worst.max((pred.t2[(i, j, a, b)] - pred.t2[(j, i, b, a)]).abs());
                }
            }
        }
    }
    Ok(CheckOutcome::new("pair-exchange", worst, 0.0))
}

/// A deterministic random system over a single-element layout, paired with
/// a canonical synthetic integral set of matching dimensions.
pub fn sample_system(
    seed: u64,
    n_atoms: usize,
    n_mo: usize,
    n_occ: usize,
    spread: f64,
) -> (MolecularSystem, IntegralSet) {
    let layout = BasisLayout::new([(
        "X".to_string(),
        IrrepsSignature::parse("2x0e + 1x1o + 1x2e").unwrap(),
    )]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms: Vec<Atom> = (0..n_atoms)
        .map(|i| Atom {
            element: "X".into(),
            position: [
                i as f64 * 1.3 + 0.2 * rng.random_range(-1.0..1.0),
                spread * rng.random_range(-1.0..1.0),
                spread * rng.random_range(-1.0..1.0),
            ],
        })
        .collect();
    let sig = layout.signature_of("X").unwrap().clone();
    let coeffs = (0..n_mo)
        .map(|_| {
            (0..n_atoms)
                .map(|_| {
                    let vals =
                        (0..sig.total_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                    IrrepsArray::new(sig.clone(), vals).unwrap()
                })
                .collect()
        })
        .collect();
    let sys = MolecularSystem {
        atoms,
        n_occ,
        coeffs,
        orbital_energies: None,
        layout,
    };
    let ints = generate_synthetic(seed.wrapping_add(17), n_mo, n_occ, 0.1).unwrap();
    (sys, ints)
}

/// Combines two systems into one with all inter-fragment distances shifted
/// apart by `offset` along x, coefficients zero across fragments.
pub fn combine_fragments(
    a: &MolecularSystem,
    b: &MolecularSystem,
    offset: f64,
) -> MolecularSystem {
    assert_eq!(a.layout, b.layout, "fragments must share one basis layout");
    let mut atoms = a.atoms.clone();
    atoms.extend(b.atoms.iter().map(|at| Atom {
        element: at.element.clone(),
        position: [at.position[0] + offset, at.position[1], at.position[2]],
    }));
    let (oa, ob) = (a.n_occ, b.n_occ);
    let (na, nb) = (a.n_mo(), b.n_mo());
    let zero_on = |sys: &MolecularSystem, other: &MolecularSystem, mo: usize| -> Vec<IrrepsArray> {
        let mut row = sys.coeffs[mo].clone();
        row.extend(other.atoms.iter().map(|at| {
            IrrepsArray::zeros(sys.layout.signature_of(&at.element).unwrap().clone())
        }));
        row
    };
    let zero_pre = |sys: &MolecularSystem, other: &MolecularSystem, mo: usize| -> Vec<IrrepsArray> {
        let mut row: Vec<IrrepsArray> = other
            .atoms
            .iter()
            .map(|at| IrrepsArray::zeros(sys.layout.signature_of(&at.element).unwrap().clone()))
            .collect();
        row.extend(sys.coeffs[mo].clone());
        row
    };
    // combined order: A-occ, B-occ, A-virt, B-virt
    let mut coeffs = Vec::new();
    for i in 0..oa {
        coeffs.push(zero_on(a, b, i));
    }
    for i in 0..ob {
        coeffs.push(zero_pre(b, a, i));
    }
    for x in oa..na {
        coeffs.push(zero_on(a, b, x));
    }
    for x in ob..nb {
        coeffs.push(zero_pre(b, a, x));
    }
    MolecularSystem {
        atoms,
        n_occ: oa + ob,
        coeffs,
        orbital_energies: None,
        layout: a.layout.clone(),
    }
}

/// Block-diagonal Hamiltonian of two non-interacting fragments, in the
/// combined orbital order of [`combine_fragments`].
pub fn combine_integrals(a: &IntegralSet, b: &IntegralSet) -> IntegralSet {
    let (oa, ob) = (a.n_occ(), b.n_occ());
    let (na, nb) = (a.n_orb(), b.n_orb());
    let n = na + nb;
    // map fragment orbitals into the combined ordering
    let map_a: Vec<usize> = (0..na)
        .map(|p| if p < oa { p } else { oa + ob + (p - oa) })
        .collect();
    let map_b: Vec<usize> = (0..nb)
        .map(|p| if p < ob { oa + p } else { oa + ob + (na - oa) + (p - ob) })
        .collect();
    let mut h = Array2::zeros((n, n));
    let mut eri = Array4::zeros((n, n, n, n));
    let mut eps = Array1::zeros(n);
    for p in 0..na {
        eps[map_a[p]] = a.eps[p];
        for q in 0..na {
            h[(map_a[p], map_a[q])] = a.h[(p, q)];
        }
    }
    for p in 0..nb {
        eps[map_b[p]] = b.eps[p];
        for q in 0..nb {
            h[(map_b[p], map_b[q])] = b.h[(p, q)];
        }
    }
    for p in 0..na {
        for q in 0..na {
            for r in 0..na {
                for s in 0..na {
                    eri[(map_a[p], map_a[q], map_a[r], map_a[s])] = a.eri[(p, q, r, s)];
                }
            }
        }
    }
    for p in 0..nb {
        for q in 0..nb {
            for r in 0..nb {
                for s in 0..nb {
                    eri[(map_b[p], map_b[q], map_b[r], map_b[s])] = b.eri[(p, q, r, s)];
                }
            }
        }
    }
    IntegralSet::new(n, oa + ob, a.core_energy + b.core_energy, h, eri, eps)
        .expect("block-diagonal data is symmetric")
}

/// Two-fragment size extensivity: cross-fragment amplitudes vanish exactly
/// and intra-fragment amplitudes match each fragment predicted alone.
pub fn size_extensivity_check(
    params: &ModelParams,
    cfg: &ModelConfig,
    seed: u64,
) -> Result<CheckOutcome, ModelError> {
    let (sys_a, ints_a) = sample_system(seed, 2, 4, 1, 0.4);
    let (mut sys_b, ints_b) = sample_system(seed + 1, 2, 3, 1, 0.4);
    // move fragment B far away up front, so its internal geometry is
    // bitwise identical between the standalone and combined predictions
    let offset = 40.0 * cfg.r_max;
    for at in &mut sys_b.atoms {
        at.position[0] += offset;
    }
    let sys = combine_fragments(&sys_a, &sys_b, 0.0);
    let ints = combine_integrals(&ints_a, &ints_b);

    let combined = predict(&sys, &ints, params, cfg)?;
    let alone_a = predict(&sys_a, &ints_a, params, cfg)?;
    let alone_b = predict(&sys_b, &ints_b, params, cfg)?;

    let (oa, ob) = (1usize, 1usize);
    let (va, vb) = (3usize, 2usize);
    let o = oa + ob;
    let frag_of_occ = |i: usize| usize::from(i >= oa);
    let frag_of_virt = |a: usize| usize::from(a >= va);
    let mut worst: f64 = 0.0;

    for i in 0..o {
        for a in 0..va + vb {
            let (fi, fa) = (frag_of_occ(i), frag_of_virt(a));
            let got = combined.t1[(i, a)];
            if fi != fa {
                worst = worst.max(got.abs());
            } else if fi == 0 {
                worst = worst.max((got - alone_a.t1[(i, a)]).abs());
            } else {
                worst = worst.max((got - alone_b.t1[(i - oa, a - va)]).abs());
            }
        }
    }
    for i in 0..o {
        for j in 0..o {
            for a in 0..va + vb {
                for b in 0..va + vb {
                    let frs = [frag_of_occ(i), frag_of_occ(j), frag_of_virt(a), frag_of_virt(b)];
                    let got = combined.t2[(i, j, a, b)];
                    if frs.iter().any(|f| *f != frs[0]) {
                        worst = worst.max(got.abs());
                    } else if frs[0] == 0 {
                        worst = worst.max((got - alone_a.t2[(i, j, a, b)]).abs());
                    } else {
                        worst = worst.max(
                            (got - alone_b.t2[(i - oa, j - oa, a - va, b - va)]).abs(),
                        );
                    }
                }
            }
        }
    }
    Ok(CheckOutcome::new("size-extensivity", worst, 0.0))
}

/// Zero-coefficient orbitals contribute exactly zero network amplitude.
pub fn zero_orbital_check(
    sys: &MolecularSystem,
    ints: &IntegralSet,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<CheckOutcome, ModelError> {
    let p = sys.n_mo() - 1; // zero out the last virtual
    let mut zeroed = sys.clone();
    for arr in &mut zeroed.coeffs[p] {
        arr.values_mut().fill(0.0);
    }
    let pred = predict(&zeroed, ints, params, cfg)?;
    let mp2 = mp2_amplitudes(ints)?;
    let (o, v) = (pred.n_occ(), pred.n_virt());
    let mut worst: f64 = 0.0;
    for i in 0..o {
        for a in 0..v {
            if o + a == p || i == p {
                worst = worst.max(pred.t1[(i, a)].abs());
            }
        }
    }
    for i in 0..o {
        for j in 0..o {
            for a in 0..v {
                for b in 0..v {
                    if [i, j, o + a, o + b].contains(&p) {
                        worst =
                            worst.max((pred.t2[(i, j, a, b)] - mp2.t2[(i, j, a, b)]).abs());
                    }
                }
            }
        }
    }
    Ok(CheckOutcome::new("zero-orbital", worst, 0.0))
}

/// Runs the full suite at its standard tolerances.
pub fn run_all(
    sys: &MolecularSystem,
    ints: &IntegralSet,
    params: &ModelParams,
    cfg: &ModelConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<CheckOutcome>, ModelError> {
    if trials == 0 {
        return Ok(Vec::new());
    }
    Ok(vec![
        rotation_check(sys, ints, params, cfg, trials, seed)?,
        sign_check(sys, ints, params, cfg)?,
        permutation_check(sys, ints, params, cfg, trials.min(5), seed + 1)?,
        pair_exchange_check(sys, ints, params, cfg)?,
        size_extensivity_check(params, cfg, seed + 2)?,
        zero_orbital_check(sys, ints, params, cfg)?,
    ])
}
