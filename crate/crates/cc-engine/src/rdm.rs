//! Approximate one-particle reduced density matrix assembled from the
//! amplitudes alone, without the response tensor.

use ndarray::Array2;

use crate::integrals::AmplitudeSet;

/// One-particle density matrix in the MO basis, symmetrized.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub gamma: Array2<f64>,
}

/// Builds the density matrix blocks
///
/// occupied-occupied:  g_ij = d_ij - Σ_a t1[i,a] t1[j,a] - 1/2 Σ_abk t2[i,k,a,b] t2[j,k,a,b]
/// virtual-virtual:    g_ab = Σ_i t1[i,a] t1[i,b] + 1/2 Σ_ijc t2[i,j,a,c] t2[i,j,b,c]
/// occupied-virtual:   g_ia = t1[i,a] + Σ_jb t2[i,j,a,b] t1[j,b]
///
/// then symmetrizes gamma <- (gamma + gamma^t)/2. The occupied and virtual
/// diagonal corrections cancel exactly, so trace(gamma) = n_occ.
pub fn xccsd_1rdm(amp: &AmplitudeSet) -> DensityMatrix {
    let (o, v) = (amp.n_occ(), amp.n_virt());
    let n = o + v;
    let mut g = Array2::zeros((n, n));

    for i in 0..o {
        for j in 0..o {
            let mut val = if i == j { 1.0 } else { 0.0 };
            for a in 0..v {
                val -= amp.t1[(i, a)] * amp.t1[(j, a)];
            }
            for k in 0..o {
                for a in 0..v {
                    for b in 0..v {
                        val -= 0.5 * amp.t2[(i, k, a, b)] * amp.t2[(j, k, a, b)];
                    }
                }
            }
            g[(i, j)] = val;
        }
    }
    for a in 0..v {
        for b in 0..v {
            let mut val = 0.0;
            for i in 0..o {
                val += amp.t1[(i, a)] * amp.t1[(i, b)];
            }
            for i in 0..o {
                for j in 0..o {
                    for c in 0..v {
                        val += 0.5 * amp.t2[(i, j, a, c)] * amp.t2[(i, j, b, c)];
                    }
                }
            }
            g[(o + a, o + b)] = val;
        }
    }
    for i in 0..o {
        for a in 0..v {
            let mut val = amp.t1[(i, a)];
            for j in 0..o {
                for b in 0..v {
                    val += amp.t2[(i, j, a, b)] * amp.t1[(j, b)];
                }
            }
            g[(i, o + a)] = val;
            g[(o + a, i)] = val;
        }
    }

    // symmetrization pass (a no-op for the blocks built above, kept as the
    // documented contract)
    let gt = g.t().to_owned();
    let gamma = (&g + &gt) * 0.5;
    DensityMatrix { gamma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{Array2 as A2, Array4};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_amp(seed: u64, o: usize, v: usize) -> AmplitudeSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t1 = A2::zeros((o, v));
        for x in t1.iter_mut() {
            *x = rng.random_range(-0.3..0.3);
        }
        let mut t2 = Array4::zeros((o, o, v, v));
        for x in t2.iter_mut() {
            *x = rng.random_range(-0.3..0.3);
        }
        AmplitudeSet { t1, t2 }
    }

    #[test]
    fn zero_amplitudes_give_reference_occupations() {
        let amp = AmplitudeSet::zeros(2, 3);
        let dm = xccsd_1rdm(&amp);
        for p in 0..5 {
            for q in 0..5 {
                let expect = if p == q && p < 2 { 1.0 } else { 0.0 };
                assert_eq!(dm.gamma[(p, q)], expect);
            }
        }
    }

    #[test]
    fn trace_equals_occupation_for_random_amplitudes() {
        for seed in 0..20 {
            let amp = random_amp(seed, 3, 4);
            let dm = xccsd_1rdm(&amp);
            let trace: f64 = (0..7).map(|p| dm.gamma[(p, p)]).sum();
            assert_abs_diff_eq!(trace, 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pure_singles_fill_offdiagonal_block() {
        let mut amp = AmplitudeSet::zeros(2, 2);
        amp.t1[(0, 1)] = 0.25;
        amp.t1[(1, 0)] = -0.5;
        let dm = xccsd_1rdm(&amp);
        assert_eq!(dm.gamma[(0, 2 + 1)], 0.25);
        assert_eq!(dm.gamma[(2 + 1, 0)], 0.25);
        assert_eq!(dm.gamma[(1, 2)], -0.5);
    }

    #[test]
    fn symmetric_within_tolerance() {
        let amp = random_amp(33, 2, 5);
        let dm = xccsd_1rdm(&amp);
        for p in 0..7 {
            for q in 0..7 {
                assert_abs_diff_eq!(dm.gamma[(p, q)], dm.gamma[(q, p)], epsilon = 1e-12);
            }
        }
    }
}
