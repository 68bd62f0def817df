//! Second-order perturbative amplitudes and the correlation energy
//! functional, closed-shell spatial form.

use ndarray::Array4;

use crate::error::CcError;
use crate::integrals::{AmplitudeSet, IntegralSet};

const DEGENERACY_FLOOR: f64 = 1e-10;

/// First-order doubles `t2[i,j,a,b] = (ia|jb) / (e_i + e_j - e_a - e_b)`,
/// with zero singles.
pub fn mp2_amplitudes(set: &IntegralSet) -> Result<AmplitudeSet, CcError> {
    let (o, v) = (set.n_occ(), set.n_virt());
    if v == 0 {
        return Err(CcError::InvalidDimensions(
            "no virtual orbitals: correlation methods need n_occ < n_orb".into(),
        ));
    }
    let mut t2 = Array4::zeros((o, o, v, v));
    for i in 0..o {
        for j in 0..o {
            for a in 0..v {
                for b in 0..v {
                    // grouped so the value is bitwise symmetric under (ij|ab) pair exchange
                    let denom =
                        (set.eps[i] + set.eps[j]) - (set.eps[o + a] + set.eps[o + b]);
                    if denom.abs() < DEGENERACY_FLOOR {
                        return Err(CcError::DegenerateGap(denom.abs()));
                    }
                    t2[(i, j, a, b)] = set.eri[(i, o + a, j, o + b)] / denom;
                }
            }
        }
    }
    Ok(AmplitudeSet { t1: ndarray::Array2::zeros((o, v)), t2 })
}

/// Correlation energy of a closed-shell amplitude set:
/// `Σ_ijab (t2[ijab] + t1[ia] t1[jb]) (2 (ia|jb) - (ib|ja))`.
///
/// The total energy is core + reference + this value, assembled by callers.
pub fn correlation_energy(set: &IntegralSet, amp: &AmplitudeSet) -> Result<f64, CcError> {
    let (o, v) = (set.n_occ(), set.n_virt());
    if amp.n_occ() != o || amp.n_virt() != v {
        return Err(CcError::ShapeMismatch(format!(
            "amplitudes ({}, {}) vs integrals ({o}, {v})",
            amp.n_occ(),
            amp.n_virt()
        )));
    }
    let mut e = 0.0;
    for i in 0..o {
        for j in 0..o {
            for a in 0..v {
                for b in 0..v {
                    let tau = amp.t2[(i, j, a, b)] + amp.t1[(i, a)] * amp.t1[(j, b)];
                    e += tau
                        * (2.0 * set.eri[(i, o + a, j, o + b)] - set.eri[(i, o + b, j, o + a)]);
                }
            }
        }
    }
    Ok(e)
}

/// Second-order energy summed directly from integrals and denominators,
/// without building amplitudes. Used as an independent route against
/// `correlation_energy(mp2_amplitudes(..))`.
pub fn mp2_energy_direct(set: &IntegralSet) -> Result<f64, CcError> {
    let (o, v) = (set.n_occ(), set.n_virt());
    if v == 0 {
        return Err(CcError::InvalidDimensions("no virtual orbitals".into()));
    }
    let mut e = 0.0;
    for i in 0..o {
        for j in 0..o {
            for a in 0..v {
                for b in 0..v {
                    let denom = set.eps[i] + set.eps[j] - set.eps[o + a] - set.eps[o + b];
                    if denom.abs() < DEGENERACY_FLOOR {
                        return Err(CcError::DegenerateGap(denom.abs()));
                    }
                    let g = set.eri[(i, o + a, j, o + b)];
                    let gx = set.eri[(i, o + b, j, o + a)];
                    e += g * (2.0 * g - gx) / denom;
                }
            }
        }
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::generate_synthetic;
    use approx::assert_abs_diff_eq;
    use ndarray::{Array1, Array2};

    #[test]
    fn zero_interaction_gives_zero_amplitudes() {
        let set = generate_synthetic(1, 5, 2, 0.0).unwrap();
        let amp = mp2_amplitudes(&set).unwrap();
        assert!(amp.t2.iter().all(|v| *v == 0.0));
        assert_eq!(correlation_energy(&set, &amp).unwrap(), 0.0);
    }

    #[test]
    fn single_pair_closed_form() {
        // one occupied, one virtual: t2 = K / (-2 gap)
        let n = 2;
        let k_int = 0.17;
        let mut eri = ndarray::Array4::zeros((n, n, n, n));
        for idx in crate::integrals::permutations8(0, 1, 0, 1) {
            eri[idx] = k_int;
        }
        let eps = Array1::from(vec![-1.0, 0.5]);
        let set = IntegralSet::new(n, 1, 0.0, Array2::zeros((n, n)), eri, eps).unwrap();
        let amp = mp2_amplitudes(&set).unwrap();
        let gap = 0.5 - (-1.0);
        assert_abs_diff_eq!(amp.t2[(0, 0, 0, 0)], k_int / (-2.0 * gap), epsilon = 1e-15);
    }

    #[test]
    fn amplitudes_have_exact_pair_symmetry() {
        let set = generate_synthetic(5, 7, 3, 0.2).unwrap();
        let amp = mp2_amplitudes(&set).unwrap();
        let (o, v) = (3, 4);
        for i in 0..o {
            for j in 0..o {
                for a in 0..v {
                    for b in 0..v {
                        assert_eq!(amp.t2[(i, j, a, b)], amp.t2[(j, i, b, a)]);
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_gap_detected() {
        let n = 3;
        let eri = ndarray::Array4::zeros((n, n, n, n));
        let eps = Array1::from(vec![-1.0, -1.0 + 5e-11, 1.0]);
        // eps[0] + eps[0] - eps[1] - eps[1] is tiny? No: occupied are 0,1 and
        // virtual is 2 with n_occ = 2; make i=0,j=0,a,b such that denom ~ 0:
        // use eps where 2*eps_occ ~ eps_virt pairings collapse instead.
        let set = IntegralSet::new(
            n,
            1,
            0.0,
            Array2::zeros((n, n)),
            eri,
            Array1::from(vec![-1.0, -1.0 + 2e-11, 1.0]),
        )
        .unwrap();
        let _ = set;
        // denominators for n_occ=1: e0+e0-ea-eb, never degenerate here; build
        // an explicitly degenerate case: e_i = e_a.
        let set2 = IntegralSet::new(
            n,
            1,
            0.0,
            Array2::zeros((n, n)),
            ndarray::Array4::zeros((n, n, n, n)),
            Array1::from(vec![0.5, 0.5 + 1e-12, 1.0]),
        )
        .unwrap();
        assert!(matches!(mp2_amplitudes(&set2), Err(CcError::DegenerateGap(_))));
        let _ = eps;
    }

    #[test]
    fn energy_invariant_under_pair_swap_of_t2() {
        let set = generate_synthetic(9, 6, 2, 0.15).unwrap();
        let amp = mp2_amplitudes(&set).unwrap();
        let mut swapped = amp.clone();
        let (o, v) = (amp.n_occ(), amp.n_virt());
        for i in 0..o {
            for j in 0..o {
                for a in 0..v {
                    for b in 0..v {
                        swapped.t2[(i, j, a, b)] = amp.t2[(j, i, b, a)];
                    }
                }
            }
        }
        let e1 = correlation_energy(&set, &amp).unwrap();
        let e2 = correlation_energy(&set, &swapped).unwrap();
        assert_abs_diff_eq!(e1, e2, epsilon = 1e-15);
    }
}
