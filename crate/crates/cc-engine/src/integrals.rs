use ndarray::{Array1, Array2, Array4};

use crate::error::CcError;

const SYM_TOL: f64 = 1e-12;

/// One- and two-electron integrals, orbital energies and the core energy of
/// a closed-shell system: the full Hamiltonian data.
#[derive(Debug, Clone)]
pub struct IntegralSet {
    n_orb: usize,
    n_occ: usize,
    pub core_energy: f64,
    /// One-electron matrix h_pq, symmetric.
    pub h: Array2<f64>,
    /// Two-electron integrals (pq|rs) in chemists' notation, 8-fold symmetric.
    pub eri: Array4<f64>,
    /// Orbital energies.
    pub eps: Array1<f64>,
}

impl IntegralSet {
    /// Validates symmetry and dimension invariants. `n_occ == n_orb`
    /// (no virtuals) is representable so single-determinant edge cases can be
    /// expressed; correlation methods reject it separately.
    pub fn new(
        n_orb: usize,
        n_occ: usize,
        core_energy: f64,
        h: Array2<f64>,
        eri: Array4<f64>,
        eps: Array1<f64>,
    ) -> Result<Self, CcError> {
        if n_occ == 0 || n_occ > n_orb {
            return Err(CcError::InvalidDimensions(format!(
                "n_occ = {n_occ} must satisfy 0 < n_occ <= n_orb = {n_orb}"
            )));
        }
        if h.shape() != [n_orb, n_orb] || eps.len() != n_orb {
            return Err(CcError::InvalidDimensions("h/eps shape".into()));
        }
        if eri.shape() != [n_orb, n_orb, n_orb, n_orb] {
            return Err(CcError::InvalidDimensions("eri shape".into()));
        }
        for p in 0..n_orb {
            for q in 0..n_orb {
                if (h[(p, q)] - h[(q, p)]).abs() > SYM_TOL {
                    return Err(CcError::ShapeMismatch(format!(
                        "h not symmetric at ({p},{q})"
                    )));
                }
            }
        }
        let set = IntegralSet { n_orb, n_occ, core_energy, h, eri, eps };
        set.check_eri_symmetry()?;
        Ok(set)
    }

    fn check_eri_symmetry(&self) -> Result<(), CcError> {
        let n = self.n_orb;
        for p in 0..n {
            for q in 0..=p {
                for r in 0..=p {
                    for s in 0..=r {
                        let v = self.eri[(p, q, r, s)];
                        for (a, b, c, d) in permutations8(p, q, r, s) {
                            if (self.eri[(a, b, c, d)] - v).abs() > SYM_TOL {
                                return Err(CcError::ShapeMismatch(format!(
                                    "eri symmetry broken at ({p},{q},{r},{s})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_orb(&self) -> usize {
        self.n_orb
    }

    pub fn n_occ(&self) -> usize {
        self.n_occ
    }

    pub fn n_virt(&self) -> usize {
        self.n_orb - self.n_occ
    }

    /// Mean-field Fock matrix F_pq = h_pq + Σ_i [2(pq|ii) - (pi|iq)].
    pub fn fock(&self) -> Array2<f64> {
        let n = self.n_orb;
        let mut f = self.h.clone();
        for p in 0..n {
            for q in 0..n {
                let mut acc = 0.0;
                for i in 0..self.n_occ {
                    acc += 2.0 * self.eri[(p, q, i, i)] - self.eri[(p, i, i, q)];
                }
                f[(p, q)] += acc;
            }
        }
        f
    }

    /// Hartree-Fock reference energy (without core):
    /// 2 Σ_i h_ii + Σ_ij [2(ii|jj) - (ij|ji)].
    pub fn reference_energy(&self) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n_occ {
            e += 2.0 * self.h[(i, i)];
            for j in 0..self.n_occ {
                e += 2.0 * self.eri[(i, i, j, j)] - self.eri[(i, j, j, i)];
            }
        }
        e
    }

    /// Chemists' integral (pq|rs) with occupied/virtual split indices:
    /// `ov(i, a)` etc. address occupied i and virtual a = 0..n_virt.
    #[inline]
    pub fn ov_idx(&self, a: usize) -> usize {
        self.n_occ + a
    }
}

/// All 8 index permutations equivalent to (pq|rs) for real orbitals.
pub(crate) fn permutations8(
    p: usize,
    q: usize,
    r: usize,
    s: usize,
) -> [(usize, usize, usize, usize); 8] {
    [
        (p, q, r, s),
        (q, p, r, s),
        (p, q, s, r),
        (q, p, s, r),
        (r, s, p, q),
        (s, r, p, q),
        (r, s, q, p),
        (s, r, q, p),
    ]
}

/// Symmetrizes an arbitrary 4-index array over the 8 permutations.
pub(crate) fn symmetrize_eri(eri: &mut Array4<f64>) {
    let n = eri.shape()[0];
    for p in 0..n {
        for q in 0..=p {
            for r in 0..=p {
                for s in 0..=r {
                    let perms = permutations8(p, q, r, s);
                    let avg = perms.iter().map(|&idx| eri[idx]).sum::<f64>() / 8.0;
                    for idx in perms {
                        eri[idx] = avg;
                    }
                }
            }
        }
    }
}

/// Singles and doubles excitation amplitudes of a closed-shell reference.
///
/// `t2` carries the pair-exchange symmetry `t2[i,j,a,b] = t2[j,i,b,a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSet {
    /// t_i^a, shape (n_occ, n_virt).
    pub t1: Array2<f64>,
    /// t_ij^ab, shape (n_occ, n_occ, n_virt, n_virt).
    pub t2: Array4<f64>,
}

impl AmplitudeSet {
    pub fn zeros(n_occ: usize, n_virt: usize) -> Self {
        AmplitudeSet {
            t1: Array2::zeros((n_occ, n_virt)),
            t2: Array4::zeros((n_occ, n_occ, n_virt, n_virt)),
        }
    }

    pub fn n_occ(&self) -> usize {
        self.t1.shape()[0]
    }

    pub fn n_virt(&self) -> usize {
        self.t1.shape()[1]
    }

    pub fn check_pair_symmetry(&self, tol: f64) -> bool {
        let (o, v) = (self.n_occ(), self.n_virt());
        for i in 0..o {
            for j in 0..o {
                for a in 0..v {
                    for b in 0..v {
                        if (self.t2[(i, j, a, b)] - self.t2[(j, i, b, a)]).abs() > tol {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// L2 norm of the concatenated (t1, t2) vector.
    pub fn norm(&self) -> f64 {
        let s1: f64 = self.t1.iter().map(|v| v * v).sum();
        let s2: f64 = self.t2.iter().map(|v| v * v).sum();
        (s1 + s2).sqrt()
    }

    /// Elementwise difference norm, the solver's convergence metric.
    pub fn update_norm(&self, other: &AmplitudeSet) -> f64 {
        let s1: f64 = self
            .t1
            .iter()
            .zip(other.t1.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let s2: f64 = self
            .t2
            .iter()
            .zip(other.t2.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (s1 + s2).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_occupancy() {
        let h = Array2::zeros((2, 2));
        let eri = Array4::zeros((2, 2, 2, 2));
        let eps = Array1::zeros(2);
        assert!(IntegralSet::new(2, 0, 0.0, h.clone(), eri.clone(), eps.clone()).is_err());
        assert!(IntegralSet::new(2, 3, 0.0, h, eri, eps).is_err());
    }

    #[test]
    fn rejects_asymmetric_h() {
        let mut h = Array2::zeros((2, 2));
        h[(0, 1)] = 0.1;
        let eri = Array4::zeros((2, 2, 2, 2));
        assert!(IntegralSet::new(2, 1, 0.0, h, eri, Array1::zeros(2)).is_err());
    }

    #[test]
    fn symmetrize_closes_all_permutations() {
        let mut eri = Array4::zeros((3, 3, 3, 3));
        eri[(2, 1, 0, 0)] = 0.8;
        symmetrize_eri(&mut eri);
        let v = eri[(2, 1, 0, 0)];
        assert!(v > 0.0);
        for idx in permutations8(2, 1, 0, 0) {
            assert_eq!(eri[idx], v);
        }
    }
}
