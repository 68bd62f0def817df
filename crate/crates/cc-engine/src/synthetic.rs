//! Reproducible synthetic integral sets.
//!
//! The generator picks orbital energies with an occupied-virtual gap of at
//! least 1 Hartree, draws two-electron integrals at a chosen coupling scale,
//! and then back-solves the one-electron matrix so the mean-field Fock
//! matrix is exactly diagonal with those energies. Every instance is
//! canonical by construction, which the quasi-Newton solver's first-step
//! identity relies on.

use ndarray::{Array1, Array2, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CcError;
use crate::integrals::{symmetrize_eri, IntegralSet};

pub fn generate_synthetic(
    seed: u64,
    n_orb: usize,
    n_occ: usize,
    coupling_scale: f64,
) -> Result<IntegralSet, CcError> {
    if n_occ == 0 || n_occ >= n_orb {
        return Err(CcError::InvalidDimensions(format!(
            "need 0 < n_occ < n_orb, got n_occ = {n_occ}, n_orb = {n_orb}"
        )));
    }
    if coupling_scale < 0.0 || !coupling_scale.is_finite() {
        return Err(CcError::InvalidDimensions(format!(
            "coupling_scale = {coupling_scale} must be finite and >= 0"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut eps = Array1::zeros(n_orb);
    for i in 0..n_occ {
        eps[i] = -2.0 + 0.3 * i as f64 + 0.05 * rng.random_range(0.0..1.0);
    }
    // gap >= 1 Hartree between HOMO and LUMO
    let homo = eps[n_occ - 1];
    for a in 0..n_orb - n_occ {
        eps[n_occ + a] =
            homo + 1.0 + 0.4 * a as f64 + 0.1 * rng.random_range(0.0..1.0);
    }

    let mut eri = Array4::zeros((n_orb, n_orb, n_orb, n_orb));
    for v in eri.iter_mut() {
        *v = coupling_scale * rng.random_range(-1.0..1.0);
    }
    symmetrize_eri(&mut eri);

    // h = diag(eps) - two-electron mean field, so that F = diag(eps)
    let mut h = Array2::zeros((n_orb, n_orb));
    for p in 0..n_orb {
        for q in 0..n_orb {
            let mut g = 0.0;
            for i in 0..n_occ {
                g += 2.0 * eri[(p, q, i, i)] - eri[(p, i, i, q)];
            }
            h[(p, q)] = if p == q { eps[p] - g } else { -g };
        }
    }

    let core = rng.random_range(-1.0..1.0);
    IntegralSet::new(n_orb, n_occ, core, h, eri, eps)
}

/// A named, reproducible fixture recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub name: String,
    pub seed: u64,
    pub n_orb: usize,
    pub n_occ: usize,
    pub coupling_scale: f64,
}

impl FixtureSpec {
    pub fn build(&self) -> IntegralSet {
        generate_synthetic(self.seed, self.n_orb, self.n_occ, self.coupling_scale)
            .expect("fixture recipes are valid by construction")
    }
}

/// The ten standard correlation fixtures (seeds 1-10).
pub fn bundled_fixtures() -> Vec<FixtureSpec> {
    let scales = [0.05, 0.1, 0.2, 0.05];
    (1..=10u64)
        .map(|seed| {
            let k = (seed - 1) as usize;
            let n_orb = if seed % 2 == 1 { 8 } else { 12 };
            let n_occ = 1 + k % 3;
            let coupling_scale = scales[k / 3];
            FixtureSpec {
                name: format!("synthetic-{seed:02}"),
                seed,
                n_orb,
                n_occ,
                coupling_scale,
            }
        })
        .collect()
}

/// Four two-electron fixtures on which the doubles expansion is exact.
pub fn two_electron_fixtures() -> Vec<FixtureSpec> {
    [(4usize, 11u64, 0.2), (5, 12, 0.15), (6, 13, 0.1), (6, 14, 0.2)]
        .iter()
        .map(|&(n_orb, seed, coupling_scale)| FixtureSpec {
            name: format!("twoelectron-{seed}"),
            seed,
            n_orb,
            n_occ: 1,
            coupling_scale,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(7, 6, 2, 0.1).unwrap();
        let b = generate_synthetic(7, 6, 2, 0.1).unwrap();
        assert_eq!(a.h, b.h);
        assert_eq!(a.eri, b.eri);
        assert_eq!(a.eps, b.eps);
        assert_eq!(a.core_energy, b.core_energy);
        let c = generate_synthetic(8, 6, 2, 0.1).unwrap();
        assert_ne!(a.eri, c.eri);
    }

    #[test]
    fn fock_is_diagonal_with_gap() {
        let set = generate_synthetic(3, 8, 3, 0.2).unwrap();
        let f = set.fock();
        for p in 0..8 {
            for q in 0..8 {
                if p != q {
                    assert!(f[(p, q)].abs() < 1e-12);
                } else {
                    assert!((f[(p, p)] - set.eps[p]).abs() < 1e-12);
                }
            }
        }
        assert!(set.eps[3] - set.eps[2] >= 1.0);
    }

    #[test]
    fn invalid_dimensions_rejected() {
        assert!(generate_synthetic(1, 4, 4, 0.1).is_err());
        assert!(generate_synthetic(1, 4, 0, 0.1).is_err());
    }
}
