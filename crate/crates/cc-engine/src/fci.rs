//! Brute-force configuration-interaction ground state, used as the
//! exactness oracle for small systems.
//!
//! The Hamiltonian is built over all determinants with fixed electron count
//! and Sz = 0 (equal alpha and beta occupation numbers) from the one- and
//! two-electron integrals via the Slater-Condon rules, stored sparsely, and
//! its lowest eigenvalue extracted by Lanczos iteration with full
//! reorthogonalization and a Sturm-bisection tridiagonal eigensolver.

use std::collections::HashMap;

use crate::error::CcError;
use crate::integrals::IntegralSet;

const DIM_BOUND: usize = 5000;

/// Ground-state total electronic energy: lowest CI eigenvalue plus the core
/// energy. The determinant space C(n_orb, n_occ)^2 must stay within the
/// dense bound of 5000.
pub fn fci_oracle(set: &IntegralSet) -> Result<f64, CcError> {
    let n = set.n_orb();
    let occ = set.n_occ();
    let strings = occupation_strings(n, occ);
    let dim = strings.len() * strings.len();
    if dim > DIM_BOUND {
        return Err(CcError::DimensionBound { dim, bound: DIM_BOUND });
    }
    let index: HashMap<u64, usize> =
        strings.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let rows = build_hamiltonian(set, &strings, &index);
    let lowest = lanczos_lowest(&rows, dim);
    Ok(lowest + set.core_energy)
}

/// All n-bit masks with `k` bits set, ascending.
fn occupation_strings(n: usize, k: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut mask = (1u64 << k) - 1;
    if k == 0 {
        return vec![0];
    }
    let limit = 1u64 << n;
    while mask < limit {
        out.push(mask);
        // Gosper's hack: next mask with the same popcount
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        if r >= limit || c == 0 {
            break;
        }
        mask = r | (((mask ^ r) / c) >> 2);
    }
    out
}

fn occupied(mask: u64) -> Vec<usize> {
    (0..64).filter(|p| mask >> p & 1 == 1).collect()
}

/// Phase for moving an electron from p to q within `mask` (p occupied):
/// (-1)^(number of occupied orbitals strictly between p and q).
fn single_phase(mask: u64, p: usize, q: usize) -> f64 {
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let between = if hi > lo + 1 {
        let window = ((1u64 << hi) - 1) ^ ((1u64 << (lo + 1)) - 1);
        (mask & window).count_ones()
    } else {
        0
    };
    if between % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

struct SpinChannel {
    /// For each string index: list of (target index, hole, particle, phase).
    singles: Vec<Vec<(usize, usize, usize, f64)>>,
}

fn spin_singles(strings: &[u64], index: &HashMap<u64, usize>, n: usize) -> SpinChannel {
    let mut singles = Vec::with_capacity(strings.len());
    for &s in strings {
        let mut list = Vec::new();
        for p in occupied(s) {
            for q in 0..n {
                if s >> q & 1 == 1 {
                    continue;
                }
                let t = s & !(1 << p) | (1 << q);
                let phase = single_phase(s, p, q);
                list.push((index[&t], p, q, phase));
            }
        }
        singles.push(list);
    }
    SpinChannel { singles }
}

type SparseRows = Vec<Vec<(usize, f64)>>;

fn build_hamiltonian(
    set: &IntegralSet,
    strings: &[u64],
    index: &HashMap<u64, usize>,
) -> SparseRows {
    let n = set.n_orb();
    let ns = strings.len();
    let dim = ns * ns;
    let chan = spin_singles(strings, index, n);
    let h = &set.h;
    let eri = &set.eri;

    let mut rows: SparseRows = vec![Vec::new(); dim];

    for (ia, &sa) in strings.iter().enumerate() {
        let occ_a = occupied(sa);
        for (ib, &sb) in strings.iter().enumerate() {
            let row = ia * ns + ib;
            let occ_b = occupied(sb);

            // diagonal
            let mut diag = 0.0;
            for &p in occ_a.iter().chain(occ_b.iter()) {
                diag += h[(p, p)];
            }
            for &p in &occ_a {
                for &q in &occ_a {
                    if p != q {
                        diag += 0.5 * (eri[(p, p, q, q)] - eri[(p, q, q, p)]);
                    }
                }
            }
            for &p in &occ_b {
                for &q in &occ_b {
                    if p != q {
                        diag += 0.5 * (eri[(p, p, q, q)] - eri[(p, q, q, p)]);
                    }
                }
            }
            for &p in &occ_a {
                for &q in &occ_b {
                    diag += eri[(p, p, q, q)];
                }
            }
            rows[row].push((row, diag));

            // alpha singles: <pq> + same-spin mean field + cross-spin field
            for &(ja, p, q, phase) in &chan.singles[ia] {
                let mut val = h[(p, q)];
                for &r in &occ_a {
                    if r != p {
                        val += eri[(p, q, r, r)] - eri[(p, r, r, q)];
                    }
                }
                for &r in &occ_b {
                    val += eri[(p, q, r, r)];
                }
                rows[row].push((ja * ns + ib, phase * val));
            }
            // beta singles
            for &(jb, p, q, phase) in &chan.singles[ib] {
                let mut val = h[(p, q)];
                for &r in &occ_b {
                    if r != p {
                        val += eri[(p, q, r, r)] - eri[(p, r, r, q)];
                    }
                }
                for &r in &occ_a {
                    val += eri[(p, q, r, r)];
                }
                rows[row].push((ia * ns + jb, phase * val));
            }

            // same-spin doubles, alpha then beta
            for (spin_strings, other_idx, is_alpha) in
                [(ia, ib, true), (ib, ia, false)]
            {
                let s = strings[spin_strings];
                let occs = occupied(s);
                for (pi, &p1) in occs.iter().enumerate() {
                    for &p2 in occs.iter().skip(pi + 1) {
                        for q1 in 0..n {
                            if s >> q1 & 1 == 1 {
                                continue;
                            }
                            for q2 in q1 + 1..n {
                                if s >> q2 & 1 == 1 {
                                    continue;
                                }
                                // excite p1 -> q1 then p2 -> q2
                                let t1m = s & !(1 << p1) | (1 << q1);
                                let phase =
                                    single_phase(s, p1, q1) * single_phase(t1m, p2, q2);
                                let t = t1m & !(1 << p2) | (1 << q2);
                                let val = eri[(p1, q1, p2, q2)] - eri[(p1, q2, p2, q1)];
                                if val == 0.0 {
                                    continue;
                                }
                                let jt = index[&t];
                                let col = if is_alpha {
                                    jt * ns + other_idx
                                } else {
                                    other_idx * ns + jt
                                };
                                rows[row].push((col, phase * val));
                            }
                        }
                    }
                }
            }

            // opposite-spin doubles: one single in each channel
            for &(ja, p, q, phase_a) in &chan.singles[ia] {
                for &(jb, r, s, phase_b) in &chan.singles[ib] {
                    let val = eri[(p, q, r, s)];
                    if val == 0.0 {
                        continue;
                    }
                    rows[row].push((ja * ns + jb, phase_a * phase_b * val));
                }
            }
        }
    }
    rows
}

fn matvec(rows: &SparseRows, x: &[f64], y: &mut [f64]) {
    for (r, row) in rows.iter().enumerate() {
        let mut acc = 0.0;
        for &(c, v) in row {
            acc += v * x[c];
        }
        y[r] = acc;
    }
}

/// Lowest eigenvalue by Lanczos with full reorthogonalization. Exact when
/// the iteration count reaches the dimension.
fn lanczos_lowest(rows: &SparseRows, dim: usize) -> f64 {
    if dim == 1 {
        return rows[0].iter().map(|&(_, v)| v).sum();
    }
    let max_iter = dim.min(300);
    // deterministic start: uniform with a bump on the first basis state
    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    v[0] += 1.0;
    normalize(&mut v);

    let mut basis: Vec<Vec<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut last = f64::INFINITY;

    for k in 0..max_iter {
        matvec(rows, &basis[k], &mut w);
        let alpha = dot(&w, &basis[k]);
        alphas.push(alpha);
        for (wi, bi) in w.iter_mut().zip(basis[k].iter()) {
            *wi -= alpha * bi;
        }
        if k > 0 {
            let beta_prev = betas[k - 1];
            for (wi, bi) in w.iter_mut().zip(basis[k - 1].iter()) {
                *wi -= beta_prev * bi;
            }
        }
        // full reorthogonalization
        for b in &basis {
            let c = dot(&w, b);
            for (wi, bi) in w.iter_mut().zip(b.iter()) {
                *wi -= c * bi;
            }
        }
        let beta = dot(&w, &w).sqrt();
        let low = tridiag_lowest(&alphas, &betas);
        if (low - last).abs() < 1e-13 * (1.0 + low.abs()) || beta < 1e-13 {
            return low;
        }
        last = low;
        betas.push(beta);
        let mut next = w.clone();
        for x in next.iter_mut() {
            *x /= beta;
        }
        basis.push(next);
    }
    tridiag_lowest(&alphas, &betas)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

/// Smallest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
fn tridiag_lowest(alphas: &[f64], betas: &[f64]) -> f64 {
    let n = alphas.len();
    if n == 1 {
        return alphas[0];
    }
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let b_left = if i > 0 { betas[i - 1].abs() } else { 0.0 };
        let b_right = if i < n - 1 { betas[i].abs() } else { 0.0 };
        lo = lo.min(alphas[i] - b_left - b_right);
        hi = hi.max(alphas[i] + b_left + b_right);
    }
    // count of eigenvalues below x via the Sturm sequence
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = alphas[0] - x;
        if d < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let b2 = betas[i - 1] * betas[i - 1];
            let denom = if d.abs() < 1e-300 { 1e-300_f64.copysign(d) } else { d };
            d = alphas[i] - x - b2 / denom;
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let mut a = lo - 1e-8;
    let mut b = hi + 1e-8;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if count_below(mid) >= 1 {
            b = mid;
        } else {
            a = mid;
        }
        if b - a < 1e-14 * (1.0 + b.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{Array1, Array2, Array4};

    #[test]
    fn zero_interaction_fills_lowest_orbitals() {
        let n = 4;
        let mut h = Array2::zeros((n, n));
        let dia = [-1.3, -0.7, 0.4, 1.2];
        for p in 0..n {
            h[(p, p)] = dia[p];
        }
        let set = IntegralSet::new(
            n,
            2,
            0.25,
            h,
            Array4::zeros((n, n, n, n)),
            Array1::from(dia.to_vec()),
        )
        .unwrap();
        let e = fci_oracle(&set).unwrap();
        assert_abs_diff_eq!(e, 0.25 + 2.0 * (-1.3 - 0.7), epsilon = 1e-12);
    }

    #[test]
    fn one_orbital_two_electrons_is_single_determinant() {
        let n = 1;
        let mut h = Array2::zeros((n, n));
        h[(0, 0)] = -0.9;
        let mut eri = Array4::zeros((n, n, n, n));
        eri[(0, 0, 0, 0)] = 0.35;
        let set =
            IntegralSet::new(n, 1, 0.1, h, eri, Array1::from(vec![-0.9])).unwrap();
        let e = fci_oracle(&set).unwrap();
        assert_abs_diff_eq!(e, 0.1 + 2.0 * (-0.9) + 0.35, epsilon = 1e-12);
    }

    #[test]
    fn dimension_bound_enforced() {
        let set = crate::synthetic::generate_synthetic(1, 12, 3, 0.1).unwrap();
        assert!(matches!(
            fci_oracle(&set),
            Err(CcError::DimensionBound { .. })
        ));
    }

    #[test]
    fn gosper_enumeration_counts() {
        assert_eq!(occupation_strings(6, 1).len(), 6);
        assert_eq!(occupation_strings(6, 3).len(), 20);
        assert_eq!(occupation_strings(8, 2).len(), 28);
    }

    #[test]
    fn matches_dense_diagonalization_on_small_case() {
        // 2 orbitals, 2 electrons: dim 4; compare against a dense Jacobi
        // eigensolver written independently here.
        let set = crate::synthetic::generate_synthetic(21, 2, 1, 0.4).unwrap();
        let strings = occupation_strings(2, 1);
        let index: HashMap<u64, usize> =
            strings.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let rows = build_hamiltonian(&set, &strings, &index);
        let dim = 4;
        let mut dense = vec![vec![0.0; dim]; dim];
        for (r, row) in rows.iter().enumerate() {
            for &(c, v) in row {
                dense[r][c] += v;
            }
        }
        // Jacobi sweeps
        let mut a = dense.clone();
        for _ in 0..100 {
            let mut off = 0.0;
            for i in 0..dim {
                for j in i + 1..dim {
                    off += a[i][j] * a[i][j];
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..dim {
                for q in p + 1..dim {
                    if a[p][q].abs() < 1e-18 {
                        continue;
                    }
                    let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..dim {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..dim {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let dense_lowest = (0..dim).map(|i| a[i][i]).fold(f64::INFINITY, f64::min);
        let lanczos = lanczos_lowest(&rows, dim);
        assert_abs_diff_eq!(lanczos, dense_lowest, epsilon = 1e-10);
    }
}
