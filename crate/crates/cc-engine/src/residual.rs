//! CCSD residual equations over singles-dressed integrals.
//!
//! The one- and two-electron integrals are dressed with the singles
//! amplitudes through one-index transformations: bra indices contract with
//! (I - T) and ket indices with (I + T), where T is the n_orb x n_orb matrix
//! holding t1 in its virtual-row/occupied-column block. At t1 = 0 the
//! dressing is the identity. The doubles residual is assembled from the
//! standard closed-shell contractions and finished with the pair-exchange
//! symmetrizer P: X[i,j,a,b] + X[j,i,b,a].

use ndarray::{Array2, Array4};

use crate::integrals::{AmplitudeSet, IntegralSet};

/// Residuals of the singles and doubles equations.
#[derive(Debug, Clone)]
pub struct Residual {
    /// Omega1[i, a]
    pub omega1: Array2<f64>,
    /// Omega2[i, j, a, b]
    pub omega2: Array4<f64>,
}

impl Residual {
    pub fn norm(&self) -> f64 {
        let s1: f64 = self.omega1.iter().map(|v| v * v).sum();
        let s2: f64 = self.omega2.iter().map(|v| v * v).sum();
        (s1 + s2).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.omega1.iter().all(|v| v.is_finite()) && self.omega2.iter().all(|v| v.is_finite())
    }
}

/// Singles-dressed one- and two-electron integrals.
///
/// Returns (h~, g~) with g~ in chemists' index order. The dressing breaks
/// the 8-fold permutation symmetry of g but keeps the electron-swap
/// symmetry (pq|rs) = (rs|pq).
pub fn t1_transform(set: &IntegralSet, t1: &Array2<f64>) -> (Array2<f64>, Array4<f64>) {
    let n = set.n_orb();
    let o = set.n_occ();
    let v = set.n_virt();
    assert_eq!(t1.shape(), [o, v], "t1 must be n_occ x n_virt");

    // A = I - T acts on bra indices, B = I + T^t on ket indices.
    let mut a = Array2::eye(n);
    let mut b = Array2::eye(n);
    for i in 0..o {
        for x in 0..v {
            a[(o + x, i)] -= t1[(i, x)];
            b[(i, o + x)] += t1[(i, x)];
        }
    }

    let ht = a.dot(&set.h).dot(&b.t());

    let mut gt = contract_axis0(&set.eri, &a);
    gt = swap_contract(gt, [1, 0, 2, 3], &b);
    gt = swap_contract(gt, [2, 1, 0, 3], &a);
    gt = swap_contract(gt, [3, 1, 2, 0], &b);
    (ht, gt)
}

/// Brings an axis to the front (the permutations used are self-inverse
/// transpositions), contracts it with `m`, and permutes back.
fn swap_contract(g: Array4<f64>, perm: [usize; 4], m: &Array2<f64>) -> Array4<f64> {
    let moved = g.permuted_axes(perm).as_standard_layout().into_owned();
    let contracted = contract_axis0(&moved, m);
    contracted
        .permuted_axes(perm)
        .as_standard_layout()
        .into_owned()
}

fn contract_axis0(g: &Array4<f64>, m: &Array2<f64>) -> Array4<f64> {
    let sh = g.raw_dim();
    let n = sh[0];
    let rest = g.len() / n;
    let flat = g
        .view()
        .into_shape_with_order((n, rest))
        .expect("standard-layout 4-index array");
    m.dot(&flat).into_shape_with_order(sh).unwrap()
}

/// Effective one-particle operator over dressed integrals:
/// F~_pq = h~_pq + sum_k [2 g~(pq|kk) - g~(pk|kq)].
fn dressed_fock(ht: &Array2<f64>, gt: &Array4<f64>, o: usize) -> Array2<f64> {
    let n = ht.shape()[0];
    let mut f = ht.clone();
    for p in 0..n {
        for q in 0..n {
            let mut acc = 0.0;
            for k in 0..o {
                acc += 2.0 * gt[(p, q, k, k)] - gt[(p, k, k, q)];
            }
            f[(p, q)] += acc;
        }
    }
    f
}

/// Evaluates the singles and doubles residuals at the given amplitudes.
pub fn ccsd_residual(set: &IntegralSet, amp: &AmplitudeSet) -> Residual {
    let o = set.n_occ();
    let v = set.n_virt();
    assert_eq!(amp.n_occ(), o);
    assert_eq!(amp.n_virt(), v);

    let (ht, gt) = t1_transform(set, &amp.t1);
    let ft = dressed_fock(&ht, &gt, o);
    let t2 = &amp.t2;

    // u[i,j,a,b] = 2 t2[i,j,a,b] - t2[j,i,a,b]
    let mut u2 = Array4::zeros((o, o, v, v));
    for i in 0..o {
        for j in 0..o {
            for a in 0..v {
                for b in 0..v {
                    u2[(i, j, a, b)] = 2.0 * t2[(i, j, a, b)] - t2[(j, i, a, b)];
                }
            }
        }
    }

    // ---- singles ----
    let mut omega1 = Array2::zeros((o, v));
    for i in 0..o {
        for a in 0..v {
            let mut acc = ft[(o + a, i)];
            for k in 0..o {
                for c in 0..v {
                    acc += u2[(i, k, a, c)] * ft[(k, o + c)];
                }
            }
            // + sum_ckd u[k,i,c,d] g~(ad|kc)
            for k in 0..o {
                for c in 0..v {
                    for d in 0..v {
                        acc += u2[(k, i, c, d)] * gt[(o + a, o + d, k, o + c)];
                    }
                }
            }
            // - sum_ckl u[k,l,a,c] g~(ki|lc)
            for k in 0..o {
                for l in 0..o {
                    for c in 0..v {
                        acc -= u2[(k, l, a, c)] * gt[(k, i, l, o + c)];
                    }
                }
            }
            omega1[(i, a)] = acc;
        }
    }

    // ---- doubles ----
    let ov = o * v;
    let oo = o * o;
    let vv = v * v;

    // matrix views keyed by flattened pair indices
    let t2_ij_ab = t2
        .view()
        .into_shape_with_order((oo, vv))
        .expect("t2 contiguous");

    // A2: g~(ai|bj) + sum_cd t2[ijcd] g~(ac|bd)
    let mut w_ppl = Array2::zeros((vv, vv)); // [(a,b),(c,d)]
    for a in 0..v {
        for b in 0..v {
            for c in 0..v {
                for d in 0..v {
                    w_ppl[(a * v + b, c * v + d)] = gt[(o + a, o + c, o + b, o + d)];
                }
            }
        }
    }
    let a2 = t2_ij_ab.dot(&w_ppl.t()); // [(i,j),(a,b)]

    // B2: sum_kl t2[klab] ( g~(ki|lj) + sum_cd t2[ijcd] g~(kc|ld) )
    let mut g_oovv = Array2::zeros((oo, vv)); // [(k,l),(c,d)]
    let mut g_oooo = Array2::zeros((oo, oo)); // [(k,l),(i,j)]
    for k in 0..o {
        for l in 0..o {
            for c in 0..v {
                for d in 0..v {
                    g_oovv[(k * o + l, c * v + d)] = gt[(k, o + c, l, o + d)];
                }
            }
            for i in 0..o {
                for j in 0..o {
                    g_oooo[(k * o + l, i * o + j)] = gt[(k, i, l, j)];
                }
            }
        }
    }
    let w_hhl = &g_oooo + &g_oovv.dot(&t2_ij_ab.t()); // [(k,l),(i,j)]
    let b2 = w_hhl.t().dot(&t2_ij_ab); // [(i,j),(a,b)]

    // C2 intermediates
    // Z[(k,c),(i,a)] = sum_ld t2[l,i,a,d] g~(kd|lc)
    let mut g_kd_lc = Array2::zeros((ov, ov)); // [(k,c),(l,d)]
    for k in 0..o {
        for c in 0..v {
            for l in 0..o {
                for d in 0..v {
                    g_kd_lc[(k * v + c, l * v + d)] = gt[(k, o + d, l, o + c)];
                }
            }
        }
    }
    let mut t_ld_ia = Array2::zeros((ov, ov)); // [(l,d),(i,a)]
    for l in 0..o {
        for d in 0..v {
            for i in 0..o {
                for a in 0..v {
                    t_ld_ia[(l * v + d, i * v + a)] = t2[(l, i, a, d)];
                }
            }
        }
    }
    let z = g_kd_lc.dot(&t_ld_ia); // [(k,c),(i,a)]

    // M1[(i,a),(k,c)] = g~(ki|ac) - 0.5 Z[(k,c),(i,a)]
    let mut m1 = Array2::zeros((ov, ov));
    for i in 0..o {
        for a in 0..v {
            for k in 0..o {
                for c in 0..v {
                    m1[(i * v + a, k * v + c)] =
                        gt[(k, i, o + a, o + c)] - 0.5 * z[(k * v + c, i * v + a)];
                }
            }
        }
    }
    // T[(k,c),(x,y)] = t2[k,x,y,c]
    let mut t_kc_xy = Array2::zeros((ov, ov));
    for k in 0..o {
        for c in 0..v {
            for x in 0..o {
                for y in 0..v {
                    t_kc_xy[(k * v + c, x * v + y)] = t2[(k, x, y, c)];
                }
            }
        }
    }
    let c2p = m1.dot(&t_kc_xy); // [(i,a),(j,b)] both C2 pieces scatter from this

    // D2 intermediates
    // L1[(i,a),(k,c)] = 2 g~(ai|kc) - g~(ac|ki)
    let mut l1 = Array2::zeros((ov, ov));
    for i in 0..o {
        for a in 0..v {
            for k in 0..o {
                for c in 0..v {
                    l1[(i * v + a, k * v + c)] =
                        2.0 * gt[(o + a, i, k, o + c)] - gt[(o + a, o + c, k, i)];
                }
            }
        }
    }
    // L2[(l,d),(k,c)] = 2 g~(ld|kc) - g~(lc|kd)
    let mut l2 = Array2::zeros((ov, ov));
    for l in 0..o {
        for d in 0..v {
            for k in 0..o {
                for c in 0..v {
                    l2[(l * v + d, k * v + c)] =
                        2.0 * gt[(l, o + d, k, o + c)] - gt[(l, o + c, k, o + d)];
                }
            }
        }
    }
    // U[(i,a),(l,d)] = u2[i,l,a,d]
    let mut u_ia_ld = Array2::zeros((ov, ov));
    for i in 0..o {
        for a in 0..v {
            for l in 0..o {
                for d in 0..v {
                    u_ia_ld[(i * v + a, l * v + d)] = u2[(i, l, a, d)];
                }
            }
        }
    }
    let n_d2 = &l1 + &(0.5 * u_ia_ld.dot(&l2)); // [(i,a),(k,c)]
    // U2[(k,c),(j,b)] = u2[j,k,b,c]
    let mut u_kc_jb = Array2::zeros((ov, ov));
    for k in 0..o {
        for c in 0..v {
            for j in 0..o {
                for b in 0..v {
                    u_kc_jb[(k * v + c, j * v + b)] = u2[(j, k, b, c)];
                }
            }
        }
    }
    let d2 = 0.5 * n_d2.dot(&u_kc_jb); // [(i,a),(j,b)]

    // E2 intermediates
    // Fvv_eff[b,c] = F~(b,c) - sum_dkl u2[k,l,b,d] g~(ld|kc)
    let mut u_b_kld = Array2::zeros((v, oo * v));
    let mut g_kld_c = Array2::zeros((oo * v, v));
    for k in 0..o {
        for l in 0..o {
            for d in 0..v {
                let row = (k * o + l) * v + d;
                for b in 0..v {
                    u_b_kld[(b, row)] = u2[(k, l, b, d)];
                }
                for c in 0..v {
                    g_kld_c[(row, c)] = gt[(l, o + d, k, o + c)];
                }
            }
        }
    }
    let mut fvv_eff = Array2::zeros((v, v));
    {
        let corr = u_b_kld.dot(&g_kld_c);
        for b in 0..v {
            for c in 0..v {
                fvv_eff[(b, c)] = ft[(o + b, o + c)] - corr[(b, c)];
            }
        }
    }
    // Foo_eff[k,j] = F~(k,j) + sum_cdl u2[l,j,c,d] g~(kd|lc)
    let mut g_k_lcd = Array2::zeros((o, o * vv));
    let mut u_lcd_j = Array2::zeros((o * vv, o));
    for l in 0..o {
        for c in 0..v {
            for d in 0..v {
                let row = (l * v + c) * v + d;
                for k in 0..o {
                    g_k_lcd[(k, row)] = gt[(k, o + d, l, o + c)];
                }
                for j in 0..o {
                    u_lcd_j[(row, j)] = u2[(l, j, c, d)];
                }
            }
        }
    }
    let mut foo_eff = Array2::zeros((o, o));
    {
        let corr = g_k_lcd.dot(&u_lcd_j);
        for k in 0..o {
            for j in 0..o {
                foo_eff[(k, j)] = ft[(k, j)] + corr[(k, j)];
            }
        }
    }

    // assemble the P-symmetrized part S = C2 + D2 + E2
    let mut omega2 = Array4::zeros((o, o, v, v));
    for i in 0..o {
        for j in 0..o {
            for a in 0..v {
                for b in 0..v {
                    let mut s = -0.5 * c2p[(i * v + a, j * v + b)]
                        - c2p[(j * v + a, i * v + b)]
                        + d2[(i * v + a, j * v + b)];
                    // E2 direct terms
                    let mut e_acc = 0.0;
                    for c in 0..v {
                        e_acc += t2[(i, j, a, c)] * fvv_eff[(b, c)];
                    }
                    for k in 0..o {
                        e_acc -= t2[(i, k, a, b)] * foo_eff[(k, j)];
                    }
                    s += e_acc;
                    omega2[(i, j, a, b)] = s;
                }
            }
        }
    }
    // P symmetrization plus the already pair-symmetric A2, B2 and g~(ai|bj)
    let mut out2 = Array4::zeros((o, o, v, v));
    for i in 0..o {
        for j in 0..o {
            for a in 0..v {
                for b in 0..v {
                    out2[(i, j, a, b)] = gt[(o + a, i, o + b, j)]
                        + a2[(i * o + j, a * v + b)]
                        + b2[(i * o + j, a * v + b)]
                        + omega2[(i, j, a, b)]
                        + omega2[(j, i, b, a)];
                }
            }
        }
    }

    Residual { omega1, omega2: out2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mp2::mp2_amplitudes;
    use crate::synthetic::generate_synthetic;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    #[test]
    fn zero_t1_leaves_integrals_unchanged() {
        let set = generate_synthetic(2, 6, 2, 0.2).unwrap();
        let t1 = Array2::zeros((2, 4));
        let (ht, gt) = t1_transform(&set, &t1);
        assert_eq!(ht, set.h);
        assert_eq!(gt, set.eri);
    }

    #[test]
    fn dressing_breaks_eightfold_symmetry() {
        let set = generate_synthetic(4, 5, 2, 0.3).unwrap();
        let mut t1 = Array2::zeros((2, 3));
        t1[(0, 1)] = 0.21;
        t1[(1, 0)] = -0.13;
        let (_, gt) = t1_transform(&set, &t1);
        // bra/ket exchange within electron 1 no longer holds
        let mut broken = false;
        'outer: for p in 0..5 {
            for q in 0..5 {
                for r in 0..5 {
                    for s in 0..5 {
                        if (gt[(p, q, r, s)] - gt[(q, p, r, s)]).abs() > 1e-10 {
                            broken = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
        assert!(broken);
        // electron swap survives the dressing
        for p in 0..5 {
            for q in 0..5 {
                for r in 0..5 {
                    for s in 0..5 {
                        assert_abs_diff_eq!(
                            gt[(p, q, r, s)],
                            gt[(r, s, p, q)],
                            epsilon = 1e-13
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn mean_field_fixed_point() {
        // zero interaction, diagonal h, zero amplitudes: residual vanishes
        let set = generate_synthetic(3, 6, 2, 0.0).unwrap();
        let amp = AmplitudeSet::zeros(2, 4);
        let res = ccsd_residual(&set, &amp);
        assert!(res.norm() < 1e-14);
    }

    #[test]
    fn residual_at_zero_is_mp2_numerator() {
        let set = generate_synthetic(6, 6, 2, 0.1).unwrap();
        let amp = AmplitudeSet::zeros(2, 4);
        let res = ccsd_residual(&set, &amp);
        // omega1 vanishes on a canonical reference
        assert!(res.omega1.iter().all(|x| x.abs() < 1e-12));
        let o = 2;
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..4 {
                    for b in 0..4 {
                        assert_abs_diff_eq!(
                            res.omega2[(i, j, a, b)],
                            set.eri[(i, o + a, j, o + b)],
                            epsilon = 1e-13
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn residual_is_pair_symmetric() {
        let set = generate_synthetic(8, 6, 2, 0.2).unwrap();
        let mut amp = mp2_amplitudes(&set).unwrap();
        amp.t1[(0, 1)] = 0.05;
        amp.t1[(1, 2)] = -0.03;
        let res = ccsd_residual(&set, &amp);
        for i in 0..2 {
            for j in 0..2 {
                for a in 0..4 {
                    for b in 0..4 {
                        assert_abs_diff_eq!(
                            res.omega2[(i, j, a, b)],
                            res.omega2[(j, i, b, a)],
                            epsilon = 1e-12
                        );
                    }
                }
            }
        }
    }
}
