//! Rotation matrices on the real spherical-harmonic spaces.
//!
//! `wigner_d(l, R)` is the orthogonal matrix representing R on the real
//! degree-l space, with the convention `Y_l(R u) = D_l(R) Y_l(u)`. Degree 1
//! is the rotation matrix itself conjugated by the fixed (m=-1,0,1) <->
//! (y,z,x) axis permutation; higher degrees follow by the standard recursion
//! on the degree.

use ndarray::Array2;

use crate::error::IrrepsError;
use crate::rotation::Rotation;

/// Real Wigner matrix of degree l for a proper rotation.
pub fn wigner_d(l: u32, rot: &Rotation) -> Result<Array2<f64>, IrrepsError> {
    if l > crate::cg::ELL_MAX {
        return Err(IrrepsError::DegreeTooLarge(l));
    }
    let r1 = degree_one(rot);
    match l {
        0 => Ok(Array2::from_elem((1, 1), 1.0)),
        1 => Ok(r1),
        _ => {
            let mut prev = r1.clone();
            for ll in 2..=l {
                prev = recur(ll as i32, &r1, &prev);
            }
            Ok(prev)
        }
    }
}

/// Degree-1 representation: R in the (y, z, x) component ordering.
fn degree_one(rot: &Rotation) -> Array2<f64> {
    let m = rot.matrix();
    // real order m = -1, 0, 1 carries the y, z, x component respectively
    let perm = [1usize, 2, 0];
    let mut d = Array2::zeros((3, 3));
    for i in 0..3 {
        for j in 0..3 {
            d[(i, j)] = m[perm[i]][perm[j]];
        }
    }
    d
}

struct Prev<'a> {
    l: i32,
    d: &'a Array2<f64>,
}

impl Prev<'_> {
    fn get(&self, a: i32, b: i32) -> f64 {
        self.d[((a + self.l) as usize, (b + self.l) as usize)]
    }
}

fn r1_at(r1: &Array2<f64>, i: i32, j: i32) -> f64 {
    r1[((i + 1) as usize, (j + 1) as usize)]
}

// Helper P from the recursion; `a` must satisfy |a| <= l-1, guaranteed by the
// vanishing of the corresponding u/v/w coefficient otherwise.
fn p_fn(r1: &Array2<f64>, prev: &Prev, l: i32, i: i32, a: i32, b: i32) -> f64 {
    if b == -l {
        r1_at(r1, i, 1) * prev.get(a, -l + 1) + r1_at(r1, i, -1) * prev.get(a, l - 1)
    } else if b == l {
        r1_at(r1, i, 1) * prev.get(a, l - 1) - r1_at(r1, i, -1) * prev.get(a, -l + 1)
    } else {
        r1_at(r1, i, 0) * prev.get(a, b)
    }
}

fn recur(l: i32, r1: &Array2<f64>, prev_mat: &Array2<f64>) -> Array2<f64> {
    let prev = Prev { l: l - 1, d: prev_mat };
    let dim = (2 * l + 1) as usize;
    let mut out = Array2::zeros((dim, dim));
    for m in -l..=l {
        for m2 in -l..=l {
            let denom = if m2.abs() < l {
                ((l + m2) * (l - m2)) as f64
            } else {
                ((2 * l) * (2 * l - 1)) as f64
            };
            let am = m.abs();
            let u_num = ((l + m) * (l - m)) as f64;
            let v_num = (1.0 + if m == 0 { 1.0 } else { 0.0 }) * ((l + am - 1) * (l + am)) as f64;
            let w_num = ((l - am - 1) * (l - am)) as f64;

            let mut val = 0.0;
            if u_num != 0.0 {
                let u = (u_num / denom).sqrt();
                val += u * p_fn(r1, &prev, l, 0, m, m2);
            }
            if v_num != 0.0 {
                let v = 0.5 * (v_num / denom).sqrt() * if m == 0 { -1.0 } else { 1.0 };
                let term = if m == 0 {
                    p_fn(r1, &prev, l, 1, 1, m2) + p_fn(r1, &prev, l, -1, -1, m2)
                } else if m > 0 {
                    let d1: f64 = if m == 1 { 1.0 } else { 0.0 };
                    p_fn(r1, &prev, l, 1, m - 1, m2) * (1.0 + d1).sqrt()
                        - p_fn(r1, &prev, l, -1, -m + 1, m2) * (1.0 - d1)
                } else {
                    let d1: f64 = if m == -1 { 1.0 } else { 0.0 };
                    p_fn(r1, &prev, l, 1, m + 1, m2) * (1.0 - d1)
                        + p_fn(r1, &prev, l, -1, -m - 1, m2) * (1.0 + d1).sqrt()
                };
                val += v * term;
            }
            if w_num > 0.0 && m != 0 {
                let w = -0.5 * (w_num / denom).sqrt();
                let term = if m > 0 {
                    p_fn(r1, &prev, l, 1, m + 1, m2) + p_fn(r1, &prev, l, -1, -m - 1, m2)
                } else {
                    p_fn(r1, &prev, l, 1, m - 1, m2) - p_fn(r1, &prev, l, -1, -m + 1, m2)
                };
                val += w * term;
            }
            out[((m + l) as usize, (m2 + l) as usize)] = val;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_maps_to_identity() {
        for l in 0..=4 {
            let d = wigner_d(l, &Rotation::identity()).unwrap();
            for i in 0..d.nrows() {
                for j in 0..d.ncols() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(d[(i, j)], expect, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn degree_one_is_permuted_rotation() {
        let r = Rotation::from_axis_angle([0.3, -1.0, 0.2], 1.1);
        let d = wigner_d(1, &r).unwrap();
        let m = r.matrix();
        let perm = [1usize, 2, 0];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(d[(i, j)], m[perm[i]][perm[j]], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn degree_cap_enforced() {
        assert!(wigner_d(5, &Rotation::identity()).is_err());
    }
}
