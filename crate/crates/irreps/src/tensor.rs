//! Bilinear coupling of irreducible blocks.

use crate::array::{Irrep, IrrepsArray, IrrepsSignature};
use crate::cg::{cg_table, ELL_MAX};
use crate::error::IrrepsError;

/// Couples a degree-l1 block with a degree-l2 block into a degree-l3 block:
/// `h_m3 = Σ_{m1 m2} C^{l3 m3}_{l1 m1, l2 m2} x_m1 y_m2`.
///
/// Triangle-violating degree triples yield the zero block, so callers can
/// enumerate coupling paths uniformly.
pub fn tensor_product_block(l1: u32, x: &[f64], l2: u32, y: &[f64], l3: u32) -> Vec<f64> {
    assert_eq!(x.len(), 2 * l1 as usize + 1);
    assert_eq!(y.len(), 2 * l2 as usize + 1);
    assert!(l1 <= ELL_MAX && l2 <= ELL_MAX && l3 <= ELL_MAX);
    let d3 = 2 * l3 as usize + 1;
    let mut out = vec![0.0; d3];
    let table = match cg_table().tensor(l1, l2, l3) {
        Some(t) => t,
        None => return out,
    };
    let d2 = y.len();
    for (i1, &xv) in x.iter().enumerate() {
        if xv == 0.0 {
            continue;
        }
        for (i2, &yv) in y.iter().enumerate() {
            if yv == 0.0 {
                continue;
            }
            let base = (i1 * d2 + i2) * d3;
            for m3 in 0..d3 {
                out[m3] += table[base + m3] * xv * yv;
            }
        }
    }
    out
}

/// [`tensor_product_block`] on single-irrep arrays; the output parity is the
/// product of the input parities.
pub fn tensor_product(x: &IrrepsArray, y: &IrrepsArray, l3: u32) -> Result<IrrepsArray, IrrepsError> {
    let ex = single_irrep(x)?;
    let ey = single_irrep(y)?;
    let out = tensor_product_block(ex.degree, x.values(), ey.degree, y.values(), l3);
    let sig = IrrepsSignature::new([(1, Irrep::new(l3, ex.parity.combine(ey.parity)))]);
    IrrepsArray::new(sig, out)
}

fn single_irrep(a: &IrrepsArray) -> Result<Irrep, IrrepsError> {
    match a.signature().entries() {
        [(1, ir)] => Ok(*ir),
        _ => Err(IrrepsError::SignatureMismatch(format!(
            "expected a single-channel single-irrep array, got {}",
            a.signature()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scalar_factor_rescales() {
        // l2 = 0: output is x scaled by the scalar times the fixed constant.
        let x = [0.3, -1.1, 0.7];
        let y = [2.0];
        let out = tensor_product_block(1, &x, 0, &y, 1);
        let c = crate::cg::cg_coefficient(1, -1, 0, 0, 1, -1);
        for (o, xv) in out.iter().zip(x.iter()) {
            assert_abs_diff_eq!(*o, c * 2.0 * xv, epsilon = 1e-14);
        }
    }

    #[test]
    fn triangle_violation_yields_zero_block() {
        let x = [1.0, 2.0, 3.0];
        let y = [0.5, -0.5, 1.5];
        let out = tensor_product_block(1, &x, 1, &y, 4);
        assert!(out.iter().all(|v| *v == 0.0));
        assert_eq!(out.len(), 9);
    }

    #[test]
    fn vector_coupling_is_cross_product() {
        // 1 (x) 1 -> 1 is proportional to the cross product, components in
        // the (y, z, x) ordering of the real degree-1 basis.
        let a = [0.4, -0.2, 0.9]; // (y, z, x)
        let b = [-1.0, 0.3, 0.5];
        let out = tensor_product_block(1, &a, 1, &b, 1);
        let va = [a[2], a[0], a[1]]; // back to (x, y, z)
        let vb = [b[2], b[0], b[1]];
        let cross = [
            va[1] * vb[2] - va[2] * vb[1],
            va[2] * vb[0] - va[0] * vb[2],
            va[0] * vb[1] - va[1] * vb[0],
        ];
        let expect = [cross[1], cross[2], cross[0]]; // (y, z, x)
        // fix the proportionality constant from the largest component
        let (pos, _) = expect
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap();
        let scale = out[pos] / expect[pos];
        assert!(scale.abs() > 1e-6);
        for (o, e) in out.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(*o, scale * e, epsilon = 1e-12);
        }
    }

    #[test]
    fn bilinear_in_first_argument() {
        let x1 = [0.3, -1.1, 0.7];
        let x2 = [1.0, 0.2, -0.4];
        let y = [0.5, 2.0, -1.5, 0.3, 0.9];
        let (alpha, beta) = (1.7, -0.6);
        let combined: Vec<f64> = x1
            .iter()
            .zip(x2.iter())
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let lhs = tensor_product_block(1, &combined, 2, &y, 1);
        let t1 = tensor_product_block(1, &x1, 2, &y, 1);
        let t2 = tensor_product_block(1, &x2, 2, &y, 1);
        for i in 0..3 {
            assert_abs_diff_eq!(lhs[i], alpha * t1[i] + beta * t2[i], epsilon = 1e-13);
        }
    }
}
