//! Real spherical harmonics up to degree 4, orthonormal over the unit
//! sphere and equivariant against [`crate::wigner_d`]:
//! `Y_l(R u) = D_l(R) Y_l(u)`.

use crate::array::{Irrep, IrrepsArray, IrrepsSignature, Parity};
use crate::error::IrrepsError;

const UNIT_TOL: f64 = 1e-12;

/// Values of the real degree-l harmonics at a unit vector, m = -l..l.
pub fn sh_block(l: u32, u: [f64; 3]) -> Vec<f64> {
    let (x, y, z) = (u[0], u[1], u[2]);
    match l {
        0 => vec![0.28209479177387814],
        1 => {
            let c = 0.4886025119029199;
            vec![c * y, c * z, c * x]
        }
        2 => {
            let c1 = 1.0925484305920792;
            vec![
                c1 * x * y,
                c1 * y * z,
                0.31539156525252005 * (3.0 * z * z - 1.0),
                c1 * x * z,
                0.5462742152960396 * (x * x - y * y),
            ]
        }
        3 => vec![
            0.5900435899266435 * y * (3.0 * x * x - y * y),
            2.890611442640554 * x * y * z,
            0.4570457994644658 * y * (5.0 * z * z - 1.0),
            0.3731763325901154 * z * (5.0 * z * z - 3.0),
            0.4570457994644658 * x * (5.0 * z * z - 1.0),
            1.445305721320277 * z * (x * x - y * y),
            0.5900435899266435 * x * (x * x - 3.0 * y * y),
        ],
        4 => {
            let (x2, y2, z2) = (x * x, y * y, z * z);
            vec![
                2.5033429417967046 * x * y * (x2 - y2),
                1.7701307697799304 * y * z * (3.0 * x2 - y2),
                0.9461746957575601 * x * y * (7.0 * z2 - 1.0),
                0.6690465435572892 * y * z * (7.0 * z2 - 3.0),
                0.10578554691520431 * (35.0 * z2 * z2 - 30.0 * z2 + 3.0),
                0.6690465435572892 * x * z * (7.0 * z2 - 3.0),
                0.47308734787878004 * (x2 - y2) * (7.0 * z2 - 1.0),
                1.7701307697799304 * x * z * (x2 - 3.0 * y2),
                0.6258357354491761 * (x2 * x2 - 6.0 * x2 * y2 + y2 * y2),
            ]
        }
        _ => panic!("spherical harmonics tabulated only up to degree 4"),
    }
}

/// Real spherical harmonics for l = 0..=l_max at a unit vector, packed as an
/// [`IrrepsArray`] with one channel per degree and natural parities.
pub fn spherical_harmonics(l_max: u32, u: [f64; 3]) -> Result<IrrepsArray, IrrepsError> {
    if l_max > crate::cg::ELL_MAX {
        return Err(IrrepsError::DegreeTooLarge(l_max));
    }
    let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(IrrepsError::NotUnit(norm));
    }
    let sig = sh_signature(l_max);
    let mut values = Vec::with_capacity(sig.total_dim());
    for l in 0..=l_max {
        values.extend(sh_block(l, u));
    }
    IrrepsArray::new(sig, values)
}

/// Signature of the harmonic stack: 1x0e + 1x1o + 1x2e + ...
pub fn sh_signature(l_max: u32) -> IrrepsSignature {
    IrrepsSignature::new((0..=l_max).map(|l| (1, Irrep::new(l, Parity::natural(l)))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_unit() {
        assert!(spherical_harmonics(2, [1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn scalar_component_is_constant() {
        let a = spherical_harmonics(0, [0.0, 0.0, 1.0]).unwrap();
        let b = spherical_harmonics(0, [0.6, 0.8, 0.0]).unwrap();
        assert_eq!(a.values()[0], b.values()[0]);
    }
}
