//! Equivariance-preserving linear maps: channels mix only within identical
//! (degree, parity) blocks and orders m are never touched.

use ndarray::Array2;

use crate::array::{Irrep, IrrepsArray, IrrepsSignature};
use crate::error::IrrepsError;

/// Per-(degree, parity) weight matrices between two signatures.
#[derive(Debug, Clone)]
pub struct LinearWeights {
    in_sig: IrrepsSignature,
    out_sig: IrrepsSignature,
    /// One (out_mult, in_mult) matrix per irrep present in both signatures.
    mats: Vec<(Irrep, Array2<f64>)>,
}

impl LinearWeights {
    /// Builds weights from matrices keyed by irrep. Every irrep present in
    /// both signatures must come with a matrix of shape (out_mult, in_mult);
    /// output blocks with no input counterpart are filled with zeros.
    pub fn from_mats(
        in_sig: IrrepsSignature,
        out_sig: IrrepsSignature,
        mats: Vec<(Irrep, Array2<f64>)>,
    ) -> Result<Self, IrrepsError> {
        for (_, mult_out, ir) in out_sig.blocks() {
            let mult_in = in_sig.multiplicity(ir);
            if mult_in == 0 {
                continue;
            }
            let mat = mats
                .iter()
                .find(|(j, _)| *j == ir)
                .map(|(_, m)| m)
                .ok_or_else(|| IrrepsError::SignatureMismatch(format!("missing weights for {ir}")))?;
            if mat.shape() != [mult_out, mult_in] {
                return Err(IrrepsError::SignatureMismatch(format!(
                    "weights for {ir} have shape {:?}, expected ({mult_out}, {mult_in})",
                    mat.shape()
                )));
            }
        }
        Ok(LinearWeights { in_sig, out_sig, mats })
    }

    pub fn identity(sig: IrrepsSignature) -> Self {
        let mats = sig
            .entries()
            .iter()
            .map(|&(m, ir)| (ir, Array2::eye(m)))
            .collect();
        LinearWeights {
            in_sig: sig.clone(),
            out_sig: sig,
            mats,
        }
    }

    pub fn zeros(in_sig: IrrepsSignature, out_sig: IrrepsSignature) -> Self {
        let mats = out_sig
            .entries()
            .iter()
            .filter(|(_, ir)| in_sig.multiplicity(*ir) > 0)
            .map(|&(m, ir)| (ir, Array2::zeros((m, in_sig.multiplicity(ir)))))
            .collect();
        LinearWeights { in_sig, out_sig, mats }
    }

    pub fn in_signature(&self) -> &IrrepsSignature {
        &self.in_sig
    }

    pub fn out_signature(&self) -> &IrrepsSignature {
        &self.out_sig
    }

    fn mat(&self, ir: Irrep) -> Option<&Array2<f64>> {
        self.mats.iter().find(|(j, _)| *j == ir).map(|(_, m)| m)
    }
}

/// Applies per-(degree, parity) channel mixing: for each block,
/// `out[ko][m] = Σ_ki W[ko, ki] x[ki][m]`.
pub fn equivariant_linear(w: &LinearWeights, x: &IrrepsArray) -> Result<IrrepsArray, IrrepsError> {
    if x.signature() != &w.in_sig {
        return Err(IrrepsError::SignatureMismatch(format!(
            "input signature {} does not match weight input {}",
            x.signature(),
            w.in_sig
        )));
    }
    let mut out = IrrepsArray::zeros(w.out_sig.clone());
    for (out_off, out_mult, ir) in w.out_sig.blocks() {
        let in_off = match x.signature().block_offset(ir) {
            Some(o) => o,
            None => continue, // zero-filled output block
        };
        let in_mult = x.signature().multiplicity(ir);
        let dim = ir.dim();
        let mat = w.mat(ir).expect("validated at construction");
        let xv = x.values();
        let ov = out.values_mut();
        for ko in 0..out_mult {
            for ki in 0..in_mult {
                let wv = mat[(ko, ki)];
                if wv == 0.0 {
                    continue;
                }
                for m in 0..dim {
                    ov[out_off + ko * dim + m] += wv * xv[in_off + ki * dim + m];
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::Parity;

    fn sig(s: &str) -> IrrepsSignature {
        IrrepsSignature::parse(s).unwrap()
    }

    #[test]
    fn identity_weights_preserve_input() {
        let s = sig("2x0e + 3x1o + 1x2e");
        let x = IrrepsArray::new(s.clone(), (0..s.total_dim()).map(|i| i as f64 * 0.1).collect())
            .unwrap();
        let w = LinearWeights::identity(s);
        let y = equivariant_linear(&w, &x).unwrap();
        assert_eq!(x.values(), y.values());
    }

    #[test]
    fn zero_weights_yield_zero() {
        let s = sig("2x0e + 3x1o");
        let x = IrrepsArray::new(s.clone(), vec![1.0; s.total_dim()]).unwrap();
        let w = LinearWeights::zeros(s.clone(), s);
        let y = equivariant_linear(&w, &x).unwrap();
        assert!(y.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let s_in = sig("2x1o");
        let s_out = sig("3x1o");
        let bad = vec![(Irrep::new(1, Parity::Odd), Array2::<f64>::zeros((2, 2)))];
        assert!(LinearWeights::from_mats(s_in, s_out, bad).is_err());
    }

    #[test]
    fn missing_input_block_zero_fills() {
        let s_in = sig("2x0e");
        let s_out = sig("1x0e + 1x1o");
        let w = LinearWeights::from_mats(
            s_in.clone(),
            s_out,
            vec![(Irrep::new(0, Parity::Even), Array2::from_elem((1, 2), 1.0))],
        )
        .unwrap();
        let x = IrrepsArray::new(s_in, vec![0.5, 0.25]).unwrap();
        let y = equivariant_linear(&w, &x).unwrap();
        assert_eq!(y.values()[0], 0.75);
        assert!(y.values()[1..].iter().all(|v| *v == 0.0));
    }
}
