//! Norm-based nonlinearities: the global epsilon norm and the separable
//! layer norm. Both map zero blocks to exactly zero blocks, which is what
//! keeps far-separated fragments decoupled downstream.

use crate::array::{IrrepsArray, Parity};
use crate::error::IrrepsError;

/// Parameters of [`norm_eps`]. The epsilon is used through its absolute
/// value so it can be optimized unconstrained.
#[derive(Debug, Clone, Copy)]
pub struct NormParams {
    pub epsilon: f64,
}

/// Divides every entry by `sqrt(Σ x² + |ε|)`.
///
/// When the denominator vanishes (zero input and ε = 0) the output is zero
/// by convention.
pub fn norm_eps(x: &IrrepsArray, p: &NormParams) -> IrrepsArray {
    let denom = (x.norm_sq() + p.epsilon.abs()).sqrt();
    let mut out = x.clone();
    if denom == 0.0 {
        out.values_mut().fill(0.0);
        return out;
    }
    for v in out.values_mut() {
        *v /= denom;
    }
    out
}

/// Scale and epsilon parameters of [`separable_layer_norm`].
#[derive(Debug, Clone)]
pub struct LayerNormParams {
    /// One scale per channel, aligned with the signature blocks.
    pub gamma: Vec<f64>,
    /// Epsilon of the scalar (l = 0) part, used as |ε|.
    pub eps_scalar: f64,
    /// Epsilon shared by all l >= 1 parts, used as |ε|.
    pub eps_higher: f64,
}

impl LayerNormParams {
    pub fn ones(sig: &crate::IrrepsSignature, eps_scalar: f64, eps_higher: f64) -> Self {
        LayerNormParams {
            gamma: vec![1.0; sig.num_channels()],
            eps_scalar,
            eps_higher,
        }
    }
}

/// Separable layer norm.
///
/// Scalar blocks get a standard layer normalization over channels (mean
/// centered, variance rescaled), applied independently per parity so the
/// parity bookkeeping never mixes. All l >= 1 blocks are rescaled by one
/// shared sigma, the root mean of the per-degree variances. Orders m within
/// a block are never mixed, and an all-zero l >= 1 part stays exactly zero.
pub fn separable_layer_norm(
    x: &IrrepsArray,
    p: &LayerNormParams,
) -> Result<IrrepsArray, IrrepsError> {
    let sig = x.signature().clone();
    if p.gamma.len() != sig.num_channels() {
        return Err(IrrepsError::SignatureMismatch(format!(
            "gamma has {} entries, signature has {} channels",
            p.gamma.len(),
            sig.num_channels()
        )));
    }
    let mut out = IrrepsArray::zeros(sig.clone());

    // channel index of each block start, aligned with p.gamma
    let mut chan_offsets = Vec::new();
    {
        let mut c = 0;
        for (m, _) in sig.entries() {
            chan_offsets.push(c);
            c += m;
        }
    }

    // Scalar part, per parity group.
    for parity in [Parity::Even, Parity::Odd] {
        let group: Vec<usize> = sig
            .entries()
            .iter()
            .enumerate()
            .filter(|(_, (_, ir))| ir.degree == 0 && ir.parity == parity)
            .map(|(i, _)| i)
            .collect();
        if group.is_empty() {
            continue;
        }
        let mut vals = Vec::new();
        for &bi in &group {
            let (off, mult, _) = sig.blocks().nth(bi).unwrap();
            vals.extend_from_slice(&x.values()[off..off + mult]);
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let denom = var.sqrt() + p.eps_scalar.abs();
        for &bi in &group {
            let (off, mult, _) = sig.blocks().nth(bi).unwrap();
            for k in 0..mult {
                let g = p.gamma[chan_offsets[bi] + k];
                let v = x.values()[off + k];
                out.values_mut()[off + k] = if denom == 0.0 {
                    0.0
                } else {
                    g * (v - mean) / denom
                };
            }
        }
    }

    // Higher part: one shared sigma over the mean of per-degree variances.
    let degrees: Vec<u32> = {
        let mut d: Vec<u32> = sig
            .entries()
            .iter()
            .filter(|(_, ir)| ir.degree >= 1)
            .map(|(_, ir)| ir.degree)
            .collect();
        d.sort_unstable();
        d.dedup();
        d
    };
    if !degrees.is_empty() {
        let mut mean_var = 0.0;
        for &l in &degrees {
            let mut sum_sq = 0.0;
            let mut channels = 0usize;
            for (off, mult, ir) in sig.blocks() {
                if ir.degree != l {
                    continue;
                }
                let dim = ir.dim();
                for v in &x.values()[off..off + mult * dim] {
                    sum_sq += v * v;
                }
                channels += mult;
            }
            let dim = 2 * l as usize + 1;
            mean_var += sum_sq / (channels as f64 * dim as f64);
        }
        mean_var /= degrees.len() as f64;
        let denom = mean_var.sqrt() + p.eps_higher.abs();
        for (bi, (off, mult, ir)) in sig.blocks().enumerate() {
            if ir.degree == 0 {
                continue;
            }
            let dim = ir.dim();
            for k in 0..mult {
                let g = p.gamma[chan_offsets[bi] + k];
                for m in 0..dim {
                    let v = x.values()[off + k * dim + m];
                    out.values_mut()[off + k * dim + m] =
                        if denom == 0.0 { 0.0 } else { g * v / denom };
                }
            }
        }
    }

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::IrrepsSignature;
    use approx::assert_abs_diff_eq;

    fn sig(s: &str) -> IrrepsSignature {
        IrrepsSignature::parse(s).unwrap()
    }

    #[test]
    fn norm_eps_zero_maps_to_zero() {
        let x = IrrepsArray::zeros(sig("2x0e + 1x1o"));
        let y = norm_eps(&x, &NormParams { epsilon: 0.0 });
        assert!(y.values().iter().all(|v| *v == 0.0));
        let y2 = norm_eps(&x, &NormParams { epsilon: 0.5 });
        assert!(y2.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn norm_eps_zero_epsilon_normalizes() {
        let s = sig("1x1o");
        let x = IrrepsArray::new(s, vec![3.0, 0.0, 4.0]).unwrap();
        let y = norm_eps(&x, &NormParams { epsilon: 0.0 });
        assert_abs_diff_eq!(y.norm_sq(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn norm_eps_formula_example() {
        // Σx² = 3 with ε = 1 divides by 2.
        let s = sig("3x0e");
        let x = IrrepsArray::new(s, vec![1.0, 1.0, 1.0]).unwrap();
        let y = norm_eps(&x, &NormParams { epsilon: 1.0 });
        for v in y.values() {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-14);
        }
        // sign of epsilon is immaterial
        let y2 = norm_eps(&x, &NormParams { epsilon: -1.0 });
        assert_eq!(y.values(), y2.values());
    }

    #[test]
    fn layer_norm_zero_higher_stays_zero() {
        let s = sig("2x0e + 2x1o + 1x2e");
        let mut x = IrrepsArray::zeros(s.clone());
        x.values_mut()[0] = 1.5;
        x.values_mut()[1] = -0.5;
        let p = LayerNormParams::ones(&s, 1e-3, 1e-3);
        let y = separable_layer_norm(&x, &p).unwrap();
        assert!(y.values()[2..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn layer_norm_sign_flip_flips_higher_part() {
        let s = sig("2x0e + 2x1o");
        let vals: Vec<f64> = (0..s.total_dim()).map(|i| (i as f64) * 0.3 - 0.7).collect();
        let x = IrrepsArray::new(s.clone(), vals.clone()).unwrap();
        let neg = IrrepsArray::new(s.clone(), vals.iter().map(|v| -v).collect()).unwrap();
        let p = LayerNormParams::ones(&s, 1e-2, 1e-2);
        let y = separable_layer_norm(&x, &p).unwrap();
        let yn = separable_layer_norm(&neg, &p).unwrap();
        for (a, b) in y.values()[2..].iter().zip(yn.values()[2..].iter()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn layer_norm_scalar_statistics() {
        let s = sig("4x0e");
        let x = IrrepsArray::new(s.clone(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = LayerNormParams::ones(&s, 0.0, 0.0);
        let y = separable_layer_norm(&x, &p).unwrap();
        let mean: f64 = y.values().iter().sum::<f64>() / 4.0;
        let var: f64 = y.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(var, 1.0, epsilon = 1e-12);
    }
}
