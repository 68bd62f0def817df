use std::fmt;

use crate::error::IrrepsError;

/// Behavior under spatial inversion. Carried as bookkeeping; proper rotations
/// never mix parities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn combine(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Natural parity of a degree-l spherical harmonic, (-1)^l.
    pub fn natural(degree: u32) -> Parity {
        if degree % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn label(self) -> char {
        match self {
            Parity::Even => 'e',
            Parity::Odd => 'o',
        }
    }
}

/// An irreducible representation of the rotation group: degree l plus a
/// parity label. Its carrier space has dimension 2l+1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Irrep {
    pub degree: u32,
    pub parity: Parity,
}

impl Irrep {
    pub fn new(degree: u32, parity: Parity) -> Self {
        Irrep { degree, parity }
    }

    pub fn dim(&self) -> usize {
        2 * self.degree as usize + 1
    }
}

impl fmt::Display for Irrep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.degree, self.parity.label())
    }
}

/// An ordered list of (multiplicity, irrep) blocks.
///
/// Signatures are kept canonical: entries sorted by (degree, parity) with at
/// most one entry per irrep. The flat component ordering of an array with
/// this signature is fixed once and for all: blocks in signature order, and
/// within a block channel k is the outer index and order m = -l..l the inner
/// one, so component (k, m) of a block sits at `k*(2l+1) + (m + l)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrrepsSignature {
    entries: Vec<(usize, Irrep)>,
}

impl IrrepsSignature {
    /// Builds a canonical signature, merging duplicate irreps and dropping
    /// zero multiplicities.
    pub fn new(entries: impl IntoIterator<Item = (usize, Irrep)>) -> Self {
        let mut list: Vec<(usize, Irrep)> = Vec::new();
        for (mult, ir) in entries {
            if mult == 0 {
                continue;
            }
            match list.iter_mut().find(|(_, j)| *j == ir) {
                Some((m, _)) => *m += mult,
                None => list.push((mult, ir)),
            }
        }
        list.sort_by_key(|&(_, ir)| ir);
        IrrepsSignature { entries: list }
    }

    pub fn scalar() -> Self {
        IrrepsSignature::new([(1, Irrep::new(0, Parity::Even))])
    }

    /// Parses strings like `"16x0e + 16x1o + 16x2e"`.
    pub fn parse(s: &str) -> Result<Self, IrrepsError> {
        let mut entries = Vec::new();
        for part in s.split('+') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (mult_s, irrep_s) = match part.split_once('x') {
                Some(p) => p,
                None => ("1", part),
            };
            let mult: usize = mult_s
                .trim()
                .parse()
                .map_err(|_| IrrepsError::SignatureMismatch(format!("bad multiplicity in '{part}'")))?;
            let irrep_s = irrep_s.trim();
            let parity = match irrep_s.chars().last() {
                Some('e') => Parity::Even,
                Some('o') => Parity::Odd,
                _ => {
                    return Err(IrrepsError::SignatureMismatch(format!(
                        "missing parity label in '{part}'"
                    )))
                }
            };
            let degree: u32 = irrep_s[..irrep_s.len() - 1]
                .trim()
                .parse()
                .map_err(|_| IrrepsError::SignatureMismatch(format!("bad degree in '{part}'")))?;
            entries.push((mult, Irrep::new(degree, parity)));
        }
        Ok(IrrepsSignature::new(entries))
    }

    pub fn entries(&self) -> &[(usize, Irrep)] {
        &self.entries
    }

    pub fn total_dim(&self) -> usize {
        self.entries.iter().map(|(m, ir)| m * ir.dim()).sum()
    }

    /// Total number of channels, summed over blocks.
    pub fn num_channels(&self) -> usize {
        self.entries.iter().map(|(m, _)| m).sum()
    }

    pub fn max_degree(&self) -> u32 {
        self.entries.iter().map(|(_, ir)| ir.degree).max().unwrap_or(0)
    }

    pub fn multiplicity(&self, ir: Irrep) -> usize {
        self.entries
            .iter()
            .find(|(_, j)| *j == ir)
            .map(|(m, _)| *m)
            .unwrap_or(0)
    }

    /// Flat offset of the block carrying `ir`, if present.
    pub fn block_offset(&self, ir: Irrep) -> Option<usize> {
        let mut off = 0;
        for (m, j) in &self.entries {
            if *j == ir {
                return Some(off);
            }
            off += m * j.dim();
        }
        None
    }

    /// Iterates blocks as (flat offset, multiplicity, irrep).
    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize, Irrep)> + '_ {
        let mut off = 0;
        self.entries.iter().map(move |&(m, ir)| {
            let cur = off;
            off += m * ir.dim();
            (cur, m, ir)
        })
    }
}

impl fmt::Display for IrrepsSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(m, ir)| format!("{m}x{ir}"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Irrep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Irrep {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let sig = IrrepsSignature::parse(&s).map_err(serde::de::Error::custom)?;
        match sig.entries() {
            [(1, ir)] => Ok(*ir),
            _ => Err(serde::de::Error::custom(format!("'{s}' is not a single irrep"))),
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for IrrepsSignature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for IrrepsSignature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        IrrepsSignature::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A flat real array partitioned into irreducible blocks by a signature.
#[derive(Debug, Clone, PartialEq)]
pub struct IrrepsArray {
    sig: IrrepsSignature,
    values: Vec<f64>,
}

impl IrrepsArray {
    pub fn new(sig: IrrepsSignature, values: Vec<f64>) -> Result<Self, IrrepsError> {
        if values.len() != sig.total_dim() {
            return Err(IrrepsError::LengthMismatch {
                got: values.len(),
                expected: sig.total_dim(),
            });
        }
        Ok(IrrepsArray { sig, values })
    }

    pub fn zeros(sig: IrrepsSignature) -> Self {
        let n = sig.total_dim();
        IrrepsArray { sig, values: vec![0.0; n] }
    }

    pub fn signature(&self) -> &IrrepsSignature {
        &self.sig
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Slice of channel k of the block carrying `ir` (length 2l+1).
    pub fn block_channel(&self, ir: Irrep, k: usize) -> &[f64] {
        let off = self.sig.block_offset(ir).expect("irrep not in signature");
        let d = ir.dim();
        &self.values[off + k * d..off + (k + 1) * d]
    }

    /// Applies a rotation block-wise via Wigner matrices. Parities are
    /// untouched (proper rotation).
    pub fn rotate(&self, rot: &crate::Rotation) -> Result<IrrepsArray, IrrepsError> {
        let mut out = self.clone();
        for (off, mult, ir) in self.sig.blocks() {
            if ir.degree == 0 {
                continue;
            }
            let d = crate::wigner::wigner_d(ir.degree, rot)?;
            let dim = ir.dim();
            for k in 0..mult {
                let src = &self.values[off + k * dim..off + (k + 1) * dim];
                let dst = &mut out.values[off + k * dim..off + (k + 1) * dim];
                for (i, slot) in dst.iter_mut().enumerate() {
                    *slot = (0..dim).map(|j| d[(i, j)] * src[j]).sum();
                }
            }
        }
        Ok(out)
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_canonicalizes() {
        let s = IrrepsSignature::new([
            (2, Irrep::new(1, Parity::Odd)),
            (1, Irrep::new(0, Parity::Even)),
            (3, Irrep::new(1, Parity::Odd)),
        ]);
        assert_eq!(s.entries().len(), 2);
        assert_eq!(s.entries()[0], (1, Irrep::new(0, Parity::Even)));
        assert_eq!(s.entries()[1], (5, Irrep::new(1, Parity::Odd)));
        assert_eq!(s.total_dim(), 1 + 5 * 3);
    }

    #[test]
    fn signature_parse_roundtrip() {
        let s = IrrepsSignature::parse("16x0e + 16x1o + 16x2e").unwrap();
        assert_eq!(s.total_dim(), 16 + 48 + 80);
        assert_eq!(format!("{s}"), "16x0e + 16x1o + 16x2e");
    }

    #[test]
    fn array_length_checked() {
        let s = IrrepsSignature::parse("1x1o").unwrap();
        assert!(IrrepsArray::new(s.clone(), vec![0.0; 2]).is_err());
        assert!(IrrepsArray::new(s, vec![0.0; 3]).is_ok());
    }
}
