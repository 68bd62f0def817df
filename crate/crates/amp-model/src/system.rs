//! Molecular systems as consumed by the model: atoms, positions, per-atom
//! basis layouts and the orbital coefficient tensor.

use std::collections::BTreeMap;
use std::path::Path;

use irreps::{Irrep, IrrepsArray, IrrepsSignature, Parity, Rotation};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Per-element atomic-orbital shell structure, plus the signature every
/// atom gets padded to (the per-irrep maximum across elements).
#[derive(Debug, Clone, PartialEq)]
pub struct BasisLayout {
    entries: BTreeMap<String, IrrepsSignature>,
}

impl BasisLayout {
    pub fn new(entries: impl IntoIterator<Item = (String, IrrepsSignature)>) -> Self {
        BasisLayout { entries: entries.into_iter().collect() }
    }

    pub fn signature_of(&self, element: &str) -> Result<&IrrepsSignature, ModelError> {
        self.entries
            .get(element)
            .ok_or_else(|| ModelError::UnknownElement(element.to_string()))
    }

    pub fn elements(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn n_elements(&self) -> usize {
        self.entries.len()
    }

    /// Index of an element in the (sorted) element list, for one-hot
    /// species attributes.
    pub fn element_index(&self, element: &str) -> Option<usize> {
        self.entries.keys().position(|e| e == element)
    }

    /// The padding target: per (degree, parity) the maximum multiplicity
    /// over all elements. Dominates every element signature by construction.
    pub fn padded_signature(&self) -> IrrepsSignature {
        let mut max: BTreeMap<Irrep, usize> = BTreeMap::new();
        for sig in self.entries.values() {
            for &(mult, ir) in sig.entries() {
                let slot = max.entry(ir).or_insert(0);
                *slot = (*slot).max(mult);
            }
        }
        IrrepsSignature::new(max.into_iter().map(|(ir, m)| (m, ir)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub element: String,
    /// Position in Angstrom.
    pub position: [f64; 3],
}

/// Atoms, the orbital count split, and the coefficient tensor: one
/// [`IrrepsArray`] per (orbital, atom) in that atom's basis signature.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularSystem {
    pub atoms: Vec<Atom>,
    pub n_occ: usize,
    /// coeffs[mo][atom]
    pub coeffs: Vec<Vec<IrrepsArray>>,
    pub orbital_energies: Option<Vec<f64>>,
    pub layout: BasisLayout,
}

impl MolecularSystem {
    pub fn validate(&self) -> Result<(), ModelError> {
        let n_mo = self.coeffs.len();
        if self.n_occ == 0 || self.n_occ >= n_mo {
            return Err(ModelError::Dimensions(format!(
                "n_occ = {} must satisfy 0 < n_occ < n_mo = {n_mo}",
                self.n_occ
            )));
        }
        for (p, per_atom) in self.coeffs.iter().enumerate() {
            if per_atom.len() != self.atoms.len() {
                return Err(ModelError::Dimensions(format!(
                    "orbital {p} has {} atom blocks, system has {} atoms",
                    per_atom.len(),
                    self.atoms.len()
                )));
            }
            for (atom, arr) in self.atoms.iter().zip(per_atom.iter()) {
                let expect = self.layout.signature_of(&atom.element)?;
                if arr.signature() != expect {
                    return Err(ModelError::Dimensions(format!(
                        "orbital {p} on {} carries {}, layout says {}",
                        atom.element,
                        arr.signature(),
                        expect
                    )));
                }
            }
        }
        if let Some(e) = &self.orbital_energies {
            if e.len() != n_mo {
                return Err(ModelError::Dimensions(
                    "orbital energy count differs from orbital count".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn n_mo(&self) -> usize {
        self.coeffs.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    /// Rigidly rotates positions and coefficient blocks.
    pub fn rotated(&self, rot: &Rotation) -> Result<Self, ModelError> {
        let mut out = self.clone();
        for atom in &mut out.atoms {
            atom.position = rot.apply(atom.position);
        }
        for per_atom in &mut out.coeffs {
            for arr in per_atom.iter_mut() {
                *arr = arr.rotate(rot)?;
            }
        }
        Ok(out)
    }

    /// Flips the overall sign of one orbital's coefficients.
    pub fn sign_flipped(&self, mo: usize) -> Self {
        let mut out = self.clone();
        for arr in &mut out.coeffs[mo] {
            for v in arr.values_mut() {
                *v = -*v;
            }
        }
        out
    }

    /// Relabels atoms by `perm` (new index i holds old atom perm[i]) with
    /// consistent coefficient reindexing.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let atoms = perm.iter().map(|&i| self.atoms[i].clone()).collect();
        let coeffs = self
            .coeffs
            .iter()
            .map(|per_atom| perm.iter().map(|&i| per_atom[i].clone()).collect())
            .collect();
        MolecularSystem {
            atoms,
            n_occ: self.n_occ,
            coeffs,
            orbital_energies: self.orbital_energies.clone(),
            layout: self.layout.clone(),
        }
    }
}

/// Zero-pads every atom's coefficients up to the layout's padding target.
/// Original values occupy the leading channels of each (degree, parity)
/// block; the map is invertible on those channels via [`unpad_coefficients`].
pub fn pad_coefficients(
    sys: &MolecularSystem,
    layout: &BasisLayout,
) -> Result<Vec<Vec<IrrepsArray>>, ModelError> {
    let target = layout.padded_signature();
    let mut out = Vec::with_capacity(sys.n_mo());
    for per_atom in &sys.coeffs {
        let mut padded_row = Vec::with_capacity(per_atom.len());
        for (atom, arr) in sys.atoms.iter().zip(per_atom.iter()) {
            let src_sig = layout.signature_of(&atom.element)?;
            if arr.signature() != src_sig {
                return Err(ModelError::Dimensions(format!(
                    "coefficient block on {} does not match its layout",
                    atom.element
                )));
            }
            let mut padded = IrrepsArray::zeros(target.clone());
            for (src_off, src_mult, ir) in src_sig.blocks() {
                let dst_off = target
                    .block_offset(ir)
                    .expect("padding dominates element signatures");
                let dim = ir.dim();
                let src = &arr.values()[src_off..src_off + src_mult * dim];
                padded.values_mut()[dst_off..dst_off + src_mult * dim].copy_from_slice(src);
            }
            padded_row.push(padded);
        }
        out.push(padded_row);
    }
    Ok(out)
}

/// Inverse of [`pad_coefficients`] on the occupied channels.
pub fn unpad_coefficients(
    padded: &[Vec<IrrepsArray>],
    sys: &MolecularSystem,
    layout: &BasisLayout,
) -> Result<Vec<Vec<IrrepsArray>>, ModelError> {
    let mut out = Vec::with_capacity(padded.len());
    for row in padded {
        let mut orig_row = Vec::with_capacity(row.len());
        for (atom, arr) in sys.atoms.iter().zip(row.iter()) {
            let src_sig = layout.signature_of(&atom.element)?;
            let mut orig = IrrepsArray::zeros(src_sig.clone());
            for (dst_off, mult, ir) in src_sig.blocks() {
                let src_off = arr
                    .signature()
                    .block_offset(ir)
                    .ok_or_else(|| ModelError::Dimensions(format!("missing {ir} block")))?;
                let dim = ir.dim();
                orig.values_mut()[dst_off..dst_off + mult * dim]
                    .copy_from_slice(&arr.values()[src_off..src_off + mult * dim]);
            }
            orig_row.push(orig);
        }
        out.push(orig_row);
    }
    Ok(out)
}

// ---- versioned JSON interchange ----

#[derive(Serialize, Deserialize)]
struct AtomJson {
    el: String,
    xyz: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    format: String,
    atoms: Vec<AtomJson>,
    basis: BTreeMap<String, Vec<(usize, u32, String)>>,
    n_occ: usize,
    mo_coeffs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    orbital_energies: Option<Vec<f64>>,
}

/// Serializes a system as `molsys/1`: coefficients flattened per orbital in
/// atom order, each atom's canonical signature order (channel-major, orders
/// m = -l..l innermost).
pub fn save_system(sys: &MolecularSystem, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let doc = SystemJson {
        format: "molsys/1".into(),
        atoms: sys
            .atoms
            .iter()
            .map(|a| AtomJson { el: a.element.clone(), xyz: a.position })
            .collect(),
        basis: sys
            .layout
            .entries
            .iter()
            .map(|(el, sig)| {
                (
                    el.clone(),
                    sig.entries()
                        .iter()
                        .map(|&(m, ir)| (m, ir.degree, ir.parity.label().to_string()))
                        .collect(),
                )
            })
            .collect(),
        n_occ: sys.n_occ,
        mo_coeffs: sys
            .coeffs
            .iter()
            .map(|per_atom| {
                per_atom
                    .iter()
                    .flat_map(|arr| arr.values().iter().copied())
                    .collect()
            })
            .collect(),
        orbital_energies: sys.orbital_energies.clone(),
    };
    let text = serde_json::to_string(&doc).map_err(|e| ModelError::Format(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_system(path: impl AsRef<Path>) -> Result<MolecularSystem, ModelError> {
    let text = std::fs::read_to_string(path)?;
    let doc: SystemJson =
        serde_json::from_str(&text).map_err(|e| ModelError::Format(e.to_string()))?;
    if doc.format != "molsys/1" {
        return Err(ModelError::Format(format!("unsupported format tag '{}'", doc.format)));
    }
    let mut entries = Vec::new();
    for (el, shells) in &doc.basis {
        let sig = IrrepsSignature::new(shells.iter().map(|&(m, l, ref p)| {
            let parity = match p.as_str() {
                "e" => Parity::Even,
                "o" => Parity::Odd,
                other => panic!("bad parity label '{other}'"),
            };
            (m, Irrep::new(l, parity))
        }));
        entries.push((el.clone(), sig));
    }
    let layout = BasisLayout::new(entries);
    let mut coeffs = Vec::with_capacity(doc.mo_coeffs.len());
    for (p, flat) in doc.mo_coeffs.iter().enumerate() {
        let mut row = Vec::with_capacity(doc.atoms.len());
        let mut off = 0;
        for atom in &doc.atoms {
            let sig = layout.signature_of(&atom.el)?.clone();
            let dim = sig.total_dim();
            if off + dim > flat.len() {
                return Err(ModelError::Format(format!(
                    "orbital {p}: coefficient vector too short"
                )));
            }
            row.push(
                IrrepsArray::new(sig, flat[off..off + dim].to_vec())
                    .map_err(|e| ModelError::Format(e.to_string()))?,
            );
            off += dim;
        }
        if off != flat.len() {
            return Err(ModelError::Format(format!(
                "orbital {p}: coefficient vector has {} extra values",
                flat.len() - off
            )));
        }
        coeffs.push(row);
    }
    let sys = MolecularSystem {
        atoms: doc
            .atoms
            .into_iter()
            .map(|a| Atom { element: a.el, position: a.xyz })
            .collect(),
        n_occ: doc.n_occ,
        coeffs,
        orbital_energies: doc.orbital_energies,
        layout,
    };
    sys.validate()?;
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sig(s: &str) -> IrrepsSignature {
        IrrepsSignature::parse(s).unwrap()
    }

    pub fn sample_system(seed: u64) -> MolecularSystem {
        let layout = BasisLayout::new([
            ("X".to_string(), sig("2x0e + 1x1o")),
            ("Y".to_string(), sig("1x0e + 1x1o + 1x2e")),
        ]);
        let atoms = vec![
            Atom { element: "X".into(), position: [0.0, 0.0, 0.0] },
            Atom { element: "Y".into(), position: [1.1, 0.3, -0.4] },
            Atom { element: "X".into(), position: [-0.8, 0.9, 0.7] },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_mo = 4;
        let coeffs = (0..n_mo)
            .map(|_| {
                atoms
                    .iter()
                    .map(|a| {
                        let s = layout.signature_of(&a.element).unwrap().clone();
                        let vals =
                            (0..s.total_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                        IrrepsArray::new(s, vals).unwrap()
                    })
                    .collect()
            })
            .collect();
        MolecularSystem { atoms, n_occ: 1, coeffs, orbital_energies: None, layout }
    }

    #[test]
    fn padding_roundtrip_is_identity() {
        let sys = sample_system(3);
        let padded = pad_coefficients(&sys, &sys.layout).unwrap();
        let target = sys.layout.padded_signature();
        assert_eq!(target, sig("2x0e + 1x1o + 1x2e"));
        for row in &padded {
            for arr in row {
                assert_eq!(arr.signature(), &target);
            }
        }
        let back = unpad_coefficients(&padded, &sys, &sys.layout).unwrap();
        assert_eq!(back, sys.coeffs);
    }

    #[test]
    fn element_at_max_multiplicity_maps_identically() {
        let layout = BasisLayout::new([("Z".to_string(), sig("2x0e + 1x1o"))]);
        let atoms = vec![Atom { element: "Z".into(), position: [0.0; 3] }];
        let arr = IrrepsArray::new(sig("2x0e + 1x1o"), vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let sys = MolecularSystem {
            atoms,
            n_occ: 1,
            coeffs: vec![vec![arr.clone()], vec![arr.clone()]],
            orbital_energies: None,
            layout: layout.clone(),
        };
        let padded = pad_coefficients(&sys, &layout).unwrap();
        assert_eq!(padded[0][0].values(), arr.values());
    }

    #[test]
    fn zero_coefficients_stay_zero_after_padding() {
        let mut sys = sample_system(5);
        for arr in &mut sys.coeffs[2] {
            arr.values_mut().fill(0.0);
        }
        let padded = pad_coefficients(&sys, &sys.layout).unwrap();
        assert!(padded[2].iter().all(|a| a.values().iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn unknown_element_rejected() {
        let mut sys = sample_system(1);
        sys.atoms[0].element = "Q".into();
        assert!(pad_coefficients(&sys, &sys.layout).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let mut sys = sample_system(9);
        sys.orbital_energies = Some(vec![-1.0, -0.5, 0.5, 1.0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sys.json");
        save_system(&sys, &path).unwrap();
        let back = load_system(&path).unwrap();
        assert_eq!(sys, back);
    }
}
