//! Shape descriptors shared by the tape kernels and the parameter registry.
//!
//! A feature vector on the tape is `n_repeat` consecutive segments (one per
//! atom), each laid out by an [`IrrepsSignature`]. The descriptors below
//! pre-resolve block offsets so the kernels run on flat slices.

use irreps::{cg_table, Irrep, IrrepsSignature, Parity};

/// Per-(degree, parity) channel mixing, applied independently to every
/// repeat segment. Weights are stored flat: for each block in order, a
/// row-major (out_mult, in_mult) matrix.
#[derive(Debug, Clone)]
pub struct LinearSpec {
    pub in_sig: IrrepsSignature,
    pub out_sig: IrrepsSignature,
    pub n_repeat: usize,
    pub blocks: Vec<LinBlock>,
    pub weight_len: usize,
}

#[derive(Debug, Clone)]
pub struct LinBlock {
    pub in_off: usize,
    pub out_off: usize,
    pub in_mult: usize,
    pub out_mult: usize,
    pub dim: usize,
    pub w_off: usize,
}

impl LinearSpec {
    pub fn new(in_sig: IrrepsSignature, out_sig: IrrepsSignature, n_repeat: usize) -> Self {
        let mut blocks = Vec::new();
        let mut w_off = 0;
        for (out_off, out_mult, ir) in out_sig.blocks() {
            if let Some(in_off) = in_sig.block_offset(ir) {
                let in_mult = in_sig.multiplicity(ir);
                blocks.push(LinBlock {
                    in_off,
                    out_off,
                    in_mult,
                    out_mult,
                    dim: ir.dim(),
                    w_off,
                });
                w_off += out_mult * in_mult;
            }
        }
        LinearSpec {
            in_sig,
            out_sig,
            n_repeat,
            blocks,
            weight_len: w_off,
        }
    }

    pub fn in_len(&self) -> usize {
        self.in_sig.total_dim() * self.n_repeat
    }

    pub fn out_len(&self) -> usize {
        self.out_sig.total_dim() * self.n_repeat
    }

    /// Per-weight uniform-init scale, 1/sqrt(fan_in) of the owning block.
    pub fn init_scales(&self) -> Vec<(usize, usize, f64)> {
        self.blocks
            .iter()
            .map(|b| {
                (
                    b.w_off,
                    b.out_mult * b.in_mult,
                    1.0 / (b.in_mult as f64).sqrt(),
                )
            })
            .collect()
    }
}

/// One coupling path of a tensor product.
#[derive(Debug, Clone)]
pub struct TpPath {
    pub off1: usize,
    pub mult1: usize,
    pub l1: u32,
    pub off2: usize,
    /// 1 for a broadcast right factor, otherwise equal to mult1.
    pub mult2: usize,
    pub l2: u32,
    /// Flat offset of the output irrep block.
    pub out_block_off: usize,
    /// Channel offset of this path inside the output block.
    pub out_ch_off: usize,
    pub l3: u32,
    /// Index into the per-path weight vector, if the product is weighted.
    pub weight_idx: Option<usize>,
}

/// Channel-aligned Clebsch-Gordan product of two feature vectors.
///
/// Each path couples one block of the left factor with one block of the
/// right factor into a slice of the output block; distinct paths into the
/// same output irrep occupy consecutive channel ranges.
#[derive(Debug, Clone)]
pub struct TpSpec {
    pub in1_sig: IrrepsSignature,
    pub in2_sig: IrrepsSignature,
    pub out_sig: IrrepsSignature,
    pub n_repeat: usize,
    /// Sum the per-repeat outputs into a single segment.
    pub sum_repeats: bool,
    pub paths: Vec<TpPath>,
    pub n_weights: usize,
}

pub struct TpOptions {
    pub n_repeat: usize,
    pub max_out_degree: u32,
    /// Keep only these output irreps (None keeps every realizable one).
    pub target: Option<Vec<Irrep>>,
    pub weighted: bool,
    /// Skip mirrored block pairs; valid when both factors are the same node.
    pub self_product: bool,
    pub sum_repeats: bool,
}

impl TpSpec {
    pub fn new(in1_sig: IrrepsSignature, in2_sig: IrrepsSignature, opts: TpOptions) -> Self {
        let table = cg_table();
        // collect raw paths in deterministic block order
        struct Raw {
            b1: (usize, usize, Irrep),
            b2: (usize, usize, Irrep),
            out: Irrep,
        }
        let mut raw = Vec::new();
        let blocks1: Vec<_> = in1_sig.blocks().collect();
        let blocks2: Vec<_> = in2_sig.blocks().collect();
        for (i1, b1) in blocks1.iter().enumerate() {
            for (i2, b2) in blocks2.iter().enumerate() {
                if opts.self_product && i2 < i1 {
                    continue;
                }
                let (l1, p1) = (b1.2.degree, b1.2.parity);
                let (l2, p2) = (b2.2.degree, b2.2.parity);
                if !(b2.1 == 1 || b2.1 == b1.1) {
                    continue; // channels must align or broadcast
                }
                let p3 = p1.combine(p2);
                let lo = l1.abs_diff(l2);
                let hi = (l1 + l2).min(opts.max_out_degree).min(irreps::ELL_MAX);
                for l3 in lo..=hi {
                    let out = Irrep::new(l3, p3);
                    if let Some(t) = &opts.target {
                        if !t.contains(&out) {
                            continue;
                        }
                    }
                    if table.tensor(l1, l2, l3).is_none() {
                        continue;
                    }
                    raw.push(Raw { b1: *b1, b2: *b2, out });
                }
            }
        }
        // lay out the output signature: channels grouped per irrep in path order
        let mut out_entries: Vec<(usize, Irrep)> = Vec::new();
        for r in &raw {
            match out_entries.iter_mut().find(|(_, ir)| *ir == r.out) {
                Some((m, _)) => *m += r.b1.1,
                None => out_entries.push((r.b1.1, r.out)),
            }
        }
        out_entries.sort_by_key(|&(_, ir)| ir);
        let out_sig = IrrepsSignature::new(out_entries.clone());

        let mut ch_used: Vec<(Irrep, usize)> =
            out_entries.iter().map(|&(_, ir)| (ir, 0)).collect();
        let mut paths = Vec::new();
        let mut n_weights = 0;
        for r in &raw {
            let out_block_off = out_sig.block_offset(r.out).unwrap();
            let used = ch_used
                .iter_mut()
                .find(|(ir, _)| *ir == r.out)
                .map(|(_, u)| u)
                .unwrap();
            let out_ch_off = *used;
            *used += r.b1.1;
            let weight_idx = if opts.weighted {
                let w = n_weights;
                n_weights += 1;
                Some(w)
            } else {
                None
            };
            paths.push(TpPath {
                off1: r.b1.0,
                mult1: r.b1.1,
                l1: r.b1.2.degree,
                off2: r.b2.0,
                mult2: r.b2.1,
                l2: r.b2.2.degree,
                out_block_off,
                out_ch_off,
                l3: r.out.degree,
                weight_idx,
            });
        }
        TpSpec {
            in1_sig,
            in2_sig,
            out_sig,
            n_repeat: opts.n_repeat,
            sum_repeats: opts.sum_repeats,
            paths,
            n_weights,
        }
    }

    /// The invariant pairing of a signature with itself: every block coupled
    /// against the same block into degree 0, summed over repeats.
    pub fn invariant_pairing(sig: IrrepsSignature, n_repeat: usize) -> Self {
        TpSpec::new(
            sig.clone(),
            sig,
            TpOptions {
                n_repeat,
                max_out_degree: 0,
                target: Some(vec![Irrep::new(0, Parity::Even)]),
                weighted: false,
                self_product: false,
                sum_repeats: true,
            },
        )
    }

    pub fn in1_len(&self) -> usize {
        self.in1_sig.total_dim() * self.n_repeat
    }

    pub fn in2_len(&self) -> usize {
        self.in2_sig.total_dim() * self.n_repeat
    }

    pub fn out_len(&self) -> usize {
        if self.sum_repeats {
            self.out_sig.total_dim()
        } else {
            self.out_sig.total_dim() * self.n_repeat
        }
    }
}

/// Separable layer norm shapes: scalar groups per parity, higher blocks
/// grouped by degree, applied independently per repeat segment.
#[derive(Debug, Clone)]
pub struct LayerNormSpec {
    pub sig: IrrepsSignature,
    pub n_repeat: usize,
    /// (block flat offset, mult, gamma channel offset) of l = 0 blocks,
    /// grouped by parity.
    pub scalar_groups: Vec<Vec<(usize, usize, usize)>>,
    /// Distinct degrees >= 1 with their blocks (offset, mult, dim, gamma off).
    pub higher: Vec<(u32, Vec<(usize, usize, usize, usize)>)>,
    pub n_channels: usize,
}

impl LayerNormSpec {
    pub fn new(sig: IrrepsSignature, n_repeat: usize) -> Self {
        let mut chan_off = Vec::new();
        let mut c = 0;
        for (m, _) in sig.entries() {
            chan_off.push(c);
            c += m;
        }
        let mut scalar_groups = Vec::new();
        for parity in [Parity::Even, Parity::Odd] {
            let group: Vec<(usize, usize, usize)> = sig
                .blocks()
                .enumerate()
                .filter(|(_, (_, _, ir))| ir.degree == 0 && ir.parity == parity)
                .map(|(bi, (off, mult, _))| (off, mult, chan_off[bi]))
                .collect();
            if !group.is_empty() {
                scalar_groups.push(group);
            }
        }
        let mut degrees: Vec<u32> = sig
            .entries()
            .iter()
            .filter(|(_, ir)| ir.degree >= 1)
            .map(|(_, ir)| ir.degree)
            .collect();
        degrees.sort_unstable();
        degrees.dedup();
        let higher = degrees
            .into_iter()
            .map(|l| {
                let blocks: Vec<(usize, usize, usize, usize)> = sig
                    .blocks()
                    .enumerate()
                    .filter(|(_, (_, _, ir))| ir.degree == l)
                    .map(|(bi, (off, mult, ir))| (off, mult, ir.dim(), chan_off[bi]))
                    .collect();
                (l, blocks)
            })
            .collect();
        LayerNormSpec {
            n_channels: sig.num_channels(),
            sig,
            n_repeat,
            scalar_groups,
            higher,
        }
    }

    pub fn len(&self) -> usize {
        self.sig.total_dim() * self.n_repeat
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(s: &str) -> IrrepsSignature {
        IrrepsSignature::parse(s).unwrap()
    }

    #[test]
    fn linear_spec_block_layout() {
        let spec = LinearSpec::new(sig("2x0e + 3x1o"), sig("4x0e + 2x1o + 1x2e"), 2);
        assert_eq!(spec.blocks.len(), 2); // 2e has no input counterpart
        assert_eq!(spec.weight_len, 4 * 2 + 2 * 3);
        assert_eq!(spec.in_len(), 2 * (2 + 9));
        assert_eq!(spec.out_len(), 2 * (4 + 6 + 5));
    }

    #[test]
    fn tp_spec_enumerates_triangle_paths() {
        let h = sig("4x0e + 4x1o + 4x2e");
        let spec = TpSpec::new(
            h.clone(),
            h.clone(),
            TpOptions {
                n_repeat: 1,
                max_out_degree: 2,
                target: None,
                weighted: false,
                self_product: true,
                sum_repeats: false,
            },
        );
        // all paths have aligned channels
        for p in &spec.paths {
            assert_eq!(p.mult1, 4);
            assert_eq!(p.mult2, 4);
        }
        // no 0o output is realizable from (0e,1o,2e) x (0e,1o,2e)
        assert_eq!(spec.out_sig.multiplicity(Irrep::new(0, Parity::Odd)), 0);
        assert!(spec.out_sig.multiplicity(Irrep::new(1, Parity::Even)) > 0);
    }

    #[test]
    fn invariant_pairing_is_channelwise() {
        let q = sig("3x0e + 2x1e + 1x2e");
        let spec = TpSpec::invariant_pairing(q.clone(), 5);
        assert_eq!(spec.out_len(), q.num_channels());
        assert!(spec.sum_repeats);
        assert_eq!(spec.paths.len(), 3);
    }
}
