//! Plain-text interchange of MO integrals.
//!
//! Grammar: a header `&FCI NORB=<n>,NELEC=<n>,MS2=0,` with optional
//! `ORBSYM=...` (parsed, ignored) and `ISYM=1`, terminated by `&END` or `/`;
//! then whitespace-separated records `value i j k l` with 1-based indices.
//! `i j 0 0` is the one-electron h_ij, `value i 0 0 0` an orbital energy,
//! `0 0 0 0` the core energy, and four nonzero indices a two-electron
//! integral (ij|kl) in chemists' notation.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, Array4};

use crate::error::CcError;
use crate::integrals::IntegralSet;

pub fn load_fcidump(path: impl AsRef<Path>) -> Result<IntegralSet, CcError> {
    let text = std::fs::read_to_string(path)?;
    parse_fcidump(&text)
}

pub fn parse_fcidump(text: &str) -> Result<IntegralSet, CcError> {
    let mut lines = text.lines().enumerate();

    // Header: accumulate tokens until &END or /.
    let mut header = String::new();
    let mut body_start = 0usize;
    let mut saw_terminator = false;
    for (ln, line) in lines.by_ref() {
        let trimmed = line.trim();
        if header.is_empty() && !trimmed.starts_with("&FCI") {
            return Err(CcError::Parse {
                line: ln + 1,
                msg: "expected header starting with &FCI".into(),
            });
        }
        if let Some(pos) = trimmed.find("&END").or_else(|| trimmed.find('/')) {
            header.push(' ');
            header.push_str(&trimmed[..pos]);
            body_start = ln + 1;
            saw_terminator = true;
            break;
        }
        header.push(' ');
        header.push_str(trimmed);
    }
    if !saw_terminator {
        return Err(CcError::Parse {
            line: 1,
            msg: "header never terminated by &END or /".into(),
        });
    }

    let header = header.replace("&FCI", " ");
    let mut n_orb: Option<usize> = None;
    let mut n_elec: Option<i64> = None;
    for pair in header.split(|c: char| c == ',' || c.is_whitespace()) {
        let pair = pair.trim();
        if pair.is_empty() {
            continue;
        }
        let (key, value) = match pair.split_once('=') {
            Some(kv) => kv,
            None => continue, // stray ORBSYM continuation tokens
        };
        match key.trim().to_ascii_uppercase().as_str() {
            "NORB" => {
                n_orb = Some(value.trim().parse().map_err(|_| CcError::Parse {
                    line: 1,
                    msg: format!("bad NORB value '{value}'"),
                })?)
            }
            "NELEC" => {
                n_elec = Some(value.trim().parse().map_err(|_| CcError::Parse {
                    line: 1,
                    msg: format!("bad NELEC value '{value}'"),
                })?)
            }
            "MS2" => {
                let ms2: i64 = value.trim().parse().map_err(|_| CcError::Parse {
                    line: 1,
                    msg: format!("bad MS2 value '{value}'"),
                })?;
                if ms2 != 0 {
                    return Err(CcError::Parse {
                        line: 1,
                        msg: format!("MS2 = {ms2} unsupported (closed shell only)"),
                    });
                }
            }
            "ORBSYM" | "ISYM" => {} // parsed but ignored
            _ => {}
        }
    }
    let n_orb = n_orb.ok_or(CcError::Parse { line: 1, msg: "header missing NORB".into() })?;
    let n_elec = n_elec.ok_or(CcError::Parse { line: 1, msg: "header missing NELEC".into() })?;
    if n_elec <= 0 {
        return Err(CcError::Parse { line: 1, msg: format!("NELEC = {n_elec} must be positive") });
    }
    if n_elec % 2 != 0 {
        return Err(CcError::OddElectronCount(n_elec));
    }
    let n_occ = (n_elec / 2) as usize;
    if n_occ > n_orb {
        return Err(CcError::InvalidDimensions(format!(
            "NELEC/2 = {n_occ} exceeds NORB = {n_orb}"
        )));
    }

    let mut h = Array2::zeros((n_orb, n_orb));
    let mut eri = Array4::zeros((n_orb, n_orb, n_orb, n_orb));
    let mut eps: Array1<f64> = Array1::zeros(n_orb);
    let mut have_eps = false;
    let mut core = 0.0;

    for (ln, line) in text.lines().enumerate().skip(body_start) {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 5 {
            return Err(CcError::Parse {
                line: ln + 1,
                msg: format!("expected 'value i j k l', found {} fields", tokens.len()),
            });
        }
        let value: f64 = tokens[0].parse().map_err(|_| CcError::Parse {
            line: ln + 1,
            msg: format!("bad value '{}'", tokens[0]),
        })?;
        let mut idx = [0i64; 4];
        for (slot, tok) in idx.iter_mut().zip(&tokens[1..]) {
            *slot = tok.parse().map_err(|_| CcError::Parse {
                line: ln + 1,
                msg: format!("bad index '{tok}'"),
            })?;
        }
        for &i in &idx {
            if i < 0 || i as usize > n_orb {
                return Err(CcError::IndexOutOfRange { line: ln + 1, index: i, n_orb });
            }
        }
        let [i, j, k, l] = idx.map(|v| v as usize);
        match (i, j, k, l) {
            (0, 0, 0, 0) => core = value,
            (i, 0, 0, 0) => {
                eps[i - 1] = value;
                have_eps = true;
            }
            (i, j, 0, 0) if j > 0 => {
                h[(i - 1, j - 1)] = value;
                h[(j - 1, i - 1)] = value;
            }
            (i, j, k, l) if j > 0 && k > 0 && l > 0 => {
                // records list unique integrals; close the 8-fold orbit
                for idx in crate::integrals::permutations8(i - 1, j - 1, k - 1, l - 1) {
                    eri[idx] = value;
                }
            }
            _ => {
                return Err(CcError::Parse {
                    line: ln + 1,
                    msg: format!("unrecognized index pattern {i} {j} {k} {l}"),
                })
            }
        }
    }

    let mut set = IntegralSet::new(n_orb, n_occ, core, h, eri, eps)?;
    if !have_eps {
        // Canonical assumption: use the mean-field diagonal. Off-diagonal
        // Fock elements are not checked here; non-canonical inputs converge
        // through the same equations but lose the MP2-first-step identity.
        let fock = set.fock();
        set.eps = Array1::from_iter((0..n_orb).map(|p| fock[(p, p)]));
    }
    Ok(set)
}

/// Writes the symmetry-unique integral list; inverse of [`load_fcidump`].
///
/// Values are printed in shortest round-trip form, so a load/write cycle
/// reproduces every number bit-for-bit.
pub fn write_fcidump(set: &IntegralSet, path: impl AsRef<Path>) -> Result<(), CcError> {
    std::fs::write(path, format_fcidump(set)?)?;
    Ok(())
}

pub fn format_fcidump(set: &IntegralSet) -> Result<String, CcError> {
    let n = set.n_orb();
    let mut out = String::new();
    writeln!(out, "&FCI NORB={},NELEC={},MS2=0,", n, 2 * set.n_occ()).unwrap();
    writeln!(out, "  ORBSYM={}", "1,".repeat(n)).unwrap();
    writeln!(out, "  ISYM=1,").unwrap();
    writeln!(out, "&END").unwrap();
    // two-electron block, canonical representatives only
    for p in 0..n {
        for q in 0..=p {
            for r in 0..=p {
                let s_max = if r == p { q } else { r };
                for s in 0..=s_max {
                    let v = set.eri[(p, q, r, s)];
                    if v != 0.0 {
                        writeln!(out, "{} {} {} {} {}", v, p + 1, q + 1, r + 1, s + 1).unwrap();
                    }
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..=p {
            if set.h[(p, q)] != 0.0 {
                writeln!(out, "{} {} {} 0 0", set.h[(p, q)], p + 1, q + 1).unwrap();
            }
        }
    }
    for p in 0..n {
        if set.eps[p] != 0.0 {
            writeln!(out, "{} {} 0 0 0", set.eps[p], p + 1).unwrap();
        }
    }
    if set.core_energy != 0.0 {
        writeln!(out, "{} 0 0 0 0", set.core_energy).unwrap();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_only_file() {
        let set = parse_fcidump("&FCI NORB=2,NELEC=2,MS2=0,\n&END\n-1.5 0 0 0 0\n").unwrap();
        assert_eq!(set.core_energy, -1.5);
        assert!(set.h.iter().all(|v| *v == 0.0));
        assert!(set.eri.iter().all(|v| *v == 0.0));
        assert_eq!(set.n_occ(), 1);
    }

    #[test]
    fn single_entry_closes_symmetry() {
        let set = parse_fcidump("&FCI NORB=2,NELEC=2,MS2=0,\n&END\n0.5 1 1 1 1\n").unwrap();
        assert_eq!(set.eri[(0, 0, 0, 0)], 0.5);
        let set2 =
            parse_fcidump("&FCI NORB=3,NELEC=2,MS2=0,\n&END\n0.25 2 1 3 1\n").unwrap();
        for idx in crate::integrals::permutations8(1, 0, 2, 0) {
            assert_eq!(set2.eri[idx], 0.25);
        }
    }

    #[test]
    fn malformed_header_reports_line() {
        let err = parse_fcidump("NORB=2\n").unwrap_err();
        match err {
            CcError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn odd_nelec_rejected() {
        let err = parse_fcidump("&FCI NORB=2,NELEC=3,MS2=0,\n&END\n").unwrap_err();
        assert!(matches!(err, CcError::OddElectronCount(3)));
    }

    #[test]
    fn out_of_range_index_reports_line() {
        let err =
            parse_fcidump("&FCI NORB=2,NELEC=2,MS2=0,\n&END\n0.5 1 1 1 3\n").unwrap_err();
        match err {
            CcError::IndexOutOfRange { line, index, n_orb } => {
                assert_eq!((line, index, n_orb), (3, 3, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_system_writes_header_only_file() {
        let set = parse_fcidump("&FCI NORB=2,NELEC=2,MS2=0,\n&END\n0 0 0 0 0\n").unwrap();
        let text = format_fcidump(&set).unwrap();
        let records: Vec<&str> = text
            .lines()
            .filter(|l| l.split_whitespace().count() == 5 && !l.contains('='))
            .collect();
        assert!(records.is_empty());
    }
}
