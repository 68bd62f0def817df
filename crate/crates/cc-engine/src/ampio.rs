//! Versioned JSON interchange of amplitude sets.
//!
//! Schema `ampjson/1`: `{format, n_occ, n_virt, t1: [[..]], t2: [[[[..]]]]}`
//! with row-major nesting `t1[i][a]`, `t2[i][j][a][b]`.

use std::path::Path;

use ndarray::{Array2, Array4};
use serde::{Deserialize, Serialize};

use crate::error::CcError;
use crate::integrals::AmplitudeSet;

#[derive(Serialize, Deserialize)]
struct AmpJson {
    format: String,
    n_occ: usize,
    n_virt: usize,
    t1: Vec<Vec<f64>>,
    t2: Vec<Vec<Vec<Vec<f64>>>>,
}

pub fn save_amplitudes(amp: &AmplitudeSet, path: impl AsRef<Path>) -> Result<(), CcError> {
    let (o, v) = (amp.n_occ(), amp.n_virt());
    let doc = AmpJson {
        format: "ampjson/1".into(),
        n_occ: o,
        n_virt: v,
        t1: (0..o)
            .map(|i| (0..v).map(|a| amp.t1[(i, a)]).collect())
            .collect(),
        t2: (0..o)
            .map(|i| {
                (0..o)
                    .map(|j| {
                        (0..v)
                            .map(|a| (0..v).map(|b| amp.t2[(i, j, a, b)]).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect(),
    };
    let text = serde_json::to_string(&doc).map_err(|e| CcError::AmpFormat(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_amplitudes(path: impl AsRef<Path>) -> Result<AmplitudeSet, CcError> {
    let text = std::fs::read_to_string(path)?;
    let doc: AmpJson =
        serde_json::from_str(&text).map_err(|e| CcError::AmpFormat(e.to_string()))?;
    if doc.format != "ampjson/1" {
        return Err(CcError::AmpFormat(format!(
            "unsupported format tag '{}'",
            doc.format
        )));
    }
    let (o, v) = (doc.n_occ, doc.n_virt);
    let mut t1 = Array2::zeros((o, v));
    if doc.t1.len() != o {
        return Err(CcError::AmpFormat("t1 row count".into()));
    }
    for (i, row) in doc.t1.iter().enumerate() {
        if row.len() != v {
            return Err(CcError::AmpFormat(format!("t1 row {i} length")));
        }
        for (a, val) in row.iter().enumerate() {
            t1[(i, a)] = *val;
        }
    }
    let mut t2 = Array4::zeros((o, o, v, v));
    if doc.t2.len() != o {
        return Err(CcError::AmpFormat("t2 outer length".into()));
    }
    for (i, bi) in doc.t2.iter().enumerate() {
        if bi.len() != o {
            return Err(CcError::AmpFormat(format!("t2[{i}] length")));
        }
        for (j, bj) in bi.iter().enumerate() {
            if bj.len() != v {
                return Err(CcError::AmpFormat(format!("t2[{i}][{j}] length")));
            }
            for (a, ba) in bj.iter().enumerate() {
                if ba.len() != v {
                    return Err(CcError::AmpFormat(format!("t2[{i}][{j}][{a}] length")));
                }
                for (b, val) in ba.iter().enumerate() {
                    t2[(i, j, a, b)] = *val;
                }
            }
        }
    }
    Ok(AmplitudeSet { t1, t2 })
}
