//! Quasi-Newton solution of the amplitude equations.
//!
//! Updates follow `t <- t - D^-1 Omega(t)` where D is the diagonal of
//! orbital-energy differences: `e_a - e_i` for singles entries and
//! `e_a + e_b - e_i - e_j` for doubles. With this sign the very first update
//! from zero amplitudes on a canonical reference reproduces the MP2
//! amplitudes. Convergence is judged on the L2 norm of the amplitude update
//! (t1 and t2 concatenated); residual norms are recorded but not used to
//! stop. No iterative-subspace acceleration is applied.

use ndarray::{Array2, Array4};

use crate::error::CcError;
use crate::integrals::{AmplitudeSet, IntegralSet};
use crate::mp2::{correlation_energy, mp2_amplitudes};
use crate::residual::ccsd_residual;

const DEGENERACY_FLOOR: f64 = 1e-10;

/// Initial amplitudes for the solver.
#[derive(Debug, Clone)]
pub enum Guess {
    Zeros,
    Mp2,
    Provided(AmplitudeSet),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Convergence threshold on the L2 norm of the amplitude update.
    pub tolerance: f64,
    /// Maximum number of quasi-Newton updates. Zero yields an immediate
    /// non-converged report.
    pub max_iter: usize,
    pub guess: Guess,
    /// Optional shift added to the preconditioner denominators for
    /// near-degenerate references. Zero by default.
    pub level_shift: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-7,
            max_iter: 100,
            guess: Guess::Mp2,
            level_shift: 0.0,
        }
    }
}

/// Outcome of a solve. `converged` implies the last amplitude update norm
/// was at or below the configured tolerance.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub amplitudes: AmplitudeSet,
    /// Correlation energy at the final amplitudes (Hartree).
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual_norm_history: Vec<f64>,
}

pub fn ccsd_solve(set: &IntegralSet, cfg: &SolverConfig) -> Result<SolveReport, CcError> {
    if !(cfg.tolerance > 0.0) {
        return Err(CcError::InvalidDimensions(format!(
            "tolerance {} must be positive",
            cfg.tolerance
        )));
    }
    let (o, v) = (set.n_occ(), set.n_virt());
    if v == 0 {
        return Err(CcError::InvalidDimensions(
            "no virtual orbitals: nothing to solve".into(),
        ));
    }

    // diagonal preconditioner from orbital-energy differences
    let mut d1 = Array2::zeros((o, v));
    for i in 0..o {
        for a in 0..v {
            let d = set.eps[o + a] - set.eps[i] + cfg.level_shift;
            if d.abs() < DEGENERACY_FLOOR {
                return Err(CcError::DegenerateGap(d.abs()));
            }
            d1[(i, a)] = d;
        }
    }
    let mut d2 = Array4::zeros((o, o, v, v));
    for i in 0..o {
        for j in 0..o {
            for a in 0..v {
                for b in 0..v {
                    let d = set.eps[o + a] + set.eps[o + b] - set.eps[i] - set.eps[j]
                        + cfg.level_shift;
                    if d.abs() < DEGENERACY_FLOOR {
                        return Err(CcError::DegenerateGap(d.abs()));
                    }
                    d2[(i, j, a, b)] = d;
                }
            }
        }
    }

    let mut t = match &cfg.guess {
        Guess::Zeros => AmplitudeSet::zeros(o, v),
        Guess::Mp2 => mp2_amplitudes(set)?,
        Guess::Provided(amp) => {
            if amp.n_occ() != o || amp.n_virt() != v {
                return Err(CcError::ShapeMismatch(format!(
                    "provided guess ({}, {}) vs system ({o}, {v})",
                    amp.n_occ(),
                    amp.n_virt()
                )));
            }
            amp.clone()
        }
    };

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for n in 0..cfg.max_iter {
        let res = ccsd_residual(set, &t);
        if !res.is_finite() {
            return Err(CcError::Divergence(n));
        }
        history.push(res.norm());

        let mut update_sq = 0.0;
        for i in 0..o {
            for a in 0..v {
                let du = res.omega1[(i, a)] / d1[(i, a)];
                t.t1[(i, a)] -= du;
                update_sq += du * du;
            }
        }
        for i in 0..o {
            for j in 0..o {
                for a in 0..v {
                    for b in 0..v {
                        let du = res.omega2[(i, j, a, b)] / d2[(i, j, a, b)];
                        t.t2[(i, j, a, b)] -= du;
                        update_sq += du * du;
                    }
                }
            }
        }
        iterations = n + 1;
        if update_sq.sqrt() <= cfg.tolerance {
            converged = true;
            break;
        }
    }

    let energy = correlation_energy(set, &t)?;
    Ok(SolveReport {
        amplitudes: t,
        energy,
        iterations,
        converged,
        residual_norm_history: history,
    })
}
