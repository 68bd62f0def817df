//! Closed-shell coupled-cluster numerics on ingested molecular-orbital
//! integrals: MP2, CCSD residuals over singles-dressed integrals, a
//! quasi-Newton amplitude solver, approximate one-particle density matrices,
//! and a brute-force configuration-interaction oracle for exactness checks.
//!
//! Everything works in the spatial-orbital, closed-shell formalism: `n_occ`
//! doubly occupied orbitals, two-electron integrals in chemists' notation
//! `(pq|rs)` with 8-fold permutation symmetry, energies in Hartree.
//!
//! An [`IntegralSet`] is immutable after construction and can be shared
//! across threads; independent solves need no coordination.

mod ampio;
mod error;
mod fci;
mod fcidump;
mod integrals;
mod mp2;
mod rdm;
mod residual;
mod solver;
mod synthetic;

pub use ampio::{load_amplitudes, save_amplitudes};
pub use error::CcError;
pub use fci::fci_oracle;
pub use fcidump::{load_fcidump, write_fcidump};
pub use integrals::{AmplitudeSet, IntegralSet};
pub use mp2::{correlation_energy, mp2_amplitudes, mp2_energy_direct};
pub use rdm::{xccsd_1rdm, DensityMatrix};
pub use residual::{ccsd_residual, t1_transform, Residual};
pub use solver::{ccsd_solve, Guess, SolveReport, SolverConfig};
pub use synthetic::{bundled_fixtures, generate_synthetic, two_electron_fixtures, FixtureSpec};
