//! Finite-dimensional Hilbert-space algebra for one cavity mode coupled to a
//! register of two-level atoms.
//!
//! Joint basis layout: index = `n * 2^M + bits`, where `n` is the photon
//! number and `bits` is the atom register with slot 0 in the most significant
//! position (slots are kept in entry order). Bit value 0 is |↓⟩, 1 is |↑⟩.

mod density;
mod field;
mod joint;
mod operator;
mod propagate;

pub use density::DensityMatrix;
pub use field::FieldState;
pub use joint::{AtomOutcome, DipolePhase, JointState, MemoryBudget};
pub use operator::{
    annihilation, atom_lowering, collective_lowering, creation, effective_hamiltonian, identity,
    number, tavis_cummings, EffectiveHamiltonian, LinearAction, LinearOperatorRep,
};
pub use propagate::{evolve_nonhermitian, Propagator};

use crate::error::{Error, Result};

/// Reduced cavity-field state.
pub type FieldDensityMatrix<T> = DensityMatrix<T>;

/// Photon-number truncation of the cavity mode: levels `0..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockCutoff {
    n_max: usize,
}

impl FockCutoff {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidCutoff(format!("n_max must be >= 1, got {n_max}")));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// Default cutoff for a squeezing parameter: `ceil(8 (1 + sinh² r))`.
    pub fn default_for_squeezing(r: f64) -> Self {
        let n = (8.0 * (1.0 + r.sinh().powi(2))).ceil() as usize;
        Self { n_max: n.max(2) }
    }
}

/// Population held in the two highest retained levels.
pub fn tail_mass(populations: &[f64]) -> f64 {
    match populations.len() {
        0 => 0.0,
        1 => populations[0],
        n => populations[n - 1] + populations[n - 2],
    }
}
