use serde::{Deserialize, Serialize};

use super::{DensityMatrix, FieldState, FockCutoff};
use crate::error::{Error, Result};
use crate::scalar::{czero, from_usize, to_f64, Cplx, Real};

/// Dipole phase of a freshly prepared atom: `α|↓⟩ + β|↑⟩` or `α|↓⟩ - β|↑⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DipolePhase {
    Zero,
    Pi,
}

impl DipolePhase {
    pub fn flipped(self) -> Self {
        match self {
            DipolePhase::Zero => DipolePhase::Pi,
            DipolePhase::Pi => DipolePhase::Zero,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DipolePhase::Zero => "0",
            DipolePhase::Pi => "pi",
        }
    }
}

/// Energy-basis outcome of an atom measured at cavity exit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomOutcome {
    Down,
    Up,
}

impl AtomOutcome {
    pub fn label(self) -> &'static str {
        match self {
            AtomOutcome::Down => "down",
            AtomOutcome::Up => "up",
        }
    }
}

/// Upper bound on the joint-space dimension a state may grow to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryBudget {
    pub max_dim: usize,
}

impl Default for MemoryBudget {
    fn default() -> Self {
        // 2^25 complex f64 amplitudes = 512 MiB per vector
        Self { max_dim: 1 << 25 }
    }
}

/// Pure state of field ⊗ atom register (field index slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointState<T: Real> {
    amps: Vec<Cplx<T>>,
    cutoff: FockCutoff,
    atoms: usize,
}

impl<T: Real> JointState<T> {
    pub fn from_field(field: &FieldState<T>) -> Self {
        Self { amps: field.amplitudes().to_vec(), cutoff: field.cutoff(), atoms: 0 }
    }

    pub fn vacuum(cutoff: FockCutoff) -> Self {
        Self::from_field(&FieldState::vacuum(cutoff))
    }

    pub fn from_amplitudes(cutoff: FockCutoff, atoms: usize, amps: Vec<Cplx<T>>) -> Result<Self> {
        let expected = cutoff.dim() << atoms;
        if amps.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: amps.len() });
        }
        Ok(Self { amps, cutoff, atoms })
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn atom_count(&self) -> usize {
        self.atoms
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Cplx<T>] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<T> {
        let n2 = self.norm_sqr();
        if !(n2 > T::zero()) {
            return Err(Error::CorruptState("joint state has zero norm".into()));
        }
        let inv = T::one() / n2.sqrt();
        for z in &mut self.amps {
            *z = *z * inv;
        }
        Ok(n2)
    }

    /// Appends an atom in `α|↓⟩ ± β|↑⟩` as the newest register slot.
    pub fn attach_atom(&mut self, phase: DipolePhase, beta_sq: T, budget: MemoryBudget) -> Result<()> {
        if !(beta_sq >= T::zero() && beta_sq < T::one()) {
            return Err(Error::InvalidParameter(format!("beta_sq = {beta_sq} outside [0, 1)")));
        }
        let new_dim = self.amps.len() * 2;
        if new_dim > budget.max_dim {
            return Err(Error::MemoryBudget { dim: new_dim, max: budget.max_dim });
        }
        let alpha = (T::one() - beta_sq).sqrt();
        let beta = match phase {
            DipolePhase::Zero => beta_sq.sqrt(),
            DipolePhase::Pi => -beta_sq.sqrt(),
        };
        let mut out = Vec::with_capacity(new_dim);
        for z in &self.amps {
            out.push(*z * alpha);
            out.push(*z * beta);
        }
        self.amps = out;
        self.atoms += 1;
        Ok(())
    }

    /// Probability weight (unnormalized) of finding `slot` in |↑⟩.
    fn up_weight(&self, bit: usize) -> T {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    /// Projectively measures `slot` in the energy basis and removes it from
    /// the register. `draw` in `[0, 1)` selects the outcome: |↓⟩ if
    /// `draw < P(↓)`. The returned state is normalized.
    pub fn measure_and_remove_atom(&mut self, slot: usize, draw: f64) -> Result<AtomOutcome> {
        if slot >= self.atoms {
            return Err(Error::SlotOutOfRange { slot, size: self.atoms });
        }
        let bit = 1usize << (self.atoms - 1 - slot);
        let total = to_f64(self.norm_sqr());
        let up = to_f64(self.up_weight(bit));
        let down = total - up;
        let tiny = 1e-300;
        if !(total > tiny) || (up <= tiny && down <= tiny) {
            return Err(Error::CorruptState("both measurement branches have zero weight".into()));
        }
        let outcome = if down > tiny && draw * total < down {
            AtomOutcome::Down
        } else if up > tiny {
            AtomOutcome::Up
        } else {
            AtomOutcome::Down
        };
        let keep = match outcome {
            AtomOutcome::Down => 0,
            AtomOutcome::Up => bit,
        };
        let mut out = Vec::with_capacity(self.amps.len() / 2);
        for (i, z) in self.amps.iter().enumerate() {
            // order-preserving filter == removing the bit from every index
            if i & bit == keep {
                out.push(*z);
            }
        }
        self.amps = out;
        self.atoms -= 1;
        self.normalize()?;
        Ok(outcome)
    }

    /// Reduced field density matrix `Tr_atoms |ψ⟩⟨ψ|` (trace = ‖ψ‖²).
    pub fn partial_trace_field(&self) -> DensityMatrix<T> {
        let d = self.cutoff.dim();
        let block = 1usize << self.atoms;
        let mut rho = DensityMatrix::zeros(d);
        for m in 0..d {
            let rm = &self.amps[m * block..(m + 1) * block];
            if rm.iter().all(|z| *z == czero()) {
                continue;
            }
            for n in m..d {
                let rn = &self.amps[n * block..(n + 1) * block];
                let v = rm.iter().zip(rn).fold(czero::<T>(), |acc, (a, b)| acc + a * b.conj());
                rho.set(m, n, v);
                if n != m {
                    rho.set(n, m, v.conj());
                }
            }
        }
        rho
    }

    /// Reduced field state rescaled to unit trace.
    pub fn reduced_field(&self) -> Result<DensityMatrix<T>> {
        self.partial_trace_field().normalized()
    }

    /// `⟨ψ|a†a|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn mean_n(&self) -> T {
        let block = 1usize << self.atoms;
        let mut num = T::zero();
        for (i, z) in self.amps.iter().enumerate() {
            num += from_usize::<T>(i / block) * z.norm_sqr();
        }
        let n2 = self.norm_sqr();
        if n2 > T::zero() {
            num / n2
        } else {
            T::zero()
        }
    }

    /// Applies the field annihilation operator in place (no renormalization).
    pub fn apply_annihilation(&mut self) {
        let block = 1usize << self.atoms;
        let d = self.cutoff.dim();
        for n in 0..d {
            for b in 0..block {
                self.amps[n * block + b] = if n + 1 < d {
                    self.amps[(n + 1) * block + b] * from_usize::<T>(n + 1).sqrt()
                } else {
                    czero()
                };
            }
        }
    }

    /// Population in the two highest Fock levels (normalized).
    pub fn tail_mass(&self) -> f64 {
        self.partial_trace_field().tail_mass() / to_f64(self.norm_sqr())
    }

    /// Marginal probability that `slot` is excited.
    pub fn excitation_probability(&self, slot: usize) -> Result<f64> {
        if slot >= self.atoms {
            return Err(Error::SlotOutOfRange { slot, size: self.atoms });
        }
        let bit = 1usize << (self.atoms - 1 - slot);
        Ok(to_f64(self.up_weight(bit)) / to_f64(self.norm_sqr()))
    }

    pub fn scale(&mut self, s: T) {
        for z in &mut self.amps {
            *z = *z * s;
        }
    }
}

impl<T: Real> From<&FieldState<T>> for JointState<T> {
    fn from(f: &FieldState<T>) -> Self {
        Self::from_field(f)
    }
}
