use num_complex::Complex;

use super::{tail_mass, DensityMatrix, FockCutoff};
use crate::error::{Error, Result};
use crate::scalar::{czero, from_usize, to_f64, Cplx, Real};

/// Pure state of the cavity field in the Fock basis `|0⟩..|n_max⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState<T: Real> {
    amps: Vec<Cplx<T>>,
}

impl<T: Real> FieldState<T> {
    pub fn from_amplitudes(amps: Vec<Cplx<T>>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidCutoff(format!(
                "field state needs at least 2 levels, got {}",
                amps.len()
            )));
        }
        Ok(Self { amps })
    }

    pub fn vacuum(cutoff: FockCutoff) -> Self {
        Self::fock(0, cutoff).expect("vacuum is always representable")
    }

    pub fn fock(n: usize, cutoff: FockCutoff) -> Result<Self> {
        if n > cutoff.n_max() {
            return Err(Error::InvalidCutoff(format!(
                "Fock level {n} above n_max = {}",
                cutoff.n_max()
            )));
        }
        let mut amps = vec![czero(); cutoff.dim()];
        amps[n] = Complex::new(T::one(), T::zero());
        Ok(Self { amps })
    }

    pub fn cutoff(&self) -> FockCutoff {
        FockCutoff::new(self.amps.len() - 1).expect("length checked at construction")
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

    pub fn into_amplitudes(self) -> Vec<Cplx<T>> {
        self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr().sqrt();
        if !(n > T::zero()) {
            return Err(Error::CorruptState("cannot normalize a zero vector".into()));
        }
        for z in &mut self.amps {
            *z = *z / n;
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Cplx<T> {
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * b)
    }

    /// `|⟨self|other⟩|²` for normalized inputs.
    pub fn overlap_sqr(&self, other: &Self) -> T {
        self.inner(other).norm_sqr()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|z| to_f64(z.norm_sqr())).collect()
    }

    pub fn tail_mass(&self) -> f64 {
        tail_mass(&self.populations())
    }

    pub fn mean_n(&self) -> T {
        self.amps
            .iter()
            .enumerate()
            .map(|(n, z)| from_usize::<T>(n) * z.norm_sqr())
            .sum()
    }

    /// Applies the truncated annihilation operator without renormalizing.
    pub fn annihilate(&self) -> Self {
        let mut out = vec![czero(); self.amps.len()];
        for n in 1..self.amps.len() {
            out[n - 1] = self.amps[n] * from_usize::<T>(n).sqrt();
        }
        Self { amps: out }
    }

    /// Applies the truncated creation operator without renormalizing.
    pub fn create(&self) -> Self {
        let mut out = vec![czero(); self.amps.len()];
        for n in 0..self.amps.len() - 1 {
            out[n + 1] = self.amps[n] * from_usize::<T>(n + 1).sqrt();
        }
        Self { amps: out }
    }

    /// Copies the state into a cutoff of a different size; fails if truncation
    /// would drop population above `tol`.
    pub fn resized(&self, cutoff: FockCutoff, tol: f64) -> Result<Self> {
        let dim = cutoff.dim();
        let dropped: f64 = self.amps.iter().skip(dim).map(|z| to_f64(z.norm_sqr())).sum();
        if dropped > tol {
            return Err(Error::InvalidCutoff(format!(
                "resizing to n_max = {} drops population {dropped:.3e}",
                cutoff.n_max()
            )));
        }
        let mut amps: Vec<_> = self.amps.iter().take(dim).copied().collect();
        amps.resize(dim, czero());
        Ok(Self { amps })
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        DensityMatrix::from_pure(&self.amps)
    }

    /// Parity `⟨(-1)^n⟩`.
    pub fn parity(&self) -> T {
        self.amps
            .iter()
            .enumerate()
            .map(|(n, z)| if n % 2 == 0 { z.norm_sqr() } else { -z.norm_sqr() })
            .sum()
    }
}
