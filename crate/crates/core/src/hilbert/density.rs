use nalgebra::DMatrix;
use num_complex::Complex;

use super::tail_mass;
use crate::error::{Error, Result};
use crate::scalar::{czero, from_usize, to_f64, Cplx, Real};

/// Dense density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    dim: usize,
    data: Vec<Cplx<T>>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![czero(); dim * dim] }
    }

    pub fn from_pure(amps: &[Cplx<T>]) -> Self {
        let dim = amps.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in amps {
            for b in amps {
                data.push(a * b.conj());
            }
        }
        Self { dim, data }
    }

    pub fn from_row_major(dim: usize, data: Vec<Cplx<T>>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Cplx<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx<T> {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Cplx<T>) {
        self.data[i * self.dim + j] = v;
    }

    pub fn trace(&self) -> Cplx<T> {
        (0..self.dim).fold(czero(), |acc, i| acc + self.get(i, i))
    }

    pub fn trace_re(&self) -> T {
        self.trace().re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|i| to_f64(self.get(i, i).re)).collect()
    }

    pub fn tail_mass(&self) -> f64 {
        tail_mass(&self.populations())
    }

    /// `⟨a†a⟩` when the matrix is a field state.
    pub fn mean_n(&self) -> T {
        (0..self.dim).map(|n| from_usize::<T>(n) * self.get(n, n).re).sum()
    }

    pub fn parity(&self) -> T {
        (0..self.dim)
            .map(|n| {
                let p = self.get(n, n).re;
                if n % 2 == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum()
    }

    pub fn scale(&mut self, s: T) {
        for z in &mut self.data {
            *z = *z * s;
        }
    }

    pub fn scaled(mut self, s: T) -> Self {
        self.scale(s);
        self
    }

    /// `self += w * other`.
    pub fn add_scaled(&mut self, other: &Self, w: T) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b * w;
        }
        Ok(())
    }

    /// Rescales to unit trace.
    pub fn normalize(&mut self) -> Result<()> {
        let tr = self.trace_re();
        if !(tr > T::zero()) {
            return Err(Error::CorruptState("density matrix with non-positive trace".into()));
        }
        self.scale(T::one() / tr);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation_pure(&self, psi: &[Cplx<T>]) -> Result<T> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: psi.len() });
        }
        let mut acc = czero::<T>();
        for i in 0..self.dim {
            if psi[i] == czero() {
                continue;
            }
            let mut row = czero::<T>();
            for j in 0..self.dim {
                row = row + self.get(i, j) * psi[j];
            }
            acc = acc + psi[i].conj() * row;
        }
        Ok(acc.re)
    }

    /// `a ρ a†` for a field state, without renormalization.
    pub fn annihilation_conjugate(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for m in 0..d - 1 {
            for n in 0..d - 1 {
                let s = (from_usize::<T>((m + 1) * (n + 1))).sqrt();
                out.set(m, n, self.get(m + 1, n + 1) * s);
            }
        }
        out
    }

    /// Largest `|ρ_ij - conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = self.get(i, j) - self.get(j, i).conj();
                worst = worst.max(to_f64(d.norm()));
            }
        }
        worst
    }

    pub fn hermitize(&mut self) {
        let half = T::one() / (T::one() + T::one());
        for i in 0..self.dim {
            for j in i..self.dim {
                let avg = (self.get(i, j) + self.get(j, i).conj()) * half;
                self.set(i, j, avg);
                self.set(j, i, avg.conj());
            }
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| to_f64((a - b).norm()))
            .fold(0.0, f64::max))
    }

    /// Embeds into (or truncates to) a different field dimension; fails if
    /// truncation would drop population above `tol`.
    pub fn resized(&self, dim: usize, tol: f64) -> Result<Self> {
        let dropped: f64 = (dim..self.dim).map(|i| to_f64(self.get(i, i).re)).sum();
        if dropped > tol {
            return Err(Error::InvalidCutoff(format!("resizing to dimension {dim} drops population {dropped:.3e}")));
        }
        let mut out = Self::zeros(dim);
        let k = dim.min(self.dim);
        for i in 0..k {
            for j in 0..k {
                out.set(i, j, self.get(i, j));
            }
        }
        Ok(out)
    }

    pub fn to_f64(&self) -> DensityMatrix<f64> {
        DensityMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| Complex::new(to_f64(z.re), to_f64(z.im))).collect(),
        }
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex<f64>> {
        let c = self.to_f64();
        DMatrix::from_row_slice(self.dim, self.dim, &c.data)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = self.to_nalgebra();
        let h = (&m + m.adjoint()) * Complex::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn pure_state_projector() {
        let s = [c(0.6), Complex::new(0.0, 0.8)];
        let rho = DensityMatrix::from_pure(&s);
        assert!((rho.trace_re() - 1.0).abs() < 1e-15);
        assert!(rho.hermiticity_error() < 1e-15);
        assert!((rho.expectation_pure(&s).unwrap() - 1.0).abs() < 1e-15);
        let ev = rho.eigenvalues();
        assert!(ev[0].abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn annihilation_conjugate_of_fock() {
        let rho = DensityMatrix::from_pure(&[c(0.0), c(0.0), c(1.0)]);
        let out = rho.annihilation_conjugate();
        assert!((out.get(1, 1).re - 2.0).abs() < 1e-15);
        assert!((out.trace_re() - rho.mean_n()).abs() < 1e-15);
    }
}
