use num_complex::Complex;

use super::FockCutoff;
use crate::error::{Error, Result};
use crate::scalar::{czero, creal, from_usize, lit, to_f64, Cplx, Real};

/// Square complex operator in compressed-sparse-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperatorRep<T: Real> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Cplx<T>>,
    hermitian: bool,
}

impl<T: Real> LinearOperatorRep<T> {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Cplx<T>)>, hermitian: bool) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Cplx<T>> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dimension {dim}");
            if last == Some((r, c)) {
                let prev = vals.last_mut().expect("previous entry");
                *prev = *prev + v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut op = Self { dim, row_ptr, cols, vals, hermitian };
        op.prune();
        op
    }

    fn prune(&mut self) {
        if self.vals.iter().all(|v| *v != czero()) {
            return;
        }
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != czero() {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: vec![], vals: vec![], hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Cplx<T>)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[Cplx<T>], out: &mut [Cplx<T>]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for r in 0..self.dim {
            let mut acc = czero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc = acc + self.vals[k] * x[self.cols[k]];
            }
            out[r] = acc;
        }
    }

    pub fn matvec(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let mut out = vec![czero(); self.dim];
        self.apply(x, &mut out);
        out
    }

    /// Induced 1-norm (maximum column sum).
    pub fn one_norm(&self) -> T {
        let mut col = vec![T::zero(); self.dim];
        for (k, &c) in self.cols.iter().enumerate() {
            col[c] += self.vals[k].norm();
        }
        col.into_iter().fold(T::zero(), T::max)
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.dim, t, self.hermitian)
    }

    pub fn scaled(&self, s: Cplx<T>) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v = *v * s;
        }
        out.hermitian = self.hermitian && s.im == T::zero();
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let t = self.triplets().chain(other.triplets()).collect();
        Ok(Self::from_triplets(self.dim, t, self.hermitian && other.hermitian))
    }

    /// Operator product `self * other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut t = Vec::new();
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.cols[k];
                for q in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    t.push((r, other.cols[q], self.vals[k] * other.vals[q]));
                }
            }
        }
        Ok(Self::from_triplets(self.dim, t, false))
    }

    /// Kronecker product `self ⊗ other`; `self` is the slower index.
    pub fn kron(&self, other: &Self) -> Self {
        let d = self.dim * other.dim;
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in other.triplets() {
                t.push((r1 * other.dim + r2, c1 * other.dim + c2, v1 * v2));
            }
        }
        Self::from_triplets(d, t, self.hermitian && other.hermitian)
    }

    pub fn to_dense(&self) -> Vec<Cplx<T>> {
        let mut m = vec![czero(); self.dim * self.dim];
        for (r, c, v) in self.triplets() {
            m[r * self.dim + c] = v;
        }
        m
    }

    /// `max |A - A†|` over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.to_dense();
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(to_f64((d[i * n + j] - d[j * n + i].conj()).norm()));
            }
        }
        worst
    }

    /// Re-derives the Hermitian flag from the entries.
    pub fn check_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }
}

/// A square linear map that can act on a state vector.
pub trait LinearAction<T: Real> {
    fn dim(&self) -> usize;
    /// `out = A x`.
    fn apply(&self, x: &[Cplx<T>], out: &mut [Cplx<T>]);
    /// Induced 1-norm (maximum column sum).
    fn one_norm(&self) -> T;
    fn is_zero(&self) -> bool;
}

impl<T: Real> LinearAction<T> for LinearOperatorRep<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Cplx<T>], out: &mut [Cplx<T>]) {
        LinearOperatorRep::apply(self, x, out)
    }

    fn one_norm(&self) -> T {
        LinearOperatorRep::one_norm(self)
    }

    fn is_zero(&self) -> bool {
        self.nnz() == 0
    }
}

/// Matrix-free form of [`effective_hamiltonian`]: the same entries, applied
/// in the same order, with nothing stored. A 17-atom register with 37 Fock
/// levels would otherwise need about 2 GB of sparse storage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveHamiltonian<T: Real> {
    cutoff: FockCutoff,
    register_size: usize,
    g: T,
    kappa: T,
}

impl<T: Real> EffectiveHamiltonian<T> {
    pub fn new(cutoff: FockCutoff, register_size: usize, g: T, kappa: T) -> Self {
        Self { cutoff, register_size, g, kappa }
    }

    fn sqrt_table(&self) -> Vec<T> {
        (0..=self.cutoff.dim()).map(|n| from_usize::<T>(n).sqrt()).collect()
    }
}

impl<T: Real> LinearAction<T> for EffectiveHamiltonian<T> {
    fn dim(&self) -> usize {
        self.cutoff.dim() << self.register_size
    }

    fn apply(&self, x: &[Cplx<T>], out: &mut [Cplx<T>]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        let atoms = 1usize << self.register_size;
        let d = self.cutoff.dim();
        let sqrt = self.sqrt_table();
        let half_kappa = self.kappa * lit::<T>(0.5);
        let coupled = self.g != T::zero();
        for n in 0..d {
            let down = creal(self.g * sqrt[n]);
            let up = creal(self.g * sqrt[n + 1]);
            let damping = Complex::new(T::zero(), -half_kappa * from_usize::<T>(n));
            for b in 0..atoms {
                let row = n * atoms + b;
                let mut acc = czero();
                // columns in increasing order, as in the sparse form
                if coupled && n > 0 {
                    let base = (n - 1) * atoms;
                    let mut free = !b & (atoms - 1);
                    while free != 0 {
                        let bit = free & free.wrapping_neg();
                        acc = acc + down * x[base + (b | bit)];
                        free ^= bit;
                    }
                }
                if self.kappa != T::zero() && n > 0 {
                    acc = acc + damping * x[row];
                }
                if coupled && n + 1 < d {
                    let base = (n + 1) * atoms;
                    let mut set = b;
                    while set != 0 {
                        let bit = 1usize << (usize::BITS - 1 - set.leading_zeros());
                        acc = acc + up * x[base + (b & !bit)];
                        set ^= bit;
                    }
                }
                out[row] = acc;
            }
        }
    }

    fn one_norm(&self) -> T {
        // column (m, c) with j excited atoms collects κm/2 from the diagonal,
        // g√m from each of the k-j ground slots and g√(m+1) from each of the
        // j excited ones; linear in j, so only j = 0 and j = k matter
        let d = self.cutoff.dim();
        let k = from_usize::<T>(self.register_size);
        let sqrt = self.sqrt_table();
        let g = self.g.abs();
        let mut best = T::zero();
        for m in 0..d {
            let diag = if m > 0 { self.kappa.abs() * lit::<T>(0.5) * from_usize::<T>(m) } else { T::zero() };
            let from_below = if m > 0 { g * sqrt[m] } else { T::zero() };
            let from_above = if m + 1 < d { g * sqrt[m + 1] } else { T::zero() };
            best = best.max(diag + k * from_below).max(diag + k * from_above);
        }
        best
    }

    fn is_zero(&self) -> bool {
        let d = self.cutoff.dim();
        (self.kappa == T::zero() || d < 2) && (self.g == T::zero() || self.register_size == 0 || d < 2)
    }
}

pub fn identity<T: Real>(dim: usize) -> LinearOperatorRep<T> {
    let t = (0..dim).map(|i| (i, i, creal(T::one()))).collect();
    LinearOperatorRep::from_triplets(dim, t, true)
}

/// Truncated photon annihilation operator `a`.
pub fn annihilation<T: Real>(cutoff: FockCutoff) -> LinearOperatorRep<T> {
    let t = (1..cutoff.dim())
        .map(|n| (n - 1, n, creal(from_usize::<T>(n).sqrt())))
        .collect();
    LinearOperatorRep::from_triplets(cutoff.dim(), t, false)
}

pub fn creation<T: Real>(cutoff: FockCutoff) -> LinearOperatorRep<T> {
    annihilation(cutoff).adjoint()
}

pub fn number<T: Real>(cutoff: FockCutoff) -> LinearOperatorRep<T> {
    let t = (0..cutoff.dim()).map(|n| (n, n, creal(from_usize::<T>(n)))).collect();
    LinearOperatorRep::from_triplets(cutoff.dim(), t, true)
}

/// `σ = |↓⟩⟨↑|` on `slot` of an atom register of `register_size` qubits.
pub fn atom_lowering<T: Real>(slot: usize, register_size: usize) -> Result<LinearOperatorRep<T>> {
    if slot >= register_size {
        return Err(Error::SlotOutOfRange { slot, size: register_size });
    }
    let bit = 1usize << (register_size - 1 - slot);
    let dim = 1usize << register_size;
    let t = (0..dim)
        .filter(|b| b & bit != 0)
        .map(|b| (b & !bit, b, creal(T::one())))
        .collect();
    Ok(LinearOperatorRep::from_triplets(dim, t, false))
}

/// `J₋ = Σ_i σ_i` on a register of `register_size` qubits.
pub fn collective_lowering<T: Real>(register_size: usize) -> LinearOperatorRep<T> {
    let dim = 1usize << register_size;
    let mut t = Vec::new();
    for b in 0..dim {
        for slot in 0..register_size {
            let bit = 1usize << (register_size - 1 - slot);
            if b & bit != 0 {
                t.push((b & !bit, b, creal(T::one())));
            }
        }
    }
    LinearOperatorRep::from_triplets(dim, t, false)
}

/// `H = g (a J₊ + a† J₋)` on field ⊗ register.
pub fn tavis_cummings<T: Real>(cutoff: FockCutoff, register_size: usize, g: T) -> LinearOperatorRep<T> {
    effective_hamiltonian(cutoff, register_size, g, T::zero())
}

/// `H_eff = g (a J₊ + a† J₋) - i (κ/2) a†a`.
pub fn effective_hamiltonian<T: Real>(
    cutoff: FockCutoff,
    register_size: usize,
    g: T,
    kappa: T,
) -> LinearOperatorRep<T> {
    let atoms = 1usize << register_size;
    let dim = cutoff.dim() * atoms;
    let sqrt: Vec<T> = (0..=cutoff.dim()).map(|n| from_usize::<T>(n).sqrt()).collect();
    let half_kappa = kappa * lit::<T>(0.5);
    let mut t = Vec::with_capacity(dim * (register_size + 1));
    for n in 0..cutoff.dim() {
        for b in 0..atoms {
            let row = n * atoms + b;
            if kappa != T::zero() && n > 0 {
                t.push((row, row, Complex::new(T::zero(), -half_kappa * from_usize::<T>(n))));
            }
            if g == T::zero() {
                continue;
            }
            for slot in 0..register_size {
                let bit = 1usize << (register_size - 1 - slot);
                if b & bit != 0 {
                    // a σ_j† : |n+1, ↓_j⟩ -> √(n+1) |n, ↑_j⟩
                    if n + 1 < cutoff.dim() {
                        t.push((row, (n + 1) * atoms + (b & !bit), creal(g * sqrt[n + 1])));
                    }
                } else if n > 0 {
                    // a† σ_j : |n-1, ↑_j⟩ -> √n |n, ↓_j⟩
                    t.push((row, (n - 1) * atoms + (b | bit), creal(g * sqrt[n])));
                }
            }
        }
    }
    LinearOperatorRep::from_triplets(dim, t, kappa == T::zero())
}
