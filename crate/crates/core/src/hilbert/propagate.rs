use num_complex::Complex;

use super::{JointState, LinearAction, LinearOperatorRep};
use crate::error::{Error, Result};
use crate::scalar::{czero, from_usize, to_f64, Cplx, Real};

/// Scaled-Taylor action of a matrix exponential, `ψ ← exp(c G) ψ`.
///
/// The interval is split into substeps with `|c| ‖G‖₁ h ≤ θ`; each substep
/// sums the Taylor series until the newest term falls below the scalar's
/// relative series tolerance. For `θ ≤ 1` the truncation remainder is bounded
/// by the last term, far below the 1e-10 per-step contract in f64.
#[derive(Debug, Clone)]
pub struct Propagator<T: Real> {
    term: Vec<Cplx<T>>,
    next: Vec<Cplx<T>>,
    theta: T,
    max_terms: usize,
}

impl<T: Real> Default for Propagator<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Propagator<T> {
    pub fn new() -> Self {
        Self { term: Vec::new(), next: Vec::new(), theta: T::one(), max_terms: 60 }
    }

    /// `ψ ← exp(-i H t) ψ`.
    pub fn evolve<A: LinearAction<T> + ?Sized>(&mut self, h: &A, psi: &mut [Cplx<T>], t: T) -> Result<()> {
        if t < T::zero() || !t.is_finite() {
            return Err(Error::StepContract(format!("time step must be finite and >= 0, got {t}")));
        }
        self.exp_action(h, Complex::new(T::zero(), -t), psi)
    }

    /// `ψ ← exp(c G) ψ` for an arbitrary complex scalar `c`.
    pub fn exp_action<A: LinearAction<T> + ?Sized>(&mut self, g: &A, c: Cplx<T>, psi: &mut [Cplx<T>]) -> Result<()> {
        if g.dim() != psi.len() {
            return Err(Error::DimensionMismatch { expected: g.dim(), got: psi.len() });
        }
        if c == czero() || g.is_zero() {
            return Ok(());
        }
        let scale = c.norm() * g.one_norm();
        let steps = (scale / self.theta).ceil().max(T::one());
        let n_steps = to_f64(steps) as usize;
        let h = c / steps;
        self.term.resize(psi.len(), czero());
        self.next.resize(psi.len(), czero());
        let tol = T::series_tolerance();
        for _ in 0..n_steps {
            self.term.copy_from_slice(psi);
            let base = psi.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            let mut converged = false;
            for k in 1..=self.max_terms {
                g.apply(&self.term, &mut self.next);
                let f = h / from_usize::<T>(k);
                let mut tn = T::zero();
                for (i, z) in self.next.iter().enumerate() {
                    let v = z * f;
                    self.term[i] = v;
                    psi[i] = psi[i] + v;
                    tn += v.norm_sqr();
                }
                if tn.sqrt() <= tol * base || tn == T::zero() {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::StepContract(format!(
                    "Taylor series did not converge in {} terms (|c|‖G‖ = {})",
                    self.max_terms, scale
                )));
            }
        }
        Ok(())
    }
}

/// `|ψ⟩ ← exp(-i H_eff dt)|ψ⟩` (ħ = 1). The norm decays when `H_eff`
/// carries the `-i(κ/2)a†a` damping term.
pub fn evolve_nonhermitian<T: Real>(state: &mut JointState<T>, h_eff: &LinearOperatorRep<T>, dt: T) -> Result<()> {
    if !(dt > T::zero()) {
        return Err(Error::StepContract(format!("dt must be > 0, got {dt}")));
    }
    let mut p = Propagator::new();
    p.evolve(h_eff, state.amplitudes_mut(), dt)
}
