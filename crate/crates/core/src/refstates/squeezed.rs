use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hilbert::{FieldState, FockCutoff, LinearOperatorRep, Propagator};
use crate::scalar::{creal, czero, from_usize, lit, to_f64, Cplx, Real};

/// Population allowed beyond (and in the top two levels of) a cutoff when
/// building reference states.
pub(crate) const REFERENCE_TAIL_TOL: f64 = 1e-6;

/// Real squeezing parameter `r ≥ 0` (orientation fixed: `X₂` squeezed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeSpec<T: Real> {
    r: T,
}

impl<T: Real> SqueezeSpec<T> {
    pub fn new(r: T) -> Result<Self> {
        if !(r >= T::zero()) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("squeezing parameter must be finite and >= 0, got {r}")));
        }
        Ok(Self { r })
    }

    /// `r = atanh(β²/α²)`, finite only for `β² < 0.5`.
    pub fn from_beta_sq(beta_sq: T) -> Result<Self> {
        let half = lit::<T>(0.5);
        if !(beta_sq >= T::zero()) {
            return Err(Error::InvalidParameter(format!("beta_sq must be >= 0, got {beta_sq}")));
        }
        if beta_sq >= half {
            return Err(Error::NoSteadyState(to_f64(beta_sq)));
        }
        Self::new((beta_sq / (T::one() - beta_sq)).atanh())
    }

    /// Squeezed vacuum with the given mean photon number, `sinh² r = n`.
    pub fn from_mean_n(n: T) -> Result<Self> {
        if !(n >= T::zero()) {
            return Err(Error::InvalidParameter(format!("mean photon number must be >= 0, got {n}")));
        }
        Self::new(n.sqrt().asinh())
    }

    pub fn r(&self) -> T {
        self.r
    }

    /// Excited-state probability that makes this the stationary state.
    pub fn beta_sq(&self) -> T {
        let t = self.r.tanh();
        t / (T::one() + t)
    }

    pub fn mean_n(&self) -> T {
        self.r.sinh().powi(2)
    }
}

pub(crate) fn check_tail<T: Real>(amps: &[Cplx<T>], cutoff: FockCutoff) -> Result<()> {
    let kept: f64 = amps.iter().map(|z| to_f64(z.norm_sqr())).sum();
    let top = amps.len();
    let last_two = to_f64(amps[top - 1].norm_sqr() + amps[top - 2].norm_sqr());
    let beyond = (1.0 - kept).max(0.0);
    if beyond + last_two > REFERENCE_TAIL_TOL {
        return Err(Error::InvalidCutoff(format!(
            "n_max = {} leaves tail mass {:.3e} (> {:.0e})",
            cutoff.n_max(),
            beyond + last_two,
            REFERENCE_TAIL_TOL
        )));
    }
    Ok(())
}

/// `Ŝ(r)|0⟩` from its closed-form Fock expansion
/// `c_{2k} = tanh^k r · √((2k)!) / (2^k k!) / √(cosh r)`.
pub fn squeezed_vacuum<T: Real>(spec: SqueezeSpec<T>, cutoff: FockCutoff) -> Result<FieldState<T>> {
    let amps = squeezed_vacuum_raw(spec.r, cutoff.dim());
    check_tail(&amps, cutoff)?;
    FieldState::from_amplitudes(amps)?.normalized()
}

pub(crate) fn squeezed_vacuum_raw<T: Real>(r: T, dim: usize) -> Vec<Cplx<T>> {
    let t = r.tanh();
    let mut amps = vec![czero(); dim];
    let mut c = T::one() / r.cosh().sqrt();
    amps[0] = creal(c);
    let mut n = 0usize;
    while n + 2 < dim {
        // c_{n+2} = tanh r · √((n+1)/(n+2)) · c_n
        c = c * t * (from_usize::<T>(n + 1) / from_usize::<T>(n + 2)).sqrt();
        amps[n + 2] = creal(c);
        n += 2;
    }
    amps
}

/// `‖(α²a - β²a†)|ψ⟩‖` with `tanh r = β²/α²`, evaluated without truncating
/// the creation operator at the top level.
pub fn squeezed_vacuum_residual<T: Real>(state: &FieldState<T>, spec: SqueezeSpec<T>) -> T {
    let t = spec.r.tanh();
    let alpha_sq = T::one() / (T::one() + t);
    let beta_sq = t / (T::one() + t);
    let amps = state.amplitudes();
    let d = amps.len();
    let mut out = vec![czero::<T>(); d + 1];
    for n in 0..d {
        if n > 0 {
            out[n - 1] = out[n - 1] + amps[n] * (alpha_sq * from_usize::<T>(n).sqrt());
        }
        out[n + 1] = out[n + 1] - amps[n] * (beta_sq * from_usize::<T>(n + 1).sqrt());
    }
    out.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// `Ŝ(r)|1⟩ = (cosh r · a† - sinh r · a) Ŝ(r)|0⟩`, closed form.
pub fn squeezed_fock_one<T: Real>(spec: SqueezeSpec<T>, cutoff: FockCutoff) -> Result<FieldState<T>> {
    let amps = squeezed_fock_one_raw(spec.r, cutoff.dim());
    check_tail(&amps, cutoff)?;
    FieldState::from_amplitudes(amps)?.normalized()
}

/// Unnormalized-by-truncation coefficients of `Ŝ(r)|1⟩` on `0..dim`.
pub(crate) fn squeezed_fock_one_raw<T: Real>(r: T, dim: usize) -> Vec<Cplx<T>> {
    let vac = squeezed_vacuum_raw(r, dim + 1);
    let (ch, sh) = (r.cosh(), r.sinh());
    let mut amps = vec![czero(); dim];
    for n in 0..dim {
        let mut v = czero::<T>();
        if n > 0 {
            v = v + vac[n - 1] * (ch * from_usize::<T>(n).sqrt());
        }
        v = v - vac[n + 1] * (sh * from_usize::<T>(n + 1).sqrt());
        amps[n] = v;
    }
    amps
}

/// Anti-Hermitian squeeze generator `(a†² - a²)/2` on the given cutoff.
pub fn squeeze_generator<T: Real>(cutoff: FockCutoff) -> LinearOperatorRep<T> {
    let half = lit::<T>(0.5);
    let mut t = Vec::new();
    for n in 0..cutoff.dim() {
        if n + 2 < cutoff.dim() {
            let v = half * (from_usize::<T>((n + 1) * (n + 2))).sqrt();
            t.push((n + 2, n, creal(v)));
            t.push((n, n + 2, creal(-v)));
        }
    }
    LinearOperatorRep::from_triplets(cutoff.dim(), t, false)
}

/// Applies `Ŝ(r)` numerically (Taylor action of the generator) on an
/// enlarged working space, then truncates back to the input cutoff.
pub fn squeeze<T: Real>(state: &FieldState<T>, r: T, work_cutoff: FockCutoff) -> Result<FieldState<T>> {
    if work_cutoff.dim() < state.dim() {
        return Err(Error::InvalidCutoff("working cutoff smaller than state cutoff".into()));
    }
    let padded = state.resized(work_cutoff, 0.0)?;
    let mut amps = padded.into_amplitudes();
    let gen = squeeze_generator::<T>(work_cutoff);
    Propagator::new().exp_action(&gen, Complex::new(r, T::zero()), &mut amps)?;
    let out = FieldState::from_amplitudes(amps)?;
    let top = out.tail_mass();
    if top > REFERENCE_TAIL_TOL {
        return Err(Error::InvalidCutoff(format!("working cutoff too small: tail {top:.3e}")));
    }
    out.resized(state.cutoff(), REFERENCE_TAIL_TOL)
}

/// Normalized `a|ψ⟩`.
pub fn subtract_photon<T: Real>(state: &FieldState<T>) -> Result<FieldState<T>> {
    let out = state.annihilate();
    if !(out.norm_sqr() > T::epsilon() * T::epsilon()) {
        return Err(Error::VacuumSubtraction);
    }
    out.normalized()
}

/// Smallest `n_max` at which `a^k Ŝ(r)|0⟩` (normalized) keeps both the mass
/// beyond the cutoff and the top-two-level mass below `tol`.
pub fn cutoff_for_subtracted_squeezed_vacuum(r: f64, subtracted: usize, tol: f64) -> FockCutoff {
    let mut dim = 64usize;
    loop {
        let mut amps = squeezed_vacuum_raw::<f64>(r, dim);
        for _ in 0..subtracted {
            let f = FieldState::from_amplitudes(amps).expect("dim >= 2").annihilate();
            amps = f.into_amplitudes();
        }
        let total: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        let pops: Vec<f64> = amps.iter().map(|z| z.norm_sqr() / total).collect();
        // the mass above level n, accumulated from the top
        let mut above = vec![0.0; dim + 1];
        for n in (0..dim).rev() {
            above[n] = above[n + 1] + pops[n];
        }
        if above[dim.saturating_sub(4)] < tol * 1e-3 || dim > 1 << 14 {
            for n_max in 1..dim {
                let top_two = pops[n_max] + pops[n_max - 1];
                if above[n_max + 1] + top_two < tol {
                    return FockCutoff::new(n_max).expect("n_max >= 1");
                }
            }
        }
        dim *= 2;
    }
}
