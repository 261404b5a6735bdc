use num_complex::Complex;

use super::squeezed::{check_tail, squeezed_fock_one_raw, squeezed_vacuum_raw};
use super::SqueezeSpec;
use crate::error::{Error, Result};
use crate::hilbert::{FieldState, FockCutoff};
use crate::scalar::{czero, from_usize, lit, Cplx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum CatParity {
    Odd,
    Even,
}

/// `Ŝ(r) (|α⟩ ± |-α⟩)`, normalized. `squeeze_r = 0` is the plain cat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatSpec<T: Real> {
    pub alpha: Cplx<T>,
    pub parity: CatParity,
    pub squeeze_r: T,
}

impl<T: Real> CatSpec<T> {
    pub fn new(alpha: Cplx<T>, parity: CatParity, squeeze_r: T) -> Result<Self> {
        if !(squeeze_r >= T::zero()) || !squeeze_r.is_finite() {
            return Err(Error::InvalidParameter(format!("squeeze_r must be finite and >= 0, got {squeeze_r}")));
        }
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(Error::InvalidParameter("alpha must be finite".into()));
        }
        Ok(Self { alpha, parity, squeeze_r })
    }

    pub fn odd(alpha: Cplx<T>, squeeze_r: T) -> Result<Self> {
        Self::new(alpha, CatParity::Odd, squeeze_r)
    }
}

/// Below this `|α|` the cat is replaced by its `α → 0` limit,
/// `Ŝ(r)|1⟩` (odd) or `Ŝ(r)|0⟩` (even).
const ALPHA_LIMIT: f64 = 1e-8;

/// Fock amplitudes `⟨n|Ŝ(r)|α⟩` for `n < dim`, from the eigenvalue equation
/// `(a cosh r - a† sinh r) Ŝ|α⟩ = α Ŝ|α⟩`.
pub fn squeezed_coherent_coefficients<T: Real>(alpha: Cplx<T>, r: T, dim: usize) -> Vec<Cplx<T>> {
    let (ch, sh) = (r.cosh(), r.sinh());
    let half = lit::<T>(0.5);
    let mut c = vec![czero::<T>(); dim];
    if dim == 0 {
        return c;
    }
    let expo = Complex::new(-alpha.norm_sqr() * half, T::zero()) - alpha * alpha * (r.tanh() * half);
    c[0] = expo.exp() / ch.sqrt();
    for n in 0..dim - 1 {
        let mut v = c[n] * alpha;
        if n > 0 {
            v = v + c[n - 1] * (sh * from_usize::<T>(n).sqrt());
        }
        c[n + 1] = v / (ch * from_usize::<T>(n + 1).sqrt());
    }
    c
}

/// Normalized squeezed cat of either parity.
pub fn cat_state<T: Real>(spec: CatSpec<T>, cutoff: FockCutoff) -> Result<FieldState<T>> {
    SqueezeSpec::new(spec.squeeze_r)?;
    let amps = cat_amplitudes(&spec, cutoff.dim());
    check_tail(&amps, cutoff)?;
    FieldState::from_amplitudes(amps)?.normalized()
}

/// Fock coefficients `0..dim` of the cat, normalized on the full space (so
/// the truncated vector has norm ≤ 1). No tail check.
pub fn cat_amplitudes<T: Real>(spec: &CatSpec<T>, dim: usize) -> Vec<Cplx<T>> {
    if spec.alpha.norm() < lit(ALPHA_LIMIT) {
        return match spec.parity {
            CatParity::Odd => squeezed_fock_one_raw(spec.squeeze_r, dim),
            CatParity::Even => squeezed_vacuum_raw(spec.squeeze_r, dim),
        };
    }
    let mut amps = squeezed_coherent_coefficients(spec.alpha, spec.squeeze_r, dim);
    let two = lit::<T>(2.0);
    let x = spec.alpha.norm_sqr() * two;
    // ‖|α⟩ ± |-α⟩‖² / 4 = (1 ± e^{-2|α|²}) / 2; S is unitary.
    let norm_sq = match spec.parity {
        CatParity::Odd => -(-x).exp_m1() / two,
        CatParity::Even => (T::one() + (-x).exp()) / two,
    };
    let keep = match spec.parity {
        CatParity::Odd => 1,
        CatParity::Even => 0,
    };
    let inv = T::one() / norm_sq.sqrt();
    for (n, z) in amps.iter_mut().enumerate() {
        *z = if n % 2 == keep { *z * inv } else { czero() };
    }
    amps
}

/// Normalized `Ŝ(r) N (|α⟩ - |-α⟩)`; rejects an even-parity spec.
pub fn odd_cat<T: Real>(spec: CatSpec<T>, cutoff: FockCutoff) -> Result<FieldState<T>> {
    if spec.parity != CatParity::Odd {
        return Err(Error::InvalidParameter("odd_cat called with even parity".into()));
    }
    cat_state(spec, cutoff)
}

/// `⟨n⟩ = |α|² coth |α|²` of the plain odd cat (1 in the `α → 0` limit).
pub fn odd_cat_mean_n(abs_alpha: f64) -> f64 {
    let x = abs_alpha * abs_alpha;
    if x < 1e-6 {
        // x coth x = 1 + x²/3 - x⁴/45
        return 1.0 + x * x / 3.0;
    }
    x / x.tanh()
}

/// `|α|` of the plain odd cat with the given mean photon number, or `None`
/// when `mean_n < 1` lies below the family's floor.
pub fn odd_cat_alpha_for_mean_n(mean_n: f64) -> Option<f64> {
    if !(mean_n >= 1.0) {
        return None;
    }
    if mean_n == 1.0 {
        return Some(0.0);
    }
    // x coth x is increasing on x > 0 and lies in (x, x + 1]
    let (mut lo, mut hi) = ((mean_n - 1.0).max(0.0), mean_n);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if odd_cat_mean_n(mid.sqrt()) < mean_n {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some((0.5 * (lo + hi)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refstates::{squeezed_fock_one, squeezed_vacuum, subtract_photon};

    fn cut(n: usize) -> FockCutoff {
        FockCutoff::new(n).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn coherent_coefficients_are_poissonian() {
        let a = c(1.3, -0.4);
        let amps = squeezed_coherent_coefficients(a, 0.0, 60);
        let mut fact = 1.0f64;
        for (n, z) in amps.iter().enumerate().take(20) {
            if n > 0 {
                fact *= n as f64;
            }
            let expect = (-a.norm_sqr() / 2.0).exp() * a.norm().powi(n as i32) / fact.sqrt();
            assert!((z.norm() - expect).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn squeezed_coherent_state_is_normalized() {
        for (a, r) in [(c(0.7, 0.0), 0.5), (c(0.0, 1.2), 1.0), (c(1.5, 0.5), 0.3)] {
            let amps = squeezed_coherent_coefficients(a, r, 200);
            let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12, "alpha={a} r={r}");
        }
    }

    #[test]
    fn squeezed_coherent_matches_numeric_squeeze_of_coherent() {
        let a = c(0.9, 0.3);
        let r = 0.6;
        let coh = FieldState::from_amplitudes(squeezed_coherent_coefficients(a, 0.0, 61)).unwrap();
        let num = crate::refstates::squeeze(&coh, r, cut(250)).unwrap();
        let ana = squeezed_coherent_coefficients(a, r, 61);
        for (x, y) in num.amplitudes().iter().zip(&ana) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn odd_cat_mean_n_closed_form() {
        for a in [0.3, 1.0, 1.7, 2.5] {
            let s = odd_cat(CatSpec::odd(c(a, 0.0), 0.0).unwrap(), cut(60)).unwrap();
            assert!((s.mean_n() - odd_cat_mean_n(a)).abs() < 1e-10, "alpha={a}");
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            assert!(s.amplitudes().iter().step_by(2).all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn small_alpha_approaches_squeezed_single_photon() {
        let r = 0.8;
        let c_ = cutoff_for(r);
        let target = squeezed_fock_one(SqueezeSpec::new(r).unwrap(), c_).unwrap();
        let near = odd_cat(CatSpec::odd(c(1e-4, 0.0), r).unwrap(), c_).unwrap();
        assert!(near.overlap_sqr(&target) > 1.0 - 1e-7);
        let limit = odd_cat(CatSpec::odd(c(0.0, 0.0), r).unwrap(), c_).unwrap();
        assert_eq!(limit, target);
        let sub = subtract_photon(&squeezed_vacuum(SqueezeSpec::new(r).unwrap(), c_).unwrap()).unwrap();
        assert!(sub.overlap_sqr(&limit) > 1.0 - 1e-10);
    }

    fn cutoff_for(r: f64) -> FockCutoff {
        crate::refstates::cutoff_for_subtracted_squeezed_vacuum(r, 1, 1e-12)
    }

    #[test]
    fn even_cat_has_even_support() {
        let s = cat_state(CatSpec::new(c(1.1, 0.0), CatParity::Even, 0.4).unwrap(), cut(60)).unwrap();
        assert!(s.amplitudes().iter().skip(1).step_by(2).all(|z| z.norm() == 0.0));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(odd_cat(CatSpec::new(c(1.0, 0.0), CatParity::Even, 0.0).unwrap(), cut(10)).is_err());
    }

    #[test]
    fn alpha_solver_inverts_mean_n() {
        assert_eq!(odd_cat_alpha_for_mean_n(0.5), None);
        assert_eq!(odd_cat_alpha_for_mean_n(1.0), Some(0.0));
        for n in [1.0001, 1.5, 3.86, 10.8] {
            let a = odd_cat_alpha_for_mean_n(n).unwrap();
            assert!((odd_cat_mean_n(a) - n).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn cutoff_contract() {
        let spec = CatSpec::odd(c(3.0, 0.0), 0.0).unwrap();
        assert!(matches!(odd_cat(spec, cut(8)), Err(Error::InvalidCutoff(_))));
    }
}
