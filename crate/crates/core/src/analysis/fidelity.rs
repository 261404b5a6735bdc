use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::DensityMatrix;
use crate::refstates::{cat_amplitudes, observables, odd_cat_alpha_for_mean_n, CatParity, CatSpec};

/// Largest squeeze parameter searched by the Sq-SpCS maximizer.
pub const R_MAX: f64 = 2.5;
const GRID: usize = 41;
const NM_MAX_ITERS: u64 = 2000;

/// `⟨ψ|ρ|ψ⟩` for a pure reference.
pub fn fidelity(rho: &DensityMatrix<f64>, reference: &[Complex64]) -> Result<f64> {
    if rho.dim() != reference.len() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: reference.len() });
    }
    rho.expectation_pure(reference)
}

/// Fidelity with the odd cat of real amplitude `|α|` along phase `θ` and
/// squeeze `r`; the reference is normalized on the untruncated space.
fn cat_fidelity(rho: &DensityMatrix<f64>, abs_alpha: f64, theta: f64, r: f64) -> f64 {
    let spec = CatSpec { alpha: Complex64::from_polar(abs_alpha, theta), parity: CatParity::Odd, squeeze_r: r };
    let psi = cat_amplitudes(&spec, rho.dim());
    rho.expectation_pure(&psi).unwrap_or(0.0)
}

/// Phases of `α` considered: along `X₁` and along `X₂`.
const PHASES: [f64; 2] = [0.0, std::f64::consts::FRAC_PI_2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpcsFit {
    pub fidelity: f64,
    pub abs_alpha: f64,
    pub phase: f64,
    /// `⟨n⟩ ≤ 1`: no odd cat has that mean photon number, so the `α → 0`
    /// limit (a single photon) was used.
    pub boundary: bool,
}

/// Fidelity with the odd cat of equal mean photon number.
pub fn best_spcs_fidelity(rho: &DensityMatrix<f64>) -> Result<SpcsFit> {
    let n = rho.mean_n();
    if !(n > 0.0) {
        return Err(Error::InvalidParameter(format!("state has <n> = {n}; need > 0")));
    }
    let (abs_alpha, boundary) = match odd_cat_alpha_for_mean_n(n) {
        Some(a) if n > 1.0 => (a, false),
        _ => (0.0, true),
    };
    let mut best = SpcsFit { fidelity: f64::NEG_INFINITY, abs_alpha, phase: 0.0, boundary };
    for &theta in &PHASES {
        let f = cat_fidelity(rho, abs_alpha, theta, 0.0);
        if f > best.fidelity {
            best.fidelity = f;
            best.phase = theta;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqSpcsFit {
    pub fidelity: f64,
    pub abs_alpha: f64,
    pub phase: f64,
    pub squeeze_r: f64,
    /// Best value on the coarse grid before refinement.
    pub grid_fidelity: f64,
    /// False when the local refinement hit its iteration cap.
    pub converged: bool,
}

impl SqSpcsFit {
    pub fn cat(&self) -> CatSpec<f64> {
        CatSpec {
            alpha: Complex64::from_polar(self.abs_alpha, self.phase),
            parity: CatParity::Odd,
            squeeze_r: self.squeeze_r,
        }
    }
}

struct NegFidelity<'a> {
    rho: &'a DensityMatrix<f64>,
    theta: f64,
    alpha_max: f64,
}

impl CostFunction for NegFidelity<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        // box constraints by clamping plus a penalty outside
        let a = p[0].clamp(0.0, self.alpha_max);
        let r = p[1].clamp(0.0, R_MAX);
        let excess = (p[0] - a).abs() + (p[1] - r).abs();
        Ok(-cat_fidelity(self.rho, a, self.theta, r) + excess)
    }
}

/// Maximizes the fidelity over squeezed odd cats: a 41×41 grid on
/// `|α| ∈ [0, 2√(⟨n⟩+1)]`, `r ∈ [0, 2.5]` for each phase, then Nelder–Mead.
pub fn best_sqspcs_fidelity(rho: &DensityMatrix<f64>) -> Result<SqSpcsFit> {
    best_sqspcs_from(rho, None)
}

/// As [`best_sqspcs_fidelity`] but refining from a given `(|α|, r, phase)`
/// instead of the grid optimum.
pub fn best_sqspcs_from(rho: &DensityMatrix<f64>, start: Option<(f64, f64, f64)>) -> Result<SqSpcsFit> {
    let n = rho.mean_n();
    if !(n > 0.0) {
        return Err(Error::InvalidParameter(format!("state has <n> = {n}; need > 0")));
    }
    let alpha_max = 2.0 * (n + 1.0).sqrt();
    let mut grid_best = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
    for &theta in &PHASES {
        for i in 0..GRID {
            let a = alpha_max * i as f64 / (GRID - 1) as f64;
            for j in 0..GRID {
                let r = R_MAX * j as f64 / (GRID - 1) as f64;
                let f = cat_fidelity(rho, a, theta, r);
                if f > grid_best.0 {
                    grid_best = (f, a, r, theta);
                }
            }
        }
    }
    let (a0, r0, theta) = start.unwrap_or((grid_best.1, grid_best.2, grid_best.3));
    let (da, dr) = (alpha_max / (GRID - 1) as f64, R_MAX / (GRID - 1) as f64);
    let simplex = vec![vec![a0, r0], vec![a0 + da, r0], vec![a0, r0 + dr]];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-13)
        .map_err(|e| Error::InvalidParameter(format!("optimizer setup: {e}")))?;
    let problem = NegFidelity { rho, theta, alpha_max };
    let res = Executor::new(problem, solver)
        .configure(|s| s.max_iters(NM_MAX_ITERS))
        .run()
        .map_err(|e| Error::InvalidParameter(format!("optimizer failed: {e}")))?;
    let state = res.state();
    let p = state.get_best_param().cloned().unwrap_or(vec![a0, r0]);
    let (a, r) = (p[0].clamp(0.0, alpha_max), p[1].clamp(0.0, R_MAX));
    let converged =
        !matches!(state.get_termination_status(), TerminationStatus::Terminated(TerminationReason::MaxItersReached));
    let mut fit = SqSpcsFit {
        fidelity: cat_fidelity(rho, a, theta, r),
        abs_alpha: a,
        phase: theta,
        squeeze_r: r,
        grid_fidelity: grid_best.0,
        converged,
    };
    if grid_best.0 > fit.fidelity {
        fit.fidelity = grid_best.0;
        fit.abs_alpha = grid_best.1;
        fit.squeeze_r = grid_best.2;
        fit.phase = grid_best.3;
    }
    Ok(fit)
}

/// Everything the figures and Table 1 report about one field state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityReport {
    pub f_spcs: f64,
    pub f_sqspcs: f64,
    pub spcs: SpcsFit,
    pub sqspcs: SqSpcsFit,
    pub mean_n: f64,
    pub squeezing_db: f64,
}

impl FidelityReport {
    pub fn best_cat(&self) -> CatSpec<f64> {
        self.sqspcs.cat()
    }
}

/// Both cat fidelities plus mean photon number and squeezing.
pub fn analyze_state(rho: &DensityMatrix<f64>) -> Result<FidelityReport> {
    let obs = observables(rho)?;
    let spcs = best_spcs_fidelity(rho)?;
    let mut sqspcs = best_sqspcs_fidelity(rho)?;
    // the plain cat is the r = 0 member of the squeezed family
    if spcs.fidelity > sqspcs.fidelity {
        sqspcs.fidelity = spcs.fidelity;
        sqspcs.abs_alpha = spcs.abs_alpha;
        sqspcs.phase = spcs.phase;
        sqspcs.squeeze_r = 0.0;
    }
    Ok(FidelityReport {
        f_spcs: spcs.fidelity,
        f_sqspcs: sqspcs.fidelity,
        spcs,
        sqspcs,
        mean_n: obs.mean_n,
        squeezing_db: obs.squeezing_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{FieldState, FockCutoff};
    use crate::refstates::{cat_state, odd_cat_mean_n, squeezed_fock_one, SqueezeSpec};

    fn cut(n: usize) -> FockCutoff {
        FockCutoff::new(n).unwrap()
    }

    #[test]
    fn trivial_fidelities() {
        let c = cut(4);
        let zero = FieldState::<f64>::vacuum(c);
        let one = FieldState::<f64>::fock(1, c).unwrap();
        assert!((fidelity(&zero.to_density(), zero.amplitudes()).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity(&one.to_density(), zero.amplitudes()).unwrap().abs() < 1e-15);
        let mut mix = zero.to_density().scaled(0.5);
        mix.add_scaled(&one.to_density(), 0.5).unwrap();
        assert!((fidelity(&mix, zero.amplitudes()).unwrap() - 0.5).abs() < 1e-15);
        assert!(fidelity(&mix, &zero.amplitudes()[..3]).is_err());
    }

    #[test]
    fn single_photon_is_boundary_cat() {
        let rho = FieldState::<f64>::fock(1, cut(10)).unwrap().to_density();
        let fit = best_spcs_fidelity(&rho).unwrap();
        assert!(fit.boundary);
        assert!((fit.fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_mean_n_convention() {
        let spec = CatSpec::odd(Complex64::new(1.5, 0.0), 0.0).unwrap();
        let c = cut(40);
        let rho = cat_state(spec, c).unwrap().to_density();
        let fit = best_spcs_fidelity(&rho).unwrap();
        assert!((odd_cat_mean_n(fit.abs_alpha) - rho.mean_n()).abs() < 1e-6);
        assert!((fit.fidelity - 1.0).abs() < 1e-8);
    }

    #[test]
    fn squeezed_single_photon_is_recovered() {
        let r = 1.0;
        let c = cut(80);
        let rho = squeezed_fock_one(SqueezeSpec::new(r).unwrap(), c).unwrap().to_density();
        let fit = best_sqspcs_fidelity(&rho).unwrap();
        assert!(fit.fidelity > 0.999, "{fit:?}");
        assert!((fit.squeeze_r - r).abs() < 0.05, "{fit:?}");
        assert!(fit.abs_alpha < 0.3, "{fit:?}");
        assert!(fit.fidelity - fit.grid_fidelity < 1e-3);
    }

    #[test]
    fn squeezed_cat_parameters_are_found() {
        let spec = CatSpec::odd(Complex64::new(0.0, 1.3), 0.4).unwrap();
        let c = cut(60);
        let rho = cat_state(spec, c).unwrap().to_density();
        let fit = best_sqspcs_fidelity(&rho).unwrap();
        assert!(fit.fidelity > 1.0 - 1e-7, "{fit:?}");
        assert!((fit.abs_alpha - 1.3).abs() < 1e-3 && (fit.squeeze_r - 0.4).abs() < 1e-3);
        let report = analyze_state(&rho).unwrap();
        assert!(report.f_sqspcs >= report.f_spcs - 1e-9);
    }

    #[test]
    fn perturbed_starts_agree() {
        let r = 0.7;
        let c = cut(60);
        let mut rho = squeezed_fock_one(SqueezeSpec::new(r).unwrap(), c).unwrap().to_density().scaled(0.9);
        rho.add_scaled(&FieldState::<f64>::fock(3, c).unwrap().to_density(), 0.1).unwrap();
        let base = best_sqspcs_fidelity(&rho).unwrap();
        for k in 0..5 {
            let start = (base.abs_alpha + 0.05 * k as f64, base.squeeze_r + 0.03 * (k as f64 - 2.0), base.phase);
            let f = best_sqspcs_from(&rho, Some(start)).unwrap();
            assert!((f.fidelity - base.fidelity).abs() < 1e-3);
        }
    }
}
