use num_complex::Complex64;

use super::lindblad::{integrate_lindblad_with, IntegratorOptions, LindbladSpec};
use crate::error::{Error, Result};
use crate::hilbert::{annihilation, creation, DensityMatrix, FockCutoff};
use crate::Operator;

/// `b = Ŝ a Ŝ† = a cosh r - a† sinh r`, whose vacuum is the squeezed vacuum.
pub fn squeezed_frame_mode(cutoff: FockCutoff, r: f64) -> Operator {
    let a = annihilation::<f64>(cutoff).scaled(Complex64::new(r.cosh(), 0.0));
    let ad = creation::<f64>(cutoff).scaled(Complex64::new(-r.sinh(), 0.0));
    a.add(&ad).expect("same dimension")
}

/// `Tr(ρ b†b)`.
pub fn squeezed_frame_number(rho: &DensityMatrix<f64>, r: f64) -> Result<f64> {
    let cutoff = FockCutoff::new(rho.dim() - 1)?;
    let b = squeezed_frame_mode(cutoff, r);
    let btb = b.adjoint().compose(&b)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, j, v) in btb.triplets() {
        acc += v * rho.get(j, i);
    }
    Ok(acc.re)
}

/// Coarse-grained dynamics `ρ̇ = (1/τ_c) D[b] ρ`: relaxation toward the
/// squeezed vacuum of parameter `r` at rate `1/τ_c`.
pub fn effective_squeezed_frame_decay(
    r: f64,
    tau_c: f64,
    initial: &DensityMatrix<f64>,
    times: &[f64],
) -> Result<Vec<DensityMatrix<f64>>> {
    if !(tau_c > 0.0 && tau_c.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau_c must be positive, got {tau_c}")));
    }
    let cutoff = FockCutoff::new(initial.dim() - 1)?;
    let l = squeezed_frame_mode(cutoff, r).scaled(Complex64::new(tau_c.recip().sqrt(), 0.0));
    let spec = LindbladSpec {
        hamiltonian: Operator::zeros(cutoff.dim()),
        collapse_ops: vec![l],
        initial: initial.clone(),
        t_grid: times.to_vec(),
    };
    integrate_lindblad_with(&spec, IntegratorOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::FieldState;
    use crate::refstates::{squeezed_vacuum, SqueezeSpec};

    #[test]
    fn squeezed_vacuum_is_stationary() {
        let c = FockCutoff::new(60).unwrap();
        let r = 0.6;
        let sq = squeezed_vacuum(SqueezeSpec::new(r).unwrap(), c).unwrap();
        let rho = sq.to_density();
        let out = effective_squeezed_frame_decay(r, 1.0, &rho, &[10.0]).unwrap();
        assert!(out[0].max_abs_diff(&rho).unwrap() < 1e-9);
        assert!(squeezed_frame_number(&rho, r).unwrap().abs() < 1e-12);
    }

    #[test]
    fn frame_number_decays_exponentially() {
        let c = FockCutoff::new(60).unwrap();
        let r = 0.4;
        let rho = FieldState::<f64>::vacuum(c).to_density();
        let n0 = squeezed_frame_number(&rho, r).unwrap();
        assert!((n0 - r.sinh().powi(2)).abs() < 1e-12);
        let out = effective_squeezed_frame_decay(r, 2.0, &rho, &[1.0, 3.0]).unwrap();
        for (s, t) in out.iter().zip([1.0, 3.0]) {
            let n = squeezed_frame_number(s, r).unwrap();
            assert!((n - n0 * (-t / 2.0f64).exp()).abs() < 1e-9);
        }
    }
}
