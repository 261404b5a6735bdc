use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, FieldState};
use crate::scalar::{czero, from_usize, to_f64, Real};

/// Moments of a field state. Quadratures are `X₁ = (a + a†)/2` and
/// `X₂ = (a - a†)/2i`, so the vacuum variance is 1/4.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FieldObservables {
    pub mean_n: f64,
    pub var_x1: f64,
    pub var_x2: f64,
    /// `-10 log₁₀(4 min(var_x1, var_x2))`; negative when neither quadrature
    /// is below the vacuum level.
    pub squeezing_db: f64,
    pub parity: f64,
}

const TRACE_TOL: f64 = 1e-6;

pub fn observables<T: Real>(rho: &DensityMatrix<T>) -> Result<FieldObservables> {
    let tr = to_f64(rho.trace_re());
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::InvalidParameter(format!("field state trace {tr} is not 1")));
    }
    let d = rho.dim();
    // ⟨a⟩ = Σ √n ρ_{n,n-1},  ⟨a²⟩ = Σ √(n(n-1)) ρ_{n,n-2}
    let mut a1 = czero::<T>();
    let mut a2 = czero::<T>();
    for n in 1..d {
        a1 = a1 + rho.get(n, n - 1) * from_usize::<T>(n).sqrt();
        if n >= 2 {
            a2 = a2 + rho.get(n, n - 2) * from_usize::<T>(n * (n - 1)).sqrt();
        }
    }
    let n = to_f64(rho.mean_n());
    let (a1r, a1i, a2r) = (to_f64(a1.re), to_f64(a1.im), to_f64(a2.re));
    let var_x1 = (2.0 * a2r + 2.0 * n + 1.0) / 4.0 - a1r * a1r;
    let var_x2 = (-2.0 * a2r + 2.0 * n + 1.0) / 4.0 - a1i * a1i;
    Ok(FieldObservables {
        mean_n: n,
        var_x1,
        var_x2,
        squeezing_db: -10.0 * (4.0 * var_x1.min(var_x2)).log10(),
        parity: to_f64(rho.parity()),
    })
}

pub fn observables_pure<T: Real>(state: &FieldState<T>) -> Result<FieldObservables> {
    observables(&state.to_density())
}

/// Squeezing of `Ŝ(r)|0⟩` in dB: `10 log₁₀ e^{2r}`.
pub fn squeezing_db_for_r(r: f64) -> f64 {
    20.0 * r / std::f64::consts::LN_10
}
