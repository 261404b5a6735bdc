use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::DensityMatrix;
use crate::Operator;

/// Default largest Hilbert-space dimension the dense oracle accepts.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// `ρ̇ = -i[H, ρ] + Σ_k (L_k ρ L_k† - ½{L_k†L_k, ρ})`.
#[derive(Debug, Clone)]
pub struct LindbladSpec {
    pub hamiltonian: Operator,
    pub collapse_ops: Vec<Operator>,
    pub initial: DensityMatrix<f64>,
    pub t_grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub atol: f64,
    pub rtol: f64,
    pub dim_cap: usize,
    /// Check `min eig ρ ≥ -1e-8` at each output (skipped above this dimension).
    pub positivity_check_max_dim: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { atol: 1e-12, rtol: 1e-10, dim_cap: DEFAULT_DIM_CAP, positivity_check_max_dim: 256 }
    }
}

/// Dense right-hand side with sparse operators.
pub(crate) struct Generator {
    dim: usize,
    /// `K = H - (i/2) Σ L†L`
    k: Operator,
    ls: Vec<Operator>,
    scratch: Vec<Complex64>,
    scratch2: Vec<Complex64>,
    /// Upper bound on the spectral radius of the generator.
    rate_bound: f64,
}

/// `out = A X` for sparse `A` and dense row-major `X`.
fn sparse_dense(a: &Operator, x: &[Complex64], out: &mut [Complex64], d: usize) {
    out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    for (r, c, v) in a.triplets() {
        let (dst, src) = (&mut out[r * d..(r + 1) * d], &x[c * d..(c + 1) * d]);
        for (o, s) in dst.iter_mut().zip(src) {
            *o += v * s;
        }
    }
}

fn adjoint_in_place(x: &mut [Complex64], d: usize) {
    for i in 0..d {
        x[i * d + i] = x[i * d + i].conj();
        for j in i + 1..d {
            let (a, b) = (x[i * d + j], x[j * d + i]);
            x[i * d + j] = b.conj();
            x[j * d + i] = a.conj();
        }
    }
}

impl Generator {
    pub(crate) fn new(h: &Operator, ls: &[Operator]) -> Result<Self> {
        let dim = h.dim();
        let mut k = h.clone();
        for l in ls {
            if l.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: l.dim() });
            }
            let ldl = l.adjoint().compose(l)?;
            k = k.add(&ldl.scaled(Complex64::new(0.0, -0.5)))?;
        }
        let rate_bound = 2.0 * k.one_norm() + ls.iter().map(|l| l.one_norm().powi(2)).sum::<f64>();
        Ok(Self { dim, k, ls: ls.to_vec(), rate_bound, scratch: vec![Default::default(); dim * dim], scratch2: vec![Default::default(); dim * dim] })
    }

    /// `out = L(ρ)`.
    pub(crate) fn apply(&mut self, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        // X = -i K ρ;  ρ̇ = X + X† + Σ L ρ L†
        sparse_dense(&self.k, rho, &mut self.scratch, d);
        for (o, x) in out.iter_mut().zip(&self.scratch) {
            *o = Complex64::new(x.im, -x.re);
        }
        for i in 0..d {
            for j in i..d {
                let (a, b) = (out[i * d + j], out[j * d + i]);
                out[i * d + j] = a + b.conj();
                if i != j {
                    out[j * d + i] = b + a.conj();
                } else {
                    out[i * d + i] = Complex64::new(2.0 * a.re, 0.0);
                }
            }
        }
        for l in &self.ls {
            // Y = Lρ, then L ρ L† = (L Y†)†
            sparse_dense(l, rho, &mut self.scratch, d);
            adjoint_in_place(&mut self.scratch, d);
            sparse_dense(l, &self.scratch, &mut self.scratch2, d);
            // assemble exactly Hermitian: an anti-Hermitian roundoff part
            // would otherwise see only L·L† without its decay and grow
            for i in 0..d {
                let m = self.scratch2[i * d + i];
                out[i * d + i] += Complex64::new(m.re, 0.0);
                for j in i + 1..d {
                    let v = (self.scratch2[j * d + i].conj() + self.scratch2[i * d + j]) * 0.5;
                    out[i * d + j] += v;
                    out[j * d + i] += v.conj();
                }
            }
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Adaptive Dormand–Prince integrator over a dense density matrix.
pub(crate) struct Dopri {
    gen: Generator,
    k: Vec<Vec<Complex64>>,
    stage: Vec<Complex64>,
    y5: Vec<Complex64>,
    h: f64,
    opts: IntegratorOptions,
    fsal_valid: bool,
    pub(crate) steps: usize,
}

impl Dopri {
    pub(crate) fn new(gen: Generator, opts: IntegratorOptions) -> Self {
        let n = gen.dim * gen.dim;
        Self {
            gen,
            k: vec![vec![Default::default(); n]; 7],
            stage: vec![Default::default(); n],
            y5: vec![Default::default(); n],
            h: 0.0,
            opts,
            fsal_valid: false,
            steps: 0,
        }
    }

    /// Advances `y` from `t0` to `t1`.
    pub(crate) fn integrate(&mut self, y: &mut [Complex64], t0: f64, t1: f64) -> Result<()> {
        let mut t = t0;
        if t1 <= t0 {
            return Ok(());
        }
        if self.h <= 0.0 {
            self.h = ((t1 - t0) * 1e-3).max(1e-300);
        }
        self.fsal_valid = false;
        // keep h|λ| inside the explicit stability region for every mode,
        // including ones still below the error tolerance
        let h_max = if self.gen.rate_bound > 0.0 { 1.0 / self.gen.rate_bound } else { f64::INFINITY };
        self.h = self.h.min(h_max);
        let max_steps = 50_000_000usize;
        while t < t1 {
            if self.steps > max_steps {
                return Err(Error::StepContract("oracle integrator exceeded its step budget".into()));
            }
            let last = t + self.h >= t1;
            let h = if last { t1 - t } else { self.h };
            if !self.fsal_valid {
                let (k0, _) = self.k.split_at_mut(1);
                self.gen.apply(y, &mut k0[0]);
            }
            for s in 1..7 {
                for (i, v) in self.stage.iter_mut().enumerate() {
                    let mut acc = y[i];
                    for (j, a) in A[s].iter().enumerate().take(s) {
                        if *a != 0.0 {
                            acc += self.k[j][i] * (h * a);
                        }
                    }
                    *v = acc;
                }
                let stage = std::mem::take(&mut self.stage);
                self.gen.apply(&stage, &mut self.k[s]);
                self.stage = stage;
            }
            // stage 6 evaluated at the 5th-order solution (FSAL)
            let mut err = 0.0f64;
            for i in 0..y.len() {
                let mut y5 = y[i];
                let mut e = Complex64::new(0.0, 0.0);
                for s in 0..7 {
                    y5 += self.k[s][i] * (h * B5[s]);
                    e += self.k[s][i] * (h * (B5[s] - B4[s]));
                }
                self.y5[i] = y5;
                let sc = self.opts.atol + self.opts.rtol * y[i].norm().max(y5.norm());
                err = err.max(e.norm() / sc);
            }
            let _ = C;
            self.steps += 1;
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y.copy_from_slice(&self.y5);
                let (head, tail) = self.k.split_at_mut(6);
                std::mem::swap(&mut head[0], &mut tail[0]);
                self.fsal_valid = true;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || fac < 1.0 {
                    self.h = (h * fac).min(h_max);
                }
            } else {
                self.fsal_valid = true;
                // k[0] still holds f(t, y)
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        Ok(())
    }
}

fn check_dim(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    Ok(())
}

pub(crate) fn check_physical(rho: &DensityMatrix<f64>, opts: &IntegratorOptions) -> Result<()> {
    let tr = rho.trace_re();
    if (tr - 1.0).abs() > 1e-8 {
        return Err(Error::StepContract(format!("oracle trace drifted to {tr}")));
    }
    if rho.dim() <= opts.positivity_check_max_dim {
        let m = rho.min_eigenvalue();
        if m < -1e-8 {
            return Err(Error::Positivity(m));
        }
    }
    Ok(())
}

/// Integrates the master equation and returns `ρ(t)` at each grid time
/// (grid must be non-decreasing and start at or after 0).
pub fn integrate_lindblad(spec: &LindbladSpec) -> Result<Vec<DensityMatrix<f64>>> {
    integrate_lindblad_with(spec, IntegratorOptions::default())
}

pub fn integrate_lindblad_with(spec: &LindbladSpec, opts: IntegratorOptions) -> Result<Vec<DensityMatrix<f64>>> {
    let d = spec.hamiltonian.dim();
    check_dim(d, opts.dim_cap)?;
    if spec.initial.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: spec.initial.dim() });
    }
    if spec.hamiltonian.hermiticity_error() > 1e-12 {
        return Err(Error::InvalidParameter("Lindblad Hamiltonian is not Hermitian".into()));
    }
    let mut dopri = Dopri::new(Generator::new(&spec.hamiltonian, &spec.collapse_ops)?, opts);
    let mut y = spec.initial.data().to_vec();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(spec.t_grid.len());
    for &tg in &spec.t_grid {
        if tg < t {
            return Err(Error::InvalidParameter("time grid must be non-decreasing and >= 0".into()));
        }
        dopri.integrate(&mut y, t, tg)?;
        t = tg;
        let rho = DensityMatrix::from_row_major(d, y.clone())?;
        check_physical(&rho, &opts)?;
        out.push(rho);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{annihilation, tavis_cummings, FieldState, FockCutoff, JointState};
    use crate::refstates::squeezed_coherent_coefficients;

    fn decay_spec(initial: DensityMatrix<f64>, kappa: f64, grid: Vec<f64>) -> LindbladSpec {
        let c = FockCutoff::new(initial.dim() - 1).unwrap();
        LindbladSpec {
            hamiltonian: Operator::zeros(c.dim()),
            collapse_ops: vec![annihilation::<f64>(c).scaled(Complex64::new(kappa.sqrt(), 0.0))],
            initial,
            t_grid: grid,
        }
    }

    #[test]
    fn single_photon_decay() {
        let c = FockCutoff::new(3).unwrap();
        let rho = FieldState::<f64>::fock(1, c).unwrap().to_density();
        let grid = vec![0.0, 0.5, 1.0, 3.0];
        let out = integrate_lindblad(&decay_spec(rho, 0.7, grid.clone())).unwrap();
        for (r, t) in out.iter().zip(&grid) {
            assert!((r.get(0, 0).re - (1.0 - (-0.7 * t).exp())).abs() < 1e-9);
        }
    }

    #[test]
    fn coherent_state_stays_coherent() {
        let alpha = Complex64::new(1.2, 0.5);
        let dim = 30;
        let psi = squeezed_coherent_coefficients(alpha, 0.0, dim);
        let rho = DensityMatrix::from_pure(&psi);
        let kappa = 0.4;
        let t = 2.0;
        let out = integrate_lindblad(&decay_spec(rho, kappa, vec![t])).unwrap();
        let expect = squeezed_coherent_coefficients(alpha * (-kappa * t / 2.0).exp(), 0.0, dim);
        let f = out[0].expectation_pure(&expect).unwrap();
        assert!((f - 1.0).abs() < 1e-8, "{f}");
    }

    #[test]
    fn rabi_oscillation_matches_propagator() {
        let c = FockCutoff::new(3).unwrap();
        let g = 1.3;
        let h = tavis_cummings::<f64>(c, 1, g);
        // |0,↑⟩
        let mut amps = vec![Complex64::new(0.0, 0.0); c.dim() * 2];
        amps[1] = Complex64::new(1.0, 0.0);
        let psi0 = JointState::from_amplitudes(c, 1, amps.clone()).unwrap();
        let t = 0.9;
        let spec = LindbladSpec {
            hamiltonian: h.clone(),
            collapse_ops: vec![],
            initial: DensityMatrix::from_pure(&amps),
            t_grid: vec![t],
        };
        let out = integrate_lindblad(&spec).unwrap();
        let mut psi = psi0.clone();
        crate::hilbert::evolve_nonhermitian(&mut psi, &h, t).unwrap();
        let expect = DensityMatrix::from_pure(psi.amplitudes());
        assert!(out[0].max_abs_diff(&expect).unwrap() < 1e-9);
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let c = FockCutoff::new(3).unwrap();
        let spec = decay_spec(FieldState::<f64>::vacuum(c).to_density(), 1.0, vec![1.0]);
        let opts = IntegratorOptions { dim_cap: 2, ..Default::default() };
        assert!(matches!(integrate_lindblad_with(&spec, opts), Err(Error::DimensionCap { .. })));
    }
}
