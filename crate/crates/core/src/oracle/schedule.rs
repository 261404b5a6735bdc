use num_complex::Complex64;

use super::lindblad::{check_physical, Dopri, Generator, IntegratorOptions};
use crate::error::{Error, Result};
use crate::hilbert::{annihilation, identity, tavis_cummings, DensityMatrix, DipolePhase, FockCutoff};
use crate::trajectory::{Schedule, ScheduledKind, SimConfig};

/// `ρ ⊗ |φ⟩⟨φ|` with the atom appended as the least significant register bit.
pub fn attach_atom_density(rho: &DensityMatrix<f64>, phase: DipolePhase, beta_sq: f64) -> DensityMatrix<f64> {
    let d = rho.dim();
    let a = (1.0 - beta_sq).sqrt();
    let b = match phase {
        DipolePhase::Zero => beta_sq.sqrt(),
        DipolePhase::Pi => -beta_sq.sqrt(),
    };
    let phi = [a, b];
    let mut out = DensityMatrix::zeros(2 * d);
    for i in 0..d {
        for j in 0..d {
            let v = rho.get(i, j);
            for s in 0..2 {
                for t in 0..2 {
                    out.set(2 * i + s, 2 * j + t, v * (phi[s] * phi[t]));
                }
            }
        }
    }
    out
}

/// Traces out the qubit at register bit `bit` (a power of two).
pub fn trace_out_bit(rho: &DensityMatrix<f64>, bit: usize) -> DensityMatrix<f64> {
    let d = rho.dim() / 2;
    let full = |k: usize, s: usize| (k / bit) * 2 * bit + s * bit + k % bit;
    let mut out = DensityMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let v = rho.get(full(i, 0), full(j, 0)) + rho.get(full(i, 1), full(j, 1));
            out.set(i, j, v);
        }
    }
    out
}

/// Field marginal of a joint density matrix with `atoms` register qubits.
pub fn trace_out_atoms(rho: &DensityMatrix<f64>, atoms: usize) -> DensityMatrix<f64> {
    let block = 1usize << atoms;
    let d = rho.dim() / block;
    let mut out = DensityMatrix::zeros(d);
    for n in 0..d {
        for m in 0..d {
            let mut v = Complex64::new(0.0, 0.0);
            for b in 0..block {
                v += rho.get(n * block + b, m * block + b);
            }
            out.set(n, m, v);
        }
    }
    out
}

/// Unconditional master-equation evolution of field ⊗ atoms along a fixed
/// injection schedule: atoms are appended at entry and traced out at exit.
/// Returns the field state at each checkpoint (sorted, non-negative).
pub fn integrate_schedule(
    config: &SimConfig,
    schedule: &Schedule,
    initial_field: &DensityMatrix<f64>,
    checkpoints: &[f64],
    opts: IntegratorOptions,
) -> Result<Vec<DensityMatrix<f64>>> {
    let cutoff = FockCutoff::new(initial_field.dim() - 1)?;
    let mut rho = initial_field.clone();
    let mut atoms = 0usize;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut events = schedule.events.iter().peekable();
    let mut h_cache: Vec<Option<Dopri>> = Vec::new();

    let mut run_to = |rho: &mut DensityMatrix<f64>, atoms: usize, t0: f64, t1: f64| -> Result<()> {
        if t1 <= t0 {
            return Ok(());
        }
        if h_cache.len() <= atoms {
            h_cache.resize_with(atoms + 1, || None);
        }
        if h_cache[atoms].is_none() {
            let dim = cutoff.dim() << atoms;
            if dim > opts.dim_cap {
                return Err(Error::DimensionCap { dim, cap: opts.dim_cap });
            }
            let h = tavis_cummings::<f64>(cutoff, atoms, config.g);
            let l = annihilation::<f64>(cutoff)
                .kron(&identity(1 << atoms))
                .scaled(Complex64::new(config.kappa.sqrt(), 0.0));
            h_cache[atoms] = Some(Dopri::new(Generator::new(&h, &[l])?, opts));
        }
        let dopri = h_cache[atoms].as_mut().expect("cached integrator");
        dopri.integrate(rho.data_mut(), t0, t1)
    };

    for &tc in checkpoints {
        if tc < t {
            return Err(Error::InvalidParameter("checkpoints must be sorted and non-negative".into()));
        }
        while let Some(ev) = events.peek() {
            if ev.time > tc {
                break;
            }
            run_to(&mut rho, atoms, t, ev.time)?;
            t = ev.time;
            let rec = &schedule.atoms[ev.atom];
            match ev.kind {
                ScheduledKind::Enter => {
                    rho = attach_atom_density(&rho, rec.phase, config.beta_sq);
                    atoms += 1;
                }
                ScheduledKind::Exit => {
                    // first in, first out: the leaving atom is always slot 0
                    rho = trace_out_bit(&rho, 1 << (atoms - 1));
                    atoms -= 1;
                }
            }
            events.next();
        }
        run_to(&mut rho, atoms, t, tc)?;
        t = tc;
        let field = trace_out_atoms(&rho, atoms);
        check_physical(&field, &opts)?;
        out.push(field);
    }
    Ok(out)
}
