use std::sync::Arc;

use serde::Serialize;

use super::frame::effective_squeezed_frame_decay;
use super::kick::{pairwise_kick_map, PairMode};
use super::lindblad::{IntegratorOptions, DEFAULT_DIM_CAP};
use super::schedule::integrate_schedule;
use crate::error::Result;
use crate::hilbert::{DensityMatrix, FieldState, FockCutoff};
use crate::refstates::{cutoff_for_subtracted_squeezed_vacuum, squeezed_vacuum, SqueezeSpec};
use crate::trajectory::{
    par_map_indexed, run_trajectory_sampled, schedule_rng, trajectory_seed, Schedule, SimConfig,
};

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Trajectory ensemble vs master equation on one shared injection schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnravelingReport {
    pub checkpoints: Vec<f64>,
    pub n_traj: usize,
    pub schedule_seed: u64,
    pub max_occupancy: usize,
    /// Real and imaginary parts of `ρ_mn`, `m ≤ n`, with a resolvable
    /// standard error, over all checkpoints.
    pub compared: usize,
    pub beyond_3se: usize,
    /// Binomial expectation of `beyond_3se` under exact agreement.
    pub expected_beyond_3se: f64,
    pub max_abs_z: f64,
    /// Largest deviation of an element without resolvable error.
    pub max_unresolved_diff: f64,
    /// Largest `|z|` tolerated given the number of comparisons (two-sided
    /// tail probability 0.01 / compared).
    pub max_z_allowed: f64,
    pub pass: bool,
}

/// Smallest schedule seed (in `trajectory_seed(master, k)` order) whose
/// occupancy stays within `max_atoms`, so the dense oracle fits its cap.
pub fn oracle_schedule(config: &SimConfig, horizon: f64, master: u64, max_atoms: usize) -> (u64, Schedule) {
    let mut k = 0u64;
    loop {
        let seed = trajectory_seed(master, k);
        let s = Schedule::generate(config, horizon, &mut schedule_rng(seed));
        if s.max_occupancy() <= max_atoms {
            return (seed, s);
        }
        k += 1;
    }
}

/// Two-sided normal quantile for a tail probability `p` (bisection on erfc).
fn z_for_tail(p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if erfc(mid / std::f64::consts::SQRT_2) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Complementary error function (Numerical Recipes `erfcc`, |rel err| < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398 + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Runs `n_traj` trajectories on a fixed schedule and compares the
/// ensemble-averaged field with the master-equation solution.
///
/// Pass rule: the count of `|z| > 3` may not exceed its binomial expectation
/// by more than three binomial standard deviations, and no `|z|` may exceed
/// the Bonferroni bound at family-wise level 1%.
pub fn unraveling_check(
    config: &SimConfig,
    checkpoints: &[f64],
    n_traj: usize,
    master_seed: u64,
    jobs: Option<usize>,
) -> Result<UnravelingReport> {
    let horizon = checkpoints.iter().copied().fold(0.0, f64::max);
    let mut cfg = config.clone();
    cfg.duration = horizon;
    let cutoff = cfg.cutoff()?;
    let max_atoms = (DEFAULT_DIM_CAP / cutoff.dim()).ilog2() as usize;
    let (schedule_seed, schedule) = oracle_schedule(&cfg, horizon, master_seed, max_atoms);
    let schedule = Arc::new(schedule);
    let oracle = integrate_schedule(
        &cfg,
        &schedule,
        &FieldState::<f64>::vacuum(cutoff).to_density(),
        checkpoints,
        IntegratorOptions::default(),
    )?;
    let runs = par_map_indexed(n_traj, jobs, |i| {
        let seed = trajectory_seed(master_seed ^ 0x9E37_79B9_7F4A_7C15, i as u64);
        Ok(run_trajectory_sampled(&cfg, seed, Some(schedule.clone()), checkpoints)?.sample_states)
    })?;
    let d = cutoff.dim();
    let n = n_traj as f64;
    let (mut compared, mut beyond, mut max_z, mut max_unres) = (0usize, 0usize, 0.0f64, 0.0f64);
    for (j, exact) in oracle.iter().enumerate() {
        for a in 0..d {
            for b in a..d {
                for part in 0..2 {
                    let pick = |rho: &DensityMatrix<f64>| {
                        let z = rho.get(a, b);
                        if part == 0 {
                            z.re
                        } else {
                            z.im
                        }
                    };
                    if part == 1 && a == b {
                        continue;
                    }
                    let xs: Vec<f64> = runs.iter().map(|r| pick(&r[j])).collect();
                    let mean = xs.iter().sum::<f64>() / n;
                    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                    let se = (var / n).sqrt();
                    let diff = mean - pick(exact);
                    if se > 1e-10 {
                        compared += 1;
                        let z = diff / se;
                        max_z = max_z.max(z.abs());
                        if z.abs() > 3.0 {
                            beyond += 1;
                        }
                    } else {
                        max_unres = max_unres.max(diff.abs());
                    }
                }
            }
        }
    }
    let p3 = erfc(3.0 / std::f64::consts::SQRT_2);
    let expected = compared as f64 * p3;
    let allowed_count = expected + 3.0 * (compared as f64 * p3 * (1.0 - p3)).sqrt();
    let max_z_allowed = z_for_tail(0.01 / compared.max(1) as f64);
    Ok(UnravelingReport {
        checkpoints: checkpoints.to_vec(),
        n_traj,
        schedule_seed,
        max_occupancy: schedule.max_occupancy(),
        compared,
        beyond_3se: beyond,
        expected_beyond_3se: expected,
        max_abs_z: max_z,
        max_unresolved_diff: max_unres,
        max_z_allowed,
        pass: (beyond as f64) <= allowed_count && max_z <= max_z_allowed && max_unres < 1e-8,
    })
}

/// Relaxation of the vacuum under the squeezed-frame decay equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxationReport {
    pub r: f64,
    pub tau_c: f64,
    pub times: Vec<f64>,
    pub f_sqvs: Vec<f64>,
    /// Smallest `F(t) - (1 - e^{-t/τ_c})`.
    pub min_margin: f64,
    /// Rate fitted to `ln(1 - F)` over `[5τ_c, 10τ_c]`, times `τ_c`.
    pub fitted_rate_tau_c: f64,
    pub pass: bool,
}

pub fn relaxation_check(r: f64, tau_c: f64) -> Result<RelaxationReport> {
    let cutoff = cutoff_for_subtracted_squeezed_vacuum(r, 2, 1e-14);
    let target = squeezed_vacuum(SqueezeSpec::new(r)?, cutoff)?;
    let times: Vec<f64> = (0..=40).map(|k| k as f64 * tau_c / 4.0).collect();
    let states = effective_squeezed_frame_decay(r, tau_c, &FieldState::<f64>::vacuum(cutoff).to_density(), &times)?;
    let f: Vec<f64> =
        states.iter().map(|s| s.expectation_pure(target.amplitudes())).collect::<Result<_>>()?;
    let min_margin = times
        .iter()
        .zip(&f)
        .map(|(t, fv)| fv + (-t / tau_c).exp_m1())
        .fold(f64::INFINITY, f64::min);
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&f)
        .filter(|(t, _)| **t >= 5.0 * tau_c - 1e-12)
        .map(|(t, fv)| (*t, (1.0 - fv).ln()))
        .unzip();
    let rate = -fit_slope(&xs, &ys) * tau_c;
    Ok(RelaxationReport {
        r,
        tau_c,
        times,
        f_sqvs: f,
        min_margin,
        fitted_rate_tau_c: rate,
        pass: min_margin > -0.02 && (rate - 1.0).abs() < 0.01,
    })
}

/// Staggered vs simultaneous pair passes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaggerReport {
    pub beta_sq: f64,
    pub g_t_int: Vec<f64>,
    /// Max elementwise `|ρ_staggered - ρ_simultaneous|` for vacuum input.
    pub max_diff: Vec<f64>,
    pub exponent: f64,
    /// `1 - F` of the squeezed vacuum after one pass, and the allowed `10 (g t)⁴`.
    pub fixed_point_infidelity: Vec<f64>,
    pub fixed_point_bound: Vec<f64>,
    /// Max elementwise difference between one pass and one `t_int` step of
    /// the squeezed-frame decay at rate `2 e^{-2r} g² t_int`, over `(g t)³`.
    pub coarse_grain_ratio: Vec<f64>,
    pub pass: bool,
}

pub fn stagger_check(beta_sq: f64, g_t_int: &[f64]) -> Result<StaggerReport> {
    let t_int = 1.0;
    let small = FockCutoff::new(12)?;
    let vac = FieldState::<f64>::vacuum(small).to_density();
    let spec = SqueezeSpec::from_beta_sq(beta_sq)?;
    let r = spec.r();
    let big = cutoff_for_subtracted_squeezed_vacuum(r, 2, 1e-14);
    let sq = squeezed_vacuum(spec, big)?;
    let sq_rho = sq.to_density();
    let (mut diffs, mut fp, mut fpb, mut cg) = (vec![], vec![], vec![], vec![]);
    for &gt in g_t_int {
        let g = gt / t_int;
        let a = pairwise_kick_map(&vac, beta_sq, g, t_int, PairMode::Simultaneous)?;
        let b = pairwise_kick_map(&vac, beta_sq, g, t_int, PairMode::Staggered { delta: t_int / 2.0 })?;
        diffs.push(a.max_abs_diff(&b)?);
        let out = pairwise_kick_map(&sq_rho, beta_sq, g, t_int, PairMode::Simultaneous)?;
        fp.push(1.0 - out.expectation_pure(sq.amplitudes())?);
        fpb.push(10.0 * gt.powi(4));
        let tau_c = 1.0 / ((-2.0 * r).exp() * 2.0 * g * g * t_int);
        let eff = effective_squeezed_frame_decay(r, tau_c, &vac, &[t_int])?;
        cg.push(a.max_abs_diff(&eff[0])? / gt.powi(3));
    }
    let lx: Vec<f64> = g_t_int.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = diffs.iter().map(|x| x.ln()).collect();
    let exponent = fit_slope(&lx, &ly);
    let pass = (exponent - 3.0).abs() <= 0.3 && fp.iter().zip(&fpb).all(|(a, b)| a < b);
    Ok(StaggerReport {
        beta_sq,
        g_t_int: g_t_int.to_vec(),
        max_diff: diffs,
        exponent,
        fixed_point_infidelity: fp,
        fixed_point_bound: fpb,
        coarse_grain_ratio: cg,
        pass,
    })
}
