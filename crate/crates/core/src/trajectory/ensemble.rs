use std::sync::Arc;

use rayon::prelude::*;

use super::config::SimConfig;
use super::engine::{schedule_rng, steady_sample_times, Trajectory, TrajectoryOutput};
use super::events::EventKind;
use super::schedule::Schedule;
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, FieldState};
use crate::FieldDensityMatrix;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` under a master seed.
pub fn trajectory_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Evaluates `f(0..n)` in parallel and returns the results in index order;
/// the first error by index wins. `jobs = None` uses the global pool.
pub fn par_map_indexed<R, F>(n: usize, jobs: Option<usize>, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> Result<R> + Sync + Send,
{
    let run = || (0..n).into_par_iter().map(&f).collect::<Vec<Result<R>>>();
    let results = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    results.into_iter().collect()
}

/// Time average of one trajectory's reduced field over its steady samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyRun {
    pub rho: FieldDensityMatrix,
    pub samples: usize,
    pub jumps: usize,
    /// Sum of detected post-click states after burn-in.
    pub detected_herald_sum: FieldDensityMatrix,
    pub detected_heralds: usize,
}

/// Ensemble of steady-state trajectories. Statistics treat each
/// trajectory's time average as one independent sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyEnsemble {
    pub runs: Vec<SteadyRun>,
    pub rho: FieldDensityMatrix,
    pub mean_n: f64,
    pub stderr_mean_n: f64,
    /// `a ρ a† / Tr(a ρ a†)` of the stationary state: the post-click state
    /// averaged over click times, which occur at rate `κ⟨n⟩`.
    pub herald: FieldDensityMatrix,
    pub herald_mean_n: f64,
    /// Jackknife standard error of `herald_mean_n`.
    pub herald_stderr_mean_n: f64,
}

impl SteadyEnsemble {
    /// Average of the detected post-click states actually recorded.
    pub fn detected_herald_average(&self) -> Result<FieldDensityMatrix> {
        let count: usize = self.runs.iter().map(|r| r.detected_heralds).sum();
        if count == 0 {
            return Err(Error::EmptyHeralds);
        }
        let mut acc = DensityMatrix::zeros(self.rho.dim());
        for r in &self.runs {
            acc.add_scaled(&r.detected_herald_sum, 1.0)?;
        }
        Ok(acc.scaled(1.0 / count as f64))
    }
}

/// One steady-state trajectory: burn-in from the vacuum, then samples every
/// `sample_interval` up to `duration`.
pub fn steady_run(config: &SimConfig, seed: u64) -> Result<SteadyRun> {
    let times = steady_sample_times(config)?;
    if times.is_empty() {
        return Err(Error::InvalidParameter("duration ends before burn-in; no steady samples".into()));
    }
    let schedule = Arc::new(Schedule::generate(config, config.duration, &mut schedule_rng(seed)));
    let cutoff = config.cutoff()?;
    let mut traj =
        Trajectory::new(Arc::new(config.clone()), schedule, &FieldState::vacuum(cutoff), seed)?.with_heralds();
    let mut acc = DensityMatrix::zeros(cutoff.dim());
    for &t in &times {
        traj.advance_to(t)?;
        acc.add_scaled(&traj.reduced_field()?, 1.0)?;
    }
    traj.advance_to(config.duration)?;
    let burn_in = times[0];
    let mut heralds = DensityMatrix::zeros(cutoff.dim());
    let mut count = 0;
    for h in traj.heralds().iter().filter(|h| h.detected && h.time >= burn_in) {
        heralds.add_scaled(&h.rho, 1.0)?;
        count += 1;
    }
    Ok(SteadyRun {
        rho: acc.scaled(1.0 / times.len() as f64),
        samples: times.len(),
        jumps: traj.jump_count(),
        detected_herald_sum: heralds,
        detected_heralds: count,
    })
}

pub fn steady_state_ensemble(config: &SimConfig, n_traj: usize, jobs: Option<usize>) -> Result<SteadyEnsemble> {
    config.validate()?;
    if n_traj == 0 {
        return Err(Error::InvalidParameter("need at least one trajectory".into()));
    }
    let runs = par_map_indexed(n_traj, jobs, |i| steady_run(config, trajectory_seed(config.seed, i as u64)))?;
    SteadyEnsemble::from_runs(runs)
}

impl SteadyRun {
    /// Summary of a recorded trajectory whose samples all lie after `burn_in`.
    pub fn from_output(out: &TrajectoryOutput, burn_in: f64) -> Result<Self> {
        let Some(first) = out.sample_states.first() else {
            return Err(Error::InvalidParameter("trajectory has no steady samples".into()));
        };
        let mut rho = DensityMatrix::zeros(first.dim());
        for s in &out.sample_states {
            rho.add_scaled(s, 1.0)?;
        }
        let mut heralds = DensityMatrix::zeros(first.dim());
        let mut count = 0;
        for h in out.heralds.iter().filter(|h| h.detected && h.time >= burn_in) {
            heralds.add_scaled(&h.rho, 1.0)?;
            count += 1;
        }
        Ok(Self {
            rho: rho.scaled(1.0 / out.sample_states.len() as f64),
            samples: out.sample_states.len(),
            jumps: out.events.iter().filter(|e| matches!(e.kind, EventKind::PhotonJump { .. })).count(),
            detected_herald_sum: heralds,
            detected_heralds: count,
        })
    }
}

impl SteadyEnsemble {
    /// Reduces per-trajectory runs in index order.
    pub fn from_runs(runs: Vec<SteadyRun>) -> Result<Self> {
        let Some(first) = runs.first() else {
            return Err(Error::InvalidParameter("need at least one trajectory".into()));
        };
        let n_traj = runs.len();
        let mut rho = DensityMatrix::zeros(first.rho.dim());
        for r in &runs {
            rho.add_scaled(&r.rho, 1.0 / n_traj as f64)?;
        }
        let ns: Vec<f64> = runs.iter().map(|r| r.rho.mean_n()).collect();
        let nn: Vec<f64> = runs.iter().map(|r| factorial_moment(&r.rho)).collect();
        let mean_n = rho.mean_n();
        let herald = rho.annihilation_conjugate().normalized()?;
        let herald_mean_n = herald.mean_n();
        Ok(SteadyEnsemble {
            stderr_mean_n: standard_error(&ns),
            herald_stderr_mean_n: jackknife_ratio_se(&nn, &ns),
            runs,
            rho,
            mean_n,
            herald,
            herald_mean_n,
        })
    }
}

/// `⟨n(n-1)⟩`.
fn factorial_moment(rho: &FieldDensityMatrix) -> f64 {
    rho.populations().iter().enumerate().map(|(n, p)| (n * n.saturating_sub(1)) as f64 * p).sum()
}

/// Standard error of the mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Jackknife standard error of `Σ num / Σ den`.
pub fn jackknife_ratio_se(num: &[f64], den: &[f64]) -> f64 {
    let n = num.len();
    if n < 2 {
        return f64::NAN;
    }
    let (sn, sd): (f64, f64) = (num.iter().sum(), den.iter().sum());
    let leave: Vec<f64> = (0..n).map(|i| (sn - num[i]) / (sd - den[i])).collect();
    let m = leave.iter().sum::<f64>() / n as f64;
    let var = leave.iter().map(|x| (x - m).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    var.sqrt()
}
