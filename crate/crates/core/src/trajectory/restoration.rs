use std::sync::Arc;

use nalgebra::SymmetricEigen;
use rand::Rng;

use super::config::SimConfig;
use super::engine::{quantum_rng, schedule_rng, Trajectory};
use super::ensemble::{par_map_indexed, trajectory_seed};
use super::schedule::Schedule;
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, FieldState};
use crate::FieldDensityMatrix;

/// Zero-temperature amplitude damping for time `t`:
/// `ρ_mn(t) = Σ_k √(C(m+k,k) C(n+k,k)) e^{-κt(m+n)/2} (1-e^{-κt})^k ρ_{m+k,n+k}`.
pub fn damp_field(rho: &FieldDensityMatrix, kappa: f64, t: f64) -> FieldDensityMatrix {
    let d = rho.dim();
    let keep = (-kappa * t).exp();
    let lose = -(-kappa * t).exp_m1();
    // ln C(m+k, k)
    let mut ln_fact = vec![0.0f64; 2 * d + 1];
    for i in 1..ln_fact.len() {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let ln_binom = |m: usize, k: usize| ln_fact[m + k] - ln_fact[m] - ln_fact[k];
    let mut out = DensityMatrix::zeros(d);
    for m in 0..d {
        for n in 0..d {
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            let base = keep.powf((m + n) as f64 / 2.0);
            for k in 0..d - m.max(n) {
                let w = if k == 0 {
                    1.0
                } else if lose == 0.0 {
                    break;
                } else {
                    (0.5 * (ln_binom(m, k) + ln_binom(n, k)) + k as f64 * lose.ln()).exp()
                };
                acc += rho.get(m + k, n + k) * w;
            }
            out.set(m, n, acc * base);
        }
    }
    out
}

/// Evolution of a post-click field state.
///
/// With the interaction off the cavity only decays (atom injection stopped)
/// and the result is exact. With it on, trajectories start from eigenvectors
/// of `post_click` drawn by weight, with an empty cavity and fresh Poisson
/// injection from `t = 0`; the returned states are ensemble averages.
pub fn run_restoration(
    config: &SimConfig,
    post_click: &FieldDensityMatrix,
    interaction_on: bool,
    times: &[f64],
    n_traj: usize,
    jobs: Option<usize>,
) -> Result<Vec<(f64, FieldDensityMatrix)>> {
    config.validate()?;
    let tr = post_click.trace_re();
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("post-click state has trace {tr}")));
    }
    if !interaction_on {
        return Ok(times.iter().map(|&t| (t, damp_field(post_click, config.kappa, t))).collect());
    }
    let cutoff = config.cutoff()?;
    if post_click.dim() != cutoff.dim() {
        return Err(Error::DimensionMismatch { expected: cutoff.dim(), got: post_click.dim() });
    }
    if n_traj == 0 {
        return Err(Error::InvalidParameter("need at least one trajectory".into()));
    }
    let eig = SymmetricEigen::new(post_click.to_nalgebra());
    let weights: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let cfg = Arc::new(config.clone());
    let per_traj = par_map_indexed(n_traj, jobs, |i| {
        let seed = trajectory_seed(config.seed, i as u64);
        let mut pick = quantum_rng(seed ^ 0x5EED);
        let mut u = pick.random::<f64>() * total;
        let mut k = 0;
        while k + 1 < weights.len() && u >= weights[k] {
            u -= weights[k];
            k += 1;
        }
        let amps: Vec<_> = eig.eigenvectors.column(k).iter().copied().collect();
        let field = FieldState::from_amplitudes(amps)?;
        let schedule = Arc::new(Schedule::generate(config, horizon, &mut schedule_rng(seed)));
        let mut traj = Trajectory::new(cfg.clone(), schedule, &field, seed)?;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            traj.advance_to(t)?;
            out.push(traj.reduced_field()?);
        }
        Ok(out)
    })?;
    let mut result = Vec::with_capacity(times.len());
    for (j, &t) in times.iter().enumerate() {
        let mut acc = DensityMatrix::zeros(cutoff.dim());
        for traj in &per_traj {
            acc.add_scaled(&traj[j], 1.0 / n_traj as f64)?;
        }
        result.push((t, acc));
    }
    Ok(result)
}

/// Forked post-click branches of one steady-state trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchGroup {
    /// Sum of the reduced states at the branch points (unweighted).
    pub pre_click_sum: FieldDensityMatrix,
    pub branches: usize,
    /// Sum of conditioning weights `⟨n⟩` before each click.
    pub weight_sum: f64,
    /// `Σ_b w_b ρ_b(t_j)` for each offset `t_j` after the click.
    pub weighted: Vec<FieldDensityMatrix>,
}

/// Post-click evolution with the atom-field interaction on, conditioned on a
/// click in the steady state.
///
/// Each of `n_main` trajectories is burnt in, then forks `branches_per_main`
/// copies spaced by `spacing`; every copy gets a forced click followed by
/// the full dynamics. Weighting each branch by `⟨n⟩` before its click turns
/// the forced click into conditioning on a click at that time.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedRestoration {
    pub offsets: Vec<f64>,
    pub groups: Vec<BranchGroup>,
}

impl HeraldedRestoration {
    pub fn run(
        config: &SimConfig,
        n_main: usize,
        branches_per_main: usize,
        spacing: f64,
        offsets: &[f64],
        jobs: Option<usize>,
    ) -> Result<Self> {
        config.validate()?;
        if n_main == 0 || branches_per_main == 0 {
            return Err(Error::InvalidParameter("need at least one branch".into()));
        }
        let cutoff = config.cutoff()?;
        let burn_in = config.default_burn_in()?;
        let last = offsets.iter().copied().fold(0.0, f64::max);
        let horizon = burn_in + spacing * branches_per_main as f64 + last;
        let cfg = Arc::new(config.clone());
        let groups = par_map_indexed(n_main, jobs, |i| {
            let seed = trajectory_seed(config.seed, i as u64);
            let schedule = Arc::new(Schedule::generate(config, horizon, &mut schedule_rng(seed)));
            let mut main = Trajectory::new(cfg.clone(), schedule, &FieldState::vacuum(cutoff), seed)?;
            let mut group = BranchGroup {
                pre_click_sum: DensityMatrix::zeros(cutoff.dim()),
                branches: 0,
                weight_sum: 0.0,
                weighted: vec![DensityMatrix::zeros(cutoff.dim()); offsets.len()],
            };
            for b in 0..branches_per_main {
                let t0 = burn_in + spacing * b as f64;
                main.advance_to(t0)?;
                group.pre_click_sum.add_scaled(&main.reduced_field()?, 1.0)?;
                group.branches += 1;
                let mut branch = main.fork(trajectory_seed(seed, b as u64 + 1));
                let Some(w) = branch.force_click()? else {
                    continue;
                };
                group.weight_sum += w;
                for (j, &dt) in offsets.iter().enumerate() {
                    branch.advance_to(t0 + dt)?;
                    group.weighted[j].add_scaled(&branch.reduced_field()?, w)?;
                }
            }
            Ok(group)
        })?;
        Ok(Self { offsets: offsets.to_vec(), groups })
    }

    /// Stationary state averaged over the branch points.
    pub fn pre_click(&self) -> Result<FieldDensityMatrix> {
        let n: usize = self.groups.iter().map(|g| g.branches).sum();
        let mut acc = DensityMatrix::zeros(self.groups[0].pre_click_sum.dim());
        for g in &self.groups {
            acc.add_scaled(&g.pre_click_sum, 1.0 / n as f64)?;
        }
        Ok(acc)
    }

    /// Conditioned post-click state at each offset.
    pub fn post_click(&self) -> Result<Vec<FieldDensityMatrix>> {
        let w: f64 = self.groups.iter().map(|g| g.weight_sum).sum();
        if !(w > 0.0) {
            return Err(Error::EmptyHeralds);
        }
        (0..self.offsets.len())
            .map(|j| {
                let mut acc = DensityMatrix::zeros(self.groups[0].weighted[j].dim());
                for g in &self.groups {
                    acc.add_scaled(&g.weighted[j], 1.0 / w)?;
                }
                Ok(acc)
            })
            .collect()
    }

    /// Jackknife (over main trajectories) standard error of the weighted
    /// expectation `f(ρ(t_j))` for a linear functional `f`.
    pub fn stderr<F: Fn(&FieldDensityMatrix) -> f64>(&self, j: usize, f: F) -> f64 {
        let num: Vec<f64> = self.groups.iter().map(|g| f(&g.weighted[j])).collect();
        let den: Vec<f64> = self.groups.iter().map(|g| g.weight_sum).collect();
        super::ensemble::jackknife_ratio_se(&num, &den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::FockCutoff;

    #[test]
    fn damping_of_fock_state() {
        let c = FockCutoff::new(6).unwrap();
        let rho = FieldState::<f64>::fock(3, c).unwrap().to_density();
        let kt: f64 = 0.4;
        let out = damp_field(&rho, 1.0, kt);
        let p = (-kt).exp();
        // binomial thinning of 3 photons
        let expect = [(1.0 - p).powi(3), 3.0 * p * (1.0 - p).powi(2), 3.0 * p * p * (1.0 - p), p.powi(3)];
        for (n, e) in expect.iter().enumerate() {
            assert!((out.get(n, n).re - e).abs() < 1e-14);
        }
        assert!((out.trace_re() - 1.0).abs() < 1e-14);
        assert_eq!(damp_field(&rho, 1.0, 0.0), rho);
    }

    #[test]
    fn damping_scales_mean_n() {
        let c = FockCutoff::new(40).unwrap();
        let spec = crate::refstates::SqueezeSpec::new(0.7).unwrap();
        let s = crate::refstates::squeezed_fock_one(spec, c).unwrap();
        let rho = s.to_density();
        let out = damp_field(&rho, 0.3, 2.0);
        assert!((out.mean_n() - rho.mean_n() * (-0.6f64).exp()).abs() < 1e-12);
    }
}
