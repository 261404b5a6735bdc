use std::io::Write;

use serde::Serialize;

use super::fidelity::analyze_state;
use crate::error::Result;
use crate::refstates::observables;
use crate::trajectory::{steady_state_ensemble, trajectory_seed, SimConfig, SteadyEnsemble};

pub const SWEEP_CSV_HEADER: &str =
    "beta_sq,kappa_tau_c,mean_n,r_fit,f_spcs,f_sqspcs,best_alpha,best_r,n_traj,stderr_mean_n";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub n_traj: usize,
    pub jobs: Option<usize>,
    /// Burn-in before sampling, in units of τ_c.
    pub burn_in_tau_c: f64,
    /// Sampling span after burn-in, in units of τ_c.
    pub steady_span_tau_c: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { n_traj: 200, jobs: None, burn_in_tau_c: 10.0, steady_span_tau_c: 10.0 }
    }
}

/// One analysed sweep point. `mean_n`, the fidelities and the best cat
/// refer to the heralded (post-click) state; `r_fit` to the steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta_sq: f64,
    pub kappa_tau_c: f64,
    pub mean_n: f64,
    pub r_fit: f64,
    pub f_spcs: f64,
    pub f_sqspcs: f64,
    pub best_alpha: f64,
    pub best_r: f64,
    pub n_traj: usize,
    pub stderr_mean_n: f64,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{},{:.10e}",
            self.beta_sq,
            self.kappa_tau_c,
            self.mean_n,
            self.r_fit,
            self.f_spcs,
            self.f_sqspcs,
            self.best_alpha,
            self.best_r,
            self.n_traj,
            self.stderr_mean_n
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub beta_sq: f64,
    pub kappa_tau_c: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

/// Config for one sweep point: the template with `β²` replaced, `κ` set
/// from `κτ_c`, and burn-in/duration rescaled to the point's `τ_c`.
pub fn sweep_point_config(
    template: &SimConfig,
    beta_sq: f64,
    kappa_tau_c: f64,
    index: usize,
    opts: &SweepOptions,
) -> Result<SimConfig> {
    let mut cfg = template.clone();
    cfg.beta_sq = beta_sq;
    let tau_c = cfg.characteristic_time()?;
    cfg.kappa = kappa_tau_c / tau_c;
    cfg.burn_in = Some(opts.burn_in_tau_c * tau_c);
    cfg.sample_interval = None;
    cfg.duration = (opts.burn_in_tau_c + opts.steady_span_tau_c) * tau_c;
    cfg.seed = trajectory_seed(template.seed, index as u64);
    cfg.validate()?;
    Ok(cfg)
}

/// Steady-state squeeze parameter implied by the minimum quadrature variance.
pub fn fitted_squeeze_r(ens: &SteadyEnsemble) -> Result<f64> {
    let obs = observables(&ens.rho)?;
    Ok(-0.5 * (4.0 * obs.var_x1.min(obs.var_x2)).ln())
}

fn analyse_point(cfg: &SimConfig, kappa_tau_c: f64, opts: &SweepOptions) -> Result<SweepRow> {
    let ens = steady_state_ensemble(cfg, opts.n_traj, opts.jobs)?;
    let report = analyze_state(&ens.herald)?;
    Ok(SweepRow {
        beta_sq: cfg.beta_sq,
        kappa_tau_c,
        mean_n: ens.herald_mean_n,
        r_fit: fitted_squeeze_r(&ens)?,
        f_spcs: report.f_spcs,
        f_sqspcs: report.f_sqspcs,
        best_alpha: report.sqspcs.abs_alpha,
        best_r: report.sqspcs.squeeze_r,
        n_traj: opts.n_traj,
        stderr_mean_n: ens.herald_stderr_mean_n,
    })
}

/// Steady-state and herald analysis over the `β² × κτ_c` grid, in row-major
/// order (`β²` outer). Failing points are recorded and skipped.
pub fn sweep_series(template: &SimConfig, beta_sqs: &[f64], kappa_tau_cs: &[f64], opts: &SweepOptions) -> SweepResult {
    let mut out = SweepResult::default();
    let mut index = 0;
    for &b in beta_sqs {
        for &k in kappa_tau_cs {
            let res = sweep_point_config(template, b, k, index, opts).and_then(|cfg| analyse_point(&cfg, k, opts));
            match res {
                Ok(row) => out.rows.push(row),
                Err(e) => out.failures.push(SweepFailure { beta_sq: b, kappa_tau_c: k, error: e.to_string() }),
            }
            index += 1;
        }
    }
    out
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let row = SweepRow {
            beta_sq: 0.3,
            kappa_tau_c: 0.01,
            mean_n: 2.0,
            r_fit: 0.4,
            f_spcs: 0.9,
            f_sqspcs: 0.95,
            best_alpha: 0.5,
            best_r: 0.4,
            n_traj: 10,
            stderr_mean_n: 0.1,
        };
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_CSV_HEADER);
        assert_eq!(lines[1].split(',').count(), 10);
        assert!(lines[1].starts_with("0.3,0.01,"));
    }

    #[test]
    fn invalid_points_are_recorded() {
        let template = SimConfig::from_ratios(1.0, 0.1, 0.01, 0.3, 2.0).unwrap();
        let opts = SweepOptions { n_traj: 1, jobs: Some(1), burn_in_tau_c: 0.1, steady_span_tau_c: 0.1 };
        let res = sweep_series(&template, &[0.6], &[0.01], &opts);
        assert!(res.rows.is_empty());
        assert_eq!(res.failures.len(), 1);
    }
}
