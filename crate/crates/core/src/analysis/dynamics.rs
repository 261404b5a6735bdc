use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::fidelity::{best_sqspcs_fidelity, fidelity};
use crate::error::Result;
use crate::refstates::{cat_amplitudes, CatParity, CatSpec, SqueezeSpec};
use crate::trajectory::{damp_field, HeraldedRestoration};

pub const DYNAMICS_CSV_HEADER: &str =
    "t_over_tau_c,mean_n_on,stderr_mean_n_on,f_sqvs_on,f_sqspcs_on,mean_n_off,f_sqvs_off,f_sqspcs_off";

/// Post-click observables with the atom-field interaction on and off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicsRow {
    pub t_over_tau_c: f64,
    pub mean_n_on: f64,
    pub stderr_mean_n_on: f64,
    pub f_sqvs_on: f64,
    pub f_sqspcs_on: f64,
    pub mean_n_off: f64,
    pub f_sqvs_off: f64,
    pub f_sqspcs_off: f64,
}

/// Restoration of the squeezed vacuum and decay of the cat after a click.
///
/// `F_SqVS` is taken against the squeezed vacuum with the pre-click `⟨n⟩`;
/// `F_SqSpCS` against one fixed squeezed cat, the best match to the state
/// right after the click. The "off" branch is free cavity decay of that
/// post-click state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestorationSeries {
    pub pre_mean_n: f64,
    pub pre_f_sqvs: f64,
    pub reference_alpha: f64,
    pub reference_r: f64,
    pub rows: Vec<DynamicsRow>,
}

impl RestorationSeries {
    pub fn analyse(run: &HeraldedRestoration, kappa: f64, tau_c: f64) -> Result<Self> {
        let pre = run.pre_click()?;
        let post = run.post_click()?;
        let dim = pre.dim();
        let pre_mean_n = pre.mean_n();
        let sq = SqueezeSpec::from_mean_n(pre_mean_n)?;
        let sqvs = cat_amplitudes(
            &CatSpec { alpha: Complex64::new(0.0, 0.0), parity: CatParity::Even, squeeze_r: sq.r() },
            dim,
        );
        let start = run.offsets.iter().position(|&t| t == 0.0).unwrap_or(0);
        let fit = best_sqspcs_fidelity(&post[start])?;
        let cat = cat_amplitudes(&fit.cat(), dim);
        let rows = run
            .offsets
            .iter()
            .zip(&post)
            .enumerate()
            .map(|(j, (&t, on))| {
                let off = damp_field(&post[start], kappa, t - run.offsets[start]);
                Ok(DynamicsRow {
                    t_over_tau_c: t / tau_c,
                    mean_n_on: on.mean_n(),
                    stderr_mean_n_on: run.stderr(j, |r| r.mean_n()),
                    f_sqvs_on: fidelity(on, &sqvs)?,
                    f_sqspcs_on: fidelity(on, &cat)?,
                    mean_n_off: off.mean_n(),
                    f_sqvs_off: fidelity(&off, &sqvs)?,
                    f_sqspcs_off: fidelity(&off, &cat)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pre_mean_n,
            pre_f_sqvs: fidelity(&pre, &sqvs)?,
            reference_alpha: fit.abs_alpha,
            reference_r: fit.squeeze_r,
            rows,
        })
    }

    /// First sampled time (in τ_c) at which `F_SqVS` regains `fraction` of
    /// its pre-click value.
    pub fn recovery_time(&self, fraction: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.t_over_tau_c > 0.0 && r.f_sqvs_on >= fraction * self.pre_f_sqvs).map(|r| r.t_over_tau_c)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{DYNAMICS_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.6e},{:.10e},{:.4e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                r.t_over_tau_c,
                r.mean_n_on,
                r.stderr_mean_n_on,
                r.f_sqvs_on,
                r.f_sqspcs_on,
                r.mean_n_off,
                r.f_sqvs_off,
                r.f_sqspcs_off
            )?;
        }
        Ok(())
    }
}
