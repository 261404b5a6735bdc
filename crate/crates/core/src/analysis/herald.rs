use crate::error::{Error, Result};
use crate::hilbert::DensityMatrix;
use crate::trajectory::TrajectoryOutput;

/// Which clicks count as heralds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeraldFilter {
    /// Every cavity emission.
    #[default]
    All,
    /// Only emissions registered by the detector (efficiency η).
    Detected,
}

/// Average post-click field state. Each herald contributes its state at the
/// click plus any sampled states in `(t_click, t_click + window]`, averaged
/// per herald first so every click carries equal weight.
pub fn herald_aggregate(
    outputs: &[TrajectoryOutput],
    window: f64,
    filter: HeraldFilter,
) -> Result<DensityMatrix<f64>> {
    let mut acc: Option<DensityMatrix<f64>> = None;
    let mut count = 0usize;
    for out in outputs {
        if let Some((sum, k)) = herald_sum(out, window, filter)? {
            match acc.as_mut() {
                Some(a) => a.add_scaled(&sum, 1.0)?,
                None => acc = Some(sum),
            }
            count += k;
        }
    }
    match acc {
        Some(a) => Ok(a.scaled(1.0 / count as f64)),
        None => Err(Error::EmptyHeralds),
    }
}

/// Sum of the per-herald window averages of one trajectory and their count;
/// `None` when it has no qualifying herald.
pub fn herald_sum(
    out: &TrajectoryOutput,
    window: f64,
    filter: HeraldFilter,
) -> Result<Option<(DensityMatrix<f64>, usize)>> {
    let mut acc: Option<DensityMatrix<f64>> = None;
    let mut count = 0usize;
    for h in &out.heralds {
        if filter == HeraldFilter::Detected && !h.detected {
            continue;
        }
        let mut local = h.rho.clone();
        let mut k = 1usize;
        for (s, rho) in out.samples.iter().zip(&out.sample_states) {
            if s.t > h.time && s.t <= h.time + window {
                local.add_scaled(rho, 1.0)?;
                k += 1;
            }
        }
        let local = local.scaled(1.0 / k as f64);
        match acc.as_mut() {
            Some(a) => a.add_scaled(&local, 1.0)?,
            None => acc = Some(local),
        }
        count += 1;
    }
    Ok(acc.map(|a| (a, count)))
}
