use crate::error::{Error, Result};
use crate::hilbert::{FockCutoff, MemoryBudget};
use crate::refstates::{cutoff_for_subtracted_squeezed_vacuum, SqueezeSpec};

/// How atoms are injected into the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InjectionMode {
    /// Single atoms at Poisson times, rate `⟨N⟩ / t_int`.
    Poisson,
    /// Opposite-phase pairs entering together; pair rate `⟨N⟩ / (2 t_int)`.
    PairedSimultaneous,
    /// Pairs whose second atom enters `stagger` seconds after the first.
    PairedStaggered { stagger: f64 },
}

impl InjectionMode {
    pub fn label(&self) -> &'static str {
        match self {
            InjectionMode::Poisson => "poisson",
            InjectionMode::PairedSimultaneous => "paired_simultaneous",
            InjectionMode::PairedStaggered { .. } => "paired_staggered",
        }
    }
}

/// Physical and numerical parameters of one simulation. Rates are in SI
/// (`g` in rad/s, `kappa` in 1/s), times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub g: f64,
    pub kappa: f64,
    pub t_int: f64,
    pub beta_sq: f64,
    pub mean_atoms: f64,
    pub eta: f64,
    /// Fock cutoff; `None` picks one from the stationary squeezing.
    pub n_max: Option<usize>,
    /// Longest single propagation step; jump times are resolved to `dt/100`.
    /// `None` means `t_int / 10`.
    pub dt: Option<f64>,
    pub seed: u64,
    pub duration: f64,
    pub injection_mode: InjectionMode,
    /// Hard cap on the in-cavity atom count; `None` uses the default.
    pub register_cap: Option<usize>,
    pub memory_budget: MemoryBudget,
    /// Time before steady-state sampling starts; `None` means `10 τ_c`.
    pub burn_in: Option<f64>,
    /// Steady-state sample spacing; `None` means `τ_c / 20`.
    pub sample_interval: Option<f64>,
}

impl SimConfig {
    /// Builds a config from the dimensionless knobs `g t_int` and `κ τ_c`.
    pub fn from_ratios(t_int: f64, g_t_int: f64, kappa_tau_c: f64, beta_sq: f64, mean_atoms: f64) -> Result<Self> {
        let g = g_t_int / t_int;
        let mut cfg = Self {
            g,
            kappa: 0.0,
            t_int,
            beta_sq,
            mean_atoms,
            eta: 1.0,
            n_max: None,
            dt: None,
            seed: 0,
            duration: 0.0,
            injection_mode: InjectionMode::Poisson,
            register_cap: None,
            memory_budget: MemoryBudget::default(),
            burn_in: None,
            sample_interval: None,
        };
        cfg.kappa = kappa_tau_c / cfg.characteristic_time()?;
        cfg.duration = cfg.default_burn_in()? + 20.0 * cfg.characteristic_time()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        positive("t_int", self.t_int)?;
        positive("mean_atoms", self.mean_atoms)?;
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::InvalidParameter(format!("g must be finite and >= 0, got {}", self.g)));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be finite and >= 0, got {}", self.kappa)));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidParameter(format!("duration must be finite and >= 0, got {}", self.duration)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if !(self.beta_sq >= 0.0) {
            return Err(Error::InvalidParameter(format!("beta_sq must be >= 0, got {}", self.beta_sq)));
        }
        if self.beta_sq >= 0.5 {
            return Err(Error::NoSteadyState(self.beta_sq));
        }
        if let Some(dt) = self.dt {
            positive("dt", dt)?;
        }
        if let Some(n) = self.n_max {
            FockCutoff::new(n)?;
        }
        if let Some(b) = self.burn_in {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::InvalidParameter(format!("burn_in must be finite and >= 0, got {b}")));
            }
        }
        if let Some(s) = self.sample_interval {
            positive("sample_interval", s)?;
        }
        if let InjectionMode::PairedStaggered { stagger } = self.injection_mode {
            if !(stagger >= 0.0 && stagger <= self.t_int) {
                return Err(Error::InvalidParameter(format!("stagger must lie in [0, t_int], got {stagger}")));
            }
        }
        if self.register_cap == Some(0) {
            return Err(Error::InvalidParameter("register_cap must be >= 1".into()));
        }
        Ok(())
    }

    /// Stationary squeezing parameter `r = atanh(β²/(1-β²))`.
    pub fn squeeze(&self) -> Result<SqueezeSpec<f64>> {
        SqueezeSpec::from_beta_sq(self.beta_sq)
    }

    pub fn squeeze_r(&self) -> Result<f64> {
        Ok(self.squeeze()?.r())
    }

    pub fn characteristic_time(&self) -> Result<f64> {
        characteristic_time(self)
    }

    pub fn g_t_int(&self) -> f64 {
        self.g * self.t_int
    }

    pub fn kappa_tau_c(&self) -> Result<f64> {
        Ok(self.kappa * self.characteristic_time()?)
    }

    pub fn cutoff(&self) -> Result<FockCutoff> {
        match self.n_max {
            Some(n) => FockCutoff::new(n),
            None => Ok(default_cutoff(self.squeeze_r()?)),
        }
    }

    pub fn step(&self) -> f64 {
        self.dt.unwrap_or(self.t_int / 10.0)
    }

    pub fn default_burn_in(&self) -> Result<f64> {
        Ok(self.burn_in.unwrap_or(10.0 * self.characteristic_time()?))
    }

    pub fn default_sample_interval(&self) -> Result<f64> {
        Ok(self.sample_interval.unwrap_or(self.characteristic_time()? / 20.0))
    }

    pub fn register_cap(&self) -> usize {
        self.register_cap.unwrap_or_else(|| default_register_cap(self.mean_atoms))
    }
}

/// `τ_c = 1 / (e^{-2r} ⟨N⟩ g² t_int)`.
pub fn characteristic_time(config: &SimConfig) -> Result<f64> {
    let r = config.squeeze_r()?;
    let rate = (-2.0 * r).exp() * config.mean_atoms * config.g * config.g * config.t_int;
    if !(rate > 0.0) {
        return Err(Error::InvalidParameter("characteristic time is infinite (g, t_int or <N> is zero)".into()));
    }
    Ok(1.0 / rate)
}

/// The same time written per opposite-phase pair:
/// `1/τ_c = 2 e^{-2|ξ|} N_pairs g² t_int` with `N_pairs = ⟨N⟩/2`.
pub fn characteristic_time_pairwise(config: &SimConfig) -> Result<f64> {
    let r = config.squeeze_r()?;
    let pairs = config.mean_atoms / 2.0;
    let rate = 2.0 * (-2.0 * r).exp() * pairs * config.g * config.g * config.t_int;
    if !(rate > 0.0) {
        return Err(Error::InvalidParameter("characteristic time is infinite (g, t_int or <N> is zero)".into()));
    }
    Ok(1.0 / rate)
}

/// Cutoff leaving less than 1e-8 of `a²Ŝ(r)|0⟩` (normalized) in or above the
/// top two levels, so that states one jump beyond a herald stay resolved.
pub fn default_cutoff(r: f64) -> FockCutoff {
    let c = cutoff_for_subtracted_squeezed_vacuum(r, 2, 1e-8);
    FockCutoff::new(c.n_max().max(8)).expect("n_max >= 8")
}

/// `max(⟨N⟩ + 6√⟨N⟩, k)` where `k` is the smallest count with
/// `P(Poisson(⟨N⟩) + 1 > k) < 1e-10`.
pub fn default_register_cap(mean_atoms: f64) -> usize {
    let formula = (mean_atoms + 6.0 * mean_atoms.sqrt()).floor() as usize;
    let mut p = (-mean_atoms).exp();
    let mut cdf = p;
    let mut k = 0usize;
    while 1.0 - cdf >= 1e-10 && k < 10_000 {
        k += 1;
        p *= mean_atoms / k as f64;
        cdf += p;
    }
    formula.max(k + 1).max(1)
}
