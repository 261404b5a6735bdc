use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{InjectionMode, SimConfig};

/// Physical parameters, SI units.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_rad_per_s: Option<f64>,
    /// Alternative to `g_rad_per_s`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_t_int: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_per_s: Option<f64>,
    /// Alternative to `kappa_per_s`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_tau_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_int_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_atoms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    /// `poisson`, `paired` or `staggered`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injection_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stagger_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_interval_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub register_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_s: Option<f64>,
    /// Count only detected clicks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detected_only: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    /// Times after the click, in units of τ_c.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offsets_tau_c: Option<Vec<f64>>,
    /// Clicks forked per steady trajectory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_spacing_tau_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_sq: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_tau_c: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in_tau_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_span_tau_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSection {
    /// `herald` or `steady`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints_tau_c: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

/// Parsed configuration file: `[section]` headers and `key = value` lines.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "is_default")]
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub herald: HeraldSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub dynamics: DynamicsSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub sweep: SweepSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub wigner: WignerSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub oracle: OracleSection,
    /// Source text, for line numbers in diagnostics.
    #[serde(skip)]
    source: String,
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of the first `key =` assignment, or 0 when absent.
fn line_of_key(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| l.split('=').next().is_some_and(|k| k.trim() == key))
        .map_or(0, |i| i + 1)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map_or(0, |s| line_of_offset(text, s.start)),
            msg: e.message().to_string(),
        })?;
        cfg.source = text.to_string();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { line: 0, msg: format!("cannot read {}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    pub fn serialize(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> Error {
        Error::Config { line: line_of_key(&self.source, key), msg: format!("{key}: {}", msg.into()) }
    }

    fn require(&self, key: &str, v: Option<f64>) -> Result<f64> {
        v.ok_or_else(|| Error::Config { line: 0, msg: format!("[sim] missing required key `{key}`") })
    }

    /// Builds and validates the simulation config.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let s = &self.sim;
        let t_int = self.require("t_int_s", s.t_int_s)?;
        let beta_sq = self.require("beta_sq", s.beta_sq)?;
        let mean_atoms = self.require("mean_atoms", s.mean_atoms)?;
        let g_t_int = match (s.g_rad_per_s, s.g_t_int) {
            (Some(g), None) => g * t_int,
            (None, Some(x)) => x,
            (Some(_), Some(_)) => return Err(self.err("g_t_int", "give either g_rad_per_s or g_t_int, not both")),
            (None, None) => return Err(self.require("g_rad_per_s", None).unwrap_err()),
        };
        let mut cfg = SimConfig::from_ratios(t_int, g_t_int, 0.0, beta_sq, mean_atoms)
            .map_err(|e| self.err("beta_sq", e.to_string()))?;
        let tau_c = cfg.characteristic_time().map_err(|e| self.err("mean_atoms", e.to_string()))?;
        cfg.kappa = match (s.kappa_per_s, s.kappa_tau_c) {
            (Some(k), None) => k,
            (None, Some(x)) => x / tau_c,
            (Some(_), Some(_)) => return Err(self.err("kappa_tau_c", "give either kappa_per_s or kappa_tau_c, not both")),
            (None, None) => return Err(self.require("kappa_per_s", None).unwrap_err()),
        };
        if let Some(e) = s.eta {
            cfg.eta = e;
        }
        cfg.n_max = s.n_max;
        cfg.dt = s.dt_s;
        cfg.seed = s.seed.unwrap_or(0);
        cfg.burn_in = s.burn_in_s;
        cfg.sample_interval = s.sample_interval_s;
        cfg.register_cap = s.register_cap;
        cfg.injection_mode = match s.injection_mode.as_deref().unwrap_or("poisson") {
            "poisson" => InjectionMode::Poisson,
            "paired" => InjectionMode::PairedSimultaneous,
            "staggered" => InjectionMode::PairedStaggered {
                stagger: s.stagger_s.ok_or_else(|| self.err("injection_mode", "staggered mode needs stagger_s"))?,
            },
            other => return Err(self.err("injection_mode", format!("unknown mode `{other}`"))),
        };
        cfg.duration = match s.duration_s {
            Some(d) => d,
            None => cfg.burn_in.unwrap_or(10.0 * tau_c) + 20.0 * tau_c,
        };
        cfg.validate().map_err(|e| {
            let key = match &e {
                Error::NoSteadyState(_) => "beta_sq",
                _ => "",
            };
            Error::Config { line: line_of_key(&self.source, key), msg: e.to_string() }
        })?;
        Ok(cfg)
    }
}
