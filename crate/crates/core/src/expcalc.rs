//! Cavity-QED parameters from experimental knobs, and the suggested
//! experimental sets for ¹⁷⁴Yb.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::refstates::SqueezeSpec;
use crate::trajectory::{InjectionMode, SimConfig};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// ¹S₀-³P₁ of ¹⁷⁴Yb.
pub const YB_WAVELENGTH: f64 = 555.6e-9;
pub const YB_GAMMA: f64 = 2.0 * PI * 183e3;
pub const MIRROR_RADIUS: f64 = 10e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentalParams {
    pub finesse: f64,
    /// m
    pub cavity_length: f64,
    /// m
    pub mirror_radius: f64,
    /// m/s
    pub velocity: f64,
    /// m
    pub wavelength: f64,
    /// Free-space energy decay rate, rad/s.
    pub atomic_gamma: f64,
    pub mean_atoms: f64,
    pub beta_sq: f64,
    /// Top-hat transit time is `transit_factor · w₀ / v`; `√π` matches the
    /// area of the Gaussian mode profile.
    pub transit_factor: f64,
}

impl ExperimentalParams {
    /// Yb geometry with the given finesse, atom number, velocity and `β²`.
    pub fn ytterbium(finesse: f64, mean_atoms: f64, cavity_length: f64, velocity: f64, beta_sq: f64) -> Self {
        Self {
            finesse,
            cavity_length,
            mirror_radius: MIRROR_RADIUS,
            velocity,
            wavelength: YB_WAVELENGTH,
            atomic_gamma: YB_GAMMA,
            mean_atoms,
            beta_sq,
            transit_factor: PI.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("finesse", self.finesse),
            ("cavity_length", self.cavity_length),
            ("mirror_radius", self.mirror_radius),
            ("velocity", self.velocity),
            ("wavelength", self.wavelength),
            ("atomic_gamma", self.atomic_gamma),
            ("mean_atoms", self.mean_atoms),
            ("transit_factor", self.transit_factor),
        ];
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cavity_length >= 2.0 * self.mirror_radius {
            return Err(Error::UnstableResonator { length: self.cavity_length, radius: self.mirror_radius });
        }
        SqueezeSpec::from_beta_sq(self.beta_sq)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedCavity {
    /// m
    pub waist: f64,
    /// m³
    pub mode_volume: f64,
    /// rad/s
    pub g: f64,
    /// 1/s
    pub kappa: f64,
    /// s
    pub t_int: f64,
    pub g_t_int: f64,
    /// s
    pub tau_c: f64,
    pub kappa_tau_c: f64,
}

/// Symmetric two-mirror cavity: `w₀² = (λ/2π)√(L(2R-L))`,
/// `V = (π/4) w₀² L`, `g = √(3cγλ²/(8πV))`, `κ = 2π (c/2L)/F`,
/// `t_int = √π w₀/v` and `1/τ_c = e^{-2r} ⟨N⟩ g² t_int`.
pub fn derive_cavity(p: &ExperimentalParams) -> Result<DerivedCavity> {
    p.validate()?;
    let (l, rad, lambda) = (p.cavity_length, p.mirror_radius, p.wavelength);
    let waist = ((lambda / (2.0 * PI)) * (l * (2.0 * rad - l)).sqrt()).sqrt();
    let mode_volume = PI / 4.0 * waist * waist * l;
    let g = (3.0 * SPEED_OF_LIGHT * p.atomic_gamma * lambda * lambda / (8.0 * PI * mode_volume)).sqrt();
    let fsr = SPEED_OF_LIGHT / (2.0 * l);
    let kappa = 2.0 * PI * fsr / p.finesse;
    let t_int = p.transit_factor * waist / p.velocity;
    let r = SqueezeSpec::from_beta_sq(p.beta_sq)?.r();
    let tau_c = 1.0 / ((-2.0 * r).exp() * p.mean_atoms * g * g * t_int);
    Ok(DerivedCavity { waist, mode_volume, g, kappa, t_int, g_t_int: g * t_int, tau_c, kappa_tau_c: kappa * tau_c })
}

/// Simulation config for the derived parameters (duration and seed left for
/// the caller).
pub fn to_sim_config(p: &ExperimentalParams, eta: f64) -> Result<SimConfig> {
    let d = derive_cavity(p)?;
    let mut cfg = SimConfig::from_ratios(d.t_int, d.g_t_int, d.kappa_tau_c, p.beta_sq, p.mean_atoms)?;
    cfg.eta = eta;
    cfg.injection_mode = InjectionMode::Poisson;
    Ok(cfg)
}

/// Parameter sets sharing `F·⟨N⟩` (hence `κτ_c`), obtained by trading
/// factors of two between finesse and atom number; keeps `⟨N⟩ ≥ 1`.
pub fn equivalent_configs(p: &ExperimentalParams) -> Vec<ExperimentalParams> {
    (-8i32..=8)
        .filter_map(|k| {
            let s = 2f64.powi(k);
            let q = ExperimentalParams { finesse: p.finesse * s, mean_atoms: p.mean_atoms / s, ..*p };
            (q.mean_atoms >= 1.0).then_some(q)
        })
        .collect()
}

/// Reported simulation results for one detection efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportedCat {
    pub eta: f64,
    pub mean_n: f64,
    pub f_spcs: f64,
    pub f_sqspcs: f64,
}

/// One column of the suggested-parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Set {
    pub set: usize,
    pub finesse: f64,
    pub mean_atoms: f64,
    pub cavity_length: f64,
    pub velocity: f64,
    pub beta_sq: f64,
    pub g_t_int: f64,
    pub kappa_tau_c: f64,
    pub half_efficiency: ReportedCat,
    pub unit_efficiency: ReportedCat,
}

impl Table1Set {
    pub fn params(&self) -> ExperimentalParams {
        ExperimentalParams::ytterbium(self.finesse, self.mean_atoms, self.cavity_length, self.velocity, self.beta_sq)
    }
}

const fn set(
    set: usize,
    finesse_million: f64,
    beta_sq: f64,
    kappa_tau_c: f64,
    half: [f64; 3],
    unit: [f64; 3],
) -> Table1Set {
    Table1Set {
        set,
        finesse: finesse_million * 1e6,
        mean_atoms: 8.0,
        cavity_length: 5e-3,
        velocity: 400.0,
        beta_sq,
        g_t_int: 0.25,
        kappa_tau_c,
        half_efficiency: ReportedCat { eta: 0.5, mean_n: half[0], f_spcs: half[1], f_sqspcs: half[2] },
        unit_efficiency: ReportedCat { eta: 1.0, mean_n: unit[0], f_spcs: unit[1], f_sqspcs: unit[2] },
    }
}

pub const TABLE1: [Table1Set; 6] = [
    set(1, 1.0, 0.34, 0.15, [1.73, 0.84, 0.85], [1.72, 0.93, 0.94]),
    set(2, 2.0, 0.37, 0.096, [2.31, 0.84, 0.87], [2.25, 0.92, 0.95]),
    set(3, 4.0, 0.39, 0.056, [2.83, 0.85, 0.89], [2.74, 0.91, 0.96]),
    set(4, 8.0, 0.40, 0.033, [3.47, 0.84, 0.91], [3.38, 0.89, 0.96]),
    set(5, 16.0, 0.41, 0.018, [3.86, 0.84, 0.93], [3.79, 0.87, 0.96]),
    set(6, 64.0, 0.47, 0.012, [10.79, 0.59, 0.86], [10.27, 0.64, 0.92]),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Row {
    pub listed: Table1Set,
    pub derived: DerivedCavity,
}

impl Table1Row {
    pub fn g_t_int_rel_err(&self) -> f64 {
        self.derived.g_t_int / self.listed.g_t_int - 1.0
    }

    pub fn kappa_tau_c_rel_err(&self) -> f64 {
        self.derived.kappa_tau_c / self.listed.kappa_tau_c - 1.0
    }
}

pub fn table1_comparison() -> Result<Vec<Table1Row>> {
    TABLE1.iter().map(|s| Ok(Table1Row { listed: *s, derived: derive_cavity(&s.params())? })).collect()
}

pub const TABLE1_CSV_HEADER: &str = "set,finesse,mean_atoms,beta_sq,g_t_int_listed,g_t_int_derived,g_t_int_rel_err,\
kappa_tau_c_listed,kappa_tau_c_derived,kappa_tau_c_rel_err,waist_m,g_rad_per_s,kappa_per_s,t_int_s,tau_c_s";

pub fn write_table1_csv<W: Write>(mut w: W, rows: &[Table1Row]) -> std::io::Result<()> {
    writeln!(w, "{TABLE1_CSV_HEADER}")?;
    for r in rows {
        let (s, d) = (&r.listed, &r.derived);
        writeln!(
            w,
            "{},{:e},{},{},{},{:.6},{:.6},{},{:.6},{:.6},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            s.set,
            s.finesse,
            s.mean_atoms,
            s.beta_sq,
            s.g_t_int,
            d.g_t_int,
            r.g_t_int_rel_err(),
            s.kappa_tau_c,
            d.kappa_tau_c,
            r.kappa_tau_c_rel_err(),
            d.waist,
            d.g,
            d.kappa,
            d.t_int,
            d.tau_c
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_one_intermediates() {
        let d = derive_cavity(&TABLE1[0].params()).unwrap();
        assert!((d.waist - 27.67e-6).abs() < 0.01e-6, "{}", d.waist);
        assert!((d.g / 2.055e6 - 1.0).abs() < 2e-3, "{}", d.g);
        assert!((d.g_t_int - 0.252).abs() < 2e-3);
        assert!((d.g_t_int - 0.25).abs() < 0.025);
    }

    #[test]
    fn set_five_kappa_tau_c() {
        let d = derive_cavity(&TABLE1[4].params()).unwrap();
        assert!((d.kappa_tau_c / 0.018 - 1.0).abs() < 0.2, "{}", d.kappa_tau_c);
    }

    #[test]
    fn doubling_finesse_halves_kappa() {
        let p = TABLE1[2].params();
        let q = ExperimentalParams { finesse: 2.0 * p.finesse, ..p };
        let (a, b) = (derive_cavity(&p).unwrap(), derive_cavity(&q).unwrap());
        assert!((a.kappa / b.kappa - 2.0).abs() < 1e-12);
        assert!((a.kappa_tau_c / b.kappa_tau_c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equivalent_sets_share_kappa_tau_c() {
        let p = TABLE1[4].params();
        let eq = equivalent_configs(&p);
        assert!(eq.iter().any(|q| (q.finesse - 1e6).abs() < 1e-6 && (q.mean_atoms - 128.0).abs() < 1e-12));
        let base = derive_cavity(&p).unwrap();
        for q in &eq {
            let d = derive_cavity(q).unwrap();
            assert!((d.kappa_tau_c - base.kappa_tau_c).abs() <= 1e-12 * base.kappa_tau_c);
            assert_eq!((d.g, d.t_int, q.beta_sq), (base.g, base.t_int, p.beta_sq));
        }
    }

    #[test]
    fn unstable_resonator_rejected() {
        let p = ExperimentalParams { cavity_length: 25e-3, ..TABLE1[0].params() };
        assert!(matches!(derive_cavity(&p), Err(Error::UnstableResonator { .. })));
    }

    #[test]
    fn csv_has_six_rows() {
        let rows = table1_comparison().unwrap();
        let mut buf = Vec::new();
        write_table1_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 15);
    }
}
