use std::sync::Arc;

use catqts::hilbert::{FieldState, FockCutoff};
use catqts::refstates::{squeezed_fock_one, SqueezeSpec};
use catqts::trajectory::{
    run_trajectory, run_trajectory_sampled, steady_state_ensemble, EventKind, InjectionMode, Schedule, SimConfig,
    Trajectory,
};
use catqts::Error;

fn small_config() -> SimConfig {
    let mut c = SimConfig::from_ratios(1.0, 0.1, 0.05, 0.3, 2.0).unwrap();
    c.n_max = Some(12);
    c.seed = 11;
    c.duration = 60.0;
    c.burn_in = Some(10.0);
    c.sample_interval = Some(5.0);
    c
}

/// Kolmogorov survival function `P(K > x)`.
fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let k = k as f64;
        s += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * x * x).exp();
    }
    s.clamp(0.0, 1.0)
}

#[test]
fn free_decay_of_one_photon_is_exponential() {
    let kappa = 0.7;
    let mut cfg = SimConfig::from_ratios(1.0, 0.1, 0.01, 0.1, 1.0).unwrap();
    cfg.g = 0.0;
    cfg.kappa = kappa;
    cfg.n_max = Some(4);
    cfg.dt = Some(0.05);
    let cfg = Arc::new(cfg);
    let schedule = Arc::new(Schedule::empty());
    let one = FieldState::fock(1, FockCutoff::new(4).unwrap()).unwrap();
    let n = 10_000;
    let mut times = Vec::with_capacity(n);
    for i in 0..n {
        let mut t = Trajectory::new(cfg.clone(), schedule.clone(), &one, i as u64).unwrap().with_event_log();
        t.advance_to(40.0).unwrap();
        let jumps: Vec<f64> = t
            .events()
            .iter()
            .filter(|e| matches!(e.kind, EventKind::PhotonJump { .. }))
            .map(|e| e.time)
            .collect();
        assert_eq!(jumps.len(), 1, "trajectory {i}");
        times.push(jumps[0]);
    }
    times.sort_by(f64::total_cmp);
    let d = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = 1.0 - (-kappa * t).exp();
            (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    let p = kolmogorov_sf(d * (n as f64).sqrt());
    assert!(p > 0.01, "KS D = {d}, p = {p}");
}

#[test]
fn identical_seeds_give_identical_logs() {
    let cfg = small_config();
    let a = run_trajectory(&cfg).unwrap();
    let b = run_trajectory(&cfg).unwrap();
    let la: Vec<String> = a.events.iter().map(|e| e.to_json_line()).collect();
    let lb: Vec<String> = b.events.iter().map(|e| e.to_json_line()).collect();
    assert_eq!(la, lb);
    let mut other = cfg.clone();
    other.seed = 12;
    let c = run_trajectory(&other).unwrap();
    assert_ne!(la, c.events.iter().map(|e| e.to_json_line()).collect::<Vec<_>>());
}

#[test]
fn event_log_invariants() {
    let cfg = small_config();
    let out = run_trajectory(&cfg).unwrap();
    let mut last_phase = None;
    let mut entries = std::collections::HashMap::new();
    for w in out.events.windows(2) {
        assert!(w[0].time <= w[1].time);
    }
    for e in &out.events {
        match e.kind {
            EventKind::AtomEnter { id, phase } => {
                assert_ne!(Some(phase), last_phase);
                last_phase = Some(phase);
                entries.insert(id, e.time);
            }
            EventKind::AtomExit { id, .. } => {
                let t0 = entries.remove(&id).expect("exit after entry");
                assert!((e.time - t0 - cfg.t_int).abs() < 1e-9);
            }
            _ => {}
        }
    }
    for (_, t0) in entries {
        assert!(t0 + cfg.t_int > cfg.duration);
    }
    assert_eq!(out.samples.len(), 11);
}

#[test]
fn heralds_are_subtracted_pre_jump_states() {
    let mut cfg = small_config();
    cfg.g = 0.3;
    cfg.n_max = Some(20);
    cfg.kappa = 0.05;
    cfg.duration = 400.0;
    let out = run_trajectory(&cfg).unwrap();
    assert!(!out.heralds.is_empty());
    for h in &out.heralds {
        assert!((h.rho.trace_re() - 1.0).abs() < 1e-9);
    }
    for h in &out.heralds {
        let expect = h.pre_rho.annihilation_conjugate().normalized().unwrap();
        assert!(expect.max_abs_diff(&h.rho).unwrap() < 1e-9);
        assert!((h.pre_mean_n - h.pre_rho.mean_n()).abs() < 1e-9);
    }
}

#[test]
fn zero_efficiency_flags_no_detection() {
    let mut cfg = small_config();
    cfg.g = 0.3;
    cfg.n_max = Some(20);
    cfg.kappa = 0.05;
    cfg.eta = 0.0;
    cfg.duration = 400.0;
    let out = run_trajectory(&cfg).unwrap();
    assert!(!out.heralds.is_empty());
    assert!(out.heralds.iter().all(|h| !h.detected));
}

#[test]
fn register_cap_aborts() {
    let mut cfg = small_config();
    cfg.register_cap = Some(1);
    cfg.mean_atoms = 4.0;
    assert!(matches!(run_trajectory(&cfg), Err(Error::RegisterCap { .. })));
}

#[test]
fn tiny_cutoff_reports_tail_mass() {
    let mut cfg = small_config();
    cfg.n_max = Some(2);
    cfg.g = 1.0;
    assert!(matches!(run_trajectory(&cfg), Err(Error::TailMass { .. })));
}

#[test]
fn paired_modes_run() {
    for mode in [InjectionMode::PairedSimultaneous, InjectionMode::PairedStaggered { stagger: 0.5 }] {
        let mut cfg = small_config();
        cfg.injection_mode = mode;
        let out = run_trajectory(&cfg).unwrap();
        assert!(out.events.iter().any(|e| matches!(e.kind, EventKind::AtomExit { .. })));
    }
}

#[test]
fn field_starts_from_given_state_and_decays_without_atoms() {
    let mut cfg = small_config();
    cfg.n_max = Some(30);
    cfg.kappa = 0.2;
    let c = cfg.cutoff().unwrap();
    let s = squeezed_fock_one(SqueezeSpec::new(0.5).unwrap(), c).unwrap();
    let times = [1.0, 2.0];
    let n = 400;
    let mut mean = [0.0; 2];
    for i in 0..n {
        let mut t = Trajectory::new(Arc::new(cfg.clone()), Arc::new(Schedule::empty()), &s, i).unwrap();
        for (j, &tt) in times.iter().enumerate() {
            t.advance_to(tt).unwrap();
            mean[j] += t.reduced_field().unwrap().mean_n() / n as f64;
        }
    }
    for (j, &tt) in times.iter().enumerate() {
        let expect = s.mean_n() * (-cfg.kappa * tt).exp();
        assert!((mean[j] - expect).abs() < 0.15 * expect, "{} vs {}", mean[j], expect);
    }
}

#[test]
fn steady_ensemble_statistics() {
    let cfg = small_config();
    let e = steady_state_ensemble(&cfg, 8, Some(2)).unwrap();
    assert_eq!(e.runs.len(), 8);
    assert!((e.rho.trace_re() - 1.0).abs() < 1e-9);
    assert!((e.herald.trace_re() - 1.0).abs() < 1e-9);
    assert!(e.stderr_mean_n.is_finite());
    let again = steady_state_ensemble(&cfg, 8, Some(1)).unwrap();
    assert_eq!(e, again);
}

#[test]
fn fixed_schedule_is_honoured() {
    let cfg = small_config();
    let sched = Arc::new(Schedule::from_entry_times(&[1.0, 1.5, 30.0], cfg.t_int));
    let out = run_trajectory_sampled(&cfg, 5, Some(sched), &[]).unwrap();
    let enters = out.events.iter().filter(|e| matches!(e.kind, EventKind::AtomEnter { .. })).count();
    assert_eq!(enters, 3);
}

