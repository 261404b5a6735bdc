//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per
//! criterion; pass criterion numbers as arguments to run a subset.
//!
//! The process exits 0 once every selected criterion has been evaluated.
//! Set `ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use catqts::analysis::{
    analyze_state, herald_sum, sweep_series, HeraldFilter, RestorationSeries, SweepOptions, SweepRow,
};
use catqts::expcalc::table1_comparison;
use catqts::hilbert::DensityMatrix;
use catqts::oracle::{relaxation_check, stagger_check, unraveling_check};
use catqts::refstates::{
    cutoff_for_subtracted_squeezed_vacuum, observables_pure, squeezed_vacuum, subtract_photon, wigner, wigner_at,
    SqueezeSpec, WignerGridSpec,
};
use catqts::trajectory::{
    par_map_indexed, run_trajectory_sampled, steady_sample_times, steady_state_ensemble, trajectory_seed,
    HeraldedRestoration, SimConfig, SteadyEnsemble, SteadyRun,
};
use catqts::Complex64;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// `Ŝ(r)|1⟩` in the Fock basis from its closed form,
/// `sech^{3/2} r · (tanh r / 2)^k √((2k+1)!) / k!` on `|2k+1⟩`.
fn squeezed_one_closed_form(r: f64, dim: usize) -> Vec<Complex64> {
    let t = r.tanh();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for k in 0.. {
        let n = 2 * k + 1;
        if n >= dim {
            break;
        }
        let mut ln = -1.5 * r.cosh().ln() + k as f64 * (0.5 * t).ln();
        ln += 0.5 * (1..=n).map(|j| (j as f64).ln()).sum::<f64>();
        ln -= (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
        out[n] = Complex64::new(ln.exp(), 0.0);
    }
    out
}

fn criterion_1() -> Verdict {
    let mut worst = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for r in [0.25, 0.5, 1.0, 1.75] {
        let cutoff = cutoff_for_subtracted_squeezed_vacuum(r, 2, 1e-16);
        let sq = squeezed_vacuum(SqueezeSpec::new(r).unwrap(), cutoff).unwrap();
        let obs = observables_pure(&sq).unwrap();
        worst.0 = worst.0.max((obs.mean_n - r.sinh().powi(2)).abs());
        worst.1 = worst.1.max((obs.var_x2 - (-2.0 * r).exp() / 4.0).abs());
        let sub = subtract_photon(&sq).unwrap();
        let reference = squeezed_one_closed_form(r, cutoff.dim());
        let overlap: Complex64 = sub.amplitudes().iter().zip(&reference).map(|(a, b)| b.conj() * a).sum();
        worst.2 = worst.2.max(1.0 - overlap.norm_sqr());
        let n_sub = observables_pure(&sub).unwrap().mean_n;
        worst.3 = worst.3.max((n_sub - (1.0 + 3.0 * r.sinh().powi(2))).abs());
    }
    verdict(
        worst.0 <= 1e-9 && worst.1 <= 1e-9 && worst.2 < 1e-10 && worst.3 <= 1e-8,
        format!(
            "max |Δ<n>| {:.1e}, |ΔVar X2| {:.1e}, 1-F {:.1e}, subtracted |Δ<n>| {:.1e}",
            worst.0, worst.1, worst.2, worst.3
        ),
    )
}

fn criterion_2() -> Verdict {
    let mut worst = 0.0f64;
    for r in [0.1, 0.25, 0.5, 1.0, 1.26, 1.75] {
        let cutoff = cutoff_for_subtracted_squeezed_vacuum(r, 2, 1e-14);
        let sub = subtract_photon(&squeezed_vacuum(SqueezeSpec::new(r).unwrap(), cutoff).unwrap()).unwrap();
        let w = wigner_at(&sub.to_density(), 0.0, 0.0);
        worst = worst.max((w + 2.0 / PI).abs());
    }
    // heralded state at the squeezing of a β² = 0.46 pump
    let spec = SqueezeSpec::from_beta_sq(0.46).unwrap();
    let cutoff = cutoff_for_subtracted_squeezed_vacuum(spec.r(), 2, 1e-14);
    let sub = subtract_photon(&squeezed_vacuum(spec, cutoff).unwrap()).unwrap().to_density();
    let mut grid_spec = WignerGridSpec::auto(sub.mean_n());
    grid_spec.resolution = 81;
    let grid = wigner(&sub, &grid_spec);
    verdict(
        worst <= 1e-6 && grid.min_value() < 0.0,
        format!("max |W(0,0) + 2/π| {worst:.1e}; grid min W {:.4}, integral {:.4}", grid.min_value(), grid.integral()),
    )
}

fn criterion_3() -> Verdict {
    let mut cfg = SimConfig::from_ratios(1.0, 0.1, 0.01, 0.3, 2.0).unwrap();
    cfg.n_max = Some(16);
    let tau_c = cfg.characteristic_time().unwrap();
    let checkpoints: Vec<f64> = (1..=5).map(|k| k as f64 * 0.2 * tau_c).collect();
    let rep = unraveling_check(&cfg, &checkpoints, 500, 2024, None).unwrap();
    verdict(
        rep.pass,
        format!(
            "{} trajectories, {} elements, {} beyond 3 se (expected {:.2}), max |z| {:.2} (allowed {:.2}), unresolved {:.1e}",
            rep.n_traj,
            rep.compared,
            rep.beyond_3se,
            rep.expected_beyond_3se,
            rep.max_abs_z,
            rep.max_z_allowed,
            rep.max_unresolved_diff
        ),
    )
}

fn criterion_4() -> Verdict {
    let a = relaxation_check(0.5, 1.0).unwrap();
    let b = relaxation_check((3.0f64 / 7.0).atanh(), 125.0).unwrap();
    verdict(
        a.pass && b.pass,
        format!(
            "r=0.5: margin {:.1e}, rate·τ_c {:.5}; r=0.458: margin {:.1e}, rate·τ_c {:.5}",
            a.min_margin, a.fitted_rate_tau_c, b.min_margin, b.fitted_rate_tau_c
        ),
    )
}

fn criterion_5() -> Verdict {
    let rep = stagger_check(0.3, &[0.025, 0.05, 0.1]).unwrap();
    verdict(
        (rep.exponent - 3.0).abs() <= 0.3,
        format!(
            "exponent {:.3}; differences {:?}",
            rep.exponent,
            rep.max_diff.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion_6() -> Verdict {
    // sinh² r = 1
    let beta_sq = std::f64::consts::SQRT_2 - 1.0;
    let mut cfg = SimConfig::from_ratios(1.0, 0.1, 0.025, beta_sq, 2.0).unwrap();
    cfg.seed = 606;
    let tau_c = cfg.characteristic_time().unwrap();
    let offsets: Vec<f64> = (0..=16).map(|k| k as f64 * 0.125 * tau_c).collect();
    let run = HeraldedRestoration::run(&cfg, 32, 10, tau_c, &offsets, None).unwrap();
    let clicks: usize = run.groups.iter().map(|g| g.branches).sum();
    let s = RestorationSeries::analyse(&run, cfg.kappa, tau_c).unwrap();
    let recovered = s
        .rows
        .iter()
        .filter(|r| r.t_over_tau_c > 0.0 && r.t_over_tau_c <= 1.5 + 1e-9)
        .any(|r| r.f_sqvs_on >= 0.95 * s.pre_f_sqvs);
    let at_15 = s.rows.iter().find(|r| (r.t_over_tau_c - 1.5).abs() < 1e-9).unwrap();
    let faster = s.rows.iter().filter(|r| r.t_over_tau_c > 0.0).all(|r| r.f_sqspcs_on < r.f_sqspcs_off);
    verdict(
        clicks >= 300 && recovered && faster,
        format!(
            "{clicks} clicks; pre F_SqVS {:.3}; F_SqVS(1.5 τ_c) {:.3} vs needed {:.3}; 95% recovery at {}; cat decays faster with interaction: {faster}",
            s.pre_f_sqvs,
            at_15.f_sqvs_on,
            0.95 * s.pre_f_sqvs,
            s.recovery_time(0.95).map_or("none by 2 τ_c".into(), |t| format!("{t:.3} τ_c"))
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut template = SimConfig::from_ratios(1.0, 0.1, 0.01, 0.3, 2.0).unwrap();
    template.seed = 707;
    let betas = [0.1, 0.2, 0.3, 0.4];
    let kts = [0.0025, 0.025];
    let opts = SweepOptions { n_traj: 200, jobs: None, burn_in_tau_c: 6.0, steady_span_tau_c: 4.0 };
    let res = sweep_series(&template, &betas, &kts, &opts);
    if !res.failures.is_empty() {
        return verdict(false, format!("failed points: {:?}", res.failures));
    }
    let row = |b: f64, k: f64| -> &SweepRow { res.rows.iter().find(|r| r.beta_sq == b && r.kappa_tau_c == k).unwrap() };
    let sigma = |a: &SweepRow, b: &SweepRow| (a.stderr_mean_n.powi(2) + b.stderr_mean_n.powi(2)).sqrt();
    let mut problems = Vec::new();
    for &k in &kts {
        for w in betas.windows(2) {
            let (lo, hi) = (row(w[0], k), row(w[1], k));
            if hi.mean_n - lo.mean_n < -3.0 * sigma(lo, hi) {
                problems.push(format!("<n> not increasing β² {}→{} at κτ_c {k}", w[0], w[1]));
            }
        }
    }
    for &b in &betas {
        let (small, large) = (row(b, kts[0]), row(b, kts[1]));
        if small.mean_n - large.mean_n < -3.0 * sigma(small, large) {
            problems.push(format!("<n> not decreasing in κτ_c at β² {b}"));
        }
    }
    for r in &res.rows {
        if r.f_sqspcs < r.f_spcs {
            problems.push(format!("f_sqspcs < f_spcs at β² {} κτ_c {}", r.beta_sq, r.kappa_tau_c));
        }
        if r.kappa_tau_c == kts[0] && r.f_sqspcs <= 0.95 {
            problems.push(format!("f_sqspcs {:.4} at β² {}", r.f_sqspcs, r.beta_sq));
        }
    }
    let table: Vec<String> = res
        .rows
        .iter()
        .map(|r| format!("({}, {}): <n> {:.3}±{:.4} F {:.3}/{:.3}", r.beta_sq, r.kappa_tau_c, r.mean_n, r.stderr_mean_n, r.f_spcs, r.f_sqspcs))
        .collect();
    let detail = if problems.is_empty() { table.join("; ") } else { format!("{}; {}", problems.join("; "), table.join("; ")) };
    verdict(problems.is_empty(), detail)
}

/// Steady ensemble with detected-click heralds recorded after burn-in.
fn recorded_ensemble(cfg: &SimConfig, n: usize) -> (SteadyEnsemble, DensityMatrix<f64>, usize) {
    let times = steady_sample_times(cfg).unwrap();
    let burn_in = times[0];
    let window = cfg.characteristic_time().unwrap() / 50.0;
    let runs = par_map_indexed(n, None, |i| {
        let mut out = run_trajectory_sampled(cfg, trajectory_seed(cfg.seed, i as u64), None, &times)?;
        out.heralds.retain(|h| h.time >= burn_in);
        Ok((SteadyRun::from_output(&out, burn_in)?, herald_sum(&out, window, HeraldFilter::Detected)?))
    })
    .unwrap();
    let mut acc = DensityMatrix::zeros(cfg.cutoff().unwrap().dim());
    let mut count = 0;
    let mut steady = Vec::with_capacity(n);
    for (run, h) in runs {
        if let Some((sum, k)) = h {
            acc.add_scaled(&sum, 1.0).unwrap();
            count += k;
        }
        steady.push(run);
    }
    (SteadyEnsemble::from_runs(steady).unwrap(), acc.scaled(1.0 / count.max(1) as f64), count)
}

fn criterion_8() -> Verdict {
    // first suggested set at half the atom flux: same g t_int, κτ_c and β²
    let set = table1_comparison().unwrap()[0].listed;
    let reported = set.half_efficiency;
    let mut cfg = SimConfig::from_ratios(1.0, set.g_t_int, set.kappa_tau_c, set.beta_sq, 4.0).unwrap();
    cfg.eta = reported.eta;
    cfg.seed = 808;
    let tau_c = cfg.characteristic_time().unwrap();
    cfg.burn_in = Some(6.0 * tau_c);
    cfg.duration = 26.0 * tau_c;
    let (ens, heralded, count) = recorded_ensemble(&cfg, 100);
    if count == 0 {
        return verdict(false, "no detected heralds".into());
    }
    let rep = analyze_state(&heralded).unwrap();
    let stationary = analyze_state(&ens.herald).unwrap();
    let n_ok = (rep.mean_n - reported.mean_n).abs() <= 0.25 * reported.mean_n;
    let f_ok = (rep.f_sqspcs - reported.f_sqspcs).abs() <= 0.05;

    // co-scaling: t_int halved with g t_int and κτ_c held
    let steady_n = |t_int: f64, seed: u64| {
        let mut c = SimConfig::from_ratios(t_int, set.g_t_int, set.kappa_tau_c, set.beta_sq, 4.0).unwrap();
        c.seed = seed;
        let tau = c.characteristic_time().unwrap();
        c.burn_in = Some(6.0 * tau);
        c.duration = 16.0 * tau;
        let e = steady_state_ensemble(&c, 40, None).unwrap();
        (e.mean_n, e.stderr_mean_n)
    };
    let (na, sa) = steady_n(1.0, 81);
    let (nb, sb) = steady_n(0.5, 82);
    let invariant = (na - nb).abs() <= 3.0 * (sa * sa + sb * sb).sqrt();
    verdict(
        n_ok && f_ok && invariant,
        format!(
            "<N>=4 substitute, {count} detected heralds: <n> {:.3} (target {} ± 25%), F_Sq-SpCS {:.3} (target {} ± 0.05), F_SpCS {:.3}; stationary a·ρ·a† estimator <n> {:.3} F_Sq-SpCS {:.3}; co-scaled steady <n> {:.4}±{:.4} vs {:.4}±{:.4}",
            rep.mean_n,
            reported.mean_n,
            rep.f_sqspcs,
            reported.f_sqspcs,
            rep.f_spcs,
            stationary.mean_n,
            stationary.f_sqspcs,
            na,
            sa,
            nb,
            sb
        ),
    )
}

fn criterion_9() -> Verdict {
    let rows = table1_comparison().unwrap();
    let pass = rows.len() == 6
        && rows.iter().all(|r| r.g_t_int_rel_err().abs() <= 0.10 && r.kappa_tau_c_rel_err().abs() <= 0.20);
    let detail = rows
        .iter()
        .map(|r| {
            format!(
                "set {}: g t {:.3} ({:+.1}%), κτ_c {:.4} ({:+.1}%)",
                r.listed.set,
                r.derived.g_t_int,
                100.0 * r.g_t_int_rel_err(),
                r.derived.kappa_tau_c,
                100.0 * r.kappa_tau_c_rel_err()
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    verdict(pass, detail)
}

fn run_cli(dir: &Path, jobs: usize, out: &str) -> bool {
    Command::new(env!("CARGO_BIN_EXE_catqts"))
        .args(["herald", "--config", "run.toml", "--trajectories", "6", "--jobs", &jobs.to_string(), "--out", out])
        .current_dir(dir)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_10() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let config = "\
[sim]
g_t_int = 0.1
t_int_s = 1e-6
kappa_tau_c = 0.5
beta_sq = 0.3
mean_atoms = 2
n_max = 16
seed = 1010
burn_in_s = 2e-5
duration_s = 1.5e-4
";
    std::fs::write(tmp.path().join("run.toml"), config).unwrap();
    let ok = run_cli(tmp.path(), 1, "a") && run_cli(tmp.path(), 1, "b") && run_cli(tmp.path(), 8, "c");
    if !ok {
        return verdict(false, "CLI run failed".into());
    }
    let a = data_files(&tmp.path().join("a"));
    let logs = a.iter().filter(|(n, _)| n.ends_with(".jsonl")).count();
    let events: usize = a.iter().filter(|(n, _)| n.ends_with(".jsonl")).map(|(_, b)| b.iter().filter(|&&c| c == b'\n').count()).sum();
    let repeat = a == data_files(&tmp.path().join("b"));
    let parallel = a == data_files(&tmp.path().join("c"));
    verdict(
        logs == 6 && events > 0 && repeat && parallel,
        format!("{logs} event logs, {events} events, {} files; repeat identical {repeat}; --jobs 1 vs 8 identical {parallel}", a.len()),
    )
}

type Criterion = (u32, &'static str, fn() -> Verdict);

const CRITERIA: [Criterion; 10] = [
    (1, "analytic squeezed-state identities", criterion_1),
    (2, "Wigner negativity of the subtracted state", criterion_2),
    (3, "trajectory ensemble matches master equation", criterion_3),
    (4, "squeezed-frame relaxation rate", criterion_4),
    (5, "staggered vs simultaneous pair scaling", criterion_5),
    (6, "post-click restoration and decoherence", criterion_6),
    (7, "photon number and fidelity trends", criterion_7),
    (8, "suggested parameter set 1 spot check", criterion_8),
    (9, "cavity calculator vs suggested sets", criterion_9),
    (10, "determinism across runs and worker counts", criterion_10),
];

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (id, name, f) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} {name} [{:.1} s]: {}", start.elapsed().as_secs_f64(), v.detail);
        if !v.pass {
            failed.push(id);
        }
    }
    println!("acceptance: {}/{ran} passed{}", ran - failed.len(), if failed.is_empty() { String::new() } else { format!(", failed {failed:?}") });
    if !failed.is_empty() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
