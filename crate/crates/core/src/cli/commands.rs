use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use super::config::RunConfig;
use super::manifest::{unix_now, RunManifest};
use super::{Command, CommonArgs};
use crate::analysis::{
    analyze_state, fitted_squeeze_r, herald_sum, sweep_series, write_sweep_csv, FidelityReport, HeraldFilter,
    RestorationSeries, SweepOptions,
};
use crate::error::{Error, Result};
use crate::expcalc::{table1_comparison, write_table1_csv};
use crate::hilbert::DensityMatrix;
use crate::oracle::{relaxation_check, stagger_check, unraveling_check};
use crate::refstates::{observables, wigner, WignerGridSpec};
use crate::trajectory::{
    par_map_indexed, run_trajectory_sampled, sqvs_reference, steady_sample_times, trajectory_seed, write_event_log,
    write_samples_csv, HeraldedRestoration, SimConfig, SteadyEnsemble, SteadyRun,
};
use crate::FieldDensityMatrix;

/// Result of a successful subcommand.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    /// Human-readable summary lines for stdout.
    pub report: Vec<String>,
    /// Data files written, relative to the output directory.
    pub outputs: Vec<String>,
    /// `Some(false)` when `oracle-check` found a failing invariant.
    pub oracle_pass: Option<bool>,
}

struct Ctx {
    cfg: RunConfig,
    text: String,
    jobs: Option<usize>,
    out: PathBuf,
    outputs: Vec<String>,
}

impl Ctx {
    fn new(args: &CommonArgs, needs_config: bool) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(p) => RunConfig::load(p)?,
            None if needs_config => {
                return Err(Error::Config { line: 0, msg: "this subcommand needs --config <path>".into() })
            }
            None => RunConfig::default(),
        };
        if let Some(s) = args.seed {
            cfg.sim.seed = Some(s);
        }
        if let Some(n) = args.trajectories {
            cfg.run.trajectories = Some(n);
        }
        let jobs = args.jobs.or(cfg.run.jobs);
        if jobs == Some(0) {
            return Err(Error::Config { line: 0, msg: "--jobs must be at least 1".into() });
        }
        // worker count never changes the data, so it stays out of the hash
        let mut hashed = cfg.clone();
        hashed.run.jobs = None;
        let text = hashed.serialize();
        std::fs::create_dir_all(&args.out)?;
        Ok(Self { cfg, text, jobs, out: args.out.clone(), outputs: Vec::new() })
    }

    fn trajectories(&self, default: usize) -> Result<usize> {
        match self.cfg.run.trajectories.unwrap_or(default) {
            0 => Err(Error::Config { line: 0, msg: "trajectories must be at least 1".into() }),
            n => Ok(n),
        }
    }

    fn create(&mut self, rel: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        self.outputs.push(rel.to_string());
        Ok(BufWriter::new(File::create(path)?))
    }
}

pub fn execute(cmd: &Command) -> Result<Outcome> {
    let started = unix_now();
    let args = cmd.args();
    let mut ctx = Ctx::new(args, !matches!(cmd, Command::Table1(_)))?;
    let (report, seeds, oracle_pass) = match cmd {
        Command::Steady(_) => cmd_steady(&mut ctx)?,
        Command::Herald(_) => cmd_herald(&mut ctx)?,
        Command::Dynamics(_) => cmd_dynamics(&mut ctx)?,
        Command::Sweep(_) => cmd_sweep(&mut ctx)?,
        Command::Wigner(_) => cmd_wigner(&mut ctx)?,
        Command::Table1(_) => cmd_table1(&mut ctx)?,
        Command::OracleCheck(_) => cmd_oracle_check(&mut ctx)?,
    };
    let mut manifest = RunManifest::new(cmd.name(), &ctx.text, ctx.cfg.sim.seed.unwrap_or(0), started);
    manifest.trajectory_seeds = seeds;
    ctx.outputs.sort();
    manifest.outputs = ctx.outputs.clone();
    manifest.finished_unix_s = unix_now();
    manifest.write(&ctx.out)?;
    Ok(Outcome { report, outputs: ctx.outputs, oracle_pass })
}

type CmdResult = Result<(Vec<String>, Vec<u64>, Option<bool>)>;

fn write_rho(ctx: &mut Ctx, rel: &str, rho: &FieldDensityMatrix) -> Result<()> {
    let mut w = ctx.create(rel)?;
    writeln!(w, "m,n,re,im")?;
    for m in 0..rho.dim() {
        for n in 0..rho.dim() {
            let z = rho.get(m, n);
            writeln!(w, "{m},{n},{:.15e},{:.15e}", z.re, z.im)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One heralded click as listed in `heralds.csv`.
struct HeraldRow {
    traj: usize,
    time: f64,
    detected: bool,
    pre_mean_n: f64,
    mean_n: f64,
}

struct Recorded {
    run: SteadyRun,
    herald: Option<(FieldDensityMatrix, usize)>,
    heralds: Vec<HeraldRow>,
}

/// Steady-state trajectories with event logs and sample series written per
/// trajectory under `trajectories/`. Clicks before burn-in are discarded.
fn run_recorded(ctx: &mut Ctx, sim: &SimConfig, n: usize) -> Result<(Vec<Recorded>, Vec<u64>)> {
    let times = steady_sample_times(sim)?;
    if times.is_empty() {
        return Err(Error::Config { line: 0, msg: "duration_s ends before burn-in; no steady samples".into() });
    }
    let burn_in = times[0];
    let window = ctx.cfg.herald.window_s.unwrap_or(sim.characteristic_time()? / 50.0);
    let filter = if ctx.cfg.herald.detected_only.unwrap_or(false) { HeraldFilter::Detected } else { HeraldFilter::All };
    let dir = ctx.out.join("trajectories");
    std::fs::create_dir_all(&dir)?;
    let seeds: Vec<u64> = (0..n).map(|i| trajectory_seed(sim.seed, i as u64)).collect();
    let runs = par_map_indexed(n, ctx.jobs, |i| {
        let mut out = run_trajectory_sampled(sim, seeds[i], None, &times)?;
        let mut w = BufWriter::new(File::create(dir.join(format!("events_{i:05}.jsonl")))?);
        write_event_log(&out.events, &mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join(format!("samples_{i:05}.csv")))?);
        write_samples_csv(&out.samples, &mut w)?;
        w.flush()?;
        out.heralds.retain(|h| h.time >= burn_in);
        let heralds = out
            .heralds
            .iter()
            .filter(|h| filter == HeraldFilter::All || h.detected)
            .map(|h| HeraldRow {
                traj: i,
                time: h.time,
                detected: h.detected,
                pre_mean_n: h.pre_mean_n,
                mean_n: h.rho.mean_n(),
            })
            .collect();
        Ok(Recorded { run: SteadyRun::from_output(&out, burn_in)?, herald: herald_sum(&out, window, filter)?, heralds })
    })?;
    for i in 0..n {
        ctx.outputs.push(format!("trajectories/events_{i:05}.jsonl"));
        ctx.outputs.push(format!("trajectories/samples_{i:05}.csv"));
    }
    Ok((runs, seeds))
}

fn aggregate_heralds(recs: &[Recorded]) -> Result<(FieldDensityMatrix, usize)> {
    let mut acc: Option<DensityMatrix<f64>> = None;
    let mut count = 0;
    for (sum, k) in recs.iter().filter_map(|r| r.herald.as_ref()) {
        match acc.as_mut() {
            Some(a) => a.add_scaled(sum, 1.0)?,
            None => acc = Some(sum.clone()),
        }
        count += k;
    }
    match acc {
        Some(a) => Ok((a.scaled(1.0 / count as f64), count)),
        None => Err(Error::EmptyHeralds),
    }
}

fn cmd_steady(ctx: &mut Ctx) -> CmdResult {
    let sim = ctx.cfg.sim_config()?;
    let n = ctx.trajectories(100)?;
    let (recs, seeds) = run_recorded(ctx, &sim, n)?;
    let jumps: usize = recs.iter().map(|r| r.run.jumps).sum();
    let samples: usize = recs.iter().map(|r| r.run.samples).sum();
    let ens = SteadyEnsemble::from_runs(recs.into_iter().map(|r| r.run).collect())?;
    let obs = observables(&ens.rho)?;
    let reference = sqvs_reference(sim.squeeze_r()?, sim.cutoff()?)?;
    let f_sqvs = ens.rho.expectation_pure(&reference)?;
    let r_fit = fitted_squeeze_r(&ens)?;
    let mut w = ctx.create("steady.csv")?;
    writeln!(
        w,
        "n_traj,samples,jumps,mean_n,stderr_mean_n,var_x1,var_x2,squeezing_db,r_fit,f_sqvs,herald_mean_n,herald_stderr_mean_n"
    )?;
    writeln!(
        w,
        "{n},{samples},{jumps},{:.10e},{:.4e},{:.10e},{:.10e},{:.6e},{:.10e},{:.10e},{:.10e},{:.4e}",
        ens.mean_n,
        ens.stderr_mean_n,
        obs.var_x1,
        obs.var_x2,
        obs.squeezing_db,
        r_fit,
        f_sqvs,
        ens.herald_mean_n,
        ens.herald_stderr_mean_n
    )?;
    w.flush()?;
    drop(w);
    write_rho(ctx, "rho.csv", &ens.rho)?;
    let report = vec![
        format!("trajectories   {n}"),
        format!("<n>            {:.4} ± {:.4}", ens.mean_n, ens.stderr_mean_n),
        format!("squeezing      {:.3} dB (r_fit {:.4}, config r {:.4})", obs.squeezing_db, r_fit, sim.squeeze_r()?),
        format!("F_SqVS         {f_sqvs:.5}"),
    ];
    Ok((report, seeds, None))
}

const HERALD_CSV_HEADER: &str = "estimator,n_heralds,mean_n,f_spcs,f_sqspcs,best_alpha,best_r,squeezing_db";

fn herald_line(label: &str, count: usize, rep: &FidelityReport) -> String {
    format!(
        "{label},{count},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.6e}",
        rep.mean_n, rep.f_spcs, rep.f_sqspcs, rep.sqspcs.abs_alpha, rep.sqspcs.squeeze_r, rep.squeezing_db
    )
}

fn cmd_herald(ctx: &mut Ctx) -> CmdResult {
    let sim = ctx.cfg.sim_config()?;
    let n = ctx.trajectories(100)?;
    let (recs, seeds) = run_recorded(ctx, &sim, n)?;
    let mut w = ctx.create("heralds.csv")?;
    writeln!(w, "traj,t,detected,pre_mean_n,mean_n")?;
    for h in recs.iter().flat_map(|r| &r.heralds) {
        writeln!(w, "{},{:.14e},{},{:.10e},{:.10e}", h.traj, h.time, h.detected, h.pre_mean_n, h.mean_n)?;
    }
    w.flush()?;
    drop(w);
    let recorded = aggregate_heralds(&recs);
    let ens = SteadyEnsemble::from_runs(recs.into_iter().map(|r| r.run).collect())?;
    let stationary = analyze_state(&ens.herald)?;
    let mut lines = vec![HERALD_CSV_HEADER.to_string()];
    let mut report = Vec::new();
    if let Ok((rho, count)) = &recorded {
        let rep = analyze_state(rho)?;
        lines.push(herald_line("recorded", *count, &rep));
        report.push(format!(
            "recorded heralds {count}: <n> {:.4}, F_SpCS {:.4}, F_Sq-SpCS {:.4}",
            rep.mean_n, rep.f_spcs, rep.f_sqspcs
        ));
    }
    lines.push(herald_line("stationary", 0, &stationary));
    report.push(format!(
        "stationary a rho a†: <n> {:.4} ± {:.4}, F_SpCS {:.4}, F_Sq-SpCS {:.4} (|α| {:.3}, r {:.3})",
        stationary.mean_n,
        ens.herald_stderr_mean_n,
        stationary.f_spcs,
        stationary.f_sqspcs,
        stationary.sqspcs.abs_alpha,
        stationary.sqspcs.squeeze_r
    ));
    let mut w = ctx.create("herald.csv")?;
    for l in &lines {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    drop(w);
    let rho = match recorded {
        Ok((rho, _)) => rho,
        Err(_) => ens.herald,
    };
    write_rho(ctx, "herald_rho.csv", &rho)?;
    Ok((report, seeds, None))
}

fn cmd_dynamics(ctx: &mut Ctx) -> CmdResult {
    let sim = ctx.cfg.sim_config()?;
    let n = ctx.trajectories(30)?;
    let d = ctx.cfg.dynamics.clone();
    let tau_c = sim.characteristic_time()?;
    let offsets: Vec<f64> = match d.offsets_tau_c {
        Some(v) => v.iter().map(|x| x * tau_c).collect(),
        None => (0..=16).map(|k| k as f64 * 0.125 * tau_c).collect(),
    };
    if offsets.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::Config { line: 0, msg: "[dynamics] offsets_tau_c must be non-negative".into() });
    }
    let branches = d.branches.unwrap_or(10);
    let spacing = d.branch_spacing_tau_c.unwrap_or(1.0) * tau_c;
    let run = HeraldedRestoration::run(&sim, n, branches, spacing, &offsets, ctx.jobs)?;
    let series = RestorationSeries::analyse(&run, sim.kappa, tau_c)?;
    let mut w = ctx.create("dynamics.csv")?;
    series.write_csv(&mut w)?;
    w.flush()?;
    let seeds = (0..n).map(|i| trajectory_seed(sim.seed, i as u64)).collect();
    let report = vec![
        format!("post-click branches {}", n * branches),
        format!("pre-click <n> {:.4}, F_SqVS {:.4}", series.pre_mean_n, series.pre_f_sqvs),
        format!(
            "Sq-SpCS reference |α| {:.4}, r {:.4}; 95% recovery at {}",
            series.reference_alpha,
            series.reference_r,
            series.recovery_time(0.95).map_or("none sampled".into(), |t| format!("{t:.3} τ_c"))
        ),
    ];
    Ok((report, seeds, None))
}

fn cmd_sweep(ctx: &mut Ctx) -> CmdResult {
    let sim = ctx.cfg.sim_config()?;
    let s = ctx.cfg.sweep.clone();
    let betas = s.beta_sq.unwrap_or_else(|| vec![0.1, 0.2, 0.3, 0.4]);
    let kts = s.kappa_tau_c.unwrap_or_else(|| vec![0.0025, 0.025]);
    let opts = SweepOptions {
        n_traj: ctx.trajectories(200)?,
        jobs: ctx.jobs,
        burn_in_tau_c: s.burn_in_tau_c.unwrap_or(SweepOptions::default().burn_in_tau_c),
        steady_span_tau_c: s.steady_span_tau_c.unwrap_or(SweepOptions::default().steady_span_tau_c),
    };
    let result = sweep_series(&sim, &betas, &kts, &opts);
    let mut w = ctx.create("sweep.csv")?;
    write_sweep_csv(&mut w, &result.rows)?;
    w.flush()?;
    drop(w);
    let mut report: Vec<String> = result.rows.iter().map(|r| r.csv_line()).collect();
    if !result.failures.is_empty() {
        let mut w = ctx.create("sweep_failures.csv")?;
        writeln!(w, "beta_sq,kappa_tau_c,error")?;
        for f in &result.failures {
            writeln!(w, "{},{},\"{}\"", f.beta_sq, f.kappa_tau_c, f.error.replace('"', "'"))?;
            report.push(format!("failed point β²={} κτ_c={}: {}", f.beta_sq, f.kappa_tau_c, f.error));
        }
        w.flush()?;
    }
    let seeds = (0..betas.len() * kts.len()).map(|i| trajectory_seed(sim.seed, i as u64)).collect();
    Ok((report, seeds, None))
}

fn cmd_wigner(ctx: &mut Ctx) -> CmdResult {
    let sim = ctx.cfg.sim_config()?;
    let n = ctx.trajectories(100)?;
    let source = ctx.cfg.wigner.source.clone().unwrap_or_else(|| "herald".into());
    if source != "herald" && source != "steady" {
        return Err(Error::Config { line: 0, msg: format!("[wigner] source must be `herald` or `steady`, got `{source}`") });
    }
    let (recs, seeds) = run_recorded(ctx, &sim, n)?;
    let rho = if source == "herald" {
        aggregate_heralds(&recs)?.0
    } else {
        SteadyEnsemble::from_runs(recs.into_iter().map(|r| r.run).collect())?.rho
    };
    let mut spec = WignerGridSpec::auto(rho.mean_n());
    if let Some(h) = ctx.cfg.wigner.half_width {
        spec.x1_range = (-h, h);
        spec.x2_range = (-h, h);
    }
    if let Some(r) = ctx.cfg.wigner.resolution {
        spec.resolution = r.max(1);
    }
    let grid = wigner(&rho, &spec);
    let mut w = ctx.create("wigner.csv")?;
    grid.write_csv(&mut w)?;
    w.flush()?;
    let report = vec![
        format!("{source} state, <n> {:.4}", rho.mean_n()),
        format!("min W {:.5} (= {:.4}/π), integral {:.5}", grid.min_value(), grid.min_value() * std::f64::consts::PI, grid.integral()),
    ];
    Ok((report, seeds, None))
}

fn cmd_table1(ctx: &mut Ctx) -> CmdResult {
    let rows = table1_comparison()?;
    let mut buf = Vec::new();
    write_table1_csv(&mut buf, &rows)?;
    let mut w = ctx.create("table1.csv")?;
    w.write_all(&buf)?;
    w.flush()?;
    let report = String::from_utf8_lossy(&buf).lines().map(str::to_string).collect();
    Ok((report, Vec::new(), None))
}

fn cmd_oracle_check(ctx: &mut Ctx) -> CmdResult {
    let sim = ctx.cfg.sim_config()?;
    let n = ctx.trajectories(500)?;
    let tau_c = sim.characteristic_time()?;
    let cps: Vec<f64> = ctx
        .cfg
        .oracle
        .checkpoints_tau_c
        .clone()
        .unwrap_or_else(|| vec![0.2, 0.4, 0.6, 0.8, 1.0])
        .iter()
        .map(|x| x * tau_c)
        .collect();
    let unr = unraveling_check(&sim, &cps, n, sim.seed, ctx.jobs)?;
    let rel = relaxation_check(sim.squeeze_r()?, tau_c)?;
    let stg = stagger_check(sim.beta_sq, &[0.025, 0.05, 0.1])?;
    let rows = [
        ("unraveling", "max_abs_z", unr.max_abs_z, unr.max_z_allowed, unr.pass),
        ("unraveling", "beyond_3se", unr.beyond_3se as f64, unr.expected_beyond_3se, unr.pass),
        ("relaxation", "min_margin", rel.min_margin, -0.02, rel.pass),
        ("relaxation", "rate_times_tau_c", rel.fitted_rate_tau_c, 1.0, rel.pass),
        ("stagger", "exponent", stg.exponent, 3.0, stg.pass),
    ];
    let mut w = ctx.create("oracle_check.csv")?;
    writeln!(w, "check,statistic,value,reference,pass")?;
    for (c, s, v, r, p) in rows {
        writeln!(w, "{c},{s},{v:.10e},{r:.10e},{p}")?;
    }
    w.flush()?;
    let verdict = |p: bool| if p { "PASS" } else { "FAIL" };
    let report = vec![
        format!(
            "{} unraveling: {} trajectories, {} elements, {} beyond 3 se (expected {:.2}), max |z| {:.3} (allowed {:.3})",
            verdict(unr.pass),
            n,
            unr.compared,
            unr.beyond_3se,
            unr.expected_beyond_3se,
            unr.max_abs_z,
            unr.max_z_allowed
        ),
        format!(
            "{} relaxation: min margin {:.4}, fitted rate × τ_c {:.5}",
            verdict(rel.pass),
            rel.min_margin,
            rel.fitted_rate_tau_c
        ),
        format!("{} staggering: difference exponent {:.3}", verdict(stg.pass), stg.exponent),
    ];
    let seeds = (0..n).map(|i| trajectory_seed(sim.seed ^ 0x9E37_79B9_7F4A_7C15, i as u64)).collect();
    Ok((report, seeds, Some(unr.pass && rel.pass && stg.pass)))
}
