use std::collections::VecDeque;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::SimConfig;
use super::events::{EventKind, SampleRecord, TrajectoryEvent};
use super::schedule::{open_uniform, Schedule, ScheduledKind};
use crate::error::{Error, Result};
use crate::hilbert::{EffectiveHamiltonian, FieldState, FockCutoff, JointState, LinearAction, Propagator};
use crate::refstates::{observables, squeezed_vacuum, SqueezeSpec};
use crate::FieldDensityMatrix;

/// Largest normalized population allowed in the two top Fock levels.
pub const TAIL_TOL: f64 = 1e-6;

/// Post-click reduced field state.
#[derive(Debug, Clone, PartialEq)]
pub struct Herald {
    pub time: f64,
    pub detected: bool,
    pub forced: bool,
    /// `⟨n⟩` just before the click (the conditioning weight of a forced click).
    pub pre_mean_n: f64,
    /// Reduced state just before the click.
    pub pre_rho: FieldDensityMatrix,
    pub rho: FieldDensityMatrix,
}

/// RNG for the injection schedule of a trajectory seed.
pub fn schedule_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// RNG for jump thresholds, detection flags and atom measurements.
pub fn quantum_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// One quantum trajectory, advanced in time on demand.
///
/// Between events the state evolves under `H_eff = g(aJ₊ + a†J₋) - i(κ/2)a†a`
/// without renormalization; a jump occurs when `‖ψ‖²` falls to a uniform
/// threshold `u`, located by bisection to `dt/100`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    config: Arc<SimConfig>,
    cutoff: FockCutoff,
    schedule: Arc<Schedule>,
    cursor: usize,
    inside: VecDeque<usize>,
    state: JointState<f64>,
    time: f64,
    threshold: f64,
    rng: ChaCha8Rng,
    prop: Propagator<f64>,
    saved: Vec<Complex64>,
    dt: f64,
    cap: usize,
    log: Option<Vec<TrajectoryEvent>>,
    record_heralds: bool,
    heralds: Vec<Herald>,
    jumps: usize,
}

impl Trajectory {
    pub fn new(config: Arc<SimConfig>, schedule: Arc<Schedule>, initial: &FieldState<f64>, seed: u64) -> Result<Self> {
        config.validate()?;
        let cutoff = config.cutoff()?;
        if initial.dim() != cutoff.dim() {
            return Err(Error::DimensionMismatch { expected: cutoff.dim(), got: initial.dim() });
        }
        let mut rng = quantum_rng(seed);
        let threshold = open_uniform(&mut rng);
        let mut state = JointState::from_field(initial);
        state.normalize()?;
        Ok(Self {
            dt: config.step(),
            cap: config.register_cap(),
            config,
            cutoff,
            schedule,
            cursor: 0,
            inside: VecDeque::new(),
            state,
            time: 0.0,
            threshold,
            rng,
            prop: Propagator::new(),
            saved: Vec::new(),
            log: None,
            record_heralds: false,
            heralds: Vec::new(),
            jumps: 0,
        })
    }

    pub fn with_event_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn with_heralds(mut self) -> Self {
        self.record_heralds = true;
        self
    }

    /// Copy continuing from the current state with an independent quantum
    /// RNG (the injection schedule is shared).
    pub fn fork(&self, seed: u64) -> Self {
        let mut f = self.clone();
        f.rng = quantum_rng(seed);
        f.threshold = open_uniform(&mut f.rng) * f.state.norm_sqr();
        f.log = self.log.as_ref().map(|_| Vec::new());
        f.heralds.clear();
        f
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn state(&self) -> &JointState<f64> {
        &self.state
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn jump_count(&self) -> usize {
        self.jumps
    }

    pub fn atoms_inside(&self) -> usize {
        self.inside.len()
    }

    pub fn events(&self) -> &[TrajectoryEvent] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn take_events(&mut self) -> Vec<TrajectoryEvent> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn heralds(&self) -> &[Herald] {
        &self.heralds
    }

    pub fn take_heralds(&mut self) -> Vec<Herald> {
        std::mem::take(&mut self.heralds)
    }

    /// Normalized reduced field state.
    pub fn reduced_field(&self) -> Result<FieldDensityMatrix> {
        self.state.reduced_field()
    }

    fn hamiltonian(&self, atoms: usize) -> EffectiveHamiltonian<f64> {
        EffectiveHamiltonian::new(self.cutoff, atoms, self.config.g, self.config.kappa)
    }

    /// Normalized population of the two highest Fock levels.
    fn tail_mass(&self) -> f64 {
        let block = 1usize << self.state.atom_count();
        let d = self.cutoff.dim();
        let amps = self.state.amplitudes();
        let top: f64 = amps[(d - 2) * block..].iter().map(|z| z.norm_sqr()).sum();
        top / self.state.norm_sqr()
    }

    fn check_tail(&self) -> Result<()> {
        let m = self.tail_mass();
        if m > TAIL_TOL {
            return Err(Error::TailMass { t: self.time, mass: m, tol: TAIL_TOL });
        }
        Ok(())
    }

    fn log_event(&mut self, kind: EventKind) {
        if self.log.is_some() {
            let ev = TrajectoryEvent {
                time: self.time,
                kind,
                mean_n: self.state.mean_n(),
                norm: self.state.norm_sqr().sqrt(),
            };
            if let Some(log) = self.log.as_mut() {
                log.push(ev);
            }
        }
    }

    /// Processes every scheduled event with time `<= t_end` and leaves the
    /// state at `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        while let Some(&ev) = self.schedule.events.get(self.cursor) {
            if ev.time > t_end {
                break;
            }
            self.propagate_to(ev.time)?;
            self.cursor += 1;
            match ev.kind {
                ScheduledKind::Enter => self.enter(ev.atom)?,
                ScheduledKind::Exit => self.exit(ev.atom)?,
            }
        }
        self.propagate_to(t_end)
    }

    fn enter(&mut self, atom: usize) -> Result<()> {
        if self.inside.len() + 1 > self.cap {
            return Err(Error::RegisterCap { count: self.inside.len() + 1, cap: self.cap });
        }
        let rec = self.schedule.atoms[atom];
        self.state.attach_atom(rec.phase, self.config.beta_sq, self.config.memory_budget)?;
        self.inside.push_back(atom);
        self.log_event(EventKind::AtomEnter { id: rec.id, phase: rec.phase });
        Ok(())
    }

    fn exit(&mut self, atom: usize) -> Result<()> {
        let Some(slot) = self.inside.iter().position(|&a| a == atom) else {
            // entered before this trajectory started
            return Ok(());
        };
        let survival = self.state.norm_sqr();
        let draw: f64 = self.rng.random();
        let outcome = self.state.measure_and_remove_atom(slot, draw)?;
        self.inside.remove(slot);
        // conditional on no jump so far, u / ‖ψ‖² is again uniform
        self.threshold /= survival;
        let id = self.schedule.atoms[atom].id;
        self.log_event(EventKind::AtomExit { id, outcome });
        Ok(())
    }

    fn evolve(&mut self, ham: &EffectiveHamiltonian<f64>, h: f64) -> Result<()> {
        if h > 0.0 && !ham.is_zero() {
            self.prop.evolve(ham, self.state.amplitudes_mut(), h)?;
        }
        Ok(())
    }

    fn propagate_to(&mut self, target: f64) -> Result<()> {
        while self.time < target {
            let remaining = target - self.time;
            let h = remaining.min(self.dt);
            let ham = self.hamiltonian(self.state.atom_count());
            self.saved.clear();
            self.saved.extend_from_slice(self.state.amplitudes());
            self.evolve(&ham, h)?;
            if self.state.norm_sqr() > self.threshold {
                self.time = if h == remaining { target } else { self.time + h };
                self.check_tail()?;
                continue;
            }
            let (mut lo, mut hi) = (0.0, h);
            let resolution = self.dt / 100.0;
            while hi - lo > resolution {
                let mid = 0.5 * (lo + hi);
                self.state.amplitudes_mut().copy_from_slice(&self.saved);
                self.evolve(&ham, mid)?;
                if self.state.norm_sqr() <= self.threshold {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            self.state.amplitudes_mut().copy_from_slice(&self.saved);
            self.evolve(&ham, hi)?;
            self.time += hi;
            self.check_tail()?;
            self.click(false)?;
        }
        Ok(())
    }

    /// Applies `a`, renormalizes and redraws the threshold.
    fn click(&mut self, forced: bool) -> Result<Option<f64>> {
        let pre_mean_n = self.state.mean_n();
        if !(pre_mean_n > 0.0) {
            if forced {
                return Ok(None);
            }
            return Err(Error::CorruptState("photon jump from a state without photons".into()));
        }
        let pre_rho = if self.record_heralds { Some(self.state.reduced_field()?) } else { None };
        self.state.apply_annihilation();
        self.state.normalize()?;
        self.threshold = open_uniform(&mut self.rng);
        let detected = if forced { true } else { self.rng.random::<f64>() < self.config.eta };
        if !forced {
            self.jumps += 1;
        }
        if let Some(pre_rho) = pre_rho {
            self.heralds.push(Herald {
                pre_rho,
                time: self.time,
                detected,
                forced,
                pre_mean_n,
                rho: self.state.reduced_field()?,
            });
        }
        self.log_event(if forced { EventKind::ForcedClick } else { EventKind::PhotonJump { detected } });
        Ok(Some(pre_mean_n))
    }

    /// Imposes a photon click now. Returns the conditioning weight
    /// (`⟨n⟩` before the click), or `None` for a state without photons.
    pub fn force_click(&mut self) -> Result<Option<f64>> {
        self.click(true)
    }

    /// Observables of the current reduced field, with the fidelity against
    /// the given stationary reference.
    pub fn sample(&self, reference: &[Complex64]) -> Result<(FieldDensityMatrix, SampleRecord)> {
        let rho = self.reduced_field()?;
        let rec = sample_record(self.time, &rho, reference)?;
        Ok((rho, rec))
    }
}

pub(crate) fn sample_record(t: f64, rho: &FieldDensityMatrix, reference: &[Complex64]) -> Result<SampleRecord> {
    Ok(SampleRecord {
        t,
        obs: observables(rho)?,
        f_sqvs: rho.expectation_pure(reference)?,
        tail_mass: rho.tail_mass(),
    })
}

/// `Ŝ(r)|0⟩` restricted to the first `cutoff.dim()` levels, computed on a
/// cutoff large enough to be exact before truncation.
pub fn sqvs_reference(r: f64, cutoff: FockCutoff) -> Result<Vec<Complex64>> {
    let spec = SqueezeSpec::new(r)?;
    let big = crate::refstates::cutoff_for_subtracted_squeezed_vacuum(r, 0, 1e-16);
    let n = big.n_max().max(cutoff.n_max());
    let full = squeezed_vacuum(spec, FockCutoff::new(n)?)?;
    Ok(full.amplitudes()[..cutoff.dim()].to_vec())
}

/// Everything recorded along one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutput {
    pub events: Vec<TrajectoryEvent>,
    pub samples: Vec<SampleRecord>,
    pub sample_states: Vec<FieldDensityMatrix>,
    pub heralds: Vec<Herald>,
    pub schedule: Arc<Schedule>,
}

/// Sample times `burn_in, burn_in + Δ, ...` up to `duration` inclusive.
pub fn steady_sample_times(config: &SimConfig) -> Result<Vec<f64>> {
    let start = config.default_burn_in()?;
    let step = config.default_sample_interval()?;
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let t = start + step * k as f64;
        if t > config.duration * (1.0 + 1e-12) {
            break;
        }
        out.push(t);
        k += 1;
    }
    Ok(out)
}

/// Runs one trajectory from the vacuum with `config.seed`, logging every
/// event and herald and sampling the field after burn-in.
pub fn run_trajectory(config: &SimConfig) -> Result<TrajectoryOutput> {
    let times = steady_sample_times(config)?;
    run_trajectory_sampled(config, config.seed, None, &times)
}

/// Runs one trajectory with an explicit seed, optional fixed schedule and
/// sample times.
pub fn run_trajectory_sampled(
    config: &SimConfig,
    seed: u64,
    schedule: Option<Arc<Schedule>>,
    sample_times: &[f64],
) -> Result<TrajectoryOutput> {
    config.validate()?;
    let schedule = match schedule {
        Some(s) => s,
        None => Arc::new(Schedule::generate(config, config.duration, &mut schedule_rng(seed))),
    };
    let cutoff = config.cutoff()?;
    let reference = sqvs_reference(config.squeeze_r()?, cutoff)?;
    let mut traj = Trajectory::new(Arc::new(config.clone()), schedule.clone(), &FieldState::vacuum(cutoff), seed)?
        .with_event_log()
        .with_heralds();
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut sample_states = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        traj.advance_to(t)?;
        let (rho, rec) = traj.sample(&reference)?;
        samples.push(rec);
        sample_states.push(rho);
    }
    traj.advance_to(config.duration)?;
    Ok(TrajectoryOutput {
        events: traj.take_events(),
        samples,
        sample_states,
        heralds: traj.take_heralds(),
        schedule,
    })
}
