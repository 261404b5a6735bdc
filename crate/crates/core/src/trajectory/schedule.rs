use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{InjectionMode, SimConfig};
use crate::hilbert::DipolePhase;

/// One atom's pass through the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomRecord {
    pub id: u64,
    pub phase: DipolePhase,
    pub entry_time: f64,
    pub exit_time: f64,
    /// Register slot at entry (number of atoms already inside).
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduledKind {
    Enter,
    Exit,
}

/// Entry or exit of `atoms[atom]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledEvent {
    pub time: f64,
    pub kind: ScheduledKind,
    pub atom: usize,
}

/// Injection schedule. It does not depend on the quantum state, so one
/// schedule can drive many trajectories or a master-equation oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub atoms: Vec<AtomRecord>,
    /// Time-ordered; at equal times exits precede entries, then by atom id.
    pub events: Vec<ScheduledEvent>,
}

/// Exponential variate of the given rate by inversion.
fn exp_sample(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

impl Schedule {
    /// Samples entry times on `[0, horizon)` for the config's injection mode.
    /// Phases alternate in entry order, starting with phase 0.
    pub fn generate(config: &SimConfig, horizon: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut entries = Vec::new();
        match config.injection_mode {
            InjectionMode::Poisson => {
                let rate = config.mean_atoms / config.t_int;
                let mut t = exp_sample(rng, rate);
                while t < horizon {
                    entries.push(t);
                    t += exp_sample(rng, rate);
                }
            }
            InjectionMode::PairedSimultaneous | InjectionMode::PairedStaggered { .. } => {
                let stagger = match config.injection_mode {
                    InjectionMode::PairedStaggered { stagger } => stagger,
                    _ => 0.0,
                };
                let rate = config.mean_atoms / (2.0 * config.t_int);
                let mut t = exp_sample(rng, rate);
                while t < horizon {
                    entries.push(t);
                    entries.push(t + stagger);
                    t += exp_sample(rng, rate);
                }
            }
        }
        entries.sort_by(f64::total_cmp);
        Self::from_entry_times(&entries, config.t_int)
    }

    /// Builds a schedule from sorted entry times with alternating phases.
    pub fn from_entry_times(entries: &[f64], t_int: f64) -> Self {
        let mut atoms: Vec<AtomRecord> = Vec::with_capacity(entries.len());
        let mut inside: VecDeque<f64> = VecDeque::new();
        for (i, &t) in entries.iter().enumerate() {
            while inside.front().is_some_and(|&exit| exit <= t) {
                inside.pop_front();
            }
            let phase = if i % 2 == 0 { DipolePhase::Zero } else { DipolePhase::Pi };
            atoms.push(AtomRecord { id: i as u64, phase, entry_time: t, exit_time: t + t_int, slot: inside.len() });
            inside.push_back(t + t_int);
        }
        let mut events: Vec<ScheduledEvent> = atoms
            .iter()
            .enumerate()
            .flat_map(|(i, a)| {
                [
                    ScheduledEvent { time: a.entry_time, kind: ScheduledKind::Enter, atom: i },
                    ScheduledEvent { time: a.exit_time, kind: ScheduledKind::Exit, atom: i },
                ]
            })
            .collect();
        events.sort_by(|a, b| {
            let rank = |k: ScheduledKind| match k {
                ScheduledKind::Exit => 0,
                ScheduledKind::Enter => 1,
            };
            a.time.total_cmp(&b.time).then(rank(a.kind).cmp(&rank(b.kind))).then(a.atom.cmp(&b.atom))
        });
        Self { atoms, events }
    }

    pub fn empty() -> Self {
        Self { atoms: Vec::new(), events: Vec::new() }
    }

    /// Largest number of atoms simultaneously inside.
    pub fn max_occupancy(&self) -> usize {
        let mut n = 0usize;
        let mut best = 0;
        for e in &self.events {
            match e.kind {
                ScheduledKind::Enter => {
                    n += 1;
                    best = best.max(n);
                }
                ScheduledKind::Exit => n -= 1,
            }
        }
        best
    }

    /// Time-averaged number of atoms inside over `[0, horizon)`, split by phase.
    pub fn mean_occupancy(&self, horizon: f64) -> (f64, f64) {
        let mut acc = [0.0f64; 2];
        for a in &self.atoms {
            let overlap = (a.exit_time.min(horizon) - a.entry_time.max(0.0)).max(0.0);
            acc[usize::from(a.phase == DipolePhase::Pi)] += overlap;
        }
        (acc[0] / horizon, acc[1] / horizon)
    }
}

/// Draws a uniform number in `(0, 1]`.
pub(crate) fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn cfg(mode: InjectionMode) -> SimConfig {
        let mut c = SimConfig::from_ratios(1.0, 0.1, 0.01, 0.3, 2.0).unwrap();
        c.injection_mode = mode;
        c
    }

    #[test]
    fn phases_alternate_and_exits_follow_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = Schedule::generate(&cfg(InjectionMode::Poisson), 200.0, &mut rng);
        for w in s.atoms.windows(2) {
            assert_ne!(w[0].phase, w[1].phase);
            assert!(w[0].entry_time <= w[1].entry_time);
        }
        for a in &s.atoms {
            assert!((a.exit_time - a.entry_time - 1.0).abs() < 1e-12);
        }
        for w in s.events.windows(2) {
            assert!(w[0].time <= w[1].time);
        }
    }

    #[test]
    fn poisson_occupancy_matches_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = Schedule::generate(&cfg(InjectionMode::Poisson), 20_000.0, &mut rng);
        let (n1, n2) = s.mean_occupancy(20_000.0);
        assert!((n1 - 1.0).abs() < 0.05 && (n2 - 1.0).abs() < 0.05, "{n1} {n2}");
    }

    #[test]
    fn pairs_enter_together_or_staggered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = Schedule::generate(&cfg(InjectionMode::PairedSimultaneous), 50.0, &mut rng);
        assert_eq!(s.atoms.len() % 2, 0);
        for p in s.atoms.chunks(2) {
            assert_eq!(p[0].entry_time, p[1].entry_time);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = Schedule::generate(&cfg(InjectionMode::PairedStaggered { stagger: 0.5 }), 50.0, &mut rng);
        assert!(s.atoms.len() >= 2);
    }

    #[test]
    fn slots_count_atoms_already_inside() {
        let s = Schedule::from_entry_times(&[0.0, 0.5, 1.0, 2.5], 1.0);
        let slots: Vec<usize> = s.atoms.iter().map(|a| a.slot).collect();
        assert_eq!(slots, vec![0, 1, 1, 0]);
        assert_eq!(s.max_occupancy(), 2);
        // the exit at t = 1 is processed before the entry at t = 1
        assert_eq!(s.events[2].kind, ScheduledKind::Exit);
    }
}
