use std::io::Write;

use crate::hilbert::{AtomOutcome, DipolePhase};
use crate::refstates::FieldObservables;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    AtomEnter { id: u64, phase: DipolePhase },
    AtomExit { id: u64, outcome: AtomOutcome },
    PhotonJump { detected: bool },
    /// Click imposed by the caller to condition an ensemble on a herald.
    ForcedClick,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::AtomEnter { .. } => "atom_enter",
            EventKind::AtomExit { .. } => "atom_exit",
            EventKind::PhotonJump { .. } => "photon_jump",
            EventKind::ForcedClick => "forced_click",
        }
    }
}

/// One logged event with the field summary right after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEvent {
    pub time: f64,
    pub kind: EventKind,
    pub mean_n: f64,
    /// `‖ψ‖` of the (unnormalized) trajectory state after the event.
    pub norm: f64,
}

impl TrajectoryEvent {
    /// One JSON object; every field is present, unused ones are `null`.
    pub fn to_json_line(&self) -> String {
        let (id, phase, outcome, detected) = match self.kind {
            EventKind::AtomEnter { id, phase } => (id.to_string(), format!("\"{}\"", phase.label()), "null".into(), "null"),
            EventKind::AtomExit { id, outcome } => (id.to_string(), "null".into(), format!("\"{}\"", outcome.label()), "null"),
            EventKind::PhotonJump { detected } => {
                ("null".into(), "null".into(), "null".into(), if detected { "true" } else { "false" })
            }
            EventKind::ForcedClick => ("null".into(), "null".into(), "null".into(), "true"),
        };
        format!(
            "{{\"t\":{:.14e},\"kind\":\"{}\",\"id\":{},\"phase\":{},\"outcome\":{},\"detected\":{},\"mean_n\":{:.14e},\"norm\":{:.14e}}}",
            self.time,
            self.kind.label(),
            id,
            phase,
            outcome,
            detected,
            self.mean_n,
            self.norm
        )
    }
}

pub fn write_event_log<W: Write>(events: &[TrajectoryEvent], mut out: W) -> std::io::Result<()> {
    for e in events {
        writeln!(out, "{}", e.to_json_line())?;
    }
    Ok(())
}

/// Field statistics at one sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub t: f64,
    pub obs: FieldObservables,
    pub f_sqvs: f64,
    pub tail_mass: f64,
}

pub const SAMPLE_CSV_HEADER: &str = "t,mean_n,var_x1,var_x2,f_sqvs,tail_mass";

pub fn write_samples_csv<W: Write>(samples: &[SampleRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SAMPLE_CSV_HEADER}")?;
    for s in samples {
        writeln!(
            out,
            "{:.14e},{:.10e},{:.10e},{:.10e},{:.10e},{:.6e}",
            s.t, s.obs.mean_n, s.obs.var_x1, s.obs.var_x2, s.f_sqvs, s.tail_mass
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_lines_parse_and_keep_precision() {
        let e = TrajectoryEvent {
            time: 1.234567890123456e-5,
            kind: EventKind::AtomEnter { id: 7, phase: DipolePhase::Pi },
            mean_n: 0.5,
            norm: 0.99,
        };
        let v: serde_json::Value = serde_json::from_str(&e.to_json_line()).unwrap();
        assert_eq!(v["kind"], "atom_enter");
        assert_eq!(v["id"], 7);
        assert_eq!(v["phase"], "pi");
        assert!(v["outcome"].is_null());
        assert_eq!(v["t"].as_f64().unwrap(), 1.23456789012346e-5);
        let j = TrajectoryEvent { kind: EventKind::PhotonJump { detected: false }, ..e };
        let v: serde_json::Value = serde_json::from_str(&j.to_json_line()).unwrap();
        assert_eq!(v["detected"], false);
    }
}
