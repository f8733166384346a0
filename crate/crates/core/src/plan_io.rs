//! Plan files and independent replay.
//!
//! ```text
//! # plan v1
//! # t x y theta q level
//! 0 10 16 2.4190263432641754 0 3
//! ...
//! # summary
//! decision execute
//! cost_um 38123456
//! ...
//! ```
//!
//! Coordinates are written with shortest round-trip formatting, so a
//! replay sees exactly the poses the planner used.

use std::fmt::Write as _;

use thiserror::Error;

use crate::labeling::ConfidentLabeler;
use crate::ltl::{Dfa, Node, StateId};
use crate::planner::{Cost, Decision, Plan};
use crate::vehicle::{motion_cost, RobotState};
use crate::verify::VerificationReport;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("plan file has no poses")]
    Empty,
}

pub fn write_plan(plan: &Plan, report: Option<&VerificationReport>) -> String {
    let mut out = String::from("# plan v1\n# t x y theta q level\n");
    for (t, p) in plan.trajectory.iter().enumerate() {
        let _ = writeln!(out, "{t} {} {} {} {} {}", p.pose.x, p.pose.y, p.pose.theta, p.q, p.level);
    }
    out.push_str("# summary\n");
    let decision = match plan.decision {
        Decision::Execute => "execute",
        Decision::StopImmediately => "stop",
    };
    let _ = writeln!(out, "decision {decision}");
    let _ = writeln!(out, "motion_cost {:.6}", plan.motion_cost);
    let _ = writeln!(out, "cost_um {}", plan.cost.0);
    let _ = writeln!(out, "expected_cost {:.6}", plan.expected_cost);
    let _ = writeln!(out, "delta {}", plan.delta);
    let _ = writeln!(out, "kappa {}", plan.kappa);
    let prims: Vec<String> = plan.primitives.iter().map(|p| p.to_string()).collect();
    let _ = writeln!(out, "primitives {}", prims.join(" "));
    let _ = writeln!(out, "expansions {}", plan.stats.expansions);
    if let Some(r) = report {
        out.push_str("# verification\n");
        let (lo, hi) = r.interval();
        let _ = writeln!(out, "samples {}", r.counts.n);
        let _ = writeln!(out, "satisfied {}", r.counts.satisfied);
        let _ = writeln!(out, "rate {:.6}", r.rate);
        let _ = writeln!(out, "ci99 {lo:.6} {hi:.6}");
        let _ = writeln!(out, "in_region {}", r.counts.in_region);
        let _ = writeln!(out, "in_region_satisfied {}", r.counts.in_region_satisfied);
        let _ = writeln!(out, "verdict {r}");
        out.push_str(&r.summary_line());
        out.push('\n');
    }
    out
}

/// Poses and reported values read back from a plan file.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanFile {
    pub poses: Vec<RobotState>,
    pub states: Vec<StateId>,
    pub decision: Decision,
    pub cost: Cost,
}

pub fn parse_plan(text: &str) -> Result<PlanFile, PlanFileError> {
    let mut poses = Vec::new();
    let mut states = Vec::new();
    let mut decision = None;
    let mut cost = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let err = |m: &str| PlanFileError::Syntax { line, message: m.to_string() };
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks[0].parse::<usize>().is_ok() {
            if toks.len() != 6 {
                return Err(err("pose lines have 6 fields"));
            }
            let f = |k: usize| toks[k].parse::<f64>().map_err(|_| err("bad number"));
            poses.push(RobotState { x: f(1)?, y: f(2)?, theta: f(3)? });
            states.push(toks[4].parse().map_err(|_| err("bad state"))?);
            continue;
        }
        match toks[0] {
            "decision" => {
                decision = Some(match toks.get(1) {
                    Some(&"execute") => Decision::Execute,
                    Some(&"stop") => Decision::StopImmediately,
                    _ => return Err(err("decision must be execute or stop")),
                })
            }
            "cost_um" => {
                cost = Some(Cost(toks.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| err("bad cost"))?))
            }
            _ => {}
        }
    }
    if poses.is_empty() {
        return Err(PlanFileError::Empty);
    }
    Ok(PlanFile {
        poses,
        states,
        decision: decision.ok_or(PlanFileError::Syntax { line: 0, message: "missing decision".into() })?,
        cost: cost.ok_or(PlanFileError::Syntax { line: 0, message: "missing cost_um".into() })?,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replay {
    pub cost: Cost,
    /// Automaton states recomputed from confident labels.
    pub states: Vec<StateId>,
    pub accepted: bool,
    /// No pose where the safety formula could fail.
    pub safe: bool,
}

/// Recomputes cost, automaton run and safety from the poses alone.
pub fn replay(poses: &[RobotState], dfa: &Dfa, safety: Option<&Node>, labeler: &ConfidentLabeler) -> Replay {
    let mut cost = Cost::ZERO;
    for w in poses.windows(2) {
        cost = cost + Cost::from_meters(motion_cost(&w[0], &w[1]));
    }
    let mut q = dfa.initial();
    let mut states = Vec::with_capacity(poses.len());
    for p in poses {
        q = dfa.step(q, &labeler.label(&p.position(), dfa.atoms()));
        states.push(q);
    }
    let safe = safety.is_none_or(|s| poses.iter().all(|p| !labeler.safety_possibly_violated(&p.position(), s)));
    Replay { cost, accepted: dfa.is_accepting(q), states, safe }
}
