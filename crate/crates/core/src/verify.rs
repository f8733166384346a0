//! Monte Carlo checks of planned trajectories and audits of planner
//! invariants.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Range};

use crate::labeling::{atom_true, label_true, ConfidentLabeler};
use crate::ltl::{AtomicProp, Dfa, Level, Node, StateId};
use crate::map::{MapBelief, MapError, SampledMap, Vec2};
use crate::planner::{Cost, PlanError, Planner, ProductState, Target};
use crate::vehicle::RobotState;

/// Default allowance below δ for the verdict.
pub const DEFAULT_SLACK: f64 = 0.02;
/// Two-sided confidence of the reported interval.
pub const CONFIDENCE: f64 = 0.99;

/// Raw tallies; merging shards is plain addition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SampleCounts {
    pub n: u64,
    pub satisfied: u64,
    pub in_region: u64,
    pub in_region_satisfied: u64,
}

impl Add for SampleCounts {
    type Output = SampleCounts;
    fn add(self, o: SampleCounts) -> SampleCounts {
        SampleCounts {
            n: self.n + o.n,
            satisfied: self.satisfied + o.satisfied,
            in_region: self.in_region + o.in_region,
            in_region_satisfied: self.in_region_satisfied + o.in_region_satisfied,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub counts: SampleCounts,
    pub rate: f64,
    /// Satisfaction rate among maps inside the confidence region; `None`
    /// when no sample fell inside.
    pub in_region_rate: Option<f64>,
    /// Hoeffding half-width at [`CONFIDENCE`].
    pub epsilon: f64,
    pub delta: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn from_counts(counts: SampleCounts, delta: f64, slack: f64) -> Self {
        let rate = if counts.n == 0 { 0.0 } else { counts.satisfied as f64 / counts.n as f64 };
        let in_region_rate =
            (counts.in_region > 0).then(|| counts.in_region_satisfied as f64 / counts.in_region as f64);
        let epsilon = hoeffding_epsilon(counts.n, CONFIDENCE);
        let verdict = if counts.n > 0 && rate - epsilon >= delta - slack { Verdict::Pass } else { Verdict::Fail };
        VerificationReport { counts, rate, in_region_rate, epsilon, delta, slack, verdict }
    }

    pub fn interval(&self) -> (f64, f64) {
        ((self.rate - self.epsilon).max(0.0), (self.rate + self.epsilon).min(1.0))
    }

    /// One-line machine-readable summary.
    pub fn summary_line(&self) -> String {
        let (lo, hi) = self.interval();
        format!(
            "VERIFY n={} satisfied={} rate={:.6} ci99=[{:.6},{:.6}] in_region={} in_region_satisfied={} delta={} slack={} verdict={}",
            self.counts.n,
            self.counts.satisfied,
            self.rate,
            lo,
            hi,
            self.counts.in_region,
            self.counts.in_region_satisfied,
            self.delta,
            self.slack,
            self
        )
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.verdict {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail => write!(f, "fail"),
        }
    }
}

/// Half-width `ε` with `P(|rate - p| > ε) <= 1 - confidence` for `n`
/// Bernoulli samples.
pub fn hoeffding_epsilon(n: u64, confidence: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * n as f64)).sqrt()
}

/// Whether a trajectory satisfies the task on one concrete map: the label
/// word is accepted and the safety formula holds at every pose.
pub fn satisfied_on(positions: &[Vec2], m: &SampledMap, dfa: &Dfa, safety: Option<&Node>) -> bool {
    if let Some(s) = safety {
        if !positions.iter().all(|x| s.eval_prop(&|a| atom_true(x, m, a))) {
            return false;
        }
    }
    let word: Vec<_> = positions.iter().map(|x| label_true(x, m, dfa.atoms())).collect();
    dfa.accepts(&word)
}

/// Tallies samples `indices` of the stream selected by `seed`.
pub fn count_samples(
    positions: &[Vec2],
    belief: &MapBelief,
    dfa: &Dfa,
    safety: Option<&Node>,
    delta: f64,
    seed: u64,
    indices: Range<u64>,
) -> Result<SampleCounts, MapError> {
    let ellipses = belief.ellipses(delta)?;
    let mut c = SampleCounts::default();
    for i in indices {
        let m = belief.sample_indexed(seed, i);
        let ok = satisfied_on(positions, &m, dfa, safety);
        let inside = ellipses.iter().zip(&m.poses).all(|(e, z)| e.contains(z));
        c.n += 1;
        c.satisfied += u64::from(ok);
        c.in_region += u64::from(inside);
        c.in_region_satisfied += u64::from(ok && inside);
    }
    Ok(c)
}

pub fn verify_plan(
    positions: &[Vec2],
    belief: &MapBelief,
    dfa: &Dfa,
    safety: Option<&Node>,
    delta: f64,
    n: u64,
    seed: u64,
    slack: f64,
) -> Result<VerificationReport, MapError> {
    let c = count_samples(positions, belief, dfa, safety, delta, seed, 0..n)?;
    Ok(VerificationReport::from_counts(c, delta, slack))
}

/// Satisfaction over maps drawn inside the confidence region only.
pub fn count_in_region(
    positions: &[Vec2],
    belief: &MapBelief,
    dfa: &Dfa,
    safety: Option<&Node>,
    delta: f64,
    n: u64,
    seed: u64,
) -> Result<(u64, u64), MapError> {
    let mut ok = 0;
    for i in 0..n {
        let m = belief.sample_in_region_indexed(delta, seed, i)?;
        ok += u64::from(satisfied_on(positions, &m, dfa, safety));
    }
    Ok((n, ok))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SubsequenceAudit {
    pub maps: u64,
    pub violations: u64,
}

/// Checks, position by position, that each confident label is either ∅ or
/// equal to the true label, for maps drawn inside the confidence region.
pub fn audit_subsequence(
    positions: &[Vec2],
    belief: &MapBelief,
    delta: f64,
    atoms: &[AtomicProp],
    n: u64,
    seed: u64,
) -> Result<SubsequenceAudit, MapError> {
    let labeler = ConfidentLabeler::new(belief, delta)?;
    labeler.check_atoms(atoms)?;
    let confident = labeler.label_sequence(positions, atoms);
    let mut audit = SubsequenceAudit::default();
    for i in 0..n {
        let m = belief.sample_in_region_indexed(delta, seed, i)?;
        let ok = confident
            .iter()
            .zip(positions)
            .all(|(c, x)| c.is_empty() || *c == label_true(x, &m, atoms));
        audit.maps += 1;
        audit.violations += u64::from(!ok);
    }
    Ok(audit)
}

/// Steps where the level drops by more than one.
pub fn level_violations(dfa: &Dfa, qs: &[StateId]) -> usize {
    qs.windows(2)
        .filter(|w| match (dfa.level(w[0]), dfa.level(w[1])) {
            (_, Level::Infinite) => false,
            (Level::Infinite, Level::Finite(_)) => true,
            (Level::Finite(a), Level::Finite(b)) => a > b + 1,
        })
        .count()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HeuristicAudit {
    /// Product states with a finite cost-to-go.
    pub states: usize,
    /// States where `h > h*`.
    pub admissibility_violations: usize,
    /// Lattice edges `s -> t` with `h(s) > c + h(t)`.
    pub consistency_violations: usize,
}

/// Compares the heuristic with the exact cost-to-go on every product state
/// reachable from `start`.
pub fn audit_heuristic(planner: &Planner, start: &RobotState) -> Result<HeuristicAudit, PlanError> {
    Ok(audit_heuristic_against(planner, &planner.oracle(start)?))
}

/// Same as [`audit_heuristic`] with a cost-to-go map computed beforehand.
pub fn audit_heuristic_against(planner: &Planner, exact: &HashMap<ProductState, Cost>) -> HeuristicAudit {
    let mut audit = HeuristicAudit { states: exact.len(), ..Default::default() };
    let inf = Cost(u64::MAX);
    for (s, &hstar) in exact {
        let h = planner.h(s).unwrap_or(inf);
        if h > hstar {
            audit.admissibility_violations += 1;
        }
        for succ in planner.system().successors(s) {
            if let Target::State(t) = succ.target {
                let ht = planner.h(&t).unwrap_or(inf);
                if h > succ.cost + ht {
                    audit.consistency_violations += 1;
                }
            }
        }
    }
    audit
}
