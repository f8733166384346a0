//! Product-lattice planning under the δ-confident labeling.

mod heuristic;
mod product;
mod search;

use std::collections::HashMap;
use std::ops::Add;

use thiserror::Error;

use crate::labeling::ConfidentLabeler;
use crate::ltl::{Dfa, Level, Node, StateId};
use crate::map::{MapBelief, MapError};
use crate::vehicle::{MotionPrimitive, RobotState, VehicleError};

pub use heuristic::LevelHeuristic;
pub use product::{BinKey, ProductState, ProductSystem, Successor, Target};
pub use search::{astar, cost_to_go, CapExceeded, SearchOutcome, SearchStats};

/// Path cost in whole micrometres. Segment costs are rounded up, so sums
/// are exact and never undercut the real chord length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cost(pub u64);

impl Cost {
    pub const ZERO: Cost = Cost(0);
    pub const PER_METER: f64 = 1e6;

    pub fn from_meters(m: f64) -> Cost {
        Cost((m * Self::PER_METER).ceil() as u64)
    }

    /// Largest cost not above `m`; saturates for infinite `m`. Values within
    /// rounding error of a whole micrometre count as that micrometre, so
    /// `floor_meters(c.meters()) == c`.
    pub fn floor_meters(m: f64) -> Cost {
        if m.is_infinite() {
            return Cost(u64::MAX);
        }
        let v = m * Self::PER_METER;
        let r = v.round();
        if (v - r).abs() <= 1e-9 * r.max(1.0) {
            Cost(r as u64)
        } else {
            Cost(v.floor() as u64)
        }
    }

    pub fn meters(self) -> f64 {
        self.0 as f64 / Self::PER_METER
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, o: Cost) -> Cost {
        Cost(self.0.saturating_add(o.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorldBounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    pub delta: f64,
    /// Penalty for stopping without finishing the task, m. May be infinite.
    pub kappa: f64,
    pub bounds: WorldBounds,
    /// Position bin size, m.
    pub resolution: f64,
    /// Heading bins over the full turn.
    pub theta_bins: u32,
    pub expansion_cap: usize,
}

impl PlannerConfig {
    pub fn new(delta: f64, kappa: f64, bounds: WorldBounds) -> Self {
        PlannerConfig { delta, kappa, bounds, resolution: 0.5, theta_bins: 20, expansion_cap: 2_000_000 }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::Config(m.to_string()));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.kappa >= 0.0) {
            return bad("kappa must be non-negative");
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) || self.theta_bins == 0 {
            return bad("resolution and theta bins must be positive");
        }
        let b = &self.bounds;
        if !(b.xmin <= b.xmax && b.ymin <= b.ymax) || ![b.xmin, b.xmax, b.ymin, b.ymax].iter().all(|v| v.is_finite()) {
            return bad("world bounds must be finite and ordered");
        }
        Ok(())
    }

    /// The `κδ` motion budget.
    pub fn budget(&self) -> f64 {
        self.kappa * self.delta
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Vehicle(#[from] VehicleError),
    #[error(transparent)]
    Search(#[from] CapExceeded),
    #[error("invalid planner configuration: {0}")]
    Config(String),
    #[error("start pose lies outside the world bounds")]
    StartOutOfBounds,
    #[error("task uses {0} atoms; at most 64 are supported")]
    TooManyAtoms(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Execute,
    StopImmediately,
}

/// The stop-or-go rule: execute a found path when it fits the `κδ` budget,
/// otherwise stop and pay `κ`. Returns the decision and its expected cost.
pub fn decide(motion_cost: Option<f64>, delta: f64, kappa: f64) -> (Decision, f64) {
    match motion_cost {
        Some(c) if c <= kappa * delta => (Decision::Execute, c + kappa * (1.0 - delta)),
        _ => (Decision::StopImmediately, kappa),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajPoint {
    pub pose: RobotState,
    pub q: StateId,
    pub level: Level,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub decision: Decision,
    /// Primitive index per lattice step.
    pub primitives: Vec<usize>,
    /// Lattice nodes, start included.
    pub states: Vec<ProductState>,
    /// Every visited pose, start included, with the automaton state after
    /// reading its label.
    pub trajectory: Vec<TrajPoint>,
    pub cost: Cost,
    pub motion_cost: f64,
    pub expected_cost: f64,
    pub delta: f64,
    pub kappa: f64,
    pub stats: SearchStats,
}

impl Plan {
    pub fn positions(&self) -> Vec<crate::map::Vec2> {
        self.trajectory.iter().map(|p| p.pose.position()).collect()
    }
}

/// Lattice nodes, primitive indices and total cost of a found path.
pub type Found = (Vec<ProductState>, Vec<usize>, Cost);

/// Search front end bundling the product system and its heuristic.
pub struct Planner<'a> {
    system: ProductSystem<'a>,
    heuristic: LevelHeuristic<'a>,
}

impl<'a> Planner<'a> {
    pub fn new(
        dfa: &'a Dfa,
        safety: Option<&'a Node>,
        belief: &MapBelief,
        primitives: &'a [MotionPrimitive],
        config: PlannerConfig,
    ) -> Result<Self, PlanError> {
        config.validate()?;
        let labeler = ConfidentLabeler::new(belief, config.delta)?;
        labeler.check_atoms(dfa.atoms())?;
        let heuristic = LevelHeuristic::new(dfa, &labeler);
        let system = ProductSystem::new(dfa, safety, labeler, primitives, config)?;
        Ok(Planner { system, heuristic })
    }

    pub fn system(&self) -> &ProductSystem<'a> {
        &self.system
    }

    pub fn heuristic(&self) -> &LevelHeuristic<'a> {
        &self.heuristic
    }

    /// Heuristic in cost units, `None` for dead ends.
    pub fn h(&self, s: &ProductState) -> Option<Cost> {
        let x = self.system.pose(&s.key).position();
        let v = self.heuristic.value(&x, s.q);
        v.is_finite().then(|| Cost::floor_meters(v))
    }

    fn live_successors(&self, s: &ProductState) -> Vec<(ProductState, usize, u64)> {
        self.system
            .successors(s)
            .into_iter()
            .filter_map(|succ| match succ.target {
                Target::State(t) => Some((t, succ.primitive, succ.cost.0)),
                Target::Sink => None,
            })
            .collect()
    }

    /// Lattice search from `start`. `Ok(None)` when no path fits the budget
    /// or the start pose is already unsafe.
    pub fn search(&self, start: &RobotState) -> Result<(Option<Found>, SearchStats), PlanError> {
        self.search_within(start, Cost::floor_meters(self.system.config().budget()))
    }

    /// Lattice search with no budget.
    pub fn search_unbounded(&self, start: &RobotState) -> Result<(Option<Found>, SearchStats), PlanError> {
        self.search_within(start, Cost(u64::MAX))
    }

    fn search_within(&self, start: &RobotState, budget: Cost) -> Result<(Option<Found>, SearchStats), PlanError> {
        let Some(s0) = self.system.start(start)? else {
            return Ok((None, SearchStats { expansions: 0, reopened: 0 }));
        };
        let cfg = self.system.config();
        let out = astar(
            s0,
            |s| self.live_successors(s),
            |s| self.h(s).map(|c| c.0),
            |s| self.system.is_goal(s),
            budget.0,
            cfg.expansion_cap,
        )?;
        Ok(match out {
            SearchOutcome::Found { nodes, edges, cost, stats } => (Some((nodes, edges, Cost(cost))), stats),
            SearchOutcome::Exhausted { stats } => (None, stats),
        })
    }

    /// Exact cost-to-go over the lattice reachable from `start`, ignoring the
    /// budget.
    pub fn oracle(&self, start: &RobotState) -> Result<HashMap<ProductState, Cost>, PlanError> {
        let Some(s0) = self.system.start(start)? else {
            return Ok(HashMap::new());
        };
        let map = cost_to_go(
            s0,
            |s| self.live_successors(s).into_iter().map(|(t, _, c)| (t, c)).collect(),
            |s| self.system.is_goal(s),
            self.system.config().expansion_cap,
        )?;
        Ok(map.into_iter().map(|(k, v)| (k, Cost(v))).collect())
    }

    pub fn start_state(&self, start: &RobotState) -> Result<Option<ProductState>, PlanError> {
        self.system.start(start)
    }

    /// Runs the search and applies the decision rule.
    pub fn plan(&self, start: &RobotState) -> Result<Plan, PlanError> {
        let cfg = self.system.config();
        let (found, stats) = self.search(start)?;
        let dfa = self.system.dfa();
        // The search already enforced the budget in whole micrometres.
        let (decision, expected_cost) = match &found {
            Some(f) => (Decision::Execute, f.2.meters() + cfg.kappa * (1.0 - cfg.delta)),
            None => (Decision::StopImmediately, cfg.kappa),
        };
        let s0 = self.system.start(start)?;
        let start_pose = self.system.pose(&self.system.snap(start));
        let first = TrajPoint {
            pose: start_pose,
            q: s0.map_or(dfa.initial(), |s| s.q),
            level: s0.map_or(dfa.level(dfa.initial()), |s| dfa.level(s.q)),
        };
        let mut plan = Plan {
            decision,
            primitives: Vec::new(),
            states: s0.into_iter().collect(),
            trajectory: vec![first],
            cost: Cost::ZERO,
            motion_cost: 0.0,
            expected_cost,
            delta: cfg.delta,
            kappa: cfg.kappa,
            stats,
        };
        if decision == Decision::StopImmediately {
            return Ok(plan);
        }
        let (nodes, prims, cost) = found.expect("execute implies a path");
        for (node, &p) in nodes.iter().zip(&prims) {
            let poses = self.system.segment_poses(&node.key, p);
            let qs = self.system.segment_states(node, p);
            for (pose, q) in poses.into_iter().zip(qs) {
                plan.trajectory.push(TrajPoint { pose, q, level: dfa.level(q) });
            }
        }
        debug_assert_eq!(plan.trajectory.last().map(|t| t.q), nodes.last().map(|n| n.q));
        plan.states = nodes;
        plan.primitives = prims;
        plan.cost = cost;
        plan.motion_cost = cost.meters();
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_rule() {
        let (d, e) = decide(Some(38.0), 0.95, 100.0);
        assert_eq!(d, Decision::Execute);
        assert!((e - 43.0).abs() < 1e-9);
        assert_eq!(decide(None, 0.95, 100.0), (Decision::StopImmediately, 100.0));
        assert_eq!(decide(Some(50.0), 0.5, 100.0).0, Decision::Execute);
        assert_eq!(decide(Some(50.000001), 0.5, 100.0).0, Decision::StopImmediately);
        assert_eq!(decide(Some(1e9), 0.5, f64::INFINITY).0, Decision::Execute);
    }

    #[test]
    fn cost_rounding() {
        assert_eq!(Cost::from_meters(1.0), Cost(1_000_000));
        assert_eq!(Cost::from_meters(1e-7), Cost(1));
        assert_eq!(Cost::floor_meters(2.5e-6), Cost(2));
        assert_eq!(Cost::floor_meters(f64::INFINITY), Cost(u64::MAX));
        for um in [19_784_782u64, 1, 123_456_789_012, 38_000_001] {
            assert_eq!(Cost::floor_meters(Cost(um).meters()), Cost(um));
            assert_eq!(Cost::floor_meters(Cost(um).meters() * 2.0 * 0.5), Cost(um));
        }
    }
}
