//! Implicit product of the pose lattice with the task automaton.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

use crate::labeling::ConfidentLabeler;
use crate::ltl::{AtomicProp, Dfa, Node, StateId};
use crate::map::Vec2;
use crate::vehicle::{apply_primitive, motion_cost, MotionPrimitive, RobotState};

use super::{Cost, PlanError, PlannerConfig};

/// Lattice cell: position on a square grid and a heading bin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinKey {
    pub ix: i64,
    pub iy: i64,
    pub ith: u32,
}

/// Lattice node paired with a (non-sink) automaton state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductState {
    pub key: BinKey,
    pub q: StateId,
}

/// Where a primitive leads in the product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    State(ProductState),
    /// Safety could not be certified somewhere along the segment.
    Sink,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Successor {
    pub primitive: usize,
    pub target: Target,
    pub cost: Cost,
}

/// A primitive replayed from one lattice cell, independent of the automaton.
#[derive(Clone, Debug)]
struct Segment {
    end: BinKey,
    /// Confident label bitmask at each visited pose.
    labels: Box<[u64]>,
    unsafe_: bool,
    cost: Cost,
}

/// Pose lattice, labels and safety for one planning problem.
///
/// Segment geometry and labels are cached per (cell, primitive); the
/// automaton only enters when successors are requested.
pub struct ProductSystem<'a> {
    dfa: &'a Dfa,
    safety: Option<&'a Node>,
    labeler: ConfidentLabeler,
    primitives: &'a [MotionPrimitive],
    config: PlannerConfig,
    cache: RefCell<HashMap<(BinKey, u32), Option<Rc<Segment>>>>,
}

impl<'a> ProductSystem<'a> {
    pub fn new(
        dfa: &'a Dfa,
        safety: Option<&'a Node>,
        labeler: ConfidentLabeler,
        primitives: &'a [MotionPrimitive],
        config: PlannerConfig,
    ) -> Result<Self, PlanError> {
        if dfa.atoms().len() > 64 {
            return Err(PlanError::TooManyAtoms(dfa.atoms().len()));
        }
        labeler.check_atoms(dfa.atoms())?;
        if let Some(s) = safety {
            let mut atoms: Vec<AtomicProp> = Vec::new();
            s.visit_atoms(&mut |a| atoms.push(a.clone()));
            labeler.check_atoms(&atoms)?;
        }
        config.validate()?;
        Ok(ProductSystem { dfa, safety, labeler, primitives, config, cache: RefCell::new(HashMap::new()) })
    }

    pub fn dfa(&self) -> &Dfa {
        self.dfa
    }

    pub fn labeler(&self) -> &ConfidentLabeler {
        &self.labeler
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn primitives(&self) -> &[MotionPrimitive] {
        self.primitives
    }

    fn theta_step(&self) -> f64 {
        2.0 * PI / self.config.theta_bins as f64
    }

    pub fn snap(&self, s: &RobotState) -> BinKey {
        let res = self.config.resolution;
        let bins = self.config.theta_bins as i64;
        let ith = ((s.theta / self.theta_step()).round() as i64).rem_euclid(bins);
        BinKey { ix: (s.x / res).round() as i64, iy: (s.y / res).round() as i64, ith: ith as u32 }
    }

    /// Centre pose of a lattice cell.
    pub fn pose(&self, k: &BinKey) -> RobotState {
        let res = self.config.resolution;
        RobotState::new(k.ix as f64 * res, k.iy as f64 * res, k.ith as f64 * self.theta_step())
    }

    pub fn in_bounds(&self, s: &RobotState) -> bool {
        let b = &self.config.bounds;
        s.x >= b.xmin && s.x <= b.xmax && s.y >= b.ymin && s.y <= b.ymax
    }

    fn label_mask(&self, x: &Vec2) -> u64 {
        self.labeler.label(x, self.dfa.atoms()).iter().fold(0, |m, a| m | 1 << a)
    }

    fn unsafe_at(&self, x: &Vec2) -> bool {
        self.safety.is_some_and(|s| self.labeler.safety_possibly_violated(x, s))
    }

    fn step_mask(&self, q: StateId, mask: u64) -> StateId {
        self.dfa.step_with(q, |a| mask >> a & 1 == 1)
    }

    /// Poses visited by a primitive from a cell: the intermediate poses as
    /// integrated, and the endpoint snapped to its cell centre.
    pub fn segment_poses(&self, from: &BinKey, primitive: usize) -> Vec<RobotState> {
        let start = self.pose(from);
        let (end, mut poses, _) = apply_primitive(start, &self.primitives[primitive]);
        let snapped = self.pose(&self.snap(&end));
        *poses.last_mut().unwrap() = snapped;
        poses
    }

    fn segment(&self, from: &BinKey, primitive: usize) -> Option<Rc<Segment>> {
        let id = (*from, primitive as u32);
        if let Some(s) = self.cache.borrow().get(&id) {
            return s.clone();
        }
        let seg = self.build_segment(from, primitive).map(Rc::new);
        self.cache.borrow_mut().insert(id, seg.clone());
        seg
    }

    fn build_segment(&self, from: &BinKey, primitive: usize) -> Option<Segment> {
        let poses = self.segment_poses(from, primitive);
        if !poses.iter().all(|p| self.in_bounds(p)) {
            return None;
        }
        let mut prev = self.pose(from);
        let mut cost = Cost::ZERO;
        for p in &poses {
            cost = cost + Cost::from_meters(motion_cost(&prev, p));
            prev = *p;
        }
        let labels = poses.iter().map(|p| self.label_mask(&p.position())).collect();
        let unsafe_ = poses.iter().any(|p| self.unsafe_at(&p.position()));
        Some(Segment { end: self.snap(poses.last().unwrap()), labels, unsafe_, cost })
    }

    /// Product start state: the start pose is snapped and its own label is
    /// read before any motion. `None` means the start is already unsafe.
    pub fn start(&self, s: &RobotState) -> Result<Option<ProductState>, PlanError> {
        let key = self.snap(s);
        let pose = self.pose(&key);
        if !self.in_bounds(&pose) {
            return Err(PlanError::StartOutOfBounds);
        }
        if self.unsafe_at(&pose.position()) {
            return Ok(None);
        }
        let q = self.step_mask(self.dfa.initial(), self.label_mask(&pose.position()));
        Ok(Some(ProductState { key, q }))
    }

    pub fn successors(&self, s: &ProductState) -> Vec<Successor> {
        (0..self.primitives.len())
            .filter_map(|i| {
                let seg = self.segment(&s.key, i)?;
                let target = if seg.unsafe_ {
                    Target::Sink
                } else {
                    let q = seg.labels.iter().fold(s.q, |q, &m| self.step_mask(q, m));
                    Target::State(ProductState { key: seg.end, q })
                };
                Some(Successor { primitive: i, target, cost: seg.cost })
            })
            .collect()
    }

    /// Automaton states after each pose of a primitive from `s`.
    pub fn segment_states(&self, s: &ProductState, primitive: usize) -> Vec<StateId> {
        let poses = self.segment_poses(&s.key, primitive);
        let mut q = s.q;
        poses
            .iter()
            .map(|p| {
                q = self.step_mask(q, self.label_mask(&p.position()));
                q
            })
            .collect()
    }

    pub fn is_goal(&self, s: &ProductState) -> bool {
        self.dfa.is_accepting(s.q)
    }

    /// Number of cached segments, for diagnostics.
    pub fn cached_segments(&self) -> usize {
        self.cache.borrow().len()
    }
}
