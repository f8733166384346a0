mod common;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ltlplan::ltl::{Dfa, Formula, Label};
use ltlplan::map::{Landmark, MapBelief, Vec2};
use ltlplan::pipeline::compile_task;
use ltlplan::planner::{BinKey, Cost, Decision, Planner, ProductState, Target, WorldBounds};
use ltlplan::scenario::Scenario;
use ltlplan::vehicle::{generate_primitives, motion_cost, MotionPrimitive, PrimitiveConfig, RobotState};
use ltlplan::verify::audit_heuristic;

struct Setup {
    sc: Scenario,
    formula: Formula,
    dfa: Dfa,
    belief: MapBelief,
    prims: Vec<MotionPrimitive>,
}

impl Setup {
    fn new(sc: Scenario) -> Setup {
        let (formula, dfa) = compile_task(&sc.task).unwrap();
        let belief = sc.belief().unwrap();
        let prims = generate_primitives(&sc.primitives).unwrap();
        Setup { sc, formula, dfa, belief, prims }
    }

    fn planner(&self) -> Planner<'_> {
        Planner::new(&self.dfa, self.formula.safety.as_ref(), &self.belief, &self.prims, self.sc.planner_config())
            .unwrap()
    }
}

fn square_world(w: f64, start: RobotState, task: &str, landmarks: Vec<(f64, f64, f64)>) -> Scenario {
    let mut sc = Scenario::new(WorldBounds { xmin: 0.0, xmax: w, ymin: 0.0, ymax: w }, start);
    sc.landmarks = landmarks
        .into_iter()
        .map(|(x, y, var)| Landmark::new(Vec2::new(x, y), Matrix2::identity() * var, "Sq"))
        .collect();
    sc.task = task.into();
    sc.resolution = 1.0;
    sc.theta_bins = 16;
    sc.primitives = PrimitiveConfig { count: 12, radius: 4.0, steps: 2, ..PrimitiveConfig::default() };
    sc
}

/// Plain Dijkstra over lattice cells for "reach within `r` of `goal`" on an
/// exactly known map. Shares only the lattice geometry with the planner.
fn reach_cost(planner: &Planner, start: &RobotState, goal: Vec2, r: f64, bounds: &WorldBounds) -> Option<Cost> {
    let sys = planner.system();
    let inside = |p: &RobotState| p.x >= bounds.xmin && p.x <= bounds.xmax && p.y >= bounds.ymin && p.y <= bounds.ymax;
    let s0 = sys.snap(start);
    if (sys.pose(&s0).position() - goal).norm() <= r {
        return Some(Cost::ZERO);
    }
    // `None` is the goal node: any segment touching the ball ends there.
    let mut dist: HashMap<Option<BinKey>, u64> = HashMap::from([(Some(s0), 0)]);
    let mut heap = BinaryHeap::from([Reverse((0u64, Some(s0)))]);
    while let Some(Reverse((d, node))) = heap.pop() {
        let Some(k) = node else { return Some(Cost(d)) };
        if dist[&node] < d {
            continue;
        }
        for p in 0..sys.primitives().len() {
            let poses = sys.segment_poses(&k, p);
            if !poses.iter().all(inside) {
                continue;
            }
            let mut prev = sys.pose(&k);
            let mut c = 0;
            for q in &poses {
                c += Cost::from_meters(motion_cost(&prev, q)).0;
                prev = *q;
            }
            let next = if poses.iter().any(|q| (q.position() - goal).norm() <= r) {
                None
            } else {
                Some(sys.snap(poses.last().unwrap()))
            };
            let nd = d + c;
            if dist.get(&next).is_none_or(|&v| nd < v) {
                dist.insert(next, nd);
                heap.push(Reverse((nd, next)));
            }
        }
    }
    None
}

#[test]
fn single_landmark_cost_equals_plain_dijkstra() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..15 {
        let start = RobotState::new(rng.random_range(2.0..18.0), rng.random_range(2.0..18.0), rng.random_range(-3.0..3.0));
        let goal = (rng.random_range(1.0..19.0), rng.random_range(1.0..19.0));
        let r = rng.random_range(1.0..2.5);
        let sc = square_world(20.0, start, &format!("F near(1,{r})"), vec![(goal.0, goal.1, 0.0)]);
        let s = Setup::new(sc);
        let planner = s.planner();
        let plan = planner.plan(&start).unwrap();
        let want = reach_cost(&planner, &start, Vec2::new(goal.0, goal.1), r, &s.sc.bounds);
        match want {
            Some(c) => {
                assert_eq!(plan.decision, Decision::Execute);
                assert_eq!(plan.cost, c, "start {start:?} goal {goal:?} r {r}");
            }
            None => assert_eq!(plan.decision, Decision::StopImmediately),
        }
    }
}

#[test]
fn goal_at_start_costs_nothing() {
    let start = RobotState::new(5.0, 5.0, 0.0);
    let s = Setup::new(square_world(10.0, start, "F near(1,1)", vec![(5.2, 5.1, 0.0)]));
    let plan = s.planner().plan(&start).unwrap();
    assert_eq!(plan.decision, Decision::Execute);
    assert_eq!(plan.cost, Cost::ZERO);
    assert!(plan.primitives.is_empty());
    assert_eq!(plan.trajectory.len(), 1);
    assert!(s.dfa.is_accepting(plan.trajectory[0].q));
}

#[test]
fn small_budget_stops() {
    let start = RobotState::new(2.0, 2.0, 0.0);
    let mut sc = square_world(20.0, start, "F near(1,1)", vec![(16.0, 2.0, 0.01)]);
    let s = Setup::new(sc.clone());
    let full = s.planner().plan(&start).unwrap();
    assert_eq!(full.decision, Decision::Execute);
    let c = full.motion_cost;
    // Budget just below the optimum: stop and pay κ.
    sc.delta = 0.95;
    sc.kappa = 0.99 * c / sc.delta;
    let s = Setup::new(sc.clone());
    let p = s.planner().plan(&start).unwrap();
    assert_eq!(p.decision, Decision::StopImmediately);
    assert_eq!(p.expected_cost, sc.kappa);
    assert!(p.primitives.is_empty());
    // Budget just above it: execute at the same cost.
    sc.kappa = 1.01 * c / sc.delta;
    let s = Setup::new(sc.clone());
    let p = s.planner().plan(&start).unwrap();
    assert_eq!(p.decision, Decision::Execute);
    assert_eq!(p.motion_cost, c);
    assert!((p.expected_cost - (c + sc.kappa * (1.0 - sc.delta))).abs() < 1e-9);
}

#[test]
fn unsafe_segments_lead_to_the_sink() {
    let start = RobotState::new(10.0, 10.0, 0.0);
    let s = Setup::new(square_world(
        20.0,
        start,
        "F near(1,1) & G !near(2,1.5)",
        vec![(18.0, 10.0, 0.0), (13.0, 10.5, 0.0)],
    ));
    let planner = s.planner();
    let sys = planner.system();
    let s0 = planner.start_state(&start).unwrap().unwrap();
    let obstacle = Vec2::new(13.0, 10.5);
    let mut sinks = 0;
    for succ in sys.successors(&s0) {
        let poses = sys.segment_poses(&s0.key, succ.primitive);
        let hits = poses.iter().any(|p| (p.position() - obstacle).norm() <= 1.5);
        assert_eq!(matches!(succ.target, Target::Sink), hits);
        sinks += usize::from(hits);
    }
    assert!(sinks > 0);
    let plan = planner.plan(&start).unwrap();
    assert_eq!(plan.decision, Decision::Execute);
    assert!(plan.positions().iter().all(|x| (x - obstacle).norm() > 1.5));
    // Starting inside the obstacle ball stops before moving.
    let inside = RobotState::new(13.0, 11.0, 0.0);
    assert_eq!(planner.start_state(&inside).unwrap(), None);
    assert_eq!(planner.plan(&inside).unwrap().decision, Decision::StopImmediately);
}

#[test]
fn successor_states_follow_confident_labels() {
    for seed in 0..10 {
        let s = Setup::new(common::random_scenario(seed, false));
        let planner = s.planner();
        let sys = planner.system();
        let Some(s0) = planner.start_state(&s.sc.start).unwrap() else { continue };
        let mut frontier = vec![s0];
        for _ in 0..3 {
            let mut next = Vec::new();
            for st in &frontier {
                for succ in sys.successors(st) {
                    let Target::State(t) = succ.target else { continue };
                    let mut q = st.q;
                    for p in sys.segment_poses(&st.key, succ.primitive) {
                        let l = sys.labeler().label(&p.position(), s.dfa.atoms());
                        let q2 = s.dfa.step(q, &l);
                        if l == Label::empty() {
                            assert_eq!(q2, q);
                        }
                        q = q2;
                    }
                    assert_eq!(t.q, q);
                    next.push(t);
                }
            }
            next.truncate(40);
            frontier = next;
        }
    }
}

#[test]
fn unreachable_goal_stops() {
    let start = RobotState::new(5.0, 5.0, 0.0);
    let s = Setup::new(square_world(10.0, start, "F near(1,1)", vec![(30.0, 5.0, 0.0)]));
    let planner = s.planner();
    assert!(planner.search_unbounded(&start).unwrap().0.is_none());
    let plan = planner.plan(&start).unwrap();
    assert_eq!(plan.decision, Decision::StopImmediately);
    assert!(plan.expected_cost.is_infinite());
}

#[test]
fn heuristic_is_admissible_and_consistent_on_five_landmarks() {
    let mut done = 0;
    for seed in 100..160 {
        let mut sc = common::random_scenario(seed, seed % 2 == 0);
        if sc.landmarks.len() != 5 {
            continue;
        }
        sc.kappa = f64::INFINITY;
        let s = Setup::new(sc);
        let planner = s.planner();
        let audit = audit_heuristic(&planner, &s.sc.start).unwrap();
        assert_eq!(audit.admissibility_violations, 0, "seed {seed}");
        assert_eq!(audit.consistency_violations, 0, "seed {seed}");
        let exact: HashMap<ProductState, Cost> = planner.oracle(&s.sc.start).unwrap();
        let s0 = planner.start_state(&s.sc.start).unwrap();
        let found = planner.search_unbounded(&s.sc.start).unwrap().0;
        assert_eq!(found.map(|f| f.2), s0.and_then(|s0| exact.get(&s0).copied()), "seed {seed}");
        done += 1;
    }
    assert!(done >= 5, "only {done} five-landmark scenarios");
}
