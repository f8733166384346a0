//! Differential-drive kinematics and the motion primitive library.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::map::Vec2;

/// Below this `|τω|` the straight-line update is used.
pub const STRAIGHT_THRESHOLD: f64 = 0.001;

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t >= PI {
        -PI
    } else {
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl RobotState {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        RobotState { x, y, theta: normalize_angle(theta) }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlInput {
    pub nu: f64,
    pub omega: f64,
}

/// Exact unicycle integration over one sampling period `tau` with constant
/// controls.
pub fn step_kinematics(s: RobotState, u: ControlInput, tau: f64) -> RobotState {
    let turn = tau * u.omega;
    let (x, y) = if turn.abs() < STRAIGHT_THRESHOLD {
        let mid = s.theta + 0.5 * turn;
        (s.x + tau * u.nu * mid.cos(), s.y + tau * u.nu * mid.sin())
    } else {
        let k = u.nu / u.omega;
        (
            s.x + k * ((s.theta + turn).sin() - s.theta.sin()),
            s.y + k * (s.theta.cos() - (s.theta + turn).cos()),
        )
    };
    RobotState::new(x, y, s.theta + turn)
}

/// Straight-line distance between positions; heading is ignored.
pub fn motion_cost(a: &RobotState, b: &RobotState) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VehicleError {
    #[error("invalid primitive configuration: {0}")]
    InvalidConfig(String),
    #[error("no motion primitive reached its target within tolerance")]
    NoPrimitives,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveConfig {
    /// Number of targets on the circle.
    pub count: usize,
    /// Circle radius, m.
    pub radius: f64,
    /// Targets are spread evenly over headings `[-fan, fan]`, rad.
    pub fan: f64,
    /// Controls per primitive.
    pub steps: usize,
    pub nu: f64,
    pub tau: f64,
    pub omega_max: f64,
    /// Number of evenly spaced ω values in `[-omega_max, omega_max]`.
    pub omega_grid: usize,
    /// Endpoints further than this from their target are dropped, m.
    pub tolerance: f64,
}

impl Default for PrimitiveConfig {
    fn default() -> Self {
        PrimitiveConfig {
            count: 20,
            radius: 10.0,
            fan: PI / 2.0,
            steps: 5,
            nu: 1.0,
            tau: 2.0,
            omega_max: 3.0,
            omega_grid: 61,
            tolerance: 1.0,
        }
    }
}

impl PrimitiveConfig {
    fn validate(&self) -> Result<(), VehicleError> {
        let bad = |m: &str| Err(VehicleError::InvalidConfig(m.to_string()));
        if self.count == 0 || self.steps == 0 {
            return bad("count and steps must be positive");
        }
        if !(self.radius > 0.0 && self.nu > 0.0 && self.tau > 0.0) {
            return bad("radius, nu and tau must be positive");
        }
        if !(self.omega_max >= 0.0 && self.fan >= 0.0 && self.fan <= PI && self.tolerance >= 0.0) {
            return bad("omega_max, fan and tolerance must be non-negative, fan at most pi");
        }
        if self.omega_grid < 1 || (self.omega_grid > 1 && self.omega_max == 0.0) {
            return bad("omega grid needs at least one value and a positive bound when larger than one");
        }
        Ok(())
    }

    fn omegas(&self) -> Vec<f64> {
        if self.omega_grid == 1 {
            return vec![0.0];
        }
        let n = self.omega_grid - 1;
        let mut w: Vec<f64> = (0..=n)
            .map(|j| self.omega_max * (2.0 * j as f64 / n as f64 - 1.0))
            .collect();
        // Prefer gentle turns on ties.
        w.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
        w
    }

    fn targets(&self) -> Vec<RobotState> {
        (0..self.count)
            .map(|k| {
                let phi = if self.count == 1 {
                    0.0
                } else {
                    -self.fan + 2.0 * self.fan * k as f64 / (self.count - 1) as f64
                };
                RobotState::new(self.radius * phi.cos(), self.radius * phi.sin(), phi)
            })
            .collect()
    }
}

/// Control sequence with its body-frame trace, starting at the origin
/// facing +x.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionPrimitive {
    pub controls: Vec<ControlInput>,
    pub target: RobotState,
    /// Poses after each control, the last one being the endpoint.
    pub poses: Vec<RobotState>,
    /// Sum of chord lengths along `poses`, m.
    pub cost: f64,
    /// Sampling period each control is held for, s.
    pub tau: f64,
}

impl MotionPrimitive {
    pub fn endpoint(&self) -> RobotState {
        *self.poses.last().expect("primitives have at least one step")
    }
}

fn rollout(start: RobotState, controls: &[ControlInput], tau: f64) -> Vec<RobotState> {
    let mut s = start;
    controls
        .iter()
        .map(|&u| {
            s = step_kinematics(s, u, tau);
            s
        })
        .collect()
}

fn chord_sum(start: &RobotState, poses: &[RobotState]) -> f64 {
    let mut prev = start;
    let mut total = 0.0;
    for p in poses {
        total += motion_cost(prev, p);
        prev = p;
    }
    total
}

/// Greedy discrete pursuit: at each step pick the ω whose one-step turn,
/// followed by driving straight for the remaining steps, ends closest to
/// the target.
fn track(cfg: &PrimitiveConfig, target: &RobotState) -> Vec<ControlInput> {
    let omegas = cfg.omegas();
    let mut s = RobotState::new(0.0, 0.0, 0.0);
    let mut controls = Vec::with_capacity(cfg.steps);
    for k in 0..cfg.steps {
        let mut best = (f64::INFINITY, 0.0, s);
        for &w in &omegas {
            let next = step_kinematics(s, ControlInput { nu: cfg.nu, omega: w }, cfg.tau);
            let rest = (cfg.steps - k - 1) as f64 * cfg.nu * cfg.tau;
            let end = Vec2::new(next.x + rest * next.theta.cos(), next.y + rest * next.theta.sin());
            let d = (end - target.position()).norm();
            if d < best.0 {
                best = (d, w, next);
            }
        }
        controls.push(ControlInput { nu: cfg.nu, omega: best.1 });
        s = best.2;
    }
    controls
}

/// Builds the primitive library, dropping primitives that miss their target
/// by more than the tolerance.
pub fn generate_primitives(cfg: &PrimitiveConfig) -> Result<Vec<MotionPrimitive>, VehicleError> {
    cfg.validate()?;
    let origin = RobotState::new(0.0, 0.0, 0.0);
    let mut out = Vec::new();
    for target in cfg.targets() {
        let controls = track(cfg, &target);
        let poses = rollout(origin, &controls, cfg.tau);
        let miss = motion_cost(poses.last().unwrap(), &target);
        if miss > cfg.tolerance {
            log::warn!(
                "dropping primitive toward ({:.3}, {:.3}): endpoint misses by {:.3} m",
                target.x,
                target.y,
                miss
            );
            continue;
        }
        let cost = chord_sum(&origin, &poses);
        out.push(MotionPrimitive { controls, target, poses, cost, tau: cfg.tau });
    }
    if out.is_empty() {
        return Err(VehicleError::NoPrimitives);
    }
    Ok(out)
}

/// Replays a primitive from `s`, returning the endpoint, every visited
/// state and the chord cost.
pub fn apply_primitive(s: RobotState, p: &MotionPrimitive) -> (RobotState, Vec<RobotState>, f64) {
    let poses = rollout(s, &p.controls, p.tau);
    let cost = chord_sum(&s, &poses);
    (*poses.last().unwrap(), poses, cost)
}

/// Text table: one line per primitive with controls, endpoint and cost.
pub fn primitive_table(prims: &[MotionPrimitive]) -> String {
    let mut out = String::from("# id | omega per step | end x y theta | cost\n");
    for (i, p) in prims.iter().enumerate() {
        let omegas: Vec<String> = p.controls.iter().map(|u| format!("{:.4}", u.omega)).collect();
        let e = p.endpoint();
        let _ = writeln!(
            out,
            "{i} | {} | {:.6} {:.6} {:.6} | {:.6}",
            omegas.join(" "),
            e.x,
            e.y,
            e.theta,
            p.cost
        );
    }
    out
}
