//! Line-oriented scenario files.
//!
//! ```text
//! file      = header { line } ;
//! header    = "scenario v1" NL ;
//! line      = ( comment | blank | entry ) NL ;
//! comment   = "#" { any } ;
//! entry     = "world" num num num num          (* xmin xmax ymin ymax *)
//!           | "start" num num angle            (* x y theta *)
//!           | "delta" num | "kappa" ( num | "inf" )
//!           | "resolution" num [ int ]         (* metres, heading bins *)
//!           | "primitives" { key "=" num }     (* count radius fan_deg steps nu tau omega_max omega_grid tolerance *)
//!           | "verify" int | "seed" int | "cap" int
//!           | "landmark" class num num num num num   (* mean x y, cov xx xy yy *)
//!           | "prior" int { class "=" num }    (* 1-based landmark, stored only *)
//!           | "task" { any } ;                 (* repeated lines are joined *)
//! angle     = num [ "pi" ] ;
//! ```
//!
//! Every entry except `landmark`, `prior` and `task` may appear once.
//! `world`, `start` and at least one `landmark` are required.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Matrix2;
use thiserror::Error;

use crate::map::{Landmark, MapBelief, MapError, Vec2};
use crate::planner::{PlannerConfig, WorldBounds};
use crate::vehicle::{PrimitiveConfig, RobotState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing required entry `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub bounds: WorldBounds,
    pub start: RobotState,
    pub delta: f64,
    pub kappa: f64,
    pub resolution: f64,
    pub theta_bins: u32,
    pub primitives: PrimitiveConfig,
    pub verify_samples: u64,
    pub seed: u64,
    pub expansion_cap: usize,
    pub landmarks: Vec<Landmark>,
    pub priors: Vec<(usize, BTreeMap<String, f64>)>,
    pub task: String,
}

impl Scenario {
    /// A scenario with default settings and no landmarks or task.
    pub fn new(bounds: WorldBounds, start: RobotState) -> Self {
        Scenario {
            bounds,
            start,
            delta: 0.95,
            kappa: f64::INFINITY,
            resolution: 1.0,
            theta_bins: 20,
            primitives: PrimitiveConfig::default(),
            verify_samples: 10_000,
            seed: 0,
            expansion_cap: 2_000_000,
            landmarks: Vec::new(),
            priors: Vec::new(),
            task: "true".into(),
        }
    }

    pub fn belief(&self) -> Result<MapBelief, MapError> {
        let mut b = MapBelief::new(self.landmarks.clone())?;
        for (i, p) in &self.priors {
            b.set_class_prior(*i, p.clone())?;
        }
        Ok(b)
    }

    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig {
            delta: self.delta,
            kappa: self.kappa,
            bounds: self.bounds,
            resolution: self.resolution,
            theta_bins: self.theta_bins,
            expansion_cap: self.expansion_cap,
        }
    }

    pub fn start_in_bounds(&self) -> bool {
        let b = &self.bounds;
        (b.xmin..=b.xmax).contains(&self.start.x) && (b.ymin..=b.ymax).contains(&self.start.y)
    }

    pub fn to_text(&self) -> String {
        let b = &self.bounds;
        let p = &self.primitives;
        let mut out = String::from("scenario v1\n");
        let _ = writeln!(out, "world {} {} {} {}", b.xmin, b.xmax, b.ymin, b.ymax);
        let _ = writeln!(out, "start {} {} {}", self.start.x, self.start.y, self.start.theta);
        let _ = writeln!(out, "delta {}", self.delta);
        if self.kappa.is_infinite() {
            out.push_str("kappa inf\n");
        } else {
            let _ = writeln!(out, "kappa {}", self.kappa);
        }
        let _ = writeln!(out, "resolution {} {}", self.resolution, self.theta_bins);
        let _ = writeln!(
            out,
            "primitives count={} radius={} fan_deg={} steps={} nu={} tau={} omega_max={} omega_grid={} tolerance={}",
            p.count,
            p.radius,
            p.fan.to_degrees(),
            p.steps,
            p.nu,
            p.tau,
            p.omega_max,
            p.omega_grid,
            p.tolerance
        );
        let _ = writeln!(out, "verify {}", self.verify_samples);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "cap {}", self.expansion_cap);
        for l in &self.landmarks {
            let c = &l.covariance;
            let _ = writeln!(
                out,
                "landmark {} {} {} {} {} {}",
                l.class,
                l.mean.x,
                l.mean.y,
                c[(0, 0)],
                c[(0, 1)],
                c[(1, 1)]
            );
        }
        for (i, prior) in &self.priors {
            let entries: Vec<String> = prior.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(out, "prior {} {}", i + 1, entries.join(" "));
        }
        let _ = writeln!(out, "task {}", self.task);
        out
    }
}

fn num(tok: &str, line: usize) -> Result<f64, ScenarioError> {
    let v = if let Some(base) = tok.strip_suffix("pi") {
        let k = if base.is_empty() { 1.0 } else { parse_f64(base, line)? };
        k * PI
    } else {
        parse_f64(tok, line)?
    };
    Ok(v)
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, ScenarioError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ScenarioError::Syntax { line, message: format!("expected a number, found `{tok}`") }),
    }
}

fn int<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T, ScenarioError> {
    tok.parse()
        .map_err(|_| ScenarioError::Syntax { line, message: format!("expected an integer, found `{tok}`") })
}

fn arity(args: &[&str], n: usize, key: &str, line: usize) -> Result<(), ScenarioError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(ScenarioError::Syntax { line, message: format!("`{key}` takes {n} values, found {}", args.len()) })
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.by_ref().find(|(_, l)| !l.is_empty() && !l.starts_with('#')) {
        Some((_, "scenario v1")) => {}
        Some((line, _)) => {
            return Err(ScenarioError::Syntax { line, message: "expected header `scenario v1`".into() })
        }
        None => return Err(ScenarioError::Missing("scenario v1")),
    }
    let zero = WorldBounds { xmin: 0.0, xmax: 0.0, ymin: 0.0, ymax: 0.0 };
    let mut sc = Scenario::new(zero, RobotState::new(0.0, 0.0, 0.0));
    let mut seen: HashSet<&str> = HashSet::new();
    let mut task: Vec<String> = Vec::new();
    let mut priors: Vec<(usize, usize, BTreeMap<String, f64>)> = Vec::new();
    for (line, l) in lines {
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (key, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let args: Vec<&str> = rest.split_whitespace().collect();
        let repeatable = matches!(key, "landmark" | "prior" | "task");
        if !repeatable {
            let k: &'static str = match key {
                "world" => "world",
                "start" => "start",
                "delta" => "delta",
                "kappa" => "kappa",
                "resolution" => "resolution",
                "primitives" => "primitives",
                "verify" => "verify",
                "seed" => "seed",
                "cap" => "cap",
                _ => {
                    return Err(ScenarioError::Syntax { line, message: format!("unknown entry `{key}`") })
                }
            };
            if !seen.insert(k) {
                return Err(ScenarioError::Syntax { line, message: format!("duplicate entry `{key}`") });
            }
        }
        match key {
            "world" => {
                arity(&args, 4, key, line)?;
                let v: Vec<f64> = args.iter().map(|a| num(a, line)).collect::<Result<_, _>>()?;
                if v[0] > v[1] || v[2] > v[3] {
                    return Err(ScenarioError::Syntax { line, message: "world bounds are not ordered".into() });
                }
                sc.bounds = WorldBounds { xmin: v[0], xmax: v[1], ymin: v[2], ymax: v[3] };
            }
            "start" => {
                arity(&args, 3, key, line)?;
                sc.start = RobotState::new(num(args[0], line)?, num(args[1], line)?, num(args[2], line)?);
            }
            "delta" => {
                arity(&args, 1, key, line)?;
                sc.delta = num(args[0], line)?;
                if !(sc.delta > 0.0 && sc.delta < 1.0) {
                    return Err(ScenarioError::Syntax { line, message: "delta must lie in (0, 1)".into() });
                }
            }
            "kappa" => {
                arity(&args, 1, key, line)?;
                sc.kappa = if args[0] == "inf" { f64::INFINITY } else { num(args[0], line)? };
                if sc.kappa < 0.0 {
                    return Err(ScenarioError::Syntax { line, message: "kappa must be non-negative".into() });
                }
            }
            "resolution" => {
                if args.is_empty() || args.len() > 2 {
                    return Err(ScenarioError::Syntax { line, message: "`resolution` takes 1 or 2 values".into() });
                }
                sc.resolution = num(args[0], line)?;
                if sc.resolution <= 0.0 {
                    return Err(ScenarioError::Syntax { line, message: "resolution must be positive".into() });
                }
                if let Some(b) = args.get(1) {
                    sc.theta_bins = int(b, line)?;
                    if sc.theta_bins == 0 {
                        return Err(ScenarioError::Syntax { line, message: "heading bins must be positive".into() });
                    }
                }
            }
            "primitives" => {
                for a in &args {
                    let (k, v) = a.split_once('=').ok_or_else(|| ScenarioError::Syntax {
                        line,
                        message: format!("expected key=value, found `{a}`"),
                    })?;
                    let p = &mut sc.primitives;
                    match k {
                        "count" => p.count = int(v, line)?,
                        "steps" => p.steps = int(v, line)?,
                        "omega_grid" => p.omega_grid = int(v, line)?,
                        "radius" => p.radius = num(v, line)?,
                        "fan_deg" => p.fan = num(v, line)?.to_radians(),
                        "nu" => p.nu = num(v, line)?,
                        "tau" => p.tau = num(v, line)?,
                        "omega_max" => p.omega_max = num(v, line)?,
                        "tolerance" => p.tolerance = num(v, line)?,
                        _ => {
                            return Err(ScenarioError::Syntax {
                                line,
                                message: format!("unknown primitive setting `{k}`"),
                            })
                        }
                    }
                }
            }
            "verify" => {
                arity(&args, 1, key, line)?;
                sc.verify_samples = int(args[0], line)?;
            }
            "seed" => {
                arity(&args, 1, key, line)?;
                sc.seed = int(args[0], line)?;
            }
            "cap" => {
                arity(&args, 1, key, line)?;
                sc.expansion_cap = int(args[0], line)?;
            }
            "landmark" => {
                arity(&args, 6, key, line)?;
                let v: Vec<f64> = args[1..].iter().map(|a| num(a, line)).collect::<Result<_, _>>()?;
                sc.landmarks.push(Landmark::new(
                    Vec2::new(v[0], v[1]),
                    Matrix2::new(v[2], v[3], v[3], v[4]),
                    args[0],
                ));
            }
            "prior" => {
                let Some((idx, entries)) = args.split_first() else {
                    return Err(ScenarioError::Syntax { line, message: "`prior` needs a landmark index".into() });
                };
                let i: usize = int(idx, line)?;
                if i == 0 {
                    return Err(ScenarioError::Syntax { line, message: "landmark indices start at 1".into() });
                }
                let mut p = BTreeMap::new();
                for e in entries {
                    let (k, v) = e.split_once('=').ok_or_else(|| ScenarioError::Syntax {
                        line,
                        message: format!("expected class=probability, found `{e}`"),
                    })?;
                    p.insert(k.to_string(), num(v, line)?);
                }
                priors.push((line, i - 1, p));
            }
            "task" => task.push(rest.trim().to_string()),
            _ => unreachable!(),
        }
    }
    for k in ["world", "start"] {
        if !seen.contains(k) {
            return Err(ScenarioError::Missing(if k == "world" { "world" } else { "start" }));
        }
    }
    if sc.landmarks.is_empty() {
        return Err(ScenarioError::Missing("landmark"));
    }
    for (line, i, p) in priors {
        if i >= sc.landmarks.len() {
            return Err(ScenarioError::Syntax { line, message: format!("prior for unknown landmark {}", i + 1) });
        }
        sc.priors.push((i, p));
    }
    if !task.is_empty() {
        sc.task = task.join(" ");
    }
    sc.belief()?;
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two landmarks
scenario v1
world -5 20 -5 20
start 0 0 0.5pi
delta 0.9
kappa inf
resolution 0.5 16
primitives count=5 fan_deg=45
landmark Tri 10 0 0.1 0 0.1
landmark Sq 0 10 0 0 0
prior 1 Tri=0.8 Sq=0.2
task F near(1, 1)
task & G !near(2, 1)
";

    #[test]
    fn parses_all_entries() {
        let s = parse_scenario(SAMPLE).unwrap();
        assert_eq!(s.bounds.xmax, 20.0);
        assert!((s.start.theta - PI / 2.0).abs() < 1e-12);
        assert_eq!(s.theta_bins, 16);
        assert_eq!(s.primitives.count, 5);
        assert!((s.primitives.fan - PI / 4.0).abs() < 1e-12);
        assert!(s.kappa.is_infinite());
        assert_eq!(s.landmarks.len(), 2);
        assert_eq!(s.task, "F near(1, 1) & G !near(2, 1)");
        assert_eq!(s.belief().unwrap().class_prior(0).unwrap()["Tri"], 0.8);
    }

    #[test]
    fn round_trips() {
        let s = parse_scenario(SAMPLE).unwrap();
        let again = parse_scenario(&s.to_text()).unwrap();
        assert_eq!(s.to_text(), again.to_text());
        assert_eq!(s.landmarks, again.landmarks);
    }

    #[test]
    fn reports_line_numbers() {
        let bad = SAMPLE.replace("delta 0.9", "delta 1.5");
        assert!(matches!(parse_scenario(&bad), Err(ScenarioError::Syntax { line: 5, .. })));
        let dup = format!("{SAMPLE}seed 1\nseed 2\n");
        assert!(matches!(parse_scenario(&dup), Err(ScenarioError::Syntax { line: 15, .. })));
        assert_eq!(parse_scenario("scenario v1\nstart 0 0 0\nlandmark A 0 0 0 0 0\n"), Err(ScenarioError::Missing("world")));
        let neg = SAMPLE.replace("0 10 0 0 0", "0 10 -1 0 0");
        assert!(matches!(parse_scenario(&neg), Err(ScenarioError::Map(MapError::BadCovariance { landmark: 1 }))));
    }
}
