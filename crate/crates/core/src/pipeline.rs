//! Scenario to plan: parse, compile, validate, plan, decide, verify.

use std::fmt::Write as _;
use std::thread;

use thiserror::Error;

use crate::ltl::{compile, is_upward_closed, parse, CompileError, Dfa, Formula, Label};
use crate::map::MapError;
use crate::plan_io::{replay, write_plan};
use crate::planner::{Decision, Plan, PlanError, Planner};
use crate::scenario::Scenario;
use crate::svg;
use crate::vehicle::{generate_primitives, VehicleError};
use crate::verify::{count_samples, level_violations, SampleCounts, VerificationReport, Verdict, DEFAULT_SLACK};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("formula error:\n{0}")]
    Formula(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("task is not closed under letter insertion, so the labeling guarantee does not apply{0}")]
    NotUpwardClosed(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Vehicle(#[from] VehicleError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("lattice search and reverse Dijkstra disagree: {astar:?} vs {dijkstra:?}")]
    OracleMismatch { astar: Option<u64>, dijkstra: Option<u64> },
    #[error("replay of the plan disagrees with the planner: {0}")]
    Replay(String),
}

/// Overrides and optional work on top of a scenario.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub delta: Option<f64>,
    pub kappa: Option<f64>,
    pub seed: Option<u64>,
    /// Monte Carlo samples; `Some(0)` skips verification.
    pub verify: Option<u64>,
    pub oracle: bool,
    pub dump_dfa: bool,
    pub plot: bool,
    /// Worker threads for verification.
    pub threads: usize,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub plan: Plan,
    pub report: Option<VerificationReport>,
    pub plan_text: String,
    pub dfa_dump: Option<String>,
    pub svg: Option<String>,
    /// Human-readable notes, one per line.
    pub log: String,
}

impl RunOutput {
    /// 0 on execute and pass, 2 on stop, 3 on a failed verification.
    pub fn exit_code(&self) -> i32 {
        match (self.plan.decision, self.report.as_ref().map(|r| r.verdict)) {
            (Decision::StopImmediately, _) => 2,
            (Decision::Execute, Some(Verdict::Fail)) => 3,
            _ => 0,
        }
    }
}

fn witness_text(w: &Option<(Vec<Label>, Label, Vec<Label>)>) -> String {
    let Some((u, a, v)) = w else { return String::new() };
    let word = |ls: &[Label]| ls.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ");
    format!(": inserting {a} between [{}] and [{}] breaks acceptance", word(u), word(v))
}

pub fn compile_task(text: &str) -> Result<(Formula, Dfa), PipelineError> {
    let f = parse(text).map_err(|e| PipelineError::Formula(e.annotate(text)))?;
    let dfa = compile(&f)?;
    let uc = is_upward_closed(&dfa);
    if !uc.closed {
        return Err(PipelineError::NotUpwardClosed(witness_text(&uc.witness)));
    }
    Ok((f, dfa))
}

/// Runs every stage on `scenario` with `opts` applied.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput, PipelineError> {
    let mut sc = scenario.clone();
    if let Some(d) = opts.delta {
        sc.delta = d;
    }
    if let Some(k) = opts.kappa {
        sc.kappa = k;
    }
    if let Some(s) = opts.seed {
        sc.seed = s;
    }
    let mut log = String::new();

    let (formula, dfa) = compile_task(&sc.task)?;
    let safety = formula.safety.as_ref();
    let _ = writeln!(log, "automaton: {} states, {} atoms", dfa.num_states(), dfa.atoms().len());
    let belief = sc.belief()?;
    let primitives = generate_primitives(&sc.primitives)?;
    let planner = Planner::new(&dfa, safety, &belief, &primitives, sc.planner_config())?;
    let plan = planner.plan(&sc.start)?;
    let _ = writeln!(
        log,
        "decision: {:?}, motion cost {:.6} m, expected cost {:.6}, {} expansions",
        plan.decision, plan.motion_cost, plan.expected_cost, plan.stats.expansions
    );

    if opts.oracle {
        let exact = planner.oracle(&sc.start)?;
        let s0 = planner.start_state(&sc.start)?;
        let dijkstra = s0.and_then(|s| exact.get(&s)).map(|c| c.0);
        let (found, _) = planner.search_unbounded(&sc.start)?;
        let astar = found.map(|f| f.2 .0);
        if astar != dijkstra {
            return Err(PipelineError::OracleMismatch { astar, dijkstra });
        }
        let _ = writeln!(log, "oracle: optimal cost confirmed over {} product states", exact.len());
    }

    if plan.decision == Decision::Execute {
        let qs: Vec<_> = plan.trajectory.iter().map(|t| t.q).collect();
        let drops = level_violations(&dfa, &qs);
        if drops > 0 {
            return Err(PipelineError::Replay(format!("{drops} steps lower the level by more than one")));
        }
        let poses: Vec<_> = plan.trajectory.iter().map(|t| t.pose).collect();
        let r = replay(&poses, &dfa, safety, planner.system().labeler());
        if r.cost != plan.cost || !r.accepted || !r.safe || r.states != qs {
            return Err(PipelineError::Replay(format!(
                "cost {} vs {}, accepted {}, safe {}",
                r.cost.0, plan.cost.0, r.accepted, r.safe
            )));
        }
    }

    let n = opts.verify.unwrap_or(sc.verify_samples);
    let report = if plan.decision == Decision::Execute && n > 0 {
        let positions = plan.positions();
        let threads = opts.threads.max(1) as u64;
        let chunk = n.div_ceil(threads);
        let counts = thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let range = (t * chunk).min(n)..((t + 1) * chunk).min(n);
                    let (positions, belief, dfa) = (&positions, &belief, &dfa);
                    s.spawn(move || count_samples(positions, belief, dfa, safety, sc.delta, sc.seed, range))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("verification worker panicked"))
                .try_fold(SampleCounts::default(), |acc, c| c.map(|c| acc + c))
        })?;
        let r = VerificationReport::from_counts(counts, sc.delta, DEFAULT_SLACK);
        let _ = writeln!(log, "{}", r.summary_line());
        Some(r)
    } else {
        None
    };

    let plan_text = write_plan(&plan, report.as_ref());
    let dfa_dump = opts.dump_dfa.then(|| dfa.dump());
    let svg = if opts.plot { Some(svg::render(&belief, sc.delta, sc.bounds, dfa.atoms(), Some(&plan))?) } else { None };
    Ok(RunOutput { plan, report, plan_text, dfa_dump, svg, log })
}
