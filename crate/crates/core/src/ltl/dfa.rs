//! Deterministic finite automata with BDD edge guards.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use thiserror::Error;

use super::atom::AtomicProp;
use super::bdd::{Bdd, BddRef};
use super::label::Label;

pub type StateId = usize;

/// Backward distance of a state from the accepting set.
///
/// `Finite(0)` is exactly the accepting set; `Infinite` marks states from
/// which no accepting state is reachable. Variant order makes every finite
/// level compare below `Infinite`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Finite(u32),
    Infinite,
}

impl Level {
    pub fn finite(self) -> Option<u32> {
        match self {
            Level::Finite(l) => Some(l),
            Level::Infinite => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Finite(l) => write!(f, "{l}"),
            Level::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub guard: BddRef,
    pub target: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DfaError {
    #[error("automaton has no states")]
    NoStates,
    #[error("state {state} has an edge to unknown state {target}")]
    UnknownTarget { state: StateId, target: StateId },
    #[error("initial state {0} does not exist")]
    UnknownInitial(StateId),
    #[error("state {state}: some label satisfies no outgoing guard")]
    NotTotal { state: StateId },
    #[error("state {state}: some label satisfies more than one outgoing guard")]
    Nondeterministic { state: StateId },
    #[error("state {state}: the empty label moves to {target}; progress formulas must be negation-free")]
    EmptyLabelMoves { state: StateId, target: StateId },
    #[error("accepting state {state} can leave the accepting set")]
    AcceptingNotAbsorbing { state: StateId },
}

/// Total deterministic automaton over labels, immutable once built.
#[derive(Clone, Debug)]
pub struct Dfa {
    atoms: Vec<AtomicProp>,
    bdd: Bdd,
    edges: Vec<Vec<Edge>>,
    initial: StateId,
    accepting: Vec<bool>,
    levels: Vec<Level>,
}

impl Dfa {
    /// Assembles an automaton, checking totality and determinism of the
    /// guards and computing the level map.
    ///
    /// Guards are BDDs over indices into `atoms`, allocated in `bdd`.
    /// Edges with unsatisfiable guards are dropped.
    pub fn from_parts(
        atoms: Vec<AtomicProp>,
        mut bdd: Bdd,
        edges: Vec<Vec<Edge>>,
        initial: StateId,
        accepting: Vec<bool>,
    ) -> Result<Self, DfaError> {
        let n = edges.len();
        if n == 0 {
            return Err(DfaError::NoStates);
        }
        if initial >= n {
            return Err(DfaError::UnknownInitial(initial));
        }
        assert_eq!(accepting.len(), n, "one acceptance flag per state");
        let mut clean = Vec::with_capacity(n);
        for (q, out) in edges.into_iter().enumerate() {
            let mut union = BddRef::FALSE;
            let mut kept: Vec<Edge> = Vec::new();
            for e in out {
                if e.target >= n {
                    return Err(DfaError::UnknownTarget { state: q, target: e.target });
                }
                if e.guard == BddRef::FALSE {
                    continue;
                }
                if bdd.and(union, e.guard) != BddRef::FALSE {
                    return Err(DfaError::Nondeterministic { state: q });
                }
                union = bdd.or(union, e.guard);
                kept.push(e);
            }
            if union != BddRef::TRUE {
                return Err(DfaError::NotTotal { state: q });
            }
            clean.push(kept);
        }
        let levels = compute_levels(&clean, &accepting);
        Ok(Dfa { atoms, bdd, edges: clean, initial, accepting, levels })
    }

    pub fn atoms(&self) -> &[AtomicProp] {
        &self.atoms
    }

    pub fn bdd(&self) -> &Bdd {
        &self.bdd
    }

    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting[q]
    }

    pub fn level(&self, q: StateId) -> Level {
        self.levels[q]
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn edges(&self, q: StateId) -> &[Edge] {
        &self.edges[q]
    }

    /// Successor of `q` when atom `i` holds iff `truth(i)`.
    pub fn step_with(&self, q: StateId, truth: impl Fn(usize) -> bool) -> StateId {
        self.edges[q]
            .iter()
            .find(|e| self.bdd.eval(e.guard, &truth))
            .map(|e| e.target)
            // Totality is checked in `from_parts`.
            .expect("automaton is total")
    }

    pub fn step(&self, q: StateId, label: &Label) -> StateId {
        self.step_with(q, |a| label.contains(a))
    }

    pub fn run<'a>(&self, q: StateId, word: impl IntoIterator<Item = &'a Label>) -> StateId {
        word.into_iter().fold(q, |q, a| self.step(q, a))
    }

    pub fn accepts<'a>(&self, word: impl IntoIterator<Item = &'a Label>) -> bool {
        self.accepting[self.run(self.initial, word)]
    }

    /// Checks `T(q, ∅) = q` for every state.
    pub fn check_empty_label_self_loops(&self) -> Result<(), DfaError> {
        for q in 0..self.num_states() {
            let target = self.step_with(q, |_| false);
            if target != q {
                return Err(DfaError::EmptyLabelMoves { state: q, target });
            }
        }
        Ok(())
    }

    /// Checks that no edge leaves the accepting set.
    pub fn check_accepting_absorbing(&self) -> Result<(), DfaError> {
        for q in (0..self.num_states()).filter(|&q| self.accepting[q]) {
            if self.edges[q].iter().any(|e| !self.accepting[e.target]) {
                return Err(DfaError::AcceptingNotAbsorbing { state: q });
            }
        }
        Ok(())
    }

    /// States reachable from the initial state, in breadth-first order.
    pub fn reachable(&self) -> Vec<StateId> {
        let mut seen = vec![false; self.num_states()];
        let mut order = vec![self.initial];
        seen[self.initial] = true;
        let mut i = 0;
        while i < order.len() {
            for e in &self.edges[order[i]] {
                if !seen[e.target] {
                    seen[e.target] = true;
                    order.push(e.target);
                }
            }
            i += 1;
        }
        order
    }

    /// Human-readable guard in disjunctive form.
    pub fn guard_to_string(&self, guard: BddRef) -> String {
        match guard {
            BddRef::TRUE => return "true".into(),
            BddRef::FALSE => return "false".into(),
            _ => {}
        }
        let cubes = self.bdd.cubes(guard);
        let many = cubes.len() > 1;
        let terms: Vec<String> = cubes
            .iter()
            .map(|cube| {
                let lits: Vec<String> = cube
                    .iter()
                    .map(|&(v, pos)| format!("{}{}", if pos { "" } else { "!" }, self.atoms[v]))
                    .collect();
                if many && lits.len() > 1 {
                    format!("({})", lits.join(" & "))
                } else {
                    lits.join(" & ")
                }
            })
            .collect();
        terms.join(" | ")
    }

    /// Line-oriented dump: one `state | level | guard -> successor` line per edge.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let accepting: Vec<String> = (0..self.num_states())
            .filter(|&q| self.accepting[q])
            .map(|q| q.to_string())
            .collect();
        let _ = writeln!(
            out,
            "# dfa states={} initial={} accepting={}",
            self.num_states(),
            self.initial,
            accepting.join(",")
        );
        for (i, a) in self.atoms.iter().enumerate() {
            let _ = writeln!(out, "# atom {i} {a}");
        }
        for q in 0..self.num_states() {
            for e in &self.edges[q] {
                let _ = writeln!(
                    out,
                    "{} | {} | {} -> {}",
                    q,
                    self.levels[q],
                    self.guard_to_string(e.guard),
                    e.target
                );
            }
        }
        out
    }
}

/// Level map: `Q_0 = F`, `Q_{i+1}` the unassigned states with an edge into `Q_i`.
pub fn compute_levels(edges: &[Vec<Edge>], accepting: &[bool]) -> Vec<Level> {
    let n = edges.len();
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for (q, out) in edges.iter().enumerate() {
        for e in out {
            if e.guard != BddRef::FALSE {
                preds[e.target].push(q);
            }
        }
    }
    let mut levels = vec![Level::Infinite; n];
    let mut queue = VecDeque::new();
    for q in (0..n).filter(|&q| accepting[q]) {
        levels[q] = Level::Finite(0);
        queue.push_back(q);
    }
    while let Some(q) = queue.pop_front() {
        let Level::Finite(l) = levels[q] else { unreachable!() };
        for &p in &preds[q] {
            if levels[p] == Level::Infinite {
                levels[p] = Level::Finite(l + 1);
                queue.push_back(p);
            }
        }
    }
    levels
}

/// Level map of an automaton.
pub fn levels(dfa: &Dfa) -> Vec<Level> {
    compute_levels(&dfa.edges, &dfa.accepting)
}
