//! Formula to automaton compilation.
//!
//! States are progressed obligations: positive Boolean combinations of
//! "eventually" subformulas (plus, in the initial state only, propositions
//! that must hold at the first position), kept as absorbed DNF. Reading a
//! letter rewrites every `F ψ` to `ψ' ∨ F ψ`, where `ψ'` is `ψ` progressed
//! by the same letter. Letters are enumerated symbolically: the successor
//! only depends on the truth of the distinct propositional leaves, so the
//! outgoing guards come from splitting on those leaves, pruning
//! unsatisfiable combinations. The result is then minimized by partition
//! refinement.
//!
//! A word is accepted once its progressed obligation is trivially true. For
//! negation-free progress formulas that is exactly the set of good prefixes.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use super::ast::{Formula, Node, NodeKind};
use super::atom::AtomicProp;
use super::bdd::{Bdd, BddRef};
use super::dfa::{Dfa, DfaError, Edge, StateId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("compiled automaton is malformed: {0}")]
    Automaton(#[from] DfaError),
    #[error("unsupported construct in progress formula: {0}")]
    Unsupported(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Lit {
    /// Propositional leaf evaluated at the current position.
    Now(u32),
    /// Eventually-subformula obligation.
    Ev(u32),
}

type Term = BTreeSet<Lit>;
type Dnf = BTreeSet<Term>;

fn dnf_true() -> Dnf {
    BTreeSet::from([Term::new()])
}

fn dnf_false() -> Dnf {
    Dnf::new()
}

fn dnf_lit(l: Lit) -> Dnf {
    BTreeSet::from([BTreeSet::from([l])])
}

fn absorb(d: Dnf) -> Dnf {
    let terms: Vec<Term> = d.into_iter().collect();
    terms
        .iter()
        .filter(|t| !terms.iter().any(|u| u != *t && u.is_subset(t)))
        .cloned()
        .collect()
}

fn dnf_or(a: &Dnf, b: &Dnf) -> Dnf {
    absorb(a.union(b).cloned().collect())
}

fn dnf_and(a: &Dnf, b: &Dnf) -> Dnf {
    let mut out = Dnf::new();
    for x in a {
        for y in b {
            out.insert(x.union(y).copied().collect());
        }
    }
    absorb(out)
}

struct Builder {
    bdd: Bdd,
    atoms: Vec<AtomicProp>,
    props: Vec<BddRef>,
    prop_index: HashMap<BddRef, u32>,
    evs: Vec<Dnf>,
    ev_index: HashMap<Dnf, u32>,
    /// Propositional leaves each obligation depends on.
    ev_props: Vec<BTreeSet<u32>>,
}

impl Builder {
    fn atom_var(&mut self, a: &AtomicProp) -> BddRef {
        let idx = match self.atoms.iter().position(|x| x == a) {
            Some(i) => i,
            None => {
                self.atoms.push(a.clone());
                self.atoms.len() - 1
            }
        };
        self.bdd.var(idx)
    }

    fn prop_bdd(&mut self, n: &Node) -> Result<BddRef, CompileError> {
        Ok(match &n.kind {
            NodeKind::True => BddRef::TRUE,
            NodeKind::False => BddRef::FALSE,
            NodeKind::Atom(a) => self.atom_var(a),
            NodeKind::Not(a) => {
                let x = self.prop_bdd(a)?;
                self.bdd.not(x)
            }
            NodeKind::And(a, b) => {
                let x = self.prop_bdd(a)?;
                let y = self.prop_bdd(b)?;
                self.bdd.and(x, y)
            }
            NodeKind::Or(a, b) => {
                let x = self.prop_bdd(a)?;
                let y = self.prop_bdd(b)?;
                self.bdd.or(x, y)
            }
            NodeKind::Eventually(_) | NodeKind::Always(_) => {
                return Err(CompileError::Unsupported(n.to_string()))
            }
        })
    }

    fn to_dnf(&mut self, n: &Node) -> Result<Dnf, CompileError> {
        if n.is_propositional() {
            let g = self.prop_bdd(n)?;
            return Ok(match g {
                BddRef::TRUE => dnf_true(),
                BddRef::FALSE => dnf_false(),
                g => {
                    let next = self.props.len() as u32;
                    let j = *self.prop_index.entry(g).or_insert(next);
                    if j == next {
                        self.props.push(g);
                    }
                    dnf_lit(Lit::Now(j))
                }
            });
        }
        match &n.kind {
            NodeKind::And(a, b) => {
                let x = self.to_dnf(a)?;
                let y = self.to_dnf(b)?;
                Ok(dnf_and(&x, &y))
            }
            NodeKind::Or(a, b) => {
                let x = self.to_dnf(a)?;
                let y = self.to_dnf(b)?;
                Ok(dnf_or(&x, &y))
            }
            NodeKind::Eventually(body) => {
                let d = self.to_dnf(body)?;
                if d.is_empty() || d.contains(&Term::new()) {
                    // F false = false, F true = true
                    return Ok(d);
                }
                let next = self.evs.len() as u32;
                let k = *self.ev_index.entry(d.clone()).or_insert(next);
                if k == next {
                    let props = self.dnf_props(&d);
                    self.evs.push(d);
                    self.ev_props.push(props);
                }
                Ok(dnf_lit(Lit::Ev(k)))
            }
            _ => Err(CompileError::Unsupported(n.to_string())),
        }
    }

    fn dnf_props(&self, d: &Dnf) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for t in d {
            for l in t {
                match *l {
                    Lit::Now(j) => {
                        out.insert(j);
                    }
                    Lit::Ev(k) => out.extend(self.ev_props[k as usize].iter().copied()),
                }
            }
        }
        out
    }

    fn progress(&self, d: &Dnf, letter: &[bool], memo: &mut [Option<Dnf>]) -> Dnf {
        let mut out = dnf_false();
        for term in d {
            let mut acc = dnf_true();
            for lit in term {
                let p = match *lit {
                    Lit::Now(j) => {
                        if letter[j as usize] {
                            dnf_true()
                        } else {
                            dnf_false()
                        }
                    }
                    Lit::Ev(k) => self.progress_ev(k, letter, memo),
                };
                acc = dnf_and(&acc, &p);
                if acc.is_empty() {
                    break;
                }
            }
            out = dnf_or(&out, &acc);
        }
        out
    }

    fn progress_ev(&self, k: u32, letter: &[bool], memo: &mut [Option<Dnf>]) -> Dnf {
        if let Some(d) = &memo[k as usize] {
            return d.clone();
        }
        let body = self.progress(&self.evs[k as usize], letter, memo);
        let d = dnf_or(&body, &dnf_lit(Lit::Ev(k)));
        memo[k as usize] = Some(d.clone());
        d
    }

    /// Splits the letter space on the leaves in `props`, returning each
    /// satisfiable region with a representative truth vector.
    fn letter_regions(&mut self, props: &[u32]) -> Vec<(BddRef, Vec<bool>)> {
        let mut out = Vec::new();
        let mut letter = vec![false; self.props.len()];
        self.split(props, 0, BddRef::TRUE, &mut letter, &mut out);
        out
    }

    fn split(
        &mut self,
        props: &[u32],
        i: usize,
        guard: BddRef,
        letter: &mut Vec<bool>,
        out: &mut Vec<(BddRef, Vec<bool>)>,
    ) {
        if guard == BddRef::FALSE {
            return;
        }
        if i == props.len() {
            out.push((guard, letter.clone()));
            return;
        }
        let j = props[i] as usize;
        let p = self.props[j];
        let np = self.bdd.not(p);
        let g0 = self.bdd.and(guard, np);
        letter[j] = false;
        self.split(props, i + 1, g0, letter, out);
        let g1 = self.bdd.and(guard, p);
        letter[j] = true;
        self.split(props, i + 1, g1, letter, out);
        letter[j] = false;
    }
}

/// Compiles the progress part of `f` into a minimal total automaton.
///
/// The safety conjunct is not part of the automaton; the planner checks it
/// directly on every visited pose.
pub fn compile(f: &Formula) -> Result<Dfa, CompileError> {
    match &f.progress {
        Some(p) => compile_node(p),
        None => compile_node(&Node::bare(NodeKind::True)),
    }
}

/// Compiles a progress formula given as a bare AST node.
pub fn compile_node(root: &Node) -> Result<Dfa, CompileError> {
    // Atoms of one landmark sit next to each other in the variable order,
    // which keeps guards over many landmark pairs small.
    let mut atoms: Vec<AtomicProp> = Vec::new();
    root.visit_atoms(&mut |a| {
        if !atoms.contains(a) {
            atoms.push(a.clone());
        }
    });
    atoms.sort_by_key(|a| a.landmark());
    let mut b = Builder {
        bdd: Bdd::new(),
        atoms,
        props: Vec::new(),
        prop_index: HashMap::new(),
        evs: Vec::new(),
        ev_index: HashMap::new(),
        ev_props: Vec::new(),
    };
    let init = b.to_dnf(root)?;

    let mut states: Vec<Dnf> = vec![init.clone()];
    let mut index: HashMap<Dnf, StateId> = HashMap::from([(init, 0)]);
    let mut edges: Vec<Vec<Edge>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(q) = queue.pop_front() {
        let d = states[q].clone();
        let props: Vec<u32> = b.dnf_props(&d).into_iter().collect();
        let mut by_target: BTreeMap<StateId, BddRef> = BTreeMap::new();
        for (guard, letter) in b.letter_regions(&props) {
            let mut memo = vec![None; b.evs.len()];
            let succ = b.progress(&d, &letter, &mut memo);
            let t = match index.get(&succ) {
                Some(&t) => t,
                None => {
                    let t = states.len();
                    states.push(succ.clone());
                    index.insert(succ, t);
                    queue.push_back(t);
                    t
                }
            };
            let g = by_target.get(&t).copied().unwrap_or(BddRef::FALSE);
            let merged = b.bdd.or(g, guard);
            by_target.insert(t, merged);
        }
        if edges.len() <= q {
            edges.resize(q + 1, Vec::new());
        }
        edges[q] = by_target.into_iter().map(|(target, guard)| Edge { guard, target }).collect();
    }
    edges.resize(states.len(), Vec::new());
    let accepting: Vec<bool> = states.iter().map(|d| d.contains(&Term::new())).collect();

    let (edges, accepting) = minimize(&mut b.bdd, &edges, &accepting, 0);
    let dfa = Dfa::from_parts(b.atoms, b.bdd, edges, 0, accepting)?;
    dfa.check_empty_label_self_loops()?;
    dfa.check_accepting_absorbing()?;
    Ok(dfa)
}

/// Moore-style partition refinement on symbolic edges. Returns the quotient
/// automaton renumbered in breadth-first order from `initial` (which becomes 0),
/// keeping only reachable blocks.
fn minimize(
    bdd: &mut Bdd,
    edges: &[Vec<Edge>],
    accepting: &[bool],
    initial: StateId,
) -> (Vec<Vec<Edge>>, Vec<bool>) {
    let n = edges.len();
    let mut block: Vec<usize> = accepting.iter().map(|&a| usize::from(!a)).collect();
    let mut count = block.iter().copied().collect::<BTreeSet<_>>().len();
    let mut signatures: Vec<Vec<(usize, BddRef)>>;
    loop {
        signatures = (0..n).map(|q| block_signature(bdd, &edges[q], &block)).collect();
        let mut ids: HashMap<(usize, &Vec<(usize, BddRef)>), usize> = HashMap::new();
        let mut next = vec![0; n];
        for q in 0..n {
            let len = ids.len();
            next[q] = *ids.entry((block[q], &signatures[q])).or_insert(len);
        }
        let new_count = ids.len();
        // Stable partition: keep the numbering the signatures refer to.
        if new_count == count {
            break;
        }
        block = next;
        count = new_count;
    }

    // Representative state per block and BFS renumbering.
    let mut rep = vec![usize::MAX; count];
    for q in 0..n {
        if rep[block[q]] == usize::MAX {
            rep[block[q]] = q;
        }
    }
    let mut new_id = vec![usize::MAX; count];
    let mut order = vec![block[initial]];
    new_id[block[initial]] = 0;
    let mut i = 0;
    while i < order.len() {
        let q = rep[order[i]];
        for &(b, _) in &signatures[q] {
            if new_id[b] == usize::MAX {
                new_id[b] = order.len();
                order.push(b);
            }
        }
        i += 1;
    }
    let mut out_edges = Vec::with_capacity(order.len());
    let mut out_acc = Vec::with_capacity(order.len());
    for &b in &order {
        let q = rep[b];
        let mut es: Vec<Edge> = signatures[q]
            .iter()
            .map(|&(tb, guard)| Edge { guard, target: new_id[tb] })
            .collect();
        es.sort_by_key(|e| e.target);
        out_edges.push(es);
        out_acc.push(accepting[q]);
    }
    (out_edges, out_acc)
}

fn block_signature(bdd: &mut Bdd, edges: &[Edge], block: &[usize]) -> Vec<(usize, BddRef)> {
    let mut by_block: BTreeMap<usize, BddRef> = BTreeMap::new();
    for e in edges {
        let g = by_block.get(&block[e.target]).copied().unwrap_or(BddRef::FALSE);
        let merged = bdd.or(g, e.guard);
        by_block.insert(block[e.target], merged);
    }
    by_block.into_iter().collect()
}
