//! Upward-closure check for compiled automata.
//!
//! A language is upward closed under letter insertion when inserting any
//! letter anywhere into an accepted word yields an accepted word. For a
//! minimal automaton that is the same as requiring `L(p) ⊆ L(δ(p, a))` for
//! every reachable state `p` and letter `a`, which is decided here by a
//! product search per edge.

use std::collections::{HashMap, VecDeque};

use super::dfa::{Dfa, StateId};
use super::label::Label;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpwardClosure {
    pub closed: bool,
    /// `(u, a, v)` such that `u·v` is accepted but `u·a·v` is not.
    pub witness: Option<(Vec<Label>, Label, Vec<Label>)>,
}

fn label_of(bits: Vec<usize>) -> Label {
    bits.into_iter().collect()
}

/// Shortest labelled path from the initial state to every reachable state.
fn access_words(dfa: &Dfa) -> HashMap<StateId, Vec<Label>> {
    let mut words = HashMap::from([(dfa.initial(), Vec::new())]);
    let mut queue = VecDeque::from([dfa.initial()]);
    while let Some(q) = queue.pop_front() {
        for e in dfa.edges(q) {
            if words.contains_key(&e.target) {
                continue;
            }
            let Some(bits) = dfa.bdd().any_sat(e.guard) else { continue };
            let mut w = words[&q].clone();
            w.push(label_of(bits));
            words.insert(e.target, w);
            queue.push_back(e.target);
        }
    }
    words
}

/// A word accepted from `p` but rejected from `t`, if one exists.
fn inclusion_counterexample(dfa: &Dfa, p: StateId, t: StateId) -> Option<Vec<Label>> {
    let mut parent: HashMap<(StateId, StateId), Option<((StateId, StateId), Label)>> =
        HashMap::from([((p, t), None)]);
    let mut queue = VecDeque::from([(p, t)]);
    while let Some((a, b)) = queue.pop_front() {
        if dfa.is_accepting(a) && !dfa.is_accepting(b) {
            let mut word = Vec::new();
            let mut cur = (a, b);
            while let Some(Some((prev, l))) = parent.get(&cur) {
                word.push(l.clone());
                cur = *prev;
            }
            word.reverse();
            return Some(word);
        }
        for ea in dfa.edges(a) {
            for eb in dfa.edges(b) {
                let next = (ea.target, eb.target);
                if parent.contains_key(&next) {
                    continue;
                }
                if let Some(bits) = dfa.bdd().sat_and(ea.guard, eb.guard) {
                    parent.insert(next, Some(((a, b), label_of(bits))));
                    queue.push_back(next);
                }
            }
        }
    }
    None
}

pub fn is_upward_closed(dfa: &Dfa) -> UpwardClosure {
    let access = access_words(dfa);
    let mut states: Vec<StateId> = access.keys().copied().collect();
    states.sort_by_key(|q| (access[q].len(), *q));
    for p in states {
        for e in dfa.edges(p) {
            if e.target == p {
                continue;
            }
            if let Some(v) = inclusion_counterexample(dfa, p, e.target) {
                let a = label_of(dfa.bdd().any_sat(e.guard).expect("edge guards are satisfiable"));
                return UpwardClosure {
                    closed: false,
                    witness: Some((access[&p].clone(), a, v)),
                };
            }
        }
    }
    UpwardClosure { closed: true, witness: None }
}
