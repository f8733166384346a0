//! Shared test support: an independent formula representation with
//! brute-force finite-trace semantics, random grammar formulas and random
//! scenarios.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{Matrix2, Rotation2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ltlplan::ltl::{compile, parse, AtomicProp, Dfa, Label};
use ltlplan::map::{Landmark, Vec2};
use ltlplan::planner::WorldBounds;
use ltlplan::scenario::Scenario;
use ltlplan::vehicle::{PrimitiveConfig, RobotState};

pub const CLASSES: [&str; 5] = ["Sq", "Cir", "Hex", "Dia", "Tri"];

/// Test-side formula tree. Atoms index into a caller-provided atom list.
#[derive(Clone, Debug)]
pub enum Tf {
    Atom(usize),
    And(Box<Tf>, Box<Tf>),
    Or(Box<Tf>, Box<Tf>),
    F(Box<Tf>),
}

impl Tf {
    pub fn and(a: Tf, b: Tf) -> Tf {
        Tf::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Tf, b: Tf) -> Tf {
        Tf::Or(Box::new(a), Box::new(b))
    }

    pub fn f(a: Tf) -> Tf {
        Tf::F(Box::new(a))
    }

    pub fn render(&self, atoms: &[String]) -> String {
        match self {
            Tf::Atom(i) => atoms[*i].clone(),
            Tf::And(a, b) => format!("({} & {})", a.render(atoms), b.render(atoms)),
            Tf::Or(a, b) => format!("({} | {})", a.render(atoms), b.render(atoms)),
            Tf::F(a) => format!("F {}", a.render(atoms)),
        }
    }

    /// Finite-trace truth at position `i` of `word` (letters are bitmasks
    /// over atom indices). Positions past the end satisfy nothing.
    pub fn holds(&self, word: &[u32], i: usize) -> bool {
        match self {
            Tf::Atom(a) => i < word.len() && word[i] >> a & 1 == 1,
            Tf::And(a, b) => a.holds(word, i) && b.holds(word, i),
            Tf::Or(a, b) => a.holds(word, i) || b.holds(word, i),
            Tf::F(a) => (i..word.len()).any(|j| a.holds(word, j)),
        }
    }

    pub fn atoms_used(&self, out: &mut Vec<usize>) {
        match self {
            Tf::Atom(i) => {
                if !out.contains(i) {
                    out.push(*i)
                }
            }
            Tf::And(a, b) | Tf::Or(a, b) => {
                a.atoms_used(out);
                b.atoms_used(out);
            }
            Tf::F(a) => a.atoms_used(out),
        }
    }
}

#[derive(Clone, Copy)]
enum Op {
    Atom(usize),
    And(usize, usize),
    Or(usize, usize),
    F(usize),
}

/// Truth values of every subformula on a suffix, extended one letter at a
/// time from the back.
pub struct SuffixEval {
    ops: Vec<Op>,
}

impl SuffixEval {
    pub fn new(f: &Tf) -> Self {
        fn flat(t: &Tf, ops: &mut Vec<Op>) -> usize {
            let op = match t {
                Tf::Atom(a) => Op::Atom(*a),
                Tf::And(a, b) => Op::And(flat(a, ops), flat(b, ops)),
                Tf::Or(a, b) => Op::Or(flat(a, ops), flat(b, ops)),
                Tf::F(a) => Op::F(flat(a, ops)),
            };
            ops.push(op);
            ops.len() - 1
        }
        let mut ops = Vec::new();
        flat(f, &mut ops);
        SuffixEval { ops }
    }

    /// Values on the empty suffix.
    pub fn empty(&self) -> Vec<bool> {
        vec![false; self.ops.len()]
    }

    /// Values on `letter · tail` given the values on `tail`.
    pub fn prepend(&self, letter: u32, tail: &[bool]) -> Vec<bool> {
        let mut v = vec![false; self.ops.len()];
        for (k, op) in self.ops.iter().enumerate() {
            v[k] = match *op {
                Op::Atom(a) => letter >> a & 1 == 1,
                Op::And(a, b) => v[a] && v[b],
                Op::Or(a, b) => v[a] || v[b],
                Op::F(a) => v[a] || tail[k],
            };
        }
        v
    }
}

/// Calls `f(reversed_word, truth)` for every word over `letters` letters
/// with length at most `max_len`, where `truth` is the formula's value at
/// position 0. The word is passed back to front.
pub fn for_all_words(tf: &Tf, letters: u32, max_len: usize, f: impl FnMut(&[u32], bool)) {
    let alphabet: Vec<u32> = (0..letters).collect();
    for_all_words_over(tf, &alphabet, max_len, f)
}

/// Same as [`for_all_words`] over an explicit alphabet of letter masks.
pub fn for_all_words_over(tf: &Tf, alphabet: &[u32], max_len: usize, mut f: impl FnMut(&[u32], bool)) {
    let ev = SuffixEval::new(tf);
    let mut rev = Vec::new();
    let base = ev.empty();
    f(&[], *base.last().unwrap());
    rec(&ev, alphabet, max_len, &mut rev, &base, &mut f);

    fn rec(
        ev: &SuffixEval,
        alphabet: &[u32],
        max_len: usize,
        rev: &mut Vec<u32>,
        tail: &[bool],
        f: &mut impl FnMut(&[u32], bool),
    ) {
        if rev.len() == max_len {
            return;
        }
        for &a in alphabet {
            let v = ev.prepend(a, tail);
            rev.push(a);
            f(rev, *v.last().unwrap());
            rec(ev, alphabet, max_len, rev, &v, f);
            rev.pop();
        }
    }
}

pub fn gen_prop(rng: &mut ChaCha8Rng, natoms: usize, depth: u32) -> Tf {
    if depth == 0 || rng.random_bool(0.5) {
        return Tf::Atom(rng.random_range(0..natoms));
    }
    let a = gen_prop(rng, natoms, depth - 1);
    let b = gen_prop(rng, natoms, depth - 1);
    if rng.random_bool(0.5) {
        Tf::and(a, b)
    } else {
        Tf::or(a, b)
    }
}

/// `prop | F seq | F (seq & F seq)`; a bare proposition only where allowed.
pub fn gen_seq(rng: &mut ChaCha8Rng, natoms: usize, depth: u32, allow_prop: bool) -> Tf {
    let pick = if depth == 0 { 0 } else { rng.random_range(0..3) };
    match pick {
        0 if allow_prop => gen_prop(rng, natoms, 1),
        0 => Tf::f(gen_prop(rng, natoms, 1)),
        1 => Tf::f(gen_seq(rng, natoms, depth - 1, true)),
        _ => {
            let a = gen_seq(rng, natoms, depth - 1, true);
            let b = gen_seq(rng, natoms, depth - 1, true);
            Tf::f(Tf::and(a, Tf::f(b)))
        }
    }
}

/// `F prop | reach & reach | reach | reach`.
pub fn gen_reach(rng: &mut ChaCha8Rng, natoms: usize, depth: u32) -> Tf {
    if depth == 0 || rng.random_bool(0.5) {
        return Tf::f(gen_prop(rng, natoms, 1));
    }
    let a = gen_reach(rng, natoms, depth - 1);
    let b = gen_reach(rng, natoms, depth - 1);
    if rng.random_bool(0.5) {
        Tf::and(a, b)
    } else {
        Tf::or(a, b)
    }
}

/// A random progress formula in the supported grammar with no bare
/// proposition at the top level.
pub fn gen_task(rng: &mut ChaCha8Rng, natoms: usize, depth: u32) -> Tf {
    let pick = if depth == 0 { rng.random_range(0..2) } else { rng.random_range(0..4) };
    match pick {
        0 => gen_reach(rng, natoms, depth.min(2)),
        1 => gen_seq(rng, natoms, depth.min(2), false),
        2 => Tf::and(gen_task(rng, natoms, depth - 1), gen_task(rng, natoms, depth - 1)),
        _ => Tf::or(gen_task(rng, natoms, depth - 1), gen_task(rng, natoms, depth - 1)),
    }
}

/// Default atom texts for semantic tests.
pub fn atom_texts() -> Vec<String> {
    vec!["near(1,1)".into(), "near(2,1.5)".into(), "class(1,Sq)".into()]
}

pub fn atom_of(text: &str) -> AtomicProp {
    let f = parse(&format!("F {text}")).unwrap();
    let mut found = None;
    f.progress.as_ref().unwrap().visit_atoms(&mut |a| found = Some(a.clone()));
    found.unwrap()
}

/// Compiles `tf` and returns the automaton with the map from test atom
/// index to automaton atom index.
pub fn compile_tf(tf: &Tf, atoms: &[String]) -> (Dfa, Vec<Option<usize>>) {
    let dfa = compile(&parse(&tf.render(atoms)).unwrap()).unwrap();
    let map = atoms
        .iter()
        .map(|t| {
            let a = atom_of(t);
            dfa.atoms().iter().position(|x| *x == a)
        })
        .collect();
    (dfa, map)
}

pub fn to_label(letter: u32, map: &[Option<usize>]) -> Label {
    map.iter()
        .enumerate()
        .filter(|(i, _)| letter >> i & 1 == 1)
        .filter_map(|(_, m)| *m)
        .collect()
}

/// `table[q][letter]` for letters given as bitmasks over test atoms.
pub fn transition_table(dfa: &Dfa, map: &[Option<usize>]) -> Vec<Vec<usize>> {
    let letters = 1u32 << map.len();
    (0..dfa.num_states())
        .map(|q| (0..letters).map(|l| dfa.step(q, &to_label(l, map))).collect())
        .collect()
}

pub fn random_cov(rng: &mut ChaCha8Rng) -> Matrix2<f64> {
    if rng.random_bool(0.1) {
        return Matrix2::zeros();
    }
    let a = rng.random_range(0.005..0.25);
    let b = rng.random_range(0.005..0.25);
    let r = Rotation2::new(rng.random_range(0.0..PI)).into_inner();
    r * Matrix2::new(a, 0.0, 0.0, b) * r.transpose()
}

/// Random planning scenario: a 20 to 40 m square world, 2 to 6 landmarks, a
/// grammar task over three atoms and, when `safety` is set, an avoidance
/// constraint.
pub fn random_scenario(seed: u64, safety: bool) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rng.random_range(20..=40) as f64;
    let bounds = WorldBounds { xmin: 0.0, xmax: w, ymin: 0.0, ymax: w };
    let start = RobotState::new(
        rng.random_range(1.0..w - 1.0),
        rng.random_range(1.0..w - 1.0),
        rng.random_range(-PI..PI),
    );
    let mut sc = Scenario::new(bounds, start);
    let n = rng.random_range(2..=6);
    for _ in 0..n {
        let mean = Vec2::new(rng.random_range(2.0..w - 2.0), rng.random_range(2.0..w - 2.0));
        let class = CLASSES[rng.random_range(0..CLASSES.len())];
        sc.landmarks.push(Landmark::new(mean, random_cov(&mut rng), class));
    }
    let radii = [1.5, 2.0, 2.5];
    let atoms: Vec<String> = (0..3)
        .map(|_| {
            let i = rng.random_range(0..n);
            if rng.random_bool(0.8) {
                format!("near({},{})", i + 1, radii[rng.random_range(0..3)])
            } else {
                format!("class({},{})", i + 1, CLASSES[rng.random_range(0..CLASSES.len())])
            }
        })
        .collect();
    let tf = gen_task(&mut rng, atoms.len(), 1);
    sc.task = tf.render(&atoms);
    if safety {
        let j = rng.random_range(0..n);
        sc.task = format!("{} & G !near({},{:.2})", sc.task, j + 1, rng.random_range(0.5..1.5));
    }
    sc.resolution = 1.0;
    sc.theta_bins = 16;
    sc.primitives = PrimitiveConfig { count: 12, radius: 4.0, steps: 2, ..PrimitiveConfig::default() };
    sc.verify_samples = 1000;
    sc.seed = seed;
    sc
}

/// Positions of a random primitive walk, start included.
pub fn random_walk(rng: &mut ChaCha8Rng, start: RobotState, prims: &[ltlplan::vehicle::MotionPrimitive], steps: usize) -> Vec<Vec2> {
    let mut s = start;
    let mut out = vec![s.position()];
    for _ in 0..steps {
        let p = &prims[rng.random_range(0..prims.len())];
        let (end, poses, _) = ltlplan::vehicle::apply_primitive(s, p);
        out.extend(poses.iter().map(|p| p.position()));
        s = end;
    }
    out
}
