//! Reduced ordered binary decision diagrams over atom indices.
//!
//! Guards on automaton edges are BDDs, so equal guards share a node and
//! satisfiability is a constant-time check. Variables are ordered by index.
//! A child node always has a smaller id than its parent.

use std::collections::{HashMap, HashSet};

/// Handle to a node inside a [`Bdd`] arena.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BddRef(u32);

impl BddRef {
    pub const FALSE: BddRef = BddRef(0);
    pub const TRUE: BddRef = BddRef(1);

    pub fn is_const(self) -> bool {
        self.0 < 2
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    var: u32,
    lo: BddRef,
    hi: BddRef,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
}

const TERMINAL_VAR: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct Bdd {
    nodes: Vec<Node>,
    unique: HashMap<Node, BddRef>,
    cache: HashMap<(Op, BddRef, BddRef), BddRef>,
    not_cache: HashMap<BddRef, BddRef>,
}

impl Default for Bdd {
    fn default() -> Self {
        Self::new()
    }
}

impl Bdd {
    pub fn new() -> Self {
        let terminal = |v| Node { var: TERMINAL_VAR, lo: BddRef(v), hi: BddRef(v) };
        Bdd {
            nodes: vec![terminal(0), terminal(1)],
            unique: HashMap::new(),
            cache: HashMap::new(),
            not_cache: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 2
    }

    fn mk(&mut self, var: u32, lo: BddRef, hi: BddRef) -> BddRef {
        if lo == hi {
            return lo;
        }
        let node = Node { var, lo, hi };
        if let Some(&r) = self.unique.get(&node) {
            return r;
        }
        let r = BddRef(self.nodes.len() as u32);
        self.nodes.push(node);
        self.unique.insert(node, r);
        r
    }

    pub fn var(&mut self, v: usize) -> BddRef {
        self.mk(v as u32, BddRef::FALSE, BddRef::TRUE)
    }

    pub fn constant(&self, value: bool) -> BddRef {
        if value {
            BddRef::TRUE
        } else {
            BddRef::FALSE
        }
    }

    /// Variable tested at `f`, `None` for terminals.
    pub fn top_var(&self, f: BddRef) -> Option<usize> {
        let n = self.nodes[f.index()];
        (n.var != TERMINAL_VAR).then_some(n.var as usize)
    }

    /// `(low, high)` children of a non-terminal node.
    pub fn children(&self, f: BddRef) -> (BddRef, BddRef) {
        let n = self.nodes[f.index()];
        (n.lo, n.hi)
    }

    fn cofactors(&self, f: BddRef, var: u32) -> (BddRef, BddRef) {
        let n = self.nodes[f.index()];
        if n.var == var {
            (n.lo, n.hi)
        } else {
            (f, f)
        }
    }

    fn apply(&mut self, op: Op, a: BddRef, b: BddRef) -> BddRef {
        match op {
            Op::And => {
                if a == BddRef::FALSE || b == BddRef::FALSE {
                    return BddRef::FALSE;
                }
                if a == BddRef::TRUE {
                    return b;
                }
                if b == BddRef::TRUE || a == b {
                    return a;
                }
            }
            Op::Or => {
                if a == BddRef::TRUE || b == BddRef::TRUE {
                    return BddRef::TRUE;
                }
                if a == BddRef::FALSE {
                    return b;
                }
                if b == BddRef::FALSE || a == b {
                    return a;
                }
            }
        }
        let key = if a <= b { (op, a, b) } else { (op, b, a) };
        if let Some(&r) = self.cache.get(&key) {
            return r;
        }
        let var = self.nodes[a.index()].var.min(self.nodes[b.index()].var);
        let (alo, ahi) = self.cofactors(a, var);
        let (blo, bhi) = self.cofactors(b, var);
        let lo = self.apply(op, alo, blo);
        let hi = self.apply(op, ahi, bhi);
        let r = self.mk(var, lo, hi);
        self.cache.insert(key, r);
        r
    }

    pub fn and(&mut self, a: BddRef, b: BddRef) -> BddRef {
        self.apply(Op::And, a, b)
    }

    pub fn or(&mut self, a: BddRef, b: BddRef) -> BddRef {
        self.apply(Op::Or, a, b)
    }

    pub fn not(&mut self, a: BddRef) -> BddRef {
        match a {
            BddRef::FALSE => return BddRef::TRUE,
            BddRef::TRUE => return BddRef::FALSE,
            _ => {}
        }
        if let Some(&r) = self.not_cache.get(&a) {
            return r;
        }
        let n = self.nodes[a.index()];
        let lo = self.not(n.lo);
        let hi = self.not(n.hi);
        let r = self.mk(n.var, lo, hi);
        self.not_cache.insert(a, r);
        r
    }

    /// Evaluates `f` under the assignment `value(var)`.
    pub fn eval(&self, f: BddRef, value: impl Fn(usize) -> bool) -> bool {
        let mut cur = f;
        while !cur.is_const() {
            let n = self.nodes[cur.index()];
            cur = if value(n.var as usize) { n.hi } else { n.lo };
        }
        cur == BddRef::TRUE
    }

    /// A satisfying assignment of `a ∧ b`, if any, as the set of variables
    /// set to true. Unconstrained variables are left false.
    pub fn sat_and(&self, a: BddRef, b: BddRef) -> Option<Vec<usize>> {
        let mut dead = HashSet::new();
        let mut path = Vec::new();
        self.sat_and_rec(a, b, &mut dead, &mut path).then_some(path)
    }

    fn sat_and_rec(
        &self,
        a: BddRef,
        b: BddRef,
        dead: &mut HashSet<(BddRef, BddRef)>,
        path: &mut Vec<usize>,
    ) -> bool {
        if a == BddRef::FALSE || b == BddRef::FALSE || dead.contains(&(a, b)) {
            return false;
        }
        if a == BddRef::TRUE && b == BddRef::TRUE {
            return true;
        }
        let var = self.nodes[a.index()].var.min(self.nodes[b.index()].var);
        let (alo, ahi) = self.cofactors(a, var);
        let (blo, bhi) = self.cofactors(b, var);
        if self.sat_and_rec(alo, blo, dead, path) {
            return true;
        }
        path.push(var as usize);
        if self.sat_and_rec(ahi, bhi, dead, path) {
            return true;
        }
        path.pop();
        dead.insert((a, b));
        false
    }

    pub fn any_sat(&self, f: BddRef) -> Option<Vec<usize>> {
        self.sat_and(f, BddRef::TRUE)
    }

    /// Nodes reachable from `f`, children before parents.
    pub fn topological(&self, f: BddRef) -> Vec<BddRef> {
        let mut seen = HashSet::new();
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if n.is_const() || !seen.insert(n) {
                continue;
            }
            let node = self.nodes[n.index()];
            stack.push(node.lo);
            stack.push(node.hi);
        }
        let mut out: Vec<BddRef> = seen.into_iter().collect();
        out.sort_unstable();
        out
    }

    /// Variables occurring in `f`, ascending.
    pub fn support(&self, f: BddRef) -> Vec<usize> {
        let mut vars: Vec<usize> = self
            .topological(f)
            .into_iter()
            .map(|n| self.nodes[n.index()].var as usize)
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    /// Disjoint cubes covering `f`: each is a list of `(var, value)` literals.
    pub fn cubes(&self, f: BddRef) -> Vec<Vec<(usize, bool)>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.cubes_rec(f, &mut path, &mut out);
        out
    }

    fn cubes_rec(&self, f: BddRef, path: &mut Vec<(usize, bool)>, out: &mut Vec<Vec<(usize, bool)>>) {
        match f {
            BddRef::FALSE => {}
            BddRef::TRUE => out.push(path.clone()),
            _ => {
                let n = self.nodes[f.index()];
                path.push((n.var as usize, false));
                self.cubes_rec(n.lo, path, out);
                path.pop();
                path.push((n.var as usize, true));
                self.cubes_rec(n.hi, path, out);
                path.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms() {
        let mut b = Bdd::new();
        let x = b.var(0);
        let y = b.var(1);
        let xy = b.and(x, y);
        let yx = b.and(y, x);
        assert_eq!(xy, yx);
        let nx = b.not(x);
        assert_eq!(b.or(x, nx), BddRef::TRUE);
        assert_eq!(b.and(x, nx), BddRef::FALSE);
        // De Morgan.
        let nxy = b.not(xy);
        let ny = b.not(y);
        assert_eq!(nxy, b.or(nx, ny));
    }

    #[test]
    fn eval_and_sat() {
        let mut b = Bdd::new();
        let x = b.var(0);
        let y = b.var(2);
        let ny = b.not(y);
        let f = b.and(x, ny);
        assert!(b.eval(f, |v| v == 0));
        assert!(!b.eval(f, |v| v == 0 || v == 2));
        assert_eq!(b.any_sat(f), Some(vec![0]));
        assert_eq!(b.sat_and(f, y), None);
        assert_eq!(b.support(f), vec![0, 2]);
        assert_eq!(b.any_sat(BddRef::TRUE), Some(vec![]));
        assert_eq!(b.any_sat(BddRef::FALSE), None);
    }

    #[test]
    fn cubes_partition_models() {
        let mut b = Bdd::new();
        let x = b.var(0);
        let y = b.var(1);
        let z = b.var(2);
        let xy = b.and(x, y);
        let f = b.or(xy, z);
        let cubes = b.cubes(f);
        for bits in 0u32..8 {
            let val = |v: usize| bits >> v & 1 == 1;
            let hits = cubes
                .iter()
                .filter(|c| c.iter().all(|&(v, s)| val(v) == s))
                .count();
            assert_eq!(hits, usize::from(b.eval(f, val)));
        }
    }

    #[test]
    fn topological_order_children_first() {
        let mut b = Bdd::new();
        let vars: Vec<_> = (0..4).map(|i| b.var(i)).collect();
        let a = b.and(vars[0], vars[3]);
        let c = b.and(vars[1], vars[2]);
        let f = b.or(a, c);
        let order = b.topological(f);
        for (i, &n) in order.iter().enumerate() {
            let (lo, hi) = b.children(n);
            for child in [lo, hi] {
                if !child.is_const() {
                    assert!(order[..i].contains(&child));
                }
            }
        }
    }
}
