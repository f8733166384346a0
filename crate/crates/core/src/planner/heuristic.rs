//! Level-set heuristic for the product search.
//!
//! From `(x, q)` the run has to take some edge `q -> q'` with `q' != q`
//! before it can finish. Such an edge only fires at a pose whose confident
//! label satisfies its guard, and every distance atom that is confidently
//! true at a pose `y` has `‖y - mean‖ <= r`. The distance from `x` to the
//! nearest pose where some satisfying assignment is possible is therefore a
//! lower bound on the remaining motion cost.

use crate::labeling::{ConfidentLabeler, Truth};
use crate::ltl::bdd::{Bdd, BddRef};
use crate::ltl::{AtomicProp, Dfa, Level, StateId};
use crate::map::Vec2;

pub struct LevelHeuristic<'a> {
    dfa: &'a Dfa,
    /// Guards of the edges the heuristic minimizes over, per state, each
    /// with its nodes in ascending (children first) order.
    guards: Vec<Vec<(BddRef, Vec<BddRef>)>>,
    /// Known truth of class atoms, `None` for distance atoms.
    class_truth: Vec<Option<bool>>,
    /// `(mean, radius)` of distance atoms.
    balls: Vec<Option<(Vec2, f64)>>,
}

impl<'a> LevelHeuristic<'a> {
    pub fn new(dfa: &'a Dfa, labeler: &ConfidentLabeler) -> Self {
        let guards = (0..dfa.num_states())
            .map(|q| {
                dfa.edges(q)
                    .iter()
                    .filter(|e| e.target != q && dfa.level(e.target) <= dfa.level(q))
                    .map(|e| (e.guard, dfa.bdd().topological(e.guard)))
                    .collect()
            })
            .collect();
        let origin = Vec2::zeros();
        let class_truth = dfa
            .atoms()
            .iter()
            .map(|a| match a {
                AtomicProp::ClassIs { .. } => Some(labeler.atom(&origin, a) == Truth::True),
                AtomicProp::Near { .. } => None,
            })
            .collect();
        let balls = dfa
            .atoms()
            .iter()
            .map(|a| match a {
                AtomicProp::Near { landmark, radius } => {
                    Some((labeler.ellipse(*landmark).center, *radius))
                }
                AtomicProp::ClassIs { .. } => None,
            })
            .collect();
        LevelHeuristic { dfa, guards, class_truth, balls }
    }

    /// Lower bound on the remaining cost from position `x` in state `q`, in
    /// meters. `f64::INFINITY` when no accepting state is reachable.
    pub fn value(&self, x: &Vec2, q: StateId) -> f64 {
        if self.dfa.is_accepting(q) {
            return 0.0;
        }
        if self.dfa.level(q) == Level::Infinite {
            return f64::INFINITY;
        }
        let bounds: Vec<f64> = self
            .balls
            .iter()
            .map(|b| b.map_or(0.0, |(c, r)| ((x - c).norm() - r).max(0.0)))
            .collect();
        let bdd = self.dfa.bdd();
        self.guards[q]
            .iter()
            .map(|(g, order)| self.guard_bound(bdd, *g, order, &bounds))
            .fold(f64::INFINITY, f64::min)
    }

    /// Cheapest satisfying assignment of `g`, where setting a distance atom
    /// true costs its bound and a conjunction costs the maximum.
    fn guard_bound(&self, bdd: &Bdd, g: BddRef, order: &[BddRef], bounds: &[f64]) -> f64 {
        let mut val = vec![0.0; order.len()];
        let get = |val: &[f64], n: BddRef| match n {
            BddRef::TRUE => 0.0,
            BddRef::FALSE => f64::INFINITY,
            _ => val[order.binary_search(&n).expect("child precedes parent")],
        };
        for (i, &n) in order.iter().enumerate() {
            let v = bdd.top_var(n).expect("non-terminal");
            let (lo, hi) = bdd.children(n);
            let (l, h) = (get(&val, lo), get(&val, hi));
            val[i] = match self.class_truth[v] {
                Some(true) => h,
                Some(false) => l,
                None => l.min(bounds[v].max(h)),
            };
        }
        get(&val, g)
    }

    /// Checks `h(x, q) <= c + h(x', q')` for one product edge.
    pub fn consistent_on(&self, x: &Vec2, q: StateId, c: f64, x2: &Vec2, q2: StateId) -> bool {
        self.value(x, q) <= c + self.value(x2, q2) + 1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{compile, parse};
    use crate::map::{Landmark, MapBelief};
    use nalgebra::Matrix2;

    fn setup(task: &str) -> (Dfa, ConfidentLabeler) {
        let b = MapBelief::new(vec![
            Landmark::new(Vec2::new(10.0, 0.0), Matrix2::zeros(), "Tri"),
            Landmark::new(Vec2::new(0.0, 20.0), Matrix2::identity(), "Sq"),
        ])
        .unwrap();
        (compile(&parse(task).unwrap()).unwrap(), ConfidentLabeler::new(&b, 0.9).unwrap())
    }

    #[test]
    fn distance_to_mean_ball() {
        let (d, l) = setup("F near(1, 1)");
        let h = LevelHeuristic::new(&d, &l);
        assert_eq!(h.value(&Vec2::zeros(), d.initial()), 9.0);
        assert_eq!(h.value(&Vec2::new(10.5, 0.0), d.initial()), 0.0);
        let acc = (0..d.num_states()).find(|&q| d.is_accepting(q)).unwrap();
        assert_eq!(h.value(&Vec2::zeros(), acc), 0.0);
    }

    #[test]
    fn conjunction_takes_max_and_disjunction_min() {
        let (d, l) = setup("F (near(1, 1) & near(2, 2))");
        let h = LevelHeuristic::new(&d, &l);
        assert_eq!(h.value(&Vec2::zeros(), d.initial()), 18.0);
        let (d, l) = setup("F near(1, 1) | F near(2, 2)");
        let h = LevelHeuristic::new(&d, &l);
        assert_eq!(h.value(&Vec2::zeros(), d.initial()), 9.0);
    }

    #[test]
    fn class_atoms_are_folded() {
        // Landmark 2 is not a triangle, so only the second disjunct can fire.
        let (d, l) = setup("F (near(2, 1) & class(2, Tri)) | F near(1, 1)");
        let h = LevelHeuristic::new(&d, &l);
        assert_eq!(h.value(&Vec2::new(0.0, 20.0), d.initial()), 500f64.sqrt() - 1.0);
    }
}
