//! True and δ-confident labeling of robot positions.

use crate::ltl::{AtomicProp, Label, Node, NodeKind};
use crate::map::{ConfidenceEllipse, MapBelief, MapError, SampledMap, Vec2};

/// Distances within this of a radius are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Three-valued truth, ordered `False < Unknown < True`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Truth {
    False,
    Unknown,
    True,
}

impl Truth {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }

    pub fn not(self) -> Self {
        match self {
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
            Truth::True => Truth::False,
        }
    }
}

fn check_atoms(atoms: &[AtomicProp], n: usize) -> Result<(), MapError> {
    match atoms.iter().find(|a| a.landmark() >= n) {
        Some(a) => Err(MapError::UnknownLandmark(a.landmark())),
        None => Ok(()),
    }
}

/// Truth of an atom on a concrete map. Distance balls are closed.
pub fn atom_true(x: &Vec2, m: &SampledMap, atom: &AtomicProp) -> bool {
    match atom {
        AtomicProp::Near { landmark, radius } => (x - m.poses[*landmark]).norm() <= *radius,
        AtomicProp::ClassIs { landmark, classes } => classes.contains(&m.classes[*landmark]),
    }
}

/// Label of `x` on a concrete map, with label indices referring to `atoms`.
pub fn label_true(x: &Vec2, m: &SampledMap, atoms: &[AtomicProp]) -> Label {
    atoms
        .iter()
        .enumerate()
        .filter(|(_, a)| atom_true(x, m, a))
        .map(|(i, _)| i)
        .collect()
}

/// Kleene evaluation of a propositional formula.
pub fn eval3(node: &Node, atom: &dyn Fn(&AtomicProp) -> Truth) -> Truth {
    match &node.kind {
        NodeKind::True => Truth::True,
        NodeKind::False => Truth::False,
        NodeKind::Atom(a) => atom(a),
        NodeKind::Not(a) => eval3(a, atom).not(),
        NodeKind::And(a, b) => eval3(a, atom).min(eval3(b, atom)),
        NodeKind::Or(a, b) => eval3(a, atom).max(eval3(b, atom)),
        NodeKind::Eventually(_) | NodeKind::Always(_) => {
            panic!("temporal operator in a propositional formula")
        }
    }
}

/// δ-confident labeling against a fixed belief.
///
/// Holds the confidence ellipses so repeated queries only pay for the
/// distance bounds.
#[derive(Clone, Debug)]
pub struct ConfidentLabeler {
    ellipses: Vec<ConfidenceEllipse>,
    classes: Vec<String>,
    delta: f64,
}

impl ConfidentLabeler {
    pub fn new(belief: &MapBelief, delta: f64) -> Result<Self, MapError> {
        Ok(ConfidentLabeler {
            ellipses: belief.ellipses(delta)?,
            classes: belief.landmarks().iter().map(|l| l.class.clone()).collect(),
            delta,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn ellipse(&self, landmark: usize) -> &ConfidenceEllipse {
        &self.ellipses[landmark]
    }

    pub fn check_atoms(&self, atoms: &[AtomicProp]) -> Result<(), MapError> {
        check_atoms(atoms, self.ellipses.len())
    }

    /// Whether the atom holds at `x` for every map in the confidence region.
    pub fn atom(&self, x: &Vec2, atom: &AtomicProp) -> Truth {
        match atom {
            AtomicProp::ClassIs { landmark, classes } => {
                Truth::from_bool(classes.contains(&self.classes[*landmark]))
            }
            AtomicProp::Near { landmark, radius } => {
                let e = &self.ellipses[*landmark];
                let r = *radius;
                let d = (x - e.center).norm();
                if e.is_point() {
                    // A single map: no ambiguity to guard against.
                    return Truth::from_bool(d <= r);
                }
                let major = e.semi_axes.0;
                if d - major > r + TIE_TOLERANCE {
                    return Truth::False;
                }
                if d + major <= r - TIE_TOLERANCE {
                    return Truth::True;
                }
                let (lo, hi) = e.dist_bounds(x);
                if hi <= r - TIE_TOLERANCE {
                    Truth::True
                } else if lo > r + TIE_TOLERANCE {
                    Truth::False
                } else {
                    Truth::Unknown
                }
            }
        }
    }

    /// `L^δ(x)`: the mean-map label if every atom is decided, otherwise ∅.
    pub fn label(&self, x: &Vec2, atoms: &[AtomicProp]) -> Label {
        let mut out = Label::empty();
        for (i, a) in atoms.iter().enumerate() {
            match self.atom(x, a) {
                Truth::True => out.insert(i),
                Truth::False => {}
                Truth::Unknown => return Label::empty(),
            }
        }
        out
    }

    pub fn label_sequence<'a>(
        &self,
        xs: impl IntoIterator<Item = &'a Vec2>,
        atoms: &[AtomicProp],
    ) -> Vec<Label> {
        xs.into_iter().map(|x| self.label(x, atoms)).collect()
    }

    /// True unless `phi_safe` holds at `x` on every map in the region.
    pub fn safety_possibly_violated(&self, x: &Vec2, phi_safe: &Node) -> bool {
        eval3(phi_safe, &|a| self.atom(x, a)) != Truth::True
    }
}

pub fn label_confident(
    x: &Vec2,
    belief: &MapBelief,
    delta: f64,
    atoms: &[AtomicProp],
) -> Result<Label, MapError> {
    let l = ConfidentLabeler::new(belief, delta)?;
    l.check_atoms(atoms)?;
    Ok(l.label(x, atoms))
}

pub fn label_sequence_confident(
    traj: &[Vec2],
    belief: &MapBelief,
    delta: f64,
    atoms: &[AtomicProp],
) -> Result<Vec<Label>, MapError> {
    let l = ConfidentLabeler::new(belief, delta)?;
    l.check_atoms(atoms)?;
    Ok(l.label_sequence(traj, atoms))
}

pub fn safety_possibly_violated(
    x: &Vec2,
    belief: &MapBelief,
    delta: f64,
    phi_safe: &Node,
) -> Result<bool, MapError> {
    let l = ConfidentLabeler::new(belief, delta)?;
    let mut atoms = Vec::new();
    phi_safe.visit_atoms(&mut |a| atoms.push(a.clone()));
    l.check_atoms(&atoms)?;
    Ok(l.safety_possibly_violated(x, phi_safe))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse;
    use crate::map::Landmark;
    use nalgebra::Matrix2;

    fn belief() -> MapBelief {
        MapBelief::new(vec![
            Landmark::new(Vec2::new(0.0, 0.0), Matrix2::identity() * 0.25, "Tri"),
            Landmark::new(Vec2::new(10.0, 0.0), Matrix2::zeros(), "Sq"),
        ])
        .unwrap()
    }

    fn near(i: usize, r: f64) -> AtomicProp {
        AtomicProp::near(i, r).unwrap()
    }

    #[test]
    fn closed_ball_on_true_map() {
        let m = belief().sample(0);
        let atoms = [near(1, 1.0), AtomicProp::class_is(0, ["Tri"]).unwrap()];
        assert_eq!(label_true(&Vec2::new(11.0, 0.0), &m, &atoms), [0, 1].into_iter().collect());
        assert_eq!(label_true(&Vec2::new(11.5, 0.0), &m, &atoms), [1].into_iter().collect());
    }

    #[test]
    fn ambiguity_collapses_whole_label() {
        let b = belief();
        let atoms = [near(0, 1.0), AtomicProp::class_is(1, ["Sq"]).unwrap()];
        // Radius of the 95% circle is 0.5 * 2.4477 = 1.22 > 1.
        let l = label_confident(&Vec2::new(0.0, 0.0), &b, 0.95, &atoms).unwrap();
        assert!(l.is_empty());
        let far = label_confident(&Vec2::new(5.0, 0.0), &b, 0.95, &atoms).unwrap();
        assert_eq!(far, [1].into_iter().collect());
        let wide = [near(0, 3.0)];
        assert_eq!(label_confident(&Vec2::new(0.5, 0.0), &b, 0.95, &wide).unwrap(), [0].into_iter().collect());
    }

    #[test]
    fn point_landmark_is_exact() {
        let b = belief();
        let atoms = [near(1, 2.0)];
        assert_eq!(label_confident(&Vec2::new(12.0, 0.0), &b, 0.9, &atoms).unwrap().len(), 1);
        assert!(label_confident(&Vec2::new(12.1, 0.0), &b, 0.9, &atoms).unwrap().is_empty());
    }

    #[test]
    fn safety_three_valued() {
        let b = belief();
        let f = parse("G !near(1, 1)").unwrap();
        let safe = f.safety.unwrap();
        assert!(safety_possibly_violated(&Vec2::new(0.0, 0.0), &b, 0.95, &safe).unwrap());
        assert!(safety_possibly_violated(&Vec2::new(1.5, 0.0), &b, 0.95, &safe).unwrap());
        assert!(!safety_possibly_violated(&Vec2::new(3.0, 0.0), &b, 0.95, &safe).unwrap());
        // Kleene evaluation over-approximates: a tautology over an ambiguous
        // atom is still flagged.
        let taut = parse("G (near(1,1) | !near(1,1))").unwrap().safety.unwrap();
        assert!(safety_possibly_violated(&Vec2::new(1.5, 0.0), &b, 0.95, &taut).unwrap());
    }

    #[test]
    fn unknown_landmark_is_an_error() {
        assert_eq!(
            label_confident(&Vec2::zeros(), &belief(), 0.9, &[near(5, 1.0)]),
            Err(MapError::UnknownLandmark(5))
        );
    }
}
