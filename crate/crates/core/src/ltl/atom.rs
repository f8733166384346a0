//! Atomic propositions over robot position and landmark map.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

/// An atomic proposition.
///
/// Landmark indices are zero-based internally; the concrete formula syntax
/// and every printed form count landmarks from 1.
#[derive(Clone, Debug)]
pub enum AtomicProp {
    /// Robot position within `radius` meters of the landmark (closed ball).
    Near { landmark: usize, radius: f64 },
    /// The landmark's class belongs to `classes`.
    ClassIs {
        landmark: usize,
        classes: BTreeSet<String>,
    },
}

impl AtomicProp {
    /// Returns `None` unless `radius` is positive and finite.
    pub fn near(landmark: usize, radius: f64) -> Option<Self> {
        (radius.is_finite() && radius > 0.0).then_some(AtomicProp::Near { landmark, radius })
    }

    /// Returns `None` for an empty class set.
    pub fn class_is<I, S>(landmark: usize, classes: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let classes: BTreeSet<String> = classes.into_iter().map(Into::into).collect();
        (!classes.is_empty()).then_some(AtomicProp::ClassIs { landmark, classes })
    }

    pub fn landmark(&self) -> usize {
        match self {
            AtomicProp::Near { landmark, .. } | AtomicProp::ClassIs { landmark, .. } => *landmark,
        }
    }

    pub fn is_distance_atom(&self) -> bool {
        matches!(self, AtomicProp::Near { .. })
    }
}

impl PartialEq for AtomicProp {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (
                AtomicProp::Near { landmark: a, radius: ra },
                AtomicProp::Near { landmark: b, radius: rb },
            ) => a == b && ra.to_bits() == rb.to_bits(),
            (
                AtomicProp::ClassIs { landmark: a, classes: ca },
                AtomicProp::ClassIs { landmark: b, classes: cb },
            ) => a == b && ca == cb,
            _ => false,
        }
    }
}

impl Eq for AtomicProp {}

impl Hash for AtomicProp {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            AtomicProp::Near { landmark, radius } => {
                0u8.hash(state);
                landmark.hash(state);
                radius.to_bits().hash(state);
            }
            AtomicProp::ClassIs { landmark, classes } => {
                1u8.hash(state);
                landmark.hash(state);
                classes.hash(state);
            }
        }
    }
}

impl fmt::Display for AtomicProp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomicProp::Near { landmark, radius } => write!(f, "near({}, {})", landmark + 1, radius),
            AtomicProp::ClassIs { landmark, classes } => {
                write!(f, "class({}, {{", landmark + 1)?;
                for (i, c) in classes.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "}})")
            }
        }
    }
}
