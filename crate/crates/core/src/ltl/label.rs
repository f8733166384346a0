use std::collections::BTreeSet;
use std::fmt;

/// Set of atoms that hold at one position of a trajectory.
///
/// Atom indices refer to an atom table (usually [`Dfa::atoms`](super::Dfa::atoms)).
/// The empty label carries no information.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(BTreeSet<usize>);

impl Label {
    pub fn empty() -> Self {
        Label(BTreeSet::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.0.contains(&atom)
    }

    pub fn insert(&mut self, atom: usize) {
        self.0.insert(atom);
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

impl FromIterator<usize> for Label {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Label(iter.into_iter().collect())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}
