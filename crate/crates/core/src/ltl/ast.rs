//! Abstract syntax of task formulas.

use std::fmt;

use super::atom::AtomicProp;

/// Byte range into the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    True,
    False,
    Atom(AtomicProp),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Eventually(Box<Node>),
    Always(Box<Node>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
}

impl Node {
    pub fn new(kind: NodeKind, span: Span) -> Self {
        Node { kind, span }
    }

    /// Node without source position, for programmatic construction.
    pub fn bare(kind: NodeKind) -> Self {
        Node { kind, span: Span::default() }
    }

    pub fn atom(a: AtomicProp) -> Self {
        Node::bare(NodeKind::Atom(a))
    }

    pub fn and(a: Node, b: Node) -> Self {
        Node::bare(NodeKind::And(Box::new(a), Box::new(b)))
    }

    pub fn or(a: Node, b: Node) -> Self {
        Node::bare(NodeKind::Or(Box::new(a), Box::new(b)))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Node) -> Self {
        Node::bare(NodeKind::Not(Box::new(a)))
    }

    pub fn eventually(a: Node) -> Self {
        Node::bare(NodeKind::Eventually(Box::new(a)))
    }

    /// True when no temporal operator occurs in the subtree.
    pub fn is_propositional(&self) -> bool {
        match &self.kind {
            NodeKind::True | NodeKind::False | NodeKind::Atom(_) => true,
            NodeKind::Not(a) => a.is_propositional(),
            NodeKind::And(a, b) | NodeKind::Or(a, b) => a.is_propositional() && b.is_propositional(),
            NodeKind::Eventually(_) | NodeKind::Always(_) => false,
        }
    }

    /// First negation in the subtree, if any.
    pub fn find_negation(&self) -> Option<&Node> {
        match &self.kind {
            NodeKind::Not(_) => Some(self),
            NodeKind::And(a, b) | NodeKind::Or(a, b) => a.find_negation().or_else(|| b.find_negation()),
            NodeKind::Eventually(a) | NodeKind::Always(a) => a.find_negation(),
            _ => None,
        }
    }

    /// Evaluates a propositional subtree. Temporal nodes evaluate to false.
    pub fn eval_prop(&self, truth: &dyn Fn(&AtomicProp) -> bool) -> bool {
        match &self.kind {
            NodeKind::True => true,
            NodeKind::False => false,
            NodeKind::Atom(a) => truth(a),
            NodeKind::Not(a) => !a.eval_prop(truth),
            NodeKind::And(a, b) => a.eval_prop(truth) && b.eval_prop(truth),
            NodeKind::Or(a, b) => a.eval_prop(truth) || b.eval_prop(truth),
            NodeKind::Eventually(_) | NodeKind::Always(_) => false,
        }
    }

    /// Calls `f` on every atom in the subtree, left to right.
    pub fn visit_atoms<'a>(&'a self, f: &mut dyn FnMut(&'a AtomicProp)) {
        match &self.kind {
            NodeKind::Atom(a) => f(a),
            NodeKind::Not(a) | NodeKind::Eventually(a) | NodeKind::Always(a) => a.visit_atoms(f),
            NodeKind::And(a, b) | NodeKind::Or(a, b) => {
                a.visit_atoms(f);
                b.visit_atoms(f);
            }
            NodeKind::True | NodeKind::False => {}
        }
    }

    /// Short operator name used in diagnostics.
    pub fn describe(&self) -> &'static str {
        match &self.kind {
            NodeKind::True => "true",
            NodeKind::False => "false",
            NodeKind::Atom(AtomicProp::Near { .. }) => "near atom",
            NodeKind::Atom(AtomicProp::ClassIs { .. }) => "class atom",
            NodeKind::Not(_) => "negation",
            NodeKind::And(..) => "conjunction",
            NodeKind::Or(..) => "disjunction",
            NodeKind::Eventually(_) => "eventually (F)",
            NodeKind::Always(_) => "always (G)",
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NodeKind::True => write!(f, "true"),
            NodeKind::False => write!(f, "false"),
            NodeKind::Atom(a) => write!(f, "{a}"),
            NodeKind::Not(a) => write!(f, "!{}", Paren(a)),
            NodeKind::And(a, b) => write!(f, "{} & {}", Paren(a), Paren(b)),
            NodeKind::Or(a, b) => write!(f, "{} | {}", Paren(a), Paren(b)),
            NodeKind::Eventually(a) => write!(f, "F {}", Paren(a)),
            NodeKind::Always(a) => write!(f, "G {}", Paren(a)),
        }
    }
}

struct Paren<'a>(&'a Node);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.kind {
            NodeKind::And(..) | NodeKind::Or(..) => write!(f, "({})", self.0),
            _ => write!(f, "{}", self.0),
        }
    }
}

/// A parsed task: a co-safe progress part and an optional invariant.
///
/// `progress == None` means the task only asks for safety; it compiles to the
/// trivially accepting automaton.
#[derive(Clone, Debug, PartialEq)]
pub struct Formula {
    pub progress: Option<Node>,
    pub safety: Option<Node>,
}

impl Formula {
    /// Every atom of the formula, deduplicated, in order of first appearance.
    pub fn atoms(&self) -> Vec<AtomicProp> {
        let mut out: Vec<AtomicProp> = Vec::new();
        let mut push = |a: &AtomicProp| {
            if !out.contains(a) {
                out.push(a.clone());
            }
        };
        if let Some(p) = &self.progress {
            p.visit_atoms(&mut push);
        }
        if let Some(s) = &self.safety {
            s.visit_atoms(&mut push);
        }
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.progress, &self.safety) {
            (Some(p), Some(s)) => write!(f, "{} & G {}", Paren(p), Paren(s)),
            (Some(p), None) => write!(f, "{p}"),
            (None, Some(s)) => write!(f, "G {}", Paren(s)),
            (None, None) => write!(f, "true"),
        }
    }
}
