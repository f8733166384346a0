//! Task formulas: parsing, compilation to automata, and automaton queries.

mod ast;
mod atom;
pub mod bdd;
mod closure;
mod compile;
mod dfa;
mod label;
mod parser;

pub use ast::{Formula, Node, NodeKind, Span};
pub use atom::AtomicProp;
pub use closure::{is_upward_closed, UpwardClosure};
pub use compile::{compile, compile_node, CompileError};
pub use dfa::{compute_levels, levels, Dfa, DfaError, Edge, Level, StateId};
pub use label::Label;
pub use parser::{parse, FormulaError};
