//! Recursive-descent parser and grammar validation for task formulas.
//!
//! Concrete syntax (whitespace insignificant):
//!
//! ```text
//! task    := or
//! or      := and ( ('|' | '∨') and )*
//! and     := unary ( ('&' | '∧') unary )*
//! unary   := ('!' | '¬') unary | ('F' | '◇') unary | ('G' | '□') unary | primary
//! primary := '(' or ')' | 'true' | 'false' | near | class
//! near    := 'near' '(' INDEX ',' NUMBER ')'
//! class   := 'class' '(' INDEX ',' ( IDENT | '{' IDENT (',' IDENT)* '}' ) ')'
//! ```
//!
//! `INDEX` counts landmarks from 1. `G` may only appear as a top-level
//! conjunct over a propositional formula; the remaining conjuncts form the
//! progress part, which must follow the reach/sequence grammar below with
//! negation-free propositional leaves:
//!
//! ```text
//! task  := reach | seq | task & task | task | task
//! reach := F prop | reach & reach | reach | reach
//! seq   := prop | F seq | F (seq & F seq)
//! ```

use thiserror::Error;

use super::ast::{Formula, Node, NodeKind, Span};
use super::atom::AtomicProp;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("syntax error at column {}: {message}", .offset + 1)]
    Syntax { offset: usize, message: String },
    #[error("grammar violation at columns {}-{} ({node} `{text}`): {reason}", .span.start + 1, .span.end)]
    Grammar {
        span: Span,
        node: &'static str,
        text: String,
        reason: String,
    },
}

impl FormulaError {
    /// Renders the error with a caret line under the offending source range.
    pub fn annotate(&self, source: &str) -> String {
        let (start, end) = match self {
            FormulaError::Syntax { offset, .. } => (*offset, *offset + 1),
            FormulaError::Grammar { span, .. } => (span.start, span.end.max(span.start + 1)),
        };
        let col = source[..start.min(source.len())].chars().count();
        let width = source
            .get(start.min(source.len())..end.min(source.len()))
            .map(|s| s.chars().count())
            .unwrap_or(1)
            .max(1);
        format!("{self}\n  {source}\n  {}{}", " ".repeat(col), "^".repeat(width))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    And,
    Or,
    Not,
    Diamond,
    Box,
    Ident(String),
    Number(String),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: Span,
}

fn lex(src: &str) -> Result<Vec<Token>, FormulaError> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        let single = |tok| Token { tok, span: Span::new(i, i + c.len_utf8()) };
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '(' | ')' | '{' | '}' | ',' | '&' | '|' | '!' | '∧' | '∨' | '¬' | '◇' | '□' => {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ',' => Tok::Comma,
                    '&' | '∧' => Tok::And,
                    '|' | '∨' => Tok::Or,
                    '!' | '¬' => Tok::Not,
                    '◇' => Tok::Diamond,
                    _ => Tok::Box,
                };
                out.push(single(tok));
                it.next();
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' => {
                let mut end = i;
                let mut text = String::new();
                while let Some(&(j, d)) = it.peek() {
                    let exp_sign = (d == '-' || d == '+')
                        && (text.is_empty() || text.ends_with('e') || text.ends_with('E'));
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        text.push(d);
                        end = j + d.len_utf8();
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push(Token { tok: Tok::Number(text), span: Span::new(i, end) });
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut end = i;
                let mut text = String::new();
                while let Some(&(j, d)) = it.peek() {
                    if d.is_alphanumeric() || d == '_' || d == '-' {
                        text.push(d);
                        end = j + d.len_utf8();
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push(Token { tok: Tok::Ident(text), span: Span::new(i, end) });
            }
            other => {
                return Err(FormulaError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'s> {
    toks: Vec<Token>,
    pos: usize,
    src_len: usize,
    _src: &'s str,
}

impl<'s> Parser<'s> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map(|t| t.span.start).unwrap_or(self.src_len)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax { offset: self.offset(), message: message.into() })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Span, FormulaError> {
        match self.peek() {
            Some(t) if t.tok == tok => {
                let span = t.span;
                self.pos += 1;
                Ok(span)
            }
            Some(t) => {
                let found = describe_tok(&t.tok);
                self.err(format!("expected {what}, found {found}"))
            }
            None => self.err(format!("expected {what}, found end of input")),
        }
    }

    fn parse_or(&mut self) -> Result<Node, FormulaError> {
        let mut lhs = self.parse_and()?;
        while matches!(self.peek(), Some(Token { tok: Tok::Or, .. })) {
            self.pos += 1;
            let rhs = self.parse_and()?;
            let span = lhs.span.join(rhs.span);
            lhs = Node::new(NodeKind::Or(Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Node, FormulaError> {
        let mut lhs = self.parse_unary()?;
        while matches!(self.peek(), Some(Token { tok: Tok::And, .. })) {
            self.pos += 1;
            let rhs = self.parse_unary()?;
            let span = lhs.span.join(rhs.span);
            lhs = Node::new(NodeKind::And(Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Node, FormulaError> {
        let Some(t) = self.peek().cloned() else {
            return self.err("unexpected end of input");
        };
        let wrap: Option<fn(Box<Node>) -> NodeKind> = match &t.tok {
            Tok::Not => Some(NodeKind::Not),
            Tok::Diamond => Some(NodeKind::Eventually),
            Tok::Box => Some(NodeKind::Always),
            Tok::Ident(s) if s == "F" => Some(NodeKind::Eventually),
            Tok::Ident(s) if s == "G" => Some(NodeKind::Always),
            _ => None,
        };
        match wrap {
            Some(ctor) => {
                self.pos += 1;
                let inner = self.parse_unary()?;
                let span = t.span.join(inner.span);
                Ok(Node::new(ctor(Box::new(inner)), span))
            }
            None => self.parse_primary(),
        }
    }

    fn parse_primary(&mut self) -> Result<Node, FormulaError> {
        let Some(t) = self.peek().cloned() else {
            return self.err("unexpected end of input");
        };
        match &t.tok {
            Tok::LParen => {
                self.pos += 1;
                let inner = self.parse_or()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                Ok(Node::new(inner.kind, t.span.join(close)))
            }
            Tok::Ident(s) if s == "true" => {
                self.pos += 1;
                Ok(Node::new(NodeKind::True, t.span))
            }
            Tok::Ident(s) if s == "false" => {
                self.pos += 1;
                Ok(Node::new(NodeKind::False, t.span))
            }
            Tok::Ident(s) if s == "near" => {
                self.pos += 1;
                self.expect(Tok::LParen, "`(` after `near`")?;
                let landmark = self.parse_index()?;
                self.expect(Tok::Comma, "`,`")?;
                let (radius, rspan) = self.parse_number()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                let atom = AtomicProp::near(landmark, radius).ok_or(FormulaError::Syntax {
                    offset: rspan.start,
                    message: format!("radius must be positive and finite, got {radius}"),
                })?;
                Ok(Node::new(NodeKind::Atom(atom), t.span.join(close)))
            }
            Tok::Ident(s) if s == "class" => {
                self.pos += 1;
                self.expect(Tok::LParen, "`(` after `class`")?;
                let landmark = self.parse_index()?;
                self.expect(Tok::Comma, "`,`")?;
                let mut classes = Vec::new();
                if matches!(self.peek(), Some(Token { tok: Tok::LBrace, .. })) {
                    self.pos += 1;
                    loop {
                        classes.push(self.parse_ident("class name")?);
                        match self.peek().map(|t| &t.tok) {
                            Some(Tok::Comma) => self.pos += 1,
                            _ => break,
                        }
                    }
                    self.expect(Tok::RBrace, "`}`")?;
                } else {
                    classes.push(self.parse_ident("class name")?);
                }
                let close = self.expect(Tok::RParen, "`)`")?;
                // Nonempty by construction.
                let atom = AtomicProp::class_is(landmark, classes).expect("nonempty class set");
                Ok(Node::new(NodeKind::Atom(atom), t.span.join(close)))
            }
            other => {
                let found = describe_tok(other);
                self.err(format!("expected a formula, found {found}"))
            }
        }
    }

    fn parse_ident(&mut self, what: &str) -> Result<String, FormulaError> {
        match self.peek().cloned() {
            Some(Token { tok: Tok::Ident(s), .. }) => {
                self.pos += 1;
                Ok(s)
            }
            Some(t) => {
                let found = describe_tok(&t.tok);
                self.err(format!("expected {what}, found {found}"))
            }
            None => self.err(format!("expected {what}, found end of input")),
        }
    }

    fn parse_number(&mut self) -> Result<(f64, Span), FormulaError> {
        match self.peek().cloned() {
            Some(Token { tok: Tok::Number(s), span }) => {
                self.pos += 1;
                s.parse::<f64>().map(|v| (v, span)).map_err(|_| FormulaError::Syntax {
                    offset: span.start,
                    message: format!("malformed number `{s}`"),
                })
            }
            _ => self.err("expected a number"),
        }
    }

    fn parse_index(&mut self) -> Result<usize, FormulaError> {
        match self.peek().cloned() {
            Some(Token { tok: Tok::Number(s), span }) => {
                self.pos += 1;
                match s.parse::<usize>() {
                    Ok(i) if i >= 1 => Ok(i - 1),
                    _ => Err(FormulaError::Syntax {
                        offset: span.start,
                        message: format!("landmark index must be an integer >= 1, got `{s}`"),
                    }),
                }
            }
            _ => self.err("expected a landmark index"),
        }
    }
}

fn describe_tok(t: &Tok) -> String {
    match t {
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBrace => "`{`".into(),
        Tok::RBrace => "`}`".into(),
        Tok::Comma => "`,`".into(),
        Tok::And => "`&`".into(),
        Tok::Or => "`|`".into(),
        Tok::Not => "`!`".into(),
        Tok::Diamond => "`◇`".into(),
        Tok::Box => "`□`".into(),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(s) => format!("`{s}`"),
    }
}

/// Parses and validates a task formula.
pub fn parse(text: &str) -> Result<Formula, FormulaError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(FormulaError::Syntax { offset: 0, message: "empty formula".into() });
    }
    let mut p = Parser { toks, pos: 0, src_len: text.len(), _src: text };
    let root = p.parse_or()?;
    if p.pos < p.toks.len() {
        let found = describe_tok(&p.toks[p.pos].tok);
        return p.err(format!("unexpected {found} after complete formula"));
    }
    split_and_validate(root, text)
}

fn grammar_err(node: &Node, src: &str, reason: impl Into<String>) -> FormulaError {
    let text = src.get(node.span.start..node.span.end).map(str::to_owned).unwrap_or_else(|| node.to_string());
    FormulaError::Grammar { span: node.span, node: node.describe(), text, reason: reason.into() }
}

fn split_and_validate(root: Node, src: &str) -> Result<Formula, FormulaError> {
    let mut conjuncts = Vec::new();
    flatten_and(root, &mut conjuncts);

    let mut progress: Option<Node> = None;
    let mut safety: Option<Node> = None;
    for c in conjuncts {
        if let NodeKind::Always(inner) = c.kind {
            if !inner.is_propositional() {
                return Err(grammar_err(&inner, src, "the body of G must be propositional"));
            }
            safety = Some(match safety {
                None => *inner,
                Some(prev) => {
                    let span = prev.span.join(inner.span);
                    Node::new(NodeKind::And(Box::new(prev), inner), span)
                }
            });
        } else {
            progress = Some(match progress {
                None => c,
                Some(prev) => {
                    let span = prev.span.join(c.span);
                    Node::new(NodeKind::And(Box::new(prev), Box::new(c)), span)
                }
            });
        }
    }

    if let Some(p) = &progress {
        check_misplaced(p, src)?;
        validate_task(p, src)?;
    }
    Ok(Formula { progress, safety })
}

fn flatten_and(node: Node, out: &mut Vec<Node>) {
    match node.kind {
        NodeKind::And(a, b) => {
            flatten_and(*a, out);
            flatten_and(*b, out);
        }
        kind => out.push(Node::new(kind, node.span)),
    }
}

/// Progress propositions: no temporal operators, no negation.
fn validate_progress_prop(node: &Node, src: &str) -> Result<(), FormulaError> {
    if let Some(n) = node.find_negation() {
        if let NodeKind::Not(inner) = &n.kind {
            if !inner.is_propositional() {
                return Err(grammar_err(n, src, "temporal operator under negation"));
            }
        }
        return Err(grammar_err(
            n,
            src,
            "negation is only allowed inside the G (safety) conjunct",
        ));
    }
    Ok(())
}

fn reject_misplaced(node: &Node, src: &str) -> Result<(), FormulaError> {
    match &node.kind {
        NodeKind::Always(_) => Err(grammar_err(node, src, "G is only allowed as a top-level conjunct")),
        NodeKind::Not(inner) if !inner.is_propositional() => {
            Err(grammar_err(node, src, "temporal operator under negation"))
        }
        _ => Ok(()),
    }
}

fn check_misplaced(node: &Node, src: &str) -> Result<(), FormulaError> {
    reject_misplaced(node, src)?;
    match &node.kind {
        NodeKind::Not(a) | NodeKind::Eventually(a) | NodeKind::Always(a) => check_misplaced(a, src),
        NodeKind::And(a, b) | NodeKind::Or(a, b) => {
            check_misplaced(a, src)?;
            check_misplaced(b, src)
        }
        _ => Ok(()),
    }
}

fn validate_task(node: &Node, src: &str) -> Result<(), FormulaError> {
    reject_misplaced(node, src)?;
    if node.is_propositional() {
        return validate_progress_prop(node, src);
    }
    match &node.kind {
        NodeKind::And(a, b) | NodeKind::Or(a, b) => {
            validate_task(a, src)?;
            validate_task(b, src)
        }
        NodeKind::Eventually(body) => validate_eventually_body(body, src),
        _ => Err(grammar_err(node, src, "not a reachability or sequencing formula")),
    }
}

/// Bodies allowed under F: `prop`, `seq`, or `seq & F body`. The right side
/// of the conjunction may itself be a sequencing chain, so
/// `F (a & F (b & F c))` is accepted.
fn validate_eventually_body(body: &Node, src: &str) -> Result<(), FormulaError> {
    reject_misplaced(body, src)?;
    if is_seq(body, src)? {
        return Ok(());
    }
    if let NodeKind::And(a, b) = &body.kind {
        for (x, y) in [(a, b), (b, a)] {
            if let NodeKind::Eventually(inner) = &y.kind {
                if is_seq(x, src)? && validate_eventually_body(inner, src).is_ok() {
                    return Ok(());
                }
            }
        }
        return Err(grammar_err(
            body,
            src,
            "under F a conjunction must have the form `seq & F seq`",
        ));
    }
    Err(grammar_err(
        body,
        src,
        "under F only a proposition, `F seq`, or `seq & F seq` is allowed",
    ))
}

fn is_seq(node: &Node, src: &str) -> Result<bool, FormulaError> {
    reject_misplaced(node, src)?;
    if node.is_propositional() {
        validate_progress_prop(node, src)?;
        return Ok(true);
    }
    match &node.kind {
        NodeKind::Eventually(body) => validate_eventually_body(body, src).map(|_| true),
        _ => Ok(false),
    }
}
