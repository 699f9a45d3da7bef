//! A small relational model language in the style of herd's cat.
//!
//! ```text
//! model TSO
//! let ppo = RR | RW | WW
//! acyclic poloc | co | rf | fr as coherence
//! acyclic ppo | fencerel | co | rfe | fr as ppo
//! ```
//!
//! Operators from loosest to tightest: `|`, `;`, `\`, `&`, then the postfix
//! `^-1`, `^+` and `^*`. Comments are `(* ... *)` or `//` to end of line.

use std::fmt;

use super::graph::{Builtin, EventClass, ExecutionGraph};
use crate::relation::Relation;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RelExpr {
    Builtin(Builtin),
    /// Index into the model's bindings.
    Let(usize),
    /// `[S]`
    Set(EventClass),
    Seq(Box<RelExpr>, Box<RelExpr>),
    Union(Box<RelExpr>, Box<RelExpr>),
    Inter(Box<RelExpr>, Box<RelExpr>),
    Diff(Box<RelExpr>, Box<RelExpr>),
    Inverse(Box<RelExpr>),
    Plus(Box<RelExpr>),
    Star(Box<RelExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxiomKind {
    Acyclic,
    Empty,
    Irreflexive,
}

impl fmt::Display for AxiomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AxiomKind::Acyclic => "acyclic",
            AxiomKind::Empty => "empty",
            AxiomKind::Irreflexive => "irreflexive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axiom {
    pub kind: AxiomKind,
    pub expr: RelExpr,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub name: String,
    pub bindings: Vec<(String, RelExpr)>,
    pub axioms: Vec<Axiom>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax { line: usize, col: usize, expected: String },
    #[error("unknown identifier `{name}` at {line}:{col}")]
    UnknownIdentifier { name: String, line: usize, col: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LBrack,
    RBrack,
    LParen,
    RParen,
    Semi,
    Bar,
    Amp,
    Backslash,
    Eq,
    Inverse,
    Plus,
    Star,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
            other => write!(
                f,
                "`{}`",
                match other {
                    Tok::LBrack => "[",
                    Tok::RBrack => "]",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::Semi => ";",
                    Tok::Bar => "|",
                    Tok::Amp => "&",
                    Tok::Backslash => "\\",
                    Tok::Eq => "=",
                    Tok::Inverse => "^-1",
                    Tok::Plus => "^+",
                    Tok::Star => "^*",
                    Tok::Ident(_) | Tok::Eof => unreachable!(),
                }
            ),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ModelError> {
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let mut out = Vec::new();
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '/' && next == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c == '(' && next == Some('*') {
            let (sl, sc) = (line, col);
            advance(&mut i, &mut line, &mut col, 2);
            loop {
                if i + 1 >= chars.len() {
                    return Err(ModelError::Syntax {
                        line: sl,
                        col: sc,
                        expected: "`*)` closing this comment".into(),
                    });
                }
                if chars[i] == '*' && chars[i + 1] == ')' {
                    advance(&mut i, &mut line, &mut col, 2);
                    break;
                }
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let (tl, tc) = (line, col);
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || matches!(chars[j], '_' | '-' | '.')) {
                j += 1;
            }
            // a trailing '-' or '.' belongs to whatever follows
            while j > i + 1 && matches!(chars[j - 1], '-' | '.') {
                j -= 1;
            }
            (Tok::Ident(chars[i..j].iter().collect()), j - i)
        } else {
            match (c, next, chars.get(i + 2).copied()) {
                ('^', Some('-'), Some('1')) => (Tok::Inverse, 3),
                ('^', Some('+'), _) => (Tok::Plus, 2),
                ('^', Some('*'), _) => (Tok::Star, 2),
                ('[', ..) => (Tok::LBrack, 1),
                (']', ..) => (Tok::RBrack, 1),
                ('(', ..) => (Tok::LParen, 1),
                (')', ..) => (Tok::RParen, 1),
                (';', ..) => (Tok::Semi, 1),
                ('|', ..) => (Tok::Bar, 1),
                ('&', ..) => (Tok::Amp, 1),
                ('\\', ..) => (Tok::Backslash, 1),
                ('=', ..) => (Tok::Eq, 1),
                _ => {
                    return Err(ModelError::Syntax {
                        line,
                        col,
                        expected: format!("a token (found `{c}`)"),
                    })
                }
            }
        };
        advance(&mut i, &mut line, &mut col, len);
        out.push(Spanned { tok, line: tl, col: tc });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

const KEYWORDS: [&str; 6] = ["model", "let", "acyclic", "empty", "irreflexive", "as"];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    bindings: Vec<(String, RelExpr)>,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> &Spanned {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ModelError {
        let t = self.peek();
        ModelError::Syntax {
            line: t.line,
            col: t.col,
            expected: format!("{expected} (found {})", t.tok),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ModelError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("`{kw}`")))
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ModelError> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(what)),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ModelError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(what))
        }
    }

    fn model(&mut self) -> Result<ModelSpec, ModelError> {
        self.keyword("model")?;
        let name = self.name("model name")?;
        let mut axioms = Vec::new();
        loop {
            let kind = match &self.peek().tok {
                Tok::Eof => break,
                Tok::Ident(s) if s == "let" => {
                    self.bump();
                    let binding = self.name("binding name")?;
                    self.expect(Tok::Eq, "`=`")?;
                    let expr = self.union()?;
                    self.bindings.push((binding, expr));
                    continue;
                }
                Tok::Ident(s) if s == "acyclic" => AxiomKind::Acyclic,
                Tok::Ident(s) if s == "empty" => AxiomKind::Empty,
                Tok::Ident(s) if s == "irreflexive" => AxiomKind::Irreflexive,
                _ => return Err(self.error("`let`, `acyclic`, `empty` or `irreflexive`")),
            };
            self.bump();
            let expr = self.union()?;
            self.keyword("as")?;
            let label = self.name("axiom label")?;
            axioms.push(Axiom { kind, expr, label });
        }
        Ok(ModelSpec {
            name,
            bindings: std::mem::take(&mut self.bindings),
            axioms,
        })
    }

    fn binary(
        &mut self,
        op: Tok,
        next: fn(&mut Self) -> Result<RelExpr, ModelError>,
        build: fn(Box<RelExpr>, Box<RelExpr>) -> RelExpr,
    ) -> Result<RelExpr, ModelError> {
        let mut lhs = next(self)?;
        while self.peek().tok == op {
            self.bump();
            let rhs = next(self)?;
            lhs = build(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn union(&mut self) -> Result<RelExpr, ModelError> {
        self.binary(Tok::Bar, Self::seq, RelExpr::Union)
    }

    fn seq(&mut self) -> Result<RelExpr, ModelError> {
        self.binary(Tok::Semi, Self::diff, RelExpr::Seq)
    }

    fn diff(&mut self) -> Result<RelExpr, ModelError> {
        self.binary(Tok::Backslash, Self::inter, RelExpr::Diff)
    }

    fn inter(&mut self) -> Result<RelExpr, ModelError> {
        self.binary(Tok::Amp, Self::postfix, RelExpr::Inter)
    }

    fn postfix(&mut self) -> Result<RelExpr, ModelError> {
        let mut e = self.atom()?;
        loop {
            e = match self.peek().tok {
                Tok::Inverse => RelExpr::Inverse(Box::new(e)),
                Tok::Plus => RelExpr::Plus(Box::new(e)),
                Tok::Star => RelExpr::Star(Box::new(e)),
                _ => return Ok(e),
            };
            self.bump();
        }
    }

    fn atom(&mut self) -> Result<RelExpr, ModelError> {
        let (line, col) = (self.peek().line, self.peek().col);
        match self.peek().tok.clone() {
            Tok::LParen => {
                self.bump();
                let e = self.union()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::LBrack => {
                self.bump();
                let (line, col) = (self.peek().line, self.peek().col);
                let set = self.name("event set")?;
                let class =
                    EventClass::from_name(&set).ok_or(ModelError::UnknownIdentifier { name: set, line, col })?;
                self.expect(Tok::RBrack, "`]`")?;
                Ok(RelExpr::Set(class))
            }
            Tok::Ident(_) => {
                let name = self.name("relation name")?;
                if let Some(i) = self.bindings.iter().rposition(|(n, _)| *n == name) {
                    return Ok(RelExpr::Let(i));
                }
                Builtin::from_name(&name)
                    .map(RelExpr::Builtin)
                    .ok_or(ModelError::UnknownIdentifier { name, line, col })
            }
            _ => Err(self.error("a relation")),
        }
    }
}

/// Parses a model. Every identifier must name a built-in relation, an event
/// set or an earlier `let`.
pub fn parse_model(text: &str) -> Result<ModelSpec, ModelError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        bindings: Vec::new(),
    };
    p.model()
}

const SC_CAT: &str = include_str!("../../models/sc.cat");
const TSO_CAT: &str = include_str!("../../models/tso.cat");
const ARMISH_CAT: &str = include_str!("../../models/armish.cat");

/// The shipped model sources, by file name.
pub const BUILTIN_MODELS: [(&str, &str); 3] = [("sc.cat", SC_CAT), ("tso.cat", TSO_CAT), ("armish.cat", ARMISH_CAT)];

pub fn sc_model() -> ModelSpec {
    parse_model(SC_CAT).expect("shipped sc.cat parses")
}

pub fn tso_model() -> ModelSpec {
    parse_model(TSO_CAT).expect("shipped tso.cat parses")
}

pub fn armish_model() -> ModelSpec {
    parse_model(ARMISH_CAT).expect("shipped armish.cat parses")
}

impl RelExpr {
    pub fn eval(&self, graph: &ExecutionGraph, lets: &[Relation]) -> Relation {
        let ok = |r: Result<Relation, _>| r.expect("relations of one graph share a carrier");
        match self {
            RelExpr::Builtin(b) => graph.builtin(*b).clone(),
            RelExpr::Let(i) => lets[*i].clone(),
            RelExpr::Set(class) => graph.set(*class).identity(),
            RelExpr::Seq(a, b) => ok(a.eval(graph, lets).compose(&b.eval(graph, lets))),
            RelExpr::Union(a, b) => ok(a.eval(graph, lets).union(&b.eval(graph, lets))),
            RelExpr::Inter(a, b) => ok(a.eval(graph, lets).intersect(&b.eval(graph, lets))),
            RelExpr::Diff(a, b) => ok(a.eval(graph, lets).difference(&b.eval(graph, lets))),
            RelExpr::Inverse(a) => a.eval(graph, lets).inverse(),
            RelExpr::Plus(a) => a.eval(graph, lets).transitive_closure(),
            RelExpr::Star(a) => a.eval(graph, lets).reflexive_transitive_closure(),
        }
    }
}
