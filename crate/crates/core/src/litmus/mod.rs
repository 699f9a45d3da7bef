//! The litmus-test language: AST, parser, canonical printer and corpus loader.
//!
//! A test declares its shared variables in `init`, one instruction sequence per
//! thread, an `exists` postcondition over the final state and an optional
//! `expect` block recording the reachability verdict per model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

mod corpus;
mod parse;
mod print;
mod validate;

pub use corpus::{load_corpus, CorpusError};
pub use parse::parse_litmus;
pub use print::serialize_litmus;

/// Values are signed 64-bit integers with wrapping arithmetic.
pub type Value = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn apply(self, lhs: Value, rhs: Value) -> Value {
        match self {
            BinOp::Add => lhs.wrapping_add(rhs),
            BinOp::Sub => lhs.wrapping_sub(rhs),
            BinOp::Mul => lhs.wrapping_mul(rhs),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }
}

/// Register-only expression. Shared variables never appear here.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Value),
    Reg(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    /// Registers mentioned by the expression, in first-occurrence order.
    pub fn registers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_registers(&mut out);
        out
    }

    fn collect_registers<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Const(_) => {}
            Expr::Reg(r) => {
                if !out.contains(&r.as_str()) {
                    out.push(r);
                }
            }
            Expr::Neg(e) => e.collect_registers(out),
            Expr::Bin(_, l, r) => {
                l.collect_registers(out);
                r.collect_registers(out);
            }
        }
    }

    /// Evaluates with `lookup` supplying register values; `None` if any
    /// register is unavailable.
    pub fn eval_with(&self, lookup: &mut impl FnMut(&str) -> Option<Value>) -> Option<Value> {
        Some(match self {
            Expr::Const(v) => *v,
            Expr::Reg(r) => lookup(r)?,
            Expr::Neg(e) => e.eval_with(lookup)?.wrapping_neg(),
            Expr::Bin(op, l, r) => op.apply(l.eval_with(lookup)?, r.eval_with(lookup)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum StoreOrder {
    #[default]
    Plain,
    Release,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LoadOrder {
    #[default]
    Plain,
    Acquire,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instruction {
    /// `r := e`
    Assign {
        reg: String,
        expr: Expr,
    },
    /// `x := e` or `x :=rel e`
    Store {
        loc: String,
        expr: Expr,
        order: StoreOrder,
    },
    /// `r := x`, `r :=acq x`, optionally followed by `dep r1,r2`
    Load {
        reg: String,
        loc: String,
        order: LoadOrder,
        deps: BTreeSet<String>,
    },
    Fence,
    /// `r := SWAP(x, e)`: atomically stores `e` to `x` and returns the old value.
    Swap {
        reg: String,
        loc: String,
        expr: Expr,
    },
    /// `if (cond = equals) { then } else { otherwise }`
    Branch {
        cond: Expr,
        equals: Value,
        then_block: Vec<Instruction>,
        else_block: Vec<Instruction>,
    },
}

impl Instruction {
    /// Register written by this instruction, if any.
    pub fn defined_register(&self) -> Option<&str> {
        match self {
            Instruction::Assign { reg, .. } | Instruction::Load { reg, .. } | Instruction::Swap { reg, .. } => {
                Some(reg)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Thread {
    pub name: String,
    pub body: Vec<Instruction>,
}

impl Thread {
    /// Every register this thread mentions, sorted.
    pub fn registers(&self) -> BTreeSet<String> {
        fn walk(block: &[Instruction], out: &mut BTreeSet<String>) {
            for ins in block {
                if let Some(r) = ins.defined_register() {
                    out.insert(r.to_string());
                }
                match ins {
                    Instruction::Assign { expr, .. }
                    | Instruction::Store { expr, .. }
                    | Instruction::Swap { expr, .. } => {
                        out.extend(expr.registers().into_iter().map(String::from));
                    }
                    Instruction::Load { deps, .. } => out.extend(deps.iter().cloned()),
                    Instruction::Fence => {}
                    Instruction::Branch {
                        cond,
                        then_block,
                        else_block,
                        ..
                    } => {
                        out.extend(cond.registers().into_iter().map(String::from));
                        walk(then_block, out);
                        walk(else_block, out);
                    }
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(&self.body, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Postcondition {
    True,
    False,
    /// `name = value` where `name` is a register or a shared variable.
    Atom {
        name: String,
        value: Value,
    },
    Not(Box<Postcondition>),
    And(Box<Postcondition>, Box<Postcondition>),
    Or(Box<Postcondition>, Box<Postcondition>),
}

impl Postcondition {
    pub fn atom(name: &str, value: Value) -> Self {
        Postcondition::Atom {
            name: name.to_string(),
            value,
        }
    }

    pub fn and(lhs: Self, rhs: Self) -> Self {
        Postcondition::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Self, rhs: Self) -> Self {
        Postcondition::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn negate(inner: Self) -> Self {
        Postcondition::Not(Box::new(inner))
    }

    /// Evaluates against a name lookup. Unknown names evaluate as false atoms.
    pub fn eval(&self, lookup: &impl Fn(&str) -> Option<Value>) -> bool {
        match self {
            Postcondition::True => true,
            Postcondition::False => false,
            Postcondition::Atom { name, value } => lookup(name) == Some(*value),
            Postcondition::Not(p) => !p.eval(lookup),
            Postcondition::And(a, b) => a.eval(lookup) && b.eval(lookup),
            Postcondition::Or(a, b) => a.eval(lookup) || b.eval(lookup),
        }
    }

    pub fn names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Postcondition::True | Postcondition::False => {}
            Postcondition::Atom { name, .. } => out.push(name),
            Postcondition::Not(p) => p.collect_names(out),
            Postcondition::And(a, b) | Postcondition::Or(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Expectation {
    Reachable,
    Unreachable,
}

impl Expectation {
    pub fn from_bool(reachable: bool) -> Self {
        if reachable {
            Expectation::Reachable
        } else {
            Expectation::Unreachable
        }
    }

    pub fn is_reachable(self) -> bool {
        self == Expectation::Reachable
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expectation::Reachable => "yes",
            Expectation::Unreachable => "no",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LitmusTest {
    pub name: String,
    pub init: BTreeMap<String, Value>,
    pub threads: Vec<Thread>,
    pub post: Postcondition,
    pub expectations: Option<BTreeMap<String, Expectation>>,
}

impl LitmusTest {
    /// Checks every structural invariant of a test. Parsed tests always pass.
    pub fn validate(&self) -> Result<(), ValidationError> {
        validate::validate(self)
    }

    pub fn expectation(&self, model: &str) -> Option<Expectation> {
        self.expectations.as_ref()?.get(model).copied()
    }

    pub fn is_shared(&self, name: &str) -> bool {
        self.init.contains_key(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValidationKind {
    UndeclaredVar,
    CrossThreadRegister,
    LoopDetected,
    BadDep,
    SharedInExpression,
    DuplicateThread,
}

impl fmt::Display for ValidationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidationKind::UndeclaredVar => "undeclared-var",
            ValidationKind::CrossThreadRegister => "cross-thread-register",
            ValidationKind::LoopDetected => "loop-detected",
            ValidationKind::BadDep => "bad-dep",
            ValidationKind::SharedInExpression => "shared-in-expression",
            ValidationKind::DuplicateThread => "duplicate-thread",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind}: {message}")]
pub struct ValidationError {
    pub kind: ValidationKind,
    pub message: String,
}

impl ValidationError {
    pub(crate) fn new(kind: ValidationKind, message: impl Into<String>) -> Self {
        ValidationError {
            kind,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LitmusError {
    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax { line: usize, col: usize, expected: String },
    #[error("validation error: {0}")]
    Validation(#[from] ValidationError),
}
