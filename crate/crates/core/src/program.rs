//! Litmus tests lowered to an index-based form shared by both engines.
//!
//! Shared variables become location indices into the sorted `init` map and
//! registers become indices into their thread's sorted register list. Each
//! thread's code is a small DAG: every op names its successor pc, branches
//! name two, and [`END`] marks termination.

use std::collections::BTreeMap;

use crate::litmus::{BinOp, Expr, Instruction, LitmusTest, LoadOrder, StoreOrder, Value};

pub type Pc = usize;
pub type Loc = usize;
pub type Reg = usize;

pub const END: Pc = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CExpr {
    Const(Value),
    Reg(Reg),
    Neg(Box<CExpr>),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
}

impl CExpr {
    pub fn eval(&self, regs: &[Value]) -> Value {
        match self {
            CExpr::Const(v) => *v,
            CExpr::Reg(r) => regs[*r],
            CExpr::Neg(e) => e.eval(regs).wrapping_neg(),
            CExpr::Bin(op, l, r) => op.apply(l.eval(regs), r.eval(regs)),
        }
    }

    /// Evaluates when every register is available through `lookup`.
    pub fn try_eval(&self, lookup: &impl Fn(Reg) -> Option<Value>) -> Option<Value> {
        Some(match self {
            CExpr::Const(v) => *v,
            CExpr::Reg(r) => lookup(*r)?,
            CExpr::Neg(e) => e.try_eval(lookup)?.wrapping_neg(),
            CExpr::Bin(op, l, r) => op.apply(l.try_eval(lookup)?, r.try_eval(lookup)?),
        })
    }

    pub fn registers(&self, out: &mut Vec<Reg>) {
        match self {
            CExpr::Const(_) => {}
            CExpr::Reg(r) => {
                if !out.contains(r) {
                    out.push(*r);
                }
            }
            CExpr::Neg(e) => e.registers(out),
            CExpr::Bin(_, l, r) => {
                l.registers(out);
                r.registers(out);
            }
        }
    }

    pub fn reg_list(&self) -> Vec<Reg> {
        let mut out = Vec::new();
        self.registers(&mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Op {
    Assign {
        reg: Reg,
        expr: CExpr,
        next: Pc,
    },
    Store {
        loc: Loc,
        expr: CExpr,
        release: bool,
        next: Pc,
    },
    Load {
        reg: Reg,
        loc: Loc,
        acquire: bool,
        deps: Vec<Reg>,
        next: Pc,
    },
    Fence {
        next: Pc,
    },
    Swap {
        reg: Reg,
        loc: Loc,
        expr: CExpr,
        next: Pc,
    },
    Branch {
        cond: CExpr,
        equals: Value,
        then_pc: Pc,
        else_pc: Pc,
    },
}

impl Op {
    /// Fall-through successor; `None` for branches.
    pub fn next(&self) -> Option<Pc> {
        match self {
            Op::Assign { next, .. }
            | Op::Store { next, .. }
            | Op::Load { next, .. }
            | Op::Fence { next }
            | Op::Swap { next, .. } => Some(*next),
            Op::Branch { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadCode {
    pub name: String,
    pub registers: Vec<String>,
    pub ops: Vec<Op>,
    pub entry: Pc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub locations: Vec<String>,
    pub init: Vec<Value>,
    pub threads: Vec<ThreadCode>,
}

struct Lowering<'a> {
    locs: &'a BTreeMap<String, Loc>,
    regs: BTreeMap<String, Reg>,
    ops: Vec<Op>,
}

impl Lowering<'_> {
    fn expr(&self, e: &Expr) -> CExpr {
        match e {
            Expr::Const(v) => CExpr::Const(*v),
            Expr::Reg(r) => CExpr::Reg(self.regs[r]),
            Expr::Neg(inner) => CExpr::Neg(Box::new(self.expr(inner))),
            Expr::Bin(op, l, r) => CExpr::Bin(*op, Box::new(self.expr(l)), Box::new(self.expr(r))),
        }
    }

    fn push(&mut self, op: Op) -> Pc {
        self.ops.push(op);
        self.ops.len() - 1
    }

    /// Lowers `block` so that it continues at `cont`; returns its entry pc.
    fn block(&mut self, block: &[Instruction], cont: Pc) -> Pc {
        let mut next = cont;
        for ins in block.iter().rev() {
            let op = match ins {
                Instruction::Assign { reg, expr } => Op::Assign {
                    reg: self.regs[reg],
                    expr: self.expr(expr),
                    next,
                },
                Instruction::Store { loc, expr, order } => Op::Store {
                    loc: self.locs[loc],
                    expr: self.expr(expr),
                    release: *order == StoreOrder::Release,
                    next,
                },
                Instruction::Load { reg, loc, order, deps } => Op::Load {
                    reg: self.regs[reg],
                    loc: self.locs[loc],
                    acquire: *order == LoadOrder::Acquire,
                    deps: deps.iter().map(|d| self.regs[d]).collect(),
                    next,
                },
                Instruction::Fence => Op::Fence { next },
                Instruction::Swap { reg, loc, expr } => Op::Swap {
                    reg: self.regs[reg],
                    loc: self.locs[loc],
                    expr: self.expr(expr),
                    next,
                },
                Instruction::Branch {
                    cond,
                    equals,
                    then_block,
                    else_block,
                } => {
                    let then_pc = self.block(then_block, next);
                    let else_pc = self.block(else_block, next);
                    Op::Branch {
                        cond: self.expr(cond),
                        equals: *equals,
                        then_pc,
                        else_pc,
                    }
                }
            };
            next = self.push(op);
        }
        next
    }
}

impl Program {
    /// Lowers a validated test.
    pub fn new(test: &LitmusTest) -> Self {
        let locations: Vec<String> = test.init.keys().cloned().collect();
        let locs: BTreeMap<String, Loc> = locations.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let threads = test
            .threads
            .iter()
            .map(|t| {
                let registers: Vec<String> = t.registers().into_iter().collect();
                let mut low = Lowering {
                    locs: &locs,
                    regs: registers.iter().enumerate().map(|(i, r)| (r.clone(), i)).collect(),
                    ops: Vec::new(),
                };
                let entry = low.block(&t.body, END);
                ThreadCode {
                    name: t.name.clone(),
                    registers,
                    ops: low.ops,
                    entry,
                }
            })
            .collect();
        Program {
            init: test.init.values().copied().collect(),
            locations,
            threads,
        }
    }

    pub fn location(&self, name: &str) -> Option<Loc> {
        self.locations.iter().position(|l| l == name)
    }
}

/// A terminal state: memory plus every register of every thread. Register
/// names are unique across threads, so one map holds them all.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FinalState {
    pub mem: BTreeMap<String, Value>,
    pub regs: BTreeMap<String, Value>,
}

impl FinalState {
    pub fn from_parts(program: &Program, mem: &[Value], regs: &[Vec<Value>]) -> Self {
        FinalState {
            mem: program.locations.iter().cloned().zip(mem.iter().copied()).collect(),
            regs: program
                .threads
                .iter()
                .zip(regs)
                .flat_map(|(t, vals)| t.registers.iter().cloned().zip(vals.iter().copied()))
                .collect(),
        }
    }

    pub fn lookup(&self, name: &str) -> Option<Value> {
        self.mem.get(name).or_else(|| self.regs.get(name)).copied()
    }

    pub fn satisfies(&self, test: &LitmusTest) -> bool {
        test.post.eval(&|n| self.lookup(n))
    }
}

impl std::fmt::Display for FinalState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .regs
            .iter()
            .chain(&self.mem)
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        f.write_str(&parts.join(" "))
    }
}
