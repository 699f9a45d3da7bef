//! Pipeline semantics: instructions are fetched in order into a pending
//! list and commit out of order once the ordering guards allow it.
//!
//! Guards, for an entry at position `i` (earlier means `j < i`, pending means
//! not yet committed):
//! - assignments and branches need their operands; a branch whose condition
//!   disagrees with the fetched direction is a dead end;
//! - a fence needs every earlier entry committed;
//! - a store needs its value, no earlier pending access to its location, no
//!   earlier pending fence, acquire load or branch; a release store needs
//!   every earlier entry committed;
//! - a load needs its `dep` registers, no earlier pending fence or acquire
//!   load, and the nearest earlier pending access to its location (if any)
//!   must be a store or swap with a known value, which it forwards;
//! - a swap takes the global lock with its read and releases it with its
//!   write, under the store guards.
//!
//! Committed entries at the head retire into the register file.

use super::{Entry, Label, PipelineOptions, Status, SystemState, Transition};
use crate::litmus::Value;
use crate::program::{Loc, Op, Program, Reg, END};

pub fn step_pipeline(program: &Program, state: &SystemState, opts: PipelineOptions) -> Vec<(Transition, SystemState)> {
    let mut out = Vec::new();
    for core in 0..state.cores.len() {
        out.extend(fetch(program, state, core));
        for i in 0..state.cores[core].pending.len() {
            commit(program, state, core, i, opts, &mut out);
        }
    }
    out
}

/// Fetch steps of one core: one per branch direction, or one.
pub(super) fn fetch(program: &Program, state: &SystemState, core: usize) -> Vec<(Transition, SystemState)> {
    let c = &state.cores[core];
    if c.pc == END {
        return Vec::new();
    }
    let tau = Transition {
        core,
        label: Label::Tau,
    };
    let targets: Vec<(Option<bool>, usize)> = match &program.threads[core].ops[c.pc] {
        Op::Branch { then_pc, else_pc, .. } => vec![(Some(true), *then_pc), (Some(false), *else_pc)],
        op => vec![(None, op.next().expect("non-branch op has a successor"))],
    };
    targets
        .into_iter()
        .map(|(guess, next)| {
            let mut s = state.clone();
            let cs = &mut s.cores[core];
            cs.pending.push(Entry {
                pc: c.pc,
                guess,
                status: Status::Waiting,
            });
            cs.pc = next;
            (tau, s)
        })
        .collect()
}

fn dest(op: &Op) -> Option<Reg> {
    match op {
        Op::Assign { reg, .. } | Op::Load { reg, .. } | Op::Swap { reg, .. } => Some(*reg),
        _ => None,
    }
}

fn location(op: &Op) -> Option<Loc> {
    match op {
        Op::Store { loc, .. } | Op::Load { loc, .. } | Op::Swap { loc, .. } => Some(*loc),
        _ => None,
    }
}

struct View<'a> {
    program: &'a Program,
    state: &'a SystemState,
    core: usize,
}

impl View<'_> {
    fn op(&self, j: usize) -> &Op {
        let e = &self.state.cores[self.core].pending[j];
        &self.program.threads[self.core].ops[e.pc]
    }

    fn entries(&self) -> &[Entry] {
        &self.state.cores[self.core].pending
    }

    /// Value of `reg` as seen by entry `i`: from the nearest earlier entry
    /// writing it, or the register file.
    fn reg(&self, i: usize, reg: Reg) -> Option<Value> {
        for j in (0..i).rev() {
            if dest(self.op(j)) == Some(reg) {
                return match self.entries()[j].status {
                    Status::Done(v) => v,
                    _ => None,
                };
            }
        }
        Some(self.state.cores[self.core].regs[reg])
    }

    fn eval(&self, i: usize, expr: &crate::program::CExpr) -> Option<Value> {
        expr.try_eval(&|r| self.reg(i, r))
    }

    fn earlier_pending(&self, i: usize) -> impl Iterator<Item = (usize, &Op)> + '_ {
        (0..i)
            .filter(|&j| !self.entries()[j].is_done())
            .map(|j| (j, self.op(j)))
    }

    fn all_earlier_done(&self, i: usize) -> bool {
        self.earlier_pending(i).next().is_none()
    }

    /// Guards shared by stores and swaps.
    fn store_may_commit(&self, i: usize, loc: Loc) -> bool {
        self.state.may_access(self.core)
            && self.earlier_pending(i).all(|(_, op)| {
                location(op) != Some(loc)
                    && !matches!(
                        op,
                        Op::Fence { .. } | Op::Branch { .. } | Op::Load { acquire: true, .. }
                    )
            })
    }

    /// The lock holder only performs the write half of its swap.
    fn holds_lock(&self) -> bool {
        self.state.lock == Some(self.core)
    }
}

fn commit(
    program: &Program,
    state: &SystemState,
    core: usize,
    i: usize,
    opts: PipelineOptions,
    out: &mut Vec<(Transition, SystemState)>,
) {
    let v = View { program, state, core };
    let entry = v.entries()[i];
    if entry.is_done() {
        return;
    }
    let done = |label: Label, status: Status, mem: Option<(Loc, Value)>, lock: Option<Option<usize>>| {
        let mut s = state.clone();
        s.cores[core].pending[i].status = status;
        if let Some((loc, value)) = mem {
            s.mem[loc] = value;
        }
        if let Some(lock) = lock {
            s.lock = lock;
        }
        retire(program, &mut s, core);
        (Transition { core, label }, s)
    };

    match v.op(i) {
        Op::Assign { expr, .. } => {
            if let Some(value) = v.eval(i, expr) {
                out.push(done(Label::Tau, Status::Done(Some(value)), None, None));
            }
        }
        Op::Branch { cond, equals, .. } => {
            if let Some(value) = v.eval(i, cond) {
                if (value == *equals) == entry.guess.expect("fetched branches carry a guess") {
                    out.push(done(Label::Tau, Status::Done(None), None, None));
                }
            }
        }
        Op::Fence { .. } => {
            if v.all_earlier_done(i) {
                out.push(done(Label::Fence, Status::Done(None), None, None));
            }
        }
        Op::Store { loc, expr, release, .. } => {
            if v.holds_lock() || !v.store_may_commit(i, *loc) || (*release && !v.all_earlier_done(i)) {
                return;
            }
            if let Some(value) = v.eval(i, expr) {
                out.push(done(
                    Label::Write { loc: *loc, value },
                    Status::Done(None),
                    Some((*loc, value)),
                    None,
                ));
            }
        }
        Op::Load { loc, deps, .. } => {
            if deps.iter().any(|&d| v.reg(i, d).is_none()) {
                return;
            }
            let blocked = v.earlier_pending(i).any(|(_, op)| match op {
                Op::Fence { .. } | Op::Load { acquire: true, .. } => true,
                Op::Store { release: true, .. } => opts.strong_release_acquire && is_acquire(v.op(i)),
                _ => false,
            });
            if blocked {
                return;
            }
            let nearest = v.earlier_pending(i).filter(|(_, op)| location(op) == Some(*loc)).last();
            match nearest {
                None => {
                    if v.holds_lock() || !state.may_access(core) {
                        return;
                    }
                    let value = state.mem[*loc];
                    out.push(done(
                        Label::Read { loc: *loc, value },
                        Status::Done(Some(value)),
                        None,
                        None,
                    ));
                }
                Some((j, Op::Store { expr, .. } | Op::Swap { expr, .. })) => {
                    if let Some(value) = v.eval(j, expr) {
                        out.push(done(Label::Tau, Status::Done(Some(value)), None, None));
                    }
                }
                Some(_) => {}
            }
        }
        Op::Swap { loc, expr, .. } => match entry.status {
            Status::Waiting => {
                if state.lock.is_some() || !v.store_may_commit(i, *loc) || v.eval(i, expr).is_none() {
                    return;
                }
                let value = state.mem[*loc];
                out.push(done(
                    Label::Read { loc: *loc, value },
                    Status::Half(value),
                    None,
                    Some(Some(core)),
                ));
            }
            Status::Half(old) => {
                let value = v.eval(i, expr).expect("operands resolved before the read half");
                out.push(done(
                    Label::Write { loc: *loc, value },
                    Status::Done(Some(old)),
                    Some((*loc, value)),
                    Some(None),
                ));
            }
            Status::Done(_) => {}
        },
    }
}

fn is_acquire(op: &Op) -> bool {
    matches!(op, Op::Load { acquire: true, .. })
}

/// Retires committed entries from the head into the register file.
fn retire(program: &Program, s: &mut SystemState, core: usize) {
    let cs = &mut s.cores[core];
    while let Some(head) = cs.pending.first() {
        let Status::Done(value) = head.status else {
            break;
        };
        if let (Some(reg), Some(value)) = (dest(&program.threads[core].ops[head.pc]), value) {
            cs.regs[reg] = value;
        }
        cs.pending.remove(0);
    }
}
