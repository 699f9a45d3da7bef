//! Interleaving semantics: SC, and TSO with a FIFO write buffer per core.

use super::{Label, SwapPhase, SystemState, Transition};
use crate::program::{Op, Program, END};

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Sc,
    Tso,
}

pub fn step_sc(program: &Program, state: &SystemState) -> Vec<(Transition, SystemState)> {
    step(program, state, Mode::Sc)
}

pub fn step_tso(program: &Program, state: &SystemState) -> Vec<(Transition, SystemState)> {
    step(program, state, Mode::Tso)
}

fn step(program: &Program, state: &SystemState, mode: Mode) -> Vec<(Transition, SystemState)> {
    let mut out = Vec::new();
    for core in 0..state.cores.len() {
        if mode == Mode::Tso {
            flush(state, core, &mut out);
        }
        execute(program, state, core, mode, &mut out);
    }
    out
}

/// Moves the oldest buffered write of `core` to memory.
fn flush(state: &SystemState, core: usize, out: &mut Vec<(Transition, SystemState)>) {
    let Some(&(loc, value)) = state.cores[core].buffer.first() else {
        return;
    };
    if !state.may_access(core) {
        return;
    }
    let mut s = state.clone();
    s.cores[core].buffer.remove(0);
    s.mem[loc] = value;
    out.push((
        Transition {
            core,
            label: Label::Write { loc, value },
        },
        s,
    ));
}

fn execute(program: &Program, state: &SystemState, core: usize, mode: Mode, out: &mut Vec<(Transition, SystemState)>) {
    let c = &state.cores[core];
    if c.pc == END {
        return;
    }
    let mut push = |label: Label, s: SystemState| out.push((Transition { core, label }, s));
    let buffered = |loc| c.buffer.iter().rev().find(|(l, _)| *l == loc).map(|&(_, v)| v);

    match &program.threads[core].ops[c.pc] {
        Op::Assign { reg, expr, next } => {
            let mut s = state.clone();
            let cs = &mut s.cores[core];
            cs.regs[*reg] = expr.eval(&cs.regs);
            cs.pc = *next;
            push(Label::Tau, s);
        }
        Op::Branch {
            cond,
            equals,
            then_pc,
            else_pc,
        } => {
            let mut s = state.clone();
            let cs = &mut s.cores[core];
            cs.pc = if cond.eval(&cs.regs) == *equals {
                *then_pc
            } else {
                *else_pc
            };
            push(Label::Tau, s);
        }
        Op::Store { loc, expr, next, .. } => {
            let value = expr.eval(&c.regs);
            let mut s = state.clone();
            s.cores[core].pc = *next;
            match mode {
                Mode::Sc => {
                    if state.may_access(core) {
                        s.mem[*loc] = value;
                        push(Label::Write { loc: *loc, value }, s);
                    }
                }
                Mode::Tso => {
                    s.cores[core].buffer.push((*loc, value));
                    push(Label::Tau, s);
                }
            }
        }
        Op::Load { reg, loc, next, .. } => {
            if let (Mode::Tso, Some(value)) = (mode, buffered(*loc)) {
                let mut s = state.clone();
                s.cores[core].regs[*reg] = value;
                s.cores[core].pc = *next;
                push(Label::Tau, s);
            } else if state.may_access(core) {
                let value = state.mem[*loc];
                let mut s = state.clone();
                s.cores[core].regs[*reg] = value;
                s.cores[core].pc = *next;
                push(Label::Read { loc: *loc, value }, s);
            }
        }
        Op::Fence { next } => {
            if c.buffer.is_empty() {
                let mut s = state.clone();
                s.cores[core].pc = *next;
                push(Label::Fence, s);
            }
        }
        Op::Swap { reg, loc, expr, next } => match c.swap {
            SwapPhase::Idle => {
                if state.lock.is_none() && c.buffer.is_empty() {
                    let mut s = state.clone();
                    s.lock = Some(core);
                    s.cores[core].swap = SwapPhase::Locked;
                    push(Label::Tau, s);
                }
            }
            SwapPhase::Locked => {
                let value = state.mem[*loc];
                let mut s = state.clone();
                s.cores[core].swap = SwapPhase::Read(value);
                push(Label::Read { loc: *loc, value }, s);
            }
            SwapPhase::Read(tmp) => {
                let value = expr.eval(&c.regs);
                let mut s = state.clone();
                s.cores[core].swap = SwapPhase::Written(tmp);
                match mode {
                    Mode::Sc => {
                        s.mem[*loc] = value;
                        push(Label::Write { loc: *loc, value }, s);
                    }
                    Mode::Tso => {
                        s.cores[core].buffer.push((*loc, value));
                        push(Label::Tau, s);
                    }
                }
            }
            SwapPhase::Written(tmp) => {
                if c.buffer.is_empty() {
                    let mut s = state.clone();
                    let cs = &mut s.cores[core];
                    cs.regs[*reg] = tmp;
                    cs.swap = SwapPhase::Idle;
                    cs.pc = *next;
                    s.lock = None;
                    push(Label::Tau, s);
                }
            }
        },
    }
}
