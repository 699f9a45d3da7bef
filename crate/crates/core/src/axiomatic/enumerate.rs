//! Candidate-execution enumeration.
//!
//! A candidate fixes a path through every thread (one guess per branch), an
//! rf source for every read and a coherence order per location. Values follow
//! from the choices: each thread is evaluated symbolically once per path
//! choice, then every rf choice is solved for concrete values. Choices whose
//! values are inconsistent (a branch guessed against its computed condition)
//! or ungrounded (a read whose value depends on itself) are dropped.

use itertools::Itertools;

use super::graph::{Event, EventKind, ExecutionGraph, Tags};
use crate::litmus::{BinOp, LitmusTest, Value};
use crate::program::{CExpr, FinalState, Op, Pc, Program, ThreadCode, END};
use crate::relation::{Carrier, EventId, Relation};

/// All index vectors `v` with `v[i] < radices[i]`, lexicographically.
pub(crate) fn odometer(radices: Vec<usize>) -> impl Iterator<Item = Vec<usize>> {
    let mut current = if radices.contains(&0) {
        None
    } else {
        Some(vec![0; radices.len()])
    };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut i = radices.len();
        loop {
            if i == 0 {
                current = None;
                break;
            }
            i -= 1;
            let cur = current.as_mut().expect("live odometer");
            cur[i] += 1;
            if cur[i] < radices[i] {
                break;
            }
            cur[i] = 0;
        }
        Some(out)
    })
}

/// A step along a thread path: the op and, for branches, the guess.
type Step = (Pc, Option<bool>);

/// Every path through a thread, then-branches first.
fn thread_paths(code: &ThreadCode) -> Vec<Vec<Step>> {
    fn walk(code: &ThreadCode, pc: Pc, prefix: &mut Vec<Step>, out: &mut Vec<Vec<Step>>) {
        if pc == END {
            out.push(prefix.clone());
            return;
        }
        match &code.ops[pc] {
            Op::Branch { then_pc, else_pc, .. } => {
                for (guess, next) in [(true, *then_pc), (false, *else_pc)] {
                    prefix.push((pc, Some(guess)));
                    walk(code, next, prefix, out);
                    prefix.pop();
                }
            }
            op => {
                prefix.push((pc, None));
                walk(code, op.next().expect("non-branch op has a successor"), prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(code, code.entry, &mut Vec::new(), &mut out);
    out
}

/// A value as a function of read values.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Sym {
    Const(Value),
    Read(EventId),
    Neg(Box<Sym>),
    Bin(BinOp, Box<Sym>, Box<Sym>),
}

impl Sym {
    fn eval(&self, reads: &[Option<Value>]) -> Option<Value> {
        Some(match self {
            Sym::Const(v) => *v,
            Sym::Read(e) => reads[*e]?,
            Sym::Neg(s) => s.eval(reads)?.wrapping_neg(),
            Sym::Bin(op, l, r) => op.apply(l.eval(reads)?, r.eval(reads)?),
        })
    }

    fn reads(&self, out: &mut Vec<EventId>) {
        match self {
            Sym::Const(_) => {}
            Sym::Read(e) => {
                if !out.contains(e) {
                    out.push(*e);
                }
            }
            Sym::Neg(s) => s.reads(out),
            Sym::Bin(_, l, r) => {
                l.reads(out);
                r.reads(out);
            }
        }
    }

    fn of(expr: &CExpr, regs: &[Sym]) -> Sym {
        match expr {
            CExpr::Const(v) => Sym::Const(*v),
            CExpr::Reg(r) => regs[*r].clone(),
            CExpr::Neg(e) => match Sym::of(e, regs) {
                Sym::Const(v) => Sym::Const(v.wrapping_neg()),
                s => Sym::Neg(Box::new(s)),
            },
            CExpr::Bin(op, l, r) => match (Sym::of(l, regs), Sym::of(r, regs)) {
                (Sym::Const(a), Sym::Const(b)) => Sym::Const(op.apply(a, b)),
                (a, b) => Sym::Bin(*op, Box::new(a), Box::new(b)),
            },
        }
    }

    fn read_list(&self) -> Vec<EventId> {
        let mut out = Vec::new();
        self.reads(&mut out);
        out
    }
}

fn reads_of(expr: &CExpr, regs: &[Sym]) -> Vec<EventId> {
    let mut out = Vec::new();
    for r in expr.reg_list() {
        regs[r].reads(&mut out);
    }
    out
}

/// Everything fixed by a choice of thread paths: events without values,
/// po/dep/ctrl/rmw, and symbolic values.
struct Layout {
    carrier: Carrier,
    events: Vec<Event>,
    po: Relation,
    dep: Relation,
    ctrl: Relation,
    rmw: Relation,
    /// Value of every Write event, indexed by event id.
    write_sym: Vec<Option<Sym>>,
    /// Branch conditions paired with the required outcome.
    checks: Vec<(Sym, Value, bool)>,
    final_regs: Vec<Vec<Sym>>,
    reads: Vec<EventId>,
    /// rf candidates per read, Init first then writes by id.
    sources: Vec<Vec<EventId>>,
    /// Non-init writes per location, by id.
    writes_by_loc: Vec<Vec<EventId>>,
}

fn build_layout(program: &Program, paths: &[&Vec<Step>]) -> Layout {
    let nloc = program.locations.len();
    let mut events: Vec<Event> = (0..nloc)
        .map(|l| Event {
            id: l,
            thread: None,
            kind: EventKind::Init,
            location: Some(program.locations[l].clone()),
            value: Some(program.init[l]),
            tags: Tags::default(),
            index: 0,
        })
        .collect();
    let mut write_sym: Vec<Option<Sym>> = vec![None; nloc];
    let mut checks = Vec::new();
    let mut final_regs = Vec::new();
    let mut dep_pairs = Vec::new();
    let mut ctrl_pairs = Vec::new();
    let mut rmw_pairs = Vec::new();
    let mut thread_ranges = Vec::new();

    for (t, (code, path)) in program.threads.iter().zip(paths).enumerate() {
        let start = events.len();
        let mut regs: Vec<Sym> = vec![Sym::Const(0); code.registers.len()];
        let mut ctrl_src: Vec<EventId> = Vec::new();
        let mut push = |events: &mut Vec<Event>,
                        write_sym: &mut Vec<Option<Sym>>,
                        kind: EventKind,
                        loc: Option<usize>,
                        tags: Tags,
                        sym: Option<Sym>,
                        ctrl_src: &[EventId]| {
            let id = events.len();
            events.push(Event {
                id,
                thread: Some(t),
                kind,
                location: loc.map(|l| program.locations[l].clone()),
                value: None,
                tags,
                index: id - start,
            });
            write_sym.push(sym);
            ctrl_pairs.extend(ctrl_src.iter().map(|&c| (c, id)));
            id
        };
        for &(pc, guess) in path.iter() {
            match &code.ops[pc] {
                Op::Assign { reg, expr, .. } => regs[*reg] = Sym::of(expr, &regs),
                Op::Store { loc, expr, release, .. } => {
                    let sym = Sym::of(expr, &regs);
                    let tags = Tags {
                        release: *release,
                        ..Tags::default()
                    };
                    let w = push(
                        &mut events,
                        &mut write_sym,
                        EventKind::Write,
                        Some(*loc),
                        tags,
                        Some(sym),
                        &ctrl_src,
                    );
                    dep_pairs.extend(reads_of(expr, &regs).into_iter().map(|r| (r, w)));
                }
                Op::Load {
                    reg,
                    loc,
                    acquire,
                    deps,
                    ..
                } => {
                    let tags = Tags {
                        acquire: *acquire,
                        ..Tags::default()
                    };
                    let r = push(
                        &mut events,
                        &mut write_sym,
                        EventKind::Read,
                        Some(*loc),
                        tags,
                        None,
                        &ctrl_src,
                    );
                    for d in deps {
                        dep_pairs.extend(regs[*d].read_list().into_iter().map(|s| (s, r)));
                    }
                    regs[*reg] = Sym::Read(r);
                }
                Op::Fence { .. } => {
                    push(
                        &mut events,
                        &mut write_sym,
                        EventKind::Fence,
                        None,
                        Tags::default(),
                        None,
                        &ctrl_src,
                    );
                }
                Op::Swap { reg, loc, expr, .. } => {
                    let tags = Tags {
                        rmw: true,
                        ..Tags::default()
                    };
                    let sources = reads_of(expr, &regs);
                    let r = push(
                        &mut events,
                        &mut write_sym,
                        EventKind::Read,
                        Some(*loc),
                        tags,
                        None,
                        &ctrl_src,
                    );
                    let sym = Sym::of(expr, &regs);
                    let w = push(
                        &mut events,
                        &mut write_sym,
                        EventKind::Write,
                        Some(*loc),
                        tags,
                        Some(sym),
                        &ctrl_src,
                    );
                    for s in sources {
                        dep_pairs.push((s, r));
                        dep_pairs.push((s, w));
                    }
                    rmw_pairs.push((r, w));
                    regs[*reg] = Sym::Read(r);
                }
                Op::Branch { cond, equals, .. } => {
                    let sym = Sym::of(cond, &regs);
                    for s in sym.read_list() {
                        if !ctrl_src.contains(&s) {
                            ctrl_src.push(s);
                        }
                    }
                    checks.push((sym, *equals, guess.expect("branch steps carry a guess")));
                }
            }
        }
        thread_ranges.push(start..events.len());
        final_regs.push(regs);
    }

    let carrier = Carrier::new(events.len());
    let mut po = Relation::empty(carrier);
    for range in &thread_ranges {
        for a in range.clone() {
            for b in a + 1..range.end {
                po.insert(a, b);
            }
        }
    }
    let rel = |pairs: Vec<(EventId, EventId)>| Relation::from_pairs(carrier, pairs).expect("event ids within carrier");

    let mut writes_by_loc = vec![Vec::new(); nloc];
    for e in &events[nloc..] {
        if e.kind == EventKind::Write {
            writes_by_loc[program
                .location(e.location.as_deref().unwrap_or_default())
                .expect("known location")]
            .push(e.id);
        }
    }
    let mut reads = Vec::new();
    let mut sources = Vec::new();
    for e in &events {
        if e.kind == EventKind::Read {
            let l = program
                .location(e.location.as_deref().unwrap_or_default())
                .expect("known location");
            reads.push(e.id);
            sources.push(std::iter::once(l).chain(writes_by_loc[l].iter().copied()).collect());
        }
    }

    Layout {
        carrier,
        events,
        po,
        dep: rel(dep_pairs),
        ctrl: rel(ctrl_pairs),
        rmw: rel(rmw_pairs),
        write_sym,
        checks,
        final_regs,
        reads,
        sources,
        writes_by_loc,
    }
}

/// Concrete values for one rf choice, or `None` if the choice is
/// inconsistent or ungrounded.
struct Solved {
    rf: Vec<(EventId, EventId)>,
    read_vals: Vec<Option<Value>>,
}

fn solve(layout: &Layout, choice: &[usize]) -> Option<Solved> {
    let n = layout.events.len();
    let rf: Vec<(EventId, EventId)> = layout
        .reads
        .iter()
        .zip(choice)
        .enumerate()
        .map(|(i, (&r, &c))| (layout.sources[i][c], r))
        .collect();
    let mut read_vals: Vec<Option<Value>> = vec![None; n];
    loop {
        let mut progress = false;
        for &(w, r) in &rf {
            if read_vals[r].is_some() {
                continue;
            }
            let v = match &layout.events[w] {
                e if e.kind == EventKind::Init => e.value,
                _ => layout.write_sym[w].as_ref().and_then(|s| s.eval(&read_vals)),
            };
            if v.is_some() {
                read_vals[r] = v;
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    if rf.iter().any(|&(_, r)| read_vals[r].is_none()) {
        return None;
    }
    let consistent = layout
        .checks
        .iter()
        .all(|(sym, equals, guess)| (sym.eval(&read_vals) == Some(*equals)) == *guess);
    consistent.then_some(Solved { rf, read_vals })
}

fn graph(program: &Program, layout: &Layout, solved: &Solved, co_orders: &[Vec<EventId>]) -> ExecutionGraph {
    let mut events = layout.events.clone();
    for e in events.iter_mut() {
        e.value = match e.kind {
            EventKind::Init => e.value,
            EventKind::Read => solved.read_vals[e.id],
            EventKind::Write => layout.write_sym[e.id].as_ref().and_then(|s| s.eval(&solved.read_vals)),
            EventKind::Fence => None,
        };
    }
    let mut co = Relation::empty(layout.carrier);
    let mut mem = program.init.clone();
    for (l, order) in co_orders.iter().enumerate() {
        let chain: Vec<EventId> = std::iter::once(l).chain(order.iter().copied()).collect();
        for (i, &a) in chain.iter().enumerate() {
            for &b in &chain[i + 1..] {
                co.insert(a, b);
            }
        }
        if let Some(&last) = chain.last() {
            mem[l] = events[last].value.expect("writes carry values");
        }
    }
    let rf = Relation::from_pairs(layout.carrier, solved.rf.iter().copied()).expect("event ids within carrier");
    let regs: Vec<Vec<Value>> = layout
        .final_regs
        .iter()
        .map(|syms| {
            syms.iter()
                .map(|s| s.eval(&solved.read_vals).expect("grounded solution"))
                .collect()
        })
        .collect();
    ExecutionGraph::new(
        events,
        program.threads.iter().map(|t| t.name.clone()).collect(),
        layout.po.clone(),
        co,
        rf,
        layout.dep.clone(),
        layout.ctrl.clone(),
        layout.rmw.clone(),
        FinalState::from_parts(program, &mem, &regs),
    )
}

/// Lazily enumerates candidates in lexicographic choice order: thread paths
/// (first thread most significant), then rf sources (first read most
/// significant), then coherence orders (first location most significant).
pub fn candidates(test: &LitmusTest) -> impl Iterator<Item = ExecutionGraph> + Send {
    let program = std::sync::Arc::new(Program::new(test));
    let all_paths: Vec<Vec<Vec<Step>>> = program.threads.iter().map(thread_paths).collect();
    let radices = all_paths.iter().map(Vec::len).collect();
    let prog = program.clone();
    odometer(radices).flat_map(move |pick| {
        let paths: Vec<&Vec<Step>> = pick.iter().zip(&all_paths).map(|(&i, p)| &p[i]).collect();
        let layout = std::sync::Arc::new(build_layout(&prog, &paths));
        let co_choices: Vec<Vec<Vec<EventId>>> = layout
            .writes_by_loc
            .iter()
            .map(|ws| ws.iter().copied().permutations(ws.len()).collect())
            .collect();
        let co_choices = std::sync::Arc::new(co_choices);
        let prog = prog.clone();
        let rf_radices = layout.sources.iter().map(Vec::len).collect();
        let layout2 = layout.clone();
        odometer(rf_radices)
            .filter_map(move |choice| solve(&layout2, &choice))
            .flat_map(move |solved| {
                let (layout, co_choices, prog) = (layout.clone(), co_choices.clone(), prog.clone());
                odometer(co_choices.iter().map(Vec::len).collect()).map(move |co_pick| {
                    let orders: Vec<Vec<EventId>> = co_pick
                        .iter()
                        .zip(co_choices.iter())
                        .map(|(&i, perms)| perms[i].clone())
                        .collect();
                    graph(&prog, &layout, &solved, &orders)
                })
            })
    })
}

/// Every candidate execution, in enumeration order.
pub fn enumerate_candidates(test: &LitmusTest) -> Vec<ExecutionGraph> {
    candidates(test).collect()
}

/// Upper bound on the number of candidates, before discarding inconsistent
/// value choices.
pub fn candidate_bound(test: &LitmusTest) -> u128 {
    let program = Program::new(test);
    let all_paths: Vec<Vec<Vec<Step>>> = program.threads.iter().map(thread_paths).collect();
    let mut total: u128 = 0;
    for pick in odometer(all_paths.iter().map(Vec::len).collect()) {
        let paths: Vec<&Vec<Step>> = pick.iter().zip(&all_paths).map(|(&i, p)| &p[i]).collect();
        let layout = build_layout(&program, &paths);
        let rf: u128 = layout.sources.iter().map(|s| s.len() as u128).product();
        let co: u128 = layout
            .writes_by_loc
            .iter()
            .map(|ws| (1..=ws.len() as u128).product::<u128>())
            .product();
        total = total.saturating_add(rf.saturating_mul(co));
    }
    total
}
