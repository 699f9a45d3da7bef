//! Helpers shared by the integration tests: corpus access, a generator of
//! small loop-free programs and set-based oracles for relations.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use itertools::Itertools;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use wmm_core::axiomatic::{
    armish_model, candidate_bound, reachable_axiomatic, sc_model, tso_model, Event, EventKind, ExecutionGraph, Tags,
};
use wmm_core::litmus::{load_corpus, parse_litmus, LitmusTest};
use wmm_core::operational::{explore, step, Semantics, SystemState, TraceStep};
use wmm_core::program::Program;
use wmm_core::relation::{restrict, Acyclicity, Carrier, EventSet, Relation};
use wmm_core::FinalState;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus"))
}

pub fn corpus() -> Vec<LitmusTest> {
    load_corpus(corpus_dir()).expect("bundled corpus parses")
}

pub fn corpus_test(name: &str) -> LitmusTest {
    corpus()
        .into_iter()
        .find(|t| t.name == name)
        .unwrap_or_else(|| panic!("corpus has {name}"))
}

// ---- random programs ----

#[derive(Debug, Clone)]
pub enum GenInstr {
    /// Store a constant, or the latest register when the flag is set.
    Store {
        loc: usize,
        value: i64,
        from_reg: bool,
    },
    /// Load, optionally with a dependency on the latest register.
    Load {
        loc: usize,
        dep: bool,
    },
    Fence,
    Swap {
        loc: usize,
        value: i64,
    },
    /// `if (latest = value) { loc := 1 }`
    IfStore {
        value: i64,
        loc: usize,
    },
}

#[derive(Debug, Clone)]
pub struct GenProgram {
    pub threads: Vec<Vec<GenInstr>>,
    /// Postcondition atoms as (index into final names, value).
    pub post: Vec<(usize, i64)>,
}

const LOCS: [&str; 2] = ["x", "y"];

impl GenProgram {
    pub fn render(&self) -> String {
        let mut out = String::from("test Gen\ninit { x = 0; y = 0; }\n");
        let mut names: Vec<String> = LOCS.iter().map(|s| s.to_string()).collect();
        for (t, code) in self.threads.iter().enumerate() {
            let tname = (b'A' + t as u8) as char;
            let mut last: Option<String> = None;
            let mut next = 0;
            let mut fresh = |last: &mut Option<String>| {
                next += 1;
                let r = format!("{}{next}", tname.to_ascii_lowercase());
                *last = Some(r.clone());
                r
            };
            let mut body = Vec::new();
            for ins in code {
                let text = match ins {
                    GenInstr::Store { loc, value, from_reg } => match (&last, from_reg) {
                        (Some(r), true) => format!("{} := {r}", LOCS[*loc]),
                        _ => format!("{} := {value}", LOCS[*loc]),
                    },
                    GenInstr::Load { loc, dep } => {
                        let prev = last.clone();
                        let r = fresh(&mut last);
                        match (prev, dep) {
                            (Some(p), true) => format!("{r} := {} dep {p}", LOCS[*loc]),
                            _ => format!("{r} := {}", LOCS[*loc]),
                        }
                    }
                    GenInstr::Fence => "fence".to_string(),
                    GenInstr::Swap { loc, value } => {
                        let r = fresh(&mut last);
                        format!("{r} := SWAP({}, {value})", LOCS[*loc])
                    }
                    GenInstr::IfStore { value, loc } => match &last {
                        Some(r) => format!("if ({r} = {value}) {{ {} := 1 }}", LOCS[*loc]),
                        None => format!("{} := {value}", LOCS[*loc]),
                    },
                };
                body.push(text);
            }
            names.extend((1..next + 1).map(|i| format!("{}{i}", tname.to_ascii_lowercase())));
            out.push_str(&format!("thread {tname} {{ {} }}\n", body.join("; ")));
        }
        let atoms: Vec<String> = self
            .post
            .iter()
            .map(|&(i, v)| format!("{} = {v}", names[i % names.len()]))
            .collect();
        let post = if atoms.is_empty() {
            "true".to_string()
        } else {
            atoms.join(" /\\ ")
        };
        out.push_str(&format!("exists ({post})\n"));
        out
    }

    /// Parses the program, dropping trailing instructions of the longest
    /// thread until the candidate count stays within `budget`.
    pub fn test_within(&self, budget: u128) -> LitmusTest {
        let mut p = self.clone();
        loop {
            let test = parse_litmus(&p.render()).expect("generated programs parse");
            if candidate_bound(&test) <= budget {
                return test;
            }
            let longest = (0..p.threads.len()).max_by_key(|&t| p.threads[t].len()).unwrap();
            p.threads[longest].pop();
        }
    }
}

fn gen_instr() -> impl Strategy<Value = GenInstr> {
    let value = 0i64..=2;
    let loc = 0usize..2;
    prop_oneof![
        3 => (loc.clone(), 1i64..=2, any::<bool>())
            .prop_map(|(loc, value, from_reg)| GenInstr::Store { loc, value, from_reg }),
        3 => (loc.clone(), any::<bool>()).prop_map(|(loc, dep)| GenInstr::Load { loc, dep }),
        1 => Just(GenInstr::Fence),
        1 => (loc.clone(), 1i64..=2).prop_map(|(loc, value)| GenInstr::Swap { loc, value }),
        1 => (value, loc).prop_map(|(value, loc)| GenInstr::IfStore { value, loc }),
    ]
}

/// Two or three threads of up to four instructions over `x` and `y`, with
/// constants from {0, 1, 2}. Release and acquire tags are left out.
pub fn gen_program() -> impl Strategy<Value = GenProgram> {
    (
        prop::collection::vec(prop::collection::vec(gen_instr(), 2..=4), 2..=3),
        prop::collection::vec((0usize..16, 0i64..=2), 0..=2),
    )
        .prop_map(|(threads, post)| GenProgram { threads, post })
}

/// Candidate budget that keeps debug-build property runs short.
pub const BUDGET: u128 = 20_000;

fn subset(a: &BTreeSet<FinalState>, b: &BTreeSet<FinalState>) -> bool {
    a.is_subset(b)
}

fn op_finals(test: &LitmusTest, sem: Semantics) -> BTreeSet<FinalState> {
    explore(test, sem).finals.into_keys().collect()
}

/// Each model allows at least what the stronger one does, in both engines.
pub fn check_monotone(test: &LitmusTest) -> Result<(), TestCaseError> {
    let sc = op_finals(test, Semantics::Sc);
    let tso = op_finals(test, Semantics::Tso);
    let pipe = op_finals(test, Semantics::PIPELINE);
    prop_assert!(subset(&sc, &tso), "operational SC not within TSO");
    prop_assert!(subset(&tso, &pipe), "operational TSO not within PIPELINE");

    let a_sc = reachable_axiomatic(test, &sc_model());
    let a_tso = reachable_axiomatic(test, &tso_model());
    let a_arm = reachable_axiomatic(test, &armish_model());
    prop_assert!(!a_sc.reachable || a_tso.reachable, "reachable under SC but not TSO");
    prop_assert!(
        !a_tso.reachable || a_arm.reachable,
        "reachable under TSO but not ARMish"
    );
    prop_assert!(subset(&a_sc.final_states, &a_tso.final_states));
    prop_assert!(subset(&a_tso.final_states, &a_arm.final_states));
    Ok(())
}

/// Both engines allow the same final states under SC and under TSO.
pub fn check_engines_agree(test: &LitmusTest) -> Result<(), TestCaseError> {
    for (sem, model) in [(Semantics::Sc, sc_model()), (Semantics::Tso, tso_model())] {
        let op = op_finals(test, sem);
        let ax = reachable_axiomatic(test, &model).final_states;
        prop_assert_eq!(op, ax, "{} engines differ", sem.name());
    }
    Ok(())
}

/// Replays a trace label by label against the step function.
pub fn replay(t: &LitmusTest, sem: Semantics, trace: &[TraceStep]) -> bool {
    let p = Program::new(t);
    let mut frontier = vec![SystemState::initial(&p)];
    for want in trace {
        let mut next = Vec::new();
        for s in &frontier {
            for (tr, s2) in step(&p, s, sem) {
                if TraceStep::new(&p, &tr) == *want {
                    next.push(s2);
                }
            }
        }
        if next.is_empty() {
            return false;
        }
        frontier = next;
    }
    frontier
        .iter()
        .any(|s| s.is_terminal() && s.final_state(&p).satisfies(t))
}

/// `a1`/`a2` are the halves of a swap on x; B's write of x is coherence
/// ordered between them, and B then reads the swap's write.
pub fn non_atomic_swap_graph() -> ExecutionGraph {
    let ev = |id, thread, kind, value, rmw, index| Event {
        id,
        thread,
        kind,
        location: Some("x".to_string()),
        value: Some(value),
        tags: Tags { rmw, ..Tags::default() },
        index,
    };
    let events = vec![
        ev(0, None, EventKind::Init, 0, false, 0),
        ev(1, Some(0), EventKind::Read, 0, true, 0),
        ev(2, Some(0), EventKind::Write, 1, true, 1),
        ev(3, Some(1), EventKind::Write, 2, false, 0),
        ev(4, Some(1), EventKind::Read, 1, false, 1),
    ];
    let c = Carrier::new(5);
    let rel = |p: &[(usize, usize)]| Relation::from_pairs(c, p.iter().copied()).unwrap();
    ExecutionGraph::new(
        events,
        vec!["A".into(), "B".into()],
        rel(&[(1, 2), (3, 4)]),
        rel(&[(0, 3), (0, 2), (3, 2)]),
        rel(&[(0, 1), (2, 4)]),
        Relation::empty(c),
        Relation::empty(c),
        rel(&[(1, 2)]),
        FinalState {
            mem: BTreeMap::from([("x".to_string(), 1)]),
            regs: BTreeMap::from([("r".to_string(), 0), ("q".to_string(), 1)]),
        },
    )
}

// ---- relation oracles ----

pub type Pairs = BTreeSet<(usize, usize)>;

pub fn to_pairs(r: &Relation) -> Pairs {
    r.pairs().collect()
}

pub fn oracle_compose(a: &Pairs, b: &Pairs) -> Pairs {
    let mut out = Pairs::new();
    for &(x, y) in a {
        for &(y2, z) in b {
            if y == y2 {
                out.insert((x, z));
            }
        }
    }
    out
}

pub fn oracle_closure(a: &Pairs) -> Pairs {
    let mut acc = a.clone();
    loop {
        let next: Pairs = acc.union(&oracle_compose(&acc, a)).copied().collect();
        if next == acc {
            return acc;
        }
        acc = next;
    }
}

/// Acyclic iff some permutation of the carrier orders every pair forwards.
pub fn oracle_acyclic(n: usize, a: &Pairs) -> bool {
    (0..n).permutations(n).any(|perm| {
        let mut pos = vec![0; n];
        for (i, &v) in perm.iter().enumerate() {
            pos[v] = i;
        }
        a.iter().all(|&(x, y)| pos[x] < pos[y])
    })
}

fn pairs_on(n: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0..n, 0..n), 0..=(n * n))
}

/// A carrier of size 1 to 7 with three relations and two event sets on it.
pub fn relation_case() -> impl Strategy<Value = RelCase> {
    (1usize..=7).prop_flat_map(|n| {
        (
            Just(n),
            pairs_on(n),
            pairs_on(n),
            pairs_on(n),
            prop::collection::vec(0..n, 0..=n),
            prop::collection::vec(0..n, 0..=n),
        )
            .prop_map(|(n, r, s, t, s1, s2)| RelCase { n, r, s, t, s1, s2 })
    })
}

#[derive(Debug, Clone)]
pub struct RelCase {
    pub n: usize,
    pub r: Vec<(usize, usize)>,
    pub s: Vec<(usize, usize)>,
    pub t: Vec<(usize, usize)>,
    pub s1: Vec<usize>,
    pub s2: Vec<usize>,
}

/// Library operations against the oracles, and the usual algebraic laws.
pub fn check_algebra(case: &RelCase) -> Result<(), TestCaseError> {
    let c = Carrier::new(case.n);
    let mk = |p: &[(usize, usize)]| Relation::from_pairs(c, p.iter().copied()).unwrap();
    let (r, s, t) = (mk(&case.r), mk(&case.s), mk(&case.t));
    let (pr, ps): (Pairs, Pairs) = (case.r.iter().copied().collect(), case.s.iter().copied().collect());

    prop_assert_eq!(
        to_pairs(&r.union(&s).unwrap()),
        pr.union(&ps).copied().collect::<Pairs>()
    );
    prop_assert_eq!(
        to_pairs(&r.intersect(&s).unwrap()),
        pr.intersection(&ps).copied().collect::<Pairs>()
    );
    prop_assert_eq!(
        to_pairs(&r.difference(&s).unwrap()),
        pr.difference(&ps).copied().collect::<Pairs>()
    );
    prop_assert_eq!(to_pairs(&r.compose(&s).unwrap()), oracle_compose(&pr, &ps));
    prop_assert_eq!(
        to_pairs(&r.inverse()),
        pr.iter().map(|&(a, b)| (b, a)).collect::<Pairs>()
    );
    prop_assert_eq!(to_pairs(&r.transitive_closure()), oracle_closure(&pr));
    let refl: Pairs = oracle_closure(&pr)
        .into_iter()
        .chain((0..case.n).map(|i| (i, i)))
        .collect();
    prop_assert_eq!(to_pairs(&r.reflexive_transitive_closure()), refl);

    let rs = r.compose(&s).unwrap();
    prop_assert_eq!(rs.compose(&t).unwrap(), r.compose(&s.compose(&t).unwrap()).unwrap());
    prop_assert_eq!(
        r.compose(&s.union(&t).unwrap()).unwrap(),
        rs.union(&r.compose(&t).unwrap()).unwrap()
    );
    prop_assert_eq!(rs.inverse(), s.inverse().compose(&r.inverse()).unwrap());
    prop_assert_eq!(r.compose(&Relation::identity(c)).unwrap(), r.clone());
    prop_assert_eq!(r.union(&Relation::empty(c)).unwrap(), r.clone());
    let tc = r.transitive_closure();
    prop_assert_eq!(tc.transitive_closure(), tc.clone());
    prop_assert!(tc.compose(&tc).unwrap().is_subset(&tc).unwrap());

    let s1 = EventSet::from_ids(c, case.s1.iter().copied()).unwrap();
    let s2 = EventSet::from_ids(c, case.s2.iter().copied()).unwrap();
    let expected: Pairs = pr
        .iter()
        .filter(|(a, b)| case.s1.contains(a) && case.s2.contains(b))
        .copied()
        .collect();
    prop_assert_eq!(to_pairs(&restrict(&s1, &r, &s2).unwrap()), expected);
    Ok(())
}

/// Acyclicity verdict against the permutation oracle, plus witness checks.
pub fn check_acyclic(n: usize, pairs: &[(usize, usize)]) -> Result<(), TestCaseError> {
    let r = Relation::from_pairs(Carrier::new(n), pairs.iter().copied()).unwrap();
    let oracle = oracle_acyclic(n, &pairs.iter().copied().collect());
    match r.acyclic() {
        Acyclicity::Acyclic { order } => {
            prop_assert!(oracle, "reported acyclic, oracle found a cycle");
            prop_assert_eq!(
                order.iter().copied().sorted().collect::<Vec<_>>(),
                (0..n).collect::<Vec<_>>()
            );
            let pos: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            for (a, b) in r.pairs() {
                prop_assert!(pos[&a] < pos[&b]);
            }
        }
        Acyclicity::Cyclic { cycle } => {
            prop_assert!(!oracle, "reported a cycle, oracle found an order");
            prop_assert!(cycle.len() >= 2);
            prop_assert_eq!(cycle.first(), cycle.last());
            for w in cycle.windows(2) {
                prop_assert!(r.contains(w[0], w[1]));
            }
        }
    }
    Ok(())
}

/// Sparse relations on up to seven points: DAG-ish seeds with an optional
/// back edge, so both verdicts come up often.
pub fn acyclic_case() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..=7).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec((0..n, 0..n), 0..=2 * n),
            any::<bool>(),
            prop::option::of((0..n, 0..n)),
        )
            .prop_map(|(n, seed, forward_only, back)| {
                let pairs = seed
                    .into_iter()
                    .filter(|&(a, b)| !forward_only || a < b)
                    .chain(back)
                    .collect();
                (n, pairs)
            })
    })
}
