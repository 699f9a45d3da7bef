mod common;

use std::collections::{BTreeSet, HashSet, VecDeque};

use common::*;
use wmm_core::axiomatic::{
    armish_model, check_model, enumerate_candidates, reachable_axiomatic, sc_model, tso_model, EventKind, ModelSpec,
};
use wmm_core::litmus::{parse_litmus, LitmusTest};
use wmm_core::operational::{explore, reachable_operational, step, Label, Semantics, SystemState};
use wmm_core::program::Program;
use wmm_core::verdict::Witness;
use wmm_core::FinalState;

fn models() -> [(&'static str, ModelSpec, Semantics); 3] {
    [
        ("SC", sc_model(), Semantics::Sc),
        ("TSO", tso_model(), Semantics::Tso),
        ("ARM", armish_model(), Semantics::PIPELINE),
    ]
}

fn outcomes(finals: &BTreeSet<FinalState>, names: &[&str]) -> BTreeSet<Vec<i64>> {
    finals
        .iter()
        .map(|f| names.iter().map(|n| f.lookup(n).unwrap()).collect())
        .collect()
}

#[test]
fn engines_agree_on_the_corpus() {
    for t in corpus() {
        for (name, model, sem) in models() {
            let ax = reachable_axiomatic(&t, &model);
            let op = reachable_operational(&t, sem);
            assert_eq!(ax.reachable, op.reachable, "{} under {name}", t.name);
            if name != "ARM" {
                assert_eq!(ax.final_states, op.final_states, "{} under {name}", t.name);
            }
        }
    }
}

#[test]
fn allowed_sets_shrink_towards_sc() {
    for t in corpus() {
        let finals: Vec<_> = models()
            .into_iter()
            .map(|(_, m, s)| (reachable_axiomatic(&t, &m).final_states, explore(&t, s)))
            .collect();
        for w in finals.windows(2) {
            assert!(w[0].0.is_subset(&w[1].0), "{}", t.name);
            let (a, b): (BTreeSet<_>, BTreeSet<_>) = (
                w[0].1.finals.keys().cloned().collect(),
                w[1].1.finals.keys().cloned().collect(),
            );
            assert!(a.is_subset(&b), "{}", t.name);
        }
    }
}

#[test]
fn candidates_are_well_formed() {
    for t in corpus() {
        for g in enumerate_candidates(&t) {
            let n = g.events.len();
            for r in (0..n).filter(|&r| g.events[r].is_read()) {
                let sources: Vec<usize> = (0..n).filter(|&w| g.rf.contains(w, r)).collect();
                assert_eq!(sources.len(), 1, "{}: one source per read", t.name);
                let w = &g.events[sources[0]];
                assert!(w.is_write());
                assert_eq!(w.location, g.events[r].location);
                assert_eq!(w.value, g.events[r].value);
            }
            for (w, r) in g.rf.pairs() {
                assert!(g.events[w].is_write() && g.events[r].is_read());
            }
            for (a, b) in g.co.pairs() {
                assert!(g.events[a].is_write() && g.events[b].is_write());
                assert_eq!(g.events[a].location, g.events[b].location);
                assert!(!g.co.contains(b, a));
                assert_ne!(g.events[b].kind, EventKind::Init);
            }
            for a in (0..n).filter(|&a| g.events[a].is_write()) {
                for b in (0..n).filter(|&b| b != a && g.events[b].is_write()) {
                    if g.events[a].location == g.events[b].location {
                        assert!(g.co.contains(a, b) || g.co.contains(b, a), "{}: co total", t.name);
                    }
                }
            }
            assert!(g.co.transitive_closure() == g.co);
        }
    }
}

#[test]
fn every_allowed_candidate_is_coherent() {
    let coherence = wmm_core::axiomatic::parse_model("model coh\nacyclic poloc | co | rf | fr as coherence").unwrap();
    for t in corpus() {
        for g in enumerate_candidates(&t) {
            for (name, m, _) in models() {
                if check_model(&g, &m).is_ok() {
                    assert!(check_model(&g, &coherence).is_ok(), "{} under {name}", t.name);
                }
            }
        }
    }
}

fn swap_outcomes(t: &LitmusTest, names: &[&str]) -> Vec<(String, BTreeSet<Vec<i64>>)> {
    let mut out = Vec::new();
    for (name, m, s) in models() {
        out.push((
            format!("{name}/ax"),
            outcomes(&reachable_axiomatic(t, &m).final_states, names),
        ));
        out.push((
            format!("{name}/op"),
            outcomes(&reachable_operational(t, s).final_states, names),
        ));
    }
    out
}

#[test]
fn double_swap_has_exactly_two_outcomes() {
    let t = corpus_test("SWAP2");
    let expected = BTreeSet::from([vec![0, 1], vec![1, 0]]);
    for (who, got) in swap_outcomes(&t, &["r1", "r2"]) {
        assert_eq!(got, expected, "{who}");
    }
}

#[test]
fn single_swap_exchanges() {
    let t = parse_litmus("test S init { x = 2; } thread A { r := SWAP(x, 5) } exists (r = 2 /\\ x = 5)").unwrap();
    for (who, got) in swap_outcomes(&t, &["r", "x"]) {
        assert_eq!(got, BTreeSet::from([vec![2, 5]]), "{who}");
    }
}

#[test]
fn plain_store_never_splits_a_swap() {
    let t = corpus_test("SWAP+store");
    // store first: swap reads 9 and leaves 5; swap first: store overwrites
    let expected = BTreeSet::from([vec![0, 9], vec![9, 5]]);
    for (who, got) in swap_outcomes(&t, &["r", "x"]) {
        assert_eq!(got, expected, "{who}");
    }
}

#[test]
fn store_buffering_outcomes() {
    let sb = corpus_test("SB");
    let sc = outcomes(&reachable_operational(&sb, Semantics::Sc).final_states, &["r1", "r2"]);
    assert_eq!(sc, BTreeSet::from([vec![0, 1], vec![1, 0], vec![1, 1]]));
    let tso = outcomes(&reachable_operational(&sb, Semantics::Tso).final_states, &["r1", "r2"]);
    assert_eq!(tso.len(), 4);
    let fenced = corpus_test("SB+fences");
    let tso = outcomes(
        &reachable_operational(&fenced, Semantics::Tso).final_states,
        &["r1", "r2"],
    );
    assert!(!tso.contains(&vec![0, 0]));
}

#[test]
fn witness_traces_replay() {
    for t in corpus() {
        for (name, _, sem) in models() {
            if let Some(Witness::Trace(trace)) = reachable_operational(&t, sem).witness {
                assert!(replay(&t, sem, &trace), "{} under {name}", t.name);
            }
        }
    }
}

/// Every transition of every reachable state changes only the stepping
/// core and, for labelled writes, the written location.
#[test]
fn steps_are_local_and_buffers_are_fifo() {
    for t in corpus() {
        let p = Program::new(&t);
        for sem in [Semantics::Sc, Semantics::Tso, Semantics::PIPELINE] {
            let init = SystemState::initial(&p);
            let mut seen = HashSet::from([init.clone()]);
            let mut queue = VecDeque::from([init]);
            while let Some(s) = queue.pop_front() {
                for (tr, s2) in step(&p, &s, sem) {
                    for c in (0..s.cores.len()).filter(|&c| c != tr.core) {
                        assert_eq!(s.cores[c], s2.cores[c], "{}", t.name);
                    }
                    for loc in 0..s.mem.len() {
                        if s.mem[loc] != s2.mem[loc] {
                            assert_eq!(
                                tr.label,
                                Label::Write {
                                    loc,
                                    value: s2.mem[loc]
                                }
                            );
                        }
                    }
                    if let (Semantics::Tso, Label::Write { loc, value }) = (sem, tr.label) {
                        let (before, after) = (&s.cores[tr.core].buffer, &s2.cores[tr.core].buffer);
                        if before.len() == after.len() + 1 {
                            assert_eq!(before[0], (loc, value));
                            assert_eq!(&before[1..], &after[..]);
                        }
                    }
                    if sem == Semantics::Tso {
                        let (before, after) = (&s.cores[tr.core].buffer, &s2.cores[tr.core].buffer);
                        // a buffer only grows at the back or shrinks at the front
                        assert!(
                            after.starts_with(before) && after.len() <= before.len() + 1
                                || before.ends_with(after) && before.len() == after.len() + 1
                        );
                    }
                    if seen.insert(s2.clone()) {
                        queue.push_back(s2);
                    }
                }
            }
        }
    }
}
