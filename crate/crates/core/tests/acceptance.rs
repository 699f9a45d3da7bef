//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the lines reach the terminal.

mod common;

use std::cell::Cell;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::*;
use proptest::test_runner::{Config, TestRunner};
use wmm_core::axiomatic::{armish_model, check_model, reachable_axiomatic, sc_model, tso_model, ModelSpec};
use wmm_core::litmus::Instruction;
use wmm_core::operational::{reachable_operational, Semantics};
use wmm_core::verdict::Witness;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn models() -> [(&'static str, ModelSpec, Semantics); 3] {
    [
        ("SC", sc_model(), Semantics::Sc),
        ("TSO", tso_model(), Semantics::Tso),
        ("ARMish", armish_model(), Semantics::PIPELINE),
    ]
}

/// The five-row verdict table: SC, x86, Arm, RISC-V. The last two columns
/// coincide and both map to ARMish.
const TABLE: [(&str, [bool; 4]); 5] = [
    ("SB", [false, true, true, true]),
    ("LB", [false, false, true, true]),
    ("MP", [false, false, true, true]),
    ("IRIW+deps", [false, false, false, false]),
    ("LB+ctrls", [false, false, false, false]),
];

fn table_matrix() -> Outcome {
    let start = Instant::now();
    let mut cells = 0;
    for (name, row) in TABLE {
        ensure(row[2] == row[3], || format!("{name}: Arm and RISC-V columns differ"))?;
        let t = corpus_test(name);
        for (col, (model, spec, _)) in models().iter().enumerate() {
            let got = reachable_axiomatic(&t, spec).reachable;
            ensure(got == row[col], || format!("{name} under {model}: reachable={got}"))?;
            cells += 1;
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:.2?}"))?;
    Ok(format!("{cells}/15 cells in {took:.2?}"))
}

fn worked_examples() -> Outcome {
    let sb = corpus_test("SB");
    let sc = reachable_axiomatic(&sb, &sc_model());
    let cycle = sc.counterexample.as_ref().map(|c| c.describe()).unwrap_or_default();
    ensure(cycle == "a2 -> b1 -> b2 -> a1 -> a2", || {
        format!("SB/SC rejection cycle `{cycle}`")
    })?;

    let tso = reachable_operational(&sb, Semantics::Tso);
    let Some(Witness::Trace(trace)) = &tso.witness else {
        return Err("SB/TSO: no operational trace".into());
    };
    ensure(replay(&sb, Semantics::Tso, trace), || {
        "SB/TSO trace does not replay to r1=r2=0".into()
    })?;

    let fenced = corpus_test("SB+fences");
    ensure(!reachable_axiomatic(&fenced, &tso_model()).reachable, || {
        "SB+fences axiomatic TSO".into()
    })?;
    ensure(!reachable_operational(&fenced, Semantics::Tso).reachable, || {
        "SB+fences operational TSO".into()
    })?;

    let fwd = corpus_test("SB+forwarding");
    ensure(reachable_axiomatic(&fwd, &tso_model()).reachable, || {
        "forwarding axiomatic TSO".into()
    })?;
    ensure(reachable_operational(&fwd, Semantics::Tso).reachable, || {
        "forwarding operational TSO".into()
    })?;
    ensure(!reachable_axiomatic(&fwd, &sc_model()).reachable, || {
        "forwarding axiomatic SC".into()
    })?;
    ensure(!reachable_operational(&fwd, Semantics::Sc).reachable, || {
        "forwarding operational SC".into()
    })?;

    let mp = corpus_test("MP+rel/acq");
    ensure(!reachable_axiomatic(&mp, &armish_model()).reachable, || {
        "MP+rel/acq axiomatic ARMish".into()
    })?;
    ensure(!reachable_operational(&mp, Semantics::PIPELINE).reachable, || {
        "MP+rel/acq PIPELINE".into()
    })?;
    Ok(format!(
        "SB cycle `{cycle}`, TSO trace of {} steps, fences, forwarding, rel/acq",
        trace.len()
    ))
}

fn instruction_count(body: &[Instruction]) -> usize {
    body.iter()
        .map(|i| match i {
            Instruction::Branch {
                then_block, else_block, ..
            } => 1 + instruction_count(then_block) + instruction_count(else_block),
            _ => 1,
        })
        .sum()
}

fn cross_engine() -> Outcome {
    let start = Instant::now();
    let tests = corpus();
    ensure(tests.len() >= 10, || format!("corpus has {} tests", tests.len()))?;
    for t in &tests {
        ensure(t.threads.len() >= 2, || format!("{}: fewer than two threads", t.name))?;
        for th in &t.threads {
            let n = instruction_count(&th.body);
            ensure(n <= 8, || {
                format!("{}: thread {} has {n} instructions", t.name, th.name)
            })?;
        }
        for (model, spec, sem) in models() {
            let ax = reachable_axiomatic(t, &spec);
            let op = reachable_operational(t, sem);
            ensure(ax.reachable == op.reachable, || {
                format!("{} under {model}: verdicts differ", t.name)
            })?;
            if model != "ARMish" {
                ensure(ax.final_states == op.final_states, || {
                    format!("{} under {model}: final states differ", t.name)
                })?;
            }
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:.2?}"))?;
    Ok(format!("{} tests, 3 models, {took:.2?}", tests.len()))
}

fn monotonicity() -> Outcome {
    let cases = Cell::new(0);
    let mut runner = TestRunner::new(Config {
        cases: 256,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&gen_program(), |p| {
            cases.set(cases.get() + 1);
            check_monotone(&p.test_within(BUDGET))
        })
        .map_err(|e| e.to_string())?;
    ensure(cases.get() >= 200, || format!("only {} cases", cases.get()))?;
    Ok(format!(
        "{} random programs, SC within TSO within PIPELINE/ARMish",
        cases.get()
    ))
}

fn relation_laws() -> Outcome {
    let config = Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new(config.clone())
        .run(&relation_case(), |c| check_algebra(&c))
        .map_err(|e| format!("algebra: {e}"))?;
    let cyclic = Cell::new(0);
    TestRunner::new(config)
        .run(&acyclic_case(), |(n, pairs)| {
            check_acyclic(n, &pairs)?;
            if !oracle_acyclic(n, &pairs.iter().copied().collect()) {
                cyclic.set(cyclic.get() + 1);
            }
            Ok(())
        })
        .map_err(|e| format!("acyclicity: {e}"))?;
    Ok(format!(
        "1000 algebra cases, 1000 acyclicity cases of which {} cyclic",
        cyclic.get()
    ))
}

fn rmw_atomicity() -> Outcome {
    let t = corpus_test("SWAP2");
    let expected = BTreeSet::from([(0, 1), (1, 0)]);
    for (model, spec, sem) in models() {
        let ax = reachable_axiomatic(&t, &spec).final_states;
        let op = reachable_operational(&t, sem).final_states;
        for (engine, finals) in [("axiomatic", ax), ("operational", op)] {
            let got: BTreeSet<(i64, i64)> = finals
                .iter()
                .map(|f| (f.lookup("r1").unwrap(), f.lookup("r2").unwrap()))
                .collect();
            ensure(got == expected, || format!("{model} {engine}: {got:?}"))?;
        }
    }
    let g = non_atomic_swap_graph();
    for (model, spec, _) in models() {
        match check_model(&g, &spec) {
            Err(v) if v.axiom == "atomic" => {}
            other => return Err(format!("non-atomic graph under {model}: {other:?}")),
        }
    }
    Ok("double swap {(0,1),(1,0)} in 6 configurations, non-atomic graph rejected".into())
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("litmus verdict matrix", table_matrix),
        ("worked examples", worked_examples),
        ("cross-engine equivalence", cross_engine),
        ("monotonicity", monotonicity),
        ("relation algebra", relation_laws),
        ("rmw atomicity", rmw_atomicity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                let why = why.split_whitespace().collect::<Vec<_>>().join(" ");
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
