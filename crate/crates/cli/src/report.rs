//! Verdict rows and their renderings.

use std::fmt::Write as _;

use serde::Serialize;
use wmm_core::axiomatic::ExecutionGraph;
use wmm_core::dot::{emit_dot, emit_dot_highlighting};
use wmm_core::litmus::{Expectation, LitmusTest};
use wmm_core::verdict::{Engine, Verdict, Witness};
use wmm_core::FinalState;

use crate::Format;

#[derive(Debug, Clone)]
pub struct Row {
    pub test: String,
    pub model: String,
    pub verdict: Verdict,
    pub expected: Option<Expectation>,
    /// Cross-engine agreement of verdict and final states, when both ran.
    pub agree: Option<bool>,
    /// The final state of the witness, when reachable.
    pub witness_final: Option<FinalState>,
}

impl Row {
    pub fn new(
        test: &LitmusTest,
        model: &str,
        verdict: Verdict,
        expected: Option<Expectation>,
        agree: Option<bool>,
    ) -> Row {
        let witness_final = match &verdict.witness {
            Some(Witness::Graph(g)) => Some(g.final_state.clone()),
            Some(Witness::Trace(_)) => verdict.final_states.iter().find(|f| f.satisfies(test)).cloned(),
            None => None,
        };
        Row {
            test: test.name.clone(),
            model: model.to_string(),
            verdict,
            expected,
            agree,
            witness_final,
        }
    }

    pub fn engine(&self) -> Engine {
        self.verdict.engine
    }

    /// `Some(true)` when the verdict meets its expectation.
    pub fn meets_expectation(&self) -> Option<bool> {
        self.expected.map(|e| e.is_reachable() == self.verdict.reachable)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    pub fn mismatches(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.meets_expectation() == Some(false))
            .count()
    }

    /// (test, model) pairs whose engines disagree.
    pub fn disagreements(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.engine() == Engine::Axiomatic && r.agree == Some(false))
            .count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.mismatches() + self.disagreements() == 0 {
            0
        } else {
            1
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Table => table(report),
        Format::Json => json(report),
        Format::Dot => dot(report),
        Format::Trace => trace(report),
    }
}

fn table(report: &Report) -> String {
    let header = ["test", "model", "engine", "reachable", "expected", "result", "agree"];
    let mut cells: Vec<[String; 7]> = vec![header.map(String::from)];
    for r in &report.rows {
        cells.push([
            r.test.clone(),
            r.model.clone(),
            r.engine().to_string(),
            yes_no(r.verdict.reachable).to_string(),
            r.expected.map_or("-".into(), |e| e.to_string()),
            r.meets_expectation()
                .map_or("-", |ok| if ok { "ok" } else { "MISMATCH" })
                .to_string(),
            r.agree.map_or("-", yes_no).to_string(),
        ]);
    }
    let mut widths = [0; 7];
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    let _ = writeln!(
        out,
        "{} verdicts, {} expectation mismatches, {} engine disagreements",
        report.rows.len(),
        report.mismatches(),
        report.disagreements()
    );
    out
}

#[derive(Serialize)]
struct JsonRow<'a> {
    test: &'a str,
    model: &'a str,
    engine: String,
    reachable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<JsonWitness>,
}

#[derive(Serialize)]
struct JsonWitness {
    #[serde(rename = "final")]
    final_state: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rf: Option<Vec<[String; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    co: Option<Vec<[String; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<String>>,
}

fn named_pairs(g: &ExecutionGraph, r: &wmm_core::relation::Relation) -> Vec<[String; 2]> {
    r.pairs().map(|(a, b)| [g.name(a), g.name(b)]).collect()
}

fn json(report: &Report) -> String {
    let rows: Vec<JsonRow> = report
        .rows
        .iter()
        .map(|r| JsonRow {
            test: &r.test,
            model: &r.model,
            engine: r.engine().to_string(),
            reachable: r.verdict.reachable,
            witness: r.verdict.witness.as_ref().map(|w| {
                let final_state = r.witness_final.as_ref().map(ToString::to_string).unwrap_or_default();
                match w {
                    Witness::Graph(g) => JsonWitness {
                        final_state,
                        rf: Some(named_pairs(g, &g.rf)),
                        co: Some(named_pairs(g, &g.co)),
                        trace: None,
                    },
                    Witness::Trace(steps) => JsonWitness {
                        final_state,
                        rf: None,
                        co: None,
                        trace: Some(steps.iter().map(ToString::to_string).collect()),
                    },
                }
            }),
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&rows).expect("rows serialize");
    out.push('\n');
    out
}

fn dot(report: &Report) -> String {
    let mut out = String::new();
    for r in report.rows.iter().filter(|r| r.engine() == Engine::Axiomatic) {
        let v = &r.verdict;
        let head = format!("// {} under {} (axiomatic)", r.test, r.model);
        match (&v.witness, &v.counterexample) {
            (Some(Witness::Graph(g)), _) => {
                let _ = writeln!(out, "{head}: reachable");
                out.push_str(&emit_dot(g));
            }
            (_, Some(cx)) => {
                let _ = writeln!(
                    out,
                    "{head}: unreachable; candidate {} violates {}: {}",
                    cx.candidate,
                    cx.axiom,
                    cx.describe()
                );
                out.push_str(&emit_dot_highlighting(&cx.graph, &cx.witness));
            }
            _ => {
                let _ = writeln!(out, "{head}: unreachable; no candidate satisfies the postcondition");
            }
        }
    }
    out
}

fn trace(report: &Report) -> String {
    let mut out = String::new();
    for r in report.rows.iter().filter(|r| r.engine() == Engine::Operational) {
        let v = &r.verdict;
        let head = format!("{} under {} (operational)", r.test, r.model);
        match &v.witness {
            Some(Witness::Trace(steps)) => {
                let _ = writeln!(out, "{head}: reachable in {} steps", steps.len());
                for s in steps {
                    let _ = writeln!(out, "  {s}");
                }
                if let Some(f) = &r.witness_final {
                    let _ = writeln!(out, "  final: {f}");
                }
            }
            _ => {
                let _ = writeln!(out, "{head}: unreachable ({} states explored)", v.explored);
            }
        }
    }
    out
}
