//! Graphviz rendering of execution graphs.

use std::fmt::Write as _;

use crate::axiomatic::{Builtin, ExecutionGraph};
use crate::relation::{EventId, Relation};

struct EdgeClass {
    name: &'static str,
    attrs: &'static str,
}

const PO: EdgeClass = EdgeClass {
    name: "po",
    attrs: "color=black",
};
const CO: EdgeClass = EdgeClass {
    name: "co",
    attrs: "color=blue",
};
const RF: EdgeClass = EdgeClass {
    name: "rf",
    attrs: "color=red",
};
const FR: EdgeClass = EdgeClass {
    name: "fr",
    attrs: "color=orange, style=dashed",
};
const FENCE: EdgeClass = EdgeClass {
    name: "fence",
    attrs: "color=purple, style=bold",
};
const DEP: EdgeClass = EdgeClass {
    name: "dep",
    attrs: "color=darkgreen, style=dotted",
};
const CTRL: EdgeClass = EdgeClass {
    name: "ctrl",
    attrs: "color=brown, style=dotted",
};

/// Pairs of `r` not implied by two other pairs, i.e. its immediate steps
/// when `r` is a total order on each component.
fn immediate(r: &Relation) -> Relation {
    let mut out = r.clone();
    let composed = r.compose(r).expect("same carrier");
    for (a, b) in composed.pairs() {
        if out.contains(a, b) {
            out = out
                .difference(&Relation::from_pairs(r.carrier(), [(a, b)]).expect("in carrier"))
                .expect("same carrier");
        }
    }
    out
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn emit_dot(graph: &ExecutionGraph) -> String {
    emit_dot_highlighting(graph, &[])
}

/// Renders `graph`, drawing the edges along `path` (consecutive event ids,
/// such as an axiom's cycle witness) with a heavier pen.
pub fn emit_dot_highlighting(graph: &ExecutionGraph, path: &[EventId]) -> String {
    let mut out = String::from("digraph execution {\n");
    out.push_str("  node [shape=box, fontname=\"monospace\"];\n");
    let _ = writeln!(out, "  subgraph cluster_init {{\n    label=\"init\";");
    for e in graph.events.iter().filter(|e| e.thread.is_none()) {
        let _ = writeln!(
            out,
            "    {} [label={}];",
            quote(&graph.name(e.id)),
            quote(&graph.label(e.id))
        );
    }
    out.push_str("  }\n");
    for (t, tname) in graph.thread_names.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{t} {{\n    label={};", quote(tname));
        for e in graph.events.iter().filter(|e| e.thread == Some(t)) {
            let _ = writeln!(
                out,
                "    {} [label={}];",
                quote(&graph.name(e.id)),
                quote(&graph.label(e.id))
            );
        }
        out.push_str("  }\n");
    }
    let on_path = |a: EventId, b: EventId| path.windows(2).any(|w| w[0] == a && w[1] == b);
    let classes: [(&EdgeClass, Relation); 7] = [
        (&PO, immediate(&graph.po)),
        (&CO, immediate(&graph.co)),
        (&RF, graph.rf.clone()),
        (&FR, graph.builtin(Builtin::Fr).clone()),
        (&FENCE, graph.builtin(Builtin::Fencerel).clone()),
        (&DEP, graph.dep.clone()),
        (&CTRL, graph.ctrl.clone()),
    ];
    for (class, rel) in &classes {
        for (a, b) in rel.pairs() {
            let pen = if on_path(a, b) { ", penwidth=3" } else { "" };
            let _ = writeln!(
                out,
                "  {} -> {} [label={}, class={}, {}{}];",
                quote(&graph.name(a)),
                quote(&graph.name(b)),
                quote(class.name),
                quote(class.name),
                class.attrs,
                pen
            );
        }
    }
    out.push_str("}\n");
    out
}
