use std::fmt::Write;

use crate::ir::ModelGraph;
use crate::semantics::ShapeMap;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering: one box per layer in declaration order and one edge per
/// layer-to-layer input reference. Labels carry output shapes when given.
pub fn render_dot(model: &ModelGraph, shapes: Option<&ShapeMap>) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(model.name())).unwrap();
    out.push_str("  rankdir=TB;\n  node [shape=box];\n");
    for n in model.nodes() {
        let mut label = format!("{}\\n{}", n.id, n.kind);
        if let Some(s) = shapes.and_then(|m| m.get(&n.id)) {
            write!(label, "\\nout:{s}").unwrap();
        }
        writeln!(out, "  {} [label=\"{label}\"];", quote(&n.id)).unwrap();
    }
    for n in model.nodes() {
        for src in n.inputs.iter().filter(|s| model.node(s).is_some()) {
            writeln!(out, "  {} -> {};", quote(src), quote(&n.id)).unwrap();
        }
    }
    out.push_str("}\n");
    out
}
