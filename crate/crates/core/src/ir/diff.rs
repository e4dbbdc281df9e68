use std::collections::HashSet;

use super::edit::{Edit, EditKind};
use super::graph::ModelGraph;
use super::node::LayerNode;

/// Edit list transforming `before` into `after`, matching nodes by id.
///
/// Changes to existing nodes come first (by location in `before`, then edit
/// kind), then new constant inputs, then insertions in an order that can be
/// replayed with [`super::apply_edits`]. Removed nodes have no edit form and
/// are not reported.
pub fn graph_diff(before: &ModelGraph, after: &ModelGraph) -> Vec<Edit> {
    let is_new = |id: &str| after.node(id).is_some() && before.node(id).is_none();

    let resolve = |id: &str| resolve_source(before, after, id);

    let mut changes: Vec<(usize, EditKind, String, Edit)> = Vec::new();
    for node in after.nodes() {
        let Some(old) = before.node(&node.id) else {
            continue;
        };
        let loc = before.location(&node.id).unwrap_or(usize::MAX);
        let resolved: Vec<String> = node.inputs.iter().map(|s| resolve(s)).collect();
        let weights_dropped = old.weights.is_some() && node.weights.is_none();
        if node.kind != old.kind || resolved != old.inputs || weights_dropped {
            let mut layer = node.clone();
            layer.inputs = resolved;
            changes.push((
                loc,
                EditKind::ReplaceLayer,
                String::new(),
                Edit::ReplaceLayer {
                    node: node.id.clone(),
                    layer,
                },
            ));
            continue;
        }
        for (name, value) in &node.attrs {
            match old.attrs.get(name) {
                Some(prev) if prev == value => {}
                Some(prev) => changes.push((
                    loc,
                    EditKind::ArgChange,
                    name.clone(),
                    Edit::ArgChange {
                        node: node.id.clone(),
                        attr: name.clone(),
                        old: prev.clone(),
                        new: value.clone(),
                    },
                )),
                None => {}
            }
        }
        if node.weights != old.weights {
            if let Some(w) = &node.weights {
                changes.push((
                    loc,
                    EditKind::WeightRegen,
                    String::new(),
                    Edit::WeightRegen {
                        node: node.id.clone(),
                        weights: w.clone(),
                    },
                ));
            }
        }
    }
    changes.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    let mut edits: Vec<Edit> = changes.into_iter().map(|c| c.3).collect();

    for input in after.inputs() {
        if before.input(&input.id).is_none() {
            edits.push(Edit::InsertConstInput {
                id: input.id.clone(),
                shape: input.shape.clone(),
                fill: input.fill.unwrap_or(0.0),
            });
        }
    }

    let mut emitted: HashSet<String> = HashSet::new();
    for node in after.nodes() {
        if is_new(&node.id) {
            emit_insert(after, node, &is_new, &resolve, &mut emitted, &mut edits);
        }
    }
    edits
}

/// Where a slot pointing at an inserted node was wired before the insertion.
fn resolve_source(before: &ModelGraph, after: &ModelGraph, id: &str) -> String {
    let mut current = id;
    for _ in 0..=after.len() {
        if before.node(current).is_some() {
            break;
        }
        match after.node(current).and_then(|n| n.inputs.first()) {
            Some(src) => current = src,
            None => break,
        }
    }
    current.to_string()
}

fn emit_insert(
    after: &ModelGraph,
    node: &LayerNode,
    is_new: &dyn Fn(&str) -> bool,
    resolve: &dyn Fn(&str) -> String,
    emitted: &mut HashSet<String>,
    edits: &mut Vec<Edit>,
) {
    if !emitted.insert(node.id.clone()) {
        return;
    }
    let Some((consumer, slot)) = after.consumers(&node.id).into_iter().next() else {
        return;
    };
    if is_new(consumer) {
        if let Some(c) = after.node(consumer) {
            emit_insert(after, c, is_new, resolve, emitted, edits);
        }
    }
    let mut layer = node.clone();
    if let Some(first) = layer.inputs.first_mut() {
        *first = resolve(first);
    }
    edits.push(Edit::InsertLayer {
        layer,
        before: consumer.to_string(),
        slot,
    });
}
