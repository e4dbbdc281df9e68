use std::collections::{BTreeMap, HashMap};

use crate::ir::{ModelGraph, TensorShape};

use super::checks::check_layer;
use super::diagnostic::Diagnostic;

/// Output shape of every node, keyed by node id.
pub type ShapeMap = BTreeMap<String, TensorShape>;

/// Runs every layer's preconditions in execution order, aborting at the
/// first violation.
#[allow(clippy::result_large_err)]
pub fn infer_shapes(model: &ModelGraph) -> Result<ShapeMap, Diagnostic> {
    match infer_partial(model) {
        (shapes, None) => Ok(shapes),
        (_, Some(d)) => Err(d),
    }
}

/// Like [`infer_shapes`] but also returns the shapes computed before the
/// failing layer.
pub fn infer_partial(model: &ModelGraph) -> (ShapeMap, Option<Diagnostic>) {
    let mut known: HashMap<String, TensorShape> = HashMap::with_capacity(model.len());
    for (location, node) in model.ordered_nodes().enumerate() {
        let in_shapes = model
            .input_shapes(node, &known)
            .expect("execution order visits producers first");
        match check_layer(node, &in_shapes) {
            Ok(out) => {
                known.insert(node.id.clone(), out);
            }
            Err(f) => return (known.into_iter().collect(), Some(f.at(&node.id, location))),
        }
    }
    (known.into_iter().collect(), None)
}

/// Checks every node in isolation against the shapes its producers would
/// have, returning all locations that fail. Used to cross-check abort-on-first.
pub fn all_violations(model: &ModelGraph) -> Vec<Diagnostic> {
    let mut known: HashMap<String, TensorShape> = HashMap::new();
    let mut out = Vec::new();
    for (location, node) in model.ordered_nodes().enumerate() {
        let Some(in_shapes) = model.input_shapes(node, &known) else {
            continue;
        };
        match check_layer(node, &in_shapes) {
            Ok(s) => {
                known.insert(node.id.clone(), s);
            }
            Err(f) => out.push(f.at(&node.id, location)),
        }
    }
    out
}
