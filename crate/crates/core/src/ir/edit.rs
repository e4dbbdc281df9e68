use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::attr::{normalize_attrs, AttrValue};
use super::graph::{ModelGraph, ModelInput};
use super::kind::LayerKind;
use super::node::{LayerNode, WeightSpec};
use super::shape::TensorShape;
use super::IrError;

/// A single model mutation. Repairs are ordered lists of edits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Edit {
    ArgChange {
        node: String,
        attr: String,
        old: AttrValue,
        new: AttrValue,
    },
    WeightRegen {
        node: String,
        weights: Arc<WeightSpec>,
    },
    /// Swap a node for another with the same id.
    ReplaceLayer { node: String, layer: LayerNode },
    /// Splice `layer` into input slot `slot` of `before`. The new layer's first
    /// input must be the node currently feeding that slot.
    InsertLayer {
        layer: LayerNode,
        before: String,
        slot: usize,
    },
    InsertConstInput {
        id: String,
        shape: TensorShape,
        fill: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EditKind {
    ArgChange,
    WeightRegen,
    ReplaceLayer,
    InsertLayer,
    InsertConstInput,
}

impl EditKind {
    /// Change value of one edit of this kind.
    pub fn cost(self) -> u32 {
        match self {
            EditKind::ArgChange | EditKind::WeightRegen => 1,
            EditKind::ReplaceLayer => 5,
            EditKind::InsertLayer | EditKind::InsertConstInput => 10,
        }
    }
}

impl Edit {
    pub fn kind(&self) -> EditKind {
        match self {
            Edit::ArgChange { .. } => EditKind::ArgChange,
            Edit::WeightRegen { .. } => EditKind::WeightRegen,
            Edit::ReplaceLayer { .. } => EditKind::ReplaceLayer,
            Edit::InsertLayer { .. } => EditKind::InsertLayer,
            Edit::InsertConstInput { .. } => EditKind::InsertConstInput,
        }
    }

    pub fn cost(&self) -> u32 {
        self.kind().cost()
    }

    /// The existing node or input the edit is anchored at.
    pub fn target(&self) -> &str {
        match self {
            Edit::ArgChange { node, .. }
            | Edit::WeightRegen { node, .. }
            | Edit::ReplaceLayer { node, .. } => node,
            Edit::InsertLayer { before, .. } => before,
            Edit::InsertConstInput { id, .. } => id,
        }
    }
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Edit::ArgChange {
                node,
                attr,
                old,
                new,
            } => {
                write!(f, "ArgChange {node}.{attr}: {old} -> {new}")
            }
            Edit::WeightRegen { node, weights } => {
                write!(f, "WeightRegen {node}")?;
                if let Some(k) = weights.kernel_shape() {
                    write!(f, " kernel {}", super::shape::dims_string(k))?;
                }
                if let Some(b) = weights.bias_shape() {
                    write!(f, " bias {}", super::shape::dims_string(b))?;
                }
                Ok(())
            }
            Edit::ReplaceLayer { node, layer } => {
                write!(f, "ReplaceLayer {node} -> {}", describe_layer(layer))
            }
            Edit::InsertLayer {
                layer,
                before,
                slot,
            } => {
                write!(
                    f,
                    "InsertLayer {} before {before}[{slot}]",
                    describe_layer(layer)
                )
            }
            Edit::InsertConstInput { id, shape, fill } => {
                write!(f, "InsertConstInput {id} {shape} fill {fill}")
            }
        }
    }
}

fn describe_layer(layer: &LayerNode) -> String {
    let args: Vec<String> = layer
        .attrs
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    format!("{}:{}({})", layer.id, layer.kind, args.join(", "))
}

/// Total change value of an edit list.
pub fn change_value(edits: &[Edit]) -> u32 {
    edits.iter().map(Edit::cost).sum()
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in *part {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Deterministic `<prefix><5 digits>` id derived from the edit kind and its
/// target, skipping ids already present in `model`.
pub fn generated_id(model: &ModelGraph, prefix: &str, edit: EditKind, target: &str) -> String {
    let tag = format!("{edit:?}");
    let mut counter: u64 = 0;
    loop {
        let h = fnv1a(&[tag.as_bytes(), target.as_bytes(), &counter.to_le_bytes()]);
        let id = format!("{prefix}{:05}", h % 100_000);
        if !model.contains(&id) {
            return id;
        }
        counter += 1;
    }
}

pub fn generated_layer_id(
    model: &ModelGraph,
    kind: LayerKind,
    edit: EditKind,
    target: &str,
) -> String {
    generated_id(model, kind.id_prefix(), edit, target)
}

/// Applies one edit, returning a new validated graph.
pub fn apply_edit(model: &ModelGraph, edit: &Edit) -> Result<ModelGraph, IrError> {
    let (name, mut inputs, mut nodes, outputs) = model.clone().into_parts();
    let find = |nodes: &[LayerNode], id: &str| {
        nodes
            .iter()
            .position(|n| n.id == id)
            .ok_or_else(|| IrError::UnknownTarget(id.to_string()))
    };
    match edit {
        Edit::ArgChange {
            node,
            attr,
            old,
            new,
        } => {
            let i = find(&nodes, node)?;
            let n = &mut nodes[i];
            let current = n.attrs.get(attr).ok_or_else(|| IrError::UnknownAttr {
                kind: n.kind,
                attr: attr.clone(),
            })?;
            if current != old {
                return Err(IrError::InvalidEdit(format!(
                    "{node}.{attr} is {current}, edit expects {old}"
                )));
            }
            n.attrs.insert(attr.clone(), new.clone());
            n.attrs = normalize_attrs(n.kind, &n.attrs)?;
        }
        Edit::WeightRegen { node, weights } => {
            let i = find(&nodes, node)?;
            nodes[i].weights = Some(Arc::clone(weights));
        }
        Edit::ReplaceLayer { node, layer } => {
            let i = find(&nodes, node)?;
            if layer.id != *node {
                return Err(IrError::InvalidEdit(format!(
                    "replacement for {node} must keep its id, got {}",
                    layer.id
                )));
            }
            nodes[i] = layer.clone();
        }
        Edit::InsertLayer {
            layer,
            before,
            slot,
        } => {
            let i = find(&nodes, before)?;
            if model.contains(&layer.id) {
                return Err(IrError::DuplicateId(layer.id.clone()));
            }
            let current = nodes[i].inputs.get(*slot).cloned().ok_or_else(|| {
                IrError::InvalidEdit(format!("{before} has no input slot {slot}"))
            })?;
            if layer.inputs.first() != Some(&current) {
                return Err(IrError::InvalidEdit(format!(
                    "inserted {} must read from {current}, the source of {before}[{slot}]",
                    layer.id
                )));
            }
            nodes[i].inputs[*slot] = layer.id.clone();
            nodes.insert(i, layer.clone());
        }
        Edit::InsertConstInput { id, shape, fill } => {
            if model.contains(id) {
                return Err(IrError::DuplicateId(id.clone()));
            }
            inputs.push(ModelInput {
                id: id.clone(),
                shape: shape.clone(),
                fill: Some(*fill),
            });
        }
    }
    ModelGraph::new(name, inputs, nodes, outputs)
}

/// Applies edits in order.
pub fn apply_edits<'a>(
    model: &ModelGraph,
    edits: impl IntoIterator<Item = &'a Edit>,
) -> Result<ModelGraph, IrError> {
    let mut current = model.clone();
    for e in edits {
        current = apply_edit(&current, e)?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Attrs;

    fn chain() -> ModelGraph {
        let x = ModelInput::new("x", TensorShape::with_batch(&[8, 1]).unwrap());
        let mut attrs = Attrs::new();
        attrs.insert("filters".into(), AttrValue::Int(2));
        attrs.insert("kernel_size".into(), AttrValue::Int(2));
        attrs.insert("strides".into(), AttrValue::Int(3));
        let conv = LayerNode::new("C", LayerKind::Conv1D, attrs, vec!["x".into()]).unwrap();
        let relu = LayerNode::new("R", LayerKind::ReLU, Attrs::new(), vec!["C".into()]).unwrap();
        ModelGraph::new("m", vec![x], vec![conv, relu], vec!["R".into()]).unwrap()
    }

    #[test]
    fn arg_change_touches_one_field() {
        let g = chain();
        let e = Edit::ArgChange {
            node: "C".into(),
            attr: "strides".into(),
            old: AttrValue::Ints(vec![3]),
            new: AttrValue::Ints(vec![1]),
        };
        let h = apply_edit(&g, &e).unwrap();
        assert_eq!(h.node("C").unwrap().ints("strides"), Some(&[1][..]));
        let mut restored = h.node("C").unwrap().clone();
        restored
            .attrs
            .insert("strides".into(), AttrValue::Ints(vec![3]));
        assert_eq!(&restored, g.node("C").unwrap());
        assert_eq!(h.node("R"), g.node("R"));
        // input graph untouched
        assert_eq!(g.node("C").unwrap().ints("strides"), Some(&[3][..]));
    }

    #[test]
    fn stale_arg_change_rejected() {
        let e = Edit::ArgChange {
            node: "C".into(),
            attr: "strides".into(),
            old: AttrValue::Ints(vec![2]),
            new: AttrValue::Ints(vec![1]),
        };
        assert!(matches!(
            apply_edit(&chain(), &e),
            Err(IrError::InvalidEdit(_))
        ));
    }

    #[test]
    fn insert_rewires_one_edge() {
        let g = chain();
        let id = generated_layer_id(&g, LayerKind::ReLU, EditKind::InsertLayer, "R");
        assert!(id.starts_with("ReL") && id.len() == 8);
        let layer =
            LayerNode::new(id.clone(), LayerKind::ReLU, Attrs::new(), vec!["C".into()]).unwrap();
        let h = apply_edit(
            &g,
            &Edit::InsertLayer {
                layer,
                before: "R".into(),
                slot: 0,
            },
        )
        .unwrap();
        assert_eq!(h.topo_order(), vec!["C", id.as_str(), "R"]);
        assert_eq!(h.node("R").unwrap().inputs, vec![id.clone()]);
    }

    #[test]
    fn unknown_target() {
        let e = Edit::WeightRegen {
            node: "nope".into(),
            weights: Arc::new(WeightSpec::default()),
        };
        assert!(matches!(
            apply_edit(&chain(), &e),
            Err(IrError::UnknownTarget(_))
        ));
    }

    #[test]
    fn costs() {
        let arg = Edit::ArgChange {
            node: "C".into(),
            attr: "strides".into(),
            old: AttrValue::Ints(vec![3]),
            new: AttrValue::Ints(vec![1]),
        };
        assert_eq!(change_value(std::slice::from_ref(&arg)), 1);
        let regen = Edit::WeightRegen {
            node: "C".into(),
            weights: Arc::new(WeightSpec::default()),
        };
        let layer = LayerNode::new("Q", LayerKind::ReLU, Attrs::new(), vec!["C".into()]).unwrap();
        let insert = Edit::InsertLayer {
            layer: layer.clone(),
            before: "R".into(),
            slot: 0,
        };
        let replace = Edit::ReplaceLayer {
            node: "R".into(),
            layer,
        };
        assert_eq!(change_value(&[replace]), 5);
        assert_eq!(change_value(std::slice::from_ref(&insert)), 10);
        assert_eq!(change_value(&[insert, regen]), 11);
        assert_eq!(change_value(&[]), 0);
    }
}
