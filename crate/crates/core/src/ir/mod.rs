//! Model graph representation and the edit algebra repairs are expressed in.

mod attr;
mod diff;
mod edit;
mod graph;
mod kind;
mod node;
mod shape;

use thiserror::Error;

pub use attr::{normalize_attrs, AttrValue, Attrs};
pub use diff::graph_diff;
pub use edit::{
    apply_edit, apply_edits, change_value, generated_id, generated_layer_id, Edit, EditKind,
};
pub use graph::{topo_order, ModelGraph, ModelInput};
pub use kind::{
    AttrDefault, AttrSpec, AttrType, IntsLen, LayerKind, SpatialFamily, ACTIVATIONS, PADDING_MODES,
};
pub use node::{Array, LayerNode, WeightSpec};
pub use shape::{dims_string, write_dims, TensorShape};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IrError {
    #[error("invalid shape {dims:?}: {reason}")]
    InvalidShape { dims: Vec<usize>, reason: String },
    #[error("unknown layer kind '{0}'")]
    UnknownKind(String),
    #[error("{kind} has no attribute '{attr}'")]
    UnknownAttr { kind: LayerKind, attr: String },
    #[error("{kind} requires attribute '{attr}'")]
    MissingAttr { kind: LayerKind, attr: String },
    #[error("bad value for {kind}.{attr}: {reason}")]
    BadAttr {
        kind: LayerKind,
        attr: String,
        reason: String,
    },
    #[error("invalid weights: {0}")]
    BadWeights(String),
    #[error("{node} ({kind}) cannot take {found} input(s)")]
    Arity {
        node: String,
        kind: LayerKind,
        found: usize,
    },
    #[error("duplicate id '{0}'")]
    DuplicateId(String),
    #[error("unknown node or input '{0}'")]
    UnknownTarget(String),
    #[error("graph contains a cycle through '{0}'")]
    Cycle(String),
    #[error("model has no inputs")]
    NoInputs,
    #[error("model has no outputs")]
    NoOutputs,
    #[error("edit cannot be applied: {0}")]
    InvalidEdit(String),
}
