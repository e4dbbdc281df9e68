//! Shape-level checking and minimal-change repair of neural network model
//! definitions.
//!
//! A model is a DAG of layers ([`ir::ModelGraph`]). [`semantics::infer_shapes`]
//! walks it in a deterministic order, checking each layer's preconditions and
//! aborting with a [`semantics::Diagnostic`] at the first violation.
//! [`repair::find_fixes`] searches for edit lists that make the model valid and
//! ranks them by change value.

pub mod cli;
pub mod generator;
pub mod io;
pub mod ir;
pub mod repair;
pub mod semantics;
