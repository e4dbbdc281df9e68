//! Minimal-change repair search.
//!
//! A failing model is repaired by generating candidate edits for the first
//! violated precondition, re-running the shape semantics on each candidate and
//! recursing on candidates whose new violation shows progress. Working
//! candidates are ranked by change value.

mod fixes;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{change_value, Edit, EditKind, ModelGraph};
use crate::semantics::{Diagnostic, ErrorKind};

pub use search::{
    error_specific_fixes, find_fix_with_minimal_change, find_fixes, find_fixes_logged,
};

/// Sampling ranges for regenerated arguments. Ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgDomains {
    /// Components of strides, dilation rates, kernel, pool and upsampling sizes.
    pub window: (i64, i64),
    /// Units, filters and embedding sizes.
    pub units: (i64, i64),
    /// Padding and cropping amounts.
    pub amounts: (i64, i64),
    pub padding: Vec<String>,
    pub axis: Vec<i64>,
}

impl Default for ArgDomains {
    fn default() -> Self {
        Self {
            window: (1, 4),
            units: (1, 16),
            amounts: (0, 3),
            padding: vec!["valid".into(), "same".into()],
            axis: vec![-1, 1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairConfig {
    pub seed: u64,
    /// Rounds of candidate generation per search node.
    pub max_fixes: usize,
    /// Number of ranked fixes returned by [`find_fixes`].
    pub top_k: usize,
    pub arg_domains: ArgDomains,
    /// Random argument candidates drawn per round.
    pub arg_samples: usize,
    /// Upper bound on semantics runs per session.
    pub max_evaluations: usize,
}

impl Default for RepairConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_fixes: 20,
            top_k: 5,
            arg_domains: ArgDomains::default(),
            arg_samples: 4,
            max_evaluations: 20_000,
        }
    }
}

impl RepairConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// A repaired model together with the edits that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FixCandidate {
    pub model: ModelGraph,
    pub edits: Vec<Edit>,
    pub change_value: u32,
    /// Diagnostics met along the search path, starting with the original one.
    pub trace: Vec<Diagnostic>,
}

impl FixCandidate {
    pub(crate) fn new(model: ModelGraph, edits: Vec<Edit>, trace: Vec<Diagnostic>) -> Self {
        let change_value = change_value(&edits);
        Self {
            model,
            edits,
            change_value,
            trace,
        }
    }

    /// Ordering key: change value, then per-edit (location, kind), then the
    /// rendered edits.
    pub fn rank_key(&self) -> (u32, Vec<(usize, EditKind)>, String) {
        let positions = self
            .edits
            .iter()
            .map(|e| (edit_location(&self.model, e), e.kind()))
            .collect();
        let text = self
            .edits
            .iter()
            .map(Edit::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        (self.change_value, positions, text)
    }
}

/// Execution-order index an edit is anchored at in the edited model.
fn edit_location(model: &ModelGraph, edit: &Edit) -> usize {
    let id = match edit {
        Edit::InsertLayer { layer, .. } => layer.id.as_str(),
        Edit::InsertConstInput { id, .. } => model
            .consumers(id)
            .first()
            .map(|(c, _)| *c)
            .unwrap_or(id.as_str()),
        e => e.target(),
    };
    model.location(id).unwrap_or(usize::MAX)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepairError {
    #[error("no generator produces candidates for {0}")]
    EmptyFixSet(ErrorKind),
    #[error("no working fix found within the budget ({evaluations} evaluations)")]
    NoFix { evaluations: usize },
}

/// One recursion step taken by the search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchStep {
    pub from: Diagnostic,
    pub to: Diagnostic,
}

/// Outcome of one call of the minimal-change search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CallRecord {
    pub depth: usize,
    /// Change value of the returned candidate.
    pub returned: Option<u32>,
    /// Smallest change value among working candidates evaluated in the call tree.
    pub min_working: Option<u32>,
}

/// Instrumentation collected during a search session.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchLog {
    pub evaluations: usize,
    pub steps: Vec<SearchStep>,
    pub calls: Vec<CallRecord>,
}
