use serde::Serialize;

use crate::ir::{Edit, ModelGraph};
use crate::repair::{FixCandidate, RepairConfig};
use crate::semantics::{format_diagnostic, Diagnostic};

use super::model::{to_pretty, ModelDoc};
use super::pseudo::render_pseudo_code;

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticReport {
    pub text: String,
    #[serde(flatten)]
    pub diagnostic: Diagnostic,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateReport {
    pub rank: usize,
    pub change_value: u32,
    pub edit_summary: Vec<String>,
    pub edits: Vec<Edit>,
    pub model: ModelDoc,
    pub pseudo_code: String,
}

/// Ranked repair outcome for one model. Wall-clock timing is kept out of the
/// serialized document so reports are byte-stable.
#[derive(Debug, Clone, Serialize)]
pub struct RepairReport {
    pub model: String,
    pub seed: u64,
    pub max_fixes: usize,
    pub top_k: usize,
    /// `None` when the input model was already valid.
    pub diagnostic: Option<DiagnosticReport>,
    pub candidates: Vec<CandidateReport>,
    #[serde(skip)]
    pub timing_ms: u128,
}

impl RepairReport {
    pub fn new(
        cfg: &RepairConfig,
        original: &ModelGraph,
        diagnostic: Option<&Diagnostic>,
        candidates: &[FixCandidate],
        timing_ms: u128,
    ) -> Self {
        Self {
            model: original.name().to_string(),
            seed: cfg.seed,
            max_fixes: cfg.max_fixes,
            top_k: cfg.top_k,
            diagnostic: diagnostic.map(|d| DiagnosticReport {
                text: format_diagnostic(d),
                diagnostic: d.clone(),
            }),
            candidates: candidates
                .iter()
                .enumerate()
                .map(|(i, c)| CandidateReport {
                    rank: i + 1,
                    change_value: c.change_value,
                    edit_summary: c.edits.iter().map(Edit::to_string).collect(),
                    edits: c.edits.clone(),
                    model: ModelDoc::from_model(&c.model),
                    pseudo_code: render_pseudo_code(&c.model),
                })
                .collect(),
            timing_ms,
        }
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }

    /// Short human-readable summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match &self.diagnostic {
            Some(d) => {
                out.push_str(&d.text);
                out.push('\n');
            }
            None => out.push_str("Valid Model\n"),
        }
        for c in &self.candidates {
            out.push_str(&format!("#{} change value {}\n", c.rank, c.change_value));
            for e in &c.edit_summary {
                out.push_str(&format!("  {e}\n"));
            }
        }
        out
    }
}
