//! The recursive minimal-change search and the top-level ranking.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ir::{change_value, Edit, ModelGraph};
use crate::semantics::{infer_shapes, is_progress, Diagnostic, ErrorKind};

use super::fixes::Step;
use super::{CallRecord, FixCandidate, RepairConfig, RepairError, SearchLog, SearchStep};

/// State of one repair session. All randomness flows through `rng`, so the
/// order of calls defines the result.
pub(super) struct Session<'c> {
    pub(super) cfg: &'c RepairConfig,
    pub(super) rng: ChaCha8Rng,
    /// Cheapest change value at which each model structure was evaluated.
    visited: HashMap<u64, u32>,
    depth_cap: usize,
    log: SearchLog,
}

/// A partially repaired model on the search path.
struct Partial {
    model: ModelGraph,
    edits: Vec<Edit>,
    trace: Vec<Diagnostic>,
}

struct Outcome {
    best: Option<FixCandidate>,
    min_working: Option<u32>,
}

fn better(current: Option<FixCandidate>, new: FixCandidate) -> Option<FixCandidate> {
    match current {
        Some(c) if c.rank_key() <= new.rank_key() => Some(c),
        _ => Some(new),
    }
}

fn min_opt(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Only these kinds draw new random candidates after the first round.
fn has_random_rounds(kind: ErrorKind) -> bool {
    matches!(kind, ErrorKind::ArgumentError | ErrorKind::WindowOverflow)
}

impl<'c> Session<'c> {
    fn new(cfg: &'c RepairConfig, model: &ModelGraph) -> Self {
        Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            visited: HashMap::new(),
            depth_cap: model.len() + 5,
            log: SearchLog::default(),
        }
    }

    fn exhausted(&self) -> bool {
        self.log.evaluations >= self.cfg.max_evaluations
    }

    /// Records a visit; false when the structure was already seen at no
    /// greater cost.
    fn visit(&mut self, model: &ModelGraph, cost: u32) -> bool {
        let fp = model.fingerprint();
        match self.visited.get(&fp) {
            Some(&c) if c <= cost => false,
            _ => {
                self.visited.insert(fp, cost);
                true
            }
        }
    }

    #[allow(clippy::result_large_err)]
    fn evaluate(&mut self, model: &ModelGraph) -> Result<(), Diagnostic> {
        self.log.evaluations += 1;
        infer_shapes(model).map(|_| ())
    }

    /// Repeats candidate generation for up to `max_fixes` rounds until some
    /// candidate works, recursing on failing candidates that make progress.
    /// Candidates costing more than `bound` are not explored.
    fn minimal(
        &mut self,
        base: Partial,
        diag: &Diagnostic,
        depth: usize,
        bound: Option<u32>,
    ) -> Outcome {
        let mut best: Option<FixCandidate> = None;
        let mut min_working = None;
        let base_cost = change_value(&base.edits);
        let limit =
            |best: &Option<FixCandidate>| min_opt(bound, best.as_ref().map(|b| b.change_value));
        for round in 1..=self.cfg.max_fixes {
            let steps = self.candidates(&base.model, diag, round);
            let mut pending: Vec<(Partial, Diagnostic, u32)> = Vec::new();
            for Step { edits, model } in steps {
                if self.exhausted() {
                    break;
                }
                let cost = base_cost + change_value(&edits);
                if limit(&best).is_some_and(|l| cost > l) || !self.visit(&model, cost) {
                    continue;
                }
                let all_edits: Vec<Edit> = base.edits.iter().cloned().chain(edits).collect();
                match self.evaluate(&model) {
                    Ok(()) => {
                        min_working = min_opt(min_working, Some(cost));
                        let c = FixCandidate::new(model, all_edits, base.trace.clone());
                        best = better(best, c);
                    }
                    Err(next) if depth < self.depth_cap && is_progress(diag, &next) => {
                        let mut trace = base.trace.clone();
                        trace.push(next.clone());
                        let p = Partial {
                            model,
                            edits: all_edits,
                            trace,
                        };
                        pending.push((p, next, cost));
                    }
                    Err(_) => {}
                }
            }
            pending.sort_by_key(|(_, _, cost)| *cost);
            for (p, next, cost) in pending {
                if self.exhausted() {
                    break;
                }
                if limit(&best).is_some_and(|l| cost + 1 > l) {
                    continue;
                }
                self.log.steps.push(SearchStep {
                    from: diag.clone(),
                    to: next.clone(),
                });
                let sub = self.minimal(p, &next, depth + 1, limit(&best));
                min_working = min_opt(min_working, sub.min_working);
                if let Some(c) = sub.best {
                    best = better(best, c);
                }
            }
            if best.is_some() || self.exhausted() || !has_random_rounds(diag.kind) {
                break;
            }
        }
        self.log.calls.push(CallRecord {
            depth,
            returned: best.as_ref().map(|b| b.change_value),
            min_working,
        });
        Outcome { best, min_working }
    }

    fn find_fixes(&mut self, model: &ModelGraph) -> Result<Vec<FixCandidate>, RepairError> {
        let diag = match infer_shapes(model) {
            Ok(_) => {
                return Ok(vec![FixCandidate::new(
                    model.clone(),
                    Vec::new(),
                    Vec::new(),
                )])
            }
            Err(d) => d,
        };
        let seeds = self.candidates(model, &diag, 1);
        if seeds.is_empty() {
            return Err(RepairError::EmptyFixSet(diag.kind));
        }
        let mut found: Vec<FixCandidate> = Vec::new();
        let mut pending = Vec::new();
        for Step { edits, model: m } in seeds {
            let cost = change_value(&edits);
            if !self.visit(&m, cost) {
                continue;
            }
            match self.evaluate(&m) {
                Ok(()) => found.push(FixCandidate::new(m, edits, vec![diag.clone()])),
                Err(next) => pending.push((m, edits, next, cost)),
            }
        }
        pending.sort_by_key(|p| p.3);
        for (m, edits, next, cost) in pending {
            if self.exhausted() {
                break;
            }
            let bound = self.kth_best_cost(&found);
            if bound.is_some_and(|b| cost + 1 > b) {
                continue;
            }
            let p = Partial {
                model: m,
                edits,
                trace: vec![diag.clone(), next.clone()],
            };
            if let Some(c) = self.minimal(p, &next, 1, bound).best {
                found.push(c);
            }
        }
        if found.is_empty() {
            return Err(RepairError::NoFix {
                evaluations: self.log.evaluations,
            });
        }
        Ok(rank(found, self.cfg.top_k))
    }

    /// Change value of the k-th best distinct candidate found so far.
    fn kth_best_cost(&self, found: &[FixCandidate]) -> Option<u32> {
        let ranked = rank(found.to_vec(), self.cfg.top_k);
        (ranked.len() >= self.cfg.top_k)
            .then(|| ranked.last().map(|c| c.change_value))
            .flatten()
    }
}

/// Sorts by rank key, drops structural duplicates and keeps the first `k`.
fn rank(mut found: Vec<FixCandidate>, k: usize) -> Vec<FixCandidate> {
    let mut keyed: Vec<_> = found.drain(..).map(|c| (c.rank_key(), c)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let mut seen = std::collections::HashSet::new();
    keyed
        .into_iter()
        .map(|(_, c)| c)
        .filter(|c| seen.insert(c.model.fingerprint()))
        .take(k)
        .collect()
}

/// Ranked working fixes for `model`; a valid model yields one empty fix.
pub fn find_fixes(
    cfg: &RepairConfig,
    model: &ModelGraph,
) -> Result<Vec<FixCandidate>, RepairError> {
    find_fixes_logged(cfg, model).0
}

/// [`find_fixes`] plus the search instrumentation.
pub fn find_fixes_logged(
    cfg: &RepairConfig,
    model: &ModelGraph,
) -> (Result<Vec<FixCandidate>, RepairError>, SearchLog) {
    let mut s = Session::new(cfg, model);
    let result = s.find_fixes(model);
    (result, s.log)
}

/// The cheapest working fix reachable from `model` by recursive search,
/// starting from `diag`.
pub fn find_fix_with_minimal_change(
    cfg: &RepairConfig,
    model: &ModelGraph,
    diag: &Diagnostic,
) -> Result<FixCandidate, RepairError> {
    let mut s = Session::new(cfg, model);
    let base = Partial {
        model: model.clone(),
        edits: Vec::new(),
        trace: vec![diag.clone()],
    };
    s.minimal(base, diag, 0, None)
        .best
        .ok_or(RepairError::NoFix {
            evaluations: s.log.evaluations,
        })
}

/// First-round candidates for `diag`, each one step from `model`.
pub fn error_specific_fixes(
    cfg: &RepairConfig,
    model: &ModelGraph,
    diag: &Diagnostic,
) -> Result<Vec<FixCandidate>, RepairError> {
    let mut s = Session::new(cfg, model);
    let steps = s.candidates(model, diag, 1);
    if steps.is_empty() {
        return Err(RepairError::EmptyFixSet(diag.kind));
    }
    Ok(steps
        .into_iter()
        .map(|st| FixCandidate::new(st.model, st.edits, vec![diag.clone()]))
        .collect())
}
