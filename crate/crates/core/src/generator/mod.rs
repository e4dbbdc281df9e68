//! Seeded random model generation and bug injection for fuzzing the repairer.

mod compose;
mod inject;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{Edit, ModelGraph};
use crate::semantics::ErrorKind;

pub use compose::generate_valid_model;
pub use inject::{inject_bug, inject_bug_before};

/// Layer-kind pool models are composed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dense,
    Recurrent,
    Pooling,
    Conv,
    Mixed,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Dense,
        Family::Recurrent,
        Family::Pooling,
        Family::Conv,
        Family::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Dense => "dense",
            Family::Recurrent => "recurrent",
            Family::Pooling => "pooling",
            Family::Conv => "conv",
            Family::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                format!("unknown family '{s}' (expected dense, recurrent, pooling, conv or mixed)")
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    /// Inclusive range of layer counts.
    pub layers: (usize, usize),
    pub family: Family,
    /// Allow merge layers with forked branches.
    pub graph_mode: bool,
    /// Inclusive range of input dimension sizes.
    pub dim_range: (usize, usize),
    /// Inclusive range of bugs injected into the composed model.
    pub inject_bugs: (usize, usize),
    /// Attach kernels and biases to weighted layers.
    pub with_weights: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            layers: (3, 12),
            family: Family::Mixed,
            graph_mode: false,
            dim_range: (1, 4),
            inject_bugs: (0, 0),
            with_weights: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("no node admits a {0} injection")]
    NotInjectable(ErrorKind),
    #[error("no composition admitted a bug within {0} attempts")]
    NoInjectionSite(usize),
    #[error("invalid generator config: {0}")]
    Config(String),
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Config(m.to_string()));
        if self.layers.0 == 0 || self.layers.0 > self.layers.1 {
            return bad("layer range must be non-empty and start at 1 or more");
        }
        if self.dim_range.0 == 0 || self.dim_range.0 > self.dim_range.1 {
            return bad("dimension range must be non-empty and start at 1 or more");
        }
        if self.inject_bugs.0 > self.inject_bugs.1 {
            return bad("bug range must be non-empty");
        }
        Ok(())
    }
}

/// One injected bug: the edit that introduced it and the kind it triggers.
#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub kind: ErrorKind,
    pub edit: Edit,
    pub location: usize,
}

/// A generated model, the valid model it was derived from and the bugs
/// injected into it (in injection order).
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub model: ModelGraph,
    pub base: ModelGraph,
    pub injections: Vec<Injection>,
}

/// Compositions tried before giving up on injecting any bug.
const MAX_REDRAWS: usize = 32;

/// Bug kinds the injector draws from.
pub const INJECTABLE_KINDS: [ErrorKind; 5] = [
    ErrorKind::DimensionError,
    ErrorKind::InputShapeMismatch,
    ErrorKind::ArgumentError,
    ErrorKind::WeightShapeError,
    ErrorKind::WindowOverflow,
];

/// Composes a model and injects `cfg.inject_bugs` bugs, each at a node
/// strictly earlier in execution order than the previous one so every bug
/// surfaces once the ones before it are fixed. A composition that admits no
/// bug at all when some were requested is redrawn from a derived seed.
pub fn generate(cfg: &GenConfig) -> Result<Generated, GenError> {
    use rand::{Rng, SeedableRng};
    cfg.validate()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let wanted = rng.gen_range(cfg.inject_bugs.0..=cfg.inject_bugs.1);
    let mut compose_seed = cfg.seed;
    for _ in 0..MAX_REDRAWS {
        let base = generate_valid_model(&GenConfig {
            seed: compose_seed,
            ..cfg.clone()
        })?;
        let mut model = base.clone();
        let mut injections = Vec::new();
        let mut before = usize::MAX;
        for _ in 0..wanted {
            let first = rng.gen_range(0..INJECTABLE_KINDS.len());
            let seed = rng.gen::<u64>();
            let attempt = (0..INJECTABLE_KINDS.len())
                .map(|i| INJECTABLE_KINDS[(first + i) % INJECTABLE_KINDS.len()])
                .find_map(|kind| {
                    inject_bug_before(seed, &model, kind, before)
                        .ok()
                        .map(|(m, edit, location)| {
                            (
                                m,
                                Injection {
                                    kind,
                                    edit,
                                    location,
                                },
                            )
                        })
                });
            let Some((m, inj)) = attempt else {
                break;
            };
            if let Edit::InsertLayer { layer, .. } = &inj.edit {
                // Locations recorded earlier move down past the new layer.
                let at = m.location(&layer.id).expect("inserted layer exists");
                for prev in injections
                    .iter_mut()
                    .filter(|p: &&mut Injection| p.location >= at)
                {
                    prev.location += 1;
                }
            }
            before = inj.location;
            model = m;
            injections.push(inj);
        }
        if wanted == 0 || !injections.is_empty() {
            return Ok(Generated {
                model,
                base,
                injections,
            });
        }
        compose_seed = rng.gen();
    }
    Err(GenError::NoInjectionSite(MAX_REDRAWS))
}

/// The model produced by [`generate`].
pub fn generate_model(cfg: &GenConfig) -> Result<ModelGraph, GenError> {
    generate(cfg).map(|g| g.model)
}
