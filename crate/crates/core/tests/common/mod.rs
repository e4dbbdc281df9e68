#![allow(dead_code)]

use std::path::PathBuf;

use modelfix::generator::{Family, GenConfig};
use modelfix::io::load_model;
use modelfix::ir::{Edit, ModelGraph};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(format!("{name}.json"))
}

pub fn fixture(name: &str) -> ModelGraph {
    load_model(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

/// Fuzz corpus settings: mixed family, merges allowed, 3..12 layers, 1..3 bugs.
pub fn fuzz_config(seed: u64) -> GenConfig {
    GenConfig {
        seed,
        layers: (3, 12),
        family: Family::Mixed,
        graph_mode: true,
        dim_range: (1, 4),
        inject_bugs: (1, 3),
        with_weights: true,
    }
}

pub fn single_bug_config(seed: u64) -> GenConfig {
    GenConfig {
        inject_bugs: (1, 1),
        ..fuzz_config(seed)
    }
}

/// Change value of the edit undoing `injected`. An inserted layer is undone by
/// deleting it, which has no edit form; it is charged like an insertion.
pub fn inverse_cost(injected: &Edit) -> u32 {
    injected.cost()
}
pub mod oracle;

use std::collections::HashMap;

use modelfix::generator::generate_valid_model;
use modelfix::semantics::{execute_model, infer_shapes, is_value_executable, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The first `n` generated valid models whose layers the executor supports,
/// drawn round-robin from the families with executable kinds.
pub fn executable_corpus(n: usize) -> Vec<ModelGraph> {
    let families = [Family::Pooling, Family::Dense, Family::Mixed, Family::Conv];
    let mut out = Vec::with_capacity(n);
    let mut seed = 0u64;
    while out.len() < n {
        let family = families[seed as usize % families.len()];
        let cfg = GenConfig {
            seed,
            layers: (2, 10),
            family,
            graph_mode: seed.is_multiple_of(3),
            ..GenConfig::default()
        };
        seed += 1;
        let m = generate_valid_model(&cfg).expect("generation succeeds");
        if m.nodes().iter().all(|n| is_value_executable(n.kind)) {
            out.push(m);
        }
    }
    out
}

/// Executes `model` on random inputs and compares every produced tensor's
/// shape with the inferred one.
pub fn shape_value_mismatches(model: &ModelGraph, seed: u64) -> Vec<String> {
    let shapes = infer_shapes(model).expect("corpus models are valid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: HashMap<String, Tensor> = model
        .inputs()
        .iter()
        .map(|i| {
            let values = (0..i.shape.num_elements())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            (i.id.clone(), Tensor::new(i.shape.clone(), values).unwrap())
        })
        .collect();
    let values = match execute_model(model, &inputs) {
        Ok(v) => v,
        Err(e) => return vec![format!("{}: execution failed: {e}", model.name())],
    };
    let mut out = Vec::new();
    for (id, shape) in &shapes {
        match values.get(id) {
            Some(t) if t.shape() == shape && t.values().len() == shape.num_elements() => {}
            Some(t) => out.push(format!(
                "{}: {id} inferred {shape}, executed {}",
                model.name(),
                t.shape()
            )),
            None => out.push(format!("{}: {id} not executed", model.name())),
        }
    }
    out
}
