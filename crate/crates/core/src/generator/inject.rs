//! Single-edit bug injection. Every injection is checked to make the model
//! fail first at the chosen node with the requested error kind, and is built
//! so that one edit of the same cost undoes it.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ir::{
    apply_edit, generated_layer_id, Array, AttrValue, Attrs, Edit, EditKind, LayerKind, LayerNode,
    ModelGraph, SpatialFamily, TensorShape, WeightSpec,
};
use crate::semantics::{infer_partial, infer_shapes, ErrorKind};

use super::GenError;

fn ints(xs: &[usize]) -> AttrValue {
    AttrValue::Ints(xs.iter().map(|&x| x as i64).collect())
}

fn arg_change(node: &LayerNode, attr: &str, new: AttrValue) -> Option<Edit> {
    let old = node.attr(attr)?.clone();
    (old != new).then(|| Edit::ArgChange {
        node: node.id.clone(),
        attr: attr.to_string(),
        old,
        new,
    })
}

/// Candidate edits that should make `node` fail with `kind`.
fn proposals(
    rng: &mut ChaCha8Rng,
    model: &ModelGraph,
    node: &LayerNode,
    in_shapes: &[TensorShape],
    kind: ErrorKind,
) -> Vec<Edit> {
    let input = &in_shapes[0];
    let mut out = Vec::new();
    match kind {
        ErrorKind::DimensionError => {
            let Some((family, n)) = node.kind.spatial() else {
                return out;
            };
            let mut ranks = vec![n.wrapping_sub(1), n + 1];
            ranks.shuffle(rng);
            for m in ranks {
                let Some(variant) = family.member(m).and_then(|k| node.to_variant(k)) else {
                    continue;
                };
                // Only perturbations the repairer's variant conversion can undo.
                if variant.to_variant(node.kind).as_ref() == Some(node) {
                    out.push(Edit::ReplaceLayer {
                        node: node.id.clone(),
                        layer: variant,
                    });
                }
            }
        }
        ErrorKind::WeightShapeError => {
            let Some(w) = &node.weights else {
                return out;
            };
            let Some(kernel) = &w.kernel else {
                return out;
            };
            let mut shape = kernel.shape().to_vec();
            shape[0] += rng.gen_range(1..=3);
            let Ok(k) = Array::from_fn(shape, || rng.gen::<f64>()) else {
                return out;
            };
            out.push(Edit::WeightRegen {
                node: node.id.clone(),
                weights: Arc::new(WeightSpec {
                    kernel: Some(k),
                    bias: w.bias.clone(),
                }),
            });
        }
        ErrorKind::WindowOverflow => {
            let Some((family, n)) = node.kind.spatial() else {
                return out;
            };
            let dims = &input.dims()[1..=n];
            let axis = rng.gen_range(0..n);
            let d = dims[axis];
            match family {
                SpatialFamily::MaxPooling | SpatialFamily::AveragePooling
                    if !node.same_padding() =>
                {
                    let mut pool = node.sizes("pool_size");
                    pool[axis] = d + rng.gen_range(1..=3);
                    out.extend(arg_change(node, "pool_size", ints(&pool)));
                }
                SpatialFamily::Conv if !node.same_padding() => {
                    let dil = node.sizes("dilation_rate")[axis];
                    let mut kernel = node.sizes("kernel_size");
                    // Smallest kernel whose dilated extent exceeds the input.
                    kernel[axis] = (d - 1) / dil + 2;
                    out.extend(arg_change(node, "kernel_size", ints(&kernel)));
                }
                SpatialFamily::Cropping => {
                    let mut c = node.sizes("cropping");
                    let side = rng.gen_range(0..2);
                    let other = c[2 * axis + 1 - side];
                    c[2 * axis + side] = d.saturating_sub(other) + rng.gen_range(0..=2);
                    out.extend(arg_change(node, "cropping", ints(&c)));
                }
                _ => {}
            }
        }
        ErrorKind::ArgumentError => {
            let rank = input.rank() as i64;
            match node.kind {
                k if k.is_conv() => {
                    let strides = node.sizes("strides");
                    let dilation = node.sizes("dilation_rate");
                    if dilation.iter().any(|&d| d > 1) {
                        let s = vec![rng.gen_range(2..=3); strides.len()];
                        out.extend(arg_change(node, "strides", ints(&s)));
                    } else if strides.iter().any(|&s| s > 1) {
                        let d = vec![rng.gen_range(2..=3); dilation.len()];
                        out.extend(arg_change(node, "dilation_rate", ints(&d)));
                    }
                }
                LayerKind::Softmax | LayerKind::Concatenate | LayerKind::BatchNormalization => {
                    let axis = if rng.gen_bool(0.5) {
                        rank + rng.gen_range(0..=2)
                    } else {
                        -rank - 1 - rng.gen_range(0..=2)
                    };
                    out.extend(arg_change(node, "axis", AttrValue::Int(axis)));
                }
                LayerKind::Reshape => {
                    let mut t = node.sizes("target_shape");
                    let i = rng.gen_range(0..t.len());
                    t[i] += rng.gen_range(1..=3);
                    out.extend(arg_change(node, "target_shape", ints(&t)));
                }
                _ => {}
            }
        }
        ErrorKind::InputShapeMismatch => {
            if !node.kind.is_merge() {
                return out;
            }
            let rank = input.rank();
            if !(3..=5).contains(&rank) || in_shapes.iter().any(|s| s.rank() != rank) {
                return out;
            }
            let n = rank - 2;
            let concat_axis = match node.kind {
                LayerKind::Concatenate => {
                    let a = node.int("axis").unwrap_or(-1);
                    Some(if a < 0 {
                        (rank as i64 + a) as usize
                    } else {
                        a as usize
                    })
                }
                _ => None,
            };
            let slot = rng.gen_range(0..node.inputs.len());
            let dims = in_shapes[slot].dims();
            let axes: Vec<usize> = (1..=n)
                .filter(|&a| Some(a) != concat_axis && dims[a] > 1)
                .collect();
            let Some(&axis) = axes.choose(rng) else {
                return out;
            };
            let amount = rng.gen_range(1..=(dims[axis] - 1).min(3));
            let mut c = vec![0; 2 * n];
            c[2 * (axis - 1) + rng.gen_range(0..2)] = amount;
            let kind = SpatialFamily::Cropping.member(n).expect("rank checked");
            let mut attrs = Attrs::new();
            attrs.insert("cropping".into(), ints(&c));
            let id = generated_layer_id(model, kind, EditKind::InsertLayer, &node.id);
            if let Ok(layer) = LayerNode::new(id, kind, attrs, vec![node.inputs[slot].clone()]) {
                out.push(Edit::InsertLayer {
                    layer,
                    before: node.id.clone(),
                    slot,
                });
            }
        }
    }
    out
}

/// Injects one bug of `kind` at a node chosen by `seed`.
pub fn inject_bug(
    seed: u64,
    model: &ModelGraph,
    kind: ErrorKind,
) -> Result<(ModelGraph, Edit), GenError> {
    inject_bug_before(seed, model, kind, usize::MAX).map(|(m, e, _)| (m, e))
}

/// Injects one bug of `kind` at a node located strictly before `before` in
/// execution order. Returns the model, the edit and the failing location.
pub fn inject_bug_before(
    seed: u64,
    model: &ModelGraph,
    kind: ErrorKind,
    before: usize,
) -> Result<(ModelGraph, Edit, usize), GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Only the valid prefix can host a bug that surfaces first.
    let shapes: HashMap<_, _> = infer_partial(model).0.into_iter().collect();
    let mut nodes: Vec<&LayerNode> = model
        .ordered_nodes()
        .enumerate()
        .filter(|(loc, n)| *loc < before && shapes.contains_key(&n.id))
        .map(|(_, n)| n)
        .collect();
    nodes.shuffle(&mut rng);
    for node in nodes {
        let Some(in_shapes) = model.input_shapes(node, &shapes) else {
            continue;
        };
        for edit in proposals(&mut rng, model, node, &in_shapes, kind) {
            let Ok(bugged) = apply_edit(model, &edit) else {
                continue;
            };
            if let Err(d) = infer_shapes(&bugged) {
                if d.kind == kind && d.layer_id == node.id {
                    return Ok((bugged, edit, d.location));
                }
            }
        }
    }
    Err(GenError::NotInjectable(kind))
}
