//! Error-specific candidate generators.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ir::{
    apply_edit, generated_id, generated_layer_id, Array, AttrType, AttrValue, Attrs, Edit,
    EditKind, IntsLen, LayerKind, LayerNode, ModelGraph, SpatialFamily, TensorShape, WeightSpec,
    ACTIVATIONS,
};
use crate::semantics::{
    effective_kernel, expected_weight_shapes, infer_partial, resolve_axis, Diagnostic, ErrorKind,
    ShapeMap, Violation, WindowLabel,
};

use super::search::Session;

/// Above this many combinations, windows are sampled instead of enumerated.
const ENUMERATION_LIMIT: usize = 256;

/// A candidate one search step away from its parent: the edits applied (with
/// cascaded weight regenerations) and the resulting model.
pub(super) struct Step {
    pub edits: Vec<Edit>,
    pub model: ModelGraph,
}

/// Applies edits one at a time so later edits can pick fresh ids.
struct Builder {
    model: ModelGraph,
    edits: Vec<Edit>,
}

impl Builder {
    fn new(model: &ModelGraph) -> Self {
        Self {
            model: model.clone(),
            edits: Vec::new(),
        }
    }

    fn push(&mut self, edit: Edit) -> Option<()> {
        self.model = apply_edit(&self.model, &edit).ok()?;
        self.edits.push(edit);
        Some(())
    }

    fn source(&self, node: &str, slot: usize) -> Option<String> {
        self.model.node(node)?.inputs.get(slot).cloned()
    }

    /// Splices a new layer of `kind` into `node`'s input `slot`.
    fn insert(
        &mut self,
        kind: LayerKind,
        attrs: Attrs,
        node: &str,
        slot: usize,
        tag: &str,
    ) -> Option<String> {
        let src = self.source(node, slot)?;
        let id = generated_layer_id(&self.model, kind, EditKind::InsertLayer, tag);
        let layer = LayerNode::new(id.clone(), kind, attrs, vec![src]).ok()?;
        self.push(Edit::InsertLayer {
            layer,
            before: node.to_string(),
            slot,
        })?;
        Some(id)
    }
}

fn shape_of(model: &ModelGraph, shapes: &ShapeMap, src: &str) -> Option<TensorShape> {
    shapes
        .get(src)
        .cloned()
        .or_else(|| model.input(src).map(|i| i.shape.clone()))
}

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

/// Target shape (without batch) that brings `shape` to `rank`: size-1 axes
/// are appended, or the last two axes are multiplied together.
fn reshape_to_rank(shape: &TensorShape, rank: usize) -> Option<Vec<usize>> {
    let mut dims = shape.without_batch().to_vec();
    while dims.len() + 1 < rank {
        dims.push(1);
    }
    while dims.len() + 1 > rank && dims.len() >= 2 {
        let last = dims.pop().expect("len >= 2");
        *dims.last_mut().expect("len >= 1") *= last;
    }
    (dims.len() + 1 == rank).then_some(dims)
}

/// All tuples over `options` (one option list per axis), or `samples` random
/// ones when there are too many.
fn combinations<T: Clone>(options: &[Vec<T>], samples: usize, rng: &mut impl Rng) -> Vec<Vec<T>> {
    let total = options
        .iter()
        .try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
        .unwrap_or(usize::MAX);
    if total == 0 {
        return Vec::new();
    }
    if total > ENUMERATION_LIMIT {
        return (0..samples)
            .map(|_| {
                options
                    .iter()
                    .map(|o| o.choose(rng).expect("non-empty").clone())
                    .collect()
            })
            .collect();
    }
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for axis in options {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    out
}

impl Session<'_> {
    /// Candidates for `diag`, in generator order then ascending cost.
    pub(super) fn candidates(
        &mut self,
        model: &ModelGraph,
        diag: &Diagnostic,
        round: usize,
    ) -> Vec<Step> {
        let (shapes, _) = infer_partial(model);
        let Some(node) = model.node(&diag.layer_id) else {
            return Vec::new();
        };
        let Some(in_shapes) = node
            .inputs
            .iter()
            .map(|s| shape_of(model, &shapes, s))
            .collect::<Option<Vec<_>>>()
        else {
            return Vec::new();
        };
        let builders = match (diag.kind, &diag.violation) {
            (ErrorKind::DimensionError, Violation::Rank { expected, slot, .. }) => {
                self.fix_dimension(model, node, &in_shapes, *slot, *expected)
            }
            (ErrorKind::InputShapeMismatch, Violation::Shapes { axis, .. }) => {
                fix_input_shape(model, node, &in_shapes, *axis)
            }
            (ErrorKind::ArgumentError, Violation::Argument { attrs, .. }) => {
                self.fix_argument(model, node, &in_shapes, attrs, round)
            }
            (ErrorKind::WeightShapeError, _) => self.fix_weight_shape(model, node, &in_shapes[0]),
            (ErrorKind::WindowOverflow, Violation::Window { label, limit, .. }) => {
                self.fix_window(model, node, *label, limit, round)
            }
            _ => Vec::new(),
        };
        let mut steps: Vec<Step> = builders
            .into_iter()
            .filter(|b| !b.edits.is_empty())
            .filter_map(|b| self.settle(b))
            .collect();
        steps.sort_by_key(|s| crate::ir::change_value(&s.edits));
        steps
    }

    /// Regenerates weights of edited nodes and their descendants until the
    /// first violation is no longer a weight mismatch caused by the edits.
    fn settle(&mut self, mut b: Builder) -> Option<Step> {
        let roots: Vec<String> = b
            .edits
            .iter()
            .flat_map(|e| match e {
                Edit::InsertLayer { layer, before, .. } => vec![layer.id.clone(), before.clone()],
                e => vec![e.target().to_string()],
            })
            .collect();
        for _ in 0..=b.model.len() {
            let (shapes, Some(d)) = infer_partial(&b.model) else {
                break;
            };
            if d.kind != ErrorKind::WeightShapeError {
                break;
            }
            let affected: HashSet<&str> = b.model.descendants(roots.iter().map(String::as_str));
            if !affected.contains(d.layer_id.as_str()) {
                break;
            }
            let node = b.model.node(&d.layer_id)?;
            let in_shape = shape_of(&b.model, &shapes, &node.inputs[0])?;
            let weights = self.regen_weights(node, &in_shape);
            let edit = Edit::WeightRegen {
                node: node.id.clone(),
                weights,
            };
            b.push(edit)?;
        }
        Some(Step {
            edits: b.edits,
            model: b.model,
        })
    }

    fn regen_weights(&mut self, node: &LayerNode, in_shape: &TensorShape) -> Arc<WeightSpec> {
        let (kernel, bias) = expected_weight_shapes(node, in_shape);
        let mut sample = |shape: Option<Vec<usize>>| {
            shape.and_then(|s| Array::from_fn(s, || self.rng.gen::<f64>()).ok())
        };
        let kernel = sample(kernel);
        let bias = sample(bias);
        Arc::new(WeightSpec { kernel, bias })
    }

    fn fix_dimension(
        &mut self,
        model: &ModelGraph,
        node: &LayerNode,
        in_shapes: &[TensorShape],
        slot: usize,
        expected: usize,
    ) -> Vec<Builder> {
        let actual = &in_shapes[slot];
        let mut out = Vec::new();
        if !node.kind.is_merge() {
            let variant = actual
                .rank()
                .checked_sub(2)
                .and_then(|n| node.kind.variant(n));
            if let Some(layer) = variant
                .filter(|&k| k != node.kind)
                .and_then(|k| node.to_variant(k))
            {
                let mut b = Builder::new(model);
                if b.push(Edit::ReplaceLayer {
                    node: node.id.clone(),
                    layer,
                })
                .is_some()
                {
                    out.push(b);
                }
            }
        }
        let target_rank = if node.kind.is_merge() {
            in_shapes[0].rank()
        } else {
            expected
        };
        let reshape = |slot: usize, shape: &TensorShape, rank: usize| {
            let target = reshape_to_rank(shape, rank)?;
            let mut b = Builder::new(model);
            let attrs = Attrs::from([("target_shape".to_string(), ints(&target))]);
            b.insert(
                LayerKind::Reshape,
                attrs,
                &node.id,
                slot,
                &format!("{}#{slot}", node.id),
            )?;
            Some(b)
        };
        out.extend(reshape(slot, actual, target_rank));
        if node.kind.is_merge() && slot != 0 {
            out.extend(reshape(0, &in_shapes[0], actual.rank()));
        }
        out
    }

    fn fix_weight_shape(
        &mut self,
        model: &ModelGraph,
        node: &LayerNode,
        in_shape: &TensorShape,
    ) -> Vec<Builder> {
        let weights = self.regen_weights(node, in_shape);
        let mut b = Builder::new(model);
        b.push(Edit::WeightRegen {
            node: node.id.clone(),
            weights,
        })
        .map(|_| vec![b])
        .unwrap_or_default()
    }

    fn fix_argument(
        &mut self,
        model: &ModelGraph,
        node: &LayerNode,
        in_shapes: &[TensorShape],
        implicated: &[String],
        round: usize,
    ) -> Vec<Builder> {
        let mut changes: Vec<Vec<Edit>> = Vec::new();
        if round == 1 {
            changes.extend(neutral_argument_changes(node, &in_shapes[0]));
        }
        let resamplable = |name: &str| {
            node.kind
                .attr_spec(name)
                .is_some_and(|s| !matches!(s.ty, AttrType::Float))
        };
        for _ in 0..self.cfg.arg_samples {
            let mut primary: Vec<&str> = implicated
                .iter()
                .map(String::as_str)
                .filter(|a| resamplable(a))
                .collect();
            let mut rest: Vec<&str> = node
                .attrs
                .keys()
                .map(String::as_str)
                .filter(|a| resamplable(a) && !primary.contains(a))
                .collect();
            primary.shuffle(&mut self.rng);
            rest.shuffle(&mut self.rng);
            let chosen: Vec<&str> = primary.into_iter().chain(rest).take(round).collect();
            let edits: Vec<Edit> = chosen
                .into_iter()
                .filter_map(|attr| {
                    let value = self.resample(node, attr, &in_shapes[0])?;
                    arg_change(node, attr, value)
                })
                .collect();
            if !edits.is_empty() {
                changes.push(edits);
            }
        }
        changes
            .into_iter()
            .filter_map(|edits| {
                let mut b = Builder::new(model);
                for e in edits {
                    b.push(e)?;
                }
                Some(b)
            })
            .collect()
    }

    /// A fresh value for one attribute drawn from the configured domains.
    fn resample(
        &mut self,
        node: &LayerNode,
        attr: &str,
        in_shape: &TensorShape,
    ) -> Option<AttrValue> {
        let spec = node.kind.attr_spec(attr)?;
        let d = &self.cfg.arg_domains;
        let range = |r: (i64, i64)| r.0..=r.1.max(r.0);
        Some(match spec.ty {
            AttrType::Int { .. } if attr == "axis" => {
                AttrValue::Int(*d.axis.choose(&mut self.rng)?)
            }
            AttrType::Int { .. } => AttrValue::Int(self.rng.gen_range(range(d.units))),
            AttrType::Ints {
                len: IntsLen::Free, ..
            } => {
                let len = node.ints(attr).map_or(1, <[i64]>::len);
                ints(&random_factorization(
                    in_shape.feature_elements(),
                    len,
                    &mut self.rng,
                ))
            }
            AttrType::Ints { len, .. } => {
                let n = node.kind.spatial_rank().unwrap_or(1);
                let (count, r) = match len {
                    IntsLen::Pairs => (2 * n, range(d.amounts)),
                    _ => (n, range(d.window)),
                };
                AttrValue::Ints((0..count).map(|_| self.rng.gen_range(r.clone())).collect())
            }
            AttrType::Token(options) => {
                let pool: Vec<&str> = if attr == "padding" {
                    d.padding.iter().map(String::as_str).collect()
                } else if options == ACTIVATIONS {
                    ACTIVATIONS.to_vec()
                } else {
                    options.to_vec()
                };
                AttrValue::Token(pool.choose(&mut self.rng)?.to_string())
            }
            AttrType::Bool => AttrValue::Bool(!node.flag(attr)?),
            AttrType::Float => return None,
        })
    }

    fn fix_window(
        &mut self,
        model: &ModelGraph,
        node: &LayerNode,
        label: WindowLabel,
        limit: &[usize],
        round: usize,
    ) -> Vec<Builder> {
        let samples = self.cfg.arg_samples * 4;
        let mut changes: Vec<Vec<Edit>> = Vec::new();
        match label {
            WindowLabel::PoolSize => {
                let pool = node.sizes("pool_size");
                let options: Vec<Vec<usize>> = pool
                    .iter()
                    .zip(limit)
                    .map(|(&p, &l)| if p > l { (1..=l).collect() } else { vec![p] })
                    .collect();
                for t in combinations(&options, samples, &mut self.rng) {
                    changes.extend(arg_change(node, "pool_size", ints(&t)).map(|e| vec![e]));
                }
            }
            WindowLabel::KernelSize => {
                let kernel = node.sizes("kernel_size");
                let dil = node.sizes("dilation_rate");
                let eff = effective_kernel(node);
                let overflow = |i: usize| eff[i] > limit[i];
                let kernel_options: Vec<Vec<usize>> = (0..kernel.len())
                    .map(|i| {
                        if overflow(i) {
                            (1..=(limit[i] - 1) / dil[i] + 1).collect()
                        } else {
                            vec![kernel[i]]
                        }
                    })
                    .collect();
                for t in combinations(&kernel_options, samples, &mut self.rng) {
                    changes.extend(arg_change(node, "kernel_size", ints(&t)).map(|e| vec![e]));
                }
                let dil_options: Vec<Vec<usize>> = (0..kernel.len())
                    .map(|i| {
                        if overflow(i) && kernel[i] > 1 && kernel[i] <= limit[i] {
                            (1..=(limit[i] - 1) / (kernel[i] - 1)).collect()
                        } else {
                            vec![dil[i]]
                        }
                    })
                    .collect();
                for t in combinations(&dil_options, samples, &mut self.rng) {
                    changes.extend(arg_change(node, "dilation_rate", ints(&t)).map(|e| vec![e]));
                }
            }
            WindowLabel::Cropping => {
                let crop = node.sizes("cropping");
                let options: Vec<Vec<(usize, usize)>> = limit
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| cropping_options(crop[2 * i], crop[2 * i + 1], l))
                    .collect();
                for t in combinations(&options, samples, &mut self.rng) {
                    let flat: Vec<usize> = t.iter().flat_map(|&(a, b)| [a, b]).collect();
                    changes.extend(arg_change(node, "cropping", ints(&flat)).map(|e| vec![e]));
                }
            }
        }
        if round >= 2 && label != WindowLabel::Cropping {
            changes.extend(
                arg_change(node, "padding", AttrValue::Token("same".into())).map(|e| vec![e]),
            );
            let attr = if label == WindowLabel::PoolSize {
                "pool_size"
            } else {
                "kernel_size"
            };
            for _ in 0..self.cfg.arg_samples {
                let t: Vec<usize> = limit
                    .iter()
                    .map(|&l| self.rng.gen_range(1..=l.max(1)))
                    .collect();
                changes.extend(arg_change(node, attr, ints(&t)).map(|e| vec![e]));
            }
        }
        changes
            .into_iter()
            .filter_map(|edits| {
                let mut b = Builder::new(model);
                for e in edits {
                    b.push(e)?;
                }
                Some(b)
            })
            .collect()
    }
}

/// Cropping pairs for one axis that leave at least one element, changing one
/// side when possible.
fn cropping_options(left: usize, right: usize, limit: usize) -> Vec<(usize, usize)> {
    if left + right <= limit {
        return vec![(left, right)];
    }
    let mut out = Vec::new();
    if left <= limit {
        out.extend((0..=limit - left).rev().map(|r| (left, r)));
    }
    if right <= limit {
        out.extend((0..=limit - right).rev().map(|l| (l, right)));
    }
    if out.is_empty() {
        for total in (0..=limit).rev() {
            out.extend((0..=total).map(|l| (l, total - l)));
        }
    }
    out
}

fn random_factorization(n: usize, len: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut rest = n.max(1);
    let mut out = Vec::with_capacity(len);
    for _ in 1..len {
        let divisors: Vec<usize> = (1..=rest).filter(|d| rest.is_multiple_of(*d)).collect();
        let d = *divisors.choose(rng).expect("1 divides everything");
        out.push(d);
        rest /= d;
    }
    out.push(rest);
    out.shuffle(rng);
    out
}

/// Deterministic first-round argument candidates: reset conflicting strides
/// or dilation to 1, try every valid axis, and reshape targets that hold the
/// input's element count.
fn neutral_argument_changes(node: &LayerNode, in_shape: &TensorShape) -> Vec<Vec<Edit>> {
    let mut out = Vec::new();
    match node.kind {
        k if k.is_conv() => {
            let reset = |attr: &str| arg_change(node, attr, ints(&vec![1; node.sizes(attr).len()]));
            let strides = reset("strides");
            let dilation = reset("dilation_rate");
            out.extend(strides.clone().map(|e| vec![e]));
            out.extend(dilation.clone().map(|e| vec![e]));
            if let (Some(s), Some(d)) = (strides, dilation) {
                out.push(vec![s, d]);
            }
        }
        LayerKind::Concatenate | LayerKind::Softmax | LayerKind::BatchNormalization => {
            let rank = in_shape.rank();
            for axis in 1..rank {
                let valid = resolve_axis(axis as i64, rank).is_ok();
                if valid {
                    out.extend(
                        arg_change(node, "axis", AttrValue::Int(axis as i64)).map(|e| vec![e]),
                    );
                }
            }
            out.extend(arg_change(node, "axis", AttrValue::Int(-1)).map(|e| vec![e]));
        }
        LayerKind::Reshape => {
            let have = in_shape.feature_elements();
            let target = node.sizes("target_shape");
            let mut targets: Vec<Vec<usize>> = vec![vec![have], in_shape.without_batch().to_vec()];
            if target.len() >= 2 {
                // Solve for each position in turn, keeping the others.
                for i in (0..target.len()).rev() {
                    let rest: usize = target
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &x)| x)
                        .product();
                    if rest > 0 && have.is_multiple_of(rest) {
                        let mut t = target.clone();
                        t[i] = have / rest;
                        targets.push(t);
                    }
                }
                let mut padded = vec![have];
                padded.resize(target.len(), 1);
                targets.push(padded);
            }
            let mut seen = BTreeMap::new();
            for t in targets {
                if seen.insert(t.clone(), ()).is_none() {
                    out.extend(arg_change(node, "target_shape", ints(&t)).map(|e| vec![e]));
                }
            }
        }
        _ => {}
    }
    out
}

/// Pads (spatial axes, rank 3..5) or concatenates zeros onto every input
/// smaller than the element-wise maximum shape. Returns the padding route
/// first and the all-concatenation route second when they differ.
fn fix_input_shape(
    model: &ModelGraph,
    node: &LayerNode,
    in_shapes: &[TensorShape],
    concat_axis: Option<usize>,
) -> Vec<Builder> {
    let rank = in_shapes[0].rank();
    let target: Vec<usize> = (0..rank)
        .map(|a| in_shapes.iter().map(|s| s.dims()[a]).max().unwrap_or(0))
        .collect();
    let padding_rank = (3..=5).contains(&rank).then(|| rank - 2);
    let mut routes = Vec::new();
    for allow_padding in [true, false] {
        let mut b = Builder::new(model);
        let mut used_padding = false;
        let mut ok = true;
        for (slot, shape) in in_shapes.iter().enumerate() {
            let deficits: Vec<(usize, usize)> = (1..rank)
                .filter(|&a| Some(a) != concat_axis)
                .map(|a| (a, target[a] - shape.dims()[a]))
                .filter(|&(_, d)| d > 0)
                .collect();
            if deficits.is_empty() {
                continue;
            }
            let mut dims = shape.dims().to_vec();
            let mut concat_axes = Vec::new();
            let mut pads = Vec::new();
            for &(a, d) in &deficits {
                match padding_rank {
                    Some(n) if allow_padding && a <= n => pads.push((a, d)),
                    _ => concat_axes.push((a, d)),
                }
            }
            if let (Some(n), false) = (padding_rank, pads.is_empty()) {
                let mut amounts = vec![0usize; 2 * n];
                for &(a, d) in &pads {
                    amounts[2 * (a - 1)] = d.div_ceil(2);
                    amounts[2 * (a - 1) + 1] = d / 2;
                    dims[a] += d;
                }
                let kind = SpatialFamily::ZeroPadding.member(n).expect("1..=3");
                let attrs = Attrs::from([("padding".to_string(), ints(&amounts))]);
                if b.insert(kind, attrs, &node.id, slot, &format!("{}#{slot}", node.id))
                    .is_none()
                {
                    ok = false;
                    break;
                }
                used_padding = true;
            }
            for (a, d) in concat_axes {
                let tag = format!("{}#{slot}#{a}", node.id);
                let const_id = generated_id(&b.model, "Inp", EditKind::InsertConstInput, &tag);
                let mut const_dims = dims.clone();
                const_dims[a] = d;
                let Ok(shape) = TensorShape::new(const_dims) else {
                    ok = false;
                    break;
                };
                let pushed = b.push(Edit::InsertConstInput {
                    id: const_id.clone(),
                    shape,
                    fill: 0.0,
                });
                let inserted = pushed.and_then(|_| {
                    let src = b.source(&node.id, slot)?;
                    let id = generated_layer_id(
                        &b.model,
                        LayerKind::Concatenate,
                        EditKind::InsertLayer,
                        &tag,
                    );
                    let attrs = Attrs::from([("axis".to_string(), AttrValue::Int(a as i64))]);
                    let layer =
                        LayerNode::new(id, LayerKind::Concatenate, attrs, vec![src, const_id])
                            .ok()?;
                    b.push(Edit::InsertLayer {
                        layer,
                        before: node.id.clone(),
                        slot,
                    })
                });
                if inserted.is_none() {
                    ok = false;
                    break;
                }
                dims[a] += d;
            }
            if !ok {
                break;
            }
        }
        if ok {
            routes.push((b, used_padding));
        }
    }
    // Without any padding the two routes coincide.
    if routes.len() == 2 && !routes[0].1 {
        routes.truncate(1);
    }
    routes.into_iter().map(|(b, _)| b).collect()
}
