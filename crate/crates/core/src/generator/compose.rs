//! Shape-guided composition: every layer is chosen among the family's kinds
//! that accept the current tensor, with attributes sampled so that the layer's
//! preconditions hold.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ir::{
    Array, AttrValue, Attrs, LayerKind, LayerNode, ModelGraph, ModelInput, SpatialFamily,
    TensorShape, WeightSpec,
};
use crate::semantics::{check_layer, expected_weight_shapes};

use super::{Family, GenConfig, GenError};

/// Largest size of any axis of a generated tensor.
const MAX_DIM: usize = 64;
/// Largest number of features per example.
const MAX_FEATURES: usize = 2048;

const MERGES: [LayerKind; 5] = [
    LayerKind::Add,
    LayerKind::Subtract,
    LayerKind::Multiply,
    LayerKind::Average,
    LayerKind::Concatenate,
];

fn family_kinds(family: Family) -> Vec<LayerKind> {
    use LayerKind::*;
    match family {
        Family::Dense => vec![
            Dense,
            ReLU,
            LeakyReLU,
            Softmax,
            Flatten,
            Reshape,
            BatchNormalization,
        ],
        Family::Recurrent => vec![SimpleRNN, LSTM, Embedding, Dense, Reshape, ReLU, Softmax],
        Family::Pooling => vec![
            MaxPooling1D,
            MaxPooling2D,
            MaxPooling3D,
            AveragePooling1D,
            AveragePooling2D,
            AveragePooling3D,
            ZeroPadding1D,
            ZeroPadding2D,
            ZeroPadding3D,
            Cropping1D,
            Cropping2D,
            Cropping3D,
            UpSampling1D,
            UpSampling2D,
            UpSampling3D,
            Flatten,
            Reshape,
            ReLU,
        ],
        Family::Conv => vec![
            Conv1D,
            Conv2D,
            Conv3D,
            MaxPooling1D,
            MaxPooling2D,
            MaxPooling3D,
            AveragePooling1D,
            AveragePooling2D,
            AveragePooling3D,
            ReLU,
            LeakyReLU,
            Softmax,
            Reshape,
            Flatten,
        ],
        Family::Mixed => LayerKind::ALL
            .into_iter()
            .filter(|k| !k.is_merge())
            .collect(),
    }
}

fn ints(xs: impl IntoIterator<Item = usize>) -> AttrValue {
    AttrValue::Ints(xs.into_iter().map(|x| x as i64).collect())
}

struct Composer<'c> {
    cfg: &'c GenConfig,
    rng: ChaCha8Rng,
    inputs: Vec<ModelInput>,
    nodes: Vec<LayerNode>,
    shapes: HashMap<String, TensorShape>,
    ids: HashSet<String>,
}

impl<'c> Composer<'c> {
    fn fresh_id(&mut self, prefix: &str) -> String {
        loop {
            let id = format!("{prefix}{:05}", self.rng.gen_range(0..100_000));
            if self.ids.insert(id.clone()) {
                return id;
            }
        }
    }

    fn dim(&mut self) -> usize {
        let (lo, hi) = self.cfg.dim_range;
        self.rng.gen_range(lo..=hi)
    }

    fn add_input(&mut self, dims: Vec<usize>) -> String {
        let id = self.fresh_id("Inp");
        let shape = TensorShape::with_batch(&dims).expect("positive dims");
        self.shapes.insert(id.clone(), shape.clone());
        self.inputs.push(ModelInput::new(id.clone(), shape));
        id
    }

    fn initial_dims(&mut self) -> Vec<usize> {
        let rank = match self.cfg.family {
            Family::Dense => self.rng.gen_range(1..=3),
            Family::Recurrent => self.rng.gen_range(1..=2),
            Family::Pooling | Family::Conv => self.rng.gen_range(2..=4),
            Family::Mixed => self.rng.gen_range(1..=4),
        };
        (0..rank).map(|_| self.dim()).collect()
    }

    /// Adds `node` if its preconditions hold and its output stays small.
    fn try_add(&mut self, mut node: LayerNode) -> Option<String> {
        let in_shapes: Vec<TensorShape> =
            node.inputs.iter().map(|s| self.shapes[s].clone()).collect();
        if self.cfg.with_weights && node.kind.has_weights() {
            if in_shapes[0].rank() < 2 {
                return None;
            }
            let (kernel, bias) = expected_weight_shapes(&node, &in_shapes[0]);
            let mut sample = |s: Option<Vec<usize>>| {
                s.and_then(|s| Array::from_fn(s, || self.rng.gen::<f64>()).ok())
            };
            let kernel = sample(kernel);
            let bias = sample(bias);
            node = node.with_weights(WeightSpec { kernel, bias });
        }
        let out = check_layer(&node, &in_shapes).ok()?;
        if out.dims().iter().any(|&d| d > MAX_DIM) || out.feature_elements() > MAX_FEATURES {
            return None;
        }
        let id = node.id.clone();
        self.shapes.insert(id.clone(), out);
        self.nodes.push(node);
        Some(id)
    }

    fn layer(&mut self, kind: LayerKind, attrs: Attrs, inputs: Vec<String>) -> Option<LayerNode> {
        let id = self.fresh_id(kind.id_prefix());
        LayerNode::new(id, kind, attrs, inputs).ok()
    }

    /// Attributes for `kind` that fit `shape`, or `None` if the kind cannot
    /// take this input.
    fn propose(&mut self, kind: LayerKind, shape: &TensorShape) -> Option<Attrs> {
        let rank = shape.rank();
        let dims = shape.dims();
        let mut a = Attrs::new();
        let mut set = |k: &str, v: AttrValue| {
            a.insert(k.to_string(), v);
        };
        if let Some((family, n)) = kind.spatial() {
            if rank != n + 2 {
                return None;
            }
            let spatial = &dims[1..=n];
            match family {
                SpatialFamily::Conv => {
                    let mut kernel = Vec::new();
                    let mut dilation = Vec::new();
                    let mut strides = Vec::new();
                    for &d in spatial {
                        let k = self.rng.gen_range(1..=d.min(3));
                        let dil = if k > 1 && 2 * (k - 1) < d && self.rng.gen_bool(0.2) {
                            2
                        } else {
                            1
                        };
                        kernel.push(k);
                        dilation.push(dil);
                    }
                    let dilated = dilation.iter().any(|&d| d > 1);
                    for _ in spatial {
                        strides.push(if !dilated && self.rng.gen_bool(0.3) {
                            2
                        } else {
                            1
                        });
                    }
                    set("filters", AttrValue::Int(self.rng.gen_range(1..=8)));
                    set("kernel_size", ints(kernel));
                    set("strides", ints(strides));
                    set("dilation_rate", ints(dilation));
                    set(
                        "padding",
                        AttrValue::Token(["valid", "same"].choose(&mut self.rng)?.to_string()),
                    );
                    set(
                        "activation",
                        AttrValue::Token(["linear", "relu"].choose(&mut self.rng)?.to_string()),
                    );
                }
                SpatialFamily::MaxPooling | SpatialFamily::AveragePooling => {
                    let pool: Vec<usize> = spatial
                        .iter()
                        .map(|&d| self.rng.gen_range(1..=d.min(3)))
                        .collect();
                    if self.rng.gen_bool(0.3) {
                        let strides: Vec<usize> =
                            pool.iter().map(|&p| self.rng.gen_range(1..=p)).collect();
                        set("strides", ints(strides));
                    }
                    set("pool_size", ints(pool));
                    set(
                        "padding",
                        AttrValue::Token(["valid", "same"].choose(&mut self.rng)?.to_string()),
                    );
                }
                SpatialFamily::ZeroPadding => {
                    let p: Vec<usize> = (0..2 * n).map(|_| self.rng.gen_range(0..=2)).collect();
                    set("padding", ints(p));
                }
                SpatialFamily::Cropping => {
                    let mut c = Vec::new();
                    for &d in spatial {
                        let total = self.rng.gen_range(0..d);
                        let left = self.rng.gen_range(0..=total);
                        c.extend([left, total - left]);
                    }
                    set("cropping", ints(c));
                }
                SpatialFamily::UpSampling => {
                    let s: Vec<usize> = (0..n).map(|_| self.rng.gen_range(1..=2)).collect();
                    set("size", ints(s));
                }
            }
            return Some(a);
        }
        match kind {
            LayerKind::Dense => {
                set("units", AttrValue::Int(self.rng.gen_range(1..=8)));
                set(
                    "activation",
                    AttrValue::Token(
                        ["linear", "relu", "tanh"]
                            .choose(&mut self.rng)?
                            .to_string(),
                    ),
                );
            }
            LayerKind::Softmax => {
                if rank < 2 {
                    return None;
                }
                let axis = if self.rng.gen_bool(0.5) {
                    -1
                } else {
                    self.rng.gen_range(1..rank) as i64
                };
                set("axis", AttrValue::Int(axis));
            }
            LayerKind::Reshape => {
                let len = self.rng.gen_range(1..=4);
                let target = factorize(shape.feature_elements(), len, &mut self.rng);
                set("target_shape", ints(target));
            }
            LayerKind::Embedding => {
                if rank != 2 {
                    return None;
                }
                set("input_dim", AttrValue::Int(self.rng.gen_range(2..=16)));
                set("output_dim", AttrValue::Int(self.rng.gen_range(1..=8)));
            }
            LayerKind::SimpleRNN | LayerKind::LSTM => {
                if rank != 3 {
                    return None;
                }
                set("units", AttrValue::Int(self.rng.gen_range(1..=8)));
                set("return_sequences", AttrValue::Bool(self.rng.gen_bool(0.5)));
            }
            LayerKind::Flatten | LayerKind::BatchNormalization if rank < 2 => {
                return None;
            }
            _ => {}
        }
        Some(a)
    }

    /// Joins `cur` with a second operand: an activation of `cur` or a fresh
    /// model input.
    fn merge(&mut self, cur: &str) -> Option<String> {
        let shape = self.shapes[cur].clone();
        let kind = *MERGES.choose(&mut self.rng)?;
        let rank = shape.rank();
        let mut attrs = Attrs::new();
        let mut other_dims = shape.without_batch().to_vec();
        if kind == LayerKind::Concatenate {
            if rank < 2 {
                return None;
            }
            let axis = self.rng.gen_range(1..rank);
            attrs.insert("axis".into(), AttrValue::Int(axis as i64));
            other_dims[axis - 1] = self.dim();
        }
        let other = if other_dims == shape.without_batch() && self.rng.gen_bool(0.5) {
            let act = *[LayerKind::ReLU, LayerKind::LeakyReLU].choose(&mut self.rng)?;
            let node = self.layer(act, Attrs::new(), vec![cur.to_string()])?;
            self.try_add(node)?
        } else {
            self.add_input(other_dims)
        };
        let mut operands = vec![cur.to_string(), other];
        if self.rng.gen_bool(0.5) {
            operands.reverse();
        }
        let node = self.layer(kind, attrs, operands)?;
        self.try_add(node)
    }

    fn compose(mut self) -> Result<ModelGraph, GenError> {
        let (lo, hi) = self.cfg.layers;
        let target = self.rng.gen_range(lo..=hi);
        let dims = self.initial_dims();
        let mut cur = self.add_input(dims);
        let kinds = family_kinds(self.cfg.family);
        let mut stalls = 0;
        while self.nodes.len() < target && stalls < 100 {
            if self.cfg.graph_mode && self.nodes.len() + 2 <= target && self.rng.gen_bool(0.3) {
                if let Some(id) = self.merge(&cur) {
                    cur = id;
                    continue;
                }
            }
            let shape = self.shapes[&cur].clone();
            let mut order = kinds.clone();
            order.shuffle(&mut self.rng);
            let mut added = None;
            for kind in order {
                let Some(attrs) = self.propose(kind, &shape) else {
                    continue;
                };
                let Some(node) = self.layer(kind, attrs, vec![cur.clone()]) else {
                    continue;
                };
                if let Some(id) = self.try_add(node) {
                    added = Some(id);
                    break;
                }
            }
            match added {
                Some(id) => cur = id,
                None => stalls += 1,
            }
        }
        let consumed: HashSet<&str> = self
            .nodes
            .iter()
            .flat_map(|n| n.inputs.iter().map(String::as_str))
            .collect();
        let outputs: Vec<String> = self
            .nodes
            .iter()
            .filter(|n| !consumed.contains(n.id.as_str()))
            .map(|n| n.id.clone())
            .collect();
        if outputs.is_empty() {
            return Err(GenError::Config(
                "no layer fits the family's input shapes".into(),
            ));
        }
        let name = format!("gen-{}-{}", self.cfg.family, self.cfg.seed);
        ModelGraph::new(name, self.inputs, self.nodes, outputs)
            .map_err(|e| GenError::Config(e.to_string()))
    }
}

/// `n` split into `len` positive factors in random order.
fn factorize(n: usize, len: usize, rng: &mut impl Rng) -> Vec<usize> {
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

/// A model that passes shape inference, composed from the family's kinds.
pub fn generate_valid_model(cfg: &GenConfig) -> Result<ModelGraph, GenError> {
    cfg.validate()?;
    Composer {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        inputs: Vec::new(),
        nodes: Vec::new(),
        shapes: HashMap::new(),
        ids: HashSet::new(),
    }
    .compose()
}
