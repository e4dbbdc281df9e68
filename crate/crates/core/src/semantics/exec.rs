//! Value-level execution for a subset of layers.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::ir::{LayerKind, LayerNode, ModelGraph, SpatialFamily, TensorShape};

use super::checks::{effective_kernel, resolve_axis};
use super::diagnostic::Diagnostic;
use super::infer::infer_shapes;

/// Row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: TensorShape,
    values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: TensorShape, values: Vec<f64>) -> Result<Self, ExecError> {
        if values.len() != shape.num_elements() {
            return Err(ExecError::BadTensor {
                shape,
                len: values.len(),
            });
        }
        Ok(Self { shape, values })
    }

    pub fn filled(shape: TensorShape, value: f64) -> Self {
        let n = shape.num_elements();
        Self {
            shape,
            values: vec![value; n],
        }
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("{0}")]
    Invalid(Box<Diagnostic>),
    #[error("{kind} ({node}) has no value semantics here")]
    UnsupportedKind { node: String, kind: LayerKind },
    #[error("{0} has no weights to execute with")]
    MissingWeights(String),
    #[error("no tensor supplied for input '{0}'")]
    MissingInput(String),
    #[error("input '{id}' expects shape {expected}, got {found}")]
    InputShape {
        id: String,
        expected: TensorShape,
        found: TensorShape,
    },
    #[error("tensor of shape {shape} cannot hold {len} values")]
    BadTensor { shape: TensorShape, len: usize },
}

/// Kinds [`execute_model`] can run.
pub fn is_value_executable(kind: LayerKind) -> bool {
    use LayerKind::*;
    match kind {
        Dense | ReLU | LeakyReLU | Softmax | Flatten | Reshape | Add | Subtract | Multiply
        | Average | Concatenate | Conv1D => true,
        k => matches!(
            k.spatial(),
            Some((
                SpatialFamily::ZeroPadding
                    | SpatialFamily::Cropping
                    | SpatialFamily::UpSampling
                    | SpatialFamily::MaxPooling
                    | SpatialFamily::AveragePooling,
                _
            ))
        ),
    }
}

/// Executes the model on concrete inputs. Constant inputs created by repairs
/// are filled automatically when not supplied.
pub fn execute_model(
    model: &ModelGraph,
    inputs: &HashMap<String, Tensor>,
) -> Result<BTreeMap<String, Tensor>, ExecError> {
    let shapes = infer_shapes(model).map_err(|d| ExecError::Invalid(Box::new(d)))?;
    if let Some(n) = model.nodes().iter().find(|n| !is_value_executable(n.kind)) {
        return Err(ExecError::UnsupportedKind {
            node: n.id.clone(),
            kind: n.kind,
        });
    }
    let mut values: HashMap<String, Tensor> = HashMap::new();
    for input in model.inputs() {
        let t = match (inputs.get(&input.id), input.fill) {
            (Some(t), _) => t.clone(),
            (None, Some(fill)) => Tensor::filled(input.shape.clone(), fill),
            (None, None) => return Err(ExecError::MissingInput(input.id.clone())),
        };
        if t.shape != input.shape {
            return Err(ExecError::InputShape {
                id: input.id.clone(),
                expected: input.shape.clone(),
                found: t.shape.clone(),
            });
        }
        values.insert(input.id.clone(), t);
    }
    let mut out = BTreeMap::new();
    for node in model.ordered_nodes() {
        let args: Vec<&Tensor> = node.inputs.iter().map(|s| &values[s]).collect();
        let shape = shapes[&node.id].clone();
        let data = run_layer(node, &args, &shape)?;
        let t = Tensor {
            shape,
            values: data,
        };
        out.insert(node.id.clone(), t.clone());
        values.insert(node.id.clone(), t);
    }
    Ok(out)
}

fn activate(name: Option<&str>, v: &mut [f64], last: usize) {
    match name {
        Some("relu") => v.iter_mut().for_each(|x| *x = x.max(0.0)),
        Some("sigmoid") => v.iter_mut().for_each(|x| *x = 1.0 / (1.0 + (-*x).exp())),
        Some("tanh") => v.iter_mut().for_each(|x| *x = x.tanh()),
        Some("softmax") => softmax(v, 1, last),
        _ => {}
    }
}

/// Softmax over an axis of length `len` whose trailing block size is `inner`.
fn softmax(v: &mut [f64], inner: usize, len: usize) {
    let block = len * inner;
    for chunk in v.chunks_mut(block) {
        for j in 0..inner {
            let max = (0..len)
                .map(|i| chunk[i * inner + j])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for i in 0..len {
                let e = (chunk[i * inner + j] - max).exp();
                chunk[i * inner + j] = e;
                sum += e;
            }
            for i in 0..len {
                chunk[i * inner + j] /= sum;
            }
        }
    }
}

fn row_major_strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Calls `f` with every multi-index of `dims` in row-major order.
fn for_each_index(dims: &[usize], mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0; dims.len()];
    let total: usize = dims.iter().product();
    for _ in 0..total {
        f(&idx);
        for a in (0..dims.len()).rev() {
            idx[a] += 1;
            if idx[a] < dims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// Dense over the innermost axis: `out[.., j] = bias[j] + sum_i x[.., i] * k[i, j]`.
fn dense(node: &LayerNode, x: &Tensor) -> Result<Vec<f64>, ExecError> {
    let w = node
        .weights
        .as_ref()
        .and_then(|w| w.kernel.as_ref().map(|k| (k, w.bias.as_ref())))
        .ok_or_else(|| ExecError::MissingWeights(node.id.clone()))?;
    let (kernel, bias) = w;
    let n = x.shape.last();
    let units = kernel.shape()[1];
    let k = kernel.values();
    let mut out = Vec::with_capacity(x.values.len() / n * units);
    for row in x.values.chunks(n) {
        for j in 0..units {
            let mut acc = bias.map_or(0.0, |b| b.values()[j]);
            for (i, xi) in row.iter().enumerate() {
                acc += xi * k[i * units + j];
            }
            out.push(acc);
        }
    }
    activate(node.token("activation"), &mut out, units);
    Ok(out)
}

/// Left padding used by `same` windows.
fn same_pad_left(len: usize, window: usize, stride: usize) -> usize {
    let out = len.div_ceil(stride);
    ((out - 1) * stride + window).saturating_sub(len) / 2
}

fn conv1d(node: &LayerNode, x: &Tensor, out_shape: &TensorShape) -> Result<Vec<f64>, ExecError> {
    let w = node
        .weights
        .as_ref()
        .filter(|w| w.kernel.is_some())
        .ok_or_else(|| ExecError::MissingWeights(node.id.clone()))?;
    let kernel = w.kernel.as_ref().expect("filtered");
    let d = x.shape.dims();
    let (steps, cin) = (d[1], d[2]);
    let o = out_shape.dims();
    let (out_steps, filters) = (o[1], o[2]);
    let k = node.sizes("kernel_size")[0];
    let stride = node.sizes("strides")[0];
    let dil = node.sizes("dilation_rate")[0];
    let pad = if node.same_padding() {
        same_pad_left(steps, effective_kernel(node)[0], stride)
    } else {
        0
    };
    let kv = kernel.values();
    let mut out = vec![0.0; d[0] * out_steps * filters];
    for b in 0..d[0] {
        for t in 0..out_steps {
            for f in 0..filters {
                let mut acc = w.bias.as_ref().map_or(0.0, |bias| bias.values()[f]);
                for kk in 0..k {
                    let pos = (t * stride + kk * dil) as isize - pad as isize;
                    if pos < 0 || pos as usize >= steps {
                        continue;
                    }
                    let base = (b * steps + pos as usize) * cin;
                    for c in 0..cin {
                        acc += x.values[base + c] * kv[(kk * cin + c) * filters + f];
                    }
                }
                out[(b * out_steps + t) * filters + f] = acc;
            }
        }
    }
    activate(node.token("activation"), &mut out, filters);
    Ok(out)
}

fn pool(node: &LayerNode, x: &Tensor, out_shape: &TensorShape, max: bool) -> Vec<f64> {
    let n = node.kind.spatial_rank().expect("pooling is spatial");
    let in_dims = x.shape.dims();
    let in_strides = row_major_strides(in_dims);
    let pool = node.sizes("pool_size");
    let strides = node.sizes("strides");
    let pads: Vec<usize> = (0..n)
        .map(|i| {
            if node.same_padding() {
                same_pad_left(in_dims[1 + i], pool[i], strides[i])
            } else {
                0
            }
        })
        .collect();
    let mut out = Vec::with_capacity(out_shape.num_elements());
    for_each_index(out_shape.dims(), |o| {
        let mut acc = if max { f64::NEG_INFINITY } else { 0.0 };
        let mut count = 0usize;
        for_each_index(&pool, |w| {
            let mut offset = o[0] * in_strides[0] + o[n + 1] * in_strides[n + 1];
            for i in 0..n {
                let pos = (o[1 + i] * strides[i] + w[i]) as isize - pads[i] as isize;
                if pos < 0 || pos as usize >= in_dims[1 + i] {
                    return;
                }
                offset += pos as usize * in_strides[1 + i];
            }
            let v = x.values[offset];
            if max {
                acc = acc.max(v);
            } else {
                acc += v;
            }
            count += 1;
        });
        out.push(if max { acc } else { acc / count as f64 });
    });
    out
}

/// Padding, cropping and upsampling: every output element maps back to one
/// input element or to zero.
fn spatial_map(
    node: &LayerNode,
    family: SpatialFamily,
    x: &Tensor,
    out_shape: &TensorShape,
) -> Vec<f64> {
    let n = node.kind.spatial_rank().expect("spatial");
    let in_dims = x.shape.dims();
    let in_strides = row_major_strides(in_dims);
    let mut out = Vec::with_capacity(out_shape.num_elements());
    let (pairs, sizes) = match family {
        SpatialFamily::ZeroPadding => (node.sizes("padding"), vec![]),
        SpatialFamily::Cropping => (node.sizes("cropping"), vec![]),
        _ => (vec![], node.sizes("size")),
    };
    for_each_index(out_shape.dims(), |o| {
        let mut offset = o[0] * in_strides[0] + o[n + 1] * in_strides[n + 1];
        for i in 0..n {
            let src = match family {
                SpatialFamily::ZeroPadding => {
                    let p = o[1 + i] as isize - pairs[2 * i] as isize;
                    if p < 0 || p as usize >= in_dims[1 + i] {
                        out.push(0.0);
                        return;
                    }
                    p as usize
                }
                SpatialFamily::Cropping => o[1 + i] + pairs[2 * i],
                _ => o[1 + i] / sizes[i],
            };
            offset += src * in_strides[1 + i];
        }
        out.push(x.values[offset]);
    });
    out
}

fn concatenate(node: &LayerNode, args: &[&Tensor], out_shape: &TensorShape) -> Vec<f64> {
    let rank = out_shape.rank();
    let axis = resolve_axis(node.int("axis").unwrap_or(-1), rank).expect("checked axis");
    let outer: usize = out_shape.dims()[..axis].iter().product();
    let mut out = Vec::with_capacity(out_shape.num_elements());
    for o in 0..outer {
        for t in args {
            let block: usize = t.shape.dims()[axis..].iter().product();
            out.extend_from_slice(&t.values[o * block..(o + 1) * block]);
        }
    }
    out
}

fn run_layer(
    node: &LayerNode,
    args: &[&Tensor],
    out_shape: &TensorShape,
) -> Result<Vec<f64>, ExecError> {
    let x = args[0];
    Ok(match node.kind {
        LayerKind::Dense => dense(node, x)?,
        LayerKind::Conv1D => conv1d(node, x, out_shape)?,
        LayerKind::ReLU => x.values.iter().map(|v| v.max(0.0)).collect(),
        LayerKind::LeakyReLU => {
            let alpha = node.float("alpha").unwrap_or(0.3);
            x.values
                .iter()
                .map(|&v| if v < 0.0 { alpha * v } else { v })
                .collect()
        }
        LayerKind::Softmax => {
            let axis =
                resolve_axis(node.int("axis").unwrap_or(-1), x.shape.rank()).expect("checked axis");
            let inner: usize = x.shape.dims()[axis + 1..].iter().product();
            let mut v = x.values.clone();
            softmax(&mut v, inner, x.shape.dims()[axis]);
            v
        }
        LayerKind::Flatten | LayerKind::Reshape => x.values.clone(),
        LayerKind::Add | LayerKind::Subtract | LayerKind::Multiply | LayerKind::Average => {
            let mut v = x.values.clone();
            for t in &args[1..] {
                for (a, b) in v.iter_mut().zip(&t.values) {
                    match node.kind {
                        LayerKind::Add | LayerKind::Average => *a += b,
                        LayerKind::Subtract => *a -= b,
                        _ => *a *= b,
                    }
                }
            }
            if node.kind == LayerKind::Average {
                let n = args.len() as f64;
                v.iter_mut().for_each(|a| *a /= n);
            }
            v
        }
        LayerKind::Concatenate => concatenate(node, args, out_shape),
        k => match k.spatial() {
            Some((SpatialFamily::MaxPooling, _)) => pool(node, x, out_shape, true),
            Some((SpatialFamily::AveragePooling, _)) => pool(node, x, out_shape, false),
            Some((
                family @ (SpatialFamily::ZeroPadding
                | SpatialFamily::Cropping
                | SpatialFamily::UpSampling),
                _,
            )) => spatial_map(node, family, x, out_shape),
            _ => {
                return Err(ExecError::UnsupportedKind {
                    node: node.id.clone(),
                    kind: k,
                })
            }
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Array, AttrValue, Attrs, ModelInput, WeightSpec};

    fn single(node: LayerNode, input: &[usize]) -> ModelGraph {
        let x = ModelInput::new("x", TensorShape::new(input.to_vec()).unwrap());
        let id = node.id.clone();
        ModelGraph::new("t", vec![x], vec![node], vec![id]).unwrap()
    }

    fn layer(kind: LayerKind, attrs: &[(&str, AttrValue)]) -> LayerNode {
        let a: Attrs = attrs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect();
        LayerNode::new("L", kind, a, vec!["x".into()]).unwrap()
    }

    fn run(model: &ModelGraph, shape: &[usize], values: Vec<f64>) -> Tensor {
        let t = Tensor::new(TensorShape::new(shape.to_vec()).unwrap(), values).unwrap();
        let inputs = HashMap::from([("x".to_string(), t)]);
        execute_model(model, &inputs).unwrap()["L"].clone()
    }

    fn dense(kernel: Array, bias: Array) -> LayerNode {
        let units = kernel.shape()[1] as i64;
        layer(LayerKind::Dense, &[("units", AttrValue::Int(units))]).with_weights(WeightSpec {
            kernel: Some(kernel),
            bias: Some(bias),
        })
    }

    #[test]
    fn dense_identity() {
        let n = dense(
            Array::new(vec![2, 2], vec![1., 0., 0., 1.]).unwrap(),
            Array::new(vec![2], vec![0., 0.]).unwrap(),
        );
        assert_eq!(
            run(&single(n, &[1, 2]), &[1, 2], vec![1., 2.]).values(),
            &[1., 2.]
        );
    }

    #[test]
    fn dense_sum_plus_bias() {
        let n = dense(
            Array::new(vec![2, 1], vec![1., 1.]).unwrap(),
            Array::new(vec![1], vec![3.]).unwrap(),
        );
        assert_eq!(
            run(&single(n, &[1, 2]), &[1, 2], vec![1., 2.]).values(),
            &[6.]
        );
    }

    #[test]
    fn dense_rank3_applies_per_innermost_row() {
        let n = dense(
            Array::new(vec![2, 1], vec![1., 10.]).unwrap(),
            Array::new(vec![1], vec![0.]).unwrap(),
        );
        let out = run(&single(n, &[1, 2, 2]), &[1, 2, 2], vec![1., 2., 3., 4.]);
        assert_eq!(out.shape().dims(), &[1, 2, 1]);
        assert_eq!(out.values(), &[21., 43.]);
    }

    #[test]
    fn zero_padding_and_cropping() {
        let pad = layer(
            LayerKind::ZeroPadding1D,
            &[("padding", AttrValue::Ints(vec![1, 2]))],
        );
        let out = run(&single(pad, &[1, 2, 1]), &[1, 2, 1], vec![5., 6.]);
        assert_eq!(out.values(), &[0., 5., 6., 0., 0.]);
        let crop = layer(
            LayerKind::Cropping1D,
            &[("cropping", AttrValue::Ints(vec![1, 1]))],
        );
        let out = run(&single(crop, &[1, 4, 1]), &[1, 4, 1], vec![1., 2., 3., 4.]);
        assert_eq!(out.values(), &[2., 3.]);
    }

    #[test]
    fn pooling() {
        let mp = layer(
            LayerKind::MaxPooling1D,
            &[("pool_size", AttrValue::Ints(vec![2]))],
        );
        let out = run(&single(mp, &[1, 4, 1]), &[1, 4, 1], vec![1., 3., 2., 0.]);
        assert_eq!(out.values(), &[3., 2.]);
        let ap = layer(
            LayerKind::AveragePooling2D,
            &[
                ("pool_size", AttrValue::Ints(vec![2, 2])),
                ("padding", AttrValue::Token("same".into())),
            ],
        );
        let out = run(
            &single(ap, &[1, 3, 3, 1]),
            &[1, 3, 3, 1],
            (1..=9).map(f64::from).collect(),
        );
        assert_eq!(out.shape().dims(), &[1, 2, 2, 1]);
        assert_eq!(out.values(), &[3., 4.5, 7.5, 9.]);
    }

    #[test]
    fn upsampling() {
        let up = layer(
            LayerKind::UpSampling1D,
            &[("size", AttrValue::Ints(vec![2]))],
        );
        let out = run(&single(up, &[1, 2, 1]), &[1, 2, 1], vec![1., 2.]);
        assert_eq!(out.values(), &[1., 1., 2., 2.]);
    }

    #[test]
    fn conv1d_dilated() {
        let conv = layer(
            LayerKind::Conv1D,
            &[
                ("filters", AttrValue::Int(1)),
                ("kernel_size", AttrValue::Int(2)),
                ("dilation_rate", AttrValue::Int(2)),
            ],
        )
        .with_weights(WeightSpec {
            kernel: Some(Array::new(vec![2, 1, 1], vec![1., 10.]).unwrap()),
            bias: Some(Array::new(vec![1], vec![0.5]).unwrap()),
        });
        let out = run(&single(conv, &[1, 4, 1]), &[1, 4, 1], vec![1., 2., 3., 4.]);
        assert_eq!(out.values(), &[31.5, 42.5]);
    }

    #[test]
    fn softmax_sums_to_one() {
        let sm = layer(LayerKind::Softmax, &[]);
        let out = run(&single(sm, &[1, 3]), &[1, 3], vec![1., 2., 3.]);
        assert!((out.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_only_kinds_rejected() {
        let rnn = layer(LayerKind::SimpleRNN, &[("units", AttrValue::Int(2))]);
        let m = single(rnn, &[1, 2, 2]);
        let t = Tensor::filled(TensorShape::new(vec![1, 2, 2]).unwrap(), 1.0);
        let err = execute_model(&m, &HashMap::from([("x".to_string(), t)])).unwrap_err();
        assert!(matches!(err, ExecError::UnsupportedKind { .. }));
    }
}
