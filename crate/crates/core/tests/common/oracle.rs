//! Naive reference implementations written independently of the library's
//! executor: explicit multi-indices instead of flat chunking.

use modelfix::ir::{
    Array, AttrValue, Attrs, LayerKind, LayerNode, ModelGraph, ModelInput, TensorShape, WeightSpec,
};
use rand::Rng;

/// Flat offset of a multi-index in a row-major tensor.
fn offset(dims: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

fn all_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &d in dims {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..d).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}

/// Dense layer over the innermost axis of `x` (shape `dims`), followed by
/// `activation`.
pub fn dense(
    dims: &[usize],
    x: &[f64],
    kernel: &[Vec<f64>],
    bias: &[f64],
    activation: &str,
) -> Vec<f64> {
    let (outer, n) = dims.split_at(dims.len() - 1);
    let n = n[0];
    let units = bias.len();
    let mut out_dims = outer.to_vec();
    out_dims.push(units);
    let mut y = vec![0.0; out_dims.iter().product()];
    for prefix in all_indices(outer) {
        let mut row = Vec::with_capacity(units);
        for (j, b) in bias.iter().enumerate() {
            let mut s = *b;
            for (i, k_row) in kernel.iter().enumerate().take(n) {
                let mut xi = prefix.clone();
                xi.push(i);
                s += x[offset(dims, &xi)] * k_row[j];
            }
            row.push(s);
        }
        let row = match activation {
            "relu" => row
                .into_iter()
                .map(|v| if v > 0.0 { v } else { 0.0 })
                .collect(),
            "tanh" => row.into_iter().map(f64::tanh).collect(),
            "sigmoid" => row.into_iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect(),
            "softmax" => {
                let m = row.iter().cloned().fold(f64::MIN, f64::max);
                let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
                let z: f64 = e.iter().sum();
                e.into_iter().map(|v| v / z).collect()
            }
            _ => row,
        };
        for (j, v) in row.into_iter().enumerate() {
            let mut yi = prefix.clone();
            yi.push(j);
            y[offset(&out_dims, &yi)] = v;
        }
    }
    y
}

/// A random single-Dense model plus the raw parameters for [`dense`].
pub struct DenseCase {
    pub model: ModelGraph,
    pub dims: Vec<usize>,
    pub x: Vec<f64>,
    pub kernel: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: &'static str,
}

pub fn random_dense_case(rng: &mut impl Rng) -> DenseCase {
    let rank = rng.gen_range(1..=3);
    let mut dims = vec![1];
    dims.extend((0..rank).map(|_| rng.gen_range(1..=5)));
    let n = *dims.last().unwrap();
    let units = rng.gen_range(1..=6);
    let activation = ["linear", "relu", "tanh", "sigmoid", "softmax"][rng.gen_range(0..5)];
    let kernel: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..units).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let bias: Vec<f64> = (0..units).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x: Vec<f64> = (0..dims.iter().product::<usize>())
        .map(|_| rng.gen_range(-3.0..3.0))
        .collect();
    let mut attrs = Attrs::new();
    attrs.insert("units".into(), AttrValue::Int(units as i64));
    attrs.insert("activation".into(), AttrValue::Token(activation.into()));
    let flat: Vec<f64> = kernel.iter().flatten().copied().collect();
    let node = LayerNode::new("D", LayerKind::Dense, attrs, vec!["x".into()])
        .unwrap()
        .with_weights(WeightSpec {
            kernel: Some(Array::new(vec![n, units], flat).unwrap()),
            bias: Some(Array::new(vec![units], bias.clone()).unwrap()),
        });
    let input = ModelInput::new("x", TensorShape::new(dims.clone()).unwrap());
    let model = ModelGraph::new("dense-oracle", vec![input], vec![node], vec!["D".into()]).unwrap();
    DenseCase {
        model,
        dims,
        x,
        kernel,
        bias,
        activation,
    }
}
