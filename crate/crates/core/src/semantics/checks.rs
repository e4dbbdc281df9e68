//! Per-layer precondition checks and output shape rules.

use crate::ir::{dims_string, LayerKind, LayerNode, TensorShape};

use super::diagnostic::{Diagnostic, ErrorKind, Violation, WeightPart, WindowLabel};

/// A failed precondition, not yet attached to a location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckFailure {
    pub kind: ErrorKind,
    pub violation: Violation,
    pub distance: u64,
}

impl CheckFailure {
    fn new(kind: ErrorKind, violation: Violation, distance: u64) -> Self {
        debug_assert!(distance > 0);
        Self {
            kind,
            violation,
            distance,
        }
    }

    pub fn badness(&self) -> i128 {
        super::compute_badness(self.kind, self.distance)
    }

    pub fn at(self, layer_id: &str, location: usize) -> Diagnostic {
        Diagnostic::new(self.kind, layer_id, location, self.violation, self.distance)
    }
}

pub type CheckResult = Result<(), CheckFailure>;

fn abs_diff(a: usize, b: usize) -> u64 {
    a.abs_diff(b) as u64
}

pub fn check_min_dimensions(shape: &TensorShape, min_rank: usize) -> CheckResult {
    check_min_dimensions_at(shape, min_rank, 0)
}

fn check_min_dimensions_at(shape: &TensorShape, min_rank: usize, slot: usize) -> CheckResult {
    if shape.rank() >= min_rank {
        return Ok(());
    }
    Err(CheckFailure::new(
        ErrorKind::DimensionError,
        Violation::Rank {
            shape: shape.clone(),
            expected: min_rank,
            at_least: true,
            slot,
        },
        abs_diff(shape.rank(), min_rank),
    ))
}

pub fn check_exact_dimensions(shape: &TensorShape, rank: usize) -> CheckResult {
    check_exact_dimensions_at(shape, rank, 0)
}

fn check_exact_dimensions_at(shape: &TensorShape, rank: usize, slot: usize) -> CheckResult {
    if shape.rank() == rank {
        return Ok(());
    }
    Err(CheckFailure::new(
        ErrorKind::DimensionError,
        Violation::Rank {
            shape: shape.clone(),
            expected: rank,
            at_least: false,
            slot,
        },
        abs_diff(shape.rank(), rank),
    ))
}

/// Rank requirement of single-input layers: `(rank, exact)`.
pub fn required_rank(kind: LayerKind) -> Option<(usize, bool)> {
    if let Some(n) = kind.spatial_rank() {
        return Some((n + 2, true));
    }
    match kind {
        LayerKind::Dense | LayerKind::BatchNormalization => Some((2, false)),
        LayerKind::Embedding => Some((2, true)),
        LayerKind::SimpleRNN | LayerKind::LSTM => Some((3, true)),
        _ => None,
    }
}

fn check_rank(node: &LayerNode, in_shapes: &[TensorShape]) -> CheckResult {
    if node.kind.is_merge() {
        let reference = in_shapes[0].rank();
        for (slot, s) in in_shapes.iter().enumerate().skip(1) {
            check_exact_dimensions_at(s, reference, slot)?;
        }
        return Ok(());
    }
    match required_rank(node.kind) {
        Some((rank, true)) => check_exact_dimensions(&in_shapes[0], rank),
        Some((rank, false)) => check_min_dimensions(&in_shapes[0], rank),
        None => Ok(()),
    }
}

/// Normalizes a possibly negative axis against `rank`; `None` when it names the
/// batch axis or lies outside the shape. Also returns the distance to the
/// valid range.
pub fn resolve_axis(axis: i64, rank: usize) -> Result<usize, u64> {
    let r = rank as i64;
    let a = if axis < 0 { r + axis } else { axis };
    if a >= 1 && a < r {
        Ok(a as usize)
    } else if a < 1 {
        Err((1 - a) as u64)
    } else {
        Err((a - r + 1) as u64)
    }
}

/// Merge layers: element-wise kinds need identical shapes; Concatenate needs
/// equality except on its axis. Ranks are assumed equal (checked earlier).
pub fn check_multi_input_shapes(node: &LayerNode, in_shapes: &[TensorShape]) -> CheckResult {
    let reference = &in_shapes[0];
    let axis = if node.kind == LayerKind::Concatenate {
        resolve_axis(node.int("axis").unwrap_or(-1), reference.rank()).ok()
    } else {
        None
    };
    let mut distance = 0u64;
    for s in &in_shapes[1..] {
        for (i, (&a, &b)) in reference.dims().iter().zip(s.dims()).enumerate() {
            if Some(i) != axis {
                distance += abs_diff(a, b);
            }
        }
        distance += 10 * abs_diff(reference.rank(), s.rank());
    }
    if distance == 0 {
        return Ok(());
    }
    Err(CheckFailure::new(
        ErrorKind::InputShapeMismatch,
        Violation::Shapes {
            shapes: in_shapes.to_vec(),
            axis,
        },
        distance,
    ))
}

fn argument(attrs: &[&str], observed: String, expected: String, distance: u64) -> CheckFailure {
    CheckFailure::new(
        ErrorKind::ArgumentError,
        Violation::Argument {
            attrs: attrs.iter().map(|s| s.to_string()).collect(),
            observed,
            expected,
        },
        distance,
    )
}

fn check_axis(node: &LayerNode, rank: usize) -> CheckResult {
    let axis = node.int("axis").unwrap_or(-1);
    resolve_axis(axis, rank).map(|_| ()).map_err(|d| {
        argument(
            &["axis"],
            format!("Axis {axis} For Input Rank {rank}"),
            format!("Axis Between 1 And {}", rank.saturating_sub(1)),
            d,
        )
    })
}

/// Consistency among a layer's arguments and between arguments and input.
pub fn check_arg_consistency(node: &LayerNode, in_shapes: &[TensorShape]) -> CheckResult {
    match node.kind {
        k if k.is_conv() => {
            let strided = node
                .ints("strides")
                .unwrap_or(&[])
                .iter()
                .filter(|&&s| s > 1)
                .count();
            let dilated = node
                .ints("dilation_rate")
                .unwrap_or(&[])
                .iter()
                .filter(|&&d| d > 1)
                .count();
            if strided > 0 && dilated > 0 {
                return Err(argument(
                    &["strides", "dilation_rate"],
                    format!(
                        "strides {} With dilation_rate {}",
                        dims_string(node.ints("strides").unwrap_or(&[])),
                        dims_string(node.ints("dilation_rate").unwrap_or(&[]))
                    ),
                    "strides Or dilation_rate All 1".to_string(),
                    (strided * dilated) as u64,
                ));
            }
            Ok(())
        }
        LayerKind::Concatenate | LayerKind::Softmax | LayerKind::BatchNormalization => {
            check_axis(node, in_shapes[0].rank())
        }
        LayerKind::Reshape => {
            let target = node.sizes("target_shape");
            let want: usize = target.iter().product();
            let have = in_shapes[0].feature_elements();
            if want == have {
                return Ok(());
            }
            Err(argument(
                &["target_shape"],
                format!("Target Shape {} Holds {want} Values", dims_string(&target)),
                format!("{have} Values"),
                abs_diff(want, have),
            ))
        }
        _ => Ok(()),
    }
}

fn spatial_dims(shape: &TensorShape, n: usize) -> &[usize] {
    &shape.dims()[1..=n]
}

/// Pool/kernel windows must fit the input under valid padding; cropping must
/// leave at least one element per axis.
pub fn check_window_fits(node: &LayerNode, in_shape: &TensorShape) -> CheckResult {
    let Some(n) = node.kind.spatial_rank() else {
        return Ok(());
    };
    let dims = spatial_dims(in_shape, n);
    let (label, window, limit): (WindowLabel, Vec<usize>, Vec<usize>) = if node.kind.is_conv() {
        if node.same_padding() {
            return Ok(());
        }
        (
            WindowLabel::KernelSize,
            effective_kernel(node),
            dims.to_vec(),
        )
    } else if node.kind.is_pooling() {
        if node.same_padding() {
            return Ok(());
        }
        (
            WindowLabel::PoolSize,
            node.sizes("pool_size"),
            dims.to_vec(),
        )
    } else if matches!(
        node.kind.spatial(),
        Some((crate::ir::SpatialFamily::Cropping, _))
    ) {
        let c = node.sizes("cropping");
        let totals = c.chunks(2).map(|p| p[0] + p[1]).collect();
        (
            WindowLabel::Cropping,
            totals,
            dims.iter().map(|d| d - 1).collect(),
        )
    } else {
        return Ok(());
    };
    let overflow: u64 = window
        .iter()
        .zip(&limit)
        .map(|(&w, &l)| w.saturating_sub(l) as u64)
        .sum();
    if overflow == 0 {
        return Ok(());
    }
    Err(CheckFailure::new(
        ErrorKind::WindowOverflow,
        Violation::Window {
            label,
            window,
            limit,
        },
        overflow,
    ))
}

/// `dilation * (k - 1) + 1` per spatial axis.
pub fn effective_kernel(node: &LayerNode) -> Vec<usize> {
    let k = node.sizes("kernel_size");
    let d = node.sizes("dilation_rate");
    k.iter()
        .zip(d.iter().chain(std::iter::repeat(&1)))
        .map(|(&k, &d)| d * (k - 1) + 1)
        .collect()
}

/// Kernel and bias shapes a weighted layer needs for `in_shape`.
pub fn expected_weight_shapes(
    node: &LayerNode,
    in_shape: &TensorShape,
) -> (Option<Vec<usize>>, Option<Vec<usize>>) {
    let units = |name: &str| node.int(name).unwrap_or(1) as usize;
    match node.kind {
        LayerKind::Dense => {
            let u = units("units");
            (Some(vec![in_shape.last(), u]), Some(vec![u]))
        }
        k if k.is_conv() => {
            let f = units("filters");
            let mut kernel = node.sizes("kernel_size");
            kernel.push(in_shape.last());
            kernel.push(f);
            (Some(kernel), Some(vec![f]))
        }
        LayerKind::Embedding => (Some(vec![units("input_dim"), units("output_dim")]), None),
        LayerKind::SimpleRNN => {
            let u = units("units");
            (Some(vec![in_shape.last(), u]), Some(vec![u]))
        }
        LayerKind::LSTM => {
            let u = 4 * units("units");
            (Some(vec![in_shape.last(), u]), Some(vec![u]))
        }
        _ => (None, None),
    }
}

/// Distance between two optional shapes: per-axis differences plus 10 per
/// rank mismatch (an absent part counts as rank 0).
pub fn weight_shape_distance(found: Option<&[usize]>, expected: Option<&[usize]>) -> u64 {
    let f = found.unwrap_or(&[]);
    let e = expected.unwrap_or(&[]);
    let common: u64 = f.iter().zip(e).map(|(&a, &b)| abs_diff(a, b)).sum();
    common + 10 * abs_diff(f.len(), e.len())
}

/// Declared weights must match the shapes derived from kind, attributes and
/// input. Layers without declared weights pass.
pub fn check_weight_consistency(node: &LayerNode, in_shape: &TensorShape) -> CheckResult {
    let Some(w) = &node.weights else {
        return Ok(());
    };
    let (kernel, bias) = expected_weight_shapes(node, in_shape);
    for (part, found, expected) in [
        (WeightPart::Kernel, w.kernel_shape(), kernel.as_deref()),
        (WeightPart::Bias, w.bias_shape(), bias.as_deref()),
    ] {
        let distance = weight_shape_distance(found, expected);
        if distance > 0 {
            return Err(CheckFailure::new(
                ErrorKind::WeightShapeError,
                Violation::Weights {
                    part,
                    found: found.map(<[usize]>::to_vec),
                    expected: expected.map(<[usize]>::to_vec),
                },
                distance,
            ));
        }
    }
    Ok(())
}

fn window_out(len: usize, window: usize, stride: usize, same: bool) -> usize {
    if same {
        len.div_ceil(stride)
    } else {
        (len - window) / stride + 1
    }
}

/// Output shape of a layer whose preconditions hold.
pub fn output_shape(node: &LayerNode, in_shapes: &[TensorShape]) -> TensorShape {
    let input = &in_shapes[0];
    let dims = input.dims();
    let batch = dims[0];
    let out: Vec<usize> = match node.kind {
        LayerKind::Dense => {
            let mut d = dims.to_vec();
            *d.last_mut().expect("rank >= 1") = node.int("units").unwrap_or(1) as usize;
            d
        }
        k if k.is_conv() || k.is_pooling() => {
            let n = k.spatial_rank().expect("spatial");
            let (window, channels) = if k.is_conv() {
                (
                    effective_kernel(node),
                    node.int("filters").unwrap_or(1) as usize,
                )
            } else {
                (node.sizes("pool_size"), input.last())
            };
            let strides = node.sizes("strides");
            let same = node.same_padding();
            let mut d = vec![batch];
            for i in 0..n {
                d.push(window_out(dims[1 + i], window[i], strides[i], same));
            }
            d.push(channels);
            d
        }
        k if k.spatial().is_some() => {
            let n = k.spatial_rank().expect("spatial");
            let mut d = dims.to_vec();
            let family = k.spatial().map(|(f, _)| f);
            use crate::ir::SpatialFamily as F;
            match family {
                Some(F::ZeroPadding) => {
                    let p = node.sizes("padding");
                    for i in 0..n {
                        d[1 + i] += p[2 * i] + p[2 * i + 1];
                    }
                }
                Some(F::Cropping) => {
                    let c = node.sizes("cropping");
                    for i in 0..n {
                        d[1 + i] -= c[2 * i] + c[2 * i + 1];
                    }
                }
                Some(F::UpSampling) => {
                    let s = node.sizes("size");
                    for i in 0..n {
                        d[1 + i] *= s[i];
                    }
                }
                _ => unreachable!("conv and pooling handled above"),
            }
            d
        }
        LayerKind::Flatten => vec![batch, input.feature_elements()],
        LayerKind::Reshape => std::iter::once(batch)
            .chain(node.sizes("target_shape"))
            .collect(),
        LayerKind::Concatenate => {
            let axis = resolve_axis(node.int("axis").unwrap_or(-1), input.rank()).unwrap_or(1);
            let mut d = dims.to_vec();
            d[axis] = in_shapes.iter().map(|s| s.dims()[axis]).sum();
            d
        }
        LayerKind::Embedding => vec![batch, dims[1], node.int("output_dim").unwrap_or(1) as usize],
        LayerKind::SimpleRNN | LayerKind::LSTM => {
            let units = node.int("units").unwrap_or(1) as usize;
            if node.flag("return_sequences").unwrap_or(false) {
                vec![batch, dims[1], units]
            } else {
                vec![batch, units]
            }
        }
        _ => dims.to_vec(),
    };
    TensorShape::new(out).expect("output shape of a checked layer is valid")
}

/// Runs a layer's checks in order (rank, merge shapes, arguments, window,
/// weights) and returns its output shape.
pub fn check_layer(
    node: &LayerNode,
    in_shapes: &[TensorShape],
) -> Result<TensorShape, CheckFailure> {
    check_rank(node, in_shapes)?;
    if node.kind.is_merge() {
        // An invalid concat axis must be reported before comparing shapes.
        check_arg_consistency(node, in_shapes)?;
        check_multi_input_shapes(node, in_shapes)?;
    } else {
        check_arg_consistency(node, in_shapes)?;
        check_window_fits(node, &in_shapes[0])?;
        check_weight_consistency(node, &in_shapes[0])?;
    }
    Ok(output_shape(node, in_shapes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Array, AttrValue, Attrs, WeightSpec};

    fn shape(d: &[usize]) -> TensorShape {
        TensorShape::new(d.to_vec()).unwrap()
    }

    fn node(kind: LayerKind, attrs: &[(&str, AttrValue)], inputs: usize) -> LayerNode {
        let a: Attrs = attrs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect();
        let ins = (0..inputs).map(|i| format!("in{i}")).collect();
        LayerNode::new("N", kind, a, ins).unwrap()
    }

    fn int(v: i64) -> AttrValue {
        AttrValue::Int(v)
    }

    fn ints(v: &[i64]) -> AttrValue {
        AttrValue::Ints(v.to_vec())
    }

    fn weights(kernel: &[usize], bias: Option<usize>) -> WeightSpec {
        WeightSpec {
            kernel: Some(Array::from_fn(kernel.to_vec(), || 0.5).unwrap()),
            bias: bias.map(|b| Array::from_fn(vec![b], || 0.0).unwrap()),
        }
    }

    #[test]
    fn min_dimensions() {
        let f = check_min_dimensions(&shape(&[1, 16]), 3).unwrap_err();
        assert_eq!(f.badness(), -100_000_000_000_000_000);
        assert!(check_min_dimensions(&shape(&[1, 4, 4]), 3).is_ok());
        assert!(check_min_dimensions(&shape(&[1, 2, 2, 2, 2]), 3).is_ok());
    }

    #[test]
    fn exact_dimensions() {
        assert!(check_exact_dimensions(&shape(&[1, 2, 3]), 3).is_ok());
        let f = check_exact_dimensions(&shape(&[1, 1, 1, 1, 1, 1]), 4).unwrap_err();
        assert_eq!(f.badness(), -200_000_000_000_000_000);
        let pool = node(
            LayerKind::MaxPooling3D,
            &[("pool_size", ints(&[3, 3, 3]))],
            1,
        );
        let f = check_layer(&pool, &[shape(&[1, 9, 9, 10])]).unwrap_err();
        assert!(matches!(
            f.violation,
            Violation::Rank {
                expected: 5,
                at_least: false,
                ..
            }
        ));
    }

    #[test]
    fn dense_weights() {
        let dense = node(LayerKind::Dense, &[("units", int(16))], 1)
            .with_weights(weights(&[10, 16], Some(16)));
        assert!(check_weight_consistency(&dense, &shape(&[1, 10])).is_ok());
        let bad = node(LayerKind::Dense, &[("units", int(16))], 1)
            .with_weights(weights(&[8, 16], Some(16)));
        let f = check_weight_consistency(&bad, &shape(&[1, 10])).unwrap_err();
        assert_eq!(f.badness(), -2_000_000_000);
        assert_eq!(
            f.violation,
            Violation::Weights {
                part: WeightPart::Kernel,
                found: Some(vec![8, 16]),
                expected: Some(vec![10, 16])
            }
        );
    }

    #[test]
    fn conv_weights_layout() {
        let conv = node(
            LayerKind::Conv1D,
            &[("filters", int(2)), ("kernel_size", int(2))],
            1,
        )
        .with_weights(weights(&[2, 1, 2], Some(2)));
        assert!(check_weight_consistency(&conv, &shape(&[1, 8, 1])).is_ok());
    }

    #[test]
    fn weight_rank_mismatch_counts_ten() {
        assert_eq!(weight_shape_distance(Some(&[2, 3]), Some(&[2, 3, 4])), 10);
        assert_eq!(weight_shape_distance(Some(&[2]), None), 10);
    }

    #[test]
    fn merge_shapes() {
        let add = node(LayerKind::Add, &[], 2);
        let f =
            check_multi_input_shapes(&add, &[shape(&[1, 2, 2]), shape(&[1, 5, 2])]).unwrap_err();
        assert_eq!(f.badness(), -30_000_000_000_000);
        assert!(check_multi_input_shapes(&add, &[shape(&[1, 5, 2]), shape(&[1, 5, 2])]).is_ok());
        let cat = node(LayerKind::Concatenate, &[("axis", int(1))], 2);
        assert!(check_multi_input_shapes(&cat, &[shape(&[1, 2, 3]), shape(&[1, 4, 3])]).is_ok());
        assert_eq!(
            output_shape(&cat, &[shape(&[1, 2, 3]), shape(&[1, 4, 3])]).dims(),
            &[1, 6, 3]
        );
    }

    #[test]
    fn merge_rank_mismatch_is_dimension_error() {
        let add = node(LayerKind::Add, &[], 2);
        let f = check_layer(&add, &[shape(&[1, 2, 2]), shape(&[1, 4])]).unwrap_err();
        assert_eq!(f.kind, ErrorKind::DimensionError);
        assert!(matches!(
            f.violation,
            Violation::Rank {
                slot: 1,
                expected: 3,
                ..
            }
        ));
    }

    #[test]
    fn stride_dilation_conflict() {
        let c = node(
            LayerKind::Conv1D,
            &[
                ("filters", int(2)),
                ("kernel_size", int(2)),
                ("strides", int(3)),
                ("dilation_rate", int(3)),
            ],
            1,
        );
        let f = check_arg_consistency(&c, &[shape(&[1, 16, 1])]).unwrap_err();
        assert_eq!(f.kind, ErrorKind::ArgumentError);
        assert_eq!(f.badness(), -1_000);
        let c = node(
            LayerKind::Conv1D,
            &[
                ("filters", int(2)),
                ("kernel_size", int(2)),
                ("strides", int(3)),
            ],
            1,
        );
        assert!(check_arg_consistency(&c, &[shape(&[1, 16, 1])]).is_ok());
        let c = node(
            LayerKind::Conv2D,
            &[
                ("filters", int(2)),
                ("kernel_size", int(2)),
                ("strides", ints(&[1, 1])),
                ("dilation_rate", ints(&[2, 2])),
            ],
            1,
        );
        assert!(check_arg_consistency(&c, &[shape(&[1, 8, 8, 1])]).is_ok());
    }

    #[test]
    fn windows() {
        let p = node(LayerKind::MaxPooling2D, &[("pool_size", ints(&[9, 9]))], 1);
        let f = check_window_fits(&p, &shape(&[1, 8, 8, 8])).unwrap_err();
        assert_eq!(
            f.violation,
            Violation::Window {
                label: WindowLabel::PoolSize,
                window: vec![9, 9],
                limit: vec![8, 8]
            }
        );
        assert_eq!(f.distance, 2);
        let c = node(LayerKind::Cropping1D, &[("cropping", ints(&[2, 2]))], 1);
        let f = check_window_fits(&c, &shape(&[1, 4, 4])).unwrap_err();
        assert_eq!(f.distance, 1);
        let c = node(LayerKind::Cropping1D, &[("cropping", ints(&[2, 1]))], 1);
        assert!(check_window_fits(&c, &shape(&[1, 4, 4])).is_ok());
        let p = node(LayerKind::MaxPooling2D, &[("pool_size", ints(&[1, 1]))], 1);
        assert!(check_window_fits(&p, &shape(&[1, 1, 1, 3])).is_ok());
        let same = node(
            LayerKind::MaxPooling2D,
            &[
                ("pool_size", ints(&[9, 9])),
                ("padding", AttrValue::Token("same".into())),
            ],
            1,
        );
        assert!(check_window_fits(&same, &shape(&[1, 8, 8, 8])).is_ok());
    }

    #[test]
    fn conv_output_lengths_agree_for_cascade_example() {
        let c1 = node(
            LayerKind::Conv1D,
            &[
                ("filters", int(2)),
                ("kernel_size", int(2)),
                ("dilation_rate", int(3)),
            ],
            1,
        );
        let c2 = node(
            LayerKind::Conv1D,
            &[
                ("filters", int(2)),
                ("kernel_size", int(2)),
                ("dilation_rate", int(3)),
                ("strides", int(3)),
            ],
            1,
        );
        assert_eq!(output_shape(&c1, &[shape(&[1, 8, 1])]).dims(), &[1, 5, 2]);
        assert_eq!(output_shape(&c2, &[shape(&[1, 16, 1])]).dims(), &[1, 5, 2]);
    }

    #[test]
    fn reshape_product() {
        let r = node(LayerKind::Reshape, &[("target_shape", ints(&[3, 5]))], 1);
        let f = check_arg_consistency(&r, &[shape(&[1, 16])]).unwrap_err();
        assert_eq!(f.distance, 1);
        let r = node(LayerKind::Reshape, &[("target_shape", ints(&[16, 1]))], 1);
        assert_eq!(
            check_layer(&r, &[shape(&[1, 16])]).unwrap().dims(),
            &[1, 16, 1]
        );
    }

    #[test]
    fn axis_resolution() {
        assert_eq!(resolve_axis(-1, 3), Ok(2));
        assert_eq!(resolve_axis(1, 3), Ok(1));
        assert_eq!(resolve_axis(0, 3), Err(1));
        assert_eq!(resolve_axis(-3, 3), Err(1));
        assert_eq!(resolve_axis(5, 3), Err(3));
    }

    #[test]
    fn shape_rules() {
        let up = node(LayerKind::UpSampling2D, &[("size", ints(&[2, 3]))], 1);
        assert_eq!(
            output_shape(&up, &[shape(&[1, 2, 2, 4])]).dims(),
            &[1, 4, 6, 4]
        );
        let zp = node(LayerKind::ZeroPadding1D, &[("padding", ints(&[2, 1]))], 1);
        assert_eq!(output_shape(&zp, &[shape(&[1, 2, 2])]).dims(), &[1, 5, 2]);
        let emb = node(
            LayerKind::Embedding,
            &[("input_dim", int(10)), ("output_dim", int(4))],
            1,
        );
        assert_eq!(output_shape(&emb, &[shape(&[1, 7])]).dims(), &[1, 7, 4]);
        let lstm = node(
            LayerKind::LSTM,
            &[
                ("units", int(5)),
                ("return_sequences", AttrValue::Bool(true)),
            ],
            1,
        );
        assert_eq!(output_shape(&lstm, &[shape(&[1, 7, 3])]).dims(), &[1, 7, 5]);
        let rnn = node(LayerKind::SimpleRNN, &[("units", int(5))], 1);
        assert_eq!(output_shape(&rnn, &[shape(&[1, 7, 3])]).dims(), &[1, 5]);
        let same = node(
            LayerKind::Conv1D,
            &[
                ("filters", int(16)),
                ("kernel_size", int(2)),
                ("padding", AttrValue::Token("same".into())),
            ],
            1,
        );
        assert_eq!(
            output_shape(&same, &[shape(&[1, 16, 1])]).dims(),
            &[1, 16, 16]
        );
    }
}
