use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::attr::{normalize_attrs, AttrValue, Attrs};
use super::kind::{AttrType, IntsLen, LayerKind};
use super::IrError;

/// Dense numeric array in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Array {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self, IrError> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(IrError::BadWeights(format!(
                "array shape {shape:?} must be non-empty with positive sizes"
            )));
        }
        let n: usize = shape.iter().product();
        if n != values.len() {
            return Err(IrError::BadWeights(format!(
                "shape {shape:?} holds {n} values but {} were given",
                values.len()
            )));
        }
        Ok(Self { shape, values })
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut() -> f64) -> Result<Self, IrError> {
        let n: usize = shape.iter().product();
        let values = (0..n).map(|_| f()).collect();
        Self::new(shape, values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Nested JSON lists following the shape.
    pub fn to_nested(&self) -> Value {
        fn build(shape: &[usize], values: &[f64]) -> Value {
            if shape.len() == 1 {
                return Value::from(values.to_vec());
            }
            let stride: usize = shape[1..].iter().product();
            Value::Array(
                values
                    .chunks(stride)
                    .map(|chunk| build(&shape[1..], chunk))
                    .collect(),
            )
        }
        build(&self.shape, &self.values)
    }

    /// Parses nested JSON lists, rejecting ragged nesting.
    pub fn from_nested(v: &Value) -> Result<Self, IrError> {
        fn shape_of(v: &Value) -> Result<Vec<usize>, IrError> {
            match v {
                Value::Array(items) => {
                    let first = items
                        .first()
                        .ok_or_else(|| IrError::BadWeights("empty list in weights".into()))?;
                    let mut s = vec![items.len()];
                    if first.is_array() {
                        s.extend(shape_of(first)?);
                    }
                    Ok(s)
                }
                _ => Err(IrError::BadWeights("weights must be nested lists".into())),
            }
        }
        fn collect(v: &Value, shape: &[usize], out: &mut Vec<f64>) -> Result<(), IrError> {
            let items = v
                .as_array()
                .ok_or_else(|| IrError::BadWeights("nesting deeper than declared".into()))?;
            if items.len() != shape[0] {
                return Err(IrError::BadWeights(format!(
                    "ragged weights: expected {} entries, found {}",
                    shape[0],
                    items.len()
                )));
            }
            if shape.len() == 1 {
                for item in items {
                    let x = item.as_f64().ok_or_else(|| {
                        IrError::BadWeights(format!("expected number in weights, found {item}"))
                    })?;
                    out.push(x);
                }
            } else {
                for item in items {
                    collect(item, &shape[1..], out)?;
                }
            }
            Ok(())
        }
        let shape = shape_of(v)?;
        let mut values = Vec::with_capacity(shape.iter().product());
        collect(v, &shape, &mut values)?;
        Self::new(shape, values)
    }
}

/// Kernel and bias of a weighted layer; either part may be absent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightSpec {
    pub kernel: Option<Array>,
    pub bias: Option<Array>,
}

impl WeightSpec {
    pub fn kernel_shape(&self) -> Option<&[usize]> {
        self.kernel.as_ref().map(|a| a.shape())
    }

    pub fn bias_shape(&self) -> Option<&[usize]> {
        self.bias.as_ref().map(|a| a.shape())
    }
}

#[derive(Serialize, Deserialize)]
struct RawWeights {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel_shape: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<Vec<f64>>,
}

impl Serialize for WeightSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawWeights {
            kernel_shape: self.kernel.as_ref().map(|k| k.shape().to_vec()),
            kernel: self.kernel.as_ref().map(Array::to_nested),
            bias: self.bias.as_ref().map(|b| b.values().to_vec()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = RawWeights::deserialize(d)?;
        let kernel = match &raw.kernel {
            Some(v) => {
                let a = Array::from_nested(v).map_err(D::Error::custom)?;
                if let Some(declared) = &raw.kernel_shape {
                    if declared.as_slice() != a.shape() {
                        return Err(D::Error::custom(format!(
                            "kernel nesting {:?} disagrees with declared kernel_shape {declared:?}",
                            a.shape()
                        )));
                    }
                }
                Some(a)
            }
            None if raw.kernel_shape.is_some() => {
                return Err(D::Error::custom("kernel_shape given without kernel"))
            }
            None => None,
        };
        let bias = raw
            .bias
            .map(|b| Array::new(vec![b.len()], b))
            .transpose()
            .map_err(D::Error::custom)?;
        Ok(WeightSpec { kernel, bias })
    }
}

/// One layer of a model graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNode {
    pub id: String,
    pub kind: LayerKind,
    #[serde(default)]
    pub attrs: Attrs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Arc<WeightSpec>>,
    pub inputs: Vec<String>,
}

impl LayerNode {
    /// Builds a node, normalizing `attrs` against the kind's attribute table.
    pub fn new(
        id: impl Into<String>,
        kind: LayerKind,
        attrs: Attrs,
        inputs: Vec<String>,
    ) -> Result<Self, IrError> {
        let attrs = normalize_attrs(kind, &attrs)?;
        Ok(Self {
            id: id.into(),
            kind,
            attrs,
            weights: None,
            inputs,
        })
    }

    pub fn with_weights(mut self, weights: WeightSpec) -> Self {
        self.weights = Some(Arc::new(weights));
        self
    }

    pub fn attr(&self, name: &str) -> Option<&AttrValue> {
        self.attrs.get(name)
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        self.attr(name).and_then(AttrValue::as_int)
    }

    pub fn ints(&self, name: &str) -> Option<&[i64]> {
        self.attr(name).and_then(AttrValue::as_ints)
    }

    /// Tuple attribute as sizes; normalized attributes are never negative.
    pub fn sizes(&self, name: &str) -> Vec<usize> {
        self.ints(name)
            .map(|xs| xs.iter().map(|&x| x.max(0) as usize).collect())
            .unwrap_or_default()
    }

    pub fn token(&self, name: &str) -> Option<&str> {
        self.attr(name).and_then(AttrValue::as_token)
    }

    pub fn float(&self, name: &str) -> Option<f64> {
        self.attr(name).and_then(AttrValue::as_float)
    }

    pub fn flag(&self, name: &str) -> Option<bool> {
        self.attr(name).and_then(AttrValue::as_bool)
    }

    pub fn same_padding(&self) -> bool {
        self.token("padding") == Some("same")
    }

    /// Copy of this node as `kind` (same family, other rank), with per-axis
    /// tuples truncated or extended by neutral entries. When weights are
    /// attached, a conv kernel size consistent with them is preferred.
    pub fn to_variant(&self, kind: LayerKind) -> Option<LayerNode> {
        let n = kind.spatial_rank()?;
        let mut attrs = Attrs::new();
        for spec in kind.attr_specs() {
            let Some(value) = self.attr(spec.name) else {
                continue;
            };
            let value = match (spec.ty, value) {
                (
                    AttrType::Ints {
                        len: IntsLen::Spatial,
                        ..
                    },
                    AttrValue::Ints(xs),
                ) => {
                    let mut v = xs.clone();
                    v.resize(n, 1);
                    AttrValue::Ints(v)
                }
                (
                    AttrType::Ints {
                        len: IntsLen::Pairs,
                        ..
                    },
                    AttrValue::Ints(xs),
                ) => {
                    let mut v = xs.clone();
                    v.resize(2 * n, 0);
                    AttrValue::Ints(v)
                }
                (_, v) => v.clone(),
            };
            attrs.insert(spec.name.to_string(), value);
        }
        if let Some(k) = self.weights.as_ref().and_then(|w| w.kernel_shape()) {
            if kind.is_conv() && k.len() == n + 2 {
                let sizes = k[..n].iter().map(|&x| x as i64).collect();
                attrs.insert("kernel_size".into(), AttrValue::Ints(sizes));
            }
        }
        let mut layer = LayerNode::new(self.id.clone(), kind, attrs, self.inputs.clone()).ok()?;
        layer.weights = self.weights.clone();
        Some(layer)
    }

    /// Checks arity and attribute table conformance.
    pub fn validate(&self) -> Result<(), IrError> {
        let arity_ok = if self.kind.is_merge() {
            self.inputs.len() >= 2
        } else {
            self.inputs.len() == 1
        };
        if !arity_ok {
            return Err(IrError::Arity {
                node: self.id.clone(),
                kind: self.kind,
                found: self.inputs.len(),
            });
        }
        let normalized = normalize_attrs(self.kind, &self.attrs)?;
        if normalized != self.attrs {
            // Only possible when attrs were mutated without normalization.
            return Err(IrError::BadAttr {
                kind: self.kind,
                attr: "*".into(),
                reason: format!("attributes of {} are not in normalized form", self.id),
            });
        }
        if self.weights.is_some() && !self.kind.has_weights() {
            return Err(IrError::BadWeights(format!(
                "{} layers carry no weights ({})",
                self.kind, self.id
            )));
        }
        Ok(())
    }

    /// Hashes everything except weight values; weights contribute only their shapes.
    pub(crate) fn hash_structure<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
        self.kind.hash(state);
        for (k, v) in &self.attrs {
            k.hash(state);
            v.hash(state);
        }
        match &self.weights {
            Some(w) => {
                1u8.hash(state);
                w.kernel_shape().hash(state);
                w.bias_shape().hash(state);
            }
            None => 0u8.hash(state),
        }
        self.inputs.hash(state);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_round_trip() {
        let a = Array::new(vec![2, 1, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let v = a.to_nested();
        assert_eq!(v.to_string(), "[[[1.0,2.0,3.0]],[[4.0,5.0,6.0]]]");
        assert_eq!(Array::from_nested(&v).unwrap(), a);
    }

    #[test]
    fn ragged_rejected() {
        let v: Value = serde_json::from_str("[[1,2],[3]]").unwrap();
        assert!(Array::from_nested(&v).is_err());
        let v: Value = serde_json::from_str("[[1,2],3]").unwrap();
        assert!(Array::from_nested(&v).is_err());
    }

    #[test]
    fn declared_shape_must_match() {
        let ok: Result<WeightSpec, _> =
            serde_json::from_str(r#"{"kernel_shape":[2,1],"kernel":[[1],[2]],"bias":[0]}"#);
        assert!(ok.is_ok());
        let bad: Result<WeightSpec, _> =
            serde_json::from_str(r#"{"kernel_shape":[1,2],"kernel":[[1],[2]]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn arity_checked() {
        let n = LayerNode::new("a", LayerKind::Add, Attrs::new(), vec!["x".into()]).unwrap();
        assert!(matches!(n.validate(), Err(IrError::Arity { .. })));
        let n = LayerNode::new(
            "r",
            LayerKind::ReLU,
            Attrs::new(),
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        assert!(matches!(n.validate(), Err(IrError::Arity { .. })));
    }
}
