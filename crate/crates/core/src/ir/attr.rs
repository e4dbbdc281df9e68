use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::kind::{AttrDefault, AttrType, IntsLen, LayerKind};
use super::IrError;

/// A layer argument value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub enum AttrValue {
    Int(i64),
    Ints(Vec<i64>),
    Token(String),
    Float(f64),
    Bool(bool),
}

pub type Attrs = BTreeMap<String, AttrValue>;

impl AttrValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            AttrValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_ints(&self) -> Option<&[i64]> {
        match self {
            AttrValue::Ints(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_token(&self) -> Option<&str> {
        match self {
            AttrValue::Token(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            AttrValue::Float(v) => Some(*v),
            AttrValue::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            AttrValue::Bool(v) => Some(*v),
            _ => None,
        }
    }
}

impl Hash for AttrValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            AttrValue::Int(v) => v.hash(state),
            AttrValue::Ints(v) => v.hash(state),
            AttrValue::Token(v) => v.hash(state),
            AttrValue::Float(v) => v.to_bits().hash(state),
            AttrValue::Bool(v) => v.hash(state),
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Int(v) => write!(f, "{v}"),
            AttrValue::Ints(v) => super::shape::write_dims(f, v),
            AttrValue::Token(v) => write!(f, "{v}"),
            AttrValue::Float(v) => write!(f, "{v}"),
            AttrValue::Bool(v) => write!(f, "{v}"),
        }
    }
}

impl TryFrom<Value> for AttrValue {
    type Error = String;

    fn try_from(v: Value) -> Result<Self, Self::Error> {
        match v {
            Value::Bool(b) => Ok(AttrValue::Bool(b)),
            Value::String(s) => Ok(AttrValue::Token(s)),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(AttrValue::Int(i))
                } else {
                    n.as_f64()
                        .map(AttrValue::Float)
                        .ok_or_else(|| format!("unrepresentable number {n}"))
                }
            }
            Value::Array(items) => {
                // Nested tuples such as ((1,1),(2,2)) flatten to [1,1,2,2].
                let mut out = Vec::new();
                flatten_ints(&Value::Array(items), &mut out)?;
                Ok(AttrValue::Ints(out))
            }
            Value::Null | Value::Object(_) => {
                Err("expected a number, string, boolean or array".into())
            }
        }
    }
}

fn flatten_ints(v: &Value, out: &mut Vec<i64>) -> Result<(), String> {
    match v {
        Value::Array(items) => items.iter().try_for_each(|i| flatten_ints(i, out)),
        Value::Number(n) => n
            .as_i64()
            .map(|i| out.push(i))
            .ok_or_else(|| format!("expected integer in tuple, found {n}")),
        other => Err(format!("expected integer in tuple, found {other}")),
    }
}

impl From<AttrValue> for Value {
    fn from(a: AttrValue) -> Self {
        match a {
            AttrValue::Int(v) => Value::from(v),
            AttrValue::Ints(v) => Value::from(v),
            AttrValue::Token(v) => Value::from(v),
            AttrValue::Float(v) => Value::from(v),
            AttrValue::Bool(v) => Value::from(v),
        }
    }
}

/// Checks `raw` against the kind's attribute table, converts scalar shorthands
/// into tuples and fills defaults. The result contains exactly the kind's
/// attribute names.
pub fn normalize_attrs(kind: LayerKind, raw: &Attrs) -> Result<Attrs, IrError> {
    let specs = kind.attr_specs();
    if let Some(unknown) = raw.keys().find(|k| kind.attr_spec(k).is_none()) {
        return Err(IrError::UnknownAttr {
            kind,
            attr: unknown.clone(),
        });
    }
    let spatial = kind.spatial_rank().unwrap_or(1);
    let mut out = Attrs::new();
    for spec in specs {
        let value = match raw.get(spec.name) {
            Some(v) => coerce(kind, spec.name, spec.ty, spatial, v)?,
            None => match spec.default {
                AttrDefault::Required => {
                    return Err(IrError::MissingAttr {
                        kind,
                        attr: spec.name.to_string(),
                    })
                }
                AttrDefault::Int(v) => AttrValue::Int(v),
                AttrDefault::Fill(v) => {
                    let len = match spec.ty {
                        AttrType::Ints {
                            len: IntsLen::Pairs,
                            ..
                        } => 2 * spatial,
                        _ => spatial,
                    };
                    AttrValue::Ints(vec![v; len])
                }
                AttrDefault::Token(t) => AttrValue::Token(t.to_string()),
                AttrDefault::Float(v) => AttrValue::Float(v),
                AttrDefault::Bool(v) => AttrValue::Bool(v),
                AttrDefault::SameAs(other) => out
                    .get(other)
                    .cloned()
                    .expect("SameAs refers to an earlier attribute"),
            },
        };
        out.insert(spec.name.to_string(), value);
    }
    Ok(out)
}

fn coerce(
    kind: LayerKind,
    name: &str,
    ty: AttrType,
    spatial: usize,
    v: &AttrValue,
) -> Result<AttrValue, IrError> {
    let bad = |reason: String| IrError::BadAttr {
        kind,
        attr: name.to_string(),
        reason,
    };
    match ty {
        AttrType::Int { min } => {
            let i = v
                .as_int()
                .ok_or_else(|| bad(format!("expected integer, found {v}")))?;
            if i < min {
                return Err(bad(format!("{i} is below the minimum {min}")));
            }
            Ok(AttrValue::Int(i))
        }
        AttrType::Ints { len, min } => {
            let values: Vec<i64> = match (v, len) {
                (AttrValue::Int(i), IntsLen::Spatial) => vec![*i; spatial],
                (AttrValue::Int(i), IntsLen::Pairs) => vec![*i; 2 * spatial],
                (AttrValue::Int(i), IntsLen::Free) => vec![*i],
                (AttrValue::Ints(xs), IntsLen::Pairs) if xs.len() == spatial && spatial > 1 => {
                    xs.iter().flat_map(|&x| [x, x]).collect()
                }
                (AttrValue::Ints(xs), _) => xs.clone(),
                _ => return Err(bad(format!("expected integer tuple, found {v}"))),
            };
            let expected = match len {
                IntsLen::Spatial => Some(spatial),
                IntsLen::Pairs => Some(2 * spatial),
                IntsLen::Free => None,
            };
            match expected {
                Some(n) if values.len() != n => {
                    return Err(bad(format!("expected {n} entries, found {}", values.len())))
                }
                None if values.is_empty() => return Err(bad("tuple must not be empty".into())),
                _ => {}
            }
            if let Some(x) = values.iter().find(|&&x| x < min) {
                return Err(bad(format!("entry {x} is below the minimum {min}")));
            }
            Ok(AttrValue::Ints(values))
        }
        AttrType::Token(options) => {
            let t = v
                .as_token()
                .ok_or_else(|| bad(format!("expected string, found {v}")))?;
            if !options.contains(&t) {
                return Err(bad(format!("'{t}' is not one of {options:?}")));
            }
            Ok(AttrValue::Token(t.to_string()))
        }
        AttrType::Float => v
            .as_float()
            .map(AttrValue::Float)
            .ok_or_else(|| bad(format!("expected number, found {v}"))),
        AttrType::Bool => v
            .as_bool()
            .map(AttrValue::Bool)
            .ok_or_else(|| bad(format!("expected boolean, found {v}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attrs(pairs: &[(&str, AttrValue)]) -> Attrs {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    #[test]
    fn scalar_kernel_expands_to_tuple() {
        let a = normalize_attrs(
            LayerKind::Conv2D,
            &attrs(&[
                ("filters", AttrValue::Int(4)),
                ("kernel_size", AttrValue::Int(3)),
            ]),
        )
        .unwrap();
        assert_eq!(a["kernel_size"], AttrValue::Ints(vec![3, 3]));
        assert_eq!(a["strides"], AttrValue::Ints(vec![1, 1]));
        assert_eq!(a["padding"], AttrValue::Token("valid".into()));
    }

    #[test]
    fn pool_strides_default_to_pool_size() {
        let a = normalize_attrs(
            LayerKind::MaxPooling2D,
            &attrs(&[("pool_size", AttrValue::Ints(vec![3, 2]))]),
        )
        .unwrap();
        assert_eq!(a["strides"], AttrValue::Ints(vec![3, 2]));
    }

    #[test]
    fn symmetric_pairs_expand() {
        let a = normalize_attrs(
            LayerKind::Cropping2D,
            &attrs(&[("cropping", AttrValue::Ints(vec![1, 2]))]),
        )
        .unwrap();
        assert_eq!(a["cropping"], AttrValue::Ints(vec![1, 1, 2, 2]));
        let a = normalize_attrs(
            LayerKind::Cropping1D,
            &attrs(&[("cropping", AttrValue::Ints(vec![2, 1]))]),
        )
        .unwrap();
        assert_eq!(a["cropping"], AttrValue::Ints(vec![2, 1]));
    }

    #[test]
    fn rejects_unknown_missing_and_out_of_range() {
        assert!(matches!(
            normalize_attrs(
                LayerKind::Dense,
                &attrs(&[("units", AttrValue::Int(2)), ("foo", AttrValue::Int(1))])
            ),
            Err(IrError::UnknownAttr { .. })
        ));
        assert!(matches!(
            normalize_attrs(LayerKind::Dense, &Attrs::new()),
            Err(IrError::MissingAttr { .. })
        ));
        assert!(matches!(
            normalize_attrs(LayerKind::Dense, &attrs(&[("units", AttrValue::Int(0))])),
            Err(IrError::BadAttr { .. })
        ));
        assert!(matches!(
            normalize_attrs(
                LayerKind::ZeroPadding1D,
                &attrs(&[("padding", AttrValue::Ints(vec![-1, 0]))])
            ),
            Err(IrError::BadAttr { .. })
        ));
    }

    #[test]
    fn json_nested_tuples_flatten() {
        let v: AttrValue = serde_json::from_str("[[1,1],[2,3]]").unwrap();
        assert_eq!(v, AttrValue::Ints(vec![1, 1, 2, 3]));
        let v: AttrValue = serde_json::from_str("0.5").unwrap();
        assert_eq!(v, AttrValue::Float(0.5));
        let v: AttrValue = serde_json::from_str("7").unwrap();
        assert_eq!(v, AttrValue::Int(7));
    }
}
