use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ir::{
    AttrValue, Attrs, IrError, LayerKind, LayerNode, ModelGraph, ModelInput, TensorShape,
    WeightSpec,
};

use super::IoError;

/// On-disk form of a model. Shapes exclude the batch axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub name: String,
    pub inputs: Vec<InputDoc>,
    pub layers: Vec<LayerDoc>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDoc {
    pub id: String,
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    pub id: String,
    pub kind: String,
    #[serde(default)]
    pub attrs: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Value>,
    pub inputs: Vec<String>,
}

fn schema(path: impl Into<String>, message: impl ToString) -> IoError {
    IoError::Schema {
        path: path.into(),
        message: message.to_string(),
    }
}

impl ModelDoc {
    pub fn from_model(model: &ModelGraph) -> Self {
        Self {
            name: model.name().to_string(),
            inputs: model
                .inputs()
                .iter()
                .map(|i| InputDoc {
                    id: i.id.clone(),
                    shape: i.shape.without_batch().to_vec(),
                    fill: i.fill,
                })
                .collect(),
            layers: model
                .nodes()
                .iter()
                .map(|n| LayerDoc {
                    id: n.id.clone(),
                    kind: n.kind.name().to_string(),
                    attrs: n
                        .attrs
                        .iter()
                        .map(|(k, v)| (k.clone(), Value::from(v.clone())))
                        .collect(),
                    weights: n
                        .weights
                        .as_ref()
                        .map(|w| serde_json::to_value(w.as_ref()).expect("weights serialize")),
                    inputs: n.inputs.clone(),
                })
                .collect(),
            outputs: model.outputs().to_vec(),
        }
    }

    /// Validates the document and builds the graph, prepending the batch axis.
    pub fn to_model(&self) -> Result<ModelGraph, IoError> {
        let mut inputs = Vec::with_capacity(self.inputs.len());
        for (i, doc) in self.inputs.iter().enumerate() {
            let shape = TensorShape::with_batch(&doc.shape)
                .map_err(|e| schema(format!("inputs[{i}].shape"), e))?;
            inputs.push(ModelInput {
                id: doc.id.clone(),
                shape,
                fill: doc.fill,
            });
        }
        let mut nodes = Vec::with_capacity(self.layers.len());
        for (i, doc) in self.layers.iter().enumerate() {
            let at = |field: &str| format!("layers[{i}].{field}");
            let kind: LayerKind = doc.kind.parse().map_err(|e| schema(at("kind"), e))?;
            let mut attrs = Attrs::new();
            for (name, v) in &doc.attrs {
                let value = AttrValue::try_from(v.clone())
                    .map_err(|e| schema(at(&format!("attrs.{name}")), e))?;
                attrs.insert(name.clone(), value);
            }
            let mut node = LayerNode::new(doc.id.clone(), kind, attrs, doc.inputs.clone())
                .map_err(|e| {
                    let field = match &e {
                        IrError::UnknownAttr { attr, .. }
                        | IrError::MissingAttr { attr, .. }
                        | IrError::BadAttr { attr, .. } => format!("attrs.{attr}"),
                        _ => "attrs".to_string(),
                    };
                    schema(at(&field), e)
                })?;
            if let Some(w) = &doc.weights {
                let spec: WeightSpec =
                    serde_json::from_value(w.clone()).map_err(|e| schema(at("weights"), e))?;
                node.weights = Some(Arc::new(spec));
            }
            node.validate()
                .map_err(|e| schema(format!("layers[{i}]"), e))?;
            nodes.push(node);
        }
        ModelGraph::new(self.name.clone(), inputs, nodes, self.outputs.clone())
            .map_err(|e| schema("model", e))
    }
}

/// Parses a model document.
pub fn parse_model(text: &str) -> Result<ModelGraph, IoError> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.to_model()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelGraph, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_model(&text)
}

/// Canonical document text: sorted attribute keys, two-space indentation and
/// a trailing newline.
pub fn save_model(model: &ModelGraph) -> String {
    to_pretty(&ModelDoc::from_model(model))
}

pub(crate) fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<(), IoError> {
    let path = path.as_ref();
    let err = |e: std::io::Error| IoError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(err)?;
    let file_name = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{file_name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(err)?;
    f.write_all(contents).map_err(err)?;
    f.sync_all().map_err(err)?;
    drop(f);
    fs::rename(&tmp, path).map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEQUENTIAL: &str = r#"{
      "name": "seq",
      "inputs": [{"id": "x", "shape": [10]}],
      "layers": [
        {"id": "F", "kind": "Flatten", "inputs": ["x"]},
        {"id": "D", "kind": "Dense", "attrs": {"units": 4, "activation": "relu"}, "inputs": ["F"]}
      ],
      "outputs": ["D"]
    }"#;

    #[test]
    fn load_prepends_batch() {
        let m = parse_model(SEQUENTIAL).unwrap();
        assert_eq!(m.inputs()[0].shape.dims(), &[1, 10]);
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn save_is_canonical_and_round_trips() {
        let m = parse_model(SEQUENTIAL).unwrap();
        let a = save_model(&m);
        let m2 = parse_model(&a).unwrap();
        assert_eq!(m, m2);
        assert_eq!(a, save_model(&m2));
        assert!(a.ends_with("}\n"));
    }

    #[test]
    fn unknown_kind_names_path() {
        let bad = SEQUENTIAL.replace("Flatten", "Flattener");
        match parse_model(&bad) {
            Err(IoError::Schema { path, message }) => {
                assert_eq!(path, "layers[0].kind");
                assert!(message.contains("Flattener"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_is_parse_error() {
        assert!(matches!(
            parse_model("{\"name\": "),
            Err(IoError::Parse { .. })
        ));
    }

    #[test]
    fn ragged_weights_rejected() {
        let bad = SEQUENTIAL.replace(
            r#""inputs": ["F"]"#,
            r#""weights": {"kernel": [[1.0, 2.0], [3.0]]}, "inputs": ["F"]"#,
        );
        match parse_model(&bad) {
            Err(IoError::Schema { path, .. }) => assert_eq!(path, "layers[1].weights"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
