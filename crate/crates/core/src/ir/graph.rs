use std::cmp::Reverse;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::node::LayerNode;
use super::shape::TensorShape;
use super::IrError;

/// A model input placeholder. Inputs created by repairs carry a constant fill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInput {
    pub id: String,
    pub shape: TensorShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill: Option<f64>,
}

impl ModelInput {
    pub fn new(id: impl Into<String>, shape: TensorShape) -> Self {
        Self {
            id: id.into(),
            shape,
            fill: None,
        }
    }
}

/// Validated model DAG. Construction checks every structural invariant and
/// caches the deterministic execution order.
#[derive(Debug, Clone)]
pub struct ModelGraph {
    name: String,
    inputs: Vec<ModelInput>,
    nodes: Vec<LayerNode>,
    outputs: Vec<String>,
    order: Vec<usize>,
    position: Vec<usize>,
    index: HashMap<String, usize>,
}

impl PartialEq for ModelGraph {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.inputs == other.inputs
            && self.nodes == other.nodes
            && self.outputs == other.outputs
    }
}

/// Kahn's algorithm; among ready nodes the earliest declared goes first.
/// Returns node indices.
pub fn topo_order(inputs: &[ModelInput], nodes: &[LayerNode]) -> Result<Vec<usize>, IrError> {
    let mut index = HashMap::with_capacity(nodes.len());
    for (i, n) in nodes.iter().enumerate() {
        index.insert(n.id.as_str(), i);
    }
    let input_ids: HashSet<&str> = inputs.iter().map(|i| i.id.as_str()).collect();
    let mut pending = vec![0usize; nodes.len()];
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (i, n) in nodes.iter().enumerate() {
        for src in &n.inputs {
            if let Some(&j) = index.get(src.as_str()) {
                pending[i] += 1;
                consumers[j].push(i);
            } else if !input_ids.contains(src.as_str()) {
                return Err(IrError::UnknownTarget(src.clone()));
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = pending
        .iter()
        .enumerate()
        .filter(|(_, &p)| p == 0)
        .map(|(i, _)| Reverse(i))
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &c in &consumers[i] {
            pending[c] -= 1;
            if pending[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() != nodes.len() {
        let stuck = pending
            .iter()
            .position(|&p| p > 0)
            .map(|i| nodes[i].id.clone())
            .unwrap_or_default();
        return Err(IrError::Cycle(stuck));
    }
    Ok(order)
}

impl ModelGraph {
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<ModelInput>,
        nodes: Vec<LayerNode>,
        outputs: Vec<String>,
    ) -> Result<Self, IrError> {
        if inputs.is_empty() {
            return Err(IrError::NoInputs);
        }
        if outputs.is_empty() {
            return Err(IrError::NoOutputs);
        }
        let mut seen = HashSet::new();
        for id in inputs
            .iter()
            .map(|i| &i.id)
            .chain(nodes.iter().map(|n| &n.id))
        {
            if !seen.insert(id.as_str()) {
                return Err(IrError::DuplicateId(id.clone()));
            }
        }
        for n in &nodes {
            n.validate()?;
        }
        let order = topo_order(&inputs, &nodes)?;
        let index: HashMap<String, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        for out in &outputs {
            if !index.contains_key(out) {
                return Err(IrError::UnknownTarget(out.clone()));
            }
        }
        let mut position = vec![0; nodes.len()];
        for (pos, &i) in order.iter().enumerate() {
            position[i] = pos;
        }
        Ok(Self {
            name: name.into(),
            inputs,
            nodes,
            outputs,
            order,
            position,
            index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs(&self) -> &[ModelInput] {
        &self.inputs
    }

    /// Nodes in declaration order.
    pub fn nodes(&self) -> &[LayerNode] {
        &self.nodes
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&LayerNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn input(&self, id: &str) -> Option<&ModelInput> {
        self.inputs.iter().find(|i| i.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id) || self.input(id).is_some()
    }

    /// Declaration index of a node.
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Node ids in execution order.
    pub fn topo_order(&self) -> Vec<&str> {
        self.order
            .iter()
            .map(|&i| self.nodes[i].id.as_str())
            .collect()
    }

    /// Nodes in execution order.
    pub fn ordered_nodes(&self) -> impl Iterator<Item = &LayerNode> + '_ {
        self.order.iter().map(|&i| &self.nodes[i])
    }

    /// Position of a node in the execution order.
    pub fn location(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| self.position[i])
    }

    /// `(consumer id, input slot)` pairs reading from `id`, in declaration order.
    pub fn consumers(&self, id: &str) -> Vec<(&str, usize)> {
        let mut out = Vec::new();
        for n in &self.nodes {
            for (slot, src) in n.inputs.iter().enumerate() {
                if src == id {
                    out.push((n.id.as_str(), slot));
                }
            }
        }
        out
    }

    /// The given nodes plus everything downstream of them.
    pub fn descendants<'a>(&'a self, roots: impl IntoIterator<Item = &'a str>) -> HashSet<&'a str> {
        let mut seen: HashSet<&str> = HashSet::new();
        let mut stack: Vec<&str> = roots.into_iter().collect();
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            for (c, _) in self.consumers(id) {
                stack.push(c);
            }
        }
        seen
    }

    /// Hash of the structure, ignoring weight values (only weight shapes count).
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for i in &self.inputs {
            i.id.hash(&mut h);
            i.shape.hash(&mut h);
            i.fill.map(f64::to_bits).hash(&mut h);
        }
        self.nodes.len().hash(&mut h);
        for n in &self.nodes {
            n.hash_structure(&mut h);
        }
        self.outputs.hash(&mut h);
        h.finish()
    }

    pub fn into_parts(self) -> (String, Vec<ModelInput>, Vec<LayerNode>, Vec<String>) {
        (self.name, self.inputs, self.nodes, self.outputs)
    }

    /// Shapes of a node's inputs, when all of them are known.
    pub fn input_shapes(
        &self,
        node: &LayerNode,
        known: &HashMap<String, TensorShape>,
    ) -> Option<Vec<TensorShape>> {
        node.inputs
            .iter()
            .map(|src| {
                known
                    .get(src)
                    .cloned()
                    .or_else(|| self.input(src).map(|i| i.shape.clone()))
            })
            .collect()
    }
}
