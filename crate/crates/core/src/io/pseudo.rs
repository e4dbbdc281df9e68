use crate::ir::{AttrValue, ModelGraph};

fn value(v: &AttrValue) -> String {
    match v {
        AttrValue::Ints(xs) if xs.len() == 1 => format!("({},)", xs[0]),
        AttrValue::Ints(xs) => {
            let parts: Vec<String> = xs.iter().map(i64::to_string).collect();
            format!("({})", parts.join(","))
        }
        AttrValue::Token(t) => format!("'{t}'"),
        AttrValue::Bool(b) => if *b { "True" } else { "False" }.to_string(),
        v => v.to_string(),
    }
}

/// Layer-per-line text in a functional layer-call style. Informational only.
pub fn render_pseudo_code(model: &ModelGraph) -> String {
    let mut lines = Vec::new();
    for i in model.inputs() {
        let dims: Vec<String> = i
            .shape
            .without_batch()
            .iter()
            .map(usize::to_string)
            .collect();
        let shape = if dims.len() == 1 {
            format!("({},)", dims[0])
        } else {
            format!("({})", dims.join(","))
        };
        match i.fill {
            Some(f) => lines.push(format!("{} = Constant({f}, shape={shape})", i.id)),
            None => lines.push(format!("{} = Input(shape={shape})", i.id)),
        }
    }
    for n in model.ordered_nodes() {
        let args: Vec<String> = n
            .attrs
            .iter()
            .map(|(k, v)| format!("{k}={}", value(v)))
            .collect();
        let call = if n.inputs.len() == 1 {
            n.inputs[0].clone()
        } else {
            format!("[{}]", n.inputs.join(", "))
        };
        let weights = if n.weights.is_some() {
            "  # weights attached"
        } else {
            ""
        };
        lines.push(format!(
            "{} = {}({})({call}){weights}",
            n.id,
            n.kind,
            args.join(", ")
        ));
    }
    lines.push(format!(
        "model = Model(inputs=[{}], outputs=[{}])",
        model
            .inputs()
            .iter()
            .filter(|i| i.fill.is_none())
            .map(|i| i.id.as_str())
            .collect::<Vec<_>>()
            .join(", "),
        model.outputs().join(", ")
    ));
    lines.join("\n") + "\n"
}
