use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ir::{dims_string, TensorShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorKind {
    DimensionError,
    InputShapeMismatch,
    ArgumentError,
    WeightShapeError,
    WindowOverflow,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 5] = [
        ErrorKind::DimensionError,
        ErrorKind::InputShapeMismatch,
        ErrorKind::ArgumentError,
        ErrorKind::WeightShapeError,
        ErrorKind::WindowOverflow,
    ];

    /// Severity multiplier applied to a violation's distance.
    pub fn severity(self) -> i128 {
        match self {
            ErrorKind::DimensionError => 100_000_000_000_000_000,
            ErrorKind::InputShapeMismatch => 10_000_000_000_000,
            ErrorKind::WeightShapeError => 1_000_000_000,
            ErrorKind::WindowOverflow => 100_000,
            ErrorKind::ArgumentError => 1_000,
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            ErrorKind::DimensionError => "Dimension Error",
            ErrorKind::InputShapeMismatch => "Input Shape Mismatch",
            ErrorKind::ArgumentError => "Argument Error",
            ErrorKind::WeightShapeError => "Weight Shape Error",
            ErrorKind::WindowOverflow => "Window Overflow",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

/// Badness of a violation: `-distance * severity(kind)`.
///
/// # Panics
/// If `distance` is zero; a zero-distance check passes and has no badness.
pub fn compute_badness(kind: ErrorKind, distance: u64) -> i128 {
    assert!(distance > 0, "badness requires a positive distance");
    -(distance as i128) * kind.severity()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowLabel {
    PoolSize,
    KernelSize,
    Cropping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightPart {
    Kernel,
    Bias,
}

/// Observed and expected facts of one precondition violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// Input rank differs from the required one. `slot` is the offending input.
    Rank {
        shape: TensorShape,
        expected: usize,
        at_least: bool,
        slot: usize,
    },
    /// Inputs of a merge layer disagree. `axis` is the concatenation axis.
    Shapes {
        shapes: Vec<TensorShape>,
        axis: Option<usize>,
    },
    /// Kernel or bias shape differs from what the layer computes.
    Weights {
        part: WeightPart,
        found: Option<Vec<usize>>,
        expected: Option<Vec<usize>>,
    },
    /// Window extent per spatial axis versus the largest that fits.
    Window {
        label: WindowLabel,
        window: Vec<usize>,
        limit: Vec<usize>,
    },
    /// Inconsistent arguments; `attrs` lists the attributes involved.
    Argument {
        attrs: Vec<String>,
        observed: String,
        expected: String,
    },
}

/// One precondition violation at one layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: ErrorKind,
    pub layer_id: String,
    /// Position of the failing layer in the execution order.
    pub location: usize,
    pub violation: Violation,
    pub badness: i128,
}

impl Diagnostic {
    pub fn new(
        kind: ErrorKind,
        layer_id: &str,
        location: usize,
        violation: Violation,
        distance: u64,
    ) -> Self {
        Self {
            kind,
            layer_id: layer_id.to_string(),
            location,
            violation,
            badness: compute_badness(kind, distance),
        }
    }

    /// Second line of the rendered message, without the trailing `!!!`.
    pub fn summary(&self) -> String {
        let mut s = format!("{}, ", self.kind.text());
        match &self.violation {
            Violation::Rank {
                shape,
                expected,
                at_least,
                ..
            } => {
                let min = if *at_least { "Min " } else { "" };
                s += &format!("Input Shape {shape}, Expected {min}Dimensions {expected}");
            }
            Violation::Shapes { shapes, axis } => {
                let list: Vec<String> = shapes.iter().map(ToString::to_string).collect();
                s += &format!("Input Shapes {}, ", list.join(" and "));
                match axis {
                    Some(a) => s += &format!("Expected Equal Shapes Except Axis {a}"),
                    None => s += "Expected Equal Shapes",
                }
            }
            Violation::Weights {
                part,
                found,
                expected,
            } => {
                let part = match part {
                    WeightPart::Kernel => "Kernel",
                    WeightPart::Bias => "Bias",
                };
                let show = |d: &Option<Vec<usize>>| match d {
                    Some(d) => dims_string(d),
                    None => "None".to_string(),
                };
                s += &format!("{part} Shape {}, Expected {}", show(found), show(expected));
            }
            Violation::Window {
                label,
                window,
                limit,
            } => match label {
                WindowLabel::PoolSize => {
                    s += &format!(
                        "Pool Size {}, Expected Max {}",
                        dims_string(window),
                        dims_string(limit)
                    )
                }
                WindowLabel::KernelSize => {
                    s += &format!(
                        "Effective Kernel Size {}, Expected Max {}",
                        dims_string(window),
                        dims_string(limit)
                    )
                }
                WindowLabel::Cropping => {
                    s += &format!(
                        "Cropping Total {}, Expected Max {}",
                        dims_string(window),
                        dims_string(limit)
                    )
                }
            },
            Violation::Argument {
                observed, expected, ..
            } => {
                s += &format!("{observed}, Expected {expected}");
            }
        }
        s
    }

    /// Two-line message: badness line, then the abort line.
    pub fn message(&self) -> String {
        format_diagnostic(self)
    }

    pub fn is_progress_from(&self, previous: &Diagnostic) -> bool {
        is_progress(previous, self)
    }
}

/// Renders the two-line diagnostic text.
pub fn format_diagnostic(d: &Diagnostic) -> String {
    format!(
        "Invalid Model, Badness Value: {}\nAborted at {}: {}!!!",
        d.badness,
        d.layer_id,
        d.summary()
    )
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_diagnostic(self))
    }
}

/// Whether a repair step moved from `old` to `new` toward validity: the new
/// violation is strictly less bad, lies deeper in the execution order, or is a
/// different precondition of the same layer (the old one now holds).
pub fn is_progress(old: &Diagnostic, new: &Diagnostic) -> bool {
    new.badness.abs() < old.badness.abs()
        || new.location > old.location
        || (new.location == old.location && new.layer_id == old.layer_id && new.kind != old.kind)
}
