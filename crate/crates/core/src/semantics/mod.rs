//! Shape-level semantics with per-layer precondition checks, plus value-level
//! execution for an oracle subset of layers.

mod checks;
mod diagnostic;
mod exec;
mod infer;

pub use checks::{
    check_arg_consistency, check_exact_dimensions, check_layer, check_min_dimensions,
    check_multi_input_shapes, check_weight_consistency, check_window_fits, effective_kernel,
    expected_weight_shapes, output_shape, required_rank, resolve_axis, weight_shape_distance,
    CheckFailure, CheckResult,
};
pub use diagnostic::{
    compute_badness, format_diagnostic, is_progress, Diagnostic, ErrorKind, Violation, WeightPart,
    WindowLabel,
};
pub use exec::{execute_model, is_value_executable, ExecError, Tensor};
pub use infer::{all_violations, infer_partial, infer_shapes, ShapeMap};
