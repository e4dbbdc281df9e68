//! Command-line front end. [`run`] takes the argument vector and the two
//! output streams so the binary and the tests drive the same code.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::generator::{generate, Family, GenConfig};
use crate::io::{load_model, render_dot, save_model, write_atomic, IoError, RepairReport};
use crate::ir::ModelGraph;
use crate::repair::{find_fixes, RepairConfig, RepairError};
use crate::semantics::{format_diagnostic, infer_partial, infer_shapes};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NO_FIX: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "modelfix",
    version,
    about = "Check and repair shape errors in neural network models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Model,
    Dot,
    Report,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Infer shapes and report the first violation.
    Check {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Search for minimal fixes and write them ranked by change value.
    Repair {
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Candidate-generation rounds per search step.
        #[arg(long, default_value_t = 20)]
        max_fixes: usize,
        /// Number of ranked fixes to keep.
        #[arg(long, default_value_t = 5)]
        top: usize,
        /// Write one file per fix (and the report) into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "report")]
        emit: Emit,
    },
    /// Generate random models, optionally with injected bugs.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Layer count, `N` or an inclusive range `A..B` (default 3..12).
        #[arg(long, value_parser = parse_range)]
        layers: Option<(usize, usize)>,
        #[arg(long, default_value = "mixed")]
        family: Family,
        /// Allow merge layers and forked branches.
        #[arg(long)]
        graph: bool,
        /// Bugs to inject, `K` or an inclusive range `A..B`.
        #[arg(long, value_parser = parse_range, default_value = "0")]
        inject_bugs: (usize, usize),
        /// Write `gen-<seed>.json` files here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of models, with consecutive seeds starting at `--seed`.
        #[arg(long, default_value_t = 1)]
        count: u64,
    },
    /// Print the model as Graphviz DOT.
    Render {
        model: PathBuf,
        /// Label layers with their inferred output shapes.
        #[arg(long)]
        shapes: bool,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    match s.split_once("..") {
        Some((a, b)) => Ok((num(a)?, num(b)?)),
        None => num(s).map(|n| (n, n)),
    }
}

/// A failure that ends the command with `code` after printing `message`.
struct Failure {
    code: i32,
    message: String,
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure {
            code: EXIT_ERROR,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_ERROR,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_ERROR,
        message: message.into(),
    }
}

/// Runs one command. Data goes to `out`, errors and timing to `err`.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let stream: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(stream, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Check { model, format } => check(&model, format, out),
        Command::Repair {
            model,
            seed,
            max_fixes,
            top,
            out: dir,
            emit,
        } => repair(&model, seed, max_fixes, top, dir.as_deref(), emit, out, err),
        Command::Generate {
            seed,
            layers,
            family,
            graph,
            inject_bugs,
            out: dir,
            count,
        } => {
            let cfg = GenConfig {
                seed,
                layers: layers.unwrap_or(GenConfig::default().layers),
                family,
                graph_mode: graph,
                inject_bugs,
                ..GenConfig::default()
            };
            generate_cmd(cfg, count, dir.as_deref(), out)
        }
        Command::Render { model, shapes } => render(&model, shapes, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn check(path: &Path, format: Format, out: &mut dyn Write) -> Result<i32, Failure> {
    let model = load_model(path)?;
    let result = infer_shapes(&model);
    match format {
        Format::Text => match &result {
            Ok(shapes) => {
                writeln!(out, "Valid Model")?;
                for n in model.ordered_nodes() {
                    writeln!(out, "{}\t{}\t{}", n.id, n.kind, shapes[&n.id])?;
                }
            }
            Err(d) => writeln!(out, "{}", format_diagnostic(d))?,
        },
        Format::Structured => {
            let doc = match &result {
                Ok(shapes) => serde_json::json!({
                    "valid": true,
                    "shapes": shapes.iter().map(|(k, v)| (k.clone(), v.dims().to_vec())).collect::<std::collections::BTreeMap<_, _>>(),
                }),
                Err(d) => serde_json::json!({
                    "valid": false,
                    "text": format_diagnostic(d),
                    "diagnostic": d,
                }),
            };
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&doc).expect("json values serialize")
            )?;
        }
    }
    Ok(if result.is_ok() {
        EXIT_OK
    } else {
        EXIT_INVALID
    })
}

fn dot_with_shapes(model: &ModelGraph) -> String {
    render_dot(model, Some(&infer_partial(model).0))
}

#[allow(clippy::too_many_arguments)]
fn repair(
    path: &Path,
    seed: u64,
    max_fixes: usize,
    top: usize,
    dir: Option<&Path>,
    emit: Emit,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    if max_fixes == 0 || top == 0 {
        return Err(usage("--max-fixes and --top must be at least 1"));
    }
    let model = load_model(path)?;
    let cfg = RepairConfig {
        seed,
        max_fixes,
        top_k: top,
        ..RepairConfig::default()
    };
    let diagnostic = infer_shapes(&model).err();
    let start = Instant::now();
    let fixes = find_fixes(&cfg, &model);
    let elapsed = start.elapsed().as_millis();
    let fixes = match fixes {
        Ok(f) => f,
        Err(e @ (RepairError::NoFix { .. } | RepairError::EmptyFixSet(_))) => {
            if let Some(d) = &diagnostic {
                writeln!(out, "{}", format_diagnostic(d))?;
            }
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_NO_FIX);
        }
    };
    writeln!(err, "repair finished in {elapsed} ms")?;
    let report = RepairReport::new(&cfg, &model, diagnostic.as_ref(), &fixes, elapsed);
    let rendered: Vec<(String, String)> = fixes
        .iter()
        .enumerate()
        .map(|(i, c)| match emit {
            Emit::Dot => (format!("fix-{}.dot", i + 1), dot_with_shapes(&c.model)),
            Emit::Model | Emit::Report => (format!("fix-{}.json", i + 1), save_model(&c.model)),
        })
        .collect();
    match dir {
        Some(dir) => {
            for (name, text) in &rendered {
                write_atomic(dir.join(name), text.as_bytes())?;
            }
            if emit == Emit::Report {
                write_atomic(dir.join("report.json"), report.to_json().as_bytes())?;
            }
            out.write_all(report.to_text().as_bytes())?;
        }
        None => match emit {
            Emit::Report => out.write_all(report.to_json().as_bytes())?,
            Emit::Model | Emit::Dot => out.write_all(rendered[0].1.as_bytes())?,
        },
    }
    Ok(EXIT_OK)
}

fn generate_cmd(
    cfg: GenConfig,
    count: u64,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    if count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    if dir.is_none() && count > 1 {
        return Err(usage("--count above 1 requires --out"));
    }
    for i in 0..count {
        let seed = cfg.seed.wrapping_add(i);
        let g = generate(&GenConfig {
            seed,
            ..cfg.clone()
        })
        .map_err(|e| usage(e.to_string()))?;
        let text = save_model(&g.model);
        match dir {
            Some(dir) => {
                let path = dir.join(format!("gen-{seed}.json"));
                write_atomic(&path, text.as_bytes())?;
                writeln!(out, "{}", path.display())?;
            }
            None => out.write_all(text.as_bytes())?,
        }
    }
    Ok(EXIT_OK)
}

fn render(path: &Path, shapes: bool, out: &mut dyn Write) -> Result<i32, Failure> {
    let model = load_model(path)?;
    let dot = if shapes {
        dot_with_shapes(&model)
    } else {
        render_dot(&model, None)
    };
    out.write_all(dot.as_bytes())?;
    Ok(EXIT_OK)
}
