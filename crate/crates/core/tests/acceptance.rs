//! Acceptance suite: runs every criterion and prints one PASS/FAIL line each.
//! Built with `harness = false`, so the lines appear in `cargo test` output.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use modelfix::generator::{generate, Family, GenConfig};
use modelfix::io::RepairReport;
use modelfix::ir::{Edit, LayerKind};
use modelfix::repair::{find_fixes, find_fixes_logged, FixCandidate, RepairConfig};
use modelfix::semantics::{execute_model, infer_shapes, is_progress, ErrorKind, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{
    executable_corpus, fixture, fixture_path, fuzz_config, inverse_cost, oracle,
    shape_value_mismatches, single_bug_config,
};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sound(c: &FixCandidate) -> bool {
    infer_shapes(&c.model).is_ok()
}

fn median(xs: &mut [Duration]) -> Duration {
    xs.sort();
    xs[xs.len() / 2]
}

fn fuzz_repair_rate() -> Verdict {
    let mut times = Vec::new();
    let mut failures = Vec::new();
    let mut layers = 0;
    for seed in 0..200 {
        let g = generate(&fuzz_config(seed)).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(!g.injections.is_empty(), || {
            format!("seed {seed}: no bug injected")
        })?;
        layers += g.base.len();
        let start = Instant::now();
        let result = find_fixes(&RepairConfig::with_seed(seed), &g.model);
        times.push(start.elapsed());
        match result {
            Ok(c) if !c.is_empty() && c.iter().all(sound) => {}
            Ok(_) => failures.push(format!("seed {seed}: unsound or empty result")),
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    let max = *times.iter().max().unwrap();
    let med = median(&mut times);
    ensure(med <= Duration::from_secs(2), || {
        format!("median {med:?} > 2s")
    })?;
    ensure(max <= Duration::from_secs(30), || {
        format!("max {max:?} > 30s")
    })?;
    Ok(format!(
        "200/200 repaired, mean base layers {:.1}, median {med:?}, max {max:?}",
        layers as f64 / 200.0
    ))
}

fn reshape_golden() -> Verdict {
    let model = fixture("flatten_conv");
    for seed in [7, 0, 1, 2, 3] {
        let fixes =
            find_fixes(&RepairConfig::with_seed(seed), &model).map_err(|e| e.to_string())?;
        let top = &fixes[0];
        let ok = match top.edits.as_slice() {
            [Edit::InsertLayer {
                layer,
                before,
                slot: 0,
            }] => {
                layer.kind == LayerKind::Reshape
                    && layer.ints("target_shape") == Some(&[16, 1][..])
                    && model.node(before).map(|n| n.kind) == Some(LayerKind::Conv1D)
            }
            _ => false,
        };
        ensure(ok && top.change_value == 10, || {
            format!(
                "seed {seed}: top fix {:?} (cv {})",
                top.edits.iter().map(Edit::to_string).collect::<Vec<_>>(),
                top.change_value
            )
        })?;
    }
    Ok("top fix is InsertLayer Reshape(16,1) before the Conv1D, change value 10".into())
}

fn per_kind_golden() -> Verdict {
    let cfg = RepairConfig::with_seed(7);
    let fixes = |name: &str| find_fixes(&cfg, &fixture(name)).map_err(|e| format!("{name}: {e}"));

    let rank_fixes = fixes("pool_rank")?;
    ensure(
        rank_fixes.iter().any(|c| {
            c.edits.iter().any(|e| matches!(e, Edit::ReplaceLayer { layer, .. } if layer.kind == LayerKind::MaxPooling2D))
        }),
        || "pool rank: no ReplaceLayer to MaxPooling2D".into(),
    )?;

    let model = fixture("add_branches");
    let merge_fixes = fixes("add_branches")?;
    let smaller = model
        .node("A")
        .unwrap()
        .inputs
        .iter()
        .position(|s| s == "R1")
        .unwrap();
    ensure(
        merge_fixes.iter().any(|c| {
            c.edits.iter().any(|e| {
                matches!(e, Edit::InsertLayer { layer, before, slot }
                    if layer.kind == LayerKind::ZeroPadding1D
                        && layer.ints("padding") == Some(&[2, 1][..])
                        && before == "A" && *slot == smaller)
            })
        }),
        || "merge: no ZeroPadding1D (2,1) on the smaller branch".into(),
    )?;

    let crop = fixes("cropping_overflow")?;
    let top = &crop[0];
    ensure(
        top.change_value == 1
            && matches!(top.edits.as_slice(), [Edit::ArgChange { attr, .. }] if attr == "cropping"),
        || {
            format!(
                "cropping: top fix {:?}",
                top.edits.iter().map(Edit::to_string).collect::<Vec<_>>()
            )
        },
    )?;
    let shapes = infer_shapes(&top.model).map_err(|d| d.to_string())?;
    let surviving = shapes["Cro10000"].dims()[1];
    ensure(surviving >= 1, || "cropping leaves nothing".into())?;

    let pool = fixes("pooling_overflow")?;
    for c in &pool {
        let node = c.model.node("Max10000").ok_or("pooling node missing")?;
        if node.kind == LayerKind::MaxPooling2D {
            let sizes = node.sizes("pool_size");
            ensure(sizes.iter().all(|&s| s <= 8), || {
                format!("pool_size {sizes:?} exceeds 8")
            })?;
        }
    }
    Ok(format!(
        "pool rank {} fixes, merge {} fixes, cropping cv {} (length {surviving}), pooling {} fixes",
        rank_fixes.len(),
        merge_fixes.len(),
        top.change_value,
        pool.len()
    ))
}

fn diagnostic_exact() -> Verdict {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let path = fixture_path("flatten_conv");
    let code = modelfix::cli::run(
        ["modelfix".as_ref(), "check".as_ref(), path.as_os_str()],
        &mut out,
        &mut err,
    );
    let text = String::from_utf8(out).unwrap();
    let expected = "Invalid Model, Badness Value: -100000000000000000\n\
                    Aborted at Con60545: Dimension Error, Input Shape [1,16], Expected Dimensions 3!!!\n";
    ensure(code == 1, || format!("exit code {code}"))?;
    ensure(text == expected, || format!("got {text:?}"))?;
    Ok("check output byte-identical, exit 1".into())
}

fn cascade() -> Verdict {
    let model = fixture("subtract_cascade");
    let (result, log) = find_fixes_logged(&RepairConfig::with_seed(7), &model);
    let fixes = result.map_err(|e| e.to_string())?;
    let cascade = fixes
        .iter()
        .find(|c| {
            let kinds: Vec<(ErrorKind, &str)> = c
                .trace
                .iter()
                .map(|d| (d.kind, d.layer_id.as_str()))
                .collect();
            kinds
                == [
                    (ErrorKind::ArgumentError, "C2"),
                    (ErrorKind::InputShapeMismatch, "S"),
                ]
                && matches!(c.edits.first(), Some(Edit::ArgChange { node, .. }) if node == "C2")
                && matches!(c.edits.last(), Some(Edit::InsertLayer { before, .. }) if before == "S")
        })
        .ok_or("no ArgumentError→InputShapeMismatch fix in the ranked list")?;
    ensure(sound(cascade), || "cascade fix does not pass".into())?;
    let bad: Vec<_> = log
        .steps
        .iter()
        .filter(|s| !is_progress(&s.from, &s.to))
        .collect();
    ensure(bad.is_empty(), || {
        format!("{} recursion steps without progress", bad.len())
    })?;
    Ok(format!(
        "cascade fix ranked #{} (cv {}): {}; {} recursion steps all progress",
        fixes.iter().position(|c| std::ptr::eq(c, cascade)).unwrap() + 1,
        cascade.change_value,
        cascade
            .edits
            .iter()
            .map(Edit::to_string)
            .collect::<Vec<_>>()
            .join(", "),
        log.steps.len()
    ))
}

fn properties() -> Verdict {
    let mut unsound = 0;
    let mut nonmonotone = 0;
    let mut nondeterministic = 0;
    let mut not_idempotent = 0;
    for seed in 0..200 {
        let g = generate(&fuzz_config(seed)).map_err(|e| e.to_string())?;
        let cfg = RepairConfig::with_seed(seed);
        let a = find_fixes(&cfg, &g.model).map_err(|e| format!("seed {seed}: {e}"))?;
        unsound += a.iter().filter(|c| !sound(c)).count();
        nonmonotone += a
            .windows(2)
            .filter(|w| w[0].change_value > w[1].change_value)
            .count();
        let valid = find_fixes(&cfg, &g.base).map_err(|e| format!("seed {seed} base: {e}"))?;
        if !(valid.len() == 1 && valid[0].edits.is_empty() && valid[0].model == g.base) {
            not_idempotent += 1;
        }
        if seed < 50 {
            let b = find_fixes(&cfg, &g.model).map_err(|e| e.to_string())?;
            let diag = infer_shapes(&g.model).err();
            let ra = RepairReport::new(&cfg, &g.model, diag.as_ref(), &a, 0).to_json();
            let rb = RepairReport::new(&cfg, &g.model, diag.as_ref(), &b, 0).to_json();
            if ra != rb {
                nondeterministic += 1;
            }
        }
    }
    ensure(unsound == 0, || format!("{unsound} unsound candidates"))?;
    ensure(nonmonotone == 0, || {
        format!("{nonmonotone} ranking inversions")
    })?;
    ensure(not_idempotent == 0, || {
        format!("{not_idempotent} valid models changed")
    })?;
    ensure(nondeterministic == 0, || {
        format!("{nondeterministic} reports differ between runs")
    })?;

    let mut within = 0;
    let mut failures = Vec::new();
    for seed in 0..500 {
        let g = generate(&single_bug_config(seed)).map_err(|e| e.to_string())?;
        let inj = &g.injections[0];
        let bound = inverse_cost(&inj.edit);
        match find_fixes(&RepairConfig::with_seed(seed), &g.model) {
            Ok(c) if c[0].change_value <= bound => within += 1,
            Ok(c) => failures.push(format!(
                "seed {seed} {}: cv {} > {bound}",
                inj.kind, c[0].change_value
            )),
            Err(e) => failures.push(format!("seed {seed} {}: {e}", inj.kind)),
        }
    }
    for f in &failures {
        eprintln!("  round-trip miss: {f}");
    }
    ensure(within * 100 >= 95 * 500, || {
        format!("round-trip bound held on {within}/500")
    })?;
    Ok(format!(
        "sound, idempotent, monotone, deterministic over 200 models; round-trip bound {within}/500"
    ))
}

fn oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let case = oracle::random_dense_case(&mut rng);
        let x = Tensor::new(case.model.inputs()[0].shape.clone(), case.x.clone()).unwrap();
        let inputs = [("x".to_string(), x)].into_iter().collect();
        let got = execute_model(&case.model, &inputs).map_err(|e| format!("case {i}: {e}"))?;
        let want = oracle::dense(
            &case.dims,
            &case.x,
            &case.kernel,
            &case.bias,
            case.activation,
        );
        let got = got["D"].values();
        ensure(got.len() == want.len(), || {
            format!("case {i}: length {} vs {}", got.len(), want.len())
        })?;
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    let corpus = executable_corpus(500);
    let mismatches: Vec<String> = corpus
        .iter()
        .enumerate()
        .flat_map(|(i, m)| shape_value_mismatches(m, i as u64))
        .collect();
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;
    Ok(format!(
        "Dense max deviation {worst:e} over 1000 cases; 500 models shape/value consistent"
    ))
}

fn scaling() -> Verdict {
    let run = |family: Family, graph_mode: bool, limit: u64| -> Result<Duration, String> {
        let cfg = GenConfig {
            seed: 50,
            layers: (50, 50),
            family,
            graph_mode,
            inject_bugs: (1, 1),
            ..GenConfig::default()
        };
        let g = generate(&cfg).map_err(|e| e.to_string())?;
        ensure(g.base.len() >= 50, || {
            format!("{family}: only {} layers", g.base.len())
        })?;
        let start = Instant::now();
        let fixes = find_fixes(&RepairConfig::with_seed(50), &g.model)
            .map_err(|e| format!("{family}: {e}"))?;
        let t = start.elapsed();
        ensure(fixes.iter().all(sound), || format!("{family}: unsound fix"))?;
        ensure(t <= Duration::from_secs(limit), || {
            format!("{family}: {t:?} > {limit}s")
        })?;
        Ok(t)
    };
    let seq = run(Family::Conv, false, 80)?;
    let graph = run(Family::Mixed, true, 220)?;
    Ok(format!(
        "50-layer sequential conv {seq:?}, 50-layer graph {graph:?}"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("fuzz repair rate", fuzz_repair_rate),
        ("flatten-conv golden repair", reshape_golden),
        ("per-kind golden repairs", per_kind_golden),
        ("diagnostic bit-exactness", diagnostic_exact),
        ("argument/input-shape cascade", cascade),
        ("property suites", properties),
        ("oracle equivalence", oracles),
        ("scaling", scaling),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {} ({name}): PASS [{secs:.1}s] {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL [{secs:.1}s] {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
