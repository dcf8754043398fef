//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.
//!
//! Criteria 6 to 9 need a fully trained S5 run and are ignored by default.
//! They read `GCR_MAINLINE_DIR` (default `target/gcr-acceptance/s5_seed0`
//! under the workspace root) and train it there when the directory is
//! absent. Run everything with
//! `cargo test --release -p gcr-core --test acceptance -- --include-ignored --nocapture`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use gcr_core::gcr::{gcr_logit_tensor, oracle_stats, GcrSpec};
use gcr_core::group::{make_symmetric, permutation_parity, verify_group_axioms, Group, GroupSpec};
use gcr_core::harness::{run_sweep, SweepSpec, REPORT_FILE, SUMMARY_CSV, SUMMARY_JSON, TRAJECTORY_FILE};
use gcr_core::interp::{
    analyze_params, analyze_trajectory, report_metadata, AnalysisOptions, AnalysisReport, CatalogBases,
    TrajectoryPoint, KEY_THRESHOLD, OFF,
};
use gcr_core::linalg::max_abs_diff;
use gcr_core::nn::{
    all_pairs, checkpoint_epochs, forward, hand_built_gcr, init_params, loss_and_accuracy, loss_and_grad,
    read_metrics_csv, split_dataset, targets, train, MlpParams, TrainConfig, TrainMetrics,
};
use gcr_core::rep::{
    discover_irreps, natural_permutation_matrices, regular_matrices, symmetric_standard_irrep,
    CatalogOptions, DiscoveryOptions, IrrepCatalog,
};

fn verdict(id: &str, pass: bool, detail: impl Display) {
    println!(
        "criterion {id}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

fn catalog(g: &Group) -> IrrepCatalog {
    IrrepCatalog::build(g, &CatalogOptions::default()).unwrap()
}

fn within(elapsed: Duration, minutes: u64) -> bool {
    elapsed <= Duration::from_secs(60 * minutes)
}

/// Fixed points minus one: the character of the standard irrep of S_k and
/// of its restriction to A_k.
fn standard_character(g: &Group) -> Vec<f64> {
    (0..g.order())
        .map(|x| {
            let p = g.permutation(x).unwrap();
            p.iter().enumerate().filter(|&(i, &j)| i == j).count() as f64 - 1.0
        })
        .collect()
}

fn closest_character(cat: &IrrepCatalog, chi: &[f64]) -> f64 {
    cat.irreps()
        .iter()
        .map(|r| {
            r.character()
                .iter()
                .zip(chi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_1_group_and_representation_properties() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for spec in ["C113", "C118", "D59", "D61", "S4", "S5", "A5"] {
        let g = spec.parse::<GroupSpec>().unwrap().build().unwrap();
        let n = g.order();
        let axioms = verify_group_axioms(&g);
        let cat = catalog(&g);
        let checks = cat.check_all(&g);
        let hom = checks.iter().map(|c| c.homomorphism_error).fold(0.0, f64::max);
        let unit = checks.iter().map(|c| c.orthogonality_error).fold(0.0, f64::max);
        let not_one: Vec<&str> = checks
            .iter()
            .filter(|c| (c.character_norm - 1.0).abs() > 1e-8)
            .map(|c| c.name.as_str())
            .collect();
        let sum_d2: usize = cat.dims().iter().map(|d| d * d).sum();
        let bases = cat.rep_bases().unwrap();
        let columns: Vec<_> = bases.iter().flat_map(|b| b.basis().column_iter()).collect();
        let gram_err = if columns.len() == n {
            let all = DMatrix::from_columns(&columns);
            max_abs_diff(&(all.transpose() * &all), &DMatrix::identity(n, n))
        } else {
            f64::INFINITY
        };
        println!(
            "  {spec}: axioms {}, {} irreps, max hom {hom:.1e}, max unitarity {unit:.1e}, \
             <χ,χ> != 1 for {} irreps, Σd² = {sum_d2} (n = {n}), Σ rank = {}, basis Gram error {gram_err:.1e}",
            if axioms.all_pass() { "ok" } else { "FAIL" },
            cat.len(),
            not_one.len(),
            cat.rank_total(),
        );
        if !axioms.all_pass() {
            failures.push(format!("{spec} axioms"));
        }
        if hom > 1e-10 || unit > 1e-10 {
            failures.push(format!("{spec} homomorphism/unitarity"));
        }
        if !not_one.is_empty() {
            failures.push(format!("{spec} <χ,χ> = 1 fails for {} irreps", not_one.len()));
        }
        if sum_d2 != n {
            failures.push(format!("{spec} Σd² = {sum_d2} != {n}"));
        }
        if gram_err > 1e-8 {
            failures.push(format!("{spec} Gram error {gram_err:.1e}"));
        }
    }
    let elapsed = start.elapsed();
    if !within(elapsed, 5) {
        failures.push(format!("runtime {elapsed:?}"));
    }
    let detail = if failures.is_empty() {
        format!("{elapsed:.1?}")
    } else {
        failures.join("; ")
    };
    verdict("1", failures.is_empty(), detail);
}

#[test]
fn criterion_2_irrep_discovery() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (k, alternating, expected) in [
        (5, false, vec![1, 1, 4, 4, 5, 5, 6]),
        (5, true, vec![1, 3, 3, 4, 5]),
    ] {
        let spec = if alternating {
            GroupSpec::Alternating(k)
        } else {
            GroupSpec::Symmetric(k)
        };
        let g = spec.build().unwrap();
        let cat = discover_irreps(&g, &DiscoveryOptions::default()).unwrap();
        let mut dims = cat.dims();
        dims.sort_unstable();
        if dims != expected {
            failures.push(format!("{spec} dims {dims:?}"));
        }
        let mut references = vec![
            ("trivial", vec![1.0; g.order()]),
            ("standard", standard_character(&g)),
        ];
        if !alternating {
            let sign: Vec<f64> = (0..g.order())
                .map(|x| {
                    if permutation_parity(g.permutation(x).unwrap()) == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            let std_sign = references[1].1.iter().zip(&sign).map(|(a, b)| a * b).collect();
            references.push(("sign", sign));
            references.push(("standard_sign", std_sign));
            let closed = symmetric_standard_irrep(&g).unwrap();
            references.push(("closed-form standard", closed.character().to_vec()));
        }
        for (name, chi) in &references {
            let err = closest_character(&cat, chi);
            println!("  {spec} {name}: character error {err:.1e}");
            if err > 1e-8 {
                failures.push(format!("{spec} {name} character error {err:.1e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    if !within(elapsed, 2) {
        failures.push(format!("runtime {elapsed:?}"));
    }
    let detail = if failures.is_empty() {
        format!("S5 {{1,1,4,4,5,5,6}}, A5 {{1,3,3,4,5}}, {elapsed:.1?}")
    } else {
        failures.join("; ")
    };
    verdict("2", failures.is_empty(), detail);
}

fn groups_up_to(order: usize) -> Vec<GroupSpec> {
    let mut specs: Vec<GroupSpec> = (2..=order).map(GroupSpec::Cyclic).collect();
    specs.extend((3..=order / 2).map(GroupSpec::Dihedral));
    specs.extend([3, 4, 5].map(GroupSpec::Symmetric));
    specs.extend([4, 5].map(GroupSpec::Alternating));
    specs
}

#[test]
fn criterion_3_gcr_oracle() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let (mut groups, mut irreps_checked) = (0, 0);
    for spec in groups_up_to(120) {
        let g = spec.build().unwrap();
        let cat = catalog(&g);
        groups += 1;
        for irrep in cat.irreps().iter().filter(|r| r.faithful()) {
            let stats = oracle_stats(&GcrSpec::single(&g, irrep).unwrap(), irrep.name(), true, 0);
            irreps_checked += 1;
            if stats.accuracy != 1.0 || stats.unique_fraction != 1.0 {
                failures.push(format!(
                    "{spec} {}: accuracy {}, unique {}",
                    irrep.name(),
                    stats.accuracy,
                    stats.unique_fraction
                ));
            }
        }
    }

    let n = 113;
    let g = GroupSpec::Cyclic(n).build().unwrap();
    assert!((0..n).all(|a| (0..n).all(|b| g.mul(a, b) == (a + b) % n)));
    let cat = catalog(&g);
    let mut worst: f64 = 0.0;
    for irrep in cat.irreps().iter().filter(|r| r.dim() == 2) {
        let k = ((irrep.character()[1] / 2.0).acos() * n as f64 / (2.0 * PI)).round() as usize;
        let tensor = gcr_logit_tensor(&GcrSpec::single(&g, irrep).unwrap()).unwrap();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let x = (a + b + n - c) % n;
                    let want = 2.0 * (2.0 * PI * ((k * x) % n) as f64 / n as f64).cos();
                    worst = worst.max((tensor.get(a, b, c) - want).abs());
                }
            }
        }
    }
    println!("  C113 cosine tensor max error {worst:.1e}");
    if worst > 1e-12 {
        failures.push(format!("C113 cosine tensor error {worst:.1e}"));
    }
    let elapsed = start.elapsed();
    if !within(elapsed, 10) {
        failures.push(format!("runtime {elapsed:?}"));
    }
    let detail = if failures.is_empty() {
        format!("{groups} groups, {irreps_checked} faithful irreps, {elapsed:.1?}")
    } else {
        failures.join("; ")
    };
    verdict("3", failures.is_empty(), detail);
}

#[test]
fn criterion_4_constructive_expressibility() {
    let start = Instant::now();
    let mut failures = Vec::new();
    type Matrices = fn(&Group) -> Vec<DMatrix<f64>>;
    let cases: [(GroupSpec, Matrices); 2] = [
        (GroupSpec::Cyclic(5), regular_matrices),
        (GroupSpec::Symmetric(3), |g| {
            natural_permutation_matrices(g).unwrap()
        }),
    ];
    for (spec, matrices) in cases {
        let g = spec.build().unwrap();
        let n = g.order();
        let cat = catalog(&g);
        let net = hand_built_gcr(&g, &matrices(&g), 3.0).unwrap();
        let pairs = all_pairs(n);
        let logits = forward(&net.params, &pairs).unwrap().logits;
        let (_, acc) = loss_and_accuracy(&logits, &targets(&g, &pairs)).unwrap();

        let bases = CatalogBases::new(&g, &cat).unwrap();
        let split = split_dataset(&g, 0.4, 0).unwrap();
        let opts = AnalysisOptions::default();
        let meta = report_metadata(&g, &cat, &opts, None, None);
        let report = analyze_params(&g, &net.params, &bases, &split, &opts, meta).unwrap();
        let recovered =
            !report.key_reps.is_empty() && report.key_reps.iter().all(|k| report.rep_recovery[k].recovered);
        println!(
            "  {spec}: accuracy {acc}, key {:?}, logit fve {:.12}, recovery {:?}",
            report.key_reps,
            report.logit_fve,
            report
                .rep_recovery
                .iter()
                .map(|(k, r)| (k.as_str(), r.mse))
                .collect::<Vec<_>>()
        );
        if acc != 1.0 {
            failures.push(format!("{spec} accuracy {acc}"));
        }
        if (report.logit_fve - 1.0).abs() > 1e-9 {
            failures.push(format!("{spec} logit fve {}", report.logit_fve));
        }
        if !recovered {
            failures.push(format!("{spec} irreps not recovered"));
        }
    }
    let elapsed = start.elapsed();
    if !within(elapsed, 1) {
        failures.push(format!("runtime {elapsed:?}"));
    }
    let detail = if failures.is_empty() {
        format!("C5 and S3, {elapsed:.1?}")
    } else {
        failures.join("; ")
    };
    verdict("4", failures.is_empty(), detail);
}

/// Relative error `‖fd − ∇‖ / max(‖fd‖, ‖∇‖)` of the full gradient vector
/// for one random parameter draw. An entrywise ratio is dominated by the
/// finite-difference noise (about 1e-11 at this step) on entries whose
/// gradient is itself below 1e-6.
fn finite_difference_error(g: &Group, seed: u64) -> f64 {
    let cfg = TrainConfig {
        d_embed: 8,
        hidden: 12,
        ..TrainConfig::for_group(g.spec(), seed)
    };
    let p = init_params(g.order(), &cfg);
    let pairs = split_dataset(g, 0.5, seed).unwrap().train;
    let t = targets(g, &pairs);
    let (_, grads) = loss_and_grad(&p, &pairs, &t).unwrap();
    let loss_at = |q: &MlpParams| {
        loss_and_accuracy(&forward(q, &pairs).unwrap().logits, &t)
            .unwrap()
            .0
    };
    let step = 1e-5;
    let (mut diff2, mut fd2, mut an2) = (0.0, 0.0, 0.0);
    for (k, grad) in grads.iter().enumerate() {
        for idx in 0..grad.len() {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.iter_mut().nth(k).unwrap()[idx] += step;
            minus.iter_mut().nth(k).unwrap()[idx] -= step;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * step);
            let an = grad[idx];
            diff2 += (fd - an) * (fd - an);
            fd2 += fd * fd;
            an2 += an * an;
        }
    }
    (diff2 / f64::max(fd2, an2)).sqrt()
}

#[test]
fn criterion_5_gradient_correctness() {
    let start = Instant::now();
    let groups = ["S3", "C5", "D4", "C7", "A4"].map(|s| s.parse::<GroupSpec>().unwrap().build().unwrap());
    let errors: Vec<f64> = (0..10u64)
        .map(|draw| finite_difference_error(&groups[draw as usize % groups.len()], 100 + draw))
        .collect();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    let elapsed = start.elapsed();
    verdict(
        "5",
        worst <= 1e-5 && within(elapsed, 1),
        format!("max relative error {worst:.2e} over 10 draws, {elapsed:.1?}"),
    );
}

struct Mainline {
    metrics: TrainMetrics,
    report: AnalysisReport,
    points: Vec<TrajectoryPoint>,
}

fn mainline_dir() -> PathBuf {
    match std::env::var_os("GCR_MAINLINE_DIR") {
        Some(d) => PathBuf::from(d),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target/gcr-acceptance/s5_seed0"),
    }
}

/// Loads (training first if absent) and analyses the default S5 run once per
/// test process.
fn mainline() -> &'static Mainline {
    static CELL: OnceLock<Mainline> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = mainline_dir();
        let cfg = TrainConfig::for_group(GroupSpec::Symmetric(5), 0);
        let cfg_path = dir.join("config.json");
        if cfg_path.exists() {
            let found = TrainConfig::load(&cfg_path).unwrap();
            assert_eq!(found, cfg, "{} holds a different configuration", dir.display());
        } else {
            println!("  training the S5 mainline into {}", dir.display());
            train(&cfg, Some(&dir)).unwrap();
        }
        let ckpts = checkpoint_epochs(&dir).unwrap();
        assert_eq!(
            ckpts.last().map(|c| c.0),
            Some(cfg.epochs),
            "{} is an incomplete run",
            dir.display()
        );
        let metrics = read_metrics_csv(&dir.join("metrics.csv")).unwrap();
        let g = make_symmetric(5).unwrap();
        let cat = catalog(&g);
        let (report, points) = analyze_trajectory(&ckpts, &g, &cat, &AnalysisOptions::default()).unwrap();
        Mainline {
            metrics,
            report,
            points,
        }
    })
}

fn grokking_detail(metrics: &TrainMetrics) -> (bool, String) {
    let fit = metrics.first_epoch(|r| r.train_acc >= 1.0);
    let generalize = metrics.first_epoch(|r| r.test_acc >= 0.99);
    let last = metrics.last().unwrap().test_acc;
    let pass = match (fit, generalize) {
        (Some(f), Some(t)) => t >= 10 * f.max(1) && last >= 0.99,
        _ => false,
    };
    (
        pass,
        format!("train acc 1.0 at {fit:?}, test acc 0.99 at {generalize:?}, final test acc {last}"),
    )
}

#[test]
#[ignore = "trains the S5 mainline (hours)"]
fn criterion_6_grokking_s5() {
    let (pass, detail) = grokking_detail(&mainline().metrics);
    verdict("6 (S5)", pass, detail);
}

fn reduced_preset() -> TrainConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/train_c113_reduced.json");
    TrainConfig::load(&path).unwrap()
}

#[test]
#[ignore = "trains the C113 reduced preset (about 10 minutes)"]
fn criterion_6_grokking_reduced_preset() {
    let start = Instant::now();
    let outcome = train(&reduced_preset(), None).unwrap();
    let elapsed = start.elapsed();
    let (pass, detail) = grokking_detail(&outcome.metrics);
    verdict(
        "6 (C113 preset)",
        pass && within(elapsed, 60),
        format!("{detail}, {elapsed:.0?}"),
    );
}

#[test]
#[ignore = "needs the trained S5 mainline"]
fn criterion_7_mechanistic_endpoint() {
    let r = &mainline().report;
    let mut failures = Vec::new();
    let strongest = r.logit_similarity.values().copied().fold(0.0, f64::max);
    if r.key_reps.is_empty() || strongest <= KEY_THRESHOLD {
        failures.push(format!("no key irrep (max similarity {strongest:.4})"));
    }
    if r.logit_fve < 0.6 {
        failures.push(format!("logit fve {:.3}", r.logit_fve));
    }
    for (matrix, fve) in &r.embedding_fve {
        let combined = fve.combined(&r.key_reps);
        println!("  {matrix}: key fve {combined:.5}");
        if combined < 0.85 {
            failures.push(format!("{matrix} key fve {combined:.4}"));
        }
    }
    let stray: BTreeMap<&str, usize> = r
        .cluster_sizes
        .iter()
        .filter(|(label, _)| label.as_str() != OFF && !r.key_reps.contains(label))
        .map(|(label, &count)| (label.as_str(), count))
        .collect();
    if !stray.is_empty() {
        failures.push(format!("neurons outside key clusters {stray:?}"));
    }
    match r.mlp_fve.get("standard") {
        Some(f) if f.residual <= 0.25 => {}
        Some(f) => failures.push(format!("standard cluster residual {:.3}", f.residual)),
        None => failures.push("no standard cluster".into()),
    }
    let best_mse = r
        .key_reps
        .iter()
        .filter_map(|k| r.rep_recovery.get(k))
        .map(|s| s.mse)
        .fold(f64::INFINITY, f64::min);
    if best_mse > 1e-6 {
        failures.push(format!("best recovery mse {best_mse:.2e}"));
    }
    println!(
        "  key {:?}, logit fve {:.4}, clusters {:?}, best recovery mse {best_mse:.2e}",
        r.key_reps, r.logit_fve, r.cluster_sizes
    );
    let detail = if failures.is_empty() {
        format!("key {:?}", r.key_reps)
    } else {
        failures.join("; ")
    };
    verdict("7", failures.is_empty(), detail);
}

#[test]
#[ignore = "needs the trained S5 mainline"]
fn criterion_8_ablation_signs() {
    let r = &mainline().report;
    let losses = &r.ablation_losses;
    let base = losses["baseline_test"];
    let ln_n = (r.metadata.order as f64).ln();
    let mut failures = Vec::new();
    let mut strongest: Option<(&str, f64)> = None;
    for k in &r.key_reps {
        let excluded = losses[&format!("exclude_mlp_ab_{k}")];
        println!("  exclude ab of {k}: {excluded:.4e} (baseline {base:.4e})");
        if strongest.is_none_or(|(_, best)| excluded > best) {
            strongest = Some((k, excluded));
        }
    }
    match strongest {
        Some((_, excluded)) if excluded >= 1000.0 * base => {}
        Some((k, excluded)) => failures.push(format!(
            "excluding {k} gives only {excluded:.3e} vs baseline {base:.3e}"
        )),
        None => failures.push("no key irreps".into()),
    }
    let restricted = losses["restrict_logits_key"];
    if restricted > 1.1 * base {
        failures.push(format!(
            "logit restriction {restricted:.3e} vs baseline {base:.3e}"
        ));
    }
    let unembed = losses["exclude_unembed_key"];
    if (unembed - ln_n).abs() > 0.25 * ln_n {
        failures.push(format!("non-key unembed loss {unembed:.3} vs ln n {ln_n:.3}"));
    }
    let detail = if failures.is_empty() {
        format!(
            "baseline {base:.3e}, strongest ab exclusion {:?}, logit restriction {restricted:.3e}, \
             non-key unembed {unembed:.3}",
            strongest.map(|(k, l)| format!("{k} {l:.3e}"))
        )
    } else {
        failures.join("; ")
    };
    verdict("8", failures.is_empty(), detail);
}

#[test]
#[ignore = "needs the trained S5 mainline"]
fn criterion_9_progress_measures() {
    let points = &mainline().points;
    let (first, last) = (&points[0], points.last().unwrap());
    let halved = |f: fn(&TrajectoryPoint) -> f64| {
        let initial = f(first);
        points.iter().find(|p| f(p) < 0.5 * initial).map(|p| p.epoch)
    };
    let restricted_at = halved(|p| p.restricted_loss);
    let test_at = halved(|p| p.test_loss);
    let ordered = matches!((restricted_at, test_at), (Some(r), Some(t)) if r < t);
    let final_ok = last.restricted_loss <= 2.0 * last.test_loss;
    let excluded_ok = last.excluded_loss >= 100.0 * last.train_loss;
    verdict(
        "9",
        ordered && final_ok && excluded_ok,
        format!(
            "restricted halves at {restricted_at:?}, test at {test_at:?}; final restricted {:.3e}, test {:.3e}, \
             excluded {:.3e}, train {:.3e}",
            last.restricted_loss, last.test_loss, last.excluded_loss, last.train_loss
        ),
    )
}

const TINY_SWEEP: &str = r#"{
    "entries": [
        {"group": "S3", "seeds": [0, 1],
         "overrides": {"d_embed": 16, "hidden": 16, "epochs": 300, "eval_every": 50, "checkpoint_every": 100, "lr": 0.01}},
        {"group": "C5", "seeds": [0, 1],
         "overrides": {"d_embed": 16, "hidden": 16, "epochs": 300, "eval_every": 50, "checkpoint_every": 100, "lr": 0.01}}
    ],
    "threads": 2
}"#;

#[test]
fn criterion_10_sweep_determinism_and_resume() {
    let spec = SweepSpec::from_json_str(TINY_SWEEP).unwrap();
    let fresh = tempfile::tempdir().unwrap();
    let resumed = tempfile::tempdir().unwrap();
    let summary = run_sweep(&spec, fresh.path()).unwrap();
    assert!(summary.failures.is_empty(), "{:?}", summary.failures);
    assert_eq!(summary.cells.len(), 4);
    run_sweep(&spec, resumed.path()).unwrap();

    // Simulate an interruption: one cell died mid-training, one never
    // started, and the summary was never written.
    let root = resumed.path();
    let partial = root.join("C5_seed1");
    std::fs::remove_file(partial.join(REPORT_FILE)).unwrap();
    std::fs::remove_file(partial.join(TRAJECTORY_FILE)).unwrap();
    let (_, last_ckpt) = checkpoint_epochs(&partial).unwrap().pop().unwrap();
    std::fs::write(&last_ckpt, b"truncated").unwrap();
    std::fs::remove_dir_all(root.join("S3_seed1")).unwrap();
    std::fs::remove_file(root.join(SUMMARY_CSV)).unwrap();
    std::fs::remove_file(root.join(SUMMARY_JSON)).unwrap();
    let again = run_sweep(&spec, root).unwrap();
    assert!(again.failures.is_empty(), "{:?}", again.failures);

    let a = std::fs::read(fresh.path().join(SUMMARY_CSV)).unwrap();
    let b = std::fs::read(root.join(SUMMARY_CSV)).unwrap();
    verdict(
        "10",
        a == b && !a.is_empty(),
        format!(
            "2 groups x 2 seeds, summary.csv {} bytes, identical: {}",
            a.len(),
            a == b
        ),
    );
}
