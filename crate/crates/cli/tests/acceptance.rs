//! Release acceptance gate. Nine numbered criteria cover gradient
//! fidelity, closed-form numeric oracles, preprocessing and metrics
//! references, baseline correctness, the two seed-averaged experiment
//! reports, command-level determinism, and generator validity. Each
//! criterion prints exactly one `[criterion N] PASS: ...` line (visible
//! under `--nocapture`); any failure panics carrying the same tag.
//!
//! Criteria 6 and 7 train real models on the full 810-sequence synthetic
//! dataset over three seeds and dominate the runtime (about 12 minutes on
//! one laptop core); everything else finishes in seconds.

use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use compmove_core::autodiff::Tensor;
use compmove_core::baselines::{
    knn_classify, rf_train, svm_train, FeatureVector, RfConfig, SvmConfig,
};
use compmove_core::metrics::{compute_metrics, ConfusionMatrix};
use compmove_core::model::{attention_pool, normalize_adjacency};
use compmove_core::preprocess::{
    dedup_sliding_window, preprocess_dataset, resample_cubic_spline, PreprocessConfig,
    TargetLength,
};
use compmove_core::skeleton::{
    canonical_upper_limb_graph, ActionKind, Label, MotionSequence, SkeletonFrame, SkeletonGraph,
    Split, N_CLASSES, N_JOINTS,
};
use compmove_core::spline::CubicSpline;
use compmove_core::synthgen::{compensation_signature, generate, GenConfig};

fn pass(n: usize, detail: impl Display) {
    println!("[criterion {n}] PASS: {detail}");
}

macro_rules! check {
    ($n:expr, $cond:expr, $($msg:tt)+) => {{
        assert!($cond, "[criterion {}] FAIL: {}", $n, format!($($msg)+));
    }};
}

// ---------------------------------------------------------------- CLI glue

fn compmove(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compmove"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("failed to launch the compmove binary")
}

fn run_ok(n: usize, args: &[&str], cwd: &Path) -> String {
    let out = compmove(args, cwd);
    assert!(
        out.status.success(),
        "[criterion {}] FAIL: `compmove {}` exited with {:?}\nstderr:\n{}",
        n,
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout was not valid UTF-8")
}

/// Parse report.json into (model name, accuracy) rows, insisting that every
/// row carries the four finite metric columns.
fn report_rows(n: usize, path: &Path) -> Vec<(String, f64)> {
    let text = fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("[criterion {n}] FAIL: reading {}: {e}", path.display()));
    let rows: serde_json::Value = serde_json::from_str(&text).unwrap();
    rows.as_array()
        .expect("report.json must hold an array of rows")
        .iter()
        .map(|row| {
            for col in ["accuracy", "precision", "recall", "f1"] {
                let v = row[col].as_f64();
                check!(
                    n,
                    v.is_some_and(f64::is_finite),
                    "column {col} missing or non-finite in {row}"
                );
            }
            (
                row["model"].as_str().unwrap().to_string(),
                row["accuracy"].as_f64().unwrap(),
            )
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

// ------------------------------------------------- 1. gradient fidelity

#[test]
fn criterion_1_gradient_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let stdout = run_ok(1, &["gradient-check", "--seed", "0"], dir.path());
    let elapsed = started.elapsed();
    let err: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("max relative gradient error: "))
        .expect("gradient-check must print its error line")
        .trim()
        .parse()
        .expect("unparseable gradient error value");
    check!(1, err < 1e-4, "max relative error {err:e} is not < 1e-4");
    check!(1, elapsed < Duration::from_secs(60), "took {elapsed:.1?}");
    pass(
        1,
        format!("max relative gradient error {err:.2e} < 1e-4 in {elapsed:.1?}"),
    );
}

// ------------------------------------------------- 2. numeric oracles

#[test]
fn criterion_2_numeric_oracles() {
    // three-node path: hat(A)[0][1] = 1/sqrt((1+1)(1+2)) = 1/sqrt(6)
    let path = SkeletonGraph {
        n_nodes: 3,
        edges: vec![(0, 1), (1, 2)],
        joint_names: vec!["a".into(), "b".into(), "c".into()],
    };
    let a_hat = normalize_adjacency(&path).unwrap();
    let got = a_hat.data()[1];
    let want = 1.0 / 6f64.sqrt();
    check!(2, (got - want).abs() < 1e-12, "A01 was {got}, want {want}");

    // uniform logits make every class equally likely: loss = ln(4)
    let logits = Tensor::constant(&[1, 4], vec![0.37; 4]).unwrap();
    let ce = logits.cross_entropy_mean(&[2]).unwrap().data()[0];
    check!(2, (ce - 4f64.ln()).abs() < 1e-12, "uniform CE was {ce}");

    // attention weights form a probability simplex on random inputs
    fn draw(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect()
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for case in 0..1000 {
        let (t, h, a) = (
            rng.gen_range(1..=10usize),
            rng.gen_range(1..=8usize),
            rng.gen_range(1..=6usize),
        );
        let hid = Tensor::constant(&[t, h], draw(&mut rng, t * h)).unwrap();
        let w = Tensor::constant(&[h, a], draw(&mut rng, h * a)).unwrap();
        let b = Tensor::constant(&[a], draw(&mut rng, a)).unwrap();
        let v = Tensor::constant(&[a, 1], draw(&mut rng, a)).unwrap();
        let (_, alpha) = attention_pool(&hid, &w, &b, &v).unwrap();
        let sum: f64 = alpha.data().iter().sum();
        check!(2, (sum - 1.0).abs() < 1e-12, "case {case}: weights sum {sum}");
    }
    pass(
        2,
        "path adjacency 1/sqrt(6), uniform cross-entropy ln(4), and 1000 attention sums all within 1e-12",
    );
}

// ------------------------------------------------- 3. preprocessing oracles

fn line_frames(coef: &[[(f64, f64); 3]; N_JOINTS], n: usize) -> Vec<SkeletonFrame> {
    (0..n)
        .map(|i| {
            let t = i as f64 / 30.0;
            let mut xyz = [[0.0; 3]; N_JOINTS];
            for (j, row) in xyz.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    let (a, b) = coef[j][c];
                    *v = a * t + b;
                }
            }
            SkeletonFrame { t, xyz }
        })
        .collect()
}

fn plain_sequence(frames: Vec<SkeletonFrame>) -> MotionSequence {
    MotionSequence {
        frames,
        label: Label::NC,
        action: ActionKind::TouchMouth,
        subject_id: "S00".into(),
        view_id: 0,
        repetition: 0,
        fps: 30.0,
        preprocessed: false,
    }
}

#[test]
fn criterion_3_preprocessing_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);

    // a natural spline interpolates its own knots
    for case in 0..50 {
        let n = rng.gen_range(3..=24);
        let mut xs = Vec::with_capacity(n);
        let mut acc = rng.gen_range(-1.0..1.0);
        for _ in 0..n {
            xs.push(acc);
            acc += rng.gen_range(0.05..1.0);
        }
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let sp = CubicSpline::natural(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            let at = sp.eval(*x);
            check!(3, (at - y).abs() < 1e-9, "case {case}: knot ({x}, {y}) gave {at}");
        }
    }

    // linear trajectories pass through resampling unchanged
    let mut coef = [[(0.0f64, 0.0f64); 3]; N_JOINTS];
    for row in coef.iter_mut() {
        for c in row.iter_mut() {
            *c = (rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0));
        }
    }
    let seq = plain_sequence(line_frames(&coef, 23));
    for target in [9usize, 41] {
        let out = resample_cubic_spline(&seq, target).unwrap();
        check!(3, out.frames.len() == target, "resample length {}", out.frames.len());
        for f in &out.frames {
            for (j, row) in coef.iter().enumerate() {
                for (c, &(a, b)) in row.iter().enumerate() {
                    let want = a * f.t + b;
                    let got = f.xyz[j][c];
                    check!(
                        3,
                        (got - want).abs() < 1e-9,
                        "linear channel ({j},{c}) at t={} gave {got}, want {want}",
                        f.t
                    );
                }
            }
        }
    }

    // the fitted pass standardizes exactly the channels it was fitted on
    let (mut ds, _) = generate(&GenConfig {
        n_subjects: 3,
        reps_per_action: 2,
        views: 2,
        seed: 5,
        ..GenConfig::default()
    })
    .unwrap();
    let n = ds.sequences.len();
    ds.split = Some(Split {
        train: (0..n * 4 / 5).collect(),
        test: (n * 4 / 5..n).collect(),
    });
    let cfg = PreprocessConfig {
        target_length: TargetLength::Fixed(30),
        ..PreprocessConfig::default()
    };
    let (out, stats) = preprocess_dataset(&ds, &cfg).unwrap();
    let train_idx = &out.split.as_ref().unwrap().train;
    for ch in 0..N_JOINTS * 3 {
        if stats.is_degenerate(ch) {
            continue;
        }
        let (j, c) = (ch / 3, ch % 3);
        let vals: Vec<f64> = train_idx
            .iter()
            .flat_map(|&i| out.sequences[i].frames.iter().map(move |f| f.xyz[j][c]))
            .collect();
        let m = mean(&vals);
        let sd = (vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
        check!(3, m.abs() < 1e-9, "channel {ch} mean {m}");
        check!(3, (sd - 1.0).abs() < 1e-9, "channel {ch} std {sd}");
    }

    // dedup reaches a fixpoint after one application
    let dd = PreprocessConfig::default();
    for case in 0..100 {
        let n = rng.gen_range(2..=60);
        let mut offset = 0.0;
        let frames: Vec<SkeletonFrame> = (0..n)
            .map(|i| {
                if i > 0 {
                    offset += if rng.gen_bool(0.5) {
                        rng.gen_range(0.0..0.0008)
                    } else {
                        rng.gen_range(0.01..0.05)
                    };
                }
                let mut xyz = [[0.0; 3]; N_JOINTS];
                for (j, row) in xyz.iter_mut().enumerate() {
                    row[0] = offset;
                    row[1] = 1.0 + 0.01 * j as f64;
                    row[2] = 2.0;
                }
                SkeletonFrame {
                    t: i as f64 / 30.0,
                    xyz,
                }
            })
            .collect();
        let seq = plain_sequence(frames);
        let once = dedup_sliding_window(&seq, &dd).unwrap();
        let twice = dedup_sliding_window(&once, &dd).unwrap();
        check!(
            3,
            once.frames == twice.frames,
            "case {case}: second dedup changed {} -> {} frames",
            once.frames.len(),
            twice.frames.len()
        );
    }

    pass(
        3,
        "spline knots and linear resampling within 1e-9, train channels standardized within 1e-9, dedup idempotent on 100 sequences",
    );
}

// ------------------------------------------------- 4. metrics oracle

#[test]
fn criterion_4_metrics_oracle() {
    // TP=3, FP=1, FN=2, TN=4 with class 1 as the positive class
    let cm = ConfusionMatrix::from_counts(vec![vec![4, 1], vec![2, 3]]).unwrap();
    let rep = compute_metrics(&cm).unwrap();
    let pos = &rep.per_class[1];
    check!(4, (pos.precision - 0.75).abs() < 1e-12, "precision {}", pos.precision);
    check!(4, (pos.recall - 0.6).abs() < 1e-12, "recall {}", pos.recall);
    check!(4, (pos.f1 - 2.0 / 3.0).abs() < 1e-12, "F1 {}", pos.f1);
    check!(4, (rep.accuracy - 0.7).abs() < 1e-12, "accuracy {}", rep.accuracy);

    // support-weighted recall collapses to plain accuracy
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for case in 0..1000 {
        let k = rng.gen_range(2..=6);
        let mut counts = vec![vec![0u64; k]; k];
        for row in counts.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(0..15);
            }
        }
        counts[0][0] += 1;
        let rep = compute_metrics(&ConfusionMatrix::from_counts(counts).unwrap()).unwrap();
        check!(
            4,
            (rep.recall - rep.accuracy).abs() < 1e-12,
            "case {case}: recall {} vs accuracy {}",
            rep.recall,
            rep.accuracy
        );
    }
    pass(
        4,
        "binary hand arithmetic (0.75 / 0.6 / 0.666667 / 0.7) and 1000 random weighted-recall identities within 1e-12",
    );
}

// ------------------------------------------------- 5. baseline oracles

/// Full-sort rewrite of k-nearest-neighbors: order by (distance, index),
/// take k, majority vote with lowest class code on ties.
fn knn_oracle(train: &[FeatureVector], query: &[f64], k: usize) -> Label {
    let mut order: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, fv)| {
            let d = fv
                .values
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            (d, i)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut counts = [0usize; N_CLASSES];
    for &(_, i) in &order[..k] {
        counts[train[i].label.code()] += 1;
    }
    let best = (0..N_CLASSES)
        .max_by_key(|&c| (counts[c], N_CLASSES - c))
        .unwrap();
    Label::from_code(best).unwrap()
}

#[test]
fn criterion_5_baseline_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);

    // coarse integer grid so exact distance ties happen often
    let train: Vec<FeatureVector> = (0..40)
        .map(|_| FeatureVector {
            values: (0..3).map(|_| f64::from(rng.gen_range(-3i8..=3))).collect(),
            label: Label::from_code(rng.gen_range(0..N_CLASSES)).unwrap(),
        })
        .collect();
    for case in 0..200 {
        let query: Vec<f64> = (0..3).map(|_| f64::from(rng.gen_range(-3i8..=3))).collect();
        let k = rng.gen_range(1..=8);
        let got = knn_classify(&train, &query, k).unwrap();
        let want = knn_oracle(&train, &query, k);
        check!(5, got == want, "case {case} (k={k}): got {got:?}, reference {want:?}");
    }

    // distinct points make every k=1 self query exact
    let distinct: Vec<FeatureVector> = (0..30)
        .map(|i| FeatureVector {
            values: vec![i as f64, (i * i) as f64 * 0.1, 0.0],
            label: Label::from_code(i % N_CLASSES).unwrap(),
        })
        .collect();
    let hits = distinct
        .iter()
        .filter(|fv| knn_classify(&distinct, &fv.values, 1).unwrap() == fv.label)
        .count();
    check!(5, hits == distinct.len(), "self-query accuracy {hits}/{}", distinct.len());

    // XOR cluster layout defeats any single axis split; forests must solve it
    let mut data = Vec::new();
    for (cx, cy) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
        let label = if cx * cy > 0.0 { Label::NC } else { Label::TLF };
        for _ in 0..75 {
            data.push(FeatureVector {
                values: vec![cx + rng.gen_range(-0.3..0.3), cy + rng.gen_range(-0.3..0.3)],
                label,
            });
        }
    }
    let (test, forest_train): (Vec<_>, Vec<_>) = data
        .iter()
        .enumerate()
        .partition(|(i, _)| i % 3 == 0);
    let forest_train: Vec<FeatureVector> =
        forest_train.into_iter().map(|(_, f)| f.clone()).collect();
    let forest = rf_train(&forest_train, &RfConfig::default()).unwrap();
    let rf_hits = test
        .iter()
        .filter(|(_, fv)| forest.predict(&fv.values).unwrap() == fv.label)
        .count();
    let rf_acc = rf_hits as f64 / test.len() as f64;
    check!(5, rf_acc > 0.95, "random forest XOR accuracy {rf_acc}");

    // four well-separated corner blobs, one per class
    let mut blobs = Vec::new();
    for (code, (cx, cy)) in [(3.0, 3.0), (-3.0, 3.0), (-3.0, -3.0), (3.0, -3.0)]
        .into_iter()
        .enumerate()
    {
        for _ in 0..30 {
            blobs.push(FeatureVector {
                values: vec![cx + rng.gen_range(-0.4..0.4), cy + rng.gen_range(-0.4..0.4)],
                label: Label::from_code(code).unwrap(),
            });
        }
    }
    let svm = svm_train(&blobs, &SvmConfig::default()).unwrap();
    let svm_hits = blobs
        .iter()
        .filter(|fv| svm.predict(&fv.values).unwrap() == fv.label)
        .count();
    check!(5, svm_hits == blobs.len(), "svm train accuracy {svm_hits}/{}", blobs.len());

    pass(
        5,
        format!(
            "knn matched the full-sort reference on 200 queries, k=1 self queries exact, forest XOR accuracy {rf_acc:.3}, svm separated the blobs perfectly"
        ),
    );
}

// ----------------------------------- 6 + 7. seed-averaged experiment reports

/// Experiment configuration for the model-comparison gate. Reduced epochs
/// and the fixed 40-frame resampling keep three full training runs inside
/// the time budget on a single core.
const COMPARE_CONFIG: &str = "\
[preprocess]
target_length = 40

[model]
gcn_channels = [3, 32, 64]
lstm_hidden = 64
attention_dim = 64

[train]
epochs = 60
learning_rate = 0.002
";

/// Ablation gate configuration: smaller widths and a short schedule are
/// enough to rank the three variants while staying fast.
const ABLATE_CONFIG: &str = "\
[preprocess]
target_length = 40

[model]
gcn_channels = [3, 16, 32]
lstm_hidden = 32
attention_dim = 32

[train]
epochs = 20
learning_rate = 0.003
";

const SEEDS: [u64; 3] = [0, 1, 2];

#[test]
fn criterion_6_and_7_experiment_reports() {
    let dir = tempfile::tempdir().unwrap();
    let compare_cfg = dir.path().join("compare.toml");
    fs::write(&compare_cfg, COMPARE_CONFIG).unwrap();

    let started = Instant::now();
    let mut deep = Vec::new();
    let mut knn = Vec::new();
    for seed in SEEDS {
        let out = dir.path().join(format!("compare-{seed}"));
        run_ok(
            6,
            &[
                "compare",
                "--config",
                compare_cfg.to_str().unwrap(),
                "--seed",
                &seed.to_string(),
                "--out",
                out.to_str().unwrap(),
            ],
            dir.path(),
        );
        let rows = report_rows(6, &out.join("report.json"));
        let names: Vec<&str> = rows.iter().map(|(n, _)| n.as_str()).collect();
        check!(
            6,
            names == ["SVM", "KNN", "RF", "GCN-LSTM-ATT"],
            "seed {seed}: rows were {names:?}"
        );
        knn.push(rows[1].1);
        deep.push(rows[3].1);
    }
    let elapsed = started.elapsed();
    let (deep_mean, knn_mean) = (mean(&deep), mean(&knn));
    check!(
        6,
        elapsed < Duration::from_secs(900),
        "three comparison runs took {elapsed:.0?}"
    );
    check!(6, deep_mean >= 0.90, "deep mean accuracy {deep_mean:.4} is below 0.90");
    check!(
        6,
        deep_mean > knn_mean,
        "deep mean {deep_mean:.4} does not beat KNN mean {knn_mean:.4}"
    );
    pass(
        6,
        format!(
            "4-row reports over seeds {SEEDS:?}; deep mean {deep_mean:.4} >= 0.90 and above KNN mean {knn_mean:.4}; finished in {elapsed:.0?}"
        ),
    );

    // ablation ordering over the same seeds
    let ablate_cfg = dir.path().join("ablate.toml");
    fs::write(&ablate_cfg, ABLATE_CONFIG).unwrap();
    let mut acc = [Vec::new(), Vec::new(), Vec::new()];
    for seed in SEEDS {
        let out = dir.path().join(format!("ablate-{seed}"));
        run_ok(
            7,
            &[
                "ablate",
                "--config",
                ablate_cfg.to_str().unwrap(),
                "--seed",
                &seed.to_string(),
                "--out",
                out.to_str().unwrap(),
            ],
            dir.path(),
        );
        let rows = report_rows(7, &out.join("report.json"));
        let names: Vec<&str> = rows.iter().map(|(n, _)| n.as_str()).collect();
        check!(
            7,
            names == ["GCN", "GCN-LSTM", "GCN-LSTM-ATT"],
            "seed {seed}: rows were {names:?}"
        );
        for (bucket, row) in acc.iter_mut().zip(&rows) {
            bucket.push(row.1);
        }
    }
    let (g, l, a) = (mean(&acc[0]), mean(&acc[1]), mean(&acc[2]));
    check!(7, g < l, "GCN mean {g:.4} is not below GCN-LSTM mean {l:.4}");
    check!(
        7,
        l <= a + 0.02,
        "GCN-LSTM mean {l:.4} exceeds GCN-LSTM-ATT mean {a:.4} by more than 0.02"
    );
    pass(
        7,
        format!(
            "3-row reports over seeds {SEEDS:?}; mean accuracies {g:.4} < {l:.4} <= {a:.4} + 0.02"
        ),
    );
}

// ------------------------------------------------- 8. command determinism

/// Small enough to run every subcommand twice in a few seconds, large
/// enough that the split keeps all four classes on both sides.
const TINY_CONFIG: &str = "\
[gen]
n_subjects = 4
reps_per_action = 2
views = 2

[preprocess]
target_length = 12

[model]
gcn_channels = [3, 8]
lstm_hidden = 8
attention_dim = 6

[train]
epochs = 2
batch_size = 8
";

/// Drive every subcommand once under `base`, returning the produced
/// artifact bytes keyed by relative path plus the gradient-check stdout.
fn full_pipeline(base: &Path, cfg: &Path) -> (Vec<(String, Vec<u8>)>, String) {
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let cfg_s = s(cfg);
    let gen = base.join("gen");
    let pre = base.join("pre");
    let tr = base.join("train");
    let ev = base.join("eval");
    let cp = base.join("cmp");
    let ab = base.join("abl");
    run_ok(
        8,
        &["generate-data", "--config", &cfg_s, "--seed", "9", "--out", &s(&gen)],
        base,
    );
    let data = s(&gen.join("dataset.jsonl"));
    run_ok(
        8,
        &["preprocess", "--config", &cfg_s, "--seed", "9", "--out", &s(&pre), "--data", &data],
        base,
    );
    run_ok(
        8,
        &["train", "--config", &cfg_s, "--seed", "9", "--out", &s(&tr), "--data", &data],
        base,
    );
    let model = s(&tr.join("model"));
    run_ok(
        8,
        &[
            "evaluate", "--config", &cfg_s, "--seed", "9", "--out", &s(&ev), "--data", &data,
            "--model", &model,
        ],
        base,
    );
    run_ok(
        8,
        &["compare", "--config", &cfg_s, "--seed", "9", "--out", &s(&cp), "--data", &data],
        base,
    );
    run_ok(
        8,
        &["ablate", "--config", &cfg_s, "--seed", "9", "--out", &s(&ab), "--data", &data],
        base,
    );
    let grad = run_ok(8, &["gradient-check", "--config", &cfg_s, "--seed", "9"], base);

    let files = [
        gen.join("dataset.jsonl"),
        gen.join("provenance.json"),
        pre.join("preprocessed.jsonl"),
        pre.join("norm_stats.json"),
        pre.join("split.json"),
        tr.join("history.csv"),
        tr.join("model/model.json"),
        tr.join("model/model.bin"),
        tr.join("model/stats.json"),
        ev.join("report.csv"),
        ev.join("report.json"),
        cp.join("report.csv"),
        cp.join("report.json"),
        cp.join("history.csv"),
        ab.join("report.csv"),
        ab.join("report.json"),
        ab.join("history-gcn.csv"),
        ab.join("history-gcn-lstm.csv"),
        ab.join("history-gcn-lstm-att.csv"),
    ];
    let artifacts = files
        .iter()
        .map(|p| {
            let rel = p.strip_prefix(base).unwrap().display().to_string();
            let bytes = fs::read(p)
                .unwrap_or_else(|e| panic!("[criterion 8] FAIL: missing artifact {rel}: {e}"));
            (rel, bytes)
        })
        .collect();
    (artifacts, grad)
}

#[test]
fn criterion_8_command_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    fs::write(&cfg, TINY_CONFIG).unwrap();
    let run_a = dir.path().join("a");
    let run_b = dir.path().join("b");
    fs::create_dir_all(&run_a).unwrap();
    fs::create_dir_all(&run_b).unwrap();

    let (arts_a, grad_a) = full_pipeline(&run_a, &cfg);
    let (arts_b, grad_b) = full_pipeline(&run_b, &cfg);

    check!(8, grad_a == grad_b, "gradient-check stdout differed:\n{grad_a}\nvs\n{grad_b}");
    let mut compared = 0;
    for ((rel_a, bytes_a), (rel_b, bytes_b)) in arts_a.iter().zip(&arts_b) {
        assert_eq!(rel_a, rel_b);
        check!(
            8,
            bytes_a == bytes_b,
            "{rel_a} differs between two same-seed runs ({} vs {} bytes)",
            bytes_a.len(),
            bytes_b.len()
        );
        compared += 1;
    }
    pass(
        8,
        format!("{compared} artifacts from all seven subcommands byte-identical across two seed-9 runs"),
    );
}

// ------------------------------------------------- 9. generator validity

fn edge_len(f: &SkeletonFrame, a: usize, b: usize) -> f64 {
    (0..3)
        .map(|c| (f.xyz[a][c] - f.xyz[b][c]).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn criterion_9_generator_validity() {
    let graph = canonical_upper_limb_graph();
    let clean = GenConfig {
        n_subjects: 3,
        reps_per_action: 2,
        views: 2,
        noise_sigma: 0.0,
        compensation_rate: 1.0,
        seed: 11,
        ..GenConfig::default()
    };
    let (ds, prov) = generate(&clean).unwrap();

    // rigid segments: every bone keeps its first-frame length
    let mut max_drift = 0.0f64;
    for seq in &ds.sequences {
        let reference: Vec<f64> = graph
            .edges
            .iter()
            .map(|&(a, b)| edge_len(&seq.frames[0], a, b))
            .collect();
        for f in &seq.frames {
            for (&(a, b), want) in graph.edges.iter().zip(&reference) {
                let drift = (edge_len(f, a, b) - want).abs();
                max_drift = max_drift.max(drift);
                check!(9, drift < 1e-9, "bone ({a},{b}) in {} drifted {drift:e}", seq.subject_id);
            }
        }
    }

    // measured compensation magnitude tracks the injected parameter
    check!(9, ds.sequences.len() == prov.records.len(), "provenance rows mismatch");
    for (seq, rec) in ds.sequences.iter().zip(&prov.records) {
        let sig = compensation_signature(seq).unwrap();
        match rec.label {
            Label::TLF => check!(
                9,
                (sig.trunk_pitch_deg - rec.injected_magnitude).abs() <= 1.0,
                "trunk pitch {:.3} vs injected {:.3}",
                sig.trunk_pitch_deg,
                rec.injected_magnitude
            ),
            Label::TR => check!(
                9,
                (sig.trunk_yaw_deg - rec.injected_magnitude).abs() <= 1.0,
                "trunk yaw {:.3} vs injected {:.3}",
                sig.trunk_yaw_deg,
                rec.injected_magnitude
            ),
            Label::SE => check!(
                9,
                (sig.shoulder_lift_m - rec.injected_magnitude).abs() <= 0.005,
                "shoulder lift {:.4} vs injected {:.4}",
                sig.shoulder_lift_m,
                rec.injected_magnitude
            ),
            Label::NC => panic!("[criterion 9] FAIL: rate 1.0 produced an NC sequence"),
        }
    }

    // a zero compensation rate labels everything NC
    let (all_nc, _) = generate(&GenConfig {
        compensation_rate: 0.0,
        ..clean.clone()
    })
    .unwrap();
    let nc = all_nc.sequences.iter().filter(|s| s.label == Label::NC).count();
    check!(9, nc == all_nc.sequences.len(), "{nc}/{} NC labels", all_nc.sequences.len());

    pass(
        9,
        format!(
            "bone drift max {max_drift:.1e} < 1e-9, signatures tracked injected magnitudes on {} sequences, rate 0 gave {nc}/{nc} NC labels",
            prov.records.len()
        ),
    );
}
