//! Subcommand implementations: each one wires library stages together and
//! writes its artifacts under the configured output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use compmove_core::baselines::{flatten, knn_predict, rf_train, svm_train, FeatureVector};
use compmove_core::io::{load_jsonl, save_jsonl};
use compmove_core::metrics::{confusion, compute_metrics, render_report, MetricsReport};
use compmove_core::model::{
    load_model, model_gradient_check, predict_sequences, save_model, train, ModelConfig,
    TrainHistory, Variant,
};
use compmove_core::preprocess::{preprocess_dataset, preprocess_with_stats, TargetLength};
use compmove_core::skeleton::{Dataset, Label, MotionSequence};
use compmove_core::split::{stratified_split, subject_split};
use compmove_core::synthgen::generate;
use compmove_core::{Error, Result};

use crate::config::{RunConfig, SplitBy};

/// Stdout rendering of report tables; the CSV and JSON files are always
/// written regardless.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

/// Max relative gradient error the check must stay under.
pub const GRADIENT_TOLERANCE: f64 = 1e-4;

fn ensure_out_dir(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))
}

fn dataset_path(cfg: &RunConfig, data: &Option<PathBuf>) -> PathBuf {
    data.clone().unwrap_or_else(|| cfg.out.join("dataset.jsonl"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json_pretty<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Validation(format!("serialize failure: {e}")))?;
    write_text(path, &format!("{body}\n"))
}

pub fn cmd_generate_data(cfg: &RunConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let (ds, prov) = generate(&cfg.gen)?;
    let data_path = cfg.out.join("dataset.jsonl");
    save_jsonl(&data_path, &ds.sequences)?;
    write_json_pretty(&cfg.out.join("provenance.json"), &prov)?;
    println!(
        "wrote {} sequences to {} (provenance sidecar alongside)",
        ds.sequences.len(),
        data_path.display()
    );
    Ok(())
}

/// Load the dataset file, or synthesize and persist it first when the
/// command allows on-the-fly generation.
fn load_or_generate(cfg: &RunConfig, data: &Option<PathBuf>, on_the_fly: bool) -> Result<Dataset> {
    let path = dataset_path(cfg, data);
    if !path.exists() && on_the_fly {
        log::info!("{} not found; generating it", path.display());
        cmd_generate_data(cfg)?;
    }
    load_jsonl(&path)
}

fn split_dataset(cfg: &RunConfig, ds: &mut Dataset) -> Result<()> {
    let split = match cfg.split_by {
        SplitBy::Sequence => stratified_split(&ds.sequences, cfg.test_fraction(), cfg.seed)?,
        SplitBy::Subject => subject_split(&ds.sequences, cfg.test_fraction(), cfg.seed)?,
    };
    write_json_pretty(&cfg.out.join("split.json"), &split)?;
    ds.split = Some(split);
    Ok(())
}

pub fn cmd_preprocess(cfg: &RunConfig, data: &Option<PathBuf>) -> Result<()> {
    ensure_out_dir(cfg)?;
    let mut ds = load_or_generate(cfg, data, false)?;
    split_dataset(cfg, &mut ds)?;
    let (out_ds, stats) = preprocess_dataset(&ds, &cfg.preprocess)?;
    let target_length = out_ds.sequences[0].len();
    save_jsonl(&cfg.out.join("preprocessed.jsonl"), &out_ds.sequences)?;
    compmove_core::io::save_stats(
        &cfg.out.join("norm_stats.json"),
        &stats.to_sidecar(target_length),
    )?;
    println!(
        "preprocessed {} sequences to length {target_length}; stats and split written to {}",
        out_ds.sequences.len(),
        cfg.out.display()
    );
    Ok(())
}

fn history_csv(history: &TrainHistory) -> String {
    let mut out = String::from("epoch,train_loss,train_acc,test_acc\n");
    for e in &history.epochs {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.epoch, e.train_loss, e.train_acc, e.test_acc
        );
    }
    out
}

/// Split, preprocess, and hand back the ready-to-train dataset plus the
/// fitted normalization sidecar.
fn prepare(
    cfg: &RunConfig,
    data: &Option<PathBuf>,
    on_the_fly: bool,
) -> Result<(Dataset, compmove_core::io::NormStats)> {
    let mut ds = load_or_generate(cfg, data, on_the_fly)?;
    split_dataset(cfg, &mut ds)?;
    let (pre, stats) = preprocess_dataset(&ds, &cfg.preprocess)?;
    let target_length = pre.sequences[0].len();
    Ok((pre, stats.to_sidecar(target_length)))
}

fn test_sequences(ds: &Dataset) -> (Vec<&MotionSequence>, Vec<Label>) {
    let idx = &ds.split.as_ref().expect("split set by prepare").test;
    let seqs: Vec<&MotionSequence> = idx.iter().map(|&i| &ds.sequences[i]).collect();
    let labels = seqs.iter().map(|s| s.label).collect();
    (seqs, labels)
}

fn train_sequences(ds: &Dataset) -> Vec<&MotionSequence> {
    let idx = &ds.split.as_ref().expect("split set by prepare").train;
    idx.iter().map(|&i| &ds.sequences[i]).collect()
}

pub fn cmd_train(cfg: &RunConfig, data: &Option<PathBuf>) -> Result<()> {
    ensure_out_dir(cfg)?;
    let (pre, stats) = prepare(cfg, data, false)?;
    let (model, history) = train(&pre, &cfg.model, &cfg.train)?;
    let model_dir = cfg.out.join("model");
    save_model(&model_dir, &model, &stats)?;
    write_text(&cfg.out.join("history.csv"), &history_csv(&history))?;
    let last = history.epochs.last().expect("at least one epoch");
    println!(
        "trained {} for {} epochs: train_acc {:.4}, test_acc {:.4}; model saved to {}",
        model.config.variant.display_name(),
        history.epochs.len(),
        last.train_acc,
        last.test_acc,
        model_dir.display()
    );
    Ok(())
}

fn score(y_true: &[Label], y_pred: &[Label]) -> Result<MetricsReport> {
    compute_metrics(&confusion(y_true, y_pred)?)
}

/// Render the rows, write report.csv / report.json, and print the format
/// the caller asked for.
fn emit_report(cfg: &RunConfig, format: Format, rows: &[(String, MetricsReport)]) -> Result<()> {
    let rendered = render_report(rows)?;
    write_text(&cfg.out.join("report.csv"), &rendered.csv)?;
    write_text(&cfg.out.join("report.json"), &rendered.json)?;
    match format {
        Format::Text => print!("{}", rendered.text),
        Format::Csv => print!("{}", rendered.csv),
        Format::Json => print!("{}", rendered.json),
    }
    Ok(())
}

pub fn cmd_evaluate(
    cfg: &RunConfig,
    format: Format,
    data: &Option<PathBuf>,
    model_dir: &Option<PathBuf>,
) -> Result<()> {
    ensure_out_dir(cfg)?;
    let dir = model_dir
        .clone()
        .unwrap_or_else(|| cfg.out.join("model"));
    let (model, stats) = load_model(&dir)?;
    // refuse conflicting resampling instructions before any data work
    if let TargetLength::Fixed(n) = cfg.preprocess.target_length {
        if n != stats.target_length {
            return Err(Error::Config(format!(
                "config target_length {n} conflicts with the stored model stats ({})",
                stats.target_length
            )));
        }
    }
    let mut ds = load_or_generate(cfg, data, false)?;
    split_dataset(cfg, &mut ds)?;
    let (test_refs, y_true) = test_sequences(&ds);
    let owned: Vec<MotionSequence> = test_refs.into_iter().cloned().collect();
    let pre = preprocess_with_stats(&owned, &cfg.preprocess, &stats)?;
    let refs: Vec<&MotionSequence> = pre.iter().collect();
    let y_pred = predict_sequences(&model, &refs)?;
    let report = score(&y_true, &y_pred)?;
    let rows = vec![(model.config.variant.display_name().to_string(), report)];
    emit_report(cfg, format, &rows)
}

/// The comparison table's row order.
const COMPARE_MODELS: [&str; 4] = ["SVM", "KNN", "RF", "GCN-LSTM-ATT"];

fn flatten_all(seqs: &[&MotionSequence]) -> Result<Vec<FeatureVector>> {
    seqs.iter().map(|s| flatten(s)).collect()
}

pub fn cmd_compare(
    cfg: &RunConfig,
    format: Format,
    data: &Option<PathBuf>,
    models: &Option<Vec<String>>,
) -> Result<()> {
    ensure_out_dir(cfg)?;
    let selected: Vec<&str> = match models {
        None => COMPARE_MODELS.to_vec(),
        Some(picked) => {
            let mut keep = Vec::new();
            for name in picked {
                let canon = COMPARE_MODELS
                    .iter()
                    .find(|m| m.eq_ignore_ascii_case(name))
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "unknown model \"{name}\"; choose from {}",
                            COMPARE_MODELS.join(", ")
                        ))
                    })?;
                if !keep.contains(canon) {
                    keep.push(*canon);
                }
            }
            // table order is fixed no matter how the flag lists them
            COMPARE_MODELS
                .iter()
                .copied()
                .filter(|m| keep.contains(m))
                .collect()
        }
    };

    let (pre, _stats) = prepare(cfg, data, true)?;
    let train_refs = train_sequences(&pre);
    let (test_refs, y_true) = test_sequences(&pre);
    let needs_features = selected.iter().any(|&m| m != "GCN-LSTM-ATT");
    let (features, queries_owned) = if needs_features {
        let f = flatten_all(&train_refs)?;
        let q: Vec<FeatureVector> = flatten_all(&test_refs)?;
        (f, q)
    } else {
        (Vec::new(), Vec::new())
    };
    let queries: Vec<&[f64]> = queries_owned.iter().map(|f| f.values.as_slice()).collect();

    let mut rows = Vec::new();
    for name in selected {
        log::info!("evaluating {name}");
        let y_pred = match name {
            "SVM" => svm_train(&features, &cfg.baseline.svm)?.predict_all(&queries)?,
            "KNN" => knn_predict(&features, &queries, cfg.baseline.knn_k)?,
            "RF" => rf_train(&features, &cfg.baseline.rf)?.predict_all(&queries)?,
            "GCN-LSTM-ATT" => {
                let mcfg = ModelConfig {
                    variant: Variant::GcnLstmAtt,
                    ..cfg.model.clone()
                };
                let (model, history) = train(&pre, &mcfg, &cfg.train)?;
                write_text(&cfg.out.join("history.csv"), &history_csv(&history))?;
                predict_sequences(&model, &test_refs)?
            }
            _ => unreachable!("selection is filtered against COMPARE_MODELS"),
        };
        rows.push((name.to_string(), score(&y_true, &y_pred)?));
    }
    emit_report(cfg, format, &rows)
}

/// FNV-1a over every coordinate of every frame: cheap fingerprint proving
/// the ablation variants saw the same tensors.
fn dataset_fingerprint(ds: &Dataset) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for seq in &ds.sequences {
        eat(&(seq.frames.len() as u64).to_le_bytes());
        for frame in &seq.frames {
            for row in &frame.xyz {
                for c in row {
                    eat(&c.to_bits().to_le_bytes());
                }
            }
        }
    }
    h
}

pub fn cmd_ablate(cfg: &RunConfig, format: Format, data: &Option<PathBuf>) -> Result<()> {
    ensure_out_dir(cfg)?;
    let (pre, _stats) = prepare(cfg, data, true)?;
    let fingerprint = dataset_fingerprint(&pre);
    log::info!("preprocessed tensor fingerprint: {fingerprint:016x}");
    let (test_refs, y_true) = test_sequences(&pre);

    let mut rows = Vec::new();
    for variant in Variant::ALL {
        let now = dataset_fingerprint(&pre);
        if now != fingerprint {
            return Err(Error::Validation(format!(
                "preprocessed tensors changed between variants: {fingerprint:016x} then {now:016x}"
            )));
        }
        log::info!(
            "training {} on tensors {now:016x}",
            variant.display_name()
        );
        let mcfg = ModelConfig {
            variant,
            ..cfg.model.clone()
        };
        let (model, history) = train(&pre, &mcfg, &cfg.train)?;
        let file = format!(
            "history-{}.csv",
            variant.display_name().to_ascii_lowercase()
        );
        write_text(&cfg.out.join(file), &history_csv(&history))?;
        let y_pred = predict_sequences(&model, &test_refs)?;
        rows.push((variant.display_name().to_string(), score(&y_true, &y_pred)?));
    }
    log::info!("all variants consumed identical preprocessed tensors ({fingerprint:016x})");
    emit_report(cfg, format, &rows)
}

/// The fixed tiny instance the gradient check runs on.
pub fn gradient_check_config() -> ModelConfig {
    ModelConfig {
        gcn_channels: vec![3, 4],
        lstm_hidden: 6,
        attention_dim: 5,
        n_classes: 4,
        dropout: 0.0,
        variant: Variant::GcnLstmAtt,
    }
}

pub fn cmd_gradient_check(cfg: &RunConfig, corrupt: bool) -> Result<()> {
    let err = model_gradient_check(&gradient_check_config(), 5, cfg.seed, 1e-5, corrupt)?;
    println!("max relative gradient error: {err:e}");
    if err >= GRADIENT_TOLERANCE {
        return Err(Error::Numeric(format!(
            "gradient check failed: {err:e} >= {GRADIENT_TOLERANCE:e}"
        )));
    }
    Ok(())
}
