//! Model persistence: a JSON manifest describing the tensors, a flat
//! little-endian f64 binary holding their values in declaration order, and
//! the normalization sidecar needed to preprocess inference input.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{load_stats, save_stats, NormStats};
use crate::skeleton::{canonical_upper_limb_graph, Label};

use super::{GcnLstmAttModel, ModelConfig};

const FORMAT_VERSION: u32 = 1;
const MANIFEST_FILE: &str = "model.json";
const WEIGHTS_FILE: &str = "model.bin";
const STATS_FILE: &str = "stats.json";

#[derive(Debug, Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    config: ModelConfig,
    classes: Vec<String>,
    target_length: usize,
    stats_file: String,
    tensors: Vec<TensorMeta>,
}

/// Write `model.json`, `model.bin`, and `stats.json` into `dir`.
pub fn save_model(dir: &Path, model: &GcnLstmAttModel, stats: &NormStats) -> Result<()> {
    stats.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        config: model.config.clone(),
        classes: Label::ALL.iter().map(|l| l.name().to_string()).collect(),
        target_length: stats.target_length,
        stats_file: STATS_FILE.to_string(),
        tensors: model
            .params()
            .iter()
            .map(|p| TensorMeta {
                name: p.name.clone(),
                shape: p.shape.clone(),
            })
            .collect(),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Validation(format!("serialize failure: {e}")))?;
    fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;

    let mut bytes = Vec::new();
    for p in model.params() {
        for v in &p.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let weights_path = dir.join(WEIGHTS_FILE);
    fs::write(&weights_path, bytes).map_err(|e| Error::io(&weights_path, e))?;
    save_stats(&dir.join(STATS_FILE), stats)
}

/// Load a model directory written by [`save_model`]. The adjacency is
/// rebuilt from the canonical skeleton, so only weights are stored.
pub fn load_model(dir: &Path) -> Result<(GcnLstmAttModel, NormStats)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Schema {
        line: e.line(),
        msg: format!("model manifest: {e}"),
    })?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Schema {
            line: 1,
            msg: format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                manifest.format_version
            ),
        });
    }
    manifest.config.validate()?;
    let expected_classes: Vec<String> =
        Label::ALL.iter().map(|l| l.name().to_string()).collect();
    if manifest.classes != expected_classes {
        return Err(Error::Schema {
            line: 1,
            msg: format!(
                "class list {:?} does not match {:?}",
                manifest.classes, expected_classes
            ),
        });
    }

    // shapes come from the config, not the manifest: a tampered manifest
    // cannot smuggle in mismatched tensors
    let graph = canonical_upper_limb_graph();
    let mut model = GcnLstmAttModel::init(&manifest.config, &graph, 0)?;
    if manifest.tensors.len() != model.params().len() {
        return Err(Error::Schema {
            line: 1,
            msg: format!(
                "manifest lists {} tensors, config implies {}",
                manifest.tensors.len(),
                model.params().len()
            ),
        });
    }
    for (meta, param) in manifest.tensors.iter().zip(model.params()) {
        if meta.name != param.name || meta.shape != param.shape {
            return Err(Error::Schema {
                line: 1,
                msg: format!(
                    "tensor {} {:?} does not match expected {} {:?}",
                    meta.name, meta.shape, param.name, param.shape
                ),
            });
        }
    }

    let weights_path = dir.join(WEIGHTS_FILE);
    let bytes = fs::read(&weights_path).map_err(|e| Error::io(&weights_path, e))?;
    let n_values: usize = model.params().iter().map(|p| p.values.len()).sum();
    if bytes.len() != n_values * 8 {
        return Err(Error::Schema {
            line: 1,
            msg: format!(
                "weights file holds {} bytes, expected {}",
                bytes.len(),
                n_values * 8
            ),
        });
    }
    let mut offset = 0;
    for param in model.params_mut() {
        for v in param.values.iter_mut() {
            *v = f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite weight in {}",
                    param.name
                )));
            }
            offset += 8;
        }
    }

    let stats = load_stats(&dir.join(&manifest.stats_file))?;
    if stats.target_length != manifest.target_length {
        return Err(Error::Schema {
            line: 1,
            msg: format!(
                "stats target_length {} disagrees with manifest {}",
                stats.target_length, manifest.target_length
            ),
        });
    }
    Ok((model, stats))
}
