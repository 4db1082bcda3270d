//! JSONL persistence for motion sequences and the normalization sidecar.
//!
//! One JSON object per line. Numbers round-trip bit-exactly because floats
//! are emitted in shortest-roundtrip form. Parse and schema errors carry the
//! 1-based line number of the offending record.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{ActionKind, Dataset, Label, MotionSequence, SkeletonFrame, N_JOINTS};

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    t: f64,
    xyz: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct SequenceRecord {
    subject_id: String,
    view_id: u8,
    repetition: u32,
    action: ActionKind,
    label: Label,
    fps: f64,
    #[serde(default, skip_serializing_if = "is_false")]
    preprocessed: bool,
    frames: Vec<FrameRecord>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl SequenceRecord {
    fn from_sequence(seq: &MotionSequence) -> Self {
        SequenceRecord {
            subject_id: seq.subject_id.clone(),
            view_id: seq.view_id,
            repetition: seq.repetition,
            action: seq.action,
            label: seq.label,
            fps: seq.fps,
            preprocessed: seq.preprocessed,
            frames: seq
                .frames
                .iter()
                .map(|f| FrameRecord {
                    t: f.t,
                    xyz: f.xyz.to_vec(),
                })
                .collect(),
        }
    }

    fn into_sequence(self, line: usize) -> Result<MotionSequence> {
        let schema = |msg: String| Error::Schema { line, msg };
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(schema(format!("fps must be finite and positive, got {}", self.fps)));
        }
        let mut frames = Vec::with_capacity(self.frames.len());
        for (i, f) in self.frames.into_iter().enumerate() {
            if f.xyz.len() != N_JOINTS {
                return Err(schema(format!(
                    "frame {i} has {} joints, expected {N_JOINTS}",
                    f.xyz.len()
                )));
            }
            let mut xyz = [[0.0f64; 3]; N_JOINTS];
            for (row, src) in xyz.iter_mut().zip(f.xyz.iter()) {
                *row = *src;
            }
            frames.push(SkeletonFrame { t: f.t, xyz });
        }
        let seq = MotionSequence {
            frames,
            label: self.label,
            action: self.action,
            subject_id: self.subject_id,
            view_id: self.view_id,
            repetition: self.repetition,
            fps: self.fps,
            preprocessed: self.preprocessed,
        };
        seq.validate().map_err(|e| schema(e.to_string()))?;
        Ok(seq)
    }
}

/// Load a JSONL dataset. Blank lines are skipped; every other line must be a
/// complete sequence record.
pub fn load_jsonl(path: &Path) -> Result<Dataset> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut sequences = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SequenceRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        sequences.push(record.into_sequence(line_no)?);
    }
    if sequences.is_empty() {
        return Err(Error::Validation(format!(
            "{}: no sequences found",
            path.display()
        )));
    }
    Ok(Dataset::new(sequences))
}

/// Write a dataset as JSONL, one sequence per line, in order.
pub fn save_jsonl(path: &Path, sequences: &[MotionSequence]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for seq in sequences {
        let record = SequenceRecord::from_sequence(seq);
        let line = serde_json::to_string(&record)
            .map_err(|e| Error::Validation(format!("serialize failure: {e}")))?;
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Per-channel normalization statistics plus the resampling target, stored
/// beside preprocessed data so evaluation can reuse train-time parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    /// Per-channel mean, length 60 (20 joints x 3 axes).
    pub mean: Vec<f64>,
    /// Per-channel population standard deviation, length 60.
    pub std: Vec<f64>,
    /// Frame count every sequence was resampled to.
    pub target_length: usize,
}

impl NormStats {
    pub fn validate(&self) -> Result<()> {
        let want = crate::skeleton::N_CHANNELS;
        if self.mean.len() != want || self.std.len() != want {
            return Err(Error::Validation(format!(
                "stats must have {want} channels, got mean {} / std {}",
                self.mean.len(),
                self.std.len()
            )));
        }
        if self.target_length < 2 {
            return Err(Error::Validation(format!(
                "target_length must be at least 2, got {}",
                self.target_length
            )));
        }
        Ok(())
    }
}

pub fn load_stats(path: &Path) -> Result<NormStats> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stats: NormStats = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    stats.validate()?;
    Ok(stats)
}

pub fn save_stats(path: &Path, stats: &NormStats) -> Result<()> {
    let text = serde_json::to_string_pretty(stats)
        .map_err(|e| Error::Validation(format!("serialize failure: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
