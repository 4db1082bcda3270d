//! Sequence conditioning chain: keyframe extraction, sliding-window
//! redundancy removal, cubic-spline temporal alignment, Z-score
//! normalization with train-only statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::io::NormStats;
use crate::skeleton::{Dataset, MotionSequence, SkeletonFrame, N_CHANNELS, N_JOINTS};
use crate::spline::CubicSpline;

/// Resampling target: a fixed frame count, or the longest training sequence
/// measured after redundancy removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetLength {
    #[default]
    Auto,
    Fixed(usize),
}

impl Serialize for TargetLength {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TargetLength::Auto => s.serialize_str("auto"),
            TargetLength::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for TargetLength {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(TargetLength::Fixed(n as usize)),
            Raw::Word(w) if w == "auto" => Ok(TargetLength::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "target_length must be a frame count or \"auto\", got \"{w}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Mean per-joint displacement (meters) a frame must exceed, relative to
    /// the last retained frame, to count as a keyframe.
    pub keyframe_threshold: f64,
    /// Sliding window extent in frames.
    pub window_size: usize,
    /// Window advance in frames.
    pub window_step: usize,
    /// Frames closer than this (mean per-joint meters) to an earlier kept
    /// frame of the same window are redundant.
    pub similarity_epsilon: f64,
    pub target_length: TargetLength,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            keyframe_threshold: 0.005,
            window_size: 5,
            window_step: 2,
            similarity_epsilon: 0.002,
            target_length: TargetLength::Auto,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.keyframe_threshold.is_nan() || self.keyframe_threshold <= 0.0 {
            return Err(Error::Config(format!(
                "keyframe_threshold must be > 0, got {}",
                self.keyframe_threshold
            )));
        }
        if self.similarity_epsilon.is_nan() || self.similarity_epsilon <= 0.0 {
            return Err(Error::Config(format!(
                "similarity_epsilon must be > 0, got {}",
                self.similarity_epsilon
            )));
        }
        if self.window_step < 1 {
            return Err(Error::Config("window_step must be at least 1".into()));
        }
        if self.window_size < self.window_step {
            return Err(Error::Config(format!(
                "window_size ({}) must be at least window_step ({})",
                self.window_size, self.window_step
            )));
        }
        if let TargetLength::Fixed(n) = self.target_length {
            if n < 2 {
                return Err(Error::Config(format!(
                    "target_length must be at least 2, got {n}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-channel normalization parameters fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    /// Channels with effectively zero variance map to 0 under Z-scoring.
    pub fn is_degenerate(&self, channel: usize) -> bool {
        self.std[channel] < 1e-12
    }

    pub fn to_sidecar(&self, target_length: usize) -> NormStats {
        NormStats {
            mean: self.mean.clone(),
            std: self.std.clone(),
            target_length,
        }
    }

    pub fn from_sidecar(stats: &NormStats) -> ChannelStats {
        ChannelStats {
            mean: stats.mean.clone(),
            std: stats.std.clone(),
        }
    }
}

/// Keep the first frame, then every frame whose mean per-joint Euclidean
/// distance to the last retained frame exceeds `threshold`.
pub fn extract_keyframes(seq: &MotionSequence, threshold: f64) -> Result<MotionSequence> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::Config(format!(
            "keyframe threshold must be > 0, got {threshold}"
        )));
    }
    if seq.frames.is_empty() {
        return Err(Error::Validation(format!(
            "sequence {} has no frames",
            seq.describe()
        )));
    }
    let mut kept = vec![seq.frames[0].clone()];
    for frame in &seq.frames[1..] {
        if frame.mean_joint_distance(kept.last().unwrap()) > threshold {
            kept.push(frame.clone());
        }
    }
    let mut out = seq.clone();
    out.frames = kept;
    Ok(out)
}

/// One sweep of the window rule over `frames`: windows of `size` advancing by
/// `step`; inside a window a frame is dropped when some earlier still-kept
/// frame of the window is within `eps` mean per-joint distance.
fn dedup_pass(frames: &[SkeletonFrame], size: usize, step: usize, eps: f64) -> Vec<bool> {
    let n = frames.len();
    let mut kept = vec![true; n];
    let mut start = 0;
    while start < n {
        let end = (start + size).min(n);
        for i in start + 1..end {
            if !kept[i] {
                continue;
            }
            for j in start..i {
                if kept[j] && frames[i].mean_joint_distance(&frames[j]) < eps {
                    kept[i] = false;
                    break;
                }
            }
        }
        start += step;
    }
    kept
}

/// Windowed redundancy removal, iterated until no window can drop another
/// frame. The fixpoint makes the operation idempotent even though survivors
/// of one sweep can become window neighbours in the next.
pub fn dedup_sliding_window(seq: &MotionSequence, cfg: &PreprocessConfig) -> Result<MotionSequence> {
    cfg.validate()?;
    if seq.frames.is_empty() {
        return Err(Error::Validation(format!(
            "sequence {} has no frames",
            seq.describe()
        )));
    }
    let mut frames = seq.frames.clone();
    loop {
        let kept = dedup_pass(&frames, cfg.window_size, cfg.window_step, cfg.similarity_epsilon);
        if kept.iter().all(|&k| k) {
            break;
        }
        frames = frames
            .into_iter()
            .zip(kept)
            .filter_map(|(f, k)| k.then_some(f))
            .collect();
    }
    let mut out = seq.clone();
    out.frames = frames;
    Ok(out)
}

/// Fit each of the 60 channels with a natural cubic spline over normalized
/// time and sample `target_length` uniform points. Timestamps are re-zeroed
/// and uniform over the original duration.
pub fn resample_cubic_spline(seq: &MotionSequence, target_length: usize) -> Result<MotionSequence> {
    if seq.frames.len() < 2 {
        return Err(Error::Validation(format!(
            "sequence too short to resample: {} has {} frame(s)",
            seq.describe(),
            seq.frames.len()
        )));
    }
    if target_length < 2 {
        return Err(Error::Config(format!(
            "resample target must be at least 2 frames, got {target_length}"
        )));
    }
    let t0 = seq.frames[0].t;
    let t1 = seq.frames.last().unwrap().t;
    let duration = t1 - t0;
    let us: Vec<f64> = seq.frames.iter().map(|f| (f.t - t0) / duration).collect();

    let n_out = target_length;
    let mut out_frames: Vec<SkeletonFrame> = (0..n_out)
        .map(|k| SkeletonFrame {
            t: duration * k as f64 / (n_out - 1) as f64,
            xyz: [[0.0; 3]; N_JOINTS],
        })
        .collect();

    let mut channel = vec![0.0; seq.frames.len()];
    for j in 0..N_JOINTS {
        for axis in 0..3 {
            for (v, f) in channel.iter_mut().zip(seq.frames.iter()) {
                *v = f.xyz[j][axis];
            }
            let spline = CubicSpline::natural(&us, &channel)?;
            for (k, frame) in out_frames.iter_mut().enumerate() {
                let u = k as f64 / (n_out - 1) as f64;
                frame.xyz[j][axis] = spline.eval(u);
            }
        }
    }
    let mut out = seq.clone();
    out.frames = out_frames;
    Ok(out)
}

/// Per-channel mean and population standard deviation over every frame of
/// every training sequence, in a fixed summation order.
pub fn fit_channel_stats(train: &[&MotionSequence]) -> Result<ChannelStats> {
    let total_frames: usize = train.iter().map(|s| s.frames.len()).sum();
    if total_frames == 0 {
        return Err(Error::Validation(
            "cannot fit channel statistics on an empty training set".into(),
        ));
    }
    let n = total_frames as f64;
    let mut mean = vec![0.0; N_CHANNELS];
    for seq in train {
        for frame in &seq.frames {
            for j in 0..N_JOINTS {
                for axis in 0..3 {
                    mean[j * 3 + axis] += frame.xyz[j][axis];
                }
            }
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; N_CHANNELS];
    for seq in train {
        for frame in &seq.frames {
            for j in 0..N_JOINTS {
                for axis in 0..3 {
                    let c = j * 3 + axis;
                    let d = frame.xyz[j][axis] - mean[c];
                    var[c] += d * d;
                }
            }
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
    Ok(ChannelStats { mean, std })
}

/// Z-score every channel; degenerate channels map to 0. Metadata unchanged.
pub fn apply_zscore(seq: &MotionSequence, stats: &ChannelStats) -> MotionSequence {
    let mut out = seq.clone();
    for frame in &mut out.frames {
        for j in 0..N_JOINTS {
            for axis in 0..3 {
                let c = j * 3 + axis;
                frame.xyz[j][axis] = if stats.is_degenerate(c) {
                    0.0
                } else {
                    (frame.xyz[j][axis] - stats.mean[c]) / stats.std[c]
                };
            }
        }
    }
    out
}

fn condense(seq: &MotionSequence, cfg: &PreprocessConfig) -> Result<MotionSequence> {
    let kf = extract_keyframes(seq, cfg.keyframe_threshold)?;
    let dd = dedup_sliding_window(&kf, cfg)?;
    if dd.frames.len() < 2 {
        return Err(Error::Validation(format!(
            "sequence {} collapsed to {} frame(s) after redundancy removal",
            seq.describe(),
            dd.frames.len()
        )));
    }
    Ok(dd)
}

/// Full chain over a split dataset: condense every sequence, resample all of
/// them to the target (auto = longest condensed training sequence), then
/// Z-score with statistics fitted on the training side only.
pub fn preprocess_dataset(ds: &Dataset, cfg: &PreprocessConfig) -> Result<(Dataset, ChannelStats)> {
    cfg.validate()?;
    let split = ds
        .split
        .clone()
        .ok_or_else(|| Error::Validation("preprocessing requires a train/test split".into()))?;
    split.validate(ds.sequences.len())?;

    let condensed: Vec<MotionSequence> = collect_results(exec::map(&ds.sequences, |seq| {
        condense(seq, cfg)
    }))?;

    let target = match cfg.target_length {
        TargetLength::Fixed(n) => n,
        TargetLength::Auto => split
            .train
            .iter()
            .map(|&i| condensed[i].frames.len())
            .max()
            .ok_or_else(|| Error::Validation("training split is empty".into()))?,
    };

    let resampled: Vec<MotionSequence> = collect_results(exec::map(&condensed, |seq| {
        resample_cubic_spline(seq, target)
    }))?;

    let train_refs: Vec<&MotionSequence> = split.train.iter().map(|&i| &resampled[i]).collect();
    let stats = fit_channel_stats(&train_refs)?;

    let mut sequences: Vec<MotionSequence> = exec::map(&resampled, |seq| apply_zscore(seq, &stats));
    for seq in &mut sequences {
        seq.preprocessed = true;
    }
    Ok((
        Dataset {
            sequences,
            split: Some(split),
        },
        stats,
    ))
}

/// Inference-side chain: condense and resample to the stored target, then
/// Z-score with the stored statistics. Sequences already marked preprocessed
/// pass through untouched after a length check.
pub fn preprocess_with_stats(
    sequences: &[MotionSequence],
    cfg: &PreprocessConfig,
    sidecar: &NormStats,
) -> Result<Vec<MotionSequence>> {
    cfg.validate()?;
    sidecar.validate()?;
    let stats = ChannelStats::from_sidecar(sidecar);
    collect_results(exec::map(sequences, |seq| {
        if seq.preprocessed {
            if seq.frames.len() != sidecar.target_length {
                return Err(Error::Validation(format!(
                    "preprocessed sequence {} has length {}, stats expect {}",
                    seq.describe(),
                    seq.frames.len(),
                    sidecar.target_length
                )));
            }
            return Ok(seq.clone());
        }
        let condensed = condense(seq, cfg)?;
        let resampled = resample_cubic_spline(&condensed, sidecar.target_length)?;
        let mut out = apply_zscore(&resampled, &stats);
        out.preprocessed = true;
        Ok(out)
    }))
}

fn collect_results<T>(items: Vec<Result<T>>) -> Result<Vec<T>> {
    items.into_iter().collect()
}
