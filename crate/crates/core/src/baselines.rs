//! Classical comparison classifiers over flattened preprocessed sequences:
//! k-nearest-neighbors, one-vs-rest linear SVM trained by stochastic
//! subgradient descent, and a random forest.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::skeleton::{Label, MotionSequence, N_CLASSES, N_JOINTS};

/// One flattened sequence: frame-major joint coordinates, length T x 60.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            epochs: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Candidate features per split: "sqrt" or "all".
    pub features_per_split: String,
    pub seed: u64,
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 2,
            features_per_split: "sqrt".to_string(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub knn_k: usize,
    pub svm: SvmConfig,
    pub rf: RfConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            knn_k: 5,
            svm: SvmConfig::default(),
            rf: RfConfig::default(),
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.knn_k < 1 {
            return Err(Error::Config("knn_k must be at least 1".into()));
        }
        if self.svm.c.is_nan() || self.svm.c <= 0.0 || !self.svm.c.is_finite() {
            return Err(Error::Config(format!(
                "svm.c must be finite and > 0, got {}",
                self.svm.c
            )));
        }
        if self.svm.epochs < 1 {
            return Err(Error::Config("svm.epochs must be at least 1".into()));
        }
        if self.rf.n_trees < 1 {
            return Err(Error::Config("rf.n_trees must be at least 1".into()));
        }
        if self.rf.max_depth < 1 || self.rf.min_leaf < 1 {
            return Err(Error::Config(
                "rf.max_depth and rf.min_leaf must be at least 1".into(),
            ));
        }
        if !matches!(self.rf.features_per_split.as_str(), "sqrt" | "all") {
            return Err(Error::Config(format!(
                "rf.features_per_split must be \"sqrt\" or \"all\", got {:?}",
                self.rf.features_per_split
            )));
        }
        Ok(())
    }
}

/// Frame-major concatenation of all joint coordinates.
pub fn flatten(seq: &MotionSequence) -> Result<FeatureVector> {
    if !seq.preprocessed {
        return Err(Error::Validation(format!(
            "sequence {} has not been preprocessed",
            seq.describe()
        )));
    }
    let mut values = Vec::with_capacity(seq.frames.len() * N_JOINTS * 3);
    for f in &seq.frames {
        for joint in &f.xyz {
            values.extend_from_slice(joint);
        }
    }
    Ok(FeatureVector {
        values,
        label: seq.label,
    })
}

/// Inverse of [`flatten`]: per-frame joint coordinate arrays.
pub fn unflatten(values: &[f64]) -> Result<Vec<[[f64; 3]; N_JOINTS]>> {
    let frame_len = N_JOINTS * 3;
    if values.is_empty() || !values.len().is_multiple_of(frame_len) {
        return Err(Error::Shape(format!(
            "feature length {} is not a nonzero multiple of {frame_len}",
            values.len()
        )));
    }
    Ok(values
        .chunks(frame_len)
        .map(|chunk| {
            let mut xyz = [[0.0; 3]; N_JOINTS];
            for (j, row) in xyz.iter_mut().enumerate() {
                row.copy_from_slice(&chunk[j * 3..j * 3 + 3]);
            }
            xyz
        })
        .collect())
}

fn check_dims(train: &[FeatureVector]) -> Result<usize> {
    let first = train
        .first()
        .ok_or_else(|| Error::Validation("empty training set".into()))?;
    let dim = first.values.len();
    if dim == 0 {
        return Err(Error::Shape("zero-length feature vectors".into()));
    }
    for (i, fv) in train.iter().enumerate() {
        if fv.values.len() != dim {
            return Err(Error::Shape(format!(
                "feature vector {i} has length {}, expected {dim}",
                fv.values.len()
            )));
        }
    }
    Ok(dim)
}

fn majority_lowest(counts: &[usize; N_CLASSES]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate().skip(1) {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Majority vote among the `k` nearest training vectors by Euclidean
/// distance. Distance ties keep the earlier training index; vote ties
/// resolve to the lowest class code.
pub fn knn_classify(train: &[FeatureVector], query: &[f64], k: usize) -> Result<Label> {
    let dim = check_dims(train)?;
    if query.len() != dim {
        return Err(Error::Shape(format!(
            "query has length {}, training vectors have {dim}",
            query.len()
        )));
    }
    if k < 1 || k > train.len() {
        return Err(Error::Config(format!(
            "k must lie in [1, {}], got {k}",
            train.len()
        )));
    }
    // max-heap of (distance, index): the farthest (and, among equals, the
    // latest-indexed) candidate is evicted first
    let mut heap: std::collections::BinaryHeap<(Candidate, usize)> =
        std::collections::BinaryHeap::with_capacity(k + 1);
    for (i, fv) in train.iter().enumerate() {
        heap.push((Candidate(squared_distance(&fv.values, query)), i));
        if heap.len() > k {
            heap.pop();
        }
    }
    let mut counts = [0usize; N_CLASSES];
    for (_, i) in heap {
        counts[train[i].label.code()] += 1;
    }
    Label::from_code(majority_lowest(&counts))
}

/// Finite distance with a total order.
#[derive(PartialEq)]
struct Candidate(f64);

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Classify each query independently (parallel across queries).
pub fn knn_predict(train: &[FeatureVector], queries: &[&[f64]], k: usize) -> Result<Vec<Label>> {
    exec::map(queries, |q| knn_classify(train, q, k))
        .into_iter()
        .collect()
}

/// One-vs-rest linear SVM with internal feature standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// One weight vector per class code, each of feature length.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl SvmModel {
    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s < 1e-12 { 0.0 } else { (v - m) / s })
            .collect()
    }

    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::Shape(format!(
                "query has length {}, model expects {}",
                x.len(),
                self.mean.len()
            )));
        }
        let z = self.standardize(x);
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(&z).map(|(wi, zi)| wi * zi).sum::<f64>() + b)
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        let scores = self.scores(x)?;
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        Label::from_code(best)
    }

    pub fn predict_all(&self, queries: &[&[f64]]) -> Result<Vec<Label>> {
        exec::map(queries, |q| self.predict(q)).into_iter().collect()
    }
}

fn feature_stats(train: &[FeatureVector], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = train.len() as f64;
    let mut mean = vec![0.0; dim];
    for fv in train {
        for (m, v) in mean.iter_mut().zip(&fv.values) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for fv in train {
        for ((s, v), m) in var.iter_mut().zip(&fv.values).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.iter().map(|s| (s / n).sqrt()).collect();
    (mean, std)
}

/// Train one maximum-margin hyperplane per class by stochastic subgradient
/// descent on the L2-regularized hinge loss (step 1/(lambda*t), lambda =
/// 1/(C*n)).
pub fn svm_train(train: &[FeatureVector], cfg: &SvmConfig) -> Result<SvmModel> {
    let dim = check_dims(train)?;
    let distinct = {
        let mut seen = [false; N_CLASSES];
        for fv in train {
            seen[fv.label.code()] = true;
        }
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(Error::Validation(
            "SVM training needs at least 2 classes present".into(),
        ));
    }
    let (mean, std) = feature_stats(train, dim);
    let z: Vec<Vec<f64>> = train
        .iter()
        .map(|fv| {
            fv.values
                .iter()
                .zip(mean.iter().zip(&std))
                .map(|(v, (m, s))| if *s < 1e-12 { 0.0 } else { (v - m) / s })
                .collect()
        })
        .collect();
    let n = train.len();
    let lambda = 1.0 / (cfg.c * n as f64);

    let mut weights = Vec::with_capacity(N_CLASSES);
    let mut biases = Vec::with_capacity(N_CLASSES);
    for class in 0..N_CLASSES {
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed
                .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(class as u64)),
        );
        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        let mut order: Vec<usize> = (0..n).collect();
        let mut t = 0u64;
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let y = if train[i].label.code() == class { 1.0 } else { -1.0 };
                let margin =
                    y * (w.iter().zip(&z[i]).map(|(wi, xi)| wi * xi).sum::<f64>() + b);
                let shrink = 1.0 - eta * lambda;
                if margin < 1.0 {
                    for (wi, xi) in w.iter_mut().zip(&z[i]) {
                        *wi = shrink * *wi + eta * y * xi;
                    }
                    b += eta * y;
                } else {
                    for wi in &mut w {
                        *wi *= shrink;
                    }
                }
            }
        }
        weights.push(w);
        biases.push(b);
    }
    Ok(SvmModel {
        weights,
        biases,
        mean,
        std,
    })
}

/// One decision-tree node; splits send `x[feature] <= threshold` left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    fn classify(&self, x: &[f64]) -> usize {
        match self {
            TreeNode::Leaf { class } => *class,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.classify(x)
                } else {
                    right.classify(x)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<TreeNode>,
    n_features: usize,
}

impl RfModel {
    /// Majority vote over trees; ties resolve to the lowest class code.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        if x.len() != self.n_features {
            return Err(Error::Shape(format!(
                "query has length {}, forest expects {}",
                x.len(),
                self.n_features
            )));
        }
        let mut counts = [0usize; N_CLASSES];
        for tree in &self.trees {
            counts[tree.classify(x)] += 1;
        }
        Label::from_code(majority_lowest(&counts))
    }

    pub fn predict_all(&self, queries: &[&[f64]]) -> Result<Vec<Label>> {
        exec::map(queries, |q| self.predict(q)).into_iter().collect()
    }
}

/// Gini impurity of a label distribution.
pub(crate) fn gini(counts: &[usize; N_CLASSES], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let sum_sq: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total as f64;
            p * p
        })
        .sum();
    1.0 - sum_sq
}

fn class_counts(train: &[FeatureVector], idx: &[usize]) -> [usize; N_CLASSES] {
    let mut counts = [0usize; N_CLASSES];
    for &i in idx {
        counts[train[i].label.code()] += 1;
    }
    counts
}

/// Best (feature, midpoint threshold) among `candidates` by weighted child
/// Gini impurity, honoring `min_leaf`. `None` when no admissible split
/// improves on the parent.
pub(crate) fn best_split(
    train: &[FeatureVector],
    idx: &[usize],
    candidates: &[usize],
    min_leaf: usize,
) -> Option<(usize, f64)> {
    let parent_gini = gini(&class_counts(train, idx), idx.len());
    let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, score)
    for &f in candidates {
        let mut rows: Vec<(f64, usize)> = idx
            .iter()
            .map(|&i| (train[i].values[f], train[i].label.code()))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = rows.len();
        let mut left = [0usize; N_CLASSES];
        let mut right = class_counts(train, idx);
        for cut in 1..total {
            let (v, c) = rows[cut - 1];
            left[c] += 1;
            right[c] -= 1;
            // only cut between distinct values, at their midpoint
            if rows[cut].0 <= v {
                continue;
            }
            if cut < min_leaf || total - cut < min_leaf {
                continue;
            }
            let score = (cut as f64 * gini(&left, cut)
                + (total - cut) as f64 * gini(&right, total - cut))
                / total as f64;
            if best.as_ref().is_none_or(|&(_, _, s)| score < s) {
                best = Some((f, (v + rows[cut].0) / 2.0, score));
            }
        }
    }
    best.filter(|&(_, _, s)| s < parent_gini)
        .map(|(f, thr, _)| (f, thr))
}

pub(crate) fn build_tree(
    train: &[FeatureVector],
    idx: &[usize],
    dim: usize,
    cfg: &RfConfig,
    depth: usize,
    rng: &mut ChaCha8Rng,
) -> TreeNode {
    let counts = class_counts(train, idx);
    let majority = majority_lowest(&counts);
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= cfg.max_depth || idx.len() < 2 * cfg.min_leaf {
        return TreeNode::Leaf { class: majority };
    }
    let n_candidates = match cfg.features_per_split.as_str() {
        "all" => dim,
        _ => (dim as f64).sqrt().ceil() as usize,
    };
    let mut features: Vec<usize> = (0..dim).collect();
    features.partial_shuffle(rng, n_candidates);
    features.truncate(n_candidates);
    let Some((feature, threshold)) = best_split(train, idx, &features, cfg.min_leaf) else {
        return TreeNode::Leaf { class: majority };
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| train[i].values[feature] <= threshold);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(build_tree(train, &left_idx, dim, cfg, depth + 1, rng)),
        right: Box::new(build_tree(train, &right_idx, dim, cfg, depth + 1, rng)),
    }
}

/// Train `n_trees` trees on bootstrap resamples (parallel across trees;
/// per-tree seeds derive from the master seed, so results are independent
/// of worker count).
pub fn rf_train(train: &[FeatureVector], cfg: &RfConfig) -> Result<RfModel> {
    let dim = check_dims(train)?;
    let n = train.len();
    let trees: Vec<TreeNode> = exec::map_range(cfg.n_trees, |ti| {
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed
                .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(ti as u64 + 1)),
        );
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        build_tree(train, &idx, dim, cfg, 0, &mut rng)
    });
    Ok(RfModel {
        trees,
        n_features: dim,
    })
}
