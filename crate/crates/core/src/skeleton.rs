//! Domain types for skeleton sequences: labels, frames, sequences, the
//! upper-limb graph, and the dataset container.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of tracked upper-limb joints per frame.
pub const N_JOINTS: usize = 20;
/// Flattened coordinate channels per frame (20 joints x 3 axes).
pub const N_CHANNELS: usize = N_JOINTS * 3;
/// Number of movement classes.
pub const N_CLASSES: usize = 4;

/// Classification label. Codes are stable across serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    /// Non-compensated movement.
    NC,
    /// Trunk lean-forward.
    TLF,
    /// Trunk rotation.
    TR,
    /// Shoulder elevation.
    SE,
}

impl Label {
    pub const ALL: [Label; N_CLASSES] = [Label::NC, Label::TLF, Label::TR, Label::SE];

    pub fn code(self) -> usize {
        match self {
            Label::NC => 0,
            Label::TLF => 1,
            Label::TR => 2,
            Label::SE => 3,
        }
    }

    pub fn from_code(code: usize) -> Result<Label> {
        Label::ALL
            .get(code)
            .copied()
            .ok_or_else(|| Error::Validation(format!("label code {code} out of range 0..=3")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::NC => "NC",
            Label::TLF => "TLF",
            Label::TR => "TR",
            Label::SE => "SE",
        }
    }
}

/// Rehabilitation movement being performed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    TouchMouth,
    ExtendBackward,
    ArmAbduction,
}

impl ActionKind {
    pub const ALL: [ActionKind; 3] = [
        ActionKind::TouchMouth,
        ActionKind::ExtendBackward,
        ActionKind::ArmAbduction,
    ];

    /// The compensation pattern this action is paired with.
    pub fn paired_compensation(self) -> Label {
        match self {
            ActionKind::TouchMouth => Label::TLF,
            ActionKind::ExtendBackward => Label::TR,
            ActionKind::ArmAbduction => Label::SE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::TouchMouth => "touch_mouth",
            ActionKind::ExtendBackward => "extend_backward",
            ActionKind::ArmAbduction => "arm_abduction",
        }
    }
}

/// Joint indices of the 20-joint upper-limb skeleton.
///
/// Trunk/head chain first, then the left and right arm chains. The vocabulary
/// is the Azure Kinect body-tracking joint set restricted to the upper body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
#[allow(clippy::upper_case_acronyms)]
pub enum Joint {
    Pelvis = 0,
    SpineNavel = 1,
    SpineChest = 2,
    Neck = 3,
    Head = 4,
    Nose = 5,
    ClavicleLeft = 6,
    ShoulderLeft = 7,
    ElbowLeft = 8,
    WristLeft = 9,
    HandLeft = 10,
    HandtipLeft = 11,
    ThumbLeft = 12,
    ClavicleRight = 13,
    ShoulderRight = 14,
    ElbowRight = 15,
    WristRight = 16,
    HandRight = 17,
    HandtipRight = 18,
    ThumbRight = 19,
}

pub const JOINT_NAMES: [&str; N_JOINTS] = [
    "PELVIS",
    "SPINE_NAVEL",
    "SPINE_CHEST",
    "NECK",
    "HEAD",
    "NOSE",
    "CLAVICLE_LEFT",
    "SHOULDER_LEFT",
    "ELBOW_LEFT",
    "WRIST_LEFT",
    "HAND_LEFT",
    "HANDTIP_LEFT",
    "THUMB_LEFT",
    "CLAVICLE_RIGHT",
    "SHOULDER_RIGHT",
    "ELBOW_RIGHT",
    "WRIST_RIGHT",
    "HAND_RIGHT",
    "HANDTIP_RIGHT",
    "THUMB_RIGHT",
];

/// One captured frame: 20 joint positions in meters plus a timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonFrame {
    /// Seconds since sequence start; strictly increasing within a sequence.
    pub t: f64,
    /// Row-per-joint coordinates, camera frame, meters.
    pub xyz: [[f64; 3]; N_JOINTS],
}

impl SkeletonFrame {
    pub fn validate(&self) -> Result<()> {
        if self.t < 0.0 || !self.t.is_finite() {
            return Err(Error::Validation(format!(
                "frame timestamp {} must be finite and non-negative",
                self.t
            )));
        }
        for (j, p) in self.xyz.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::Validation(format!(
                    "non-finite coordinate at joint {} ({})",
                    j, JOINT_NAMES[j]
                )));
            }
        }
        Ok(())
    }

    /// Mean over joints of the Euclidean distance to the same joints in `other`.
    pub fn mean_joint_distance(&self, other: &SkeletonFrame) -> f64 {
        let total: f64 = self
            .xyz
            .iter()
            .zip(other.xyz.iter())
            .map(|(a, b)| {
                let dx = a[0] - b[0];
                let dy = a[1] - b[1];
                let dz = a[2] - b[2];
                (dx * dx + dy * dy + dz * dz).sqrt()
            })
            .sum();
        total / N_JOINTS as f64
    }
}

/// An ordered recording of one repetition of one movement from one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub frames: Vec<SkeletonFrame>,
    pub label: Label,
    pub action: ActionKind,
    pub subject_id: String,
    pub view_id: u8,
    pub repetition: u32,
    pub fps: f64,
    /// Set once the preprocessing chain has been applied.
    pub preprocessed: bool,
}

impl MotionSequence {
    pub fn validate(&self) -> Result<()> {
        if self.frames.len() < 2 {
            return Err(Error::Validation(format!(
                "sequence {} needs at least 2 frames, got {}",
                self.describe(),
                self.frames.len()
            )));
        }
        for frame in &self.frames {
            frame.validate()?;
        }
        for w in self.frames.windows(2) {
            if w[1].t <= w[0].t {
                return Err(Error::Validation(format!(
                    "sequence {}: timestamps not strictly increasing ({} then {})",
                    self.describe(),
                    w[0].t,
                    w[1].t
                )));
            }
        }
        Ok(())
    }

    /// Short human-readable identity for error messages.
    pub fn describe(&self) -> String {
        format!(
            "{}/{}/rep{}/view{}",
            self.subject_id,
            self.action.name(),
            self.repetition,
            self.view_id
        )
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Undirected 20-node graph over the joints. Each edge is stored once.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonGraph {
    pub n_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub joint_names: Vec<String>,
}

impl SkeletonGraph {
    pub fn validate(&self) -> Result<()> {
        for &(a, b) in &self.edges {
            if a == b {
                return Err(Error::Validation(format!("self-loop at node {a}")));
            }
            if a >= self.n_nodes || b >= self.n_nodes {
                return Err(Error::Validation(format!(
                    "edge ({a},{b}) out of range for {} nodes",
                    self.n_nodes
                )));
            }
        }
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            for &(c, d) in &self.edges[i + 1..] {
                if (a, b) == (c, d) || (a, b) == (d, c) {
                    return Err(Error::Validation(format!("duplicate edge ({a},{b})")));
                }
            }
        }
        if !self.is_connected() {
            return Err(Error::Validation("graph is not connected".into()));
        }
        Ok(())
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        if self.n_nodes == 0 {
            return false;
        }
        let mut seen = vec![false; self.n_nodes];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(a, b) in &self.edges {
                let v = if a == u {
                    b
                } else if b == u {
                    a
                } else {
                    continue;
                };
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n_nodes
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == node || b == node)
            .count()
    }
}

/// The fixed upper-limb topology: a 19-edge tree over the 20 joints.
///
/// Spine chain pelvis..nose, clavicles off the chest, then per side the
/// clavicle-shoulder-elbow-wrist-hand-handtip chain with the thumb off the
/// wrist.
pub fn canonical_upper_limb_graph() -> SkeletonGraph {
    use Joint::*;
    let e = |a: Joint, b: Joint| (a as usize, b as usize);
    let edges = vec![
        e(Pelvis, SpineNavel),
        e(SpineNavel, SpineChest),
        e(SpineChest, Neck),
        e(Neck, Head),
        e(Head, Nose),
        e(SpineChest, ClavicleLeft),
        e(ClavicleLeft, ShoulderLeft),
        e(ShoulderLeft, ElbowLeft),
        e(ElbowLeft, WristLeft),
        e(WristLeft, HandLeft),
        e(HandLeft, HandtipLeft),
        e(WristLeft, ThumbLeft),
        e(SpineChest, ClavicleRight),
        e(ClavicleRight, ShoulderRight),
        e(ShoulderRight, ElbowRight),
        e(ElbowRight, WristRight),
        e(WristRight, HandRight),
        e(HandRight, HandtipRight),
        e(WristRight, ThumbRight),
    ];
    SkeletonGraph {
        n_nodes: N_JOINTS,
        edges,
        joint_names: JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
    }
}

/// Index partition of a dataset into train and test sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(self.test.iter()) {
            if i >= n {
                return Err(Error::Validation(format!(
                    "split index {i} out of range for {n} sequences"
                )));
            }
            if seen[i] {
                return Err(Error::Validation(format!(
                    "split index {i} appears more than once"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Validation(
                "train and test sets do not cover all indices".into(),
            ));
        }
        Ok(())
    }
}

/// A collection of motion sequences, optionally partitioned for evaluation.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub sequences: Vec<MotionSequence>,
    pub split: Option<Split>,
}

impl Dataset {
    pub fn new(sequences: Vec<MotionSequence>) -> Self {
        Dataset {
            sequences,
            split: None,
        }
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn train_indices(&self) -> Result<&[usize]> {
        self.split
            .as_ref()
            .map(|s| s.train.as_slice())
            .ok_or_else(|| Error::Validation("dataset has no train/test split".into()))
    }

    pub fn test_indices(&self) -> Result<&[usize]> {
        self.split
            .as_ref()
            .map(|s| s.test.as_slice())
            .ok_or_else(|| Error::Validation("dataset has no train/test split".into()))
    }
}
