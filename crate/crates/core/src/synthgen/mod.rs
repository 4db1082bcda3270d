//! Parametric generator of labeled synthetic rehab sequences: three
//! reaching actions with optionally injected compensation patterns,
//! rendered to 20-joint skeletons through rigid forward kinematics and
//! observed from three fixed camera views.

mod kinematics;

pub use kinematics::{pose_joints, ArmPose, KinematicPose};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::skeleton::{
    ActionKind, Dataset, Joint, Label, MotionSequence, SkeletonFrame, N_JOINTS,
};
use kinematics::{
    solve_elevation_angle, view_transform, view_untransform, Vec3, VIEW_ANGLES,
};

/// Constant per-repetition posture offset (degrees): subjects never stand
/// identically twice. Drawn uniformly in +-NUISANCE_DEG for trunk pitch
/// and yaw; constant offsets are temporal-mean confounders that a
/// time-averaging classifier cannot separate from a genuine ramp.
const NUISANCE_DEG: f64 = 12.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub n_subjects: usize,
    pub reps_per_action: usize,
    pub views: usize,
    pub fps: f64,
    /// Probability that a repetition carries its action's paired
    /// compensation.
    pub compensation_rate: f64,
    /// Standard deviation of per-coordinate sensor noise, meters.
    pub noise_sigma: f64,
    pub duration_range: [f64; 2],
    pub tlf_pitch_deg: [f64; 2],
    pub tr_yaw_deg: [f64; 2],
    pub se_lift_m: [f64; 2],
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_subjects: 15,
            reps_per_action: 6,
            views: 3,
            fps: 30.0,
            compensation_rate: 0.5,
            noise_sigma: 0.003,
            duration_range: [2.0, 4.0],
            tlf_pitch_deg: [10.0, 30.0],
            tr_yaw_deg: [10.0, 30.0],
            se_lift_m: [0.03, 0.08],
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 1 || self.reps_per_action < 1 {
            return Err(Error::Config(
                "n_subjects and reps_per_action must be at least 1".into(),
            ));
        }
        if self.views < 1 || self.views > VIEW_ANGLES.len() {
            return Err(Error::Config(format!(
                "views must lie in [1, {}], got {}",
                VIEW_ANGLES.len(),
                self.views
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config(format!("fps must be > 0, got {}", self.fps)));
        }
        if !(0.0..=1.0).contains(&self.compensation_rate) {
            return Err(Error::Config(format!(
                "compensation_rate must lie in [0, 1], got {}",
                self.compensation_rate
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        for (name, [lo, hi]) in [
            ("duration_range", self.duration_range),
            ("tlf_pitch_deg", self.tlf_pitch_deg),
            ("tr_yaw_deg", self.tr_yaw_deg),
            ("se_lift_m", self.se_lift_m),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
                return Err(Error::Config(format!(
                    "{name} must be a positive non-degenerate range, got [{lo}, {hi}]"
                )));
            }
        }
        if self.duration_range[0] < 0.5 {
            return Err(Error::Config(
                "durations under 0.5 s leave too few frames to resample".into(),
            ));
        }
        // the elevation solver needs the lift to be geometrically reachable
        // at the smallest subject scale
        let max_reach = 0.9 * (0.22f64.hypot(0.12) - 0.12);
        if self.se_lift_m[1] > max_reach {
            return Err(Error::Config(format!(
                "se_lift_m upper bound {} exceeds the reachable shoulder rise {max_reach:.3}",
                self.se_lift_m[1]
            )));
        }
        Ok(())
    }

    /// Total sequences produced: subjects x actions x reps x views.
    pub fn n_sequences(&self) -> usize {
        self.n_subjects * ActionKind::ALL.len() * self.reps_per_action * self.views
    }
}

/// Ground-truth generation record for one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceProvenance {
    pub subject_id: String,
    pub action: ActionKind,
    pub repetition: u32,
    pub view_id: u8,
    pub label: Label,
    /// Injected compensation magnitude: degrees for TLF/TR, meters for
    /// SE, 0 for NC.
    pub injected_magnitude: f64,
    pub duration_s: f64,
    pub nuisance_pitch_deg: f64,
    pub nuisance_yaw_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenProvenance {
    pub config: GenConfig,
    pub records: Vec<SequenceProvenance>,
}

/// Peak joint-angle amplitudes (radians) of each action's right-arm
/// template.
fn action_amplitudes(action: ActionKind) -> ArmPose {
    match action {
        ActionKind::TouchMouth => ArmPose {
            flexion: 100f64.to_radians(),
            abduction: 15f64.to_radians(),
            elbow: 120f64.to_radians(),
        },
        ActionKind::ExtendBackward => ArmPose {
            flexion: (-50f64).to_radians(),
            abduction: 10f64.to_radians(),
            elbow: 20f64.to_radians(),
        },
        ActionKind::ArmAbduction => ArmPose {
            flexion: 0.0,
            abduction: 95f64.to_radians(),
            elbow: 5f64.to_radians(),
        },
    }
}

/// Minimum-jerk position profile on [0, 1].
fn minimum_jerk(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    v * v * v * (10.0 + v * (-15.0 + 6.0 * v))
}

/// Out-and-back reach profile: rise to 1 at u = 0.5, return to 0.
fn reach_profile(u: f64) -> f64 {
    if u <= 0.5 {
        minimum_jerk(2.0 * u)
    } else {
        minimum_jerk(2.0 - 2.0 * u)
    }
}

/// Compensation onset ramp, peaking mid-movement.
fn compensation_ramp(u: f64) -> f64 {
    (std::f64::consts::PI * u).sin()
}

struct RepetitionPlan {
    duration: f64,
    label: Label,
    magnitude: f64,
    nuisance_pitch: f64,
    nuisance_yaw: f64,
    amp_jitter: f64,
}

fn plan_repetition(cfg: &GenConfig, action: ActionKind, rng: &mut ChaCha8Rng) -> RepetitionPlan {
    let duration = rng.gen_range(cfg.duration_range[0]..cfg.duration_range[1]);
    let compensated = rng.gen_range(0.0..1.0) < cfg.compensation_rate;
    let paired = action.paired_compensation();
    // the magnitude is always drawn so the stream layout does not depend
    // on the compensation coin
    let range = match paired {
        Label::TLF => cfg.tlf_pitch_deg,
        Label::TR => cfg.tr_yaw_deg,
        Label::SE => cfg.se_lift_m,
        Label::NC => unreachable!("paired compensation is never NC"),
    };
    let magnitude = rng.gen_range(range[0]..range[1]);
    RepetitionPlan {
        duration,
        label: if compensated { paired } else { Label::NC },
        magnitude: if compensated { magnitude } else { 0.0 },
        nuisance_pitch: rng.gen_range(-NUISANCE_DEG..NUISANCE_DEG).to_radians(),
        nuisance_yaw: rng.gen_range(-NUISANCE_DEG..NUISANCE_DEG).to_radians(),
        amp_jitter: rng.gen_range(0.9..1.1),
    }
}

/// World-space joint trajectories for one repetition, noise-free.
fn repetition_frames(
    cfg: &GenConfig,
    action: ActionKind,
    plan: &RepetitionPlan,
    scale: f64,
) -> Vec<[Vec3; N_JOINTS]> {
    let n_frames = (plan.duration * cfg.fps).round() as usize + 1;
    let amp = action_amplitudes(action);
    let (inj_pitch, inj_yaw, elevation_peak) = match plan.label {
        Label::TLF => (plan.magnitude.to_radians(), 0.0, 0.0),
        Label::TR => (0.0, plan.magnitude.to_radians(), 0.0),
        Label::SE => (0.0, 0.0, solve_elevation_angle(plan.magnitude, scale)),
        Label::NC => (0.0, 0.0, 0.0),
    };
    (0..n_frames)
        .map(|i| {
            let u = i as f64 / (n_frames - 1) as f64;
            let p = plan.amp_jitter * reach_profile(u);
            let ramp = compensation_ramp(u);
            let pose = KinematicPose {
                trunk_pitch: plan.nuisance_pitch + inj_pitch * ramp,
                trunk_yaw: plan.nuisance_yaw + inj_yaw * ramp,
                shoulder_elevation: elevation_peak * ramp,
                right_arm: ArmPose {
                    flexion: amp.flexion * p,
                    abduction: amp.abduction * p,
                    elbow: amp.elbow * p,
                },
                left_arm: ArmPose::default(),
            };
            pose_joints(&pose, scale)
        })
        .collect()
}

fn subject_seed(master: u64, subject: usize) -> u64 {
    master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(subject as u64 + 1))
}

fn generate_subject(
    cfg: &GenConfig,
    subject: usize,
) -> Result<Vec<(MotionSequence, SequenceProvenance)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(subject_seed(cfg.seed, subject));
    let subject_id = format!("S{:02}", subject + 1);
    let scale = rng.gen_range(0.9..1.1);
    let noise = Normal::new(0.0, cfg.noise_sigma)
        .map_err(|e| Error::Config(format!("noise_sigma: {e}")))?;
    let mut out = Vec::with_capacity(ActionKind::ALL.len() * cfg.reps_per_action * cfg.views);
    for action in ActionKind::ALL {
        for rep in 0..cfg.reps_per_action {
            let plan = plan_repetition(cfg, action, &mut rng);
            let world = repetition_frames(cfg, action, &plan, scale);
            for view in 0..cfg.views {
                let frames: Vec<SkeletonFrame> = world
                    .iter()
                    .enumerate()
                    .map(|(i, joints)| {
                        let mut xyz = [[0.0; 3]; N_JOINTS];
                        for (slot, p) in xyz.iter_mut().zip(joints) {
                            let v = view_transform(view, p);
                            for (axis, value) in slot.iter_mut().zip(v) {
                                *axis = value + noise.sample(&mut rng);
                            }
                        }
                        SkeletonFrame {
                            t: i as f64 / cfg.fps,
                            xyz,
                        }
                    })
                    .collect();
                let seq = MotionSequence {
                    frames,
                    label: plan.label,
                    action,
                    subject_id: subject_id.clone(),
                    view_id: view as u8,
                    repetition: rep as u32,
                    fps: cfg.fps,
                    preprocessed: false,
                };
                seq.validate()?;
                let prov = SequenceProvenance {
                    subject_id: subject_id.clone(),
                    action,
                    repetition: rep as u32,
                    view_id: view as u8,
                    label: plan.label,
                    injected_magnitude: plan.magnitude,
                    duration_s: plan.duration,
                    nuisance_pitch_deg: plan.nuisance_pitch.to_degrees(),
                    nuisance_yaw_deg: plan.nuisance_yaw.to_degrees(),
                };
                out.push((seq, prov));
            }
        }
    }
    Ok(out)
}

/// Generate the full dataset plus its ground-truth provenance, in
/// canonical (subject, action, repetition, view) order. Parallel across
/// subjects; per-subject seeds make the output independent of worker
/// count.
pub fn generate(cfg: &GenConfig) -> Result<(Dataset, GenProvenance)> {
    cfg.validate()?;
    let per_subject = exec::map_range(cfg.n_subjects, |si| generate_subject(cfg, si));
    let mut sequences = Vec::with_capacity(cfg.n_sequences());
    let mut records = Vec::with_capacity(cfg.n_sequences());
    for subject in per_subject {
        for (seq, prov) in subject? {
            sequences.push(seq);
            records.push(prov);
        }
    }
    Ok((
        Dataset {
            sequences,
            split: None,
        },
        GenProvenance {
            config: cfg.clone(),
            records,
        },
    ))
}

/// Compensation magnitudes measured back from joint geometry, relative to
/// the first frame (the ramp is zero there). Meaningful on raw generated
/// sequences, ideally noise-free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompensationSignature {
    pub trunk_pitch_deg: f64,
    pub trunk_yaw_deg: f64,
    pub shoulder_lift_m: f64,
}

fn sub3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}

pub fn compensation_signature(seq: &MotionSequence) -> Result<CompensationSignature> {
    if seq.preprocessed {
        return Err(Error::Validation(
            "signature needs raw generated coordinates, not preprocessed ones".into(),
        ));
    }
    let view = seq.view_id as usize;
    if view >= VIEW_ANGLES.len() {
        return Err(Error::Validation(format!(
            "view_id {view} has no known camera pose"
        )));
    }
    use Joint::*;
    let world: Vec<[Vec3; 4]> = seq
        .frames
        .iter()
        .map(|f| {
            [Pelvis, SpineChest, ShoulderLeft, ShoulderRight]
                .map(|joint| view_untransform(view, &f.xyz[joint as usize]))
        })
        .collect();
    let spine = |f: &[Vec3; 4]| sub3(&f[1], &f[0]);
    let shoulder_line_xz = |f: &[Vec3; 4]| {
        let l = sub3(&f[3], &f[2]);
        [l[0], 0.0, l[2]]
    };
    let rel_lift = |f: &[Vec3; 4]| f[3][1] - f[1][1];

    let base = &world[0];
    let (spine0, line0, lift0) = (spine(base), shoulder_line_xz(base), rel_lift(base));
    let mut sig = CompensationSignature {
        trunk_pitch_deg: 0.0,
        trunk_yaw_deg: 0.0,
        shoulder_lift_m: 0.0,
    };
    for f in &world[1..] {
        sig.trunk_pitch_deg = sig
            .trunk_pitch_deg
            .max(angle_between(&spine(f), &spine0).to_degrees());
        sig.trunk_yaw_deg = sig
            .trunk_yaw_deg
            .max(angle_between(&shoulder_line_xz(f), &line0).to_degrees());
        sig.shoulder_lift_m = sig.shoulder_lift_m.max(rel_lift(f) - lift0);
    }
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::canonical_upper_limb_graph;
    use approx::assert_abs_diff_eq;

    fn small_config() -> GenConfig {
        GenConfig {
            n_subjects: 2,
            reps_per_action: 2,
            noise_sigma: 0.0,
            seed: 9,
            ..GenConfig::default()
        }
    }

    #[test]
    fn default_config_produces_the_full_protocol_grid() {
        let cfg = GenConfig::default();
        assert_eq!(cfg.n_sequences(), 810);
        cfg.validate().unwrap();
    }

    #[test]
    fn sequences_come_out_in_canonical_order_with_valid_fields() {
        let (ds, prov) = generate(&small_config()).unwrap();
        assert_eq!(ds.sequences.len(), 2 * 3 * 2 * 3);
        assert_eq!(prov.records.len(), ds.sequences.len());
        let mut expected = Vec::new();
        for s in 1..=2 {
            for action in ActionKind::ALL {
                for rep in 0..2u32 {
                    for view in 0..3u8 {
                        expected.push((format!("S{s:02}"), action, rep, view));
                    }
                }
            }
        }
        for ((seq, rec), want) in ds.sequences.iter().zip(&prov.records).zip(&expected) {
            assert_eq!(
                (
                    seq.subject_id.clone(),
                    seq.action,
                    seq.repetition,
                    seq.view_id
                ),
                *want
            );
            assert_eq!(rec.subject_id, seq.subject_id);
            assert_eq!(rec.label, seq.label);
            assert!(!seq.preprocessed);
            seq.validate().unwrap();
        }
    }

    #[test]
    fn zero_compensation_rate_yields_only_nc_labels() {
        let cfg = GenConfig {
            compensation_rate: 0.0,
            ..small_config()
        };
        let (ds, _) = generate(&cfg).unwrap();
        assert!(ds.sequences.iter().all(|s| s.label == Label::NC));
    }

    #[test]
    fn full_compensation_rate_pairs_labels_with_actions() {
        let cfg = GenConfig {
            compensation_rate: 1.0,
            ..small_config()
        };
        let (ds, _) = generate(&cfg).unwrap();
        for seq in &ds.sequences {
            assert_eq!(seq.label, seq.action.paired_compensation());
        }
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let cfg = small_config();
        let (a, pa) = generate(&cfg).unwrap();
        let (b, pb) = generate(&cfg).unwrap();
        assert_eq!(a.sequences, b.sequences);
        assert_eq!(pa, pb);
        let other = GenConfig {
            seed: 10,
            ..small_config()
        };
        let (c, _) = generate(&other).unwrap();
        assert_ne!(a.sequences, c.sequences);
    }

    #[test]
    fn bone_lengths_are_constant_across_noise_free_frames() {
        let (ds, _) = generate(&small_config()).unwrap();
        let edges = canonical_upper_limb_graph().edges;
        for seq in &ds.sequences {
            let lengths = |f: &SkeletonFrame| -> Vec<f64> {
                edges
                    .iter()
                    .map(|&(a, b)| {
                        let (pa, pb) = (f.xyz[a], f.xyz[b]);
                        ((pa[0] - pb[0]).powi(2)
                            + (pa[1] - pb[1]).powi(2)
                            + (pa[2] - pb[2]).powi(2))
                        .sqrt()
                    })
                    .collect()
            };
            let first = lengths(&seq.frames[0]);
            for f in &seq.frames[1..] {
                for (l, want) in lengths(f).iter().zip(&first) {
                    assert_abs_diff_eq!(l, want, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn views_of_one_repetition_agree_on_all_pairwise_distances() {
        let (ds, _) = generate(&small_config()).unwrap();
        // sequences come in view-triples of the same repetition
        for triple in ds.sequences.chunks(3) {
            assert_eq!(triple.len(), 3);
            let dist = |f: &SkeletonFrame, a: usize, b: usize| -> f64 {
                ((f.xyz[a][0] - f.xyz[b][0]).powi(2)
                    + (f.xyz[a][1] - f.xyz[b][1]).powi(2)
                    + (f.xyz[a][2] - f.xyz[b][2]).powi(2))
                .sqrt()
            };
            for other in &triple[1..] {
                assert_eq!(other.frames.len(), triple[0].frames.len());
                for (fa, fb) in triple[0].frames.iter().zip(&other.frames) {
                    for (a, b) in [(0, 10), (4, 16), (9, 19), (2, 14)] {
                        assert_abs_diff_eq!(
                            dist(fa, a, b),
                            dist(fb, a, b),
                            epsilon = 1e-9
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn signatures_recover_injected_magnitudes() {
        let cfg = GenConfig {
            n_subjects: 3,
            reps_per_action: 3,
            compensation_rate: 1.0,
            noise_sigma: 0.0,
            seed: 21,
            ..GenConfig::default()
        };
        let (ds, prov) = generate(&cfg).unwrap();
        for (seq, rec) in ds.sequences.iter().zip(&prov.records) {
            let sig = compensation_signature(seq).unwrap();
            match seq.label {
                Label::TLF => {
                    assert_abs_diff_eq!(
                        sig.trunk_pitch_deg,
                        rec.injected_magnitude,
                        epsilon = 1.0
                    );
                }
                Label::TR => {
                    assert_abs_diff_eq!(
                        sig.trunk_yaw_deg,
                        rec.injected_magnitude,
                        epsilon = 1.0
                    );
                }
                Label::SE => {
                    assert_abs_diff_eq!(
                        sig.shoulder_lift_m,
                        rec.injected_magnitude,
                        epsilon = 0.005
                    );
                }
                Label::NC => unreachable!(),
            }
        }
    }

    #[test]
    fn nc_sequences_have_near_zero_signatures() {
        let cfg = GenConfig {
            n_subjects: 3,
            reps_per_action: 3,
            compensation_rate: 0.0,
            noise_sigma: 0.0,
            seed: 33,
            ..GenConfig::default()
        };
        let (ds, _) = generate(&cfg).unwrap();
        for seq in &ds.sequences {
            let sig = compensation_signature(seq).unwrap();
            assert!(sig.trunk_pitch_deg < 2.0, "pitch {}", sig.trunk_pitch_deg);
            assert!(sig.trunk_yaw_deg < 2.0, "yaw {}", sig.trunk_yaw_deg);
            assert!(sig.shoulder_lift_m < 0.005, "lift {}", sig.shoulder_lift_m);
        }
    }

    #[test]
    fn signature_separates_classes_with_zero_overlap() {
        let cfg = GenConfig {
            n_subjects: 4,
            reps_per_action: 4,
            compensation_rate: 0.5,
            noise_sigma: 0.0,
            seed: 2,
            ..GenConfig::default()
        };
        let (ds, _) = generate(&cfg).unwrap();
        for seq in &ds.sequences {
            let sig = compensation_signature(seq).unwrap();
            let paired = seq.action.paired_compensation();
            let (value, threshold) = match paired {
                Label::TLF => (sig.trunk_pitch_deg, 5.0),
                Label::TR => (sig.trunk_yaw_deg, 5.0),
                Label::SE => (sig.shoulder_lift_m, 0.015),
                Label::NC => unreachable!(),
            };
            if seq.label == Label::NC {
                assert!(value < threshold, "{} NC value {value}", seq.describe());
            } else {
                assert!(value > threshold, "{} value {value}", seq.describe());
            }
        }
    }

    #[test]
    fn class_balance_tracks_the_compensation_rate() {
        let (ds, _) = generate(&GenConfig::default()).unwrap();
        assert_eq!(ds.sequences.len(), 810);
        let nc = ds
            .sequences
            .iter()
            .filter(|s| s.label == Label::NC)
            .count();
        // binomial n=810 p=0.5: 4 sigma ~ 57
        assert!((348..=462).contains(&nc), "NC count {nc}");
        for label in [Label::TLF, Label::TR, Label::SE] {
            let k = ds.sequences.iter().filter(|s| s.label == label).count();
            assert!(k > 0, "{label:?} absent");
        }
    }

    #[test]
    fn noise_perturbs_coordinates_but_not_structure() {
        let quiet = small_config();
        let noisy = GenConfig {
            noise_sigma: 0.003,
            ..small_config()
        };
        let (a, pa) = generate(&quiet).unwrap();
        let (b, pb) = generate(&noisy).unwrap();
        assert_eq!(a.sequences.len(), b.sequences.len());
        for (ra, rb) in pa.records.iter().zip(&pb.records) {
            assert_eq!(ra, rb);
        }
        let (fa, fb) = (&a.sequences[0].frames[0], &b.sequences[0].frames[0]);
        assert_ne!(fa.xyz, fb.xyz);
        let max_dev = fa
            .xyz
            .iter()
            .flatten()
            .zip(fb.xyz.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(max_dev < 0.003 * 6.0, "deviation {max_dev}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = GenConfig {
            compensation_rate: 1.5,
            ..GenConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = GenConfig {
            duration_range: [4.0, 2.0],
            ..GenConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = GenConfig {
            se_lift_m: [0.03, 0.2],
            ..GenConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = GenConfig {
            views: 4,
            ..GenConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn signature_rejects_preprocessed_input() {
        let (mut ds, _) = generate(&small_config()).unwrap();
        ds.sequences[0].preprocessed = true;
        assert!(compensation_signature(&ds.sequences[0]).is_err());
    }
}
