//! Rigid-body forward kinematics for the 20-joint upper-body template.
//!
//! All poses are built from a fixed bone-offset template (average adult
//! anthropometry, meters) scaled per subject; every transformation is a
//! rigid rotation, so bone lengths are conserved exactly up to floating
//! point.

use crate::skeleton::{Joint, N_JOINTS};

pub(crate) type Vec3 = [f64; 3];
pub(crate) type Mat3 = [[f64; 3]; 3];

/// Per-parent bone offsets in the neutral stance: y up, x to the subject's
/// right, z forward, pelvis at the origin, arms hanging down.
pub(crate) const SPINE_NAVEL_OFF: Vec3 = [0.0, 0.15, 0.0];
pub(crate) const SPINE_CHEST_OFF: Vec3 = [0.0, 0.18, 0.0];
pub(crate) const NECK_OFF: Vec3 = [0.0, 0.20, 0.0];
pub(crate) const HEAD_OFF: Vec3 = [0.0, 0.12, 0.0];
pub(crate) const NOSE_OFF: Vec3 = [0.0, 0.03, 0.10];
/// Chest to clavicle, right side; the left mirrors x.
pub(crate) const CLAVICLE_OFF: Vec3 = [0.09, 0.12, 0.0];
pub(crate) const SHOULDER_OFF: Vec3 = [0.13, 0.0, 0.0];
pub(crate) const UPPER_ARM_LEN: f64 = 0.28;
pub(crate) const FOREARM_LEN: f64 = 0.25;
pub(crate) const HAND_LEN: f64 = 0.08;
pub(crate) const HANDTIP_LEN: f64 = 0.09;
/// Wrist to thumb in the forearm's local frame, right side.
pub(crate) const THUMB_OFF: Vec3 = [-0.05, -0.03, 0.02];

pub(crate) fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub(crate) fn mat_apply(m: &Mat3, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub(crate) fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

pub(crate) fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub(crate) fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale3(v: Vec3, s: f64) -> Vec3 {
    [v[0] * s, v[1] * s, v[2] * s]
}

fn mirror_x(v: Vec3) -> Vec3 {
    [-v[0], v[1], v[2]]
}

/// Joint angles for one arm, radians.
#[derive(Debug, Clone, Copy, Default)]
pub struct ArmPose {
    /// Shoulder flexion: positive swings the arm forward.
    pub flexion: f64,
    /// Shoulder abduction: positive raises the arm away from the body.
    pub abduction: f64,
    /// Elbow flexion: positive bends the forearm forward.
    pub elbow: f64,
}

/// Full articulated pose; forward kinematics on this struct yields the 20
/// joint positions.
#[derive(Debug, Clone, Copy, Default)]
pub struct KinematicPose {
    /// Trunk lean forward, radians, rotation about the pelvis x-axis.
    pub trunk_pitch: f64,
    /// Trunk rotation, radians, rotation about the pelvis vertical axis.
    pub trunk_yaw: f64,
    /// Rotation of the right clavicle subtree about the chest's forward
    /// axis, radians; raises the right shoulder.
    pub shoulder_elevation: f64,
    pub right_arm: ArmPose,
    pub left_arm: ArmPose,
}

fn arm_rotation(arm: &ArmPose, right: bool) -> (Mat3, Mat3) {
    // the arm hangs along -y: rot_x by -flexion sends it forward (+z),
    // rot_z by +abduction sends the right arm out to +x (left mirrors)
    let sign = if right { 1.0 } else { -1.0 };
    let shoulder = mat_mul(&rot_z(sign * arm.abduction), &rot_x(-arm.flexion));
    let elbow = mat_mul(&shoulder, &rot_x(-arm.elbow));
    (shoulder, elbow)
}

/// 20 joint positions for a pose with a given subject bone scale.
pub fn pose_joints(pose: &KinematicPose, scale: f64) -> [Vec3; N_JOINTS] {
    use Joint::*;
    let s = |v: Vec3| scale3(v, scale);
    let mut j = [[0.0; 3]; N_JOINTS];

    j[SpineNavel as usize] = s(SPINE_NAVEL_OFF);
    j[SpineChest as usize] = add(j[SpineNavel as usize], s(SPINE_CHEST_OFF));
    j[Neck as usize] = add(j[SpineChest as usize], s(NECK_OFF));
    j[Head as usize] = add(j[Neck as usize], s(HEAD_OFF));
    j[Nose as usize] = add(j[Head as usize], s(NOSE_OFF));

    let chest = j[SpineChest as usize];
    let down: Vec3 = [0.0, -1.0, 0.0];
    for right in [true, false] {
        let (clav, shoul, elb, wri, hand, tip, thumb, arm) = if right {
            (
                ClavicleRight,
                ShoulderRight,
                ElbowRight,
                WristRight,
                HandRight,
                HandtipRight,
                ThumbRight,
                &pose.right_arm,
            )
        } else {
            (
                ClavicleLeft,
                ShoulderLeft,
                ElbowLeft,
                WristLeft,
                HandLeft,
                HandtipLeft,
                ThumbLeft,
                &pose.left_arm,
            )
        };
        let side = |v: Vec3| if right { v } else { mirror_x(v) };
        // shoulder elevation rotates the clavicle subtree about the
        // chest's forward axis; only the right (task-performing) side
        // elevates
        let elev = if right {
            rot_z(pose.shoulder_elevation)
        } else {
            rot_z(0.0)
        };
        j[clav as usize] = add(chest, mat_apply(&elev, &s(side(CLAVICLE_OFF))));
        j[shoul as usize] = add(j[clav as usize], mat_apply(&elev, &s(side(SHOULDER_OFF))));
        let (r_sh, r_el) = arm_rotation(arm, right);
        let r_sh = mat_mul(&elev, &r_sh);
        let r_el = mat_mul(&elev, &r_el);
        j[elb as usize] = add(
            j[shoul as usize],
            mat_apply(&r_sh, &scale3(down, UPPER_ARM_LEN * scale)),
        );
        j[wri as usize] = add(
            j[elb as usize],
            mat_apply(&r_el, &scale3(down, FOREARM_LEN * scale)),
        );
        j[hand as usize] = add(
            j[wri as usize],
            mat_apply(&r_el, &scale3(down, HAND_LEN * scale)),
        );
        j[tip as usize] = add(
            j[hand as usize],
            mat_apply(&r_el, &scale3(down, HANDTIP_LEN * scale)),
        );
        j[thumb as usize] = add(j[wri as usize], mat_apply(&r_el, &s(side(THUMB_OFF))));
    }

    // trunk rotation is rigid about the pelvis, so every joint moves
    let trunk = mat_mul(&rot_y(pose.trunk_yaw), &rot_x(pose.trunk_pitch));
    for p in &mut j {
        *p = mat_apply(&trunk, p);
    }
    j
}

/// Clavicle-subtree angle that raises the right shoulder by exactly
/// `lift` meters, solved by bisection. `scale` is the subject bone scale.
pub(crate) fn solve_elevation_angle(lift: f64, scale: f64) -> f64 {
    let v = [
        (CLAVICLE_OFF[0] + SHOULDER_OFF[0]) * scale,
        (CLAVICLE_OFF[1] + SHOULDER_OFF[1]) * scale,
    ];
    let rise = |theta: f64| v[0] * theta.sin() + v[1] * (theta.cos() - 1.0);
    // rise is monotonic on [0, atan(v0/v1)], its maximum
    let hi_limit = (v[0] / v[1]).atan();
    debug_assert!(lift <= rise(hi_limit), "lift {lift} unreachable");
    let (mut lo, mut hi) = (0.0, hi_limit);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rise(mid) < lift {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The three fixed camera yaw angles (radians): front and the two 45
/// degree obliques.
pub(crate) const VIEW_ANGLES: [f64; 3] = [
    0.0,
    std::f64::consts::FRAC_PI_4,
    -std::f64::consts::FRAC_PI_4,
];

/// Camera offset: subject centered 2.5 m in front of each camera.
pub(crate) const VIEW_OFFSET: Vec3 = [0.0, 0.0, 2.5];

pub(crate) fn view_transform(view: usize, p: &Vec3) -> Vec3 {
    let r = mat_apply(&rot_y(VIEW_ANGLES[view]), p);
    add(r, VIEW_OFFSET)
}

pub(crate) fn view_untransform(view: usize, p: &Vec3) -> Vec3 {
    let centered = [
        p[0] - VIEW_OFFSET[0],
        p[1] - VIEW_OFFSET[1],
        p[2] - VIEW_OFFSET[2],
    ];
    mat_apply(&rot_y(-VIEW_ANGLES[view]), &centered)
}
