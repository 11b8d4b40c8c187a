//! Gait and anatomical feature extraction.
//!
//! Three trial-level gait numbers (step count, mean step duration, turn
//! duration) come from the heel depth-difference signal and the phase
//! segmentation. Four per-frame anatomical numbers (elbow distance, leg
//! angle, both knee angles) feed the bag-of-words encoder.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::{FrameInterval, PhaseSegmentation, SegmentationParams, TimeSeries};
use crate::skeleton::{Joint, Session};

/// Zero crossings of the heel-difference signal retained as steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEvents {
    /// Sorted frame indices, all inside walking intervals.
    pub crossing_frames: Vec<usize>,
    pub step_count: usize,
}

/// The three trial-level gait parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitFeatures {
    pub num_steps: usize,
    pub avg_step_duration_s: f64,
    pub turn_duration_s: f64,
}

/// The four per-frame anatomical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnatomicalFrameFeatures {
    pub elbow_distance_m: f64,
    pub leg_angle_rad: f64,
    pub knee_right_rad: f64,
    pub knee_left_rad: f64,
}

impl AnatomicalFrameFeatures {
    pub fn as_point(&self) -> [f64; 4] {
        [
            self.elbow_distance_m,
            self.leg_angle_rad,
            self.knee_right_rad,
            self.knee_left_rad,
        ]
    }
}

/// Signed depth difference between the two heels, `z15 - z19`, per frame.
pub fn heel_depth_difference(session: &Session) -> Result<TimeSeries> {
    for joint in [Joint::AnkleRight, Joint::AnkleLeft] {
        let ratio = session.tracking_ratio(joint);
        if ratio < crate::segmentation::TRACKING_MIN_RATIO {
            return Err(Error::InsufficientTracking {
                joint: joint.name(),
                ratio: ratio * 100.0,
                required: crate::segmentation::TRACKING_MIN_RATIO * 100.0,
            });
        }
    }
    let timestamps = session.frames.iter().map(|f| f.t_ms).collect();
    let values = session
        .frames
        .iter()
        .map(|f| f.position(Joint::AnkleRight)[2] - f.position(Joint::AnkleLeft)[2])
        .collect();
    TimeSeries::new("heel_depth_difference", timestamps, values)
}

#[derive(Debug, Clone, Copy)]
struct SignRun {
    sign: i8,
    start: usize,
    max_abs: f64,
}

/// Splits `values[iv]` into sign runs. Exact zeros join the preceding
/// sign's run; leading zeros form a sign-0 run that never produces a
/// crossing.
fn sign_runs(values: &[f64], iv: FrameInterval) -> Vec<SignRun> {
    let mut runs: Vec<SignRun> = Vec::new();
    for i in iv.start..=iv.end {
        let v = values[i];
        let s: i8 = if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            runs.last().map_or(0, |r| r.sign)
        };
        match runs.last_mut() {
            Some(last) if last.sign == s => {
                last.max_abs = last.max_abs.max(v.abs());
            }
            _ => runs.push(SignRun {
                sign: s,
                start: i,
                max_abs: v.abs(),
            }),
        }
    }
    runs
}

/// Counts zero crossings of the heel-difference signal inside the walking
/// intervals, with hysteresis.
///
/// A run of one sign is "confirmed" once its excursion reaches
/// `step_amplitude_m`; a step is a transition between consecutive confirmed
/// runs of opposite sign, so small sign flutter around zero never counts
/// and never splits a genuine crossing. The crossing frame is the first
/// frame of the new confirmed run. Zero steps is a valid outcome.
pub fn detect_steps(
    heel_diff: &TimeSeries,
    walking: &[FrameInterval],
    params: &SegmentationParams,
) -> StepEvents {
    let mut crossings = Vec::new();
    for &iv in walking {
        let runs = sign_runs(&heel_diff.values, iv);
        let mut prev_confirmed: Option<i8> = None;
        for run in runs {
            if run.sign == 0 || run.max_abs < params.step_amplitude_m {
                continue;
            }
            if let Some(prev) = prev_confirmed {
                if prev != run.sign {
                    crossings.push(run.start);
                }
            }
            prev_confirmed = Some(run.sign);
        }
    }
    StepEvents {
        step_count: crossings.len(),
        crossing_frames: crossings,
    }
}

/// Assembles the three gait parameters from the segmentation and steps.
///
/// The average step duration is the mean of timestamp deltas between
/// consecutive crossings within the same walking interval; pairs straddling
/// the turn measure turning, not stepping, and are excluded. Fewer than two
/// crossings in every walking interval leaves the average undefined and is
/// reported as `NoSteps` rather than a silent zero.
pub fn gait_features(
    seg: &PhaseSegmentation,
    steps: &StepEvents,
    session: &Session,
) -> Result<GaitFeatures> {
    let t = |frame: usize| session.frames[frame].t_ms as f64 / 1000.0;

    let mut deltas = Vec::new();
    for iv in &seg.walking {
        let in_interval: Vec<usize> = steps
            .crossing_frames
            .iter()
            .copied()
            .filter(|&f| iv.contains(f))
            .collect();
        for pair in in_interval.windows(2) {
            deltas.push(t(pair[1]) - t(pair[0]));
        }
    }
    if deltas.is_empty() {
        return Err(Error::NoSteps);
    }
    let avg_step_duration_s = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let turn_duration_s = t(seg.turning.end) - t(seg.turning.start);

    Ok(GaitFeatures {
        num_steps: steps.step_count,
        avg_step_duration_s,
        turn_duration_s,
    })
}

/// Angle between two 3-vectors in radians, in `[0, pi]`.
pub fn angle_between(u: [f64; 3], v: [f64; 3]) -> Result<f64> {
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let nu = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    let nv = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0).acos())
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = sub(a, b);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

const ANATOMICAL_JOINTS: [Joint; 9] = [
    Joint::HipCenter,
    Joint::ElbowRight,
    Joint::ElbowLeft,
    Joint::HipRight,
    Joint::KneeRight,
    Joint::AnkleRight,
    Joint::HipLeft,
    Joint::KneeLeft,
    Joint::AnkleLeft,
];

/// Computes the per-frame anatomical features.
///
/// Frames missing any required joint (or with degenerate zero-length limb
/// vectors) are skipped, not emitted, so the output can be shorter than the
/// session. Returns `(frame_index, features)` pairs.
pub fn anatomical_features(session: &Session) -> Vec<(usize, AnatomicalFrameFeatures)> {
    let mut out = Vec::with_capacity(session.frames.len());
    'frames: for (i, frame) in session.frames.iter().enumerate() {
        for joint in ANATOMICAL_JOINTS {
            if !frame.is_tracked(joint) {
                continue 'frames;
            }
        }
        let p = |j: Joint| frame.position(j);
        let hip = p(Joint::HipCenter);
        let leg_angle = angle_between(sub(p(Joint::KneeRight), hip), sub(p(Joint::KneeLeft), hip));
        let knee_right = angle_between(
            sub(p(Joint::HipRight), p(Joint::KneeRight)),
            sub(p(Joint::AnkleRight), p(Joint::KneeRight)),
        );
        let knee_left = angle_between(
            sub(p(Joint::HipLeft), p(Joint::KneeLeft)),
            sub(p(Joint::AnkleLeft), p(Joint::KneeLeft)),
        );
        let (leg_angle, knee_right, knee_left) = match (leg_angle, knee_right, knee_left) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            _ => continue,
        };
        out.push((
            i,
            AnatomicalFrameFeatures {
                elbow_distance_m: dist(p(Joint::ElbowRight), p(Joint::ElbowLeft)),
                leg_angle_rad: leg_angle,
                knee_right_rad: knee_right,
                knee_left_rad: knee_left,
            },
        ));
    }
    out
}

/// Per-frame anatomical features as `t_ms,elbow_m,leg_rad,kneeR_rad,kneeL_rad` CSV.
pub fn anatomical_csv(session: &Session, features: &[(usize, AnatomicalFrameFeatures)]) -> String {
    let mut out = String::from("t_ms,elbow_m,leg_rad,kneeR_rad,kneeL_rad\n");
    for (frame, f) in features {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            session.frames[*frame].t_ms,
            f.elbow_distance_m,
            f.leg_angle_rad,
            f.knee_right_rad,
            f.knee_left_rad
        );
    }
    out
}

/// Heel-difference signal with detected crossings marked, as
/// `t_ms,heel_diff_m,crossing` CSV.
pub fn heel_csv(heel_diff: &TimeSeries, steps: &StepEvents) -> String {
    let mut out = String::from("t_ms,heel_diff_m,crossing\n");
    for (i, (&t, &v)) in heel_diff.timestamps.iter().zip(&heel_diff.values).enumerate() {
        let crossing = if steps.crossing_frames.contains(&i) { 1 } else { 0 };
        let _ = writeln!(out, "{},{},{}", t, v, crossing);
    }
    out
}
