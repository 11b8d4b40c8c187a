//! Parameterized kinematic generator of synthetic trial sessions with
//! exact ground truth.
//!
//! The script is the clinical protocol at desk scale: sit, stand up, walk
//! toward the sensor, turn in place, walk back, sit down. Every signal the
//! pipeline extracts is engineered with analytically known structure:
//!
//! * hip depth: seated plateau, a quick stand-up shift of the hips toward
//!   the sensor, a linear approach with a small per-step surge, a flat
//!   minimum during the turn, then the mirror image going back;
//! * heel depth difference: a cosine waveform phase-locked to the step
//!   script, so zero crossings land exactly at mid-step, tapered to zero
//!   at the walk edges;
//! * elbow x-distance: a linear V-dip to zero across the turn, produced by
//!   rotating the torso yaw through 180 degrees with a fast pivot at each
//!   end of the turn.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use crate::segmentation::FrameInterval;
use crate::skeleton::{Joint, Label, LabeledDataset, Session, SkeletonFrame, JOINT_COUNT};

/// Hip shift toward the sensor when standing up from the chair (the hips
/// sit deep in the seat), and the time the stand-up / sit-down takes.
const HIP_SIT_OFFSET_M: f64 = 0.12;
const STAND_TRANSITION_S: f64 = 0.15;

/// Depth surge per step during walking (forward progress is not constant).
const HIP_BOUNCE_M: f64 = 0.015;

/// Torso pivot time at each end of the turn; most of the turn is spent
/// stepping around facing sideways.
const TURN_PIVOT_S: f64 = 0.15;

/// Scripted kinematic profile for one synthetic trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitProfile {
    pub chair_distance_m: f64,
    pub walk_distance_m: f64,
    pub seated_lead_s: f64,
    pub seated_tail_s: f64,
    pub step_count_oneway: usize,
    pub step_duration_s: f64,
    pub stride_m: f64,
    pub turn_duration_s: f64,
    pub shoulder_width_m: f64,
    pub sway_amp_m: f64,
    pub noise_std_m: f64,
    /// Probability per joint per frame of a simulated tracking dropout.
    pub dropout_rate: f64,
    pub fps: u32,
}

impl Default for GaitProfile {
    fn default() -> GaitProfile {
        GaitProfile {
            chair_distance_m: 3.5,
            walk_distance_m: 2.0,
            seated_lead_s: 2.0,
            seated_tail_s: 2.0,
            step_count_oneway: 8,
            step_duration_s: 0.6,
            stride_m: 0.25,
            turn_duration_s: 1.5,
            shoulder_width_m: 0.4,
            sway_amp_m: 0.02,
            noise_std_m: 0.0,
            dropout_rate: 0.0,
            fps: 30,
        }
    }
}

impl GaitProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProfile(msg));
        if !(self.chair_distance_m > 0.0 && self.walk_distance_m > 0.0) {
            return bad("chair and walk distances must be positive".into());
        }
        if self.chair_distance_m - self.walk_distance_m < 0.5 {
            return bad(format!(
                "walk distance {} leaves less than 0.5 m to the sensor",
                self.walk_distance_m
            ));
        }
        if self.seated_lead_s < 0.5 || self.seated_tail_s < 0.5 {
            return bad("seated lead/tail must be at least 0.5 s".into());
        }
        if self.step_count_oneway > 0 {
            if !(0.1..=5.0).contains(&self.step_duration_s) {
                return bad(format!("step duration {} s out of range", self.step_duration_s));
            }
            if self.stride_m <= 0.0 {
                return bad("stride must be positive".into());
            }
            let scripted = self.step_count_oneway as f64 * self.stride_m;
            if (scripted - self.walk_distance_m).abs() > 0.1 * self.walk_distance_m {
                return bad(format!(
                    "step_count * stride = {:.3} m does not match walk distance {} m within 10%",
                    scripted, self.walk_distance_m
                ));
            }
        }
        if self.turn_duration_s < 0.2 {
            return bad(format!("turn duration {} s too short", self.turn_duration_s));
        }
        if !(0.1..=1.0).contains(&self.shoulder_width_m) {
            return bad(format!("shoulder width {} m out of range", self.shoulder_width_m));
        }
        if !(0.0..=0.2).contains(&self.sway_amp_m) {
            return bad(format!("sway amplitude {} m out of range", self.sway_amp_m));
        }
        if !(0.0..=0.1).contains(&self.noise_std_m) {
            return bad(format!("noise std {} m out of range", self.noise_std_m));
        }
        if !(0.0..=0.2).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} out of range", self.dropout_rate));
        }
        if !(15..=240).contains(&self.fps) {
            return bad(format!("fps {} out of range", self.fps));
        }
        Ok(())
    }
}

/// Exact script timing and crossings for one generated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seated_lead: FrameInterval,
    /// Walk toward the sensor, including the stand-up transition.
    pub walk_out: FrameInterval,
    pub turn: FrameInterval,
    /// Walk back to the chair, including the sit-down transition.
    pub walk_back: FrameInterval,
    pub seated_tail: FrameInterval,
    /// Frames where the noise-free heel-difference waveform changes sign.
    pub crossing_frames: Vec<usize>,
    pub step_count: usize,
    pub step_duration_s: f64,
    pub turn_duration_s: f64,
    pub frame_count: usize,
}

impl GroundTruth {
    pub fn phase_intervals(&self) -> [FrameInterval; 5] {
        [
            self.seated_lead,
            self.walk_out,
            self.turn,
            self.walk_back,
            self.seated_tail,
        ]
    }
}

struct Script {
    lead_end: f64,
    steps_out_start: f64,
    turn_start: f64,
    turn_end: f64,
    steps_back_end: f64,
    sit_end: f64,
    total: f64,
}

impl Script {
    fn new(p: &GaitProfile) -> Script {
        let walk = p.step_count_oneway as f64 * p.step_duration_s;
        let lead_end = p.seated_lead_s;
        let steps_out_start = lead_end + STAND_TRANSITION_S;
        let turn_start = steps_out_start + walk;
        let turn_end = turn_start + p.turn_duration_s;
        let steps_back_end = turn_end + walk;
        let sit_end = steps_back_end + STAND_TRANSITION_S;
        Script {
            lead_end,
            steps_out_start,
            turn_start,
            turn_end,
            steps_back_end,
            sit_end,
            total: sit_end + p.seated_tail_s,
        }
    }
}

/// Hip depth at time `t`.
fn hip_depth(p: &GaitProfile, s: &Script, t: f64) -> f64 {
    let chair = p.chair_distance_m;
    let stood = chair - HIP_SIT_OFFSET_M;
    // With zero steps the subject stands up and turns in place.
    let near = if p.step_count_oneway > 0 {
        chair - p.walk_distance_m
    } else {
        stood
    };
    let travel = stood - near;
    let walk = s.turn_start - s.steps_out_start;
    // Cap the surge so depth never undershoots the turn minimum.
    let bounce_amp = if p.step_count_oneway > 0 {
        HIP_BOUNCE_M.min(0.4 * travel / (2.0 * p.step_count_oneway as f64))
    } else {
        0.0
    };
    let bounce = |u: f64| bounce_amp * (1.0 - (2.0 * std::f64::consts::PI * u / p.step_duration_s).cos()) / 2.0;

    if t < s.lead_end {
        chair
    } else if t < s.steps_out_start {
        chair - HIP_SIT_OFFSET_M * (t - s.lead_end) / STAND_TRANSITION_S
    } else if t < s.turn_start {
        let u = t - s.steps_out_start;
        stood - travel * u / walk - bounce(u)
    } else if t < s.turn_end {
        near
    } else if t < s.steps_back_end {
        let u = t - s.turn_end;
        near + travel * u / walk + bounce(u)
    } else if t < s.sit_end {
        stood + HIP_SIT_OFFSET_M * (t - s.steps_back_end) / STAND_TRANSITION_S
    } else {
        chair
    }
}

/// Heel depth difference at time `t` (noise-free).
///
/// A cosine with period 2 * step_duration, so zero crossings land at
/// mid-step (feet passing each other) and every crossing has a full-width,
/// full-amplitude lobe on both sides. The wave extends half a step beyond
/// the stepping window on each side (clipped to half the turn), which lets
/// it start and end at exactly zero: the feet begin separating as the
/// stand-up finishes and come together again during the turn.
fn heel_difference(p: &GaitProfile, s: &Script, t: f64) -> f64 {
    if p.step_count_oneway == 0 {
        return 0.0;
    }
    let amplitude = p.stride_m / 2.0;
    let sd = p.step_duration_s;
    let walk = p.step_count_oneway as f64 * sd;
    let half = sd / 2.0;
    let turn_clip = (p.turn_duration_s / 2.0).min(half);

    let v_out = t - s.steps_out_start;
    if (-half..walk + turn_clip).contains(&v_out) {
        return amplitude * (std::f64::consts::PI * v_out / sd).cos();
    }
    let v_back = t - s.turn_end;
    if (-turn_clip..walk + half).contains(&v_back) {
        return amplitude * (std::f64::consts::PI * v_back / sd).cos();
    }
    0.0
}

/// Torso yaw cosine/sine at time `t`. The elbow x-distance is
/// `shoulder * |cos|`, a linear V-dip across the turn.
fn torso_yaw(p: &GaitProfile, s: &Script, t: f64) -> (f64, f64) {
    if t < s.turn_start {
        return (1.0, 0.0);
    }
    if t >= s.turn_end {
        return (-1.0, 0.0);
    }
    let u = t - s.turn_start;
    let turn = p.turn_duration_s;
    let w = TURN_PIVOT_S.min(turn / 4.0);
    let cos = if u < w {
        1.0 - u / w
    } else if u > turn - w {
        -(1.0 - (turn - u) / w)
    } else {
        0.0
    };
    (cos, (1.0 - cos * cos).max(0.0).sqrt())
}

/// Knee bend offset (how far the knee juts forward of the hip-ankle line).
fn knee_bend(p: &GaitProfile, s: &Script, t: f64, left: bool) -> f64 {
    if t < s.lead_end || t >= s.steps_back_end {
        return 0.18; // seated or sitting down: deep flexion
    }
    let in_steps = (t >= s.steps_out_start && t < s.turn_start)
        || (t >= s.turn_end && t < s.steps_back_end);
    if !in_steps || p.step_count_oneway == 0 {
        return 0.05;
    }
    let u = if t < s.turn_start {
        t - s.steps_out_start
    } else {
        t - s.turn_end
    };
    let phase = std::f64::consts::PI * u / p.step_duration_s + if left { std::f64::consts::PI } else { 0.0 };
    0.03 + 0.05 * phase.sin().abs()
}

/// Static body-frame offsets (x lateral, y up, z anterior) for the eleven
/// joints the pipeline never interprets.
const OPAQUE_JOINTS: [(usize, [f64; 3]); 11] = [
    (0, [0.0, -0.05, 0.0]),
    (2, [0.0, 0.35, 0.0]),
    (3, [0.0, 0.55, 0.02]),
    (4, [-0.20, 0.30, 0.0]),
    (5, [-0.23, 0.18, 0.0]),
    (7, [-0.24, -0.05, 0.02]),
    (8, [-0.25, -0.10, 0.04]),
    (9, [0.20, 0.30, 0.0]),
    (11, [0.24, -0.05, 0.02]),
    (12, [0.25, -0.10, 0.04]),
    (16, [-0.10, 0.02, 0.06]),
];

/// Generates one session plus its exact ground truth.
///
/// All GroundTruth fields are exact by construction: phase boundaries come
/// from the script timing, and crossing frames from a sign scan of the
/// noise-free heel waveform (noise, when enabled, is added afterwards).
pub fn generate_session(profile: &GaitProfile, seed: u64) -> Result<(Session, GroundTruth)> {
    profile.validate()?;
    let script = Script::new(profile);
    let fps = profile.fps as f64;
    let n = (script.total * fps).round() as usize;
    if n == 0 {
        return Err(Error::InvalidProfile("script produces zero frames".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if profile.noise_std_m > 0.0 {
        Some(Normal::new(0.0, profile.noise_std_m).expect("validated std"))
    } else {
        None
    };

    let mut session = Session::new("synthetic", format!("seed-{seed}"), Label::Unlabeled);
    session.fps_hint = Some(fps);
    let mut clean_heel_diff = Vec::with_capacity(n);

    let half_shoulder = profile.shoulder_width_m / 2.0;
    for i in 0..n {
        let t = i as f64 / fps;
        let t_ms = ((i as u64) * 1000 + profile.fps as u64 / 2) / profile.fps as u64;

        let z_c = hip_depth(profile, &script, t);
        let diff = heel_difference(profile, &script, t);
        clean_heel_diff.push(diff);
        let (cos_yaw, sin_yaw) = torso_yaw(profile, &script, t);

        // Lateral sway translates the whole body; it cancels out of every
        // signal the pipeline reads.
        let in_steps = (t >= script.steps_out_start && t < script.turn_start)
            || (t >= script.turn_end && t < script.steps_back_end);
        let sway = if in_steps && profile.step_count_oneway > 0 {
            let u = if t < script.turn_start {
                t - script.steps_out_start
            } else {
                t - script.turn_end
            };
            profile.sway_amp_m * (std::f64::consts::PI * u / profile.step_duration_s).sin()
        } else {
            0.0
        };

        // Rotation about the vertical axis through the torso center.
        let place = |bx: f64, by: f64, bz: f64| -> [f64; 3] {
            [
                sway + bx * cos_yaw + bz * sin_yaw,
                0.85 + by,
                z_c - bx * sin_yaw + bz * cos_yaw,
            ]
        };

        let mut positions = vec![[0.0; 3]; JOINT_COUNT];
        for (idx, off) in OPAQUE_JOINTS {
            positions[idx] = place(off[0], off[1], off[2]);
        }
        positions[Joint::HipCenter.index()] = place(0.0, 0.0, 0.0);
        positions[Joint::ElbowRight.index()] = place(-half_shoulder, 0.25, 0.0);
        positions[Joint::ElbowLeft.index()] = place(half_shoulder, 0.25, 0.0);
        positions[Joint::HipRight.index()] = place(-0.10, -0.12, 0.0);
        positions[Joint::HipLeft.index()] = place(0.10, -0.12, 0.0);

        // Ankle depths carry the heel-difference waveform directly.
        let mut ankle_r = place(-0.10, -0.73, 0.0);
        let mut ankle_l = place(0.10, -0.73, 0.0);
        ankle_r[2] = z_c + diff / 2.0;
        ankle_l[2] = z_c - diff / 2.0;
        positions[Joint::AnkleRight.index()] = ankle_r;
        positions[Joint::AnkleLeft.index()] = ankle_l;

        // Knees jut forward of the hip-ankle midpoint by the bend offset.
        for (hip, ankle, knee, left) in [
            (Joint::HipRight, Joint::AnkleRight, Joint::KneeRight, false),
            (Joint::HipLeft, Joint::AnkleLeft, Joint::KneeLeft, true),
        ] {
            let bend = knee_bend(profile, &script, t, left);
            let h = positions[hip.index()];
            let a = positions[ankle.index()];
            positions[knee.index()] = [
                (h[0] + a[0]) / 2.0 - bend * sin_yaw,
                (h[1] + a[1]) / 2.0,
                (h[2] + a[2]) / 2.0 - bend * cos_yaw,
            ];
        }

        if let Some(dist) = noise {
            for pos in &mut positions {
                for c in pos.iter_mut() {
                    *c += dist.sample(&mut rng);
                }
            }
        }

        let mut tracked = vec![true; JOINT_COUNT];
        if profile.dropout_rate > 0.0 {
            for flag in tracked.iter_mut() {
                if rng.random_range(0.0..1.0) < profile.dropout_rate {
                    *flag = false;
                }
            }
        }

        session.frames.push(SkeletonFrame::new(t_ms, positions, tracked));
    }

    // Script boundaries -> frame intervals. Frame i samples time i/fps.
    let first_frame_at = |time: f64| -> usize { ((time * fps - 1e-9).ceil() as usize).min(n - 1) };
    let lead_end = first_frame_at(script.lead_end);
    let turn_start = first_frame_at(script.turn_start);
    let turn_end = first_frame_at(script.turn_end);
    let sit_end = first_frame_at(script.sit_end);

    // True crossings: sign scan of the noise-free waveform inside the
    // scripted walking ranges (zeros extend the preceding sign's run).
    let mut crossing_frames = Vec::new();
    for range in [lead_end..turn_start, turn_end..sit_end] {
        let mut prev_sign: i8 = 0;
        for i in range {
            let v = clean_heel_diff[i];
            let sign: i8 = if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                prev_sign
            };
            if prev_sign != 0 && sign != 0 && sign != prev_sign {
                crossing_frames.push(i);
            }
            if sign != 0 {
                prev_sign = sign;
            }
        }
    }

    let truth = GroundTruth {
        seated_lead: FrameInterval::new(0, lead_end - 1),
        walk_out: FrameInterval::new(lead_end, turn_start - 1),
        turn: FrameInterval::new(turn_start, turn_end - 1),
        walk_back: FrameInterval::new(turn_end, sit_end - 1),
        seated_tail: FrameInterval::new(sit_end, n - 1),
        step_count: crossing_frames.len(),
        crossing_frames,
        step_duration_s: profile.step_duration_s,
        turn_duration_s: profile.turn_duration_s,
        frame_count: n,
    };
    Ok((session, truth))
}

/// Subject-level profile distribution: a base profile plus per-subject
/// draw ranges for the separating parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDistribution {
    pub base: GaitProfile,
    /// Inclusive range of steps one way, drawn per subject.
    pub step_count_range: (usize, usize),
    pub step_duration_range: (f64, f64),
    pub turn_duration_range: (f64, f64),
}

/// Cohort shape: two class distributions, subject counts, trials per subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortParams {
    pub low: ProfileDistribution,
    pub high: ProfileDistribution,
    pub subjects_low: usize,
    pub subjects_high: usize,
    /// Inclusive range of trials per subject.
    pub trials_range: (usize, usize),
}

impl CohortParams {
    /// A cohort whose classes are separable by construction: step-count
    /// and turn-duration distributions do not overlap.
    pub fn separable(subjects_low: usize, subjects_high: usize) -> CohortParams {
        let base = GaitProfile {
            noise_std_m: 0.005,
            ..GaitProfile::default()
        };
        CohortParams {
            low: ProfileDistribution {
                base: base.clone(),
                step_count_range: (6, 8),
                step_duration_range: (0.45, 0.55),
                turn_duration_range: (1.0, 1.5),
            },
            high: ProfileDistribution {
                base,
                step_count_range: (10, 12),
                step_duration_range: (0.70, 0.90),
                turn_duration_range: (2.5, 3.5),
            },
            subjects_low,
            subjects_high,
            trials_range: (3, 6),
        }
    }
}

fn draw_subject_profile(
    dist: &ProfileDistribution,
    rng: &mut ChaCha8Rng,
) -> (usize, f64, f64) {
    let steps = rng.random_range(dist.step_count_range.0..=dist.step_count_range.1);
    let sd = rng.random_range(dist.step_duration_range.0..dist.step_duration_range.1);
    let turn = rng.random_range(dist.turn_duration_range.0..dist.turn_duration_range.1);
    (steps, sd, turn)
}

/// Generates a labeled cohort with per-session ground truth.
///
/// Each subject draws a profile from its class distribution; each trial
/// jitters step and turn timing slightly around the subject's profile.
/// Deterministic for a fixed seed.
pub fn generate_cohort_with_truth(
    params: &CohortParams,
    seed: u64,
) -> Result<Vec<(Session, GroundTruth)>> {
    let mut out = Vec::new();
    let classes = [
        (&params.low, params.subjects_low, Label::LowRisk, "low"),
        (&params.high, params.subjects_high, Label::HighRisk, "high"),
    ];
    for (class_idx, (dist, count, label, prefix)) in classes.into_iter().enumerate() {
        for subj in 0..count {
            let subject_seed = derive_seed(seed, (class_idx as u64) << 32 | subj as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(subject_seed);
            let (steps, sd, turn) = draw_subject_profile(dist, &mut rng);
            let trials = rng.random_range(params.trials_range.0..=params.trials_range.1);
            let subject_id = format!("{}-{:02}", prefix, subj + 1);
            for trial in 0..trials {
                let jitter_sd = sd * rng.random_range(0.97..1.03);
                let jitter_turn = turn * rng.random_range(0.95..1.05);
                let profile = GaitProfile {
                    step_count_oneway: steps,
                    step_duration_s: jitter_sd,
                    stride_m: dist.base.walk_distance_m / steps as f64,
                    turn_duration_s: jitter_turn,
                    ..dist.base.clone()
                };
                let trial_seed = derive_seed(subject_seed, trial as u64 + 1);
                let (mut session, truth) = generate_session(&profile, trial_seed)?;
                session.subject_id = subject_id.clone();
                session.trial_id = format!("t{}", trial + 1);
                session.label = label;
                out.push((session, truth));
            }
        }
    }
    Ok(out)
}

/// [`generate_cohort_with_truth`] without the sidecar truths.
pub fn generate_cohort(params: &CohortParams, seed: u64) -> Result<LabeledDataset> {
    let sessions = generate_cohort_with_truth(params, seed)?
        .into_iter()
        .map(|(s, _)| s)
        .collect();
    LabeledDataset::new(sessions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::hip_depth_signal;

    #[test]
    fn frame_count_matches_script_arithmetic() {
        // Total script = 2 + 0.15 + 8*0.6 + 1.5 + 8*0.6 + 0.15 + 2 = 15.4 s.
        let profile = GaitProfile::default();
        let (session, truth) = generate_session(&profile, 1).unwrap();
        assert_eq!(session.frames.len(), (15.4f64 * 30.0).round() as usize);
        assert_eq!(truth.frame_count, session.frames.len());
    }

    #[test]
    fn ten_second_script_at_30fps_gives_300_frames() {
        let profile = GaitProfile {
            seated_lead_s: 2.0,
            seated_tail_s: 2.2,
            step_count_oneway: 4,
            step_duration_s: 0.5,
            stride_m: 0.5,
            turn_duration_s: 1.5,
            ..GaitProfile::default()
        };
        // 2 + 0.15 + 2 + 1.5 + 2 + 0.15 + 2.2 = 10 s.
        let (session, _) = generate_session(&profile, 0).unwrap();
        assert_eq!(session.frames.len(), 300);
        // Consecutive timestamp deltas stay on the ~33.3 ms grid.
        for w in session.frames.windows(2) {
            let dt = w[1].t_ms - w[0].t_ms;
            assert!((33..=34).contains(&dt), "delta {dt}");
        }
    }

    #[test]
    fn ground_truth_phases_partition_the_frames() {
        let (_, truth) = generate_session(&GaitProfile::default(), 5).unwrap();
        let intervals = truth.phase_intervals();
        let mut next = 0;
        for iv in intervals {
            assert_eq!(iv.start, next);
            next = iv.end + 1;
        }
        assert_eq!(next, truth.frame_count);
    }

    #[test]
    fn crossing_count_is_twice_the_oneway_steps() {
        for steps in [4usize, 8, 12] {
            let profile = GaitProfile {
                step_count_oneway: steps,
                stride_m: 2.0 / steps as f64,
                ..GaitProfile::default()
            };
            let (_, truth) = generate_session(&profile, 3).unwrap();
            assert_eq!(truth.step_count, 2 * steps, "steps={steps}");
            // All crossings inside the scripted walking phases.
            for &f in &truth.crossing_frames {
                assert!(truth.walk_out.contains(f) || truth.walk_back.contains(f));
            }
        }
    }

    #[test]
    fn seated_plateau_sits_at_chair_distance() {
        let (session, truth) = generate_session(&GaitProfile::default(), 9).unwrap();
        let z1 = hip_depth_signal(&session).unwrap();
        for i in truth.seated_lead.start..=truth.seated_lead.end {
            assert!((z1.values[i] - 3.5).abs() < 1e-12);
        }
    }

    #[test]
    fn hip_depth_decreases_during_approach_steps() {
        let (session, truth) = generate_session(&GaitProfile::default(), 2).unwrap();
        let z1 = hip_depth_signal(&session).unwrap();
        // Strictly decreasing at step boundaries (bounce vanishes there).
        let sd_frames = (0.6 * 30.0) as usize;
        let first_step = truth.walk_out.start + 5; // past the stand transition
        let mut prev = z1.values[first_step];
        let mut checked = 0;
        let mut i = first_step + sd_frames;
        while i < truth.turn.start {
            assert!(z1.values[i] < prev);
            prev = z1.values[i];
            i += sd_frames;
            checked += 1;
        }
        assert!(checked >= 5);
        // The minimum is inside the scripted turn.
        let turn_point = crate::segmentation::find_turn_point(&z1).unwrap();
        assert!(truth.turn.contains(turn_point), "turn point {turn_point}");
    }

    #[test]
    fn elbow_distance_dips_to_zero_mid_turn() {
        let (session, truth) = generate_session(&GaitProfile::default(), 4).unwrap();
        let elbow = crate::segmentation::elbow_xdistance_signal(&session).unwrap();
        let mid = (truth.turn.start + truth.turn.end) / 2;
        assert!(elbow.values[mid] < 0.01, "mid-turn elbow {}", elbow.values[mid]);
        // Baseline during walking equals the shoulder width.
        let walk_mid = (truth.walk_out.start + truth.walk_out.end) / 2;
        assert!((elbow.values[walk_mid] - 0.4).abs() < 1e-9);
        // Non-negative everywhere by definition.
        assert!(elbow.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn elbow_3d_distance_is_rotation_invariant() {
        let (session, _) = generate_session(&GaitProfile::default(), 6).unwrap();
        for frame in &session.frames {
            let a = frame.position(Joint::ElbowRight);
            let b = frame.position(Joint::ElbowLeft);
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            assert!((d - 0.4).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_step_variant_keeps_hip_near_chair() {
        let profile = GaitProfile {
            step_count_oneway: 0,
            ..GaitProfile::default()
        };
        let (session, _) = generate_session(&profile, 7).unwrap();
        let z1 = hip_depth_signal(&session).unwrap();
        let max = z1.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = z1.values.iter().cloned().fold(f64::INFINITY, f64::min);
        // Only the stand-up offset moves the hip: range stays degenerate.
        assert!(max - min < 0.2, "range {}", max - min);
    }

    #[test]
    fn same_seed_reproduces_identical_sessions() {
        let profile = GaitProfile {
            noise_std_m: 0.01,
            dropout_rate: 0.01,
            ..GaitProfile::default()
        };
        let (a, ta) = generate_session(&profile, 42).unwrap();
        let (b, tb) = generate_session(&profile, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let mut p = GaitProfile::default();
        p.walk_distance_m = 3.4; // less than 0.5 m left to the sensor
        assert!(matches!(
            generate_session(&p, 0),
            Err(Error::InvalidProfile(_))
        ));
        let mut p = GaitProfile::default();
        p.stride_m = 0.5; // 8 * 0.5 = 4.0 m != 2.0 m walk
        assert!(matches!(
            generate_session(&p, 0),
            Err(Error::InvalidProfile(_))
        ));
    }

    #[test]
    fn cohort_shape_and_determinism() {
        let params = CohortParams::separable(5, 7);
        let truth = generate_cohort_with_truth(&params, 11).unwrap();
        let dataset = LabeledDataset::new(truth.iter().map(|(s, _)| s.clone()).collect()).unwrap();
        assert_eq!(dataset.subjects().len(), 12);
        assert!(dataset.len() >= 36 && dataset.len() <= 72, "{}", dataset.len());
        let again = generate_cohort(&params, 11).unwrap();
        assert_eq!(again, dataset);

        let tiny = CohortParams {
            trials_range: (1, 1),
            ..CohortParams::separable(1, 1)
        };
        assert_eq!(generate_cohort(&tiny, 0).unwrap().len(), 2);
    }
}
