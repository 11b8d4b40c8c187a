//! Phase segmentation: seated / walking / turning intervals for one trial.
//!
//! Two signals drive the split. The hip-center depth `z1` is maximal and
//! flat while the subject sits and reaches its global minimum mid-turn
//! (the turn point). The absolute x-distance between the elbows collapses
//! while the torso rotates, which bounds the turning phase. Walking is
//! everything left over.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{Joint, Session};

/// Minimum fraction of frames in which a signal's joints must be tracked.
pub const TRACKING_MIN_RATIO: f64 = 0.9;

/// Below this hip-depth range the subject never left the chair region and
/// segmentation refuses to guess.
pub const DEGENERATE_RANGE_MIN_M: f64 = 0.2;

/// A named scalar signal sampled at the session's timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub name: String,
    pub timestamps: Vec<u64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, timestamps: Vec<u64>, values: Vec<f64>) -> Result<TimeSeries> {
        if timestamps.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: timestamps.len(),
                got: values.len(),
            });
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams(
                "time series timestamps must be strictly increasing".into(),
            ));
        }
        Ok(TimeSeries {
            name: name.into(),
            timestamps,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Inclusive frame-index interval: `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameInterval {
    pub start: usize,
    pub end: usize,
}

impl FrameInterval {
    pub fn new(start: usize, end: usize) -> FrameInterval {
        debug_assert!(start <= end);
        FrameInterval { start, end }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }

    pub fn frame_count(&self) -> usize {
        self.end - self.start + 1
    }
}

/// Tunable thresholds. The signals they apply to come from the protocol;
/// the constants themselves are explicit so they can be audited and swept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    /// Seated membership band as a fraction of the hip-depth range.
    pub seated_band_frac: f64,
    /// Minimum duration for a seated run to count.
    pub seated_min_duration_s: f64,
    /// Turn boundary: fraction of the walking elbow-distance baseline the
    /// signal must re-attain.
    pub turn_recovery_frac: f64,
    /// Hysteresis amplitude for step detection.
    pub step_amplitude_m: f64,
}

impl Default for SegmentationParams {
    fn default() -> SegmentationParams {
        SegmentationParams {
            seated_band_frac: 0.05,
            seated_min_duration_s: 0.5,
            turn_recovery_frac: 0.8,
            step_amplitude_m: 0.05,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        let frac_ok = |v: f64| v > 0.0 && v < 1.0;
        if !frac_ok(self.seated_band_frac) {
            return Err(Error::InvalidParams(format!(
                "seated_band_frac must be in (0,1), got {}",
                self.seated_band_frac
            )));
        }
        if !frac_ok(self.turn_recovery_frac) {
            return Err(Error::InvalidParams(format!(
                "turn_recovery_frac must be in (0,1), got {}",
                self.turn_recovery_frac
            )));
        }
        if self.seated_min_duration_s < 0.0 || !self.seated_min_duration_s.is_finite() {
            return Err(Error::InvalidParams(format!(
                "seated_min_duration_s must be non-negative, got {}",
                self.seated_min_duration_s
            )));
        }
        if self.step_amplitude_m < 0.0 || !self.step_amplitude_m.is_finite() {
            return Err(Error::InvalidParams(format!(
                "step_amplitude_m must be non-negative, got {}",
                self.step_amplitude_m
            )));
        }
        Ok(())
    }
}

/// Phase of a single frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Seated,
    Walking,
    Turning,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Seated => "seated",
            Phase::Walking => "walking",
            Phase::Turning => "turning",
        }
    }
}

/// The three-phase partition of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSegmentation {
    pub seated: Vec<FrameInterval>,
    pub turning: FrameInterval,
    pub walking: Vec<FrameInterval>,
    pub turn_point: usize,
    /// Set when the elbow signal never re-attained the recovery threshold
    /// on the corresponding side and the turn boundary was clamped.
    pub turn_clamped_before: bool,
    pub turn_clamped_after: bool,
}

impl PhaseSegmentation {
    pub fn phase_of(&self, frame: usize) -> Option<Phase> {
        if self.turning.contains(frame) {
            return Some(Phase::Turning);
        }
        if self.seated.iter().any(|iv| iv.contains(frame)) {
            return Some(Phase::Seated);
        }
        if self.walking.iter().any(|iv| iv.contains(frame)) {
            return Some(Phase::Walking);
        }
        None
    }

    /// Checks the partition invariants over `n` frames: every frame in
    /// exactly one phase, intervals sorted and disjoint, turn point inside
    /// the turning interval, and seated intervals (when present) at the
    /// sequence extremes.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut owner = vec![0u8; n];
        let mut mark = |iv: &FrameInterval| -> Result<()> {
            if iv.end >= n {
                return Err(Error::InvalidParams(format!(
                    "interval {}..={} exceeds frame count {}",
                    iv.start, iv.end, n
                )));
            }
            for i in iv.start..=iv.end {
                owner[i] += 1;
            }
            Ok(())
        };
        for iv in &self.seated {
            mark(iv)?;
        }
        for iv in &self.walking {
            mark(iv)?;
        }
        mark(&self.turning)?;
        if let Some(i) = owner.iter().position(|&c| c != 1) {
            return Err(Error::InvalidParams(format!(
                "frame {} belongs to {} phases",
                i, owner[i]
            )));
        }
        if !self.turning.contains(self.turn_point) {
            return Err(Error::InvalidParams(
                "turn point outside turning interval".into(),
            ));
        }
        // Seated intervals, when present, sit at the sequence extremes.
        for iv in &self.seated {
            if iv.start != 0 && iv.end != n - 1 {
                return Err(Error::InvalidParams(format!(
                    "seated interval {}..={} is not at a sequence extreme",
                    iv.start, iv.end
                )));
            }
        }
        Ok(())
    }
}

fn signal_from_session(
    session: &Session,
    joints: &[Joint],
    name: &str,
    f: impl Fn(&crate::skeleton::SkeletonFrame) -> f64,
) -> Result<TimeSeries> {
    for &j in joints {
        let ratio = session.tracking_ratio(j);
        if ratio < TRACKING_MIN_RATIO {
            return Err(Error::InsufficientTracking {
                joint: j.name(),
                ratio: ratio * 100.0,
                required: TRACKING_MIN_RATIO * 100.0,
            });
        }
    }
    let timestamps = session.frames.iter().map(|fr| fr.t_ms).collect();
    let values = session.frames.iter().map(f).collect();
    TimeSeries::new(name, timestamps, values)
}

/// Depth of the hip-center joint per frame.
pub fn hip_depth_signal(session: &Session) -> Result<TimeSeries> {
    signal_from_session(session, &[Joint::HipCenter], "hip_depth_z1", |fr| {
        fr.position(Joint::HipCenter)[2]
    })
}

/// Absolute x-distance between the elbows per frame.
pub fn elbow_xdistance_signal(session: &Session) -> Result<TimeSeries> {
    signal_from_session(
        session,
        &[Joint::ElbowRight, Joint::ElbowLeft],
        "elbow_xdistance",
        |fr| (fr.position(Joint::ElbowRight)[0] - fr.position(Joint::ElbowLeft)[0]).abs(),
    )
}

/// Frame index of the global minimum of `z1`; ties break to the earliest.
pub fn find_turn_point(z1: &TimeSeries) -> Result<usize> {
    if z1.is_empty() {
        return Err(Error::EmptySession);
    }
    let mut best = 0;
    for (i, &v) in z1.values.iter().enumerate() {
        if v < z1.values[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Maximal runs where `z1` stays within the seated band near its maximum,
/// filtered to runs lasting at least `seated_min_duration_s`; at most one
/// run before the turn point (the initial seated phase) and one after
/// (the final one) are retained.
pub fn detect_seated_phases(
    z1: &TimeSeries,
    params: &SegmentationParams,
) -> Result<Vec<FrameInterval>> {
    params.validate()?;
    if z1.is_empty() {
        return Err(Error::EmptySession);
    }
    let max = z1.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = z1.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if range < DEGENERATE_RANGE_MIN_M {
        return Err(Error::DegenerateRange {
            range_m: range,
            min_m: DEGENERATE_RANGE_MIN_M,
        });
    }
    let threshold = max - params.seated_band_frac * range;
    let turn_point = find_turn_point(z1)?;

    let mut runs = Vec::new();
    let mut i = 0;
    let n = z1.len();
    while i < n {
        if z1.values[i] < threshold {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && z1.values[i] >= threshold {
            i += 1;
        }
        let iv = FrameInterval::new(start, i - 1);
        let duration_ms = z1.timestamps[iv.end] - z1.timestamps[iv.start];
        if duration_ms as f64 >= params.seated_min_duration_s * 1000.0 {
            runs.push(iv);
        }
    }

    // The global minimum is strictly below the band, so no run contains the
    // turn point; keep the first run before it and the last run after it.
    let mut retained = Vec::new();
    if let Some(&first) = runs.iter().find(|iv| iv.end < turn_point) {
        retained.push(first);
    }
    if let Some(&last) = runs.iter().rev().find(|iv| iv.start > turn_point) {
        retained.push(last);
    }
    Ok(retained)
}

/// Result of [`detect_turning_phase`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnDetection {
    pub interval: FrameInterval,
    /// False when the elbow signal never re-attained the recovery
    /// threshold on that side and the boundary was clamped.
    pub recovered_before: bool,
    pub recovered_after: bool,
}

/// Bounds the turning phase around the turn point.
///
/// Scanning backward from the turn point, the turn starts one frame after
/// the last frame whose elbow distance still reached
/// `turn_recovery_frac * walking_baseline`; the end is found symmetrically
/// scanning forward. The returned interval always contains the turn point;
/// with no dip at all it degenerates to the single frame at the turn point.
pub fn detect_turning_phase(
    elbow: &TimeSeries,
    turn_point: usize,
    walking_baseline: f64,
    params: &SegmentationParams,
) -> Result<TurnDetection> {
    params.validate()?;
    if turn_point >= elbow.len() {
        return Err(Error::InvalidParams(format!(
            "turn point {} outside series of length {}",
            turn_point,
            elbow.len()
        )));
    }
    if walking_baseline < 0.0 || !walking_baseline.is_finite() {
        return Err(Error::InvalidParams(format!(
            "walking baseline must be non-negative, got {}",
            walking_baseline
        )));
    }
    let threshold = params.turn_recovery_frac * walking_baseline;

    let mut start = 0;
    let mut recovered_before = false;
    for i in (0..turn_point).rev() {
        if elbow.values[i] >= threshold {
            start = i + 1;
            recovered_before = true;
            break;
        }
    }
    let mut end = elbow.len() - 1;
    let mut recovered_after = false;
    for (i, &v) in elbow.values.iter().enumerate().skip(turn_point + 1) {
        if v >= threshold {
            end = i - 1;
            recovered_after = true;
            break;
        }
    }
    Ok(TurnDetection {
        interval: FrameInterval::new(start, end),
        recovered_before,
        recovered_after,
    })
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Composes the full segmentation for one preprocessed session.
///
/// The walking baseline for turn detection is the median elbow distance
/// over the pre-turn walking region. The retained initial and final seated
/// runs are anchored to the sequence extremes (the protocol starts and
/// ends in the chair), and walking is the complement of seated and turning.
pub fn segment_phases(session: &Session, params: &SegmentationParams) -> Result<PhaseSegmentation> {
    params.validate()?;
    if session.frames.is_empty() {
        return Err(Error::EmptySession);
    }
    let n = session.frames.len();
    let z1 = hip_depth_signal(session)?;
    let elbow = elbow_xdistance_signal(session)?;
    let turn_point = find_turn_point(&z1)?;
    let mut seated = detect_seated_phases(&z1, params)?;

    // Anchor retained seated runs to the extremes so isolated noise frames
    // at the very start or end cannot end up labeled walking.
    let mut initial_seated_end: Option<usize> = None;
    let mut final_seated_start: Option<usize> = None;
    for iv in &mut seated {
        if iv.end < turn_point {
            iv.start = 0;
            initial_seated_end = Some(iv.end);
        } else {
            iv.end = n - 1;
            final_seated_start = Some(iv.start);
        }
    }

    // Pre-turn walking region: after the initial seated run, up to (not
    // including) the turn point.
    let pre_walk_start = initial_seated_end.map_or(0, |e| e + 1);
    let pre_walk_end = turn_point.saturating_sub(1);
    let mut baseline_window: Vec<f64> = if pre_walk_start <= pre_walk_end {
        elbow.values[pre_walk_start..=pre_walk_end].to_vec()
    } else {
        elbow.values[..=turn_point].to_vec()
    };
    let walking_baseline = median(&mut baseline_window);

    let detection = detect_turning_phase(&elbow, turn_point, walking_baseline, params)?;
    let mut turning = detection.interval;
    // Keep the turn inside the non-seated region.
    if let Some(e) = initial_seated_end {
        turning.start = turning.start.max(e + 1);
    }
    if let Some(s) = final_seated_start {
        turning.end = turning.end.min(s - 1);
    }

    // Walking is the complement of seated and turning.
    let mut covered = vec![false; n];
    for iv in seated.iter().chain([&turning]) {
        for i in iv.start..=iv.end {
            covered[i] = true;
        }
    }
    let mut walking = Vec::new();
    let mut i = 0;
    while i < n {
        if covered[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && !covered[i] {
            i += 1;
        }
        walking.push(FrameInterval::new(start, i - 1));
    }

    let seg = PhaseSegmentation {
        seated,
        turning,
        walking,
        turn_point,
        turn_clamped_before: !detection.recovered_before,
        turn_clamped_after: !detection.recovered_after,
    };
    debug_assert!(seg.validate(n).is_ok());
    Ok(seg)
}

/// Renders one signal plus its per-frame phase as `t_ms,value,phase` CSV,
/// ready for any plotting tool.
pub fn phase_csv(signal: &TimeSeries, seg: &PhaseSegmentation) -> String {
    let mut out = String::from("t_ms,value,phase\n");
    for (i, (&t, &v)) in signal.timestamps.iter().zip(&signal.values).enumerate() {
        let phase = seg.phase_of(i).map_or("unknown", Phase::as_str);
        let _ = writeln!(out, "{},{},{}", t, v, phase);
    }
    out
}
