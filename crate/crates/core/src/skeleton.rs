//! Skeleton data model: joints, frames, sessions, and dataset validation.
//!
//! The skeleton is the 20-joint layout produced by the depth sensor at
//! 30 fps. Only nine joints have pinned semantic roles; the remaining
//! indices are carried opaquely so files stay structurally complete.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of joints per skeleton frame.
pub const JOINT_COUNT: usize = 20;

/// Semantic joint roles with fixed indices in the 20-joint layout.
///
/// These nine bindings are the only ones the pipeline relies on; every
/// other index is layout-dependent and never interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Joint {
    HipCenter,
    ElbowRight,
    ElbowLeft,
    HipRight,
    KneeRight,
    AnkleRight,
    HipLeft,
    KneeLeft,
    AnkleLeft,
}

impl Joint {
    /// Fixed index of this role in the 20-joint layout.
    pub const fn index(self) -> usize {
        match self {
            Joint::HipCenter => 1,
            Joint::ElbowRight => 6,
            Joint::ElbowLeft => 10,
            Joint::HipRight => 13,
            Joint::KneeRight => 14,
            Joint::AnkleRight => 15,
            Joint::HipLeft => 17,
            Joint::KneeLeft => 18,
            Joint::AnkleLeft => 19,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Joint::HipCenter => "HipCenter",
            Joint::ElbowRight => "ElbowR",
            Joint::ElbowLeft => "ElbowL",
            Joint::HipRight => "HipR",
            Joint::KneeRight => "KneeR",
            Joint::AnkleRight => "AnkleR",
            Joint::HipLeft => "HipL",
            Joint::KneeLeft => "KneeL",
            Joint::AnkleLeft => "AnkleL",
        }
    }

    pub const ALL: [Joint; 9] = [
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
}

/// Fall-risk label assigned per session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    LowRisk,
    HighRisk,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> Option<&'static str> {
        match self {
            Label::LowRisk => Some("low"),
            Label::HighRisk => Some("high"),
            Label::Unlabeled => None,
        }
    }

    pub fn from_str_opt(s: Option<&str>) -> Option<Label> {
        match s {
            None | Some("") => Some(Label::Unlabeled),
            Some("low") => Some(Label::LowRisk),
            Some("high") => Some(Label::HighRisk),
            Some(_) => None,
        }
    }

    /// Signed class value used by the classifier: LowRisk = -1, HighRisk = +1.
    pub fn signed(self) -> Option<f64> {
        match self {
            Label::LowRisk => Some(-1.0),
            Label::HighRisk => Some(1.0),
            Label::Unlabeled => None,
        }
    }

    /// Inverse of [`Label::signed`]. Zero maps to HighRisk, the
    /// conservative direction for a clinical screen.
    pub fn from_decision_value(v: f64) -> Label {
        if v < 0.0 {
            Label::LowRisk
        } else {
            Label::HighRisk
        }
    }
}

/// One timestamped sample of 20 joint positions.
///
/// Positions are camera coordinates in meters; `z` is distance from the
/// sensor. `tracked[i]` distinguishes a valid measurement from a dropout,
/// so downstream code never has to guess whether zero means "origin" or
/// "missing".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFrame {
    /// Milliseconds since session start.
    pub t_ms: u64,
    pub positions: Vec<[f64; 3]>,
    pub tracked: Vec<bool>,
}

impl SkeletonFrame {
    pub fn new(t_ms: u64, positions: Vec<[f64; 3]>, tracked: Vec<bool>) -> SkeletonFrame {
        SkeletonFrame {
            t_ms,
            positions,
            tracked,
        }
    }

    pub fn position(&self, joint: Joint) -> [f64; 3] {
        self.positions[joint.index()]
    }

    pub fn is_tracked(&self, joint: Joint) -> bool {
        self.tracked[joint.index()]
    }
}

/// An ordered frame sequence for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub subject_id: String,
    pub trial_id: String,
    pub label: Label,
    pub fps_hint: Option<f64>,
    pub frames: Vec<SkeletonFrame>,
}

impl Session {
    pub fn new(subject_id: impl Into<String>, trial_id: impl Into<String>, label: Label) -> Session {
        Session {
            subject_id: subject_id.into(),
            trial_id: trial_id.into(),
            label,
            fps_hint: None,
            frames: Vec::new(),
        }
    }

    /// "subject/trial" identifier used in reports and audit logs.
    pub fn id(&self) -> String {
        format!("{}/{}", self.subject_id, self.trial_id)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Fraction of frames in which `joint` is tracked (0 for empty sessions).
    pub fn tracking_ratio(&self, joint: Joint) -> f64 {
        if self.frames.is_empty() {
            return 0.0;
        }
        let tracked = self.frames.iter().filter(|f| f.is_tracked(joint)).count();
        tracked as f64 / self.frames.len() as f64
    }
}

/// A set of labeled sessions ready for evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub sessions: Vec<Session>,
}

impl LabeledDataset {
    /// Rejects unlabeled sessions; subject-count requirements are enforced
    /// where they matter (the LOSO split).
    pub fn new(sessions: Vec<Session>) -> Result<LabeledDataset> {
        for s in &sessions {
            if s.label == Label::Unlabeled {
                return Err(Error::UnlabeledSession {
                    subject: s.subject_id.clone(),
                    trial: s.trial_id.clone(),
                });
            }
        }
        Ok(LabeledDataset { sessions })
    }

    pub fn subjects(&self) -> BTreeSet<&str> {
        self.sessions.iter().map(|s| s.subject_id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }
}

/// One violation found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// "subject/trial" of the offending session, or None for dataset-level issues.
    pub session: Option<String>,
    pub message: String,
}

/// Result of dataset validation. Violations are report entries, not errors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks sessions against the data-model invariants without mutating them.
///
/// Flags empty sessions, unlabeled sessions, frames with the wrong joint
/// count, non-monotonic timestamps, tracked joints with non-positive depth,
/// and single-subject datasets (which cannot be evaluated leave-one-subject-out).
pub fn validate_dataset(sessions: &[Session]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |session: Option<String>, message: String| {
        report.violations.push(Violation { session, message });
    };

    for s in sessions {
        let id = s.id();
        if s.frames.is_empty() {
            push(Some(id.clone()), "session has no frames".into());
        }
        if s.label == Label::Unlabeled {
            push(Some(id.clone()), "session is unlabeled".into());
        }
        let mut prev_t: Option<u64> = None;
        for (i, frame) in s.frames.iter().enumerate() {
            if frame.positions.len() != JOINT_COUNT || frame.tracked.len() != JOINT_COUNT {
                push(
                    Some(id.clone()),
                    format!(
                        "WrongJointCount: frame {} has {} joints, expected {}",
                        i,
                        frame.positions.len().min(frame.tracked.len()),
                        JOINT_COUNT
                    ),
                );
                continue;
            }
            if let Some(p) = prev_t {
                if frame.t_ms <= p {
                    push(
                        Some(id.clone()),
                        format!("non-monotonic timestamp at frame {}", i),
                    );
                }
            }
            prev_t = Some(frame.t_ms);
            for j in 0..JOINT_COUNT {
                if frame.tracked[j] && frame.positions[j][2] <= 0.0 {
                    push(
                        Some(id.clone()),
                        format!("frame {}: tracked joint {} has non-positive depth", i, j),
                    );
                    break;
                }
            }
        }
    }

    let subjects: BTreeSet<&str> = sessions.iter().map(|s| s.subject_id.as_str()).collect();
    if subjects.len() < 2 {
        push(None, "LOSO requires >=2 subjects".into());
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_frame(t_ms: u64, z: f64) -> SkeletonFrame {
        SkeletonFrame::new(t_ms, vec![[0.0, 0.0, z]; JOINT_COUNT], vec![true; JOINT_COUNT])
    }

    fn labeled_session(subject: &str, trial: &str, label: Label, n: usize) -> Session {
        let mut s = Session::new(subject, trial, label);
        s.frames = (0..n).map(|i| uniform_frame(i as u64 * 33, 3.0)).collect();
        s
    }

    #[test]
    fn roles_have_pinned_indices() {
        assert_eq!(Joint::HipCenter.index(), 1);
        assert_eq!(Joint::ElbowRight.index(), 6);
        assert_eq!(Joint::ElbowLeft.index(), 10);
        assert_eq!(Joint::HipRight.index(), 13);
        assert_eq!(Joint::KneeRight.index(), 14);
        assert_eq!(Joint::AnkleRight.index(), 15);
        assert_eq!(Joint::HipLeft.index(), 17);
        assert_eq!(Joint::KneeLeft.index(), 18);
        assert_eq!(Joint::AnkleLeft.index(), 19);
        let mut seen = std::collections::HashSet::new();
        for j in Joint::ALL {
            assert!(j.index() < JOINT_COUNT);
            assert!(seen.insert(j.index()), "duplicate index {}", j.index());
        }
    }

    #[test]
    fn clean_dataset_has_empty_violation_list() {
        // 12 subjects, 50 sessions spread across them, all labeled.
        let mut sessions = Vec::new();
        for subj in 0..12 {
            let label = if subj < 5 { Label::LowRisk } else { Label::HighRisk };
            let trials = if subj < 2 { 5 } else { 4 };
            for t in 0..trials {
                sessions.push(labeled_session(
                    &format!("s{:02}", subj),
                    &format!("t{}", t),
                    label,
                    10,
                ));
            }
        }
        assert_eq!(sessions.len(), 50);
        let report = validate_dataset(&sessions);
        assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn single_subject_dataset_is_flagged() {
        let sessions = vec![
            labeled_session("only", "t0", Label::LowRisk, 5),
            labeled_session("only", "t1", Label::LowRisk, 5),
        ];
        let report = validate_dataset(&sessions);
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("LOSO requires >=2 subjects")));
    }

    #[test]
    fn wrong_joint_count_is_flagged() {
        let mut s = labeled_session("a", "t0", Label::LowRisk, 3);
        s.frames[1].positions.pop();
        s.frames[1].tracked.pop();
        let sessions = vec![s, labeled_session("b", "t0", Label::HighRisk, 3)];
        let report = validate_dataset(&sessions);
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("WrongJointCount")));
    }

    #[test]
    fn validation_does_not_mutate_input() {
        let sessions = vec![
            labeled_session("a", "t0", Label::LowRisk, 4),
            labeled_session("b", "t0", Label::HighRisk, 4),
        ];
        let before = sessions.clone();
        let _ = validate_dataset(&sessions);
        assert_eq!(sessions, before);
    }

    #[test]
    fn labeled_dataset_rejects_unlabeled() {
        let sessions = vec![labeled_session("a", "t0", Label::Unlabeled, 4)];
        assert!(matches!(
            LabeledDataset::new(sessions),
            Err(Error::UnlabeledSession { .. })
        ));
    }
}
