//! End-to-end per-session processing: preprocess, segment, extract.

use serde::{Deserialize, Serialize};

use crate::encoding::Point4;
use crate::error::Result;
use crate::features::{
    anatomical_features, detect_steps, gait_features, heel_depth_difference, GaitFeatures,
    StepEvents,
};
use crate::preprocess::{fill_gaps, median_filter_session, FilterParams};
use crate::segmentation::{segment_phases, PhaseSegmentation, SegmentationParams, TimeSeries};
use crate::skeleton::Session;

/// Knobs for the whole per-session pipeline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub filter: FilterParams,
    pub seg: SegmentationParams,
}

/// Everything the classifier needs from one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionFeatures {
    pub gait: GaitFeatures,
    /// Per-frame anatomical points, untracked frames skipped.
    pub anatomical: Vec<Point4>,
    pub segmentation: PhaseSegmentation,
    pub steps: StepEvents,
    pub heel_diff: TimeSeries,
}

/// Gap repair followed by median filtering, in that order: the median
/// window should not straddle missing data.
pub fn preprocess_session(session: &Session, filter: &FilterParams) -> Result<Session> {
    median_filter_session(&fill_gaps(session, filter), filter)
}

/// Runs the full extraction pipeline on one raw session.
pub fn extract_session_features(
    session: &Session,
    params: &PipelineParams,
) -> Result<SessionFeatures> {
    let clean = preprocess_session(session, &params.filter)?;
    let segmentation = segment_phases(&clean, &params.seg)?;
    let heel_diff = heel_depth_difference(&clean)?;
    let steps = detect_steps(&heel_diff, &segmentation.walking, &params.seg);
    let gait = gait_features(&segmentation, &steps, &clean)?;
    let anatomical = anatomical_features(&clean)
        .into_iter()
        .map(|(_, f)| f.as_point())
        .collect();
    Ok(SessionFeatures {
        gait,
        anatomical,
        segmentation,
        steps,
        heel_diff,
    })
}
