//! Joint-trajectory denoising: gap repair followed by median filtering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{Session, JOINT_COUNT};

/// Parameters for [`median_filter_session`] and [`fill_gaps`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    /// Median window in frames; must be odd and >= 1.
    pub window: usize,
    /// Longest untracked run (in frames) that gap repair will interpolate.
    pub max_gap_frames: usize,
}

impl Default for FilterParams {
    fn default() -> FilterParams {
        FilterParams {
            window: 5,
            max_gap_frames: 5,
        }
    }
}

impl FilterParams {
    pub fn new(window: usize, max_gap_frames: usize) -> Result<FilterParams> {
        let p = FilterParams {
            window,
            max_gap_frames,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window % 2 == 0 {
            return Err(Error::InvalidParams(format!(
                "median window must be odd and >= 1, got {}",
                self.window
            )));
        }
        Ok(())
    }
}

/// Median of a non-empty slice, via sorting a scratch buffer.
fn median_into(scratch: &mut Vec<f64>, values: &[f64]) -> f64 {
    scratch.clear();
    scratch.extend_from_slice(values);
    scratch.sort_by(|a, b| a.total_cmp(b));
    scratch[scratch.len() / 2]
}

/// Applies a centered median filter of `params.window` frames to every
/// coordinate of every joint independently.
///
/// At the sequence boundaries the window shrinks symmetrically, so it stays
/// odd and centered: with window 5 the first frames use neighborhoods of
/// 1, 3, 5, ... frames. Timestamps and tracking flags are unchanged.
pub fn median_filter_session(session: &Session, params: &FilterParams) -> Result<Session> {
    params.validate()?;
    if session.frames.is_empty() {
        return Err(Error::EmptySession);
    }

    let n = session.frames.len();
    let half = params.window / 2;
    let mut out = session.clone();
    if params.window == 1 {
        return Ok(out);
    }

    let mut series = vec![0.0; n];
    let mut window_buf = Vec::with_capacity(params.window);
    let mut scratch = Vec::with_capacity(params.window);
    for joint in 0..JOINT_COUNT {
        for coord in 0..3 {
            for (i, f) in session.frames.iter().enumerate() {
                series[i] = f.positions[joint][coord];
            }
            for i in 0..n {
                let h = half.min(i).min(n - 1 - i);
                window_buf.clear();
                window_buf.extend_from_slice(&series[i - h..=i + h]);
                out.frames[i].positions[joint][coord] = median_into(&mut scratch, &window_buf);
            }
        }
    }
    Ok(out)
}

/// Linearly interpolates short tracking dropouts.
///
/// For each joint, untracked runs no longer than `max_gap_frames` that are
/// bracketed by tracked frames are filled per coordinate (linear in the
/// timestamps) and marked tracked. Leading and trailing runs are never
/// extrapolated, and tracked samples are never altered.
pub fn fill_gaps(session: &Session, params: &FilterParams) -> Session {
    let mut out = session.clone();
    let n = session.frames.len();

    for joint in 0..JOINT_COUNT {
        let mut i = 0;
        while i < n {
            if session.frames[i].tracked[joint] {
                i += 1;
                continue;
            }
            let run_start = i;
            while i < n && !session.frames[i].tracked[joint] {
                i += 1;
            }
            let run_end = i; // exclusive
            let len = run_end - run_start;
            if run_start == 0 || run_end == n || len > params.max_gap_frames {
                continue;
            }
            let before = &session.frames[run_start - 1];
            let after = &session.frames[run_end];
            let t0 = before.t_ms as f64;
            let t1 = after.t_ms as f64;
            let p0 = before.positions[joint];
            let p1 = after.positions[joint];
            for k in run_start..run_end {
                let alpha = (session.frames[k].t_ms as f64 - t0) / (t1 - t0);
                for c in 0..3 {
                    out.frames[k].positions[joint][c] = p0[c] + alpha * (p1[c] - p0[c]);
                }
                out.frames[k].tracked[joint] = true;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{Label, SkeletonFrame};

    /// Builds a session whose joint-0 x coordinate follows `values`; all
    /// other coordinates are constant.
    fn session_with_signal(values: &[f64]) -> Session {
        let mut s = Session::new("s", "t", Label::Unlabeled);
        for (i, &v) in values.iter().enumerate() {
            let mut positions = vec![[0.0, 0.0, 3.0]; JOINT_COUNT];
            positions[0][0] = v;
            s.frames.push(SkeletonFrame::new(
                i as u64 * 33,
                positions,
                vec![true; JOINT_COUNT],
            ));
        }
        s
    }

    fn signal(s: &Session) -> Vec<f64> {
        s.frames.iter().map(|f| f.positions[0][0]).collect()
    }

    /// Independent oracle: median by full sort of an explicitly built window.
    fn median_oracle(values: &[f64], window: usize, i: usize) -> f64 {
        let half = window / 2;
        let h = half.min(i).min(values.len() - 1 - i);
        let mut w: Vec<f64> = values[i - h..=i + h].to_vec();
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        w[w.len() / 2]
    }

    #[test]
    fn constant_signal_is_unchanged() {
        let s = session_with_signal(&[2.5; 100]);
        let out = median_filter_session(&s, &FilterParams::default()).unwrap();
        assert_eq!(signal(&out), vec![2.5; 100]);
    }

    #[test]
    fn single_impulse_is_removed() {
        let values = [0.0, 0.0, 10.0, 0.0, 0.0];
        let s = session_with_signal(&values);
        let out = median_filter_session(&s, &FilterParams::default()).unwrap();
        let got = signal(&out);
        let expected: Vec<f64> = (0..values.len())
            .map(|i| median_oracle(&values, 5, i))
            .collect();
        assert_eq!(got, expected);
        assert_eq!(got[2], 0.0);
    }

    #[test]
    fn window_one_is_identity() {
        let values = [1.0, -3.0, 7.5, 0.25, 9.0, 2.0];
        let s = session_with_signal(&values);
        let params = FilterParams::new(1, 5).unwrap();
        let out = median_filter_session(&s, &params).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn even_window_is_rejected() {
        assert!(FilterParams::new(4, 5).is_err());
        assert!(FilterParams::new(0, 5).is_err());
    }

    #[test]
    fn empty_session_errors() {
        let s = Session::new("s", "t", Label::Unlabeled);
        assert!(matches!(
            median_filter_session(&s, &FilterParams::default()),
            Err(Error::EmptySession)
        ));
    }

    #[test]
    fn timestamps_and_flags_unchanged() {
        let mut s = session_with_signal(&[1.0, 5.0, 2.0, 8.0, 3.0]);
        s.frames[2].tracked[7] = false;
        let out = median_filter_session(&s, &FilterParams::default()).unwrap();
        for (a, b) in s.frames.iter().zip(out.frames.iter()) {
            assert_eq!(a.t_ms, b.t_ms);
            assert_eq!(a.tracked, b.tracked);
        }
    }

    fn gap_session(tracked_pattern: &[bool], values: &[f64]) -> Session {
        let mut s = session_with_signal(values);
        for (i, &trk) in tracked_pattern.iter().enumerate() {
            s.frames[i].tracked[0] = trk;
        }
        s
    }

    #[test]
    fn single_gap_is_midpoint_filled() {
        let s = gap_session(&[true, false, true], &[1.0, 99.0, 2.0]);
        let out = fill_gaps(&s, &FilterParams::default());
        assert_eq!(out.frames[1].positions[0][0], 1.5);
        assert!(out.frames[1].tracked[0]);
    }

    #[test]
    fn gap_longer_than_threshold_is_left_untracked() {
        let n = 8;
        let tracked: Vec<bool> = (0..n).map(|i| i == 0 || i == n - 1).collect();
        let values = vec![0.0; n];
        let s = gap_session(&tracked, &values);
        // Gap of 6 frames with max_gap_frames = 5.
        let params = FilterParams::new(5, 5).unwrap();
        let out = fill_gaps(&s, &params);
        assert!(!out.frames[3].tracked[0]);
        // Raising the threshold by one fills it.
        let params = FilterParams::new(5, 6).unwrap();
        let out = fill_gaps(&s, &params);
        assert!(out.frames[3].tracked[0]);
    }

    #[test]
    fn leading_and_trailing_runs_are_not_extrapolated() {
        let s = gap_session(&[false, false, true, true, false], &[9.0, 9.0, 1.0, 2.0, 9.0]);
        let out = fill_gaps(&s, &FilterParams::default());
        assert!(!out.frames[0].tracked[0]);
        assert!(!out.frames[1].tracked[0]);
        assert!(!out.frames[4].tracked[0]);
        // Values of untracked frames are untouched.
        assert_eq!(out.frames[0].positions[0][0], 9.0);
        assert_eq!(out.frames[4].positions[0][0], 9.0);
    }

    #[test]
    fn fill_gaps_never_alters_tracked_samples() {
        let s = gap_session(
            &[true, false, true, false, true],
            &[1.0, 0.0, 3.0, 0.0, 5.0],
        );
        let out = fill_gaps(&s, &FilterParams::default());
        for i in [0, 2, 4] {
            assert_eq!(out.frames[i].positions[0], s.frames[i].positions[0]);
        }
        assert_eq!(out.frames[1].positions[0][0], 2.0);
        assert_eq!(out.frames[3].positions[0][0], 4.0);
    }
}
