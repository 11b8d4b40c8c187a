//! Property tests for the signal-processing and I/O invariants.

use proptest::prelude::*;

use gugt_core::features::detect_steps;
use gugt_core::io::{parse_session, write_session, SessionFormat};
use gugt_core::preprocess::{fill_gaps, median_filter_session, FilterParams};
use gugt_core::segmentation::{FrameInterval, SegmentationParams, TimeSeries};
use gugt_core::skeleton::{Label, Session, SkeletonFrame, JOINT_COUNT};

fn session_from_values(values: &[f64], tracked: &[bool]) -> Session {
    let mut s = Session::new("prop", "t0", Label::Unlabeled);
    for (i, &v) in values.iter().enumerate() {
        let mut positions = vec![[0.1, -0.2, 3.0]; JOINT_COUNT];
        positions[0] = [v, v * 0.5, 3.0 + v.abs()];
        let mut flags = vec![true; JOINT_COUNT];
        flags[0] = tracked[i];
        s.frames
            .push(SkeletonFrame::new(i as u64 * 33 + 1, positions, flags));
    }
    s
}

fn series(values: &[f64]) -> TimeSeries {
    let t: Vec<u64> = (0..values.len() as u64).map(|i| i * 33).collect();
    TimeSeries::new("prop", t, values.to_vec()).unwrap()
}

proptest! {
    /// Every filtered value belongs to the multiset of input values inside
    /// its (shrunken) window.
    #[test]
    fn median_output_is_drawn_from_the_window(
        values in prop::collection::vec(-10.0f64..10.0, 1..60),
        window in prop::sample::select(vec![1usize, 3, 5, 7]),
    ) {
        let tracked = vec![true; values.len()];
        let session = session_from_values(&values, &tracked);
        let params = FilterParams::new(window, 5).unwrap();
        let out = median_filter_session(&session, &params).unwrap();
        let n = values.len();
        for i in 0..n {
            let h = (window / 2).min(i).min(n - 1 - i);
            let got = out.frames[i].positions[0][0];
            prop_assert!(
                values[i - h..=i + h].contains(&got),
                "index {}: {} not in window", i, got
            );
        }
    }

    /// Monotone signals pass through the median filter unchanged.
    #[test]
    fn median_preserves_monotone_signals(
        deltas in prop::collection::vec(0.0f64..1.0, 1..60),
        window in prop::sample::select(vec![3usize, 5, 9]),
    ) {
        let mut values = Vec::with_capacity(deltas.len());
        let mut acc = 0.0;
        for d in &deltas {
            acc += d;
            values.push(acc);
        }
        let tracked = vec![true; values.len()];
        let session = session_from_values(&values, &tracked);
        let params = FilterParams::new(window, 5).unwrap();
        let out = median_filter_session(&session, &params).unwrap();
        for (i, f) in out.frames.iter().enumerate() {
            prop_assert_eq!(f.positions[0][0], values[i]);
        }
    }

    /// Frame count and timestamps are never altered by filtering.
    #[test]
    fn median_is_order_preserving_in_time(
        values in prop::collection::vec(-5.0f64..5.0, 1..40),
    ) {
        let tracked = vec![true; values.len()];
        let session = session_from_values(&values, &tracked);
        let out = median_filter_session(&session, &FilterParams::default()).unwrap();
        prop_assert_eq!(out.frames.len(), session.frames.len());
        for (a, b) in out.frames.iter().zip(&session.frames) {
            prop_assert_eq!(a.t_ms, b.t_ms);
        }
    }

    /// Gap filling never alters tracked samples.
    #[test]
    fn fill_gaps_preserves_tracked_samples(
        values in prop::collection::vec(-5.0f64..5.0, 2..50),
        mask in prop::collection::vec(any::<bool>(), 2..50),
    ) {
        let n = values.len().min(mask.len());
        let values = &values[..n];
        let tracked = &mask[..n];
        let session = session_from_values(values, tracked);
        let out = fill_gaps(&session, &FilterParams::default());
        for i in 0..n {
            if tracked[i] {
                prop_assert_eq!(out.frames[i].positions[0], session.frames[i].positions[0]);
                prop_assert!(out.frames[i].tracked[0]);
            }
        }
        // Leading and trailing runs stay untracked.
        if !tracked[0] {
            prop_assert!(!out.frames[0].tracked[0]);
        }
        if !tracked[n - 1] {
            prop_assert!(!out.frames[n - 1].tracked[0]);
        }
    }

    /// Step detection agrees with an independent state-machine oracle on
    /// arbitrary signals.
    #[test]
    fn step_count_matches_excursion_oracle(
        values in prop::collection::vec(-0.3f64..0.3, 2..120),
    ) {
        let walking = vec![FrameInterval::new(0, values.len() - 1)];
        let params = SegmentationParams::default();
        let steps = detect_steps(&series(&values), &walking, &params);

        // Oracle: confirmed-excursion state machine.
        let mut expected = 0usize;
        let mut state: Option<i8> = None;
        for &v in &values {
            if v.abs() < params.step_amplitude_m {
                continue;
            }
            let s: i8 = if v > 0.0 { 1 } else { -1 };
            if let Some(prev) = state {
                if prev != s {
                    expected += 1;
                }
            }
            state = Some(s);
        }
        prop_assert_eq!(steps.step_count, expected);
        // All crossing frames lie inside the walking interval.
        for &f in &steps.crossing_frames {
            prop_assert!(f < values.len());
        }
    }

    /// JSONL round trip is exact for arbitrary sessions.
    #[test]
    fn jsonl_round_trip_is_identity(
        subject in "[a-zA-Z0-9 _.-]{1,12}",
        trial in "[a-zA-Z0-9 _.-]{1,8}",
        label_pick in 0usize..3,
        frames in prop::collection::vec(
            (prop::collection::vec(-10.0f64..10.0, 60), prop::collection::vec(any::<bool>(), 20)),
            0..8,
        ),
        fps in prop::option::of(1.0f64..240.0),
    ) {
        let label = [Label::LowRisk, Label::HighRisk, Label::Unlabeled][label_pick];
        let mut s = Session::new(subject, trial, label);
        s.fps_hint = fps;
        for (i, (coords, flags)) in frames.iter().enumerate() {
            let positions: Vec<[f64; 3]> = coords.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            s.frames.push(SkeletonFrame::new(
                (i as u64 + 1) * 17,
                positions,
                flags.clone(),
            ));
        }
        let text = write_session(&s, SessionFormat::Jsonl);
        let back = parse_session(&text, SessionFormat::Jsonl).unwrap();
        prop_assert_eq!(back, s);
    }

    /// CSV round trip is exact for comma-free identifiers.
    #[test]
    fn csv_round_trip_is_identity(
        frames in prop::collection::vec(
            (prop::collection::vec(-10.0f64..10.0, 60), prop::collection::vec(any::<bool>(), 20)),
            0..8,
        ),
    ) {
        let mut s = Session::new("subj x", "trial-1", Label::HighRisk);
        for (i, (coords, flags)) in frames.iter().enumerate() {
            let positions: Vec<[f64; 3]> = coords.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            s.frames.push(SkeletonFrame::new(
                (i as u64 + 1) * 33,
                positions,
                flags.clone(),
            ));
        }
        let text = write_session(&s, SessionFormat::Csv);
        let back = parse_session(&text, SessionFormat::Csv).unwrap();
        prop_assert_eq!(back, s);
    }
}
