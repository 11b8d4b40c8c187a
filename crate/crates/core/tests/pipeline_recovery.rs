//! End-to-end recovery of generator ground truth through the full pipeline.

use gugt_core::pipeline::{extract_session_features, PipelineParams};
use gugt_core::segmentation::FrameInterval;
use gugt_core::synthgen::{generate_session, GaitProfile};

fn profile(steps: usize, step_s: f64, turn_s: f64, noise: f64) -> GaitProfile {
    GaitProfile {
        step_count_oneway: steps,
        step_duration_s: step_s,
        stride_m: 2.0 / steps as f64,
        turn_duration_s: turn_s,
        noise_std_m: noise,
        ..GaitProfile::default()
    }
}

/// The documented noise-free grid: 27 profiles.
fn grid() -> Vec<GaitProfile> {
    let mut out = Vec::new();
    for steps in [4usize, 8, 12] {
        for step_s in [0.4, 0.6, 0.9] {
            for turn_s in [1.0, 2.0, 4.0] {
                out.push(profile(steps, step_s, turn_s, 0.0));
            }
        }
    }
    out
}

#[test]
fn noise_free_grid_recovers_ground_truth_exactly() {
    let params = PipelineParams::default();
    for (idx, p) in grid().into_iter().enumerate() {
        let (session, truth) = generate_session(&p, 1000 + idx as u64).unwrap();
        let features = extract_session_features(&session, &params)
            .unwrap_or_else(|e| panic!("grid profile {idx} failed: {e}"));

        assert_eq!(
            features.gait.num_steps, truth.step_count,
            "profile {idx} ({}x{}s turn {}s): steps {} vs truth {}",
            p.step_count_oneway,
            p.step_duration_s,
            p.turn_duration_s,
            features.gait.num_steps,
            truth.step_count
        );
        let step_err = (features.gait.avg_step_duration_s - truth.step_duration_s).abs();
        assert!(
            step_err <= 1.0 / 30.0,
            "profile {idx}: avg step duration {} vs {} (err {step_err})",
            features.gait.avg_step_duration_s,
            truth.step_duration_s
        );
        let turn_err = (features.gait.turn_duration_s - truth.turn_duration_s).abs();
        assert!(
            turn_err <= 0.2,
            "profile {idx}: turn duration {} vs {} (err {turn_err})",
            features.gait.turn_duration_s,
            truth.turn_duration_s
        );
    }
}

#[test]
fn phase_boundaries_match_script_within_six_frames() {
    let params = PipelineParams::default();
    let (session, truth) = generate_session(&GaitProfile::default(), 7).unwrap();
    let features = extract_session_features(&session, &params).unwrap();
    let seg = &features.segmentation;

    assert_eq!(seg.seated.len(), 2, "expected initial and final seated runs");
    let tol = 6usize;
    let close = |a: usize, b: usize| a.abs_diff(b) <= tol;

    // Initial seated run covers the scripted lead; its end is the scripted
    // stand-up boundary.
    assert_eq!(seg.seated[0].start, 0);
    assert!(
        close(seg.seated[0].end, truth.seated_lead.end),
        "initial seated end {} vs script {}",
        seg.seated[0].end,
        truth.seated_lead.end
    );
    // Final seated run starts at the scripted sit-down boundary.
    assert!(
        close(seg.seated[1].start, truth.seated_tail.start),
        "final seated start {} vs script {}",
        seg.seated[1].start,
        truth.seated_tail.start
    );
    assert_eq!(seg.seated[1].end, truth.seated_tail.end);
    // Turning interval matches the scripted turn.
    assert!(
        close(seg.turning.start, truth.turn.start),
        "turn start {} vs script {}",
        seg.turning.start,
        truth.turn.start
    );
    assert!(
        close(seg.turning.end, truth.turn.end),
        "turn end {} vs script {}",
        seg.turning.end,
        truth.turn.end
    );
    assert!(truth.turn.contains(seg.turn_point));
}

#[test]
fn scripted_example_sixteen_steps() {
    // 8 steps each way at 0.6 s with a 1.5 s turn: the worked example.
    let params = PipelineParams::default();
    let (session, truth) = generate_session(&profile(8, 0.6, 1.5, 0.0), 3).unwrap();
    let f = extract_session_features(&session, &params).unwrap();
    assert_eq!(truth.step_count, 16);
    assert_eq!(f.gait.num_steps, 16);
    assert!((f.gait.avg_step_duration_s - 0.6).abs() <= 0.01);
    assert!((f.gait.turn_duration_s - 1.5).abs() <= 0.2);
}

#[test]
fn scripted_cadence_is_recovered() {
    let params = PipelineParams::default();
    let (session, _) = generate_session(&profile(8, 0.55, 1.5, 0.0), 11).unwrap();
    let f = extract_session_features(&session, &params).unwrap();
    assert!((f.gait.avg_step_duration_s - 0.55).abs() <= 0.05);
}

#[test]
fn detected_crossings_align_with_true_crossings() {
    let params = PipelineParams::default();
    let (session, truth) = generate_session(&GaitProfile::default(), 19).unwrap();
    let f = extract_session_features(&session, &params).unwrap();
    assert_eq!(f.steps.crossing_frames.len(), truth.crossing_frames.len());
    for (&got, &want) in f.steps.crossing_frames.iter().zip(&truth.crossing_frames) {
        assert!(
            got.abs_diff(want) <= 2,
            "crossing at {got} vs true {want}"
        );
    }
}

#[test]
fn mild_noise_does_not_change_step_count() {
    // Hysteresis margin property on the same grid, noise_std = 0.01.
    let params = PipelineParams::default();
    for (idx, clean) in grid().into_iter().enumerate() {
        let noisy = GaitProfile {
            noise_std_m: 0.01,
            ..clean
        };
        let (session, truth) = generate_session(&noisy, 5000 + idx as u64).unwrap();
        let f = extract_session_features(&session, &params)
            .unwrap_or_else(|e| panic!("noisy grid profile {idx} failed: {e}"));
        assert_eq!(
            f.gait.num_steps, truth.step_count,
            "noisy profile {idx}: {} vs {}",
            f.gait.num_steps, truth.step_count
        );
    }
}

#[test]
fn walking_phase_extends_to_last_frame_without_seated_tail() {
    // Recording stops at the chair approach: cut the session right after
    // the walk back.
    let params = PipelineParams::default();
    let (session, truth) = generate_session(&GaitProfile::default(), 23).unwrap();
    let mut cut = session.clone();
    cut.frames.truncate(truth.walk_back.end - 10);
    let f = extract_session_features(&cut, &params).unwrap();
    let n = cut.frames.len();
    let seg = &f.segmentation;
    assert_eq!(seg.seated.len(), 1, "only the initial seated run remains");
    let last_walking: Option<&FrameInterval> = seg.walking.last();
    assert_eq!(last_walking.unwrap().end, n - 1);
}
