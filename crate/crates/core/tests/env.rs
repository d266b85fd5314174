mod common;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sidewalk_core::annotations::{fov_interval, FOV_DEGREES};
use sidewalk_core::env::{is_success, sample_task};
use sidewalk_core::graph::{Pose, SegmentKind, Wedge};
use sidewalk_core::{oracle, Action, EpisodeState, Error, TaskConfig, TaskId};

#[test]
fn single_segment_starts_stay_on_the_segment() {
    let world = common::world(1, 1, 0, 20.0, 2);
    let segments: Vec<_> = world.graph().segments().iter().filter(|s| s.kind == SegmentKind::Segment).collect();
    assert_eq!(segments.len(), 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut wedges = [0u32; 16];
    for _ in 0..2000 {
        let (goal, pose) = sample_task(&world, TaskId::AllObs, &mut rng).unwrap();
        assert!(segments[0].nodes.contains(&pose.node));
        assert!(!world.is_success_pose(&goal, pose));
        wedges[pose.wedge.index() as usize] += 1;
    }
    assert!(wedges.iter().all(|&c| c > 50));
    let err = sample_task(&world, TaskId::Intersection, &mut rng).unwrap_err();
    assert!(matches!(err, Error::TaskUnavailable(..)));
}

#[test]
fn intersection_starts_on_another_segment() {
    let world = common::world(2, 1, 1, 14.0, 2);
    let g = world.graph();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let (goal, pose) = sample_task(&world, TaskId::Intersection, &mut rng).unwrap();
        let (start_seg, goal_seg) = (g.segment_of(pose.node), g.segment_of(goal.node));
        assert_eq!(start_seg.kind, SegmentKind::Segment);
        assert_ne!(start_seg.id, goal_seg.id);
        let hop = g.hop_distance(pose.node, goal.node).unwrap();
        let via: Vec<_> = g.path_along(&world.goal_context(&goal).dist, pose.node);
        assert_eq!(via.len() as u32, hop + 1);
        assert!(via.iter().any(|&n| g.segment_of(n).kind == SegmentKind::Intersection));
    }
}

#[test]
fn goals_are_uniform_over_addresses() {
    let world = common::world(3, 1, 1, 14.0, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 10_000;
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    for _ in 0..n {
        let (goal, _) = sample_task(&world, TaskId::AllObs, &mut rng).unwrap();
        *counts.entry(goal.address).or_default() += 1;
    }
    let k = world.segment_goals().len();
    assert_eq!(counts.len(), k);
    let p = 1.0 / k as f64;
    let expected = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    let mut chi2 = 0.0;
    for (address, &c) in &counts {
        assert!((c as f64 - expected).abs() <= 4.0 * sd, "{address}: {c} vs {expected}");
        chi2 += (c as f64 - expected).powi(2) / expected;
    }
    let df = (k - 1) as f64;
    assert!(chi2 <= df + 4.0 * (2.0 * df).sqrt(), "chi2 {chi2} df {df}");
}

#[test]
fn success_requires_goal_node_and_full_framing() {
    let world = common::world(4, 1, 0, 20.0, 2);
    let w = world.annotations().pano_width;
    for goal in world.goal_index().goals() {
        let door = goal.door(world.annotations());
        let (x0, x1) = door.column_extent(w);
        let mut framed = 0;
        let mut partial = 0;
        for wedge in Wedge::all() {
            let at_goal = world.is_success_pose(goal, Pose::new(goal.node, wedge));
            let interval = fov_interval(wedge, w, FOV_DEGREES);
            let inside = interval.contains_column(x0) as u32 + interval.contains_column(x1) as u32;
            assert_eq!(at_goal, interval.contains_span(x0, x1));
            if at_goal {
                framed += 1;
                for nb in world.graph().neighbors(goal.node) {
                    assert!(!world.is_success_pose(goal, Pose::new(nb.id, wedge)));
                }
            } else if inside == 1 {
                partial += 1;
            }
        }
        assert!(framed > 0);
        assert!(partial > 0, "{}: no half-framed wedge", goal.address);
    }
}

#[test]
fn modality_masks_follow_tasks() {
    let world = common::world(5, 1, 1, 14.0, 2);
    for task in TaskId::ALL {
        let (mut s, first) = EpisodeState::reset(&world, TaskConfig::new(task), 3).unwrap();
        let m = task.modalities();
        let check = |o: &sidewalk_core::observation::Observation, text_expected: bool| {
            assert_eq!(o.image.is_some(), m.image, "{task}");
            assert_eq!(o.gps.is_some(), m.gps, "{task}");
            assert_eq!(o.text.is_some(), text_expected, "{task}");
            if let Some(img) = &o.image {
                assert_eq!(img.shape(), [3, 84, 84]);
            }
        };
        check(&first.observation, m.text && task != TaskId::CostlyTxt);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let legal = task.legal_actions();
        while !s.is_terminated() {
            let a = legal[rng.random_range(0..legal.len())];
            let r = s.step(&world, a).unwrap();
            let text = m.text && (task != TaskId::CostlyTxt || a == Action::Read);
            check(&r.observation, text);
            assert!(s.steps() <= s.horizon());
            if r.done && r.info.success && task != TaskId::Sparse {
                assert!(is_success(&world, &s));
            }
        }
        if task == TaskId::Explorer {
            assert_eq!(s.steps(), s.horizon());
        }
    }
}

#[test]
fn illegal_and_terminated_steps_are_errors() {
    let world = common::world(5, 1, 1, 14.0, 2);
    let (mut s, _) = EpisodeState::reset(&world, TaskConfig::new(TaskId::AllObs), 0).unwrap();
    match s.step(&world, Action::Done).unwrap_err() {
        Error::IllegalAction { legal, .. } => assert_eq!(legal, "LEFT_BIG, LEFT_SMALL, FORWARD, RIGHT_SMALL, RIGHT_BIG"),
        e => panic!("{e}"),
    }
    assert_eq!(s.steps(), 0);
    let (mut s, _) = EpisodeState::reset(&world, TaskConfig::new(TaskId::Sparse), 0).unwrap();
    let r = s.step(&world, Action::Done).unwrap();
    assert!(r.done);
    assert!(matches!(s.step(&world, Action::Forward), Err(Error::EpisodeTerminated)));
}

#[test]
fn seeded_episodes_replay_bit_for_bit() {
    let world = common::world(6, 1, 1, 14.0, 2);
    for task in [TaskId::AllObs, TaskId::NoImg, TaskId::CostlyTxt, TaskId::Explorer] {
        let config = TaskConfig {
            gps_sigma: 5.0,
            ..TaskConfig::new(task)
        };
        let run = || {
            let (mut s, first) = EpisodeState::reset(&world, config, 21).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(22);
            let legal = task.legal_actions();
            let mut out = vec![first];
            while !s.is_terminated() {
                out.push(s.step(&world, legal[rng.random_range(0..legal.len())]).unwrap());
            }
            out
        };
        assert_eq!(run(), run(), "{task}");
    }
}

#[test]
fn oracle_episodes_succeed_and_terminal_turn_is_rewarded() {
    let world = common::world(7, 1, 1, 14.0, 2);
    let mut terminal_turns = 0;
    for seed in 0..200 {
        let (mut s, _) = EpisodeState::reset(&world, TaskConfig::new(TaskId::AllObs), seed).unwrap();
        let mut last = (Action::Forward, 0.0);
        while !s.is_terminated() {
            let a = oracle::act(&world, &s).unwrap();
            last = (a, s.step(&world, a).unwrap().reward);
        }
        assert!(s.succeeded());
        if last.0 != Action::Forward {
            terminal_turns += 1;
            assert_eq!(last.1, 0.1, "seed {seed}");
        }
    }
    assert!(terminal_turns > 0);
}

#[test]
fn step_info_reports_positions() {
    let world = common::world(8, 1, 0, 20.0, 2);
    let (s, first) = EpisodeState::reset(&world, TaskConfig::new(TaskId::AllObs), 5).unwrap();
    assert_eq!(first.info.agent_xy_m, world.node_xy(s.pose().node));
    assert_eq!(first.info.goal_xy_m, world.node_xy(s.goal().goal.node));
    assert_eq!(first.info.hop_distance, world.graph().hop_distance(s.pose().node, s.goal().goal.node).unwrap());
    assert_eq!(first.info.gps_rel_m.unwrap()[0], first.info.agent_xy_m[0] - first.info.goal_xy_m[0]);
    let json = serde_json::to_value(&first.info).unwrap();
    for key in ["agent_xy_m", "goal_xy_m", "hop_distance", "visible_text", "success"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}
