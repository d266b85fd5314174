mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sidewalk_core::annotations::Goal;
use sidewalk_core::graph::{NodeId, Pose, Wedge};
use sidewalk_core::rewards::{correct_directions, RewardTracker};
use sidewalk_core::world::GoalContext;
use sidewalk_core::{Action, EpisodeState, TaskConfig, TaskId, World};

/// A goal on a straight east-west street with at least `west` nodes west of
/// its goal node, plus the node `west` hops west of it.
fn goal_east_of(world: &World, west: u32) -> (Goal, NodeId) {
    let g = world.graph();
    for goal in world.goal_index().goals() {
        let ctx = world.goal_context(goal);
        let gx = g.node(goal.node).x;
        if let Some(n) = g.nodes().iter().find(|n| ctx.hop_distance(n.id) == west && n.x < gx) {
            return (goal.clone(), n.id);
        }
    }
    panic!("no goal with {west} nodes to its west");
}

fn episode(world: &World, task: TaskId, goal: &Goal, pose: Pose) -> EpisodeState {
    let config = TaskConfig::new(task);
    EpisodeState::start(world, config, goal.clone(), pose, ChaCha8Rng::seed_from_u64(0))
        .unwrap()
        .0
}

#[test]
fn correct_direction_examples() {
    let ns = common::world(1, 0, 1, 20.0, 2);
    let g = ns.graph();
    for goal in ns.goal_index().goals() {
        let ctx = ns.goal_context(goal);
        let gy = g.node(goal.node).y;
        for n in g.nodes().iter().filter(|n| n.y < gy) {
            assert_eq!(correct_directions(&ns, &ctx, n.id), [Wedge::NORTH]);
        }
        let framing: Vec<u8> = correct_directions(&ns, &ctx, goal.node).iter().map(|w| w.index()).collect();
        assert_eq!(framing, common::framing_wedges(&ns, goal));
        for nb in g.neighbors(goal.node) {
            let b = g.bearing(nb.id, goal.node).unwrap();
            assert_eq!(correct_directions(&ns, &ctx, nb.id), [Wedge::nearest(b)]);
        }
    }
}

#[test]
fn turn_shaping_three_step_trace() {
    let world = common::world(2, 1, 0, 20.0, 2);
    let (goal, node) = goal_east_of(&world, 3);
    // correct direction is due east (wedge 4); start 67.5 degrees away
    let mut s = episode(&world, TaskId::AllObs, &goal, Pose::new(node, Wedge::new(1).unwrap()));
    assert_eq!(s.tracker().best_distance_degrees(), 67.5);
    let rewards: Vec<f64> = [Action::RightSmall, Action::LeftSmall, Action::RightSmall]
        .into_iter()
        .map(|a| s.step(&world, a).unwrap().reward)
        .collect();
    assert_eq!(rewards, [0.1, -0.2, 0.0]);
    assert_eq!(s.tracker().best_distance_degrees(), 45.0);
}

#[test]
fn forward_rewards_and_blocked_forward() {
    let world = common::world(2, 1, 0, 20.0, 2);
    let (goal, node) = goal_east_of(&world, 3);
    let mut s = episode(&world, TaskId::AllObs, &goal, Pose::new(node, Wedge::new(4).unwrap()));
    let r = s.step(&world, Action::Forward).unwrap();
    assert_eq!((r.reward, r.info.hop_distance), (1.0, 2));
    s.step(&world, Action::RightBig).unwrap();
    s.step(&world, Action::RightBig).unwrap();
    s.step(&world, Action::RightSmall).unwrap();
    s.step(&world, Action::RightSmall).unwrap();
    let r = s.step(&world, Action::Forward).unwrap();
    assert_eq!((r.reward, r.info.hop_distance), (-1.0, 3));
    // facing north, off the street: no transition
    let mut s = episode(&world, TaskId::AllObs, &goal, Pose::new(node, Wedge::NORTH));
    let r = s.step(&world, Action::Forward).unwrap();
    assert_eq!(r.reward, 0.0);
    assert_eq!(s.pose(), Pose::new(node, Wedge::NORTH));
    assert_eq!(s.steps(), 1);
}

#[test]
fn read_costs_accumulate_independently() {
    let world = common::world(2, 1, 0, 20.0, 2);
    let (goal, node) = goal_east_of(&world, 3);
    let mut s = episode(&world, TaskId::CostlyTxt, &goal, Pose::new(node, Wedge::new(4).unwrap()));
    assert_eq!(s.step(&world, Action::Read).unwrap().reward, -0.2);
    assert_eq!(s.step(&world, Action::Read).unwrap().reward, -0.2);
    assert!((s.total_reward() + 0.4).abs() < 1e-12);
    assert_eq!(s.step(&world, Action::Forward).unwrap().reward, 1.0);
    let mut dense = episode(&world, TaskId::AllObs, &goal, Pose::new(node, Wedge::new(4).unwrap()));
    assert!(dense.step(&world, Action::Read).is_err());
}

#[test]
fn multi_goal_counts_unique_numbers() {
    let world = common::world(2, 1, 0, 20.0, 2);
    let goal = world.segment_goals()[0].clone();
    let ctx: GoalContext = world.goal_context(&goal);
    let mut t = RewardTracker::start(&world, &ctx, Pose::new(goal.node, Wedge::NORTH));
    assert_eq!(t.multi_goal_reward(&["2417"]), 1.0);
    assert_eq!(t.multi_goal_reward(&["2417"]), 0.0);
    assert_eq!(t.multi_goal_reward(&["12", "14"]), 2.0);
    assert_eq!(t.seen().len(), 3);
}

#[test]
fn sparse_pays_only_on_framed_done() {
    let world = common::world(2, 1, 0, 20.0, 2);
    let (goal, node) = goal_east_of(&world, 3);
    let framing = common::framing_wedges(&world, &goal);
    let framed = Pose::new(goal.node, Wedge::new(framing[0]).unwrap());
    let mut s = episode(&world, TaskId::Sparse, &goal, Pose::new(node, Wedge::NORTH));
    for _ in 0..5 {
        assert_eq!(s.step(&world, Action::RightSmall).unwrap().reward, 0.0);
    }
    let r = s.step(&world, Action::Done).unwrap();
    assert_eq!((r.reward, r.done, r.info.success), (0.0, true, false));
    // a saturated horizon with no DONE pays nothing
    let config = TaskConfig {
        horizon: Some(252),
        ..TaskConfig::new(TaskId::Sparse)
    };
    let mut s = EpisodeState::start(&world, config, goal.clone(), Pose::new(node, Wedge::NORTH), ChaCha8Rng::seed_from_u64(1))
        .unwrap()
        .0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let moves = [Action::LeftBig, Action::LeftSmall, Action::Forward, Action::RightSmall, Action::RightBig];
    while !s.is_terminated() {
        s.step_without_observation(&world, moves[rng.random_range(0..5)]).unwrap();
    }
    assert_eq!((s.steps(), s.total_reward()), (252, 0.0));
    // starting at the goal node one small turn away from framing
    let off = Pose::new(goal.node, framed.wedge.rotated(-1));
    let pose = if world.is_success_pose(&goal, off) { Pose::new(goal.node, framed.wedge.rotated(8)) } else { off };
    let mut s = episode(&world, TaskId::Sparse, &goal, pose);
    while !world.is_success_pose(&goal, s.pose()) {
        s.step(&world, Action::RightSmall).unwrap();
    }
    assert!(!s.is_terminated());
    let r = s.step(&world, Action::Done).unwrap();
    assert_eq!((r.reward, r.done, r.info.success), (1.0, true, true));
}

#[test]
fn turn_bonus_per_node_visit_is_bounded() {
    let world = common::world(3, 1, 1, 14.0, 2);
    let moves = TaskId::AllObs.legal_actions();
    for seed in 0..200 {
        let (mut s, _) = EpisodeState::reset(&world, TaskConfig::new(TaskId::AllObs), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut visit_bonus = 0.0;
        while !s.is_terminated() {
            let before = s.pose().node;
            let a = moves[rng.random_range(0..moves.len())];
            let (r, _) = s.step_without_observation(&world, a).unwrap();
            if s.pose().node != before {
                visit_bonus = 0.0;
            } else if r > 0.0 {
                visit_bonus += r;
                assert!(visit_bonus <= 0.8 + 1e-9, "seed {seed}");
            }
        }
    }
}

#[test]
fn explorer_reward_bounded_by_distinct_numbers() {
    let world = common::world(3, 1, 1, 14.0, 2);
    let distinct: std::collections::BTreeSet<&str> = world
        .annotations()
        .panoramas
        .iter()
        .flat_map(|p| p.house_numbers.iter().map(|h| h.text.as_str()))
        .collect();
    let moves = TaskId::Explorer.legal_actions();
    for seed in 0..50 {
        let (mut s, _) = EpisodeState::reset(&world, TaskConfig::new(TaskId::Explorer), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while !s.is_terminated() {
            s.step_without_observation(&world, moves[rng.random_range(0..moves.len())]).unwrap();
        }
        assert!(s.tracker().seen().len() <= distinct.len());
        assert!(s.total_reward() <= distinct.len() as f64);
        assert_eq!(s.steps(), s.horizon());
        assert!(!s.succeeded());
    }
}
