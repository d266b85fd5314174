//! Reward structures: dense shaping with per-node turn memory, the read
//! charge, multi-goal discovery and the sparse terminal payoff.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, Pose, Wedge, WEDGE_DEGREES};
use crate::world::{GoalContext, World};

pub const FORWARD_CLOSER: f64 = 1.0;
pub const FORWARD_FURTHER: f64 = -1.0;
pub const TURN_TOWARD: f64 = 0.1;
pub const TURN_AWAY: f64 = -0.2;
pub const READ_COST: f64 = -0.2;
pub const SPARSE_SUCCESS: f64 = 1.0;
pub const NEW_HOUSE_NUMBER: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RewardKind {
    Dense,
    DenseCostlyRead,
    Sparse,
    MultiGoal,
}

/// Wedges that count as "the correct direction" at `node`: the framing
/// wedges at the goal node, else the wedge nearest the bearing toward the
/// next node of a shortest path.
pub fn correct_directions(world: &World, ctx: &GoalContext, node: NodeId) -> Vec<Wedge> {
    if node == ctx.goal.node {
        return ctx.framing_wedges.clone();
    }
    match world.graph().next_hop(&ctx.dist, node) {
        Some(next) => {
            let b = world.graph().bearing(node, next).expect("adjacent nodes are distinct");
            vec![Wedge::nearest(b)]
        }
        None => Vec::new(),
    }
}

/// Circular distance, in wedge steps, from `wedge` to the nearest of
/// `targets` (0 when `targets` is empty).
pub fn steps_to_nearest(wedge: Wedge, targets: &[Wedge]) -> u8 {
    targets.iter().map(|&t| wedge.steps_to(t)).min().unwrap_or(0)
}

/// Per-episode reward bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardTracker {
    node: NodeId,
    best_steps: u8,
    seen: BTreeSet<String>,
    prev_hop: u32,
}

impl RewardTracker {
    pub fn start(world: &World, ctx: &GoalContext, pose: Pose) -> RewardTracker {
        let mut t = RewardTracker {
            node: pose.node,
            best_steps: 0,
            seen: BTreeSet::new(),
            prev_hop: 0,
        };
        t.enter(world, ctx, pose);
        t
    }

    fn enter(&mut self, world: &World, ctx: &GoalContext, pose: Pose) {
        self.node = pose.node;
        self.best_steps = steps_to_nearest(pose.wedge, &correct_directions(world, ctx, pose.node));
        self.prev_hop = ctx.hop_distance(pose.node);
    }

    /// Best (smallest) angular distance to the correct direction achieved at
    /// the current node, in degrees.
    pub fn best_distance_degrees(&self) -> f64 {
        self.best_steps as f64 * WEDGE_DEGREES
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn seen(&self) -> &BTreeSet<String> {
        &self.seen
    }

    pub fn mark_seen<S: AsRef<str>>(&mut self, numbers: &[S]) {
        for n in numbers {
            self.seen.insert(n.as_ref().to_owned());
        }
    }

    /// Movement and turn shaping for one already-applied action.
    pub fn dense_reward(&mut self, world: &World, ctx: &GoalContext, prev: Pose, new: Pose) -> f64 {
        if new.node != prev.node {
            let hop = ctx.hop_distance(new.node);
            let r = match hop.cmp(&self.prev_hop) {
                std::cmp::Ordering::Less => FORWARD_CLOSER,
                std::cmp::Ordering::Greater => FORWARD_FURTHER,
                std::cmp::Ordering::Equal => 0.0,
            };
            self.enter(world, ctx, new);
            return r;
        }
        if new.wedge == prev.wedge {
            return 0.0;
        }
        let targets = correct_directions(world, ctx, new.node);
        let d_old = steps_to_nearest(prev.wedge, &targets);
        let d_new = steps_to_nearest(new.wedge, &targets);
        if d_new > d_old {
            TURN_AWAY
        } else if d_new < d_old && d_new < self.best_steps {
            self.best_steps = d_new;
            TURN_TOWARD
        } else {
            0.0
        }
    }

    /// +1 for each house number not seen before in this episode.
    pub fn multi_goal_reward<S: AsRef<str>>(&mut self, visible: &[S]) -> f64 {
        let mut r = 0.0;
        for n in visible {
            if self.seen.insert(n.as_ref().to_owned()) {
                r += NEW_HOUSE_NUMBER;
            }
        }
        r
    }
}

pub fn read_cost() -> f64 {
    READ_COST
}

pub fn sparse_reward(success: bool) -> f64 {
    if success {
        SPARSE_SUCCESS
    } else {
        0.0
    }
}
