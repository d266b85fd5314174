//! Step-optimal scripted agent.
//!
//! The cost-to-go field is a reverse Dijkstra over poses where every move is
//! "turn to an exit wedge, then step forward" or, at the goal node, "turn to
//! a framing wedge". Costs are compared lexicographically: action count
//! first, then shaping penalties (turns away from the correct direction and
//! forward steps that do not reduce hop distance), then a fixed tie-break.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::env::{Action, EpisodeState};
use crate::error::{Error, Result};
use crate::graph::{turn, turn_cost, turn_sequence, NodeId, Pose, TurnAction, Wedge, WEDGE_COUNT};
use crate::rewards::{correct_directions, steps_to_nearest, RewardTracker};
use crate::world::{pose_index, GoalContext, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Choice {
    Finish(Wedge),
    Forward(NodeId, Wedge),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Cost {
    actions: u32,
    penalty: u32,
}

#[derive(Clone, Debug)]
pub struct OracleField {
    best: Vec<Option<(Cost, Choice)>>,
}

fn away_turns(from: Wedge, to: Wedge, targets: &[Wedge]) -> u32 {
    let mut w = from;
    let mut away = 0;
    for t in turn_sequence(from, to) {
        let next = w.rotated(t.wedge_delta());
        if steps_to_nearest(next, targets) > steps_to_nearest(w, targets) {
            away += 1;
        }
        w = next;
    }
    away
}

impl OracleField {
    pub fn compute(world: &World, ctx: &GoalContext) -> OracleField {
        let graph = world.graph();
        let n = graph.len() * WEDGE_COUNT as usize;
        let correct: Vec<Vec<Wedge>> = (0..graph.len() as u32)
            .map(|i| correct_directions(world, ctx, NodeId(i)))
            .collect();
        let mut best: Vec<Option<(Cost, Choice)>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        let goal = ctx.goal.node;
        for w in Wedge::all() {
            let mut entry: Option<(Cost, Choice)> = None;
            for &f in &ctx.framing_wedges {
                let cand = (
                    Cost {
                        actions: turn_cost(w, f),
                        penalty: away_turns(w, f, &ctx.framing_wedges),
                    },
                    Choice::Finish(f),
                );
                if entry.is_none_or(|e| cand < e) {
                    entry = Some(cand);
                }
            }
            if let Some(e) = entry {
                let s = pose_index(Pose::new(goal, w));
                best[s] = Some(e);
                heap.push(Reverse((e.0, s)));
            }
        }
        while let Some(Reverse((cost, s))) = heap.pop() {
            if best[s].is_some_and(|(c, _)| c < cost) {
                continue;
            }
            let m = NodeId((s / WEDGE_COUNT as usize) as u32);
            let a = Wedge::wrapping((s % WEDGE_COUNT as usize) as i64);
            for nb in graph.neighbors(m) {
                let from = nb.id;
                if graph.forward_target(Pose::new(from, a)) != Some(m) {
                    continue;
                }
                let forward_penalty = u32::from(ctx.hop_distance(m) >= ctx.hop_distance(from));
                for w in Wedge::all() {
                    let cand = (
                        Cost {
                            actions: cost.actions + turn_cost(w, a) + 1,
                            penalty: cost.penalty + forward_penalty + away_turns(w, a, &correct[from.index()]),
                        },
                        Choice::Forward(m, a),
                    );
                    let t = pose_index(Pose::new(from, w));
                    if best[t].is_none_or(|e| cand < e) {
                        let improved = best[t].is_none_or(|e| cand.0 < e.0);
                        best[t] = Some(cand);
                        if improved {
                            heap.push(Reverse((cand.0, t)));
                        }
                    }
                }
            }
        }
        OracleField { best }
    }

    /// Optimal action count from `pose`, or `None` if the goal is unreachable.
    pub fn action_count(&self, pose: Pose) -> Option<u32> {
        self.best[pose_index(pose)].map(|(c, _)| c.actions)
    }

    fn choice(&self, pose: Pose) -> Option<Choice> {
        self.best[pose_index(pose)].map(|(_, c)| c)
    }
}

fn turn_action(t: TurnAction) -> Action {
    match t {
        TurnAction::LeftBig => Action::LeftBig,
        TurnAction::LeftSmall => Action::LeftSmall,
        TurnAction::RightSmall => Action::RightSmall,
        TurnAction::RightBig => Action::RightBig,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OraclePlan {
    pub actions: Vec<Action>,
    /// Pose after each action.
    pub poses: Vec<Pose>,
    pub dense_reward: f64,
}

impl OraclePlan {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Shortest action sequence from `start` to a pose that frames the goal door.
pub fn plan(world: &World, start: Pose, ctx: &GoalContext) -> Result<OraclePlan> {
    let field = ctx.oracle_field(world);
    let mut actions = Vec::new();
    let mut poses = Vec::new();
    let mut pose = start;
    let mut tracker = RewardTracker::start(world, ctx, start);
    let mut dense_reward = 0.0;
    let mut push = |pose: &mut Pose, action: Action, next: Pose| {
        dense_reward += tracker.dense_reward(world, ctx, *pose, next);
        actions.push(action);
        poses.push(next);
        *pose = next;
    };
    while !world.is_success_pose(&ctx.goal, pose) {
        let choice = field
            .choice(pose)
            .ok_or(Error::Unreachable(pose.node, ctx.goal.node))?;
        let (target, forward) = match choice {
            Choice::Finish(f) => (f, None),
            Choice::Forward(m, a) => (a, Some(m)),
        };
        for t in turn_sequence(pose.wedge, target) {
            let next = turn(pose, t);
            push(&mut pose, turn_action(t), next);
        }
        match forward {
            Some(m) => {
                let next = Pose::new(m, pose.wedge);
                push(&mut pose, Action::Forward, next);
            }
            None => break,
        }
    }
    Ok(OraclePlan {
        actions,
        poses,
        dense_reward,
    })
}

/// Next oracle action for a live episode, replanned from the current pose.
/// Once the goal is framed it emits DONE where legal, and otherwise idles.
pub fn act(world: &World, state: &EpisodeState) -> Result<Action> {
    let pose = state.pose();
    let ctx = state.goal();
    if world.is_success_pose(&ctx.goal, pose) {
        let done_legal = state.config().task.legal_actions().contains(&Action::Done);
        return Ok(if done_legal { Action::Done } else { Action::RightSmall });
    }
    let choice = ctx
        .oracle_field(world)
        .choice(pose)
        .ok_or(Error::Unreachable(pose.node, ctx.goal.node))?;
    let target = match choice {
        Choice::Finish(f) => f,
        Choice::Forward(_, a) if a == pose.wedge => return Ok(Action::Forward),
        Choice::Forward(_, a) => a,
    };
    Ok(turn_action(turn_sequence(pose.wedge, target)[0]))
}
