//! A validated, immutable world: graph, labels, panoramas, goal index and the
//! derived episode horizons.

use std::collections::{BTreeSet, VecDeque};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::annotations::{fov_interval, door_in_view, AnnotationSet, Goal, GoalIndex, FOV_DEGREES};
use crate::error::{Error, Result};
use crate::oracle::OracleField;
use crate::graph::{turn, NodeId, Pose, SegmentKind, TurnAction, Wedge, WorldGraph, WEDGE_COUNT};
use crate::panorama::{PanoramaStore, Resolution, LOW_PANO_HEIGHT, LOW_PANO_WIDTH};

/// Longest optimal action count over each task family's start distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizons {
    pub segment: u32,
    pub intersection: Option<u32>,
}

/// Everything derived from one goal that episodes, rewards and the oracle
/// need: hop distances to the goal node and the wedges framing the door.
#[derive(Clone, Debug)]
pub struct GoalContext {
    pub goal: Goal,
    pub goal_xy: [f64; 2],
    pub dist: Vec<u32>,
    pub framing_wedges: Vec<Wedge>,
    oracle: OnceLock<Arc<OracleField>>,
}

impl GoalContext {
    pub fn hop_distance(&self, node: NodeId) -> u32 {
        self.dist[node.index()]
    }

    /// Cost-to-go field of the oracle, computed on first use.
    pub fn oracle_field(&self, world: &World) -> &OracleField {
        self.oracle.get_or_init(|| Arc::new(OracleField::compute(world, self)))
    }
}

#[derive(Debug)]
pub struct World {
    graph: WorldGraph,
    annotations: AnnotationSet,
    panoramas: PanoramaStore,
    vocabulary: Vec<String>,
    goal_index: GoalIndex,
    // addresses usable by same-segment tasks, and by the intersection task
    segment_goals: Vec<Goal>,
    intersection_goals: Vec<(Goal, Vec<NodeId>)>,
    horizons: Horizons,
    // reverse pose transitions, indexed like `pose_index`
    pose_preds: Vec<Vec<u32>>,
}

impl World {
    pub fn new(
        graph: WorldGraph,
        annotations: AnnotationSet,
        panoramas: PanoramaStore,
        vocabulary: Vec<String>,
    ) -> Result<World> {
        annotations.validate(graph.len(), &vocabulary)?;
        for seg in graph.segments() {
            if seg.kind == SegmentKind::Segment && !vocabulary.contains(&seg.name) {
                return Err(Error::UnknownStreetName(seg.name.clone()));
            }
        }
        if panoramas.low.len() != graph.len() {
            return Err(Error::InvalidWorld(format!(
                "{} low-resolution panoramas for {} nodes",
                panoramas.low.len(),
                graph.len()
            )));
        }
        if let Some(bad) = panoramas
            .low
            .iter()
            .position(|r| r.width() != LOW_PANO_WIDTH || r.height() != LOW_PANO_HEIGHT)
        {
            return Err(Error::InvalidWorld(format!("low-resolution panorama {bad} has the wrong size")));
        }
        if let Some(full) = &panoramas.full {
            if full.len() != graph.len()
                || full
                    .iter()
                    .any(|r| r.width() != annotations.pano_width || r.height() != annotations.pano_height)
            {
                return Err(Error::InvalidWorld("full-resolution panoramas do not match the annotations".into()));
            }
        }
        let goal_index = GoalIndex::build(&annotations)?;
        let mut world = World {
            graph,
            annotations,
            panoramas,
            vocabulary,
            goal_index,
            segment_goals: Vec::new(),
            intersection_goals: Vec::new(),
            horizons: Horizons {
                segment: 0,
                intersection: None,
            },
            pose_preds: Vec::new(),
        };
        world.pose_preds = world.pose_predecessors();
        for goal in world.goal_index.goals() {
            if world.framing_wedges(goal).is_empty() {
                return Err(Error::UnframeableDoor {
                    address: goal.address.clone(),
                    node: goal.node,
                });
            }
        }
        world.segment_goals = world
            .goal_index
            .goals()
            .filter(|g| {
                let seg = world.graph.segment_of(g.node);
                seg.kind == SegmentKind::Segment && seg.nodes.len() >= 2
            })
            .cloned()
            .collect();
        if world.segment_goals.is_empty() {
            return Err(Error::InvalidWorld("no addressed door lies on a street segment with 2 or more nodes".into()));
        }
        world.intersection_goals = world
            .segment_goals
            .iter()
            .filter_map(|g| {
                let starts = world.adjacent_segment_nodes(g.node);
                (!starts.is_empty()).then(|| (g.clone(), starts))
            })
            .collect();
        world.horizons = world.compute_horizons()?;
        Ok(world)
    }

    pub fn graph(&self) -> &WorldGraph {
        &self.graph
    }

    pub fn annotations(&self) -> &AnnotationSet {
        &self.annotations
    }

    pub fn panoramas(&self) -> &PanoramaStore {
        &self.panoramas
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn goal_index(&self) -> &GoalIndex {
        &self.goal_index
    }

    pub fn segment_goals(&self) -> &[Goal] {
        &self.segment_goals
    }

    pub fn intersection_goals(&self) -> &[(Goal, Vec<NodeId>)] {
        &self.intersection_goals
    }

    pub fn horizons(&self) -> Horizons {
        self.horizons
    }

    pub fn node_xy(&self, node: NodeId) -> [f64; 2] {
        let n = self.graph.node(node);
        [n.x, n.y]
    }

    pub fn has_resolution(&self, resolution: Resolution) -> bool {
        match resolution {
            Resolution::Low => true,
            Resolution::High => self.panoramas.full.is_some(),
        }
    }

    /// Wedges from which the goal door polygon lies fully inside the field of
    /// view at the goal node.
    pub fn framing_wedges(&self, goal: &Goal) -> Vec<Wedge> {
        let door = goal.door(&self.annotations);
        Wedge::all()
            .filter(|&w| door_in_view(door, &fov_interval(w, self.annotations.pano_width, FOV_DEGREES)))
            .collect()
    }

    pub fn is_success_pose(&self, goal: &Goal, pose: Pose) -> bool {
        pose.node == goal.node
            && door_in_view(
                goal.door(&self.annotations),
                &fov_interval(pose.wedge, self.annotations.pano_width, FOV_DEGREES),
            )
    }

    pub fn goal_context(&self, goal: &Goal) -> GoalContext {
        GoalContext {
            goal: goal.clone(),
            goal_xy: self.node_xy(goal.node),
            dist: self.graph.distances_from(goal.node),
            framing_wedges: self.framing_wedges(goal),
            oracle: OnceLock::new(),
        }
    }

    /// Nodes of other street segments that touch an intersection bordering
    /// the goal's segment.
    fn adjacent_segment_nodes(&self, goal_node: NodeId) -> Vec<NodeId> {
        let goal_seg = self.graph.segment_of(goal_node);
        let mut segments = BTreeSet::new();
        for &n in &goal_seg.nodes {
            for nb in self.graph.neighbors(n) {
                let s = self.graph.segment_of(nb.id);
                if s.kind != SegmentKind::Intersection {
                    continue;
                }
                for &m in &s.nodes {
                    for nb2 in self.graph.neighbors(m) {
                        let s2 = self.graph.segment_of(nb2.id);
                        if s2.kind == SegmentKind::Segment && s2.id != goal_seg.id {
                            segments.insert(s2.id);
                        }
                    }
                }
            }
        }
        segments
            .into_iter()
            .flat_map(|s| self.graph.segment(s).nodes.iter().copied())
            .collect()
    }

    /// Optimal action counts from every pose to the goal, by breadth-first
    /// search backwards from the success poses. Indexed by
    /// `node * 16 + wedge`; `u32::MAX` where the goal is unreachable.
    pub fn optimal_action_counts(&self, goal: &Goal) -> Vec<u32> {
        let n = self.graph.len() * WEDGE_COUNT as usize;
        let preds = &self.pose_preds;
        let mut dist = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        let door_node = goal.node;
        for w in Wedge::all() {
            let pose = Pose::new(door_node, w);
            if self.is_success_pose(goal, pose) {
                let s = pose_index(pose);
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &p in &preds[s] {
                let p = p as usize;
                if dist[p] == u32::MAX {
                    dist[p] = dist[s] + 1;
                    queue.push_back(p);
                }
            }
        }
        dist
    }

    fn pose_predecessors(&self) -> Vec<Vec<u32>> {
        let n = self.graph.len() * WEDGE_COUNT as usize;
        let mut preds = vec![Vec::new(); n];
        for node in 0..self.graph.len() as u32 {
            for w in Wedge::all() {
                let pose = Pose::new(NodeId(node), w);
                let from = pose_index(pose) as u32;
                for t in [
                    TurnAction::LeftBig,
                    TurnAction::LeftSmall,
                    TurnAction::RightSmall,
                    TurnAction::RightBig,
                ] {
                    preds[pose_index(turn(pose, t))].push(from);
                }
                if let Some(next) = self.graph.forward_target(pose) {
                    preds[pose_index(Pose::new(next, w))].push(from);
                }
            }
        }
        preds
    }

    fn compute_horizons(&self) -> Result<Horizons> {
        let worst = |goal: &Goal, starts: &[NodeId]| -> Result<u32> {
            let counts = self.optimal_action_counts(goal);
            let mut worst = 0;
            for &node in starts {
                for w in Wedge::all() {
                    let c = counts[pose_index(Pose::new(node, w))];
                    if c == u32::MAX {
                        return Err(Error::Unreachable(node, goal.node));
                    }
                    worst = worst.max(c);
                }
            }
            Ok(worst)
        };
        let mut segment = 0;
        for g in &self.segment_goals {
            segment = segment.max(worst(g, &self.graph.segment_of(g.node).nodes)?);
        }
        let mut intersection = None;
        for (g, starts) in &self.intersection_goals {
            let h = worst(g, starts)?;
            intersection = Some(intersection.map_or(h, |cur: u32| cur.max(h)));
        }
        Ok(Horizons { segment, intersection })
    }
}

pub fn pose_index(pose: Pose) -> usize {
    pose.node.index() * WEDGE_COUNT as usize + pose.wedge.index() as usize
}
