//! Pose graph world model: nodes with metric coordinates, street segments,
//! heading arithmetic and the forward-transition rule.
//!
//! Headings are discretised into 16 wedges of 22.5 degrees. Wedge `k` points
//! at compass bearing `k * 22.5`, measured clockwise from north (+y).

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WEDGE_COUNT: u8 = 16;
pub const WEDGE_DEGREES: f64 = 22.5;
/// Maximum angular offset between heading and a neighbour for forward motion.
pub const FORWARD_CONE_DEGREES: f64 = 45.0;

const ANGLE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentId(pub u32);

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One of the 16 discrete headings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Wedge(u8);

impl Wedge {
    pub const NORTH: Wedge = Wedge(0);

    pub fn new(index: u8) -> Option<Wedge> {
        (index < WEDGE_COUNT).then_some(Wedge(index))
    }

    /// Wraps any integer onto the wedge circle.
    pub fn wrapping(index: i64) -> Wedge {
        Wedge(index.rem_euclid(WEDGE_COUNT as i64) as u8)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn bearing(self) -> f64 {
        self.0 as f64 * WEDGE_DEGREES
    }

    pub fn rotated(self, steps: i8) -> Wedge {
        Wedge::wrapping(self.0 as i64 + steps as i64)
    }

    /// Circular distance in wedge steps, in `0..=8`.
    pub fn steps_to(self, other: Wedge) -> u8 {
        let d = (other.0 as i16 - self.0 as i16).rem_euclid(WEDGE_COUNT as i16) as u8;
        d.min(WEDGE_COUNT - d)
    }

    /// Clockwise offset from `self` to `other`, in `0..16`.
    pub fn clockwise_to(self, other: Wedge) -> u8 {
        (other.0 as i16 - self.0 as i16).rem_euclid(WEDGE_COUNT as i16) as u8
    }

    /// The wedge whose bearing is closest to `bearing`; ties go to the
    /// smaller wedge index.
    pub fn nearest(bearing: f64) -> Wedge {
        let mut best = Wedge(0);
        let mut best_diff = f64::INFINITY;
        for w in Wedge::all() {
            let d = angular_difference(w.bearing(), bearing);
            if d < best_diff - ANGLE_EPS {
                best = w;
                best_diff = d;
            }
        }
        best
    }

    pub fn all() -> impl Iterator<Item = Wedge> {
        (0..WEDGE_COUNT).map(Wedge)
    }
}

impl TryFrom<u8> for Wedge {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        Wedge::new(v).ok_or_else(|| format!("wedge {v} out of range 0..16"))
    }
}

impl From<Wedge> for u8 {
    fn from(w: Wedge) -> u8 {
        w.0
    }
}

impl fmt::Display for Wedge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Absolute circular difference between two bearings, in `[0, 180]`.
pub fn angular_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TurnAction {
    LeftBig,
    LeftSmall,
    RightSmall,
    RightBig,
}

impl TurnAction {
    /// Signed wedge offset; positive is clockwise.
    pub fn wedge_delta(self) -> i8 {
        match self {
            TurnAction::LeftBig => -3,
            TurnAction::LeftSmall => -1,
            TurnAction::RightSmall => 1,
            TurnAction::RightBig => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pose {
    pub node: NodeId,
    pub wedge: Wedge,
}

impl Pose {
    pub fn new(node: NodeId, wedge: Wedge) -> Pose {
        Pose { node, wedge }
    }
}

pub fn turn(pose: Pose, action: TurnAction) -> Pose {
    Pose {
        node: pose.node,
        wedge: pose.wedge.rotated(action.wedge_delta()),
    }
}

/// Minimal turn sequence rotating `from` onto `to`: big turns first, then
/// small ones, in the shorter rotational direction (clockwise at exactly 180).
pub fn turn_sequence(from: Wedge, to: Wedge) -> Vec<TurnAction> {
    let cw = from.clockwise_to(to);
    let (steps, big, small) = if cw <= WEDGE_COUNT / 2 {
        (cw, TurnAction::RightBig, TurnAction::RightSmall)
    } else {
        (WEDGE_COUNT - cw, TurnAction::LeftBig, TurnAction::LeftSmall)
    };
    let mut seq = vec![big; (steps / 3) as usize];
    seq.extend(std::iter::repeat_n(small, (steps % 3) as usize));
    seq
}

/// Number of turn actions needed to rotate by `steps` wedges (0..=8).
pub fn turn_cost(from: Wedge, to: Wedge) -> u32 {
    let steps = from.steps_to(to) as u32;
    steps / 3 + steps % 3
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Segment,
    Intersection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub pano: String,
    pub segment: SegmentId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreetSegment {
    pub id: SegmentId,
    pub name: String,
    pub kind: SegmentKind,
    pub nodes: Vec<NodeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox2 {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox2 {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn around(points: impl IntoIterator<Item = (f64, f64)>, margin: f64) -> BoundingBox2 {
        let mut bb = BoundingBox2 {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for (x, y) in points {
            bb.min_x = bb.min_x.min(x);
            bb.min_y = bb.min_y.min(y);
            bb.max_x = bb.max_x.max(x);
            bb.max_y = bb.max_y.max(y);
        }
        bb.min_x -= margin;
        bb.min_y -= margin;
        bb.max_x += margin;
        bb.max_y += margin;
        bb
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub id: NodeId,
    pub bearing: f64,
}

/// Immutable pose graph. Construction validates every structural invariant,
/// so a `WorldGraph` value is always connected and symmetric.
#[derive(Clone, Debug)]
pub struct WorldGraph {
    nodes: Vec<GraphNode>,
    edges: Vec<(NodeId, NodeId)>,
    segments: Vec<StreetSegment>,
    bbox: BoundingBox2,
    // sorted by neighbour id
    adjacency: Vec<Vec<Neighbor>>,
}

impl WorldGraph {
    pub fn new(
        nodes: Vec<GraphNode>,
        edges: Vec<(NodeId, NodeId)>,
        segments: Vec<StreetSegment>,
        bbox: BoundingBox2,
    ) -> Result<WorldGraph> {
        if nodes.is_empty() {
            return Err(Error::InvalidWorld("graph has no nodes".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.id.index() != i {
                return Err(Error::InvalidWorld(format!(
                    "node ids must be dense: position {i} holds node {}",
                    n.id
                )));
            }
            if !n.x.is_finite() || !n.y.is_finite() {
                return Err(Error::InvalidWorld(format!("node {} has non-finite coordinates", n.id)));
            }
            if !bbox.contains(n.x, n.y) {
                return Err(Error::InvalidWorld(format!("node {} lies outside the bounding box", n.id)));
            }
        }
        let n = nodes.len();
        let mut adjacency: Vec<Vec<Neighbor>> = vec![Vec::new(); n];
        let mut canonical = Vec::with_capacity(edges.len());
        for &(a, b) in &edges {
            if a.index() >= n {
                return Err(Error::UnknownNode(a));
            }
            if b.index() >= n {
                return Err(Error::UnknownNode(b));
            }
            if a == b {
                return Err(Error::InvalidWorld(format!("self loop at node {a}")));
            }
            canonical.push((a.min(b), a.max(b)));
        }
        canonical.sort();
        canonical.dedup();
        for &(a, b) in &canonical {
            let ab = bearing_between(&nodes[a.index()], &nodes[b.index()])?;
            let ba = bearing_between(&nodes[b.index()], &nodes[a.index()])?;
            adjacency[a.index()].push(Neighbor { id: b, bearing: ab });
            adjacency[b.index()].push(Neighbor { id: a, bearing: ba });
        }
        for list in &mut adjacency {
            list.sort_by_key(|nb| nb.id);
        }

        let mut owner = vec![None; n];
        for (i, seg) in segments.iter().enumerate() {
            if seg.id.0 as usize != i {
                return Err(Error::InvalidWorld(format!("segment ids must be dense: position {i} holds {}", seg.id)));
            }
            if seg.nodes.is_empty() {
                return Err(Error::InvalidWorld(format!("segment {} has no nodes", seg.id)));
            }
            for (k, &node) in seg.nodes.iter().enumerate() {
                if node.index() >= n {
                    return Err(Error::UnknownNode(node));
                }
                if let Some(prev) = owner[node.index()].replace(seg.id) {
                    return Err(Error::InvalidWorld(format!(
                        "node {node} belongs to segments {prev} and {}",
                        seg.id
                    )));
                }
                if nodes[node.index()].segment != seg.id {
                    return Err(Error::InvalidWorld(format!(
                        "node {node} records segment {} but is listed in {}",
                        nodes[node.index()].segment,
                        seg.id
                    )));
                }
                if k > 0 {
                    let prev = seg.nodes[k - 1];
                    if !adjacency[prev.index()].iter().any(|nb| nb.id == node) {
                        return Err(Error::InvalidWorld(format!(
                            "segment {} lists non-adjacent consecutive nodes {prev} and {node}",
                            seg.id
                        )));
                    }
                }
            }
        }
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(Error::InvalidWorld(format!("node {i} belongs to no segment")));
        }

        let graph = WorldGraph {
            nodes,
            edges: canonical,
            segments,
            bbox,
            adjacency,
        };
        let dist = graph.distances_from(NodeId(0));
        if let Some(i) = dist.iter().position(|&d| d == u32::MAX) {
            return Err(Error::Disconnected(NodeId(i as u32)));
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &GraphNode {
        &self.nodes[id.index()]
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn segments(&self) -> &[StreetSegment] {
        &self.segments
    }

    pub fn segment(&self, id: SegmentId) -> &StreetSegment {
        &self.segments[id.0 as usize]
    }

    pub fn segment_of(&self, node: NodeId) -> &StreetSegment {
        self.segment(self.node(node).segment)
    }

    pub fn bbox(&self) -> BoundingBox2 {
        self.bbox
    }

    pub fn neighbors(&self, id: NodeId) -> &[Neighbor] {
        &self.adjacency[id.index()]
    }

    pub fn is_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a).iter().any(|nb| nb.id == b)
    }

    pub fn bearing(&self, from: NodeId, to: NodeId) -> Result<f64> {
        bearing_between(self.node(from), self.node(to))
    }

    /// Neighbour reached by a forward action: the one whose bearing is
    /// closest to the heading, if within the forward cone (ties go to the
    /// smaller id).
    pub fn forward_target(&self, pose: Pose) -> Option<NodeId> {
        let heading = pose.wedge.bearing();
        let mut best: Option<(NodeId, f64)> = None;
        for nb in self.neighbors(pose.node) {
            let d = angular_difference(heading, nb.bearing);
            match best {
                Some((_, bd)) if d >= bd - ANGLE_EPS => {}
                _ => best = Some((nb.id, d)),
            }
        }
        best.filter(|&(_, d)| d <= FORWARD_CONE_DEGREES + ANGLE_EPS)
            .map(|(id, _)| id)
    }

    /// Breadth-first hop counts from `source` to every node; `u32::MAX`
    /// marks unreachable nodes.
    pub fn distances_from(&self, source: NodeId) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.nodes.len()];
        let mut queue = VecDeque::new();
        dist[source.index()] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.index()];
            for nb in &self.adjacency[u.index()] {
                if dist[nb.id.index()] == u32::MAX {
                    dist[nb.id.index()] = du + 1;
                    queue.push_back(nb.id);
                }
            }
        }
        dist
    }

    pub fn hop_distance(&self, a: NodeId, b: NodeId) -> Result<u32> {
        for id in [a, b] {
            if !self.contains(id) {
                return Err(Error::UnknownNode(id));
            }
        }
        match self.distances_from(b)[a.index()] {
            u32::MAX => Err(Error::Unreachable(a, b)),
            d => Ok(d),
        }
    }

    /// Next node on a shortest path toward the source of `dist`, ties broken
    /// by smallest id. `None` at the source itself.
    pub fn next_hop(&self, dist: &[u32], node: NodeId) -> Option<NodeId> {
        let d = dist[node.index()];
        if d == 0 || d == u32::MAX {
            return None;
        }
        self.neighbors(node)
            .iter()
            .find(|nb| dist[nb.id.index()] == d - 1)
            .map(|nb| nb.id)
    }

    /// Shortest node path from `from` to the source of `dist`, inclusive.
    pub fn path_along(&self, dist: &[u32], from: NodeId) -> Vec<NodeId> {
        let mut path = vec![from];
        let mut cur = from;
        while let Some(next) = self.next_hop(dist, cur) {
            path.push(next);
            cur = next;
        }
        path
    }

    pub fn intersection_count(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Intersection)
            .count()
    }
}

fn bearing_between(from: &GraphNode, to: &GraphNode) -> Result<f64> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::CoincidentNodes(from.id, to.id));
    }
    Ok(normalize_bearing(dx.atan2(dy).to_degrees()))
}

/// Maps any angle in degrees onto `[0, 360)`.
pub fn normalize_bearing(deg: f64) -> f64 {
    let b = deg.rem_euclid(360.0);
    if b >= 360.0 {
        0.0
    } else {
        b
    }
}
