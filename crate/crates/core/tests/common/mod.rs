//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the engine's geometry, visibility or planning code.

#![allow(dead_code)]

use std::collections::VecDeque;

use sidewalk_core::annotations::{DoorPolygon, Goal};
use sidewalk_core::graph::{NodeId, Pose, Wedge};
use sidewalk_core::synth::{generate, WorldSpec};
use sidewalk_core::World;

pub fn spec(seed: u64, rows: u32, cols: u32, length: f64, addresses: u32) -> WorldSpec {
    WorldSpec {
        seed,
        rows,
        cols,
        segment_length: length,
        addresses_per_side: addresses,
        ..WorldSpec::default()
    }
}

pub fn world(seed: u64, rows: u32, cols: u32, length: f64, addresses: u32) -> World {
    generate(&spec(seed, rows, cols, length, addresses)).expect("valid spec")
}

/// Five small worlds, all at most 60 nodes.
pub fn small_worlds() -> Vec<World> {
    vec![
        world(1, 1, 1, 14.0, 2),
        world(2, 1, 2, 8.0, 1),
        world(3, 1, 0, 40.0, 3),
        world(4, 0, 1, 24.0, 2),
        world(5, 1, 1, 12.0, 1),
    ]
}

/// Whether column `c` of a `width`-column panorama lies in the field of view
/// centred on `bearing`, judged by the bearing of the column's pixel centre.
pub fn column_in_fov(c: u32, width: u32, bearing: f64, fov: f64) -> bool {
    let centre = (c as f64 + 0.5) / width as f64 * 360.0 - 180.0;
    let mut d = (centre - bearing).rem_euclid(360.0);
    if d > 180.0 {
        d = 360.0 - d;
    }
    d <= fov / 2.0
}

/// Columns of the shortest circular arc covering every listed column.
pub fn covering_arc(xs: &[u32], width: u32) -> Vec<u32> {
    let mut best: Option<(u32, u32)> = None;
    for &start in xs {
        let len = xs.iter().map(|&x| (x + width - start) % width).max().unwrap_or(0);
        if best.is_none_or(|(_, l)| len < l) {
            best = Some((start, len));
        }
    }
    let (start, len) = best.expect("at least one column");
    (0..=len).map(|i| (start + i) % width).collect()
}

pub fn door_framed(door: &DoorPolygon, width: u32, wedge: Wedge) -> bool {
    let xs: Vec<u32> = door.vertices.iter().map(|v| v[0] % width).collect();
    let bearing = wedge.index() as f64 * 22.5;
    covering_arc(&xs, width)
        .into_iter()
        .all(|c| column_in_fov(c, width, bearing, 135.0))
}

fn compass_bearing(from: [f64; 2], to: [f64; 2]) -> f64 {
    (to[0] - from[0]).atan2(to[1] - from[1]).to_degrees().rem_euclid(360.0)
}

/// Pose-space transition model rebuilt from raw coordinates and edges.
pub struct PoseModel {
    adjacency: Vec<Vec<u32>>,
    xy: Vec<[f64; 2]>,
}

impl PoseModel {
    pub fn new(world: &World) -> PoseModel {
        let g = world.graph();
        let mut adjacency = vec![Vec::new(); g.len()];
        for &(a, b) in g.edges() {
            adjacency[a.index()].push(b.0);
            adjacency[b.index()].push(a.0);
        }
        let xy = g.nodes().iter().map(|n| [n.x, n.y]).collect();
        PoseModel { adjacency, xy }
    }

    pub fn forward(&self, node: u32, wedge: u8) -> Option<u32> {
        let heading = wedge as f64 * 22.5;
        let mut best: Option<(f64, u32)> = None;
        for &n in &self.adjacency[node as usize] {
            let b = compass_bearing(self.xy[node as usize], self.xy[n as usize]);
            let mut d = (b - heading).rem_euclid(360.0);
            if d > 180.0 {
                d = 360.0 - d;
            }
            if d > 45.0 + 1e-9 {
                continue;
            }
            match best {
                Some((bd, bn)) if bd < d - 1e-9 || ((bd - d).abs() <= 1e-9 && bn < n) => {}
                _ => best = Some((d, n)),
            }
        }
        best.map(|(_, n)| n)
    }

    /// Successor poses under the five movement actions.
    pub fn successors(&self, node: u32, wedge: u8) -> [(u32, u8); 5] {
        let f = self.forward(node, wedge).unwrap_or(node);
        let rot = |d: i32| ((wedge as i32 + d).rem_euclid(16)) as u8;
        [
            (node, rot(-3)),
            (node, rot(-1)),
            (f, wedge),
            (node, rot(1)),
            (node, rot(3)),
        ]
    }

    pub fn len(&self) -> usize {
        self.xy.len()
    }
}

/// Framing wedges of `goal` recomputed by the pixel oracle.
pub fn framing_wedges(world: &World, goal: &Goal) -> Vec<u8> {
    let ann = world.annotations();
    let door = &ann.labels(goal.node).doors[goal.door];
    (0..16u8)
        .filter(|&w| door_framed(door, ann.pano_width, Wedge::new(w).unwrap()))
        .collect()
}

/// Fewest movement actions from `start` to a framed goal pose.
pub fn pose_bfs(model: &PoseModel, world: &World, goal: &Goal, start: Pose) -> Option<u32> {
    let framing = framing_wedges(world, goal);
    let is_goal = |n: u32, w: u8| n == goal.node.0 && framing.contains(&w);
    let idx = |n: u32, w: u8| n as usize * 16 + w as usize;
    let mut dist = vec![u32::MAX; model.len() * 16];
    let (n0, w0) = (start.node.0, start.wedge.index());
    dist[idx(n0, w0)] = 0;
    let mut queue = VecDeque::from([(n0, w0)]);
    while let Some((n, w)) = queue.pop_front() {
        let d = dist[idx(n, w)];
        if is_goal(n, w) {
            return Some(d);
        }
        for (m, v) in model.successors(n, w) {
            if dist[idx(m, v)] == u32::MAX {
                dist[idx(m, v)] = d + 1;
                queue.push_back((m, v));
            }
        }
    }
    None
}

/// Unweighted hop distances from `source`, from the raw edge list.
pub fn hops_from(world: &World, source: NodeId) -> Vec<u32> {
    let model = PoseModel::new(world);
    let mut dist = vec![u32::MAX; model.len()];
    dist[source.index()] = 0;
    let mut queue = VecDeque::from([source.0]);
    while let Some(n) = queue.pop_front() {
        for &m in &model.adjacency[n as usize] {
            if dist[m as usize] == u32::MAX {
                dist[m as usize] = dist[n as usize] + 1;
                queue.push_back(m);
            }
        }
    }
    dist
}

pub fn all_poses(world: &World) -> impl Iterator<Item = Pose> + '_ {
    (0..world.graph().len() as u32)
        .flat_map(|n| (0..16u8).map(move |w| Pose::new(NodeId(n), Wedge::new(w).unwrap())))
}
