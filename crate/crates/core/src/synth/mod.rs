//! Procedural worlds: crossing streets sampled at one node per meter, with
//! numbered buildings on both sides and name signs at intersections.
//!
//! `rows` east-west streets cross `cols` north-south streets on an `L`-meter
//! grid, and every street runs one extra segment past its outermost
//! crossing. A single east-west street (`rows = 1, cols = 0`) is one segment.

pub mod font;
pub mod render;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotations::{AnnotationSet, FULL_PANO_HEIGHT, FULL_PANO_WIDTH};
use crate::error::{Error, Result};
use crate::graph::{BoundingBox2, GraphNode, NodeId, SegmentId, SegmentKind, StreetSegment, WorldGraph};
use crate::panorama::{PanoramaStore, LOW_PANO_HEIGHT, LOW_PANO_WIDTH};
use crate::world::World;
use render::{emit_labels, render, Scene, SceneObject, Shape, Surface};

/// Lateral distance from the walking line to the facades.
pub const SETBACK: f64 = 3.0;
pub const DENSE_STEP: f64 = 1.0 / 30.0;
const DOOR_WIDTH: f64 = 1.0;
const DOOR_HEIGHT: f64 = 2.1;
const FACADE_GAP: f64 = 0.05;
const PLATE_UNIT: f64 = 0.03;
const PLATE_BASE: f64 = 2.3;
const SIGN_LENGTH: f64 = 0.9;
const SIGN_Z: (f64, f64) = (2.5, 2.8);
const POLE_RADIUS: f64 = 0.04;

pub const DEFAULT_STREET_NAMES: [&str; 12] = [
    "Maple St",
    "Oak Ave",
    "Cedar St",
    "Elm Ave",
    "Pine St",
    "Birch Ave",
    "Ash St",
    "Willow Ave",
    "Spruce St",
    "Poplar Ave",
    "Linden St",
    "Walnut Ave",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub seed: u64,
    pub rows: u32,
    pub cols: u32,
    pub segment_length: f64,
    pub node_spacing: f64,
    pub addresses_per_side: u32,
    /// Street-name vocabulary; empty selects the built-in names.
    #[serde(default)]
    pub street_names: Vec<String>,
    /// Also render 3840x1280 panoramas.
    #[serde(default)]
    pub full_resolution: bool,
}

impl Default for WorldSpec {
    fn default() -> WorldSpec {
        WorldSpec {
            seed: 0,
            rows: 1,
            cols: 1,
            segment_length: 20.0,
            node_spacing: 1.0,
            addresses_per_side: 2,
            street_names: Vec::new(),
            full_resolution: false,
        }
    }
}

impl WorldSpec {
    pub fn vocabulary(&self) -> Vec<String> {
        let streets = (self.rows + self.cols) as usize;
        if self.street_names.is_empty() {
            DEFAULT_STREET_NAMES.iter().take(streets).map(|s| s.to_string()).collect()
        } else {
            self.street_names.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.rows + self.cols == 0 {
            return bad("at least one street is required".into());
        }
        if self.rows.min(self.cols) == 0 && self.rows.max(self.cols) > 1 {
            return bad("parallel streets need a crossing street to connect them".into());
        }
        if !(self.node_spacing > 0.0 && self.node_spacing.is_finite()) {
            return bad(format!("node spacing {} must be positive", self.node_spacing));
        }
        if !(self.segment_length >= 2.0 * SETBACK + 2.0 * self.node_spacing && self.segment_length.is_finite()) {
            return bad(format!(
                "segment length {} must be at least {}",
                self.segment_length,
                2.0 * SETBACK + 2.0 * self.node_spacing
            ));
        }
        if self.addresses_per_side == 0 {
            return bad("addresses per side must be at least 1".into());
        }
        let vocab = self.vocabulary();
        if vocab.len() < (self.rows + self.cols) as usize {
            return bad(format!("{} street names for {} streets", vocab.len(), self.rows + self.cols));
        }
        let mut sorted = vocab.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != vocab.len() || vocab.iter().any(|n| n.is_empty()) {
            return bad("street names must be distinct and non-empty".into());
        }
        Ok(())
    }
}

/// Greedy thinning of a polyline: keeps the first point, then every point at
/// least `spacing` path-meters past the last kept one, and always the last.
pub fn sparsify(chain: &[[f64; 2]], spacing: f64) -> Result<Vec<[f64; 2]>> {
    let (first, last) = match (chain.first(), chain.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::EmptyChain),
    };
    let mut out = vec![first];
    let mut since = 0.0;
    for pair in chain.windows(2) {
        since += (pair[1][0] - pair[0][0]).hypot(pair[1][1] - pair[0][1]);
        if since >= spacing - 1e-9 {
            out.push(pair[1]);
            since = 0.0;
        }
    }
    if chain.len() > 1 && since > 0.0 {
        out.push(last);
    }
    Ok(out)
}

struct Street {
    name: String,
    start: [f64; 2],
    dir: [f64; 2],
    length: f64,
    /// Along-street offsets of intersections, with their node ids.
    crossings: Vec<(f64, NodeId)>,
}

impl Street {
    fn at(&self, s: f64, lateral: f64) -> [f64; 2] {
        // left normal of the street direction
        let n = [-self.dir[1], self.dir[0]];
        [
            self.start[0] + self.dir[0] * s + n[0] * lateral,
            self.start[1] + self.dir[1] * s + n[1] * lateral,
        ]
    }
}

struct Builder {
    nodes: Vec<GraphNode>,
    edges: Vec<(NodeId, NodeId)>,
    segments: Vec<StreetSegment>,
    scene: Scene,
}

impl Builder {
    fn add_node(&mut self, p: [f64; 2], segment: SegmentId) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(GraphNode {
            id,
            x: p[0],
            y: p[1],
            pano: format!("{:06}", id.0),
            segment,
        });
        id
    }
}

fn random_color<R: Rng>(rng: &mut R, lo: u8, hi: u8) -> [u8; 3] {
    [rng.random_range(lo..=hi), rng.random_range(lo..=hi), rng.random_range(lo..=hi)]
}

fn streets(spec: &WorldSpec, vocab: &[String]) -> Vec<Street> {
    let l = spec.segment_length;
    let (rows, cols) = (spec.rows, spec.cols);
    let mut out = Vec::new();
    for i in 0..rows {
        let y = i as f64 * l;
        let (x0, length) = if cols > 0 { (-l, (cols + 1) as f64 * l) } else { (0.0, l) };
        out.push(Street {
            name: vocab[i as usize].clone(),
            start: [x0, y],
            dir: [1.0, 0.0],
            length,
            crossings: (0..cols)
                .map(|j| ((j + 1) as f64 * l, NodeId(i * cols + j)))
                .collect(),
        });
    }
    for j in 0..cols {
        let x = j as f64 * l;
        let (y0, length) = if rows > 0 { (-l, (rows + 1) as f64 * l) } else { (0.0, l) };
        out.push(Street {
            name: vocab[(rows + j) as usize].clone(),
            start: [x, y0],
            dir: [0.0, 1.0],
            length,
            crossings: (0..rows)
                .map(|i| ((i + 1) as f64 * l, NodeId(i * cols + j)))
                .collect(),
        });
    }
    out
}

fn round_up_hundred(n: u32) -> u32 {
    n.div_ceil(100) * 100
}

/// Builds the graph and scene geometry for `spec`.
fn layout(spec: &WorldSpec) -> Result<(Builder, Vec<String>)> {
    let vocab = spec.vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = Builder {
        nodes: Vec::new(),
        edges: Vec::new(),
        segments: Vec::new(),
        scene: Scene::default(),
    };
    let streets = streets(spec, &vocab);
    let (rows, cols) = (spec.rows as usize, spec.cols as usize);
    for i in 0..rows {
        for j in 0..cols {
            let seg = SegmentId(b.segments.len() as u32);
            let p = [j as f64 * spec.segment_length, i as f64 * spec.segment_length];
            let id = b.add_node(p, seg);
            b.segments.push(StreetSegment {
                id: seg,
                name: format!("{} & {}", vocab[i], vocab[rows + j]),
                kind: SegmentKind::Intersection,
                nodes: vec![id],
            });
        }
    }
    let mut base = 0u32;
    for street in &streets {
        let mut breaks: Vec<(f64, Option<NodeId>)> = vec![(0.0, None)];
        breaks.extend(street.crossings.iter().map(|&(s, id)| (s, Some(id))));
        breaks.push((street.length, None));
        let (mut odd, mut even) = (0u32, 0u32);
        for piece in breaks.windows(2) {
            let ((p, start_x), (q, end_x)) = (piece[0], piece[1]);
            let steps = ((q - p) / DENSE_STEP).round().max(1.0) as usize;
            let dense: Vec<[f64; 2]> = (0..=steps)
                .map(|k| street.at(p + (q - p) * k as f64 / steps as f64, 0.0))
                .collect();
            let mut kept = sparsify(&dense, spec.node_spacing)?;
            if end_x.is_some() {
                kept.pop();
            }
            if start_x.is_some() {
                kept.remove(0);
            }
            if kept.is_empty() {
                return Err(Error::InvalidSpec("segment too short for its node spacing".into()));
            }
            let seg = SegmentId(b.segments.len() as u32);
            let ids: Vec<NodeId> = kept.iter().map(|&pt| b.add_node(pt, seg)).collect();
            for w in ids.windows(2) {
                b.edges.push((w[0], w[1]));
            }
            if let Some(x) = start_x {
                b.edges.push((x, ids[0]));
            }
            if let Some(x) = end_x {
                b.edges.push((*ids.last().expect("non-empty"), x));
            }
            b.segments.push(StreetSegment {
                id: seg,
                name: street.name.clone(),
                kind: SegmentKind::Segment,
                nodes: ids,
            });

            let lo = p + if start_x.is_some() { SETBACK } else { 0.0 };
            let hi = q - if end_x.is_some() { SETBACK } else { 0.0 };
            let k = spec.addresses_per_side;
            let width = (hi - lo) / k as f64;
            if width < DOOR_WIDTH + 0.6 {
                return Err(Error::InvalidSpec(format!(
                    "{k} addresses per side leave {width:.2} m per building"
                )));
            }
            for side in [1.0, -1.0] {
                for m in 0..k {
                    let (s0, s1) = (lo + m as f64 * width, lo + (m + 1) as f64 * width);
                    let number = if side > 0.0 {
                        odd += 1;
                        base + 2 * odd - 1
                    } else {
                        even += 1;
                        base + 2 * even
                    };
                    if number > 9999 {
                        return Err(Error::InvalidSpec("house numbers exceed 9999".into()));
                    }
                    add_building(&mut b.scene, &mut rng, street, side, s0, s1, number.to_string());
                }
            }
            for (offset, at_crossing) in [(p, start_x.is_some()), (q, end_x.is_some())] {
                if at_crossing {
                    let s = if offset == p { p + SETBACK + 0.6 } else { q - SETBACK - 0.6 };
                    add_sign(&mut b.scene, street, s);
                }
            }
        }
        let top = base + 2 * odd.max(even);
        base = round_up_hundred(top + 1);
    }
    Ok((b, vocab))
}

fn add_building<R: Rng>(scene: &mut Scene, rng: &mut R, street: &Street, side: f64, s0: f64, s1: f64, number: String) {
    let height = rng.random_range(5.0..12.0);
    let facade_color = random_color(rng, 60, 215);
    let door_color = random_color(rng, 30, 120);
    // seen from the street, the left end of a left-side facade is at s0
    let ends = |lateral: f64, a: f64, b: f64| {
        if side > 0.0 {
            (street.at(a, lateral), street.at(b, lateral))
        } else {
            (street.at(b, lateral), street.at(a, lateral))
        }
    };
    let (a, b) = ends(side * SETBACK, s0, s1);
    scene.objects.push(SceneObject {
        shape: Shape::OneSided { a, b },
        z0: 0.0,
        z1: height,
        surface: Surface::Facade { color: facade_color },
    });
    let mid = (s0 + s1) / 2.0;
    let front = side * (SETBACK - FACADE_GAP);
    let (a, b) = ends(front, mid - DOOR_WIDTH / 2.0, mid + DOOR_WIDTH / 2.0);
    scene.objects.push(SceneObject {
        shape: Shape::OneSided { a, b },
        z0: 0.0,
        z1: DOOR_HEIGHT,
        surface: Surface::Door {
            color: door_color,
            number: number.clone(),
        },
    });
    let (uw, uh) = font::plate_units(number.len());
    let half = uw as f64 * PLATE_UNIT / 2.0;
    let (a, b) = ends(front, mid - half, mid + half);
    scene.objects.push(SceneObject {
        shape: Shape::OneSided { a, b },
        z0: PLATE_BASE,
        z1: PLATE_BASE + uh as f64 * PLATE_UNIT,
        surface: Surface::Plate { number },
    });
}

fn add_sign(scene: &mut Scene, street: &Street, s: f64) {
    let lateral = -(SETBACK - 0.4);
    let center = street.at(s, lateral);
    scene.objects.push(SceneObject {
        shape: Shape::Pole {
            center,
            radius: POLE_RADIUS,
        },
        z0: 0.0,
        z1: SIGN_Z.0,
        surface: Surface::Pole,
    });
    scene.objects.push(SceneObject {
        shape: Shape::TwoSided {
            a: street.at(s - SIGN_LENGTH / 2.0, lateral),
            b: street.at(s + SIGN_LENGTH / 2.0, lateral),
        },
        z0: SIGN_Z.0,
        z1: SIGN_Z.1,
        surface: Surface::Sign {
            name: street.name.clone(),
        },
    });
}

/// Scene geometry and graph for `spec`, without rendering.
pub struct Layout {
    pub graph: WorldGraph,
    pub scene: Scene,
    pub vocabulary: Vec<String>,
}

pub fn build_layout(spec: &WorldSpec) -> Result<Layout> {
    spec.validate()?;
    let (b, vocabulary) = layout(spec)?;
    let bbox = BoundingBox2::around(b.nodes.iter().map(|n| (n.x, n.y)), SETBACK);
    let graph = WorldGraph::new(b.nodes, b.edges, b.segments, bbox)?;
    Ok(Layout {
        graph,
        scene: b.scene,
        vocabulary,
    })
}

/// Generates a complete, validated world. Identical specs give identical
/// worlds; nodes render in parallel and are merged in node order.
pub fn generate(spec: &WorldSpec) -> Result<World> {
    let layout = build_layout(spec)?;
    let scene = &layout.scene;
    let rendered: Vec<_> = layout
        .graph
        .nodes()
        .par_iter()
        .map(|n| {
            let cam = [n.x, n.y];
            let labels = emit_labels(scene, cam, n.id, FULL_PANO_WIDTH, FULL_PANO_HEIGHT)?;
            let low = render(scene, cam, LOW_PANO_WIDTH, LOW_PANO_HEIGHT, false).0;
            let full = spec
                .full_resolution
                .then(|| render(scene, cam, FULL_PANO_WIDTH, FULL_PANO_HEIGHT, false).0);
            Ok((labels, low, full))
        })
        .collect::<Result<_>>()?;
    let mut panoramas = Vec::with_capacity(rendered.len());
    let mut low = Vec::with_capacity(rendered.len());
    let mut full = spec.full_resolution.then(Vec::new);
    for (labels, l, f) in rendered {
        panoramas.push(labels);
        low.push(l);
        if let (Some(full), Some(f)) = (full.as_mut(), f) {
            full.push(f);
        }
    }
    let annotations = AnnotationSet {
        pano_width: FULL_PANO_WIDTH,
        pano_height: FULL_PANO_HEIGHT,
        panoramas,
    };
    World::new(layout.graph, annotations, PanoramaStore { low, full }, layout.vocabulary)
}
