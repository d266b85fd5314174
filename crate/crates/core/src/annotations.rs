//! Ground-truth labels per panorama, field-of-view containment tests and the
//! address to goal-node index.
//!
//! Column geometry follows the equirectangular convention: pixel column `c`
//! of a `W`-wide panorama looks toward bearing `c / W * 360 - 180`, so the
//! seam sits due south and north maps to column `W / 2`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, Pose, Wedge};

/// Horizontal field of view of the agent's image crop, in degrees.
pub const FOV_DEGREES: f64 = 135.0;
pub const FULL_PANO_WIDTH: u32 = 3840;
pub const FULL_PANO_HEIGHT: u32 = 1280;

/// Axis-aligned pixel box in full-resolution panorama coordinates.
///
/// Columns `x0..=x1` are inclusive and wrap across the seam when `x0 > x1`.
/// Rows `y0..y1` are half-open.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: u32,
    pub x1: u32,
    pub y0: u32,
    pub y1: u32,
}

impl BoundingBox {
    pub fn columns(&self, pano_width: u32) -> u32 {
        (self.x1 + pano_width - self.x0) % pano_width + 1
    }

    pub fn area(&self, pano_width: u32) -> u64 {
        self.columns(pano_width) as u64 * (self.y1 - self.y0) as u64
    }

    fn validate(&self, pano_width: u32, pano_height: u32) -> Result<()> {
        if self.x0 >= pano_width || self.x1 >= pano_width || self.y0 >= self.y1 || self.y1 > pano_height {
            return Err(Error::InvalidWorld(format!("bounding box {self:?} out of range")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HouseNumberLabel {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreetSignLabel {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoorPolygon {
    pub vertices: Vec<[u32; 2]>,
    pub house_number: String,
    /// Shoelace area in square pixels, cached at construction.
    pub area: f64,
}

impl DoorPolygon {
    pub fn new(vertices: Vec<[u32; 2]>, house_number: String, pano_width: u32) -> Result<DoorPolygon> {
        let mut door = DoorPolygon {
            vertices,
            house_number,
            area: 0.0,
        };
        door.area = door.compute_area(pano_width)?;
        if door.area <= 0.0 {
            return Err(Error::InvalidWorld(format!(
                "door polygon for {} has zero area",
                door.house_number
            )));
        }
        Ok(door)
    }

    /// Smallest circular column range covering every vertex, as `(x0, x1)`
    /// inclusive.
    pub fn column_extent(&self, pano_width: u32) -> (u32, u32) {
        let mut xs: Vec<u32> = self.vertices.iter().map(|v| v[0] % pano_width).collect();
        xs.sort_unstable();
        xs.dedup();
        let n = xs.len();
        if n == 1 {
            return (xs[0], xs[0]);
        }
        // the extent is the complement of the widest gap between vertices
        let mut gap_end = 0;
        let mut widest = xs[0] + pano_width - xs[n - 1];
        for i in 1..n {
            let gap = xs[i] - xs[i - 1];
            if gap > widest {
                widest = gap;
                gap_end = i;
            }
        }
        (xs[gap_end], xs[(gap_end + n - 1) % n])
    }

    fn compute_area(&self, pano_width: u32) -> Result<f64> {
        if self.vertices.len() < 3 {
            return Err(Error::InvalidWorld(format!(
                "door polygon for {} has fewer than 3 vertices",
                self.house_number
            )));
        }
        let (x0, _) = self.column_extent(pano_width);
        let unwrap = |v: &[u32; 2]| {
            (
                ((v[0] % pano_width + pano_width - x0) % pano_width) as f64,
                v[1] as f64,
            )
        };
        let mut twice = 0.0;
        for i in 0..self.vertices.len() {
            let (ax, ay) = unwrap(&self.vertices[i]);
            let (bx, by) = unwrap(&self.vertices[(i + 1) % self.vertices.len()]);
            twice += ax * by - bx * ay;
        }
        Ok(twice.abs() / 2.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PanoramaLabels {
    pub node: NodeId,
    pub house_numbers: Vec<HouseNumberLabel>,
    pub street_signs: Vec<StreetSignLabel>,
    pub doors: Vec<DoorPolygon>,
}

/// Labels for every panorama of a world, indexed by node id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub pano_width: u32,
    pub pano_height: u32,
    pub panoramas: Vec<PanoramaLabels>,
}

impl AnnotationSet {
    pub fn labels(&self, node: NodeId) -> &PanoramaLabels {
        &self.panoramas[node.index()]
    }

    /// Checks label ranges, house-number syntax, cached door areas and street
    /// names against `vocabulary`.
    pub fn validate(&self, node_count: usize, vocabulary: &[String]) -> Result<()> {
        if self.panoramas.len() != node_count {
            return Err(Error::InvalidWorld(format!(
                "annotations cover {} panoramas but the graph has {node_count} nodes",
                self.panoramas.len()
            )));
        }
        let (w, h) = (self.pano_width, self.pano_height);
        for (i, p) in self.panoramas.iter().enumerate() {
            if p.node.index() != i {
                return Err(Error::InvalidWorld(format!("annotation entry {i} is for node {}", p.node)));
            }
            for hn in &p.house_numbers {
                hn.bbox.validate(w, h)?;
                parse_house_number(&hn.text)?;
            }
            for s in &p.street_signs {
                s.bbox.validate(w, h)?;
                if !vocabulary.contains(&s.name) {
                    return Err(Error::UnknownStreetName(s.name.clone()));
                }
            }
            for d in &p.doors {
                parse_house_number(&d.house_number)?;
                if d.vertices.iter().any(|v| v[0] >= w || v[1] >= h) {
                    return Err(Error::InvalidWorld(format!("door {} at node {i} out of range", d.house_number)));
                }
                let area = d.compute_area(w)?;
                if area <= 0.0 || (area - d.area).abs() > 1e-6 * area.max(1.0) {
                    return Err(Error::InvalidWorld(format!(
                        "door {} at node {i} caches area {} but its polygon has area {area}",
                        d.house_number, d.area
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parses a 1-4 digit house number.
pub fn parse_house_number(text: &str) -> Result<u16> {
    if text.is_empty() || text.len() > 4 || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::InvalidHouseNumber(text.to_owned()));
    }
    Ok(text.parse().expect("validated digits"))
}

/// A circular run of panorama columns `start, start+1, ..., start+len-1`
/// (mod `width`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ColumnInterval {
    pub start: u32,
    pub len: u32,
    pub width: u32,
}

impl ColumnInterval {
    pub fn contains_column(&self, c: u32) -> bool {
        (c % self.width + self.width - self.start) % self.width < self.len
    }

    /// Whether every column of the inclusive circular span `x0..=x1` lies
    /// inside the interval.
    pub fn contains_span(&self, x0: u32, x1: u32) -> bool {
        let w = self.width;
        let offset = (x0 % w + w - self.start) % w;
        let span = (x1 % w + w - x0 % w) % w + 1;
        offset + span <= self.len
    }

    pub fn end(&self) -> u32 {
        (self.start + self.len) % self.width
    }

    pub fn columns(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len).map(move |i| (self.start + i) % self.width)
    }
}

/// Panorama column (fractional, unwrapped to `[0, width)`) facing `bearing`.
pub fn bearing_to_column(bearing: f64, width: u32) -> f64 {
    let c = (bearing + 180.0) / 360.0 * width as f64;
    c.rem_euclid(width as f64)
}

/// Columns covered by a field of view of `fov` degrees centred on `wedge`.
pub fn fov_interval(wedge: Wedge, pano_width: u32, fov: f64) -> ColumnInterval {
    let len = (pano_width as f64 * fov / 360.0).round() as u32;
    let center = bearing_to_column(wedge.bearing(), pano_width);
    let start = (center - len as f64 / 2.0).round().rem_euclid(pano_width as f64) as u32 % pano_width;
    ColumnInterval {
        start,
        len,
        width: pano_width,
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VisibleLabels<'a> {
    pub house_numbers: Vec<&'a HouseNumberLabel>,
    pub street_signs: Vec<&'a StreetSignLabel>,
    pub doors: Vec<&'a DoorPolygon>,
}

impl VisibleLabels<'_> {
    pub fn texts(&self) -> Vec<String> {
        self.house_numbers
            .iter()
            .map(|h| h.text.clone())
            .chain(self.street_signs.iter().map(|s| s.name.clone()))
            .collect()
    }
}

/// Labels fully inside the field of view of `pose`. House numbers and signs
/// come sorted by descending box area, ties by ascending left column.
pub fn visible_labels<'a>(annotations: &'a AnnotationSet, pose: Pose, fov: f64) -> VisibleLabels<'a> {
    let w = annotations.pano_width;
    let interval = fov_interval(pose.wedge, w, fov);
    let labels = annotations.labels(pose.node);
    let mut house_numbers: Vec<&HouseNumberLabel> = labels
        .house_numbers
        .iter()
        .filter(|h| interval.contains_span(h.bbox.x0, h.bbox.x1))
        .collect();
    house_numbers.sort_by(|a, b| {
        b.bbox
            .area(w)
            .cmp(&a.bbox.area(w))
            .then(a.bbox.x0.cmp(&b.bbox.x0))
    });
    let mut street_signs: Vec<&StreetSignLabel> = labels
        .street_signs
        .iter()
        .filter(|s| interval.contains_span(s.bbox.x0, s.bbox.x1))
        .collect();
    street_signs.sort_by(|a, b| {
        b.bbox
            .area(w)
            .cmp(&a.bbox.area(w))
            .then(a.bbox.x0.cmp(&b.bbox.x0))
    });
    let mut doors: Vec<&DoorPolygon> = labels
        .doors
        .iter()
        .filter(|d| door_in_view(d, &interval))
        .collect();
    doors.sort_by(|a, b| b.area.total_cmp(&a.area));
    VisibleLabels {
        house_numbers,
        street_signs,
        doors,
    }
}

pub fn door_in_view(door: &DoorPolygon, interval: &ColumnInterval) -> bool {
    let (x0, x1) = door.column_extent(interval.width);
    interval.contains_span(x0, x1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub address: String,
    pub node: NodeId,
    /// Position of the goal door within the goal node's door list.
    pub door: usize,
}

impl Goal {
    pub fn door<'a>(&self, annotations: &'a AnnotationSet) -> &'a DoorPolygon {
        &annotations.labels(self.node).doors[self.door]
    }
}

/// Address to goal mapping. The goal node of an address is the panorama
/// showing that address's door polygon with the largest area.
#[derive(Clone, Debug, PartialEq)]
pub struct GoalIndex {
    goals: BTreeMap<String, Goal>,
}

impl GoalIndex {
    pub fn build(annotations: &AnnotationSet) -> Result<GoalIndex> {
        Self::build_in_order(annotations, 0..annotations.panoramas.len())
    }

    fn build_in_order(annotations: &AnnotationSet, order: impl Iterator<Item = usize>) -> Result<GoalIndex> {
        let mut best: BTreeMap<String, (f64, Goal)> = BTreeMap::new();
        for i in order {
            let labels = &annotations.panoramas[i];
            for (k, door) in labels.doors.iter().enumerate() {
                let candidate = Goal {
                    address: door.house_number.clone(),
                    node: labels.node,
                    door: k,
                };
                let replace = match best.get(&door.house_number) {
                    None => true,
                    Some((area, current)) => {
                        door.area > *area
                            || (door.area == *area && (candidate.node, candidate.door) < (current.node, current.door))
                    }
                };
                if replace {
                    best.insert(door.house_number.clone(), (door.area, candidate));
                }
            }
        }
        if best.is_empty() {
            return Err(Error::NoAddressedDoors);
        }
        Ok(GoalIndex {
            goals: best.into_iter().map(|(k, (_, g))| (k, g)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn get(&self, address: &str) -> Option<&Goal> {
        self.goals.get(address)
    }

    /// Goals in ascending address order.
    pub fn goals(&self) -> impl Iterator<Item = &Goal> {
        self.goals.values()
    }
}
