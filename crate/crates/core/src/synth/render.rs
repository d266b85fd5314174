//! Cylindrical panorama rendering of flat scene objects, and label emission
//! from the same coverage predicates the rasterizer uses.
//!
//! Every object is a vertical strip over a 2-D segment `a -> b`. A pixel is
//! covered when its centre ray crosses the strip. Facades are projected per
//! column; doors, plates and signs take their row extent from the distance to
//! their midpoint so they stay rectangular in the panorama. Depth is always
//! the horizontal ray distance.

use crate::annotations::{BoundingBox, DoorPolygon, HouseNumberLabel, PanoramaLabels, StreetSignLabel};
use crate::error::Result;
use crate::graph::NodeId;
use crate::panorama::Raster;
use crate::synth::font::{plate_ink, plate_units};

pub const CAMERA_HEIGHT: f64 = 1.7;
/// Vertical half-extent of the panorama, in degrees.
pub const VERTICAL_HALF_FOV: f64 = 60.0;

pub const WHITE: [u8; 3] = [255, 255, 255];
pub const INK: [u8; 3] = [0, 0, 0];
const SKY: [u8; 3] = [150, 200, 235];
const GROUND: [u8; 3] = [105, 105, 105];
const WINDOW: [u8; 3] = [40, 60, 80];
const SIGN_PLATE: [u8; 3] = [0, 110, 60];
const SIGN_TEXT: [u8; 3] = [235, 235, 220];
const POLE: [u8; 3] = [90, 90, 90];

pub const MIN_DOOR_COLUMNS: u32 = 8;
pub const MIN_DOOR_ROWS: u32 = 16;
pub const MIN_PLATE_UNIT_PX: u32 = 2;
pub const MIN_SIGN_COLUMNS: u32 = 6;

#[derive(Clone, Debug, PartialEq)]
pub enum Surface {
    Facade { color: [u8; 3] },
    Door { color: [u8; 3], number: String },
    Plate { number: String },
    Sign { name: String },
    Pole,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Seen only from the side where `a` is on the viewer's left.
    OneSided { a: [f64; 2], b: [f64; 2] },
    TwoSided { a: [f64; 2], b: [f64; 2] },
    /// Vertical cylinder, drawn as a camera-facing strip.
    Pole { center: [f64; 2], radius: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneObject {
    pub shape: Shape,
    pub z0: f64,
    pub z1: f64,
    pub surface: Surface,
}

impl SceneObject {
    fn flat_rows(&self) -> bool {
        !matches!(self.surface, Surface::Facade { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
}

fn wrap180(deg: f64) -> f64 {
    let d = (deg + 180.0).rem_euclid(360.0) - 180.0;
    if d == -180.0 {
        180.0
    } else {
        d
    }
}

fn bearing(from: [f64; 2], to: [f64; 2]) -> f64 {
    (to[0] - from[0]).atan2(to[1] - from[1]).to_degrees()
}

/// Centre bearing of column `c` in a `w`-wide panorama.
pub fn column_bearing(c: u32, w: u32) -> f64 {
    (c as f64 + 0.5) / w as f64 * 360.0 - 180.0
}

/// Half-open row range whose pixel centres lie in `[e_bot, e_top)` degrees
/// of elevation; unclamped so callers can detect vertical clipping.
fn rows_for(e_bot: f64, e_top: f64, h: u32) -> (i64, i64) {
    let scale = h as f64 / (2.0 * VERTICAL_HALF_FOV);
    let a = (VERTICAL_HALF_FOV - e_top) * scale - 0.5;
    let b = (VERTICAL_HALF_FOV - e_bot) * scale - 0.5;
    (a.floor() as i64 + 1, b.floor() as i64 + 1)
}

fn elevation(z: f64, dist: f64) -> f64 {
    (z - CAMERA_HEIGHT).atan2(dist).to_degrees()
}

/// An object as seen from one camera position.
#[derive(Clone, Debug)]
pub struct Projected {
    pub object: usize,
    a: [f64; 2],
    b: [f64; 2],
    bearing_a: f64,
    /// Signed clockwise angular span from `a` to `b`.
    span: f64,
    mid_dist: f64,
}

/// Coverage of one column by one object.
#[derive(Clone, Copy, Debug)]
pub struct Hit {
    pub depth: f64,
    /// Fraction across the object from its left edge as seen by the camera.
    pub u: f64,
    /// Distance along the strip from `a`, in meters.
    pub along: f64,
    pub rows: (i64, i64),
    e_bot: f64,
    e_top: f64,
}

impl Projected {
    pub fn new(scene: &Scene, object: usize, cam: [f64; 2]) -> Option<Projected> {
        let o = &scene.objects[object];
        let (a, b, one_sided) = match o.shape {
            Shape::OneSided { a, b } => (a, b, true),
            Shape::TwoSided { a, b } => (a, b, false),
            Shape::Pole { center, radius } => {
                let d = [center[0] - cam[0], center[1] - cam[1]];
                let len = d[0].hypot(d[1]);
                if len <= radius {
                    return None;
                }
                // right-hand perpendicular of the view direction
                let right = [d[1] / len * radius, -d[0] / len * radius];
                (
                    [center[0] - right[0], center[1] - right[1]],
                    [center[0] + right[0], center[1] + right[1]],
                    true,
                )
            }
        };
        let bearing_a = bearing(cam, a);
        let span = wrap180(bearing(cam, b) - bearing_a);
        if span == 0.0 || (one_sided && span < 0.0) {
            return None;
        }
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        Some(Projected {
            object,
            a,
            b,
            bearing_a,
            span,
            mid_dist: (mid[0] - cam[0]).hypot(mid[1] - cam[1]),
        })
    }

    /// Columns that may be covered, as `(first, count)` on the circle.
    fn column_candidates(&self, w: u32) -> (i64, i64) {
        let lo = self.bearing_a.min(self.bearing_a + self.span);
        let first = ((lo + 180.0) / 360.0 * w as f64).floor() as i64 - 1;
        let count = (self.span.abs() / 360.0 * w as f64).ceil() as i64 + 3;
        (first, count.min(w as i64))
    }

    pub fn hit(&self, scene: &Scene, cam: [f64; 2], c: u32, w: u32, h: u32) -> Option<Hit> {
        let beta = column_bearing(c, w);
        let f = wrap180(beta - self.bearing_a) / self.span;
        if !(0.0..1.0).contains(&f) {
            return None;
        }
        let dir = [beta.to_radians().sin(), beta.to_radians().cos()];
        let e = [self.b[0] - self.a[0], self.b[1] - self.a[1]];
        let cross = |p: [f64; 2], q: [f64; 2]| p[0] * q[1] - p[1] * q[0];
        let denom = cross(dir, e);
        if denom == 0.0 {
            return None;
        }
        let ac = [self.a[0] - cam[0], self.a[1] - cam[1]];
        let depth = cross(ac, e) / denom;
        let t = cross(ac, dir) / denom;
        if depth <= 0.0 {
            return None;
        }
        let o = &scene.objects[self.object];
        let row_dist = if o.flat_rows() { self.mid_dist } else { depth };
        let (e_bot, e_top) = (elevation(o.z0, row_dist), elevation(o.z1, row_dist));
        let u = if self.span > 0.0 { f } else { 1.0 - f };
        Some(Hit {
            depth,
            u,
            along: t.clamp(0.0, 1.0) * e[0].hypot(e[1]),
            rows: rows_for(e_bot, e_top, h),
            e_bot,
            e_top,
        })
    }
}

fn row_elevation(r: u32, h: u32) -> f64 {
    VERTICAL_HALF_FOV - (r as f64 + 0.5) / h as f64 * 2.0 * VERTICAL_HALF_FOV
}

fn shade(surface: &Surface, hit: &Hit, r: u32, h: u32) -> [u8; 3] {
    let e = row_elevation(r, h);
    let v = ((hit.e_top - e) / (hit.e_top - hit.e_bot)).clamp(0.0, 1.0 - 1e-12);
    match surface {
        Surface::Facade { color } => {
            let z = CAMERA_HEIGHT + hit.depth * e.to_radians().tan();
            let (fz, fu) = (z.rem_euclid(3.0), hit.along.rem_euclid(2.5));
            if z > 3.0 && (0.8..2.2).contains(&fz) && (0.6..1.9).contains(&fu) {
                WINDOW
            } else {
                *color
            }
        }
        Surface::Door { color, .. } => *color,
        Surface::Plate { number } => {
            let (uw, uh) = plate_units(number.len());
            let ux = (hit.u * uw as f64) as usize;
            let uy = (v * uh as f64) as usize;
            if plate_ink(number.as_bytes(), ux.min(uw - 1), uy.min(uh - 1)) {
                INK
            } else {
                WHITE
            }
        }
        Surface::Sign { name } => {
            let bytes = name.as_bytes();
            let k = (hit.u * 24.0) as usize;
            let band = (0.3..0.7).contains(&v) && (2..22).contains(&k);
            if band && bytes[k % bytes.len()].wrapping_add(k as u8) % 3 != 0 {
                SIGN_TEXT
            } else {
                SIGN_PLATE
            }
        }
        Surface::Pole => POLE,
    }
}

fn visible_objects(scene: &Scene, cam: [f64; 2]) -> Vec<Projected> {
    (0..scene.objects.len())
        .filter_map(|i| Projected::new(scene, i, cam))
        .collect()
}

/// Object indices that may cover each column.
fn column_lists(projected: &[Projected], w: u32) -> Vec<Vec<u32>> {
    let mut lists = vec![Vec::new(); w as usize];
    for (k, p) in projected.iter().enumerate() {
        let (first, count) = p.column_candidates(w);
        for i in 0..count {
            lists[(first + i).rem_euclid(w as i64) as usize].push(k as u32);
        }
    }
    lists
}

/// Renders the panorama seen from `cam`. With `ids`, also returns a buffer
/// holding `object index + 1` per pixel (0 for background).
pub fn render(scene: &Scene, cam: [f64; 2], w: u32, h: u32, ids: bool) -> (Raster, Option<Vec<u32>>) {
    let projected = visible_objects(scene, cam);
    let lists = column_lists(&projected, w);
    let mut raster = Raster::filled(w, h, GROUND);
    for r in 0..h {
        if row_elevation(r, h) > 0.0 {
            for c in 0..w {
                raster.set_pixel(c, r, SKY);
            }
        }
    }
    let mut id_buf = ids.then(|| vec![0u32; (w * h) as usize]);
    let mut zbuf = vec![f64::INFINITY; h as usize];
    for c in 0..w {
        zbuf.fill(f64::INFINITY);
        for &k in &lists[c as usize] {
            let p = &projected[k as usize];
            let Some(hit) = p.hit(scene, cam, c, w, h) else {
                continue;
            };
            let surface = &scene.objects[p.object].surface;
            let (r0, r1) = (hit.rows.0.max(0) as u32, hit.rows.1.min(h as i64).max(0) as u32);
            for r in r0..r1 {
                if hit.depth < zbuf[r as usize] {
                    zbuf[r as usize] = hit.depth;
                    raster.set_pixel(c, r, shade(surface, &hit, r, h));
                    if let Some(buf) = id_buf.as_mut() {
                        buf[(r * w + c) as usize] = p.object as u32 + 1;
                    }
                }
            }
        }
    }
    (raster, id_buf)
}

/// Pixel extent of an unoccluded, vertically unclipped object, as
/// `(first column, column count, rows)`.
fn clear_extent(
    scene: &Scene,
    projected: &[Projected],
    lists: &[Vec<u32>],
    k: usize,
    cam: [f64; 2],
    w: u32,
    h: u32,
) -> Option<(u32, u32, (u32, u32))> {
    let p = &projected[k];
    let (first, count) = p.column_candidates(w);
    let mut covered = Vec::new();
    let mut rows = None;
    for i in 0..count {
        let c = (first + i).rem_euclid(w as i64) as u32;
        let Some(hit) = p.hit(scene, cam, c, w, h) else {
            continue;
        };
        if hit.rows.0 < 0 || hit.rows.1 > h as i64 || hit.rows.0 >= hit.rows.1 {
            return None;
        }
        rows = Some((hit.rows.0 as u32, hit.rows.1 as u32));
        for &j in &lists[c as usize] {
            let q = &projected[j as usize];
            if j as usize == k {
                continue;
            }
            let Some(other) = q.hit(scene, cam, c, w, h) else {
                continue;
            };
            let nearer = other.depth < hit.depth || (other.depth == hit.depth && q.object < p.object);
            if nearer && other.rows.0 < hit.rows.1 && hit.rows.0 < other.rows.1 {
                return None;
            }
        }
        covered.push(c);
    }
    let rows = rows?;
    // covered columns are contiguous on the circle; find the one after a gap
    let n = covered.len() as u32;
    let start = covered
        .iter()
        .position(|&c| !covered.contains(&((c + w - 1) % w)))
        .map_or(covered[0], |i| covered[i]);
    Some((start, n, rows))
}

/// Labels for every legible, fully visible labelled object seen from `cam`
/// in a `w` by `h` panorama.
pub fn emit_labels(scene: &Scene, cam: [f64; 2], node: NodeId, w: u32, h: u32) -> Result<PanoramaLabels> {
    let projected = visible_objects(scene, cam);
    let lists = column_lists(&projected, w);
    let mut labels = PanoramaLabels {
        node,
        ..PanoramaLabels::default()
    };
    for (k, p) in projected.iter().enumerate() {
        let surface = &scene.objects[p.object].surface;
        if matches!(surface, Surface::Facade { .. } | Surface::Pole) {
            continue;
        }
        let Some((x0, cols, (y0, y1))) = clear_extent(scene, &projected, &lists, k, cam, w, h) else {
            continue;
        };
        let rows = y1 - y0;
        let x1 = (x0 + cols - 1) % w;
        let bbox = BoundingBox { x0, x1, y0, y1 };
        match surface {
            Surface::Door { number, .. } if cols >= MIN_DOOR_COLUMNS && rows >= MIN_DOOR_ROWS => {
                let vertices = vec![[x0, y0], [x1, y0], [x1, y1 - 1], [x0, y1 - 1]];
                labels.doors.push(DoorPolygon::new(vertices, number.clone(), w)?);
            }
            Surface::Plate { number } => {
                let (uw, uh) = plate_units(number.len());
                if cols >= MIN_PLATE_UNIT_PX * uw as u32 && rows >= MIN_PLATE_UNIT_PX * uh as u32 {
                    labels.house_numbers.push(HouseNumberLabel {
                        bbox,
                        text: number.clone(),
                    });
                }
            }
            Surface::Sign { name } if cols >= MIN_SIGN_COLUMNS => {
                labels.street_signs.push(StreetSignLabel {
                    bbox,
                    name: name.clone(),
                });
            }
            _ => {}
        }
    }
    Ok(labels)
}
