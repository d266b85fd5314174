//! Per-step agent observations: the image crop, the scaled GPS vector, the
//! one-hot scene-text encodings, and the fused `(8, w, w)` policy tensor.

use ndarray::Array3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::annotations::fov_interval;
use crate::error::{Error, Result};
use crate::graph::{BoundingBox2, Wedge};
use crate::panorama::Raster;

pub const DIGITS: usize = 4;
pub const HOUSE_SLOT_LEN: usize = DIGITS * 10;
pub const HOUSE_SLOTS: usize = 3;
pub const HOUSE_VEC_LEN: usize = HOUSE_SLOT_LEN * HOUSE_SLOTS;
pub const GPS_LEN: usize = 4;
pub const FUSED_CHANNELS: usize = 8;

/// Square RGB crop, stored as interleaved 8-bit samples; `value` exposes the
/// normalised `[0, 1]` view in channel-first order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageObs {
    size: usize,
    hwc: Vec<u8>,
}

impl ImageObs {
    pub fn size(&self) -> usize {
        self.size
    }

    /// `(channels, height, width)`.
    pub fn shape(&self) -> [usize; 3] {
        [3, self.size, self.size]
    }

    pub fn value(&self, channel: usize, y: usize, x: usize) -> f32 {
        self.hwc[(y * self.size + x) * 3 + channel] as f32 / 255.0
    }

    pub fn hwc_bytes(&self) -> &[u8] {
        &self.hwc
    }

    pub fn to_chw(&self) -> Vec<f32> {
        let plane = self.size * self.size;
        let mut out = vec![0.0; 3 * plane];
        for (i, px) in self.hwc.chunks_exact(3).enumerate() {
            for c in 0..3 {
                out[c * plane + i] = px[c] as f32 / 255.0;
            }
        }
        out
    }
}

/// Crops `fov` degrees of `panorama` centred on `wedge` using the full
/// vertical extent, then resamples (nearest neighbour) to `out_size` squared.
pub fn crop_image(panorama: &Raster, wedge: Wedge, fov: f64, out_size: usize) -> ImageObs {
    let interval = fov_interval(wedge, panorama.width(), fov);
    let (cw, ch) = (interval.len as usize, panorama.height() as usize);
    let mut hwc = Vec::with_capacity(out_size * out_size * 3);
    if cw == out_size && ch == out_size {
        for y in 0..ch as u32 {
            let row = panorama.row(y);
            let start = interval.start as usize;
            let first = (panorama.width() as usize - start).min(cw);
            hwc.extend_from_slice(&row[start * 3..(start + first) * 3]);
            hwc.extend_from_slice(&row[..(cw - first) * 3]);
        }
    } else {
        let cols: Vec<u32> = (0..out_size)
            .map(|x| (interval.start + ((x * cw + cw / 2) / out_size) as u32) % panorama.width())
            .collect();
        for y in 0..out_size {
            let sy = ((y * ch + ch / 2) / out_size) as u32;
            for &sx in &cols {
                hwc.extend_from_slice(&panorama.pixel(sx, sy));
            }
        }
    }
    ImageObs { size: out_size, hwc }
}

/// Four one-hot digit blocks per number, up to three numbers. Numbers are
/// left-padded with zeros to four digits.
pub fn encode_house_numbers<S: AsRef<str>>(visible: &[S]) -> Result<Vec<f32>> {
    let mut out = vec![0.0; HOUSE_VEC_LEN];
    for (slot, text) in visible.iter().take(HOUSE_SLOTS).enumerate() {
        let text = text.as_ref();
        crate::annotations::parse_house_number(text)?;
        let padded = format!("{text:0>4}");
        for (p, digit) in padded.bytes().enumerate() {
            out[slot * HOUSE_SLOT_LEN + p * 10 + (digit - b'0') as usize] = 1.0;
        }
    }
    Ok(out)
}

/// Inverse of [`encode_house_numbers`]; returns zero-padded 4-digit strings.
pub fn decode_house_numbers(vector: &[f32]) -> Vec<String> {
    vector
        .chunks(HOUSE_SLOT_LEN)
        .take(HOUSE_SLOTS)
        .filter(|slot| slot.iter().any(|&v| v != 0.0))
        .map(|slot| {
            slot.chunks(10)
                .map(|block| {
                    let d = block.iter().position(|&v| v == 1.0).unwrap_or(0);
                    char::from(b'0' + d as u8)
                })
                .collect()
        })
        .collect()
}

/// One-hot encoding of the first (largest) visible sign's street name.
pub fn encode_street_names<S: AsRef<str>>(visible: &[S], vocabulary: &[String]) -> Result<Vec<f32>> {
    let mut out = vec![0.0; vocabulary.len()];
    let mut first = None;
    for name in visible {
        let name = name.as_ref();
        let idx = vocabulary
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownStreetName(name.to_owned()))?;
        first.get_or_insert(idx);
    }
    if let Some(i) = first {
        out[i] = 1.0;
    }
    Ok(out)
}

pub fn decode_street_name<'v>(vector: &[f32], vocabulary: &'v [String]) -> Option<&'v str> {
    vector
        .iter()
        .position(|&v| v == 1.0)
        .and_then(|i| vocabulary.get(i))
        .map(String::as_str)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextObs {
    pub house_numbers: Vec<f32>,
    pub street_names: Vec<f32>,
}

/// `[goal_x, goal_y, rel_x, rel_y]` in bounding-box scaled units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpsObs(pub [f32; GPS_LEN]);

/// Per-episode GPS noise state: the goal offset is drawn once at reset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpsNoise {
    pub sigma: f64,
    pub goal_offset: [f64; 2],
}

impl GpsNoise {
    pub fn sample<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> GpsNoise {
        GpsNoise {
            sigma,
            goal_offset: [gaussian(rng, sigma), gaussian(rng, sigma)],
        }
    }

    pub fn noiseless() -> GpsNoise {
        GpsNoise {
            sigma: 0.0,
            goal_offset: [0.0, 0.0],
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * sigma
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpsReading {
    pub obs: GpsObs,
    /// Noisy agent position minus noisy goal position, in meters.
    pub rel_m: [f64; 2],
}

/// Affine map of the bounding box onto `[-1, 1]` per axis.
pub fn scale_position(bbox: &BoundingBox2, p: [f64; 2]) -> Result<[f64; 2]> {
    let (ex, ey) = (bbox.max_x - bbox.min_x, bbox.max_y - bbox.min_y);
    if ex.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        || ey.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
    {
        return Err(Error::DegenerateBoundingBox);
    }
    Ok([
        2.0 * (p[0] - bbox.min_x) / ex - 1.0,
        2.0 * (p[1] - bbox.min_y) / ey - 1.0,
    ])
}

/// Scaled goal position plus agent-minus-goal offset. The agent position
/// receives fresh noise on every call; the goal offset is fixed per episode.
pub fn gps_observation<R: Rng + ?Sized>(
    bbox: &BoundingBox2,
    agent: [f64; 2],
    goal: [f64; 2],
    noise: &GpsNoise,
    rng: &mut R,
) -> Result<GpsReading> {
    let noisy_goal = [goal[0] + noise.goal_offset[0], goal[1] + noise.goal_offset[1]];
    let step = [gaussian(rng, noise.sigma), gaussian(rng, noise.sigma)];
    let noisy_agent = [agent[0] + step[0], agent[1] + step[1]];
    let g = scale_position(bbox, noisy_goal)?;
    let a = scale_position(bbox, noisy_agent)?;
    Ok(GpsReading {
        obs: GpsObs([g[0] as f32, g[1] as f32, (a[0] - g[0]) as f32, (a[1] - g[1]) as f32]),
        rel_m: [noisy_agent[0] - noisy_goal[0], noisy_agent[1] - noisy_goal[1]],
    })
}

/// What the agent receives each step; masked modalities are `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observation {
    pub image: Option<ImageObs>,
    pub gps: Option<GpsObs>,
    pub text: Option<TextObs>,
}

fn tile_channel(tensor: &mut Array3<f32>, channel: usize, vector: &[f32]) -> Result<()> {
    let w = tensor.shape()[2];
    if vector.len() > w {
        return Err(Error::TensorTooNarrow {
            len: vector.len(),
            width: w,
        });
    }
    if vector.is_empty() {
        return Ok(());
    }
    let reps = w / vector.len();
    let mut row = vec![0.0; w];
    for r in 0..reps {
        row[r * vector.len()..(r + 1) * vector.len()].copy_from_slice(vector);
    }
    for y in 0..w {
        for (x, &v) in row.iter().enumerate() {
            tensor[[channel, y, x]] = v;
        }
    }
    Ok(())
}

/// Stacks RGB with row-tiled GPS, house-number slot and street-name vectors
/// into `(8, w, w)`. Absent modalities stay zero.
pub fn fuse_tensor(obs: &Observation, w: usize) -> Result<Array3<f32>> {
    let mut t = Array3::<f32>::zeros((FUSED_CHANNELS, w, w));
    if let Some(img) = &obs.image {
        if img.size() != w {
            return Err(Error::ImageWidthMismatch {
                image: img.size(),
                width: w,
            });
        }
        for (i, px) in img.hwc_bytes().chunks_exact(3).enumerate() {
            let (y, x) = (i / w, i % w);
            for c in 0..3 {
                t[[c, y, x]] = px[c] as f32 / 255.0;
            }
        }
    }
    if let Some(gps) = &obs.gps {
        tile_channel(&mut t, 3, &gps.0)?;
    }
    if let Some(text) = &obs.text {
        for slot in 0..HOUSE_SLOTS {
            let v = &text.house_numbers[slot * HOUSE_SLOT_LEN..(slot + 1) * HOUSE_SLOT_LEN];
            tile_channel(&mut t, 4 + slot, v)?;
        }
        tile_channel(&mut t, 7, &text.street_names)?;
    }
    Ok(t)
}
