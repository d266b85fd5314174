//! RGB rasters and per-node panorama storage.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;

pub const LOW_PANO_WIDTH: u32 = 224;
pub const LOW_PANO_HEIGHT: u32 = 84;

/// Row-major interleaved 8-bit RGB image.
#[derive(Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl fmt::Debug for Raster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Raster({}x{})", self.width, self.height)
    }
}

impl Raster {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Raster {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&rgb);
        }
        Raster { width, height, data }
    }

    pub fn from_data(width: u32, height: u32, data: Vec<u8>) -> Option<Raster> {
        (data.len() == width as usize * height as usize * 3).then_some(Raster { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let stride = self.width as usize * 3;
        &self.data[y as usize * stride..(y as usize + 1) * stride]
    }

    /// Circularly shifts columns so that old column `c` lands at `c + shift`.
    pub fn rolled(&self, shift: i64) -> Raster {
        let w = self.width as i64;
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                let dst = (x as i64 + shift).rem_euclid(w) as u32;
                out.set_pixel(dst, y, self.pixel(x, y));
            }
        }
        out
    }

    /// Binary PPM (P6) encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> std::result::Result<Raster, String> {
        let mut fields = Vec::with_capacity(4);
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err("truncated header".into());
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|e| e.to_string())?);
        }
        if fields[0] != "P6" || fields[3] != "255" {
            return Err(format!("unsupported header {fields:?}"));
        }
        let width: u32 = fields[1].parse().map_err(|_| "bad width".to_string())?;
        let height: u32 = fields[2].parse().map_err(|_| "bad height".to_string())?;
        let data = bytes.get(pos + 1..).ok_or("missing pixel data")?.to_vec();
        Raster::from_data(width, height, data).ok_or_else(|| "pixel data length mismatch".to_string())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    #[default]
    Low,
    High,
}

impl Resolution {
    pub fn name(self) -> &'static str {
        match self {
            Resolution::Low => "low",
            Resolution::High => "high",
        }
    }

    /// Side length of the square image observation.
    pub fn observation_size(self) -> usize {
        match self {
            Resolution::Low => 84,
            Resolution::High => 1280,
        }
    }
}

/// Panoramas indexed by node id. Full-resolution rasters are optional.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PanoramaStore {
    pub low: Vec<Raster>,
    pub full: Option<Vec<Raster>>,
}

impl PanoramaStore {
    pub fn get(&self, node: NodeId, resolution: Resolution) -> Result<&Raster> {
        let set = match resolution {
            Resolution::Low => Some(&self.low),
            Resolution::High => self.full.as_ref(),
        };
        set.and_then(|s| s.get(node.index())).ok_or(Error::MissingPanorama {
            node,
            resolution: resolution.name(),
        })
    }
}
