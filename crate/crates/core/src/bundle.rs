//! On-disk world bundles.
//!
//! ```text
//! meta.json                 format version, vocabulary, sizes, horizons, content hash, spec
//! graph.json                nodes, edges, segments, bounding box
//! annotations.json          per-node house numbers, signs and door polygons
//! panoramas/low/<pano>.ppm  224x84 binary PPM per node
//! panoramas/full/<pano>.ppm optional 3840x1280 PPM per node
//! ```
//!
//! The content hash is SHA-256 over every file except `meta.json`, visited
//! in sorted relative-path order; each file contributes its path, a NUL, its
//! length as little-endian u64 and its bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotations::AnnotationSet;
use crate::error::{Error, Result};
use crate::graph::{BoundingBox2, GraphNode, NodeId, StreetSegment, WorldGraph};
use crate::panorama::{PanoramaStore, Raster, LOW_PANO_HEIGHT, LOW_PANO_WIDTH};
use crate::synth::WorldSpec;
use crate::world::{Horizons, World};

pub const FORMAT_VERSION: u32 = 1;
const META: &str = "meta.json";
const GRAPH: &str = "graph.json";
const ANNOTATIONS: &str = "annotations.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub format_version: u32,
    pub vocabulary: Vec<String>,
    pub pano_width: u32,
    pub pano_height: u32,
    pub low_width: u32,
    pub low_height: u32,
    pub full_resolution: bool,
    pub horizons: Horizons,
    pub content_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<WorldSpec>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<GraphNode>,
    edges: Vec<[NodeId; 2]>,
    segments: Vec<StreetSegment>,
    bbox: BoundingBox2,
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| Error::Malformed {
        path: path.to_owned(),
        reason: e.to_string(),
    })
}

fn pano_path(dir: &Path, resolution: &str, pano: &str) -> PathBuf {
    dir.join("panoramas").join(resolution).join(format!("{pano}.ppm"))
}

/// Writes `world` under `dir`, creating it if needed, and returns the meta
/// record that was written.
pub fn write_bundle(world: &World, spec: Option<&WorldSpec>, dir: &Path) -> Result<Meta> {
    let g = world.graph();
    let graph = GraphFile {
        nodes: g.nodes().to_vec(),
        edges: g.edges().iter().map(|&(a, b)| [a, b]).collect(),
        segments: g.segments().to_vec(),
        bbox: g.bbox(),
    };
    write(&dir.join(GRAPH), &serde_json::to_vec(&graph)?)?;
    write(&dir.join(ANNOTATIONS), &serde_json::to_vec(world.annotations())?)?;
    let store = world.panoramas();
    for (node, raster) in g.nodes().iter().zip(&store.low) {
        write(&pano_path(dir, "low", &node.pano), &raster.to_ppm())?;
    }
    if let Some(full) = &store.full {
        for (node, raster) in g.nodes().iter().zip(full) {
            write(&pano_path(dir, "full", &node.pano), &raster.to_ppm())?;
        }
    }
    let meta = Meta {
        format_version: FORMAT_VERSION,
        vocabulary: world.vocabulary().to_vec(),
        pano_width: world.annotations().pano_width,
        pano_height: world.annotations().pano_height,
        low_width: LOW_PANO_WIDTH,
        low_height: LOW_PANO_HEIGHT,
        full_resolution: store.full.is_some(),
        horizons: world.horizons(),
        content_hash: content_hash(dir)?,
        spec: spec.cloned(),
    };
    let mut bytes = serde_json::to_vec_pretty(&meta)?;
    bytes.push(b'\n');
    write(&dir.join(META), &bytes)?;
    Ok(meta)
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("walk stays under root");
            let rel = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            if rel != META {
                out.push(rel);
            }
        }
    }
    Ok(())
}

/// Hex SHA-256 of every bundle file except the meta record.
pub fn content_hash(dir: &Path) -> Result<String> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.sort();
    let mut hasher = Sha256::new();
    for rel in &files {
        let bytes = read(&dir.join(rel))?;
        hasher.update(rel.as_bytes());
        hasher.update([0u8]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(&hasher.finalize()[..]))
}

pub fn read_meta(dir: &Path) -> Result<Meta> {
    let path = dir.join(META);
    let meta: Meta = parse(&path, &read(&path)?)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion(meta.format_version));
    }
    Ok(meta)
}

/// Loads and fully validates a bundle. Checks run in order: format version,
/// content hash, graph structure and connectivity, annotations, goal index
/// and door framing, then the cached horizons.
pub fn load_bundle(dir: &Path) -> Result<(World, Meta)> {
    let meta = read_meta(dir)?;
    let actual = content_hash(dir)?;
    if actual != meta.content_hash {
        return Err(Error::HashMismatch {
            expected: meta.content_hash.clone(),
            actual,
        });
    }
    let path = dir.join(GRAPH);
    let gf: GraphFile = parse(&path, &read(&path)?)?;
    let edges = gf.edges.iter().map(|e| (e[0], e[1])).collect();
    let graph = WorldGraph::new(gf.nodes, edges, gf.segments, gf.bbox)?;
    let path = dir.join(ANNOTATIONS);
    let annotations: AnnotationSet = parse(&path, &read(&path)?)?;
    let load = |resolution: &str| -> Result<Vec<Raster>> {
        graph
            .nodes()
            .iter()
            .map(|n| {
                let path = pano_path(dir, resolution, &n.pano);
                Raster::from_ppm(&read(&path)?).map_err(|reason| Error::Malformed { path, reason })
            })
            .collect()
    };
    let low = load("low")?;
    let full = if meta.full_resolution { Some(load("full")?) } else { None };
    let world = World::new(graph, annotations, PanoramaStore { low, full }, meta.vocabulary.clone())?;
    if world.horizons() != meta.horizons {
        return Err(Error::InvalidWorld(format!(
            "cached horizons {:?} disagree with derived {:?}",
            meta.horizons,
            world.horizons()
        )));
    }
    Ok((world, meta))
}

pub fn load_world(dir: &Path) -> Result<World> {
    load_bundle(dir).map(|(w, _)| w)
}
