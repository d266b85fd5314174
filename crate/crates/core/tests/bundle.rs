mod common;

use std::fs;
use std::path::Path;

use serde_json::Value;
use sidewalk_core::bundle::{content_hash, load_bundle, read_meta, write_bundle, FORMAT_VERSION};
use sidewalk_core::{Error, World};

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_owned()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn edit_json(path: &Path, f: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
    f(&mut v);
    fs::write(path, serde_json::to_vec_pretty(&v).unwrap()).unwrap();
}

fn rehash(dir: &Path) {
    let hash = content_hash(dir).unwrap();
    edit_json(&dir.join("meta.json"), |m| m["content_hash"] = Value::String(hash));
}

fn saved(world: &World) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_bundle(world, None, dir.path()).unwrap();
    dir
}

#[test]
fn load_round_trips_and_reserializes_identically() {
    let spec = common::spec(1, 1, 1, 14.0, 2);
    let world = sidewalk_core::synth::generate(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let meta = write_bundle(&world, Some(&spec), &dir.path().join("a")).unwrap();
    let (loaded, read) = load_bundle(&dir.path().join("a")).unwrap();
    assert_eq!(meta, read);
    assert_eq!(read.spec.as_ref(), Some(&spec));
    assert_eq!(loaded.graph().len(), world.graph().len());
    assert_eq!(loaded.graph().edges(), world.graph().edges());
    assert_eq!(loaded.annotations(), world.annotations());
    assert_eq!(loaded.horizons(), world.horizons());
    assert_eq!(loaded.vocabulary(), world.vocabulary());
    write_bundle(&loaded, Some(&spec), &dir.path().join("b")).unwrap();
    assert_eq!(files(&dir.path().join("a")), files(&dir.path().join("b")));
}

#[test]
fn flipped_annotation_byte_is_a_hash_mismatch() {
    let dir = saved(&common::world(2, 1, 0, 20.0, 2));
    let path = dir.path().join("annotations.json");
    let mut bytes = fs::read(&path).unwrap();
    let i = bytes.iter().position(|b| b.is_ascii_digit()).unwrap();
    bytes[i] = if bytes[i] == b'9' { b'8' } else { bytes[i] + 1 };
    fs::write(&path, bytes).unwrap();
    let err = load_bundle(dir.path()).unwrap_err();
    assert!(matches!(err, Error::HashMismatch { .. }), "{err}");
    assert!(err.is_validation());
}

#[test]
fn removed_bridge_edge_names_the_stranded_node() {
    let world = common::world(3, 1, 0, 20.0, 2);
    let g = world.graph();
    // the far end of the street hangs off a single edge
    let leaf = g
        .nodes()
        .iter()
        .rev()
        .find(|n| g.neighbors(n.id).len() == 1)
        .unwrap()
        .id;
    let dir = saved(&world);
    edit_json(&dir.path().join("graph.json"), |v| {
        let edges = v["edges"].as_array_mut().unwrap();
        let before = edges.len();
        edges.retain(|e| !e.as_array().unwrap().iter().any(|n| n.as_u64() == Some(leaf.0 as u64)));
        assert_eq!(edges.len(), before - 1);
        // keep segments as contiguous chains so only connectivity fails
        let segments = v["segments"].as_array_mut().unwrap();
        let mut own = None;
        for seg in segments.iter_mut() {
            let nodes = seg["nodes"].as_array_mut().unwrap();
            if nodes.len() > 1 && nodes.iter().any(|n| n.as_u64() == Some(leaf.0 as u64)) {
                nodes.retain(|n| n.as_u64() != Some(leaf.0 as u64));
                let mut copy = seg.clone();
                copy["nodes"] = serde_json::json!([leaf.0]);
                own = Some(copy);
            }
        }
        let mut own = own.unwrap();
        let id = segments.len();
        own["id"] = id.into();
        segments.push(own);
        v["nodes"][leaf.index()]["segment"] = id.into();
    });
    let err = load_bundle(dir.path()).unwrap_err();
    assert!(matches!(err, Error::HashMismatch { .. }));
    rehash(dir.path());
    match load_bundle(dir.path()).unwrap_err() {
        Error::Disconnected(n) => assert_eq!(n, leaf),
        e => panic!("{e}"),
    }
}

#[test]
fn unknown_format_version_is_rejected() {
    let dir = saved(&common::world(4, 1, 0, 20.0, 1));
    edit_json(&dir.path().join("meta.json"), |m| m["format_version"] = (FORMAT_VERSION + 1).into());
    for err in [read_meta(dir.path()).unwrap_err(), load_bundle(dir.path()).unwrap_err()] {
        assert!(matches!(err, Error::FormatVersion(v) if v == FORMAT_VERSION + 1), "{err}");
        assert!(err.is_validation());
    }
}

#[test]
fn stale_horizons_are_rejected() {
    let dir = saved(&common::world(5, 1, 1, 14.0, 2));
    edit_json(&dir.path().join("meta.json"), |m| {
        let h = m["horizons"]["segment"].as_u64().unwrap();
        m["horizons"]["segment"] = (h + 1).into();
    });
    let err = load_bundle(dir.path()).unwrap_err();
    assert!(matches!(err, Error::InvalidWorld(_)), "{err}");
    assert!(err.is_validation());
}

#[test]
fn missing_panorama_is_an_io_error() {
    let world = common::world(6, 1, 0, 20.0, 1);
    let dir = saved(&world);
    let pano = &world.graph().nodes()[0].pano;
    fs::remove_file(dir.path().join("panoramas/low").join(format!("{pano}.ppm"))).unwrap();
    rehash(dir.path());
    let err = load_bundle(dir.path()).unwrap_err();
    assert!(!err.is_validation(), "{err}");
}
