//! Read-only Gmsh ASCII v2 and OFF loaders.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::linalg::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFormat {
    GmshAscii,
    Off,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "msh" => Some(MeshFormat::GmshAscii),
            "off" => Some(MeshFormat::Off),
            _ => None,
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        MeshFormat::GmshAscii => parse_gmsh(&text),
        MeshFormat::Off => parse_off(&text),
    }
}

fn parse_err(format: &'static str, line: usize, message: impl Into<String>) -> Error {
    Error::MeshParse {
        format,
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, format: &'static str, line: usize) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(format, line, "unexpected end of line"))?;
    tok.parse()
        .map_err(|_| parse_err(format, line, format!("cannot parse '{tok}'")))
}

/// Gmsh MSH 2.x ASCII. Only 3-node triangles (element type 2) are kept.
pub fn parse_gmsh(text: &str) -> Result<TriangleMesh> {
    const F: &str = "gmsh";
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut node_index: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut seen_format = false;

    while let Some((ln, line)) = lines.next() {
        match line {
            "$MeshFormat" => {
                let (ln, header) = lines
                    .next()
                    .ok_or_else(|| parse_err(F, ln, "missing format line"))?;
                let mut tok = header.split_whitespace();
                let version: f64 = parse_num(tok.next(), F, ln)?;
                let file_type: u32 = parse_num(tok.next(), F, ln)?;
                if !(2.0..3.0).contains(&version) || file_type != 0 {
                    return Err(parse_err(
                        F,
                        ln,
                        format!("only ASCII version 2 is supported (got {version}, type {file_type})"),
                    ));
                }
                seen_format = true;
            }
            "$Nodes" => {
                let (ln, count) = lines
                    .next()
                    .ok_or_else(|| parse_err(F, ln, "missing node count"))?;
                let count: usize = parse_num(Some(count), F, ln)?;
                for _ in 0..count {
                    let (ln, l) = lines
                        .next()
                        .ok_or_else(|| parse_err(F, ln, "truncated $Nodes"))?;
                    let mut tok = l.split_whitespace();
                    let id: usize = parse_num(tok.next(), F, ln)?;
                    let x: f64 = parse_num(tok.next(), F, ln)?;
                    let y: f64 = parse_num(tok.next(), F, ln)?;
                    let z: f64 = parse_num(tok.next(), F, ln)?;
                    node_index.insert(id, vertices.len());
                    vertices.push(Vec3::new(x, y, z));
                }
            }
            "$Elements" => {
                let (ln, count) = lines
                    .next()
                    .ok_or_else(|| parse_err(F, ln, "missing element count"))?;
                let count: usize = parse_num(Some(count), F, ln)?;
                for _ in 0..count {
                    let (ln, l) = lines
                        .next()
                        .ok_or_else(|| parse_err(F, ln, "truncated $Elements"))?;
                    let tok: Vec<&str> = l.split_whitespace().collect();
                    let kind: u32 = parse_num(tok.get(1).copied(), F, ln)?;
                    let ntags: usize = parse_num(tok.get(2).copied(), F, ln)?;
                    if kind != 2 {
                        continue;
                    }
                    let mut tri = [0usize; 3];
                    for (k, slot) in tri.iter_mut().enumerate() {
                        let id: usize = parse_num(tok.get(3 + ntags + k).copied(), F, ln)?;
                        *slot = *node_index
                            .get(&id)
                            .ok_or_else(|| parse_err(F, ln, format!("unknown node {id}")))?;
                    }
                    triangles.push(tri);
                }
            }
            _ => {}
        }
    }
    if !seen_format {
        return Err(parse_err(F, 1, "missing $MeshFormat section"));
    }
    if triangles.is_empty() {
        return Err(parse_err(F, 1, "no triangle elements"));
    }
    TriangleMesh::new(vertices, triangles)
}

/// OFF: header, `nv nf ne`, vertex lines, face lines. Polygons with more
/// than three corners are fan-triangulated.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    const F: &str = "off";
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| parse_err(F, 1, "empty file"))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| parse_err(F, ln, "missing OFF header"))?
        .trim();
    let (ln, counts) = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| parse_err(F, ln, "missing counts line"))?
    } else {
        (ln, rest)
    };
    let mut tok = counts.split_whitespace();
    let nv: usize = parse_num(tok.next(), F, ln)?;
    let nf: usize = parse_num(tok.next(), F, ln)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(F, ln, "truncated vertex list"))?;
        let mut tok = l.split_whitespace();
        let x: f64 = parse_num(tok.next(), F, ln)?;
        let y: f64 = parse_num(tok.next(), F, ln)?;
        let z: f64 = parse_num(tok.next(), F, ln)?;
        vertices.push(Vec3::new(x, y, z));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(F, ln, "truncated face list"))?;
        let mut tok = l.split_whitespace();
        let k: usize = parse_num(tok.next(), F, ln)?;
        if k < 3 {
            return Err(parse_err(F, ln, format!("face with {k} corners")));
        }
        let idx = (0..k)
            .map(|_| {
                let i: usize = parse_num(tok.next(), F, ln)?;
                if i >= nv {
                    Err(parse_err(F, ln, format!("vertex index {i} out of range")))
                } else {
                    Ok(i)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        for j in 1..k - 1 {
            triangles.push([idx[0], idx[j], idx[j + 1]]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}
