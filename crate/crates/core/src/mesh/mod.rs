//! Closed, outward-oriented triangle surfaces.
//!
//! A [`TriangleMesh`] is validated on construction: every triangle must have
//! non-negligible area, every edge must be shared by exactly two triangles,
//! and the winding is repaired so that all normals point out of the enclosed
//! volume. Meshes are immutable afterwards.

mod generate;
mod io;

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec3;

pub use generate::{
    generate_canonical, generate_sphere, generate_sphere_with_cap, refine_uniform,
    sphere_with_unknowns, wedge_structured, Canonical, DEFAULT_TRIANGLE_CAP,
};
pub use io::{load_mesh, parse_gmsh, parse_off, MeshFormat};

/// Triangles with a smaller area are rejected.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Sorted vertex pair.
    pub vertices: [usize; 2],
    /// The two adjacent triangles, lower index first.
    pub triangles: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// `triangle_edges[t][k]` is the edge opposite local vertex `k`.
    triangle_edges: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub mean_edge_length: f64,
    pub max_edge_length: f64,
    pub min_edge_length: f64,
    pub total_area: f64,
    pub volume: f64,
    pub triangle_count: usize,
    pub edge_count: usize,
    pub vertex_count: usize,
}

impl TriangleMesh {
    /// Validates and orients a closed surface.
    ///
    /// Winding is propagated breadth-first from the first triangle of every
    /// connected component; each component is then flipped as a whole if
    /// its signed volume is negative.
    pub fn new(vertices: Vec<Vec3>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidArgument("mesh has no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} references a vertex out of range"
                )));
            }
            let area = tri_area(&vertices, tri);
            if !(area > MIN_TRIANGLE_AREA) {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
        }

        let edge_map = edge_map(&triangles);
        for (&(a, b), tris) in &edge_map {
            if tris.len() != 2 {
                return Err(Error::NonManifold(a, b, tris.len()));
            }
        }

        orient(&vertices, &mut triangles, &edge_map)?;

        let mut edges = Vec::with_capacity(edge_map.len());
        let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (e, (&(a, b), tris)) in edge_map.iter().enumerate() {
            let (t0, t1) = (tris[0].min(tris[1]), tris[0].max(tris[1]));
            edges.push(Edge {
                vertices: [a, b],
                triangles: [t0, t1],
            });
            for &t in &[t0, t1] {
                let k = triangles[t]
                    .iter()
                    .position(|&v| v != a && v != b)
                    .expect("edge endpoints belong to the triangle");
                triangle_edges[t][k] = e;
            }
        }

        Ok(Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        tri_area(&self.vertices, &self.triangles[t])
    }

    /// Outward unit normal.
    pub fn normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[a] - self.vertices[b]).norm()
    }

    pub fn max_triangle_edge(&self, t: usize) -> f64 {
        self.triangle_edges[t]
            .iter()
            .map(|&e| self.edge_length(e))
            .fold(0.0, f64::max)
    }

    pub fn signed_volume(&self) -> f64 {
        signed_volume(&self.vertices, &self.triangles)
    }

    pub fn stats(&self) -> MeshStats {
        mesh_stats(self)
    }

    /// Same surface with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = self.clone();
        m.vertices.iter_mut().for_each(|v| *v *= factor);
        m
    }
}

pub fn mesh_stats(mesh: &TriangleMesh) -> MeshStats {
    let lengths: Vec<f64> = (0..mesh.edge_count()).map(|e| mesh.edge_length(e)).collect();
    let total_area = (0..mesh.triangle_count()).map(|t| mesh.area(t)).sum();
    MeshStats {
        mean_edge_length: lengths.iter().sum::<f64>() / lengths.len() as f64,
        max_edge_length: lengths.iter().copied().fold(0.0, f64::max),
        min_edge_length: lengths.iter().copied().fold(f64::INFINITY, f64::min),
        total_area,
        volume: mesh.signed_volume(),
        triangle_count: mesh.triangle_count(),
        edge_count: mesh.edge_count(),
        vertex_count: mesh.vertices().len(),
    }
}

fn tri_area(vertices: &[Vec3], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|i| vertices[i]);
    0.5 * (b - a).cross(&(c - a)).norm()
}

fn signed_volume(vertices: &[Vec3], triangles: &[[usize; 3]]) -> f64 {
    triangles
        .iter()
        .map(|&[a, b, c]| vertices[a].dot(&vertices[b].cross(&vertices[c])))
        .sum::<f64>()
        / 6.0
}

fn edge_map(triangles: &[[usize; 3]]) -> BTreeMap<(usize, usize), Vec<usize>> {
    let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            map.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    map
}

/// True if the triangle traverses the directed edge `a -> b`.
fn has_directed(tri: &[usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|k| tri[k] == a && tri[(k + 1) % 3] == b)
}

fn orient(
    vertices: &[Vec3],
    triangles: &mut [[usize; 3]],
    edge_map: &BTreeMap<(usize, usize), Vec<usize>>,
) -> Result<()> {
    let n = triangles.len();
    let mut neighbors: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); n];
    for (&(a, b), tris) in edge_map {
        neighbors[tris[0]].push((tris[1], a, b));
        neighbors[tris[1]].push((tris[0], a, b));
    }

    let mut component = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for seed in 0..n {
        if component[seed] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![seed];
        component[seed] = id;
        let mut queue = VecDeque::from([seed]);
        while let Some(t) = queue.pop_front() {
            for &(u, a, b) in &neighbors[t] {
                // Consistent winding traverses a shared edge in opposite
                // directions on the two sides.
                let same_direction = has_directed(&triangles[t], a, b)
                    == has_directed(&triangles[u], a, b);
                if component[u] == usize::MAX {
                    if same_direction {
                        triangles[u].swap(1, 2);
                    }
                    component[u] = id;
                    members.push(u);
                    queue.push_back(u);
                } else if same_direction {
                    return Err(Error::Orientation(format!(
                        "triangles {t} and {u} cannot be wound consistently (non-orientable surface)"
                    )));
                }
            }
        }
        components.push(members);
    }

    for members in components {
        let tris: Vec<[usize; 3]> = members.iter().map(|&t| triangles[t]).collect();
        let vol = signed_volume(vertices, &tris);
        if vol.abs() < 1e-300 {
            return Err(Error::Orientation(
                "component encloses zero volume".into(),
            ));
        }
        if vol < 0.0 {
            for t in members {
                triangles[t].swap(1, 2);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tetrahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
        let v = vec![
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ];
        let t = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
        (v, t)
    }

    #[test]
    fn tetrahedron_topology() {
        let (v, t) = tetrahedron();
        let m = TriangleMesh::new(v, t).unwrap();
        assert_eq!(m.triangle_count(), 4);
        assert_eq!(m.edge_count(), 6);
        assert!(m.signed_volume() > 0.0);
        // Regular tetrahedron inscribed in the cube [-1,1]^3 has volume 8/3.
        assert!((m.signed_volume() - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn scrambled_winding_is_repaired() {
        let (v, mut t) = tetrahedron();
        t[1].swap(0, 2);
        t[3].swap(1, 2);
        let m = TriangleMesh::new(v.clone(), t).unwrap();
        assert!(m.signed_volume() > 0.0);
        let (_, mut all_flipped) = tetrahedron();
        all_flipped.iter_mut().for_each(|tri| tri.swap(0, 1));
        let m2 = TriangleMesh::new(v, all_flipped).unwrap();
        assert!((m2.signed_volume() - 8.0 / 3.0).abs() < 1e-12);
        for tr in 0..4 {
            let outward = m2.centroid(tr).dot(&m2.normal(tr));
            assert!(outward > 0.0);
        }
    }

    #[test]
    fn open_surface_is_rejected() {
        let (v, mut t) = tetrahedron();
        t.pop();
        assert!(matches!(
            TriangleMesh::new(v, t),
            Err(Error::NonManifold(_, _, 1))
        ));
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        assert!(matches!(
            TriangleMesh::new(v, vec![[0, 1, 2]]),
            Err(Error::DegenerateTriangle { index: 0, .. })
        ));
    }

    #[test]
    fn triangle_edges_are_opposite_their_vertex() {
        let (v, t) = tetrahedron();
        let m = TriangleMesh::new(v, t).unwrap();
        for tr in 0..m.triangle_count() {
            for k in 0..3 {
                let e = m.edges()[m.triangle_edges(tr)[k]];
                assert!(!e.vertices.contains(&m.triangles()[tr][k]));
                assert!(e.triangles.contains(&tr));
            }
        }
    }
}
