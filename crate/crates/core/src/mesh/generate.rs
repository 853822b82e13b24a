use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::linalg::Vec3;

pub const DEFAULT_TRIANGLE_CAP: usize = 200_000;

/// Polyhedra whose faceted surface is the exact shape at every refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Canonical {
    /// Axis-aligned cube centred at the origin.
    Cube { side: f64 },
    /// Square base in the z = 0 plane centred on the z axis, apex at z = height.
    Pyramid { base: f64, height: f64 },
    /// Triangular prism along y. The cross-section in the x–z plane has its
    /// sharp apex at x = depth/2 and a back face of the given width at
    /// x = −depth/2.
    Wedge { length: f64, depth: f64, width: f64 },
}

impl Canonical {
    fn validate(&self) -> Result<()> {
        let dims: &[f64] = match self {
            Canonical::Cube { side } => &[*side][..],
            Canonical::Pyramid { base, height } => &[*base, *height][..],
            Canonical::Wedge {
                length,
                depth,
                width,
            } => &[*length, *depth, *width][..],
        };
        if dims.iter().all(|d| d.is_finite() && *d > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "shape dimensions must be positive: {self:?}"
            )))
        }
    }
}

/// Geodesic icosphere: each icosahedron face is split into `n²` triangles
/// with the smallest `n` whose projected mean edge is at most `target_edge`.
pub fn generate_sphere(diameter: f64, target_edge: f64) -> Result<TriangleMesh> {
    generate_sphere_with_cap(diameter, target_edge, DEFAULT_TRIANGLE_CAP)
}

pub fn generate_sphere_with_cap(
    diameter: f64,
    target_edge: f64,
    max_triangles: usize,
) -> Result<TriangleMesh> {
    if !(diameter > 0.0) || !(target_edge > 0.0) || target_edge >= diameter {
        return Err(Error::InvalidArgument(format!(
            "sphere needs 0 < target_edge < diameter (got {target_edge}, {diameter})"
        )));
    }
    let radius = 0.5 * diameter;
    let (ico_v, ico_t) = icosahedron();
    for n in 1.. {
        let required = 20 * n * n;
        if required > max_triangles {
            return Err(Error::TooManyTriangles {
                required,
                cap: max_triangles,
            });
        }
        let (mut v, t) = subdivide(&ico_v, &ico_t, n);
        v.iter_mut().for_each(|p| *p = p.normalize() * radius);
        let mesh = TriangleMesh::new(v, t)?;
        if mesh.stats().mean_edge_length <= target_edge {
            return Ok(mesh);
        }
    }
    unreachable!()
}

/// Sphere whose RWG space has exactly `unknowns` functions: a Fibonacci
/// lattice of `unknowns/3 + 2` points and its convex hull.
pub fn sphere_with_unknowns(diameter: f64, unknowns: usize) -> Result<TriangleMesh> {
    if !(diameter > 0.0) || unknowns < 6 || unknowns % 3 != 0 {
        return Err(Error::InvalidArgument(format!(
            "closed triangulations have 3(V-2) edges; {unknowns} is not reachable"
        )));
    }
    let count = unknowns / 3 + 2;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let points: Vec<Vec3> = (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z) * (0.5 * diameter)
        })
        .collect();
    let triangles = convex_hull(&points)?;
    TriangleMesh::new(points, triangles)
}

pub fn generate_canonical(shape: Canonical, target_edge: f64) -> Result<TriangleMesh> {
    generate_canonical_with_cap(shape, target_edge, DEFAULT_TRIANGLE_CAP)
}

pub fn generate_canonical_with_cap(
    shape: Canonical,
    target_edge: f64,
    max_triangles: usize,
) -> Result<TriangleMesh> {
    shape.validate()?;
    if !(target_edge > 0.0) {
        return Err(Error::InvalidArgument("target_edge must be positive".into()));
    }
    match shape {
        Canonical::Cube { .. } | Canonical::Pyramid { .. } => {
            let coarse = coarse_polyhedron(shape)?;
            // Uniform subdivision by s scales every edge by exactly 1/s.
            let s = (coarse.stats().mean_edge_length / target_edge).ceil().max(1.0) as usize;
            let required = coarse.triangle_count() * s * s;
            if required > max_triangles {
                return Err(Error::TooManyTriangles {
                    required,
                    cap: max_triangles,
                });
            }
            refine_uniform(&coarse, s)
        }
        Canonical::Wedge {
            length,
            depth,
            width,
        } => {
            let side = (depth * depth + 0.25 * width * width).sqrt().max(width);
            let mut h = target_edge;
            loop {
                let n_cross = (side / h).ceil().max(1.0) as usize;
                let n_len = (length / h).ceil().max(1.0) as usize;
                let required = 2 * n_cross * n_cross + 6 * n_cross * n_len;
                if required > max_triangles {
                    return Err(Error::TooManyTriangles {
                        required,
                        cap: max_triangles,
                    });
                }
                let mesh = wedge_structured(length, depth, width, n_cross, n_len)?;
                if mesh.stats().mean_edge_length <= target_edge {
                    return Ok(mesh);
                }
                h *= 0.95;
            }
        }
    }
}

/// Wedge with `n_cross` segments along each side of the cross-section and
/// `n_len` segments along its length. The end caps are the cross-section
/// triangle split into `n_cross²` similar triangles.
pub fn wedge_structured(
    length: f64,
    depth: f64,
    width: f64,
    n_cross: usize,
    n_len: usize,
) -> Result<TriangleMesh> {
    Canonical::Wedge {
        length,
        depth,
        width,
    }
    .validate()?;
    if n_cross == 0 || n_len == 0 {
        return Err(Error::InvalidArgument("segment counts must be positive".into()));
    }
    let n = n_cross;
    let apex = [0.5 * depth, 0.0];
    let b = [-0.5 * depth, -0.5 * width];
    let c = [-0.5 * depth, 0.5 * width];
    let lerp = |p: [f64; 2], q: [f64; 2], t: f64| [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];

    // Boundary ring: apex -> b -> c -> apex.
    let mut ring = Vec::with_capacity(3 * n);
    for k in 0..n {
        ring.push(lerp(apex, b, k as f64 / n as f64));
    }
    for k in 0..n {
        ring.push(lerp(b, c, k as f64 / n as f64));
    }
    for k in 0..n {
        ring.push(lerp(c, apex, k as f64 / n as f64));
    }
    let rn = ring.len();

    let mut vertices = Vec::new();
    for r in 0..=n_len {
        let y = -0.5 * length + length * r as f64 / n_len as f64;
        for p in &ring {
            vertices.push(Vec3::new(p[0], y, p[1]));
        }
    }
    let ring_vertex = |r: usize, k: usize| r * rn + (k % rn);

    let mut triangles = Vec::new();
    for r in 0..n_len {
        for k in 0..rn {
            let (a0, a1) = (ring_vertex(r, k), ring_vertex(r, k + 1));
            let (b0, b1) = (ring_vertex(r + 1, k), ring_vertex(r + 1, k + 1));
            triangles.push([a0, a1, b1]);
            triangles.push([a0, b1, b0]);
        }
    }

    for (r, y) in [(0, -0.5 * length), (n_len, 0.5 * length)] {
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut node = |i: usize, j: usize, vertices: &mut Vec<Vec3>| -> usize {
            // Cap lattice point apex + i/n (b − apex) + j/n (c − apex).
            if j == 0 {
                return ring_vertex(r, i);
            }
            if i + j == n {
                return ring_vertex(r, n + j);
            }
            if i == 0 {
                return ring_vertex(r, 3 * n - j);
            }
            *index.entry((i, j)).or_insert_with(|| {
                let s = i as f64 / n as f64;
                let t = j as f64 / n as f64;
                let x = apex[0] + s * (b[0] - apex[0]) + t * (c[0] - apex[0]);
                let z = apex[1] + s * (b[1] - apex[1]) + t * (c[1] - apex[1]);
                vertices.push(Vec3::new(x, y, z));
                vertices.len() - 1
            })
        };
        for i in 0..n {
            for j in 0..(n - i) {
                let p00 = node(i, j, &mut vertices);
                let p10 = node(i + 1, j, &mut vertices);
                let p01 = node(i, j + 1, &mut vertices);
                triangles.push([p00, p10, p01]);
                if i + j + 2 <= n {
                    let p11 = node(i + 1, j + 1, &mut vertices);
                    triangles.push([p10, p11, p01]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Splits every triangle into `s²` congruent sub-triangles, sharing the new
/// nodes along common edges. The surface is unchanged.
pub fn refine_uniform(mesh: &TriangleMesh, s: usize) -> Result<TriangleMesh> {
    if s == 0 {
        return Err(Error::InvalidArgument("refinement factor must be >= 1".into()));
    }
    let (v, t) = subdivide(mesh.vertices(), mesh.triangles(), s);
    TriangleMesh::new(v, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum NodeKey {
    Vertex(usize),
    /// Sorted endpoints and the position counted from the lower endpoint.
    Edge(usize, usize, usize),
    Face(usize, usize, usize),
}

fn subdivide(vertices: &[Vec3], triangles: &[[usize; 3]], s: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let mut out_v: Vec<Vec3> = Vec::new();
    let mut index: HashMap<NodeKey, usize> = HashMap::new();
    let mut out_t = Vec::with_capacity(triangles.len() * s * s);

    let edge_key = |p: usize, q: usize, pos: usize| {
        if p < q {
            NodeKey::Edge(p, q, pos)
        } else {
            NodeKey::Edge(q, p, s - pos)
        }
    };

    for (t, &[a, b, c]) in triangles.iter().enumerate() {
        let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
        let mut node = |i: usize, j: usize| -> usize {
            let key = match (i, j) {
                (0, 0) => NodeKey::Vertex(a),
                _ if i == s && j == 0 => NodeKey::Vertex(b),
                _ if i == 0 && j == s => NodeKey::Vertex(c),
                _ if j == 0 => edge_key(a, b, i),
                _ if i == 0 => edge_key(a, c, j),
                _ if i + j == s => edge_key(b, c, j),
                _ => NodeKey::Face(t, i, j),
            };
            *index.entry(key).or_insert_with(|| {
                let u = i as f64 / s as f64;
                let w = j as f64 / s as f64;
                out_v.push(pa + (pb - pa) * u + (pc - pa) * w);
                out_v.len() - 1
            })
        };
        for i in 0..s {
            for j in 0..(s - i) {
                let p00 = node(i, j);
                let p10 = node(i + 1, j);
                let p01 = node(i, j + 1);
                out_t.push([p00, p10, p01]);
                if i + j + 2 <= s {
                    let p11 = node(i + 1, j + 1);
                    out_t.push([p10, p11, p01]);
                }
            }
        }
    }
    (out_v, out_t)
}

fn coarse_polyhedron(shape: Canonical) -> Result<TriangleMesh> {
    match shape {
        Canonical::Cube { side } => {
            let h = 0.5 * side;
            let v: Vec<Vec3> = (0..8)
                .map(|i| {
                    let bit = |k: usize| if i >> k & 1 == 1 { h } else { -h };
                    Vec3::new(bit(0), bit(1), bit(2))
                })
                .collect();
            let quads = [
                [0, 2, 6, 4],
                [1, 5, 7, 3],
                [0, 4, 5, 1],
                [2, 3, 7, 6],
                [0, 1, 3, 2],
                [4, 6, 7, 5],
            ];
            let t = quads
                .iter()
                .flat_map(|&[a, b, c, d]| [[a, b, c], [a, c, d]])
                .collect();
            TriangleMesh::new(v, t)
        }
        Canonical::Pyramid { base, height } => {
            let h = 0.5 * base;
            let v = vec![
                Vec3::new(-h, -h, 0.0),
                Vec3::new(h, -h, 0.0),
                Vec3::new(h, h, 0.0),
                Vec3::new(-h, h, 0.0),
                Vec3::new(0.0, 0.0, height),
            ];
            let t = vec![[0, 2, 1], [0, 3, 2], [0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
            TriangleMesh::new(v, t)
        }
        Canonical::Wedge {
            length,
            depth,
            width,
        } => wedge_structured(length, depth, width, 1, 1),
    }
}

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    let mut v = Vec::with_capacity(12);
    for &a in &[-1.0, 1.0] {
        for &b in &[-phi, phi] {
            v.push(Vec3::new(0.0, a, b));
            v.push(Vec3::new(a, b, 0.0));
            v.push(Vec3::new(b, 0.0, a));
        }
    }
    let v: Vec<Vec3> = v.into_iter().map(|p| p.normalize()).collect();
    let t = convex_hull(&v).expect("icosahedron vertices are in convex position");
    (v, t)
}

/// Incremental convex hull for points in convex position (every point a hull
/// vertex). Returns outward-wound triangles.
fn convex_hull(points: &[Vec3]) -> Result<Vec<[usize; 3]>> {
    let n = points.len();
    if n < 4 {
        return Err(Error::InvalidArgument("hull needs at least 4 points".into()));
    }
    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let eps = 1e-12 * scale.max(1e-300);

    // Seed tetrahedron: first point, farthest point, farthest from their
    // line, farthest from their plane.
    let i0 = 0;
    let i1 = (0..n)
        .max_by(|&a, &b| {
            let da = (points[a] - points[i0]).norm();
            let db = (points[b] - points[i0]).norm();
            da.total_cmp(&db)
        })
        .unwrap();
    let dir = (points[i1] - points[i0]).normalize();
    let i2 = (0..n)
        .max_by(|&a, &b| {
            let d = |k: usize| {
                let w = points[k] - points[i0];
                (w - dir * w.dot(&dir)).norm()
            };
            d(a).total_cmp(&d(b))
        })
        .unwrap();
    let plane_n = (points[i1] - points[i0]).cross(&(points[i2] - points[i0])).normalize();
    let i3 = (0..n)
        .max_by(|&a, &b| {
            let d = |k: usize| (points[k] - points[i0]).dot(&plane_n).abs();
            d(a).total_cmp(&d(b))
        })
        .unwrap();
    if (points[i3] - points[i0]).dot(&plane_n).abs() <= eps {
        return Err(Error::InvalidArgument("hull points are coplanar".into()));
    }
    let interior = (points[i0] + points[i1] + points[i2] + points[i3]) / 4.0;

    let outward = |f: [usize; 3]| -> [usize; 3] {
        let [a, b, c] = f;
        let nrm = (points[b] - points[a]).cross(&(points[c] - points[a]));
        if nrm.dot(&(points[a] - interior)) < 0.0 {
            [a, c, b]
        } else {
            f
        }
    };
    let mut faces: Vec<[usize; 3]> = vec![
        outward([i0, i1, i2]),
        outward([i0, i1, i3]),
        outward([i0, i2, i3]),
        outward([i1, i2, i3]),
    ];

    for p in 0..n {
        if [i0, i1, i2, i3].contains(&p) {
            continue;
        }
        let visible: Vec<bool> = faces
            .iter()
            .map(|&[a, b, c]| {
                let nrm = (points[b] - points[a]).cross(&(points[c] - points[a]));
                nrm.normalize().dot(&(points[p] - points[a])) > eps
            })
            .collect();
        if !visible.iter().any(|&v| v) {
            return Err(Error::InvalidArgument(format!(
                "point {p} is not in convex position"
            )));
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (f, &[a, b, c]) in faces.iter().enumerate() {
            if visible[f] {
                for (u, w) in [(a, b), (b, c), (c, a)] {
                    directed.insert((u, w), f);
                }
            }
        }
        let mut horizon: Vec<(usize, usize)> = directed
            .keys()
            .filter(|&&(u, w)| !directed.contains_key(&(w, u)))
            .copied()
            .collect();
        horizon.sort_unstable();
        let mut next: Vec<[usize; 3]> = faces
            .iter()
            .zip(&visible)
            .filter(|(_, &v)| !v)
            .map(|(f, _)| *f)
            .collect();
        next.extend(horizon.into_iter().map(|(u, w)| [u, w, p]));
        faces = next;
    }
    Ok(faces)
}
