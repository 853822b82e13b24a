//! RWG basis functions on a closed mesh.
//!
//! Function `n` lives on edge `n` and uses the classical normalisation
//! `β_n(r) = ±l_n / (2 A±) (r − p±)`, so its normal component across the
//! shared edge is exactly one. The lower-indexed adjacent triangle is the plus
//! triangle, where the current flows away from the free vertex.

use crate::error::{Error, Result};
use crate::linalg::{Vec3, C64, J};
use crate::mesh::TriangleMesh;

/// Barycentric slack allowed when checking that a point lies in a triangle.
pub const BARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwgFunction {
    pub edge: usize,
    pub plus: usize,
    pub minus: usize,
    pub free_plus: usize,
    pub free_minus: usize,
    pub length: f64,
    pub area_plus: f64,
    pub area_minus: f64,
}

/// One RWG function as seen from a single triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFunction {
    pub function: usize,
    /// Local index (0..3) of the free vertex.
    pub free_local: usize,
    /// `+1` on the plus triangle, `-1` on the minus triangle.
    pub sign: f64,
    /// `sign · l / (2A)`; the function is `coef · (r − free vertex)`.
    pub coef: f64,
}

#[derive(Debug, Clone)]
pub struct RwgSpace {
    mesh: TriangleMesh,
    functions: Vec<RwgFunction>,
    local: Vec<[LocalFunction; 3]>,
}

pub fn build_rwg_space(mesh: &TriangleMesh) -> RwgSpace {
    RwgSpace::new(mesh.clone())
}

impl RwgSpace {
    pub fn new(mesh: TriangleMesh) -> Self {
        let mut functions = Vec::with_capacity(mesh.edge_count());
        for (e, edge) in mesh.edges().iter().enumerate() {
            let [plus, minus] = edge.triangles;
            let free = |t: usize| {
                let k = mesh.triangle_edges(t).iter().position(|&x| x == e).unwrap();
                mesh.triangles()[t][k]
            };
            functions.push(RwgFunction {
                edge: e,
                plus,
                minus,
                free_plus: free(plus),
                free_minus: free(minus),
                length: mesh.edge_length(e),
                area_plus: mesh.area(plus),
                area_minus: mesh.area(minus),
            });
        }
        let local = (0..mesh.triangle_count())
            .map(|t| {
                let area = mesh.area(t);
                let edges = mesh.triangle_edges(t);
                std::array::from_fn(|k| {
                    let f = &functions[edges[k]];
                    let sign = if f.plus == t { 1.0 } else { -1.0 };
                    LocalFunction {
                        function: edges[k],
                        free_local: k,
                        sign,
                        coef: sign * f.length / (2.0 * area),
                    }
                })
            })
            .collect();
        Self {
            mesh,
            functions,
            local,
        }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn function(&self, n: usize) -> &RwgFunction {
        &self.functions[n]
    }

    pub fn functions(&self) -> &[RwgFunction] {
        &self.functions
    }

    /// The three functions supported on triangle `t`, ordered by the local
    /// index of their free vertex.
    pub fn local_functions(&self, t: usize) -> &[LocalFunction; 3] {
        &self.local[t]
    }

    /// Surface divergence of function `n` on triangle `t` (zero off support).
    pub fn divergence(&self, n: usize, t: usize) -> f64 {
        let f = &self.functions[n];
        if t == f.plus {
            f.length / f.area_plus
        } else if t == f.minus {
            -f.length / f.area_minus
        } else {
            0.0
        }
    }

    fn support(&self, n: usize, tri: usize, p: &Vec3) -> Result<Option<(f64, Vec3)>> {
        let f = self.functions.get(n).ok_or_else(|| {
            Error::InvalidArgument(format!("function index {n} out of range ({})", self.len()))
        })?;
        let (coef, free) = if tri == f.plus {
            (f.length / (2.0 * f.area_plus), f.free_plus)
        } else if tri == f.minus {
            (-f.length / (2.0 * f.area_minus), f.free_minus)
        } else {
            return Ok(None);
        };
        let bary = barycentric(&self.mesh.corners(tri), p);
        if bary.iter().any(|&b| b < -BARY_TOLERANCE) {
            return Err(Error::PointOutsideTriangle { triangle: tri, bary });
        }
        Ok(Some((coef, p - self.mesh.vertices()[free])))
    }
}

/// Barycentric coordinates of the projection of `p` onto the triangle plane.
pub fn barycentric(corners: &[Vec3; 3], p: &Vec3) -> [f64; 3] {
    let [a, b, c] = corners;
    let (e1, e2, d) = (b - a, c - a, p - a);
    let (d11, d12, d22) = (e1.dot(&e1), e1.dot(&e2), e2.dot(&e2));
    let (d1, d2) = (d.dot(&e1), d.dot(&e2));
    let det = d11 * d22 - d12 * d12;
    let u = (d22 * d1 - d12 * d2) / det;
    let v = (d11 * d2 - d12 * d1) / det;
    [1.0 - u - v, u, v]
}

/// `β_n(p)` evaluated from triangle `tri`; zero if `tri` does not support `n`.
pub fn eval_beta(space: &RwgSpace, n: usize, tri: usize, p: &Vec3) -> Result<Vec3> {
    Ok(space
        .support(n, tri, p)?
        .map_or_else(Vec3::zeros, |(coef, d)| d * coef))
}

/// `α_n(p) = n̂ × β_n(p)` with the outward normal of `tri`.
pub fn eval_alpha(space: &RwgSpace, n: usize, tri: usize, p: &Vec3) -> Result<Vec3> {
    let beta = eval_beta(space, n, tri, p)?;
    Ok(space.mesh.normal(tri).cross(&beta))
}

/// Per-triangle surface divergence and charge density of a current.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeDiagnostics {
    /// `d_k = Σ_n i_n div β_n|_k` (A/m²).
    pub d: Vec<C64>,
    /// `ρ_k = (j/ω) d_k` (C/m²).
    pub rho: Vec<C64>,
}

impl ChargeDiagnostics {
    pub fn d_real(&self) -> Vec<f64> {
        self.d.iter().map(|z| z.re).collect()
    }

    pub fn d_imag(&self) -> Vec<f64> {
        self.d.iter().map(|z| z.im).collect()
    }

    pub fn d_real_norm(&self) -> f64 {
        self.d.iter().map(|z| z.re * z.re).sum::<f64>().sqrt()
    }

    pub fn d_imag_norm(&self) -> f64 {
        self.d.iter().map(|z| z.im * z.im).sum::<f64>().sqrt()
    }
}

pub fn charge_vector(space: &RwgSpace, i: &[C64], omega: f64) -> Result<ChargeDiagnostics> {
    if i.len() != space.len() {
        return Err(Error::DimensionMismatch {
            expected: space.len(),
            got: i.len(),
        });
    }
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("omega must be positive, got {omega}")));
    }
    let mut d = vec![C64::new(0.0, 0.0); space.mesh.triangle_count()];
    for (n, f) in space.functions.iter().enumerate() {
        d[f.plus] += i[n] * (f.length / f.area_plus);
        d[f.minus] -= i[n] * (f.length / f.area_minus);
    }
    let rho = d.iter().map(|dk| J / omega * dk).collect();
    Ok(ChargeDiagnostics { d, rho })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_canonical, parse_off, Canonical};

    fn tetra() -> TriangleMesh {
        parse_off("OFF\n4 4 0\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n3 0 1 2\n3 0 3 1\n3 0 2 3\n3 1 3 2\n")
            .unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(build_rwg_space(&tetra()).len(), 6);
        let cube = generate_canonical(Canonical::Cube { side: 1.0 }, 10.0).unwrap();
        assert_eq!(build_rwg_space(&cube).len(), 18);
    }

    #[test]
    fn free_vertex_gives_zero() {
        let s = build_rwg_space(&tetra());
        for n in 0..s.len() {
            let f = *s.function(n);
            let p = s.mesh().vertices()[f.free_plus];
            assert_eq!(eval_beta(&s, n, f.plus, &p).unwrap(), Vec3::zeros());
        }
    }

    #[test]
    fn normal_component_is_continuous_and_unit() {
        let s = build_rwg_space(&tetra());
        for n in 0..s.len() {
            let f = *s.function(n);
            let [a, b] = s.mesh().edges()[n].vertices;
            let (va, vb) = (s.mesh().vertices()[a], s.mesh().vertices()[b]);
            let mid = (va + vb) / 2.0;
            // In-plane edge normal pointing from plus into minus triangle.
            let np = (vb - va).cross(&s.mesh().normal(f.plus)).normalize();
            let np = if np.dot(&(mid - s.mesh().centroid(f.plus))) < 0.0 { -np } else { np };
            let nm = (vb - va).cross(&s.mesh().normal(f.minus)).normalize();
            let nm = if nm.dot(&(mid - s.mesh().centroid(f.minus))) < 0.0 { nm } else { -nm };
            let bp = eval_beta(&s, n, f.plus, &mid).unwrap();
            let bm = eval_beta(&s, n, f.minus, &mid).unwrap();
            assert!((bp.dot(&np) - 1.0).abs() < 1e-12);
            assert!((bm.dot(&nm) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn outside_point_is_rejected() {
        let s = build_rwg_space(&tetra());
        let f = *s.function(0);
        let far = Vec3::new(10.0, 10.0, 10.0);
        assert!(matches!(
            eval_beta(&s, 0, f.plus, &far),
            Err(Error::PointOutsideTriangle { .. })
        ));
        let other = (0..4).find(|&t| t != f.plus && t != f.minus).unwrap();
        assert_eq!(eval_beta(&s, 0, other, &far).unwrap(), Vec3::zeros());
    }

    #[test]
    fn alpha_on_a_flat_plate_by_hand() {
        // Unit cube: the bottom face z = 0 has outward normal -z.
        let cube = generate_canonical(Canonical::Cube { side: 1.0 }, 10.0).unwrap();
        let s = build_rwg_space(&cube);
        let t = (0..cube.triangle_count())
            .find(|&t| cube.normal(t).z < -0.5)
            .unwrap();
        let lf = s.local_functions(t)[0];
        let free = cube.vertices()[cube.triangles()[t][lf.free_local]];
        let p = cube.centroid(t);
        let beta = (p - free) * lf.coef;
        let expect = Vec3::new(beta.y, -beta.x, 0.0);
        let got = eval_alpha(&s, lf.function, t, &p).unwrap();
        assert!((got - expect).norm() < 1e-14);
    }

    #[test]
    fn charge_of_single_function() {
        let s = build_rwg_space(&tetra());
        let mut i = vec![C64::new(0.0, 0.0); s.len()];
        i[2] = C64::new(1.0, 0.0);
        let q = charge_vector(&s, &i, 1.0).unwrap();
        let f = s.function(2);
        for (k, dk) in q.d.iter().enumerate() {
            if k == f.plus {
                assert!(dk.re > 0.0);
            } else if k == f.minus {
                assert!(dk.re < 0.0);
            } else {
                assert_eq!(*dk, C64::new(0.0, 0.0));
            }
        }
        assert!(matches!(
            charge_vector(&s, &i[..3], 1.0),
            Err(Error::DimensionMismatch { expected: 6, got: 3 })
        ));
    }
}
