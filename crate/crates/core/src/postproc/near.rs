use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{CVec3, Vec3, C64};
use crate::quadrature::{point_integrals, PairMode, QuadConfig, TriangleGeom};
use crate::rwg::RwgSpace;
use crate::Z0;

use super::check_len;

/// Scattered fields at one observation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearFieldSample {
    pub e: CVec3,
    pub h: CVec3,
}

/// Distance from `p` to the closed triangle `[a, b, c]`.
pub fn point_triangle_distance(p: &Vec3, tri: &[Vec3; 3]) -> f64 {
    let [a, b, c] = tri;
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        return (p - (a + ab * t)).norm();
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        return (p - (a + ac * t)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + (c - b) * t)).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let (v, w) = (vb * denom, vc * denom);
    (p - (a + ab * v + ac * w)).norm()
}

fn complex(v: &Vec3) -> CVec3 {
    CVec3::new(v.x.into(), v.y.into(), v.z.into())
}

/// Scattered `E` and `H` of electric (and optional magnetic) RWG currents at
/// points off the surface.
///
/// Triangles within `near_factor` longest edges of a point use the same
/// singularity-subtracted source integrals as matrix assembly; the rest use
/// the far rule.
pub fn near_field(
    space: &RwgSpace,
    i: &[C64],
    v: Option<&[C64]>,
    k0: f64,
    points: &[Vec3],
    quad: &QuadConfig,
) -> Result<Vec<NearFieldSample>> {
    check_len(space, i)?;
    if let Some(v) = v {
        check_len(space, v)?;
    }
    let mesh = space.mesh();
    let rules = quad.rules()?;
    let geoms: Vec<TriangleGeom> = (0..mesh.triangle_count()).map(|t| TriangleGeom::new(mesh.corners(t), &rules)).collect();
    let minimum = 1e-6 * mesh.stats().mean_edge_length;
    for (index, p) in points.iter().enumerate() {
        let distance = geoms
            .iter()
            .map(|g| point_triangle_distance(p, g.corners()))
            .fold(f64::INFINITY, f64::min);
        if distance <= minimum {
            return Err(Error::PointTooClose { index, distance, minimum });
        }
    }
    let inv_k2 = 1.0 / (k0 * k0);
    Ok(points
        .par_iter()
        .map(|r| {
            let mut a_j = CVec3::zeros();
            let mut a_m = CVec3::zeros();
            let mut curl_j = CVec3::zeros();
            let mut curl_m = CVec3::zeros();
            for (t, g) in geoms.iter().enumerate() {
                let mode = if (g.centroid - r).norm() < quad.near_factor * g.source.max_edge {
                    PairMode::Near
                } else {
                    PairMode::Far
                };
                let pi = point_integrals(g, r, k0, mode, true);
                let corners = g.corners();
                for lf in space.local_functions(t) {
                    let p = corners[lf.free_local];
                    // ∫ G β = coef (S1 − p S0), ∫ div β ∇G = 2 coef V and
                    // ∫ ∇G × β = coef V × (r − p) since ∇G ∥ r − r'.
                    let pot = (pi.s1 - complex(&p) * pi.s0 + pi.v * C64::from(2.0 * inv_k2)) * C64::from(lf.coef);
                    let curl = pi.v.cross(&complex(&(r - p))) * C64::from(lf.coef);
                    a_j += pot * i[lf.function];
                    curl_j += curl * i[lf.function];
                    if let Some(v) = v {
                        a_m += pot * v[lf.function];
                        curl_m += curl * v[lf.function];
                    }
                }
            }
            NearFieldSample {
                e: a_j * C64::new(0.0, -k0 * Z0) - curl_m,
                h: curl_j + a_m * C64::new(0.0, -k0 / Z0),
            }
        })
        .collect())
}
