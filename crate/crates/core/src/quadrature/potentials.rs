//! Closed-form static potentials of a flat triangle.
//!
//! For an observation point `r` with projection `ρ` onto the source plane
//! and signed height `d`, every edge `i` contributes through the in-plane
//! outward edge normal `m̂_i`, the edge-aligned coordinates `s±` of its end
//! points, the perpendicular distance `t0` and the edge log
//! `f_i = ln((R⁺ + s⁺)/(R⁻ + s⁻))`:
//!
//! ```text
//! ∫ 1/R dS'          = Σ t0 f − |d| Σ β
//! ∫ (r' − ρ)/R dS'   = ½ Σ m̂ (R0² f + s⁺R⁺ − s⁻R⁻)
//! ∇_r ∫ 1/R dS'      = −Σ m̂ f − n̂ sgn(d) Σ β
//! ```
//!
//! With `sgn(0) = 0` the gradient is the Cauchy principal value for points
//! in the source plane; the ±2π jump is left to the identity term.

use crate::linalg::Vec3;

/// Heights below this fraction of the longest source edge count as in-plane.
const PLANE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SourceTriangle {
    pub corners: [Vec3; 3],
    pub normal: Vec3,
    pub area: f64,
    pub max_edge: f64,
    /// Unit vector along edge `i`, from corner `i` to corner `i + 1`.
    tangents: [Vec3; 3],
    /// In-plane outward normal of edge `i`.
    edge_normals: [Vec3; 3],
}

impl SourceTriangle {
    pub fn new(corners: [Vec3; 3]) -> Self {
        let cross = (corners[1] - corners[0]).cross(&(corners[2] - corners[0]));
        let area = 0.5 * cross.norm();
        let normal = cross / (2.0 * area);
        let mut max_edge: f64 = 0.0;
        let tangents: [Vec3; 3] = std::array::from_fn(|i| {
            let e = corners[(i + 1) % 3] - corners[i];
            max_edge = max_edge.max(e.norm());
            e.normalize()
        });
        let edge_normals = tangents.map(|t| t.cross(&normal));
        Self {
            corners,
            normal,
            area,
            max_edge,
            tangents,
            edge_normals,
        }
    }

    /// Signed height of `r` above the plane, snapped to zero when in-plane.
    pub fn height(&self, r: &Vec3) -> f64 {
        let d = (r - self.corners[0]).dot(&self.normal);
        if d.abs() < PLANE_TOLERANCE * self.max_edge {
            0.0
        } else {
            d
        }
    }

    pub fn potentials(&self, r: &Vec3) -> StaticPotentials {
        let d_raw = (r - self.corners[0]).dot(&self.normal);
        let d = self.height(r);
        let rho = r - self.normal * d_raw;
        let ad = d.abs();
        let mut scalar = 0.0;
        let mut vector = Vec3::zeros();
        let mut sum_mf = Vec3::zeros();
        let mut sum_beta = 0.0;
        for i in 0..3 {
            let a = self.corners[i];
            let b = self.corners[(i + 1) % 3];
            let (l, m) = (self.tangents[i], self.edge_normals[i]);
            let sm = (a - rho).dot(&l);
            let sp = (b - rho).dot(&l);
            let t0 = (a - rho).dot(&m);
            let r0sq = t0 * t0 + d * d;
            let rm = (r - a).norm();
            let rp = (r - b).norm();
            let f = edge_log(sm, sp, rm, rp, r0sq);
            let beta = (t0 * sp).atan2(r0sq + ad * rp) - (t0 * sm).atan2(r0sq + ad * rm);
            scalar += t0 * f - ad * beta;
            vector += m * (r0sq * f + sp * rp - sm * rm);
            sum_mf += m * f;
            sum_beta += beta;
        }
        let sgn = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        StaticPotentials {
            rho,
            scalar,
            vector: vector * 0.5,
            grad: -sum_mf - self.normal * (sgn * sum_beta),
        }
    }
}

/// Static potentials of a unit-density flat triangle at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticPotentials {
    /// Projection of the observation point onto the source plane.
    pub rho: Vec3,
    /// `∫ 1/R dS'`.
    pub scalar: f64,
    /// `∫ (r' − ρ)/R dS'`.
    pub vector: Vec3,
    /// `∇_r ∫ 1/R dS'` (principal value in-plane).
    pub grad: Vec3,
}

impl StaticPotentials {
    /// `∫ r'/R dS'`.
    pub fn first_moment(&self) -> Vec3 {
        self.vector + self.rho * self.scalar
    }
}

/// `ln((R⁺ + s⁺)/(R⁻ + s⁻))`, evaluated without cancellation on either side
/// of the foot point. Returns zero on the edge segment itself, where every
/// use of the log is multiplied by a vanishing `t0` or `R0²`.
fn edge_log(sm: f64, sp: f64, rm: f64, rp: f64, r0sq: f64) -> f64 {
    let v = if sm >= 0.0 {
        ((rp + sp) / (rm + sm)).ln()
    } else if sp <= 0.0 {
        ((rm - sm) / (rp - sp)).ln()
    } else if r0sq > 0.0 {
        ((rp + sp) * (rm - sm) / r0sq).ln()
    } else {
        0.0
    };
    if v.is_finite() {
        v
    } else {
        0.0
    }
}
