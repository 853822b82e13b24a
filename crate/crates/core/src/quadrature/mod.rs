//! Triangle rules and triangle-pair integrals of the free-space Green's
//! function `G = e^{-jkR} / (4πR)` and its gradient.
//!
//! Far pairs use a product Gauss rule. Near pairs (centroid distance below
//! `near_factor` times the longest edge of the two triangles) split
//! `G = [G − 1/(4πR)] + 1/(4πR)`: the bounded remainder goes to Gauss
//! quadrature on the source triangle, the static part to closed-form
//! potentials, and the outer integral over the observer triangle is
//! always Gauss.

mod potentials;
mod rules;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CVec3, Vec3, C64};

pub use potentials::{SourceTriangle, StaticPotentials};
pub use rules::{gauss_rule, TriangleRule};

const INV_4PI: f64 = 1.0 / (4.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    /// Pairs closer than this many longest edges take the extraction path.
    pub near_factor: f64,
    /// Rule on both triangles of far pairs.
    pub far_degree: usize,
    /// Observer rule on near pairs.
    pub near_outer_degree: usize,
    /// Source rule for the smooth remainder on near pairs.
    pub near_inner_degree: usize,
    /// Pairs sharing a vertex apply the observer rule on `4^n` sub-triangles;
    /// the closed-form inner integral has edge-log behaviour there that a
    /// single rule resolves only to about 1e-3.
    pub touching_subdivisions: usize,
    /// Rule for incident-field testing.
    pub excitation_degree: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            near_factor: 3.0,
            far_degree: 3,
            near_outer_degree: 7,
            near_inner_degree: 7,
            touching_subdivisions: 2,
            excitation_degree: 7,
        }
    }
}

impl QuadConfig {
    pub fn rules(&self) -> Result<QuadRules> {
        if !(self.near_factor >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "near_factor must be non-negative, got {}",
                self.near_factor
            )));
        }
        Ok(QuadRules {
            config: *self,
            far: gauss_rule(self.far_degree)?,
            near_outer: gauss_rule(self.near_outer_degree)?,
            near_inner: gauss_rule(self.near_inner_degree)?,
            excitation: gauss_rule(self.excitation_degree)?,
        })
    }
}

/// Instantiated rules of a [`QuadConfig`].
#[derive(Debug, Clone)]
pub struct QuadRules {
    pub config: QuadConfig,
    pub far: TriangleRule,
    pub near_outer: TriangleRule,
    pub near_inner: TriangleRule,
    pub excitation: TriangleRule,
}

/// `G(R)`.
#[inline]
pub fn green(k: f64, r: f64) -> C64 {
    C64::from_polar(INV_4PI / r, -k * r)
}

/// `∇_r G` for `rr = r − r'`.
#[inline]
pub fn grad_green(k: f64, rr: &Vec3) -> CVec3 {
    let r = rr.norm();
    let f = C64::new(1.0, k * r) * C64::from_polar(-INV_4PI / (r * r * r), -k * r);
    CVec3::new(f * rr.x, f * rr.y, f * rr.z)
}

/// `G(R) − 1/(4πR)`, bounded with limit `−jk/(4π)` at `R = 0`.
#[inline]
pub fn green_smooth(k: f64, r: f64) -> C64 {
    let x = k * r;
    if x < 0.25 {
        // Σ_{n≥1} (−j)^n x^{n−1} / n!
        let mut term = C64::new(0.0, -1.0);
        let mut sum = term;
        for n in 2..16 {
            term *= C64::new(0.0, -x / n as f64);
            sum += term;
        }
        sum * (k * INV_4PI)
    } else {
        (C64::from_polar(1.0, -x) - 1.0) * (INV_4PI / r)
    }
}

/// `∇_r [G − 1/(4πR)]` for `rr = r − r'`; bounded, zero at `R = 0`.
#[inline]
pub fn grad_green_smooth(k: f64, rr: &Vec3) -> CVec3 {
    let r = rr.norm();
    if r == 0.0 {
        return CVec3::zeros();
    }
    let x = k * r;
    // g(x) = (1 − (1 + jx) e^{−jx}) / x², with g(0) = −1/2.
    let g = if x < 0.25 {
        let mut sum = C64::new(0.0, 0.0);
        let mut pw = C64::new(-0.5, 0.0); // (−j)^n x^{n−2} / n!
        for n in 2..18 {
            sum += pw * (n as f64 - 1.0);
            pw *= C64::new(0.0, -x / (n as f64 + 1.0));
        }
        sum
    } else {
        (1.0 - C64::new(1.0, x) * C64::from_polar(1.0, -x)) / (x * x)
    };
    let f = g * (k * k * INV_4PI / r);
    CVec3::new(f * rr.x, f * rr.y, f * rr.z)
}

/// Precomputed data of one triangle for pair integration.
#[derive(Debug, Clone)]
pub struct TriangleGeom {
    pub source: SourceTriangle,
    pub centroid: Vec3,
    far_points: Vec<(Vec3, f64)>,
    near_outer_points: Vec<(Vec3, f64)>,
    touching_outer_points: Vec<(Vec3, f64)>,
    near_inner_points: Vec<(Vec3, f64)>,
    near_inner_rule: TriangleRule,
}

impl TriangleGeom {
    pub fn new(corners: [Vec3; 3], rules: &QuadRules) -> Self {
        let source = SourceTriangle::new(corners);
        let area = source.area;
        Self {
            centroid: (corners[0] + corners[1] + corners[2]) / 3.0,
            far_points: rules.far.map(&corners, area).collect(),
            near_outer_points: rules.near_outer.map(&corners, area).collect(),
            touching_outer_points: composite_points(&rules.near_outer, &corners, rules.config.touching_subdivisions),
            near_inner_points: rules.near_inner.map(&corners, area).collect(),
            near_inner_rule: rules.near_inner.clone(),
            source,
        }
    }

    pub fn corners(&self) -> &[Vec3; 3] {
        &self.source.corners
    }

    pub fn normal(&self) -> Vec3 {
        self.source.normal
    }

    pub fn area(&self) -> f64 {
        self.source.area
    }

    pub fn is_near(&self, other: &TriangleGeom, near_factor: f64) -> bool {
        let h = self.source.max_edge.max(other.source.max_edge);
        (self.centroid - other.centroid).norm() < near_factor * h
    }

    /// True if the triangles have a corner in common.
    pub fn touches(&self, other: &TriangleGeom) -> bool {
        let tol = 1e-9 * self.source.max_edge.max(other.source.max_edge);
        self.corners()
            .iter()
            .any(|a| other.corners().iter().any(|b| (a - b).norm() < tol))
    }

    /// Observer points and weights for a pair evaluated in `mode`.
    pub fn observer_points(&self, mode: PairMode) -> &[(Vec3, f64)] {
        match mode {
            PairMode::Far => &self.far_points,
            PairMode::Near => &self.near_outer_points,
            PairMode::Touching | PairMode::SelfPair => &self.touching_outer_points,
        }
    }
}

/// Source-triangle integrals at one observation point:
/// `s0 = ∫G`, `s1 = ∫G r'`, `v = ∫∇G` (principal value in-plane).
#[derive(Debug, Clone, Copy)]
pub struct PointIntegrals {
    pub s0: C64,
    pub s1: CVec3,
    pub v: CVec3,
}

/// How the source integral at an observation point is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    Far,
    Near,
    /// Distinct triangles with a common corner.
    Touching,
    /// Observer and source are the same triangle. The smooth remainder still
    /// has a cusp at `r' = r`, so its rule is applied on the three
    /// sub-triangles meeting at the observation point, each graded
    /// geometrically towards it.
    SelfPair,
}

impl PairMode {
    pub fn classify(obs: &TriangleGeom, src: &TriangleGeom, same: bool, near_factor: f64) -> Self {
        if same {
            PairMode::SelfPair
        } else if obs.is_near(src, near_factor) {
            if obs.touches(src) {
                PairMode::Touching
            } else {
                PairMode::Near
            }
        } else {
            PairMode::Far
        }
    }

    pub fn is_far(self) -> bool {
        self == PairMode::Far
    }
}

/// Evaluates [`PointIntegrals`] at `r` for source `src`.
///
/// `need_grad` skips the gradient when only the EFIE is wanted.
pub fn point_integrals(src: &TriangleGeom, r: &Vec3, k: f64, mode: PairMode, need_grad: bool) -> PointIntegrals {
    let mut s0 = C64::new(0.0, 0.0);
    let mut s1 = CVec3::zeros();
    let mut v = CVec3::zeros();
    let mut smooth = |p: &Vec3, w: f64| {
        let rr = r - p;
        let g = green_smooth(k, rr.norm()) * w;
        s0 += g;
        s1 += CVec3::new(g * p.x, g * p.y, g * p.z);
        if need_grad {
            v += grad_green_smooth(k, &rr) * C64::from(w);
        }
    };
    match mode {
        PairMode::Far => {
            for (p, w) in &src.far_points {
                let rr = r - p;
                let dist = rr.norm();
                let e = C64::from_polar(INV_4PI * w / dist, -k * dist);
                s0 += e;
                s1 += CVec3::new(e * p.x, e * p.y, e * p.z);
                if need_grad {
                    let f = -e * C64::new(1.0, k * dist) / (dist * dist);
                    v += CVec3::new(f * rr.x, f * rr.y, f * rr.z);
                }
            }
            return PointIntegrals { s0, s1, v };
        }
        PairMode::Near | PairMode::Touching => {
            for (p, w) in &src.near_inner_points {
                smooth(p, *w);
            }
        }
        PairMode::SelfPair => {
            let c = src.corners();
            for i in 0..3 {
                for sub in graded_towards(*r, c[i], c[(i + 1) % 3], SELF_GRADING) {
                    let area = 0.5 * (sub[1] - sub[0]).cross(&(sub[2] - sub[0])).norm();
                    for (p, w) in src.near_inner_rule.map(&sub, area) {
                        smooth(&p, w);
                    }
                }
            }
        }
    }
    let st = src.source.potentials(r);
    s0 += st.scalar * INV_4PI;
    let m1 = st.first_moment() * INV_4PI;
    s1 += CVec3::new(m1.x.into(), m1.y.into(), m1.z.into());
    if need_grad {
        let g = st.grad * INV_4PI;
        v += CVec3::new(g.x.into(), g.y.into(), g.z.into());
    }
    PointIntegrals { s0, s1, v }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for m in 2..=n {
                    let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            ((1.0 - x) / 2.0, 1.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Halving steps of the self-pair grading; each step cuts the cusp error of
/// the remainder by about 8.
const SELF_GRADING: usize = 2;

/// Splits `[r, a, b]` into `2·levels + 1` triangles, halving towards `r`.
fn graded_towards(r: Vec3, a: Vec3, b: Vec3, levels: usize) -> Vec<[Vec3; 3]> {
    let mut out = Vec::with_capacity(2 * levels + 1);
    let (mut a, mut b) = (a, b);
    for _ in 0..levels {
        let (am, bm) = ((r + a) / 2.0, (r + b) / 2.0);
        out.push([am, a, b]);
        out.push([am, b, bm]);
        a = am;
        b = bm;
    }
    out.push([r, a, b]);
    out
}

/// Rule points on `4^levels` congruent sub-triangles.
pub fn composite_points(rule: &TriangleRule, corners: &[Vec3; 3], levels: usize) -> Vec<(Vec3, f64)> {
    let mut tris = vec![*corners];
    for _ in 0..levels {
        tris = tris
            .iter()
            .flat_map(|[a, b, c]| {
                let (ab, bc, ca) = ((a + b) / 2.0, (b + c) / 2.0, (c + a) / 2.0);
                [[*a, ab, ca], [ab, *b, bc], [ca, bc, *c], [ab, bc, ca]]
            })
            .collect();
    }
    let area = 0.5 * (corners[1] - corners[0]).cross(&(corners[2] - corners[0])).norm() / tris.len() as f64;
    tris.iter().flat_map(|t| rule.map(t, area).collect::<Vec<_>>()).collect()
}

/// `∫∫ 1/(4πR) dS' dS` with the inner integral in closed form and the outer
/// one by `outer` applied on `4^subdivisions` pieces of the observer
/// triangle.
pub fn integrate_static_singular(
    observer: &[Vec3; 3],
    source: &[Vec3; 3],
    outer: &TriangleRule,
    subdivisions: usize,
) -> f64 {
    let src = SourceTriangle::new(*source);
    composite_points(outer, observer, subdivisions)
        .iter()
        .map(|(r, w)| w * src.potentials(r).scalar * INV_4PI)
        .sum()
}

/// Kernel of [`integrate_kernel_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `∫∫ f_m · G f_n`.
    G,
    /// `∫∫ f_m · (∇G × f_n)`.
    GradGCross,
}

/// An RWG-type field on one triangle: `coef · (r − origin)`, optionally
/// rotated by the triangle normal (`n̂ × ·`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBasis {
    pub coef: f64,
    pub origin: Vec3,
    pub rotate: Option<Vec3>,
}

impl LocalBasis {
    pub fn eval(&self, r: &Vec3) -> Vec3 {
        let b = (r - self.origin) * self.coef;
        match self.rotate {
            Some(n) => n.cross(&b),
            None => b,
        }
    }
}

/// Pair integral of `G` or `∇G ×` between a testing and a source field.
///
/// Source fields must be unrotated: the `∇G ×` path relies on
/// `∇G × (r' − q) = ∇G × (r − q)`, which holds because `∇G ∥ r − r'`.
pub fn integrate_kernel_pair(
    kind: KernelKind,
    f_m: &LocalBasis,
    f_n: &LocalBasis,
    tri_m: &TriangleGeom,
    tri_n: &TriangleGeom,
    k0: f64,
    near_factor: f64,
) -> Result<C64> {
    if f_n.rotate.is_some() {
        return Err(Error::InvalidArgument(
            "source field of a kernel pair must be unrotated".into(),
        ));
    }
    let same = tri_m.corners() == tri_n.corners();
    let mode = PairMode::classify(tri_m, tri_n, same, near_factor);
    let mut acc = C64::new(0.0, 0.0);
    for (r, w) in tri_m.observer_points(mode) {
        let pi = point_integrals(tri_n, r, k0, mode, kind == KernelKind::GradGCross);
        let t = f_m.eval(r);
        let val = match kind {
            KernelKind::G => {
                let q = f_n.origin;
                let inner = pi.s1 - CVec3::new(pi.s0 * q.x, pi.s0 * q.y, pi.s0 * q.z);
                inner.x * t.x + inner.y * t.y + inner.z * t.z
            }
            KernelKind::GradGCross => {
                let d = r - f_n.origin;
                let c = crate::linalg::to_cvec3(&d);
                let cr = pi.v.cross(&c);
                cr.x * t.x + cr.y * t.y + cr.z * t.z
            }
        };
        acc += val * (*w * f_n.coef);
    }
    Ok(acc)
}
