//! Plane-wave incidence and its tested right-hand sides.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cdot3, cross_rc, CVec3, Vec3, C64, ZERO};
use crate::quadrature::QuadConfig;
use crate::rwg::RwgSpace;
use crate::Z0;

/// `E(r) = E0 e^{−jk k̂·r}`, `H(r) = k̂ × E(r) / Z0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    /// Unit propagation direction.
    pub direction: Vec3,
    /// Complex amplitude (V/m), transverse to `direction`.
    pub e0: CVec3,
}

impl PlaneWave {
    /// `direction` is normalised; `e0` must be transverse to it.
    pub fn new(direction: Vec3, e0: CVec3) -> Result<Self> {
        let norm = direction.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "plane-wave direction must be a nonzero vector, got {direction:?}"
            )));
        }
        let direction = direction / norm;
        let amp = e0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let long = cdot3(&e0, &direction).norm();
        if long > 1e-12 * amp.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidArgument(format!(
                "polarization is not transverse to the propagation direction (|E0·k̂| = {long:e})"
            )));
        }
        Ok(Self { direction, e0 })
    }

    /// Linear polarization along the real vector `pol` with amplitude `amplitude`.
    pub fn linear(direction: Vec3, pol: Vec3, amplitude: f64) -> Result<Self> {
        let pol = pol.normalize() * amplitude;
        Self::new(direction, CVec3::new(pol.x.into(), pol.y.into(), pol.z.into()))
    }

    pub fn amplitude(&self) -> f64 {
        self.e0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, a: C64) -> Self {
        Self {
            direction: self.direction,
            e0: self.e0 * a,
        }
    }

    fn phase(&self, k0: f64, r: &Vec3) -> C64 {
        C64::from_polar(1.0, -k0 * self.direction.dot(r))
    }

    pub fn e_field(&self, k0: f64, r: &Vec3) -> CVec3 {
        self.e0 * self.phase(k0, r)
    }

    pub fn h_field(&self, k0: f64, r: &Vec3) -> CVec3 {
        cross_rc(&self.direction, &self.e0) * (self.phase(k0, r) / Z0)
    }
}

/// `e_m = ∫ β_m · E_inc` and `h_m = ∫ α_m · H_inc`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationVectors {
    pub e: Vec<C64>,
    pub h: Vec<C64>,
}

pub fn excite_plane_wave(space: &RwgSpace, wave: &PlaneWave, k0: f64, quad: &QuadConfig) -> Result<ExcitationVectors> {
    let rule = quad.rules()?.excitation;
    let mesh = space.mesh();
    let per_triangle: Vec<[(C64, C64); 3]> = (0..mesh.triangle_count())
        .into_par_iter()
        .map(|t| {
            let corners = mesh.corners(t);
            let n = mesh.normal(t);
            let mut acc = [(ZERO, ZERO); 3];
            for (r, w) in rule.map(&corners, mesh.area(t)) {
                let e = wave.e_field(k0, &r);
                let h = wave.h_field(k0, &r);
                for (slot, lf) in acc.iter_mut().zip(space.local_functions(t)) {
                    let beta = (r - corners[lf.free_local]) * lf.coef;
                    slot.0 += cdot3(&e, &beta) * w;
                    slot.1 += cdot3(&h, &n.cross(&beta)) * w;
                }
            }
            acc
        })
        .collect();
    let mut e = vec![ZERO; space.len()];
    let mut h = vec![ZERO; space.len()];
    for (t, acc) in per_triangle.iter().enumerate() {
        for (lf, (de, dh)) in space.local_functions(t).iter().zip(acc) {
            e[lf.function] += de;
            h[lf.function] += dh;
        }
    }
    Ok(ExcitationVectors { e, h })
}
