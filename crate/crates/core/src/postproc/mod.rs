//! Radiated fields, RCS and error measures of solved current coefficients.
//!
//! Far fields are reported with the `e^{−jkr}/r` factor removed and the
//! phase referred to the origin. Cuts run over `θ ∈ [0°, 180°]` at fixed `φ`
//! and always carry both polarizations.

mod io;
mod near;

pub use io::{
    far_field_csv, fmt_db, fmt_sci, parse_far_field_csv, read_far_field_csv, write_atomic, write_far_field_csv,
    FAR_FIELD_HEADER,
};
pub use near::{near_field, point_triangle_distance, NearFieldSample};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CVec3, Vec3, C64};
use crate::quadrature::gauss_rule;
use crate::rwg::{charge_vector, RwgSpace};
use crate::Z0;

/// Reported in place of `−∞ dB` so that CSV stays numeric.
pub const DB_FLOOR: f64 = -200.0;

/// `20 log10(x)` for amplitude ratios, clamped at [`DB_FLOOR`].
pub fn amplitude_db(x: f64) -> f64 {
    if x > 0.0 {
        (20.0 * x.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// `10 log10(x)` for power-like quantities, clamped at [`DB_FLOOR`].
pub fn power_db(x: f64) -> f64 {
    if x > 0.0 {
        (10.0 * x.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub theta_deg: f64,
    pub phi_deg: f64,
}

impl Direction {
    pub fn new(theta_deg: f64, phi_deg: f64) -> Self {
        Self { theta_deg, phi_deg }
    }

    fn angles(&self) -> (f64, f64, f64, f64) {
        let (st, ct) = self.theta_deg.to_radians().sin_cos();
        let (sp, cp) = self.phi_deg.to_radians().sin_cos();
        (st, ct, sp, cp)
    }

    pub fn unit(&self) -> Vec3 {
        let (st, ct, sp, cp) = self.angles();
        Vec3::new(st * cp, st * sp, ct)
    }

    pub fn theta_hat(&self) -> Vec3 {
        let (st, ct, sp, cp) = self.angles();
        Vec3::new(ct * cp, ct * sp, -st)
    }

    pub fn phi_hat(&self) -> Vec3 {
        let (_, _, sp, cp) = self.angles();
        Vec3::new(-sp, cp, 0.0)
    }
}

/// `n_theta` equally spaced samples of `θ ∈ [0°, 180°]` at fixed `φ`.
pub fn cut_plane(phi_deg: f64, n_theta: usize) -> Vec<Direction> {
    let step = if n_theta > 1 { 180.0 / (n_theta - 1) as f64 } else { 0.0 };
    (0..n_theta).map(|i| Direction::new(i as f64 * step, phi_deg)).collect()
}

/// Concatenated [`cut_plane`]s.
pub fn cut_planes(phis_deg: &[f64], n_theta: usize) -> Vec<Direction> {
    phis_deg.iter().flat_map(|&p| cut_plane(p, n_theta)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldCut {
    pub directions: Vec<Direction>,
    pub e_theta: Vec<C64>,
    pub e_phi: Vec<C64>,
}

impl FarFieldCut {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Builds a cut from Cartesian far-field vectors.
    pub fn from_vectors(directions: Vec<Direction>, fields: &[CVec3]) -> Self {
        let (e_theta, e_phi) = directions
            .iter()
            .zip(fields)
            .map(|(d, f)| (dot_rc(&d.theta_hat(), f), dot_rc(&d.phi_hat(), f)))
            .unzip();
        Self {
            directions,
            e_theta,
            e_phi,
        }
    }

    pub fn scaled(&self, a: C64) -> Self {
        Self {
            directions: self.directions.clone(),
            e_theta: self.e_theta.iter().map(|z| z * a).collect(),
            e_phi: self.e_phi.iter().map(|z| z * a).collect(),
        }
    }
}

fn dot_rc(a: &Vec3, b: &CVec3) -> C64 {
    b.x * a.x + b.y * a.y + b.z * a.z
}

fn check_len(space: &RwgSpace, v: &[C64]) -> Result<()> {
    if v.len() == space.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: space.len(),
            got: v.len(),
        })
    }
}

/// Weighted quadrature samples `(r', w J(r'), w M(r'))` over the surface.
pub(crate) fn current_samples(space: &RwgSpace, i: &[C64], v: Option<&[C64]>, degree: usize) -> Result<Vec<(Vec3, CVec3, CVec3)>> {
    check_len(space, i)?;
    if let Some(v) = v {
        check_len(space, v)?;
    }
    let rule = gauss_rule(degree)?;
    let mesh = space.mesh();
    let mut out = Vec::with_capacity(mesh.triangle_count() * rule.len());
    for t in 0..mesh.triangle_count() {
        let corners = mesh.corners(t);
        for (r, w) in rule.map(&corners, mesh.area(t)) {
            let mut j = CVec3::zeros();
            let mut m = CVec3::zeros();
            for lf in space.local_functions(t) {
                let b = (r - corners[lf.free_local]) * (lf.coef * w);
                let bc = CVec3::new(b.x.into(), b.y.into(), b.z.into());
                j += bc * i[lf.function];
                if let Some(v) = v {
                    m += bc * v[lf.function];
                }
            }
            out.push((r, j, m));
        }
    }
    Ok(out)
}

/// Far-field vector `F(r̂)` with `E(r) ≈ F e^{−jkr}/r`:
/// `F = −jkZ0/(4π) (I − r̂r̂)·∫J e^{jk r̂·r'} + jk/(4π) r̂ × ∫M e^{jk r̂·r'}`.
pub fn far_field_vectors(space: &RwgSpace, i: &[C64], v: Option<&[C64]>, k0: f64, directions: &[Direction]) -> Result<Vec<CVec3>> {
    let samples = current_samples(space, i, v, 7)?;
    let c = 1.0 / (4.0 * std::f64::consts::PI);
    Ok(directions
        .par_iter()
        .map(|d| {
            let u = d.unit();
            let mut nj = CVec3::zeros();
            let mut nm = CVec3::zeros();
            for (r, j, m) in &samples {
                let ph = C64::from_polar(1.0, k0 * u.dot(r));
                nj += j * ph;
                nm += m * ph;
            }
            let uc = CVec3::new(u.x.into(), u.y.into(), u.z.into());
            let along = uc * (nj.x * u.x + nj.y * u.y + nj.z * u.z);
            let transverse = nj - along;
            transverse * C64::new(0.0, -k0 * Z0 * c) + uc.cross(&nm) * C64::new(0.0, k0 * c)
        })
        .collect())
}

/// Scattered far field of electric (and optional magnetic) RWG currents.
pub fn far_field(space: &RwgSpace, i: &[C64], v: Option<&[C64]>, k0: f64, directions: &[Direction]) -> Result<FarFieldCut> {
    let f = far_field_vectors(space, i, v, k0, directions)?;
    Ok(FarFieldCut::from_vectors(directions.to_vec(), &f))
}

/// Bistatic RCS in m² and dBsm.
#[derive(Debug, Clone, PartialEq)]
pub struct Rcs {
    pub sigma_theta: Vec<f64>,
    pub sigma_phi: Vec<f64>,
}

impl Rcs {
    pub fn theta_dbsm(&self) -> Vec<f64> {
        self.sigma_theta.iter().map(|s| power_db(*s)).collect()
    }

    pub fn phi_dbsm(&self) -> Vec<f64> {
        self.sigma_phi.iter().map(|s| power_db(*s)).collect()
    }
}

/// `σ = 4π |F|² / |E0|²` per polarization.
pub fn bistatic_rcs(cut: &FarFieldCut, e0: f64) -> Result<Rcs> {
    if !(e0 > 0.0) || !e0.is_finite() {
        return Err(Error::InvalidArgument(format!("incident amplitude must be positive, got {e0}")));
    }
    let s = |z: &C64| 4.0 * std::f64::consts::PI * z.norm_sqr() / (e0 * e0);
    Ok(Rcs {
        sigma_theta: cut.e_theta.iter().map(s).collect(),
        sigma_phi: cut.e_phi.iter().map(s).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    /// `(ε_θ, ε_φ)` per direction, linear.
    pub per_direction: Vec<(f64, f64)>,
    pub max_linear: f64,
    pub avg_linear: f64,
    pub max_db: f64,
    pub avg_db: f64,
    /// `‖i_ref − i‖² / ‖i_ref‖²`, when computed.
    pub current_error: Option<f64>,
    /// Mean near-field error, when computed.
    pub near_field_error: Option<f64>,
}

fn same_grid(a: &[Direction], b: &[Direction]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} vs {} directions", a.len(), b.len())));
    }
    for (k, (p, q)) in a.iter().zip(b).enumerate() {
        if (p.theta_deg - q.theta_deg).abs() > 1e-9 || (p.phi_deg - q.phi_deg).abs() > 1e-9 {
            return Err(Error::GridMismatch(format!("sample {k}: {p:?} vs {q:?}")));
        }
    }
    Ok(())
}

/// Per-direction errors normalized by the largest reference amplitude over
/// all directions and both polarizations.
pub fn relative_error_cut(candidate: &FarFieldCut, reference: &FarFieldCut) -> Result<ErrorReport> {
    same_grid(&candidate.directions, &reference.directions)?;
    if reference.is_empty() {
        return Err(Error::GridMismatch("empty direction grid".into()));
    }
    let peak = reference
        .e_theta
        .iter()
        .chain(&reference.e_phi)
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument("reference far field is identically zero".into()));
    }
    let per_direction: Vec<(f64, f64)> = (0..reference.len())
        .map(|k| {
            (
                (reference.e_theta[k] - candidate.e_theta[k]).norm() / peak,
                (reference.e_phi[k] - candidate.e_phi[k]).norm() / peak,
            )
        })
        .collect();
    let max_linear = per_direction.iter().map(|(a, b)| a.max(*b)).fold(0.0, f64::max);
    let avg_linear = per_direction.iter().map(|(a, b)| a + b).sum::<f64>() / (2 * per_direction.len()) as f64;
    Ok(ErrorReport {
        per_direction,
        max_linear,
        avg_linear,
        max_db: amplitude_db(max_linear),
        avg_db: amplitude_db(avg_linear),
        current_error: None,
        near_field_error: None,
    })
}

/// `‖i_ref − i‖² / ‖i_ref‖²`.
pub fn current_error(candidate: &[C64], reference: &[C64]) -> Result<f64> {
    if candidate.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: candidate.len(),
        });
    }
    let den: f64 = reference.iter().map(|z| z.norm_sqr()).sum();
    if !(den > 0.0) {
        return Err(Error::InvalidArgument("reference current is zero".into()));
    }
    let num: f64 = candidate.iter().zip(reference).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(num / den)
}

/// Mean over points of `|E_ref − E| / max |E_ref|`.
pub fn near_field_error(candidate: &[NearFieldSample], reference: &[NearFieldSample]) -> Result<f64> {
    if candidate.len() != reference.len() || reference.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: candidate.len(),
        });
    }
    let norm = |v: &CVec3| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let peak = reference.iter().map(|s| norm(&s.e)).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument("reference near field is identically zero".into()));
    }
    Ok(candidate.iter().zip(reference).map(|(c, r)| norm(&(r.e - c.e))).sum::<f64>() / (peak * reference.len() as f64))
}

/// Norms of the current and its surface divergence at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LfSample {
    pub frequency: f64,
    pub i_re: f64,
    pub i_im: f64,
    pub d_re: f64,
    pub d_im: f64,
}

/// Solves at each frequency with `solve` and records `‖Re i‖`, `‖Im i‖`,
/// `‖Re d‖`, `‖Im d‖`.
pub fn lf_divergence_sweep(
    space: &RwgSpace,
    frequencies: &[f64],
    mut solve: impl FnMut(f64) -> Result<Vec<C64>>,
) -> Result<Vec<LfSample>> {
    if frequencies.len() < 2 || frequencies.windows(2).any(|w| !(w[1] < w[0])) || frequencies.iter().any(|f| !(*f > 0.0)) {
        return Err(Error::InvalidArgument("frequencies must be positive and strictly descending".into()));
    }
    let span = frequencies[0] / frequencies[frequencies.len() - 1];
    if span < 1e3 * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!("frequency sweep must span at least 3 decades, got {:.2}", span.log10())));
    }
    frequencies
        .iter()
        .map(|&f| {
            let i = solve(f)?;
            let d = charge_vector(space, &i, 2.0 * std::f64::consts::PI * f)?;
            let (re, im): (Vec<f64>, Vec<f64>) = i.iter().map(|z| (z.re, z.im)).unzip();
            let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            Ok(LfSample {
                frequency: f,
                i_re: n(&re),
                i_im: n(&im),
                d_re: d.d_real_norm(),
                d_im: d.d_imag_norm(),
            })
        })
        .collect()
}

/// Logarithmically spaced frequencies from `f_high` down to `f_low`.
pub fn log_frequencies(f_high: f64, f_low: f64, per_decade: usize) -> Vec<f64> {
    let decades = (f_high / f_low).log10();
    let n = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=n).map(|k| f_high * 10f64.powf(-decades * k as f64 / n as f64)).collect()
}

#[cfg(test)]
mod tests;
