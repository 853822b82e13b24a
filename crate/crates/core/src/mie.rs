//! Mie series for plane-wave scattering by a PEC sphere centred at the origin.
//!
//! Coefficients follow the `e^{−iωt}` convention of Bohren and Huffman;
//! fields are conjugated on output to the crate's `e^{jωt}` convention.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::excitation::PlaneWave;
use crate::linalg::{CVec3, Vec3, C64};
use crate::postproc::{Direction, FarFieldCut, NearFieldSample};
use crate::Z0;

/// Largest `|a_L| + |b_L|` accepted for the last retained order.
const TAIL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MieSolution {
    pub radius: f64,
    pub k0: f64,
    /// Truncation order `L`.
    pub order: usize,
    /// `a_n`, `n = 1..=L` (electric multipoles).
    pub a: Vec<C64>,
    /// `b_n`, `n = 1..=L` (magnetic multipoles).
    pub b: Vec<C64>,
}

/// `⌈ka⌉ + 15`.
pub fn default_order(ka: f64) -> usize {
    ka.ceil() as usize + 15
}

/// Riccati–Bessel `ψ_n(x) = x j_n(x)` for `n = 0..=l` by Miller's downward
/// recurrence.
pub fn riccati_psi(x: f64, l: usize) -> Vec<f64> {
    let start = l.max(x.ceil() as usize) + 30 + (x.sqrt().ceil() as usize) * 4;
    let mut psi = vec![0.0; start + 2];
    psi[start] = 1e-30;
    for n in (1..=start).rev() {
        psi[n - 1] = (2 * n + 1) as f64 / x * psi[n] - psi[n + 1];
        if psi[n - 1].abs() > 1e200 {
            for v in &mut psi[n - 1..] {
                *v *= 1e-200;
            }
        }
    }
    let exact0 = x.sin();
    let exact1 = x.sin() / x - x.cos();
    let scale = if exact0.abs() >= exact1.abs() {
        exact0 / psi[0]
    } else {
        exact1 / psi[1]
    };
    psi.truncate(l + 1);
    psi.iter_mut().for_each(|v| *v *= scale);
    psi
}

/// `x y_n(x)` for `n = 0..=l` by upward recurrence.
pub fn riccati_xy(x: f64, l: usize) -> Vec<f64> {
    let mut y = vec![0.0; l + 1];
    y[0] = -x.cos();
    if l > 0 {
        y[1] = -x.cos() / x - x.sin();
    }
    for n in 1..l {
        y[n + 1] = (2 * n + 1) as f64 / x * y[n] - y[n - 1];
    }
    y
}

/// `ξ_n = x h_n^{(1)}(x)` and `ξ_n'`, together with `ψ_n` and `ψ_n'`, for
/// `n = 0..=l`.
struct Riccati {
    psi: Vec<f64>,
    dpsi: Vec<f64>,
    xi: Vec<C64>,
    dxi: Vec<C64>,
}

impl Riccati {
    fn new(x: f64, l: usize) -> Self {
        let psi = riccati_psi(x, l);
        let xy = riccati_xy(x, l);
        let xi: Vec<C64> = psi.iter().zip(&xy).map(|(p, y)| C64::new(*p, *y)).collect();
        let mut dpsi = vec![x.cos(); l + 1];
        let mut dxi = vec![C64::new(x.cos(), x.sin()); l + 1];
        for n in 1..=l {
            dpsi[n] = psi[n - 1] - n as f64 * psi[n] / x;
            dxi[n] = xi[n - 1] - xi[n] * (n as f64 / x);
        }
        Self { psi, dpsi, xi, dxi }
    }
}

/// Angular functions `π_n(cos θ)`, `τ_n(cos θ)` for `n = 1..=l` (index `n − 1`).
fn pi_tau(mu: f64, l: usize) -> (Vec<f64>, Vec<f64>) {
    let mut pi = vec![0.0; l + 1];
    let mut tau = vec![0.0; l + 1];
    if l >= 1 {
        pi[1] = 1.0;
    }
    for n in 1..=l {
        if n >= 2 {
            let nf = n as f64;
            pi[n] = (2.0 * nf - 1.0) / (nf - 1.0) * mu * pi[n - 1] - nf / (nf - 1.0) * pi[n - 2];
        }
        tau[n] = n as f64 * mu * pi[n] - (n + 1) as f64 * pi[n - 1];
    }
    (pi[1..].to_vec(), tau[1..].to_vec())
}

/// PEC coefficients `a_n = ψ_n'(ka)/ξ_n'(ka)`, `b_n = ψ_n(ka)/ξ_n(ka)`.
pub fn mie_coefficients(radius: f64, k0: f64, order: usize) -> Result<MieSolution> {
    let ka = k0 * radius;
    if !(ka > 0.0) || !ka.is_finite() {
        return Err(Error::InvalidArgument(format!("k0·radius must be positive, got {ka}")));
    }
    if order == 0 {
        return Err(Error::InvalidArgument("Mie truncation order must be at least 1".into()));
    }
    let f = Riccati::new(ka, order);
    let a: Vec<C64> = (1..=order).map(|n| C64::from(f.dpsi[n]) / f.dxi[n]).collect();
    let b: Vec<C64> = (1..=order).map(|n| C64::from(f.psi[n]) / f.xi[n]).collect();
    let tail = a[order - 1].norm() + b[order - 1].norm();
    if !(tail <= TAIL_TOLERANCE) {
        return Err(Error::MieTruncation { order, ka });
    }
    Ok(MieSolution {
        radius,
        k0,
        order,
        a,
        b,
    })
}

/// Coefficients with the default truncation order.
pub fn mie_solution(radius: f64, k0: f64) -> Result<MieSolution> {
    mie_coefficients(radius, k0, default_order(k0 * radius))
}

/// Orthonormal frame with `z` along the propagation direction and the
/// incident amplitude split as `E0 = c_x x + c_y y`.
struct WaveFrame {
    x: Vec3,
    y: Vec3,
    z: Vec3,
    cx: C64,
    cy: C64,
}

impl WaveFrame {
    fn new(wave: &PlaneWave) -> Self {
        let z = wave.direction;
        let re = Vec3::new(wave.e0.x.re, wave.e0.y.re, wave.e0.z.re);
        let im = Vec3::new(wave.e0.x.im, wave.e0.y.im, wave.e0.z.im);
        let seed = if re.norm() >= im.norm() && re.norm() > 0.0 {
            re
        } else if im.norm() > 0.0 {
            im
        } else {
            z.cross(&if z.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() })
        };
        let x = (seed - z * z.dot(&seed)).normalize();
        let y = z.cross(&x);
        let proj = |u: &Vec3| wave.e0.x * u.x + wave.e0.y * u.y + wave.e0.z * u.z;
        Self {
            cx: proj(&x),
            cy: proj(&y),
            x,
            y,
            z,
        }
    }

    /// The two linear polarizations as `(amplitude, x', y')` with `z' = z`.
    fn polarizations(&self) -> [(C64, Vec3, Vec3); 2] {
        [(self.cx, self.x, self.y), (self.cy, self.y, -self.x)]
    }
}

/// Local spherical angles of `u` in the frame `(x, y, z)` and the
/// corresponding global unit vectors `r̂`, `θ̂`, `φ̂`.
fn local_spherical(u: &Vec3, x: &Vec3, y: &Vec3, z: &Vec3) -> (f64, f64, f64, f64, Vec3, Vec3, Vec3) {
    let (ux, uy, uz) = (u.dot(x), u.dot(y), u.dot(z));
    let ct = uz.clamp(-1.0, 1.0);
    let st = (ux * ux + uy * uy).sqrt();
    let phi = uy.atan2(ux);
    let (sp, cp) = phi.sin_cos();
    let r_hat = x * (st * cp) + y * (st * sp) + z * ct;
    let t_hat = x * (ct * cp) + y * (ct * sp) - z * st;
    let p_hat = x * (-sp) + y * cp;
    (ct, st, sp, cp, r_hat, t_hat, p_hat)
}

fn to_c(v: &Vec3, a: C64) -> CVec3 {
    CVec3::new(a * v.x, a * v.y, a * v.z)
}

impl MieSolution {
    pub fn ka(&self) -> f64 {
        self.k0 * self.radius
    }

    /// `(2π/k²) Σ (2n+1)(|a_n|² + |b_n|²)`.
    pub fn scattering_cross_section(&self) -> f64 {
        let s: f64 = (1..=self.order).map(|n| (2 * n + 1) as f64 * (self.a[n - 1].norm_sqr() + self.b[n - 1].norm_sqr())).sum();
        2.0 * std::f64::consts::PI / (self.k0 * self.k0) * s
    }

    /// `(2π/k²) Σ (2n+1) Re(a_n + b_n)`.
    pub fn extinction_cross_section(&self) -> f64 {
        let s: f64 = (1..=self.order).map(|n| (2 * n + 1) as f64 * (self.a[n - 1] + self.b[n - 1]).re).sum();
        2.0 * std::f64::consts::PI / (self.k0 * self.k0) * s
    }

    /// Scattering amplitudes `S1(θ)`, `S2(θ)`.
    fn amplitudes(&self, mu: f64) -> (C64, C64) {
        let (pi, tau) = pi_tau(mu, self.order);
        let mut s1 = C64::from(0.0);
        let mut s2 = C64::from(0.0);
        for n in 1..=self.order {
            let c = (2 * n + 1) as f64 / (n * (n + 1)) as f64;
            let (a, b) = (self.a[n - 1], self.b[n - 1]);
            s1 += (a * pi[n - 1] + b * tau[n - 1]) * c;
            s2 += (a * tau[n - 1] + b * pi[n - 1]) * c;
        }
        (s1, s2)
    }

    /// Far-field vector `F` in direction `u`, `E_sca ≈ F e^{−jkr}/r`.
    pub fn far_field_vector(&self, wave: &PlaneWave, u: &Vec3) -> CVec3 {
        let frame = WaveFrame::new(wave);
        let mut out = CVec3::zeros();
        for (amp, x, y) in frame.polarizations() {
            if amp == C64::from(0.0) {
                continue;
            }
            let (ct, _, sp, cp, _, t_hat, p_hat) = local_spherical(u, &x, &y, &frame.z);
            let (s1, s2) = self.amplitudes(ct);
            // (i/k)(cos φ S2 θ̂ − sin φ S1 φ̂), conjugated.
            let f = (to_c(&t_hat, s2 * cp) - to_c(&p_hat, s1 * sp)) * C64::new(0.0, 1.0 / self.k0);
            out += f.map(|z| z.conj()) * amp;
        }
        out
    }

    /// Scattered `E` and `H` at `r` outside the sphere.
    fn near_point(&self, frame: &WaveFrame, r: &Vec3) -> NearFieldSample {
        let rho = self.k0 * r.norm();
        let f = Riccati::new(rho, self.order);
        let u = r / r.norm();
        let mut e = CVec3::zeros();
        let mut h = CVec3::zeros();
        for (amp, x, y) in frame.polarizations() {
            if amp == C64::from(0.0) {
                continue;
            }
            let (ct, st, sp, cp, r_hat, t_hat, p_hat) = local_spherical(&u, &x, &y, &frame.z);
            let (pi, tau) = pi_tau(ct, self.order);
            let mut es = CVec3::zeros();
            let mut hs = CVec3::zeros();
            let mut i_n = C64::from(1.0);
            for n in 1..=self.order {
                i_n *= C64::new(0.0, 1.0);
                let nf = n as f64;
                let en = i_n * ((2.0 * nf + 1.0) / (nf * (nf + 1.0)));
                let z = f.xi[n] / rho;
                let dz = f.dxi[n] / rho;
                let (p, t) = (pi[n - 1], tau[n - 1]);
                let radial = z * (nf * (nf + 1.0) * st * p / rho);
                let m_o = to_c(&t_hat, z * (cp * p)) - to_c(&p_hat, z * (sp * t));
                let m_e = to_c(&t_hat, z * (-sp * p)) - to_c(&p_hat, z * (cp * t));
                let n_o = to_c(&r_hat, radial * sp) + to_c(&t_hat, dz * (sp * t)) + to_c(&p_hat, dz * (cp * p));
                let n_e = to_c(&r_hat, radial * cp) + to_c(&t_hat, dz * (cp * t)) - to_c(&p_hat, dz * (sp * p));
                let (a, b) = (self.a[n - 1], self.b[n - 1]);
                let j = C64::new(0.0, 1.0);
                es += (n_e * (j * a) - m_o * b) * en;
                hs += (n_o * (j * b) + m_e * a) * en;
            }
            e += es.map(|z| z.conj()) * amp;
            h += hs.map(|z| z.conj()) * (amp / Z0);
        }
        NearFieldSample { e, h }
    }
}

pub fn mie_far_field(sol: &MieSolution, wave: &PlaneWave, directions: &[Direction]) -> FarFieldCut {
    let f: Vec<CVec3> = directions.par_iter().map(|d| sol.far_field_vector(wave, &d.unit())).collect();
    FarFieldCut::from_vectors(directions.to_vec(), &f)
}

/// Scattered fields at points outside the sphere.
pub fn mie_near_field(sol: &MieSolution, wave: &PlaneWave, points: &[Vec3]) -> Result<Vec<NearFieldSample>> {
    if let Some((index, p)) = points.iter().enumerate().find(|(_, p)| !(p.norm() > sol.radius)) {
        return Err(Error::PointTooClose {
            index,
            distance: p.norm() - sol.radius,
            minimum: 0.0,
        });
    }
    let frame = WaveFrame::new(wave);
    Ok(points.par_iter().map(|r| sol.near_point(&frame, r)).collect())
}
