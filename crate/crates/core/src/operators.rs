//! Dense moment matrices and sparse Gram matrices for one mesh and frequency.
//!
//! With local RWG fields `c_a (r − p_a)` on the observer triangle and
//! `c_b (r' − q_b)` on the source triangle, and per observation point
//! `S0 = ∫G`, `S1 = ∫G r'`, `V = ∫∇G`, the pair contributions are
//!
//! ```text
//! B  += c_a c_b (r − p_a) · (S1 − q_b S0)
//! C  += −4 c_a c_b S0                               (div β = 2c)
//! Kα += c_a c_b (n̂ × (r − p_a)) · (V × (r − q_b))
//! Kβ += c_a c_b (r − p_a) · (V × (r − q_b))
//! ```
//!
//! integrated over the observer triangle. The last two use
//! `∇G × (r' − q) = ∇G × (r − q)`, valid because `∇G ∥ r − r'`.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::excitation::{excite_plane_wave, ExcitationVectors, PlaneWave};
use crate::linalg::{to_cvec3, CVec3, CsrMatrix, DenseMatrix, Vec3, C64, J, ZERO};
use crate::quadrature::{gauss_rule, point_integrals, PairMode, QuadConfig, TriangleGeom};
use crate::rwg::RwgSpace;
use crate::{wavenumber, Z0};

/// All matrices of the formulations at one frequency.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub frequency: f64,
    pub k0: f64,
    pub z0: f64,
    pub b: DenseMatrix<C64>,
    pub c: DenseMatrix<C64>,
    pub k_alpha: DenseMatrix<C64>,
    pub k_beta: DenseMatrix<C64>,
    pub g_bb: CsrMatrix,
    pub g_ba: CsrMatrix,
}

impl OperatorSet {
    pub fn len(&self) -> usize {
        self.b.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `jk Z0 (B + C/k²)`.
    pub fn efie_matrix(&self) -> DenseMatrix<C64> {
        let mut t = self.b.clone();
        t.add_scaled(C64::from(1.0 / (self.k0 * self.k0)), &self.c);
        t.scale(J * self.k0 * self.z0);
        t
    }

    /// `M = −(G_bb/2 + Kα)`.
    pub fn mfie_matrix(&self) -> DenseMatrix<C64> {
        let mut m = self.k_alpha.clone();
        add_csr(&mut m, 0.5, &self.g_bb);
        m.scale(C64::from(-1.0));
        m
    }
}

/// `m += a · s`.
pub fn add_csr(m: &mut DenseMatrix<C64>, a: f64, s: &CsrMatrix) {
    for r in 0..s.dim() {
        let row = m.row_mut(r);
        for (c, v) in s.row(r) {
            row[c] += a * v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    B,
    C,
    /// `B + C/k²` in one matrix.
    T,
    KAlpha,
    KBeta,
}

/// Observer triangles handled per parallel batch.
const BATCH: usize = 16;

fn check_frequency(frequency: f64) -> Result<f64> {
    if !(frequency > 0.0) || !frequency.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "frequency must be positive, got {frequency}"
        )));
    }
    Ok(wavenumber(frequency))
}

pub fn assemble(space: &RwgSpace, frequency: f64, quad: &QuadConfig) -> Result<OperatorSet> {
    let k0 = check_frequency(frequency)?;
    let mut blocks = assemble_blocks(space, k0, quad, &[Block::B, Block::C, Block::KAlpha, Block::KBeta])?;
    let k_beta = blocks.pop().unwrap();
    let k_alpha = blocks.pop().unwrap();
    let c = symmetrize(blocks.pop().unwrap());
    let b = symmetrize(blocks.pop().unwrap());
    Ok(OperatorSet {
        frequency,
        k0,
        z0: Z0,
        b,
        c,
        k_alpha,
        k_beta,
        g_bb: gram_bb(space),
        g_ba: gram_ba(space),
    })
}

/// The EFIE system matrix `jk Z0 (B + C/k²)` alone, in a single dense
/// buffer. Used for refined-mesh references.
pub fn assemble_efie(space: &RwgSpace, frequency: f64, quad: &QuadConfig) -> Result<DenseMatrix<C64>> {
    let k0 = check_frequency(frequency)?;
    let mut t = symmetrize(assemble_blocks(space, k0, quad, &[Block::T])?.pop().unwrap());
    t.scale(J * k0 * Z0);
    Ok(t)
}

/// `(A + Aᵀ)/2`. The exact B and C are symmetric; the quadrature is not,
/// because near pairs integrate observer and source with different rules.
fn symmetrize(mut m: DenseMatrix<C64>) -> DenseMatrix<C64> {
    let n = m.rows();
    for r in 0..n {
        for c in r + 1..n {
            let v = (m.get(r, c) + m.get(c, r)) * 0.5;
            m.set(r, c, v);
            m.set(c, r, v);
        }
    }
    m
}

fn assemble_blocks(space: &RwgSpace, k0: f64, quad: &QuadConfig, blocks: &[Block]) -> Result<Vec<DenseMatrix<C64>>> {
    let rules = quad.rules()?;
    let mesh = space.mesh();
    let n = space.len();
    let nt = mesh.triangle_count();
    let geoms: Vec<TriangleGeom> = (0..nt)
        .into_par_iter()
        .map(|t| TriangleGeom::new(mesh.corners(t), &rules))
        .collect();
    let need_grad = blocks.iter().any(|b| matches!(b, Block::KAlpha | Block::KBeta));
    let inv_k2 = 1.0 / (k0 * k0);
    let nb = blocks.len();
    let mut out: Vec<DenseMatrix<C64>> = blocks.iter().map(|_| DenseMatrix::zeros(n, n)).collect();

    let batches: Vec<Vec<usize>> = (0..nt).collect::<Vec<_>>().chunks(BATCH).map(|c| c.to_vec()).collect();
    for batch in &batches {
        // Rows [block][local i][column] of each observer triangle.
        let local: Vec<Vec<C64>> = batch
            .par_iter()
            .map(|&a| {
                let mut rows = vec![ZERO; nb * 3 * n];
                let ga = &geoms[a];
                let corners_a = mesh.corners(a);
                let normal = mesh.normal(a);
                let lfa = space.local_functions(a);
                for (bt, gb) in geoms.iter().enumerate() {
                    let mode = PairMode::classify(ga, gb, a == bt, rules.config.near_factor);
                    let corners_b = mesh.corners(bt);
                    let lfb = space.local_functions(bt);
                    for (r, w) in ga.observer_points(mode) {
                        let pi = point_integrals(gb, r, k0, mode, need_grad);
                        let mut s = [CVec3::zeros(); 3];
                        let mut u = [CVec3::zeros(); 3];
                        for j in 0..3 {
                            let q = corners_b[lfb[j].free_local];
                            s[j] = pi.s1 - CVec3::new(pi.s0 * q.x, pi.s0 * q.y, pi.s0 * q.z);
                            if need_grad {
                                u[j] = pi.v.cross(&to_cvec3(&(r - q)));
                            }
                        }
                        for i in 0..3 {
                            let d = r - corners_a[lfa[i].free_local];
                            let t = normal.cross(&d);
                            for j in 0..3 {
                                let f = w * lfa[i].coef * lfb[j].coef;
                                let col = lfb[j].function;
                                for (bi, block) in blocks.iter().enumerate() {
                                    let v = match block {
                                        Block::B => dot(&s[j], &d),
                                        Block::C => pi.s0 * -4.0,
                                        Block::T => dot(&s[j], &d) - pi.s0 * (4.0 * inv_k2),
                                        Block::KAlpha => dot(&u[j], &t),
                                        Block::KBeta => dot(&u[j], &d),
                                    };
                                    rows[(bi * 3 + i) * n + col] += v * f;
                                }
                            }
                        }
                    }
                }
                rows
            })
            .collect();
        for (&a, rows) in batch.iter().zip(&local) {
            for (bi, m) in out.iter_mut().enumerate() {
                for (i, lf) in space.local_functions(a).iter().enumerate() {
                    let src = &rows[(bi * 3 + i) * n..(bi * 3 + i + 1) * n];
                    for (dst, v) in m.row_mut(lf.function).iter_mut().zip(src) {
                        *dst += v;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[inline]
fn dot(a: &CVec3, b: &Vec3) -> C64 {
    a.x * b.x + a.y * b.y + a.z * b.z
}

/// Accumulates `∫_t f(β_i, β_j)` over all triangles into a sparse matrix.
fn gram(space: &RwgSpace, f: impl Fn(&Vec3, &Vec3, &Vec3) -> f64) -> CsrMatrix {
    // Integrands are quadratic; the degree-3 rule is exact.
    let rule = gauss_rule(3).expect("degree 3 is supported");
    let mesh = space.mesh();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); space.len()];
    for t in 0..mesh.triangle_count() {
        let corners = mesh.corners(t);
        let normal = mesh.normal(t);
        let lf = space.local_functions(t);
        let mut local = [[0.0; 3]; 3];
        for (r, w) in rule.map(&corners, mesh.area(t)) {
            let beta: [Vec3; 3] = std::array::from_fn(|i| (r - corners[lf[i].free_local]) * lf[i].coef);
            for i in 0..3 {
                for j in 0..3 {
                    local[i][j] += w * f(&beta[i], &beta[j], &normal);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                rows[lf[i].function].push((lf[j].function, local[i][j]));
            }
        }
    }
    CsrMatrix::from_rows(space.len(), rows)
}

/// `[G_bb]_mn = ∫ β_m · β_n`.
pub fn gram_bb(space: &RwgSpace) -> CsrMatrix {
    gram(space, |bm, bn, _| bm.dot(bn))
}

/// `[G_ba]_mn = ∫ β_m · α_n` with `α_n = n̂ × β_n`.
pub fn gram_ba(space: &RwgSpace) -> CsrMatrix {
    gram(space, |bm, bn, n| bm.dot(&n.cross(bn)))
}

pub fn gram_bb_entry(space: &RwgSpace, m: usize, n: usize) -> f64 {
    gram_entry(space, m, n, |bm, bn, _| bm.dot(bn))
}

pub fn gram_ba_entry(space: &RwgSpace, m: usize, n: usize) -> f64 {
    gram_entry(space, m, n, |bm, bn, nrm| bm.dot(&nrm.cross(bn)))
}

fn gram_entry(space: &RwgSpace, m: usize, n: usize, f: impl Fn(&Vec3, &Vec3, &Vec3) -> f64) -> f64 {
    let rule = gauss_rule(3).expect("degree 3 is supported");
    let mesh = space.mesh();
    let (fm, fn_) = (space.function(m), space.function(n));
    let mut acc = 0.0;
    for t in [fm.plus, fm.minus] {
        if t != fn_.plus && t != fn_.minus {
            continue;
        }
        let corners = mesh.corners(t);
        let normal = mesh.normal(t);
        let lf = space.local_functions(t);
        let find = |g: usize| lf.iter().find(|l| l.function == g).copied().unwrap();
        let (lm, ln) = (find(m), find(n));
        for (r, w) in rule.map(&corners, mesh.area(t)) {
            let bm = (r - corners[lm.free_local]) * lm.coef;
            let bn = (r - corners[ln.free_local]) * ln.coef;
            acc += w * f(&bm, &bn, &normal);
        }
    }
    acc
}

/// Convenience: operators and plane-wave excitation at one frequency.
pub fn assemble_with_excitation(
    space: &RwgSpace,
    frequency: f64,
    wave: &PlaneWave,
    quad: &QuadConfig,
) -> Result<(OperatorSet, ExcitationVectors)> {
    let ops = assemble(space, frequency, quad)?;
    let exc = excite_plane_wave(space, wave, ops.k0, quad)?;
    Ok((ops, exc))
}

/// Spectral checks on the Gram matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramDiagnostics {
    /// Cholesky of `G_bb` succeeded and its smallest eigenvalue is positive.
    pub bb_positive_definite: bool,
    pub bb_condition: f64,
    /// Condition number of `D^{-1/2} G_bb D^{-1/2}` with `D = diag(G_bb)`.
    pub bb_scaled_condition: f64,
    /// `‖G_ba + G_baᵀ‖_F / ‖G_ba‖_F`.
    pub ba_skew_residual: f64,
    /// `σ_min / σ_max` of `G_ba`.
    pub ba_sigma_ratio: f64,
}

/// Dense eigen- and singular-value analysis; cubic in `N`.
pub fn gram_diagnostics(space: &RwgSpace) -> GramDiagnostics {
    let bb = gram_bb(space).to_dense().to_nalgebra();
    let ba = gram_ba(space).to_dense().to_nalgebra();
    let eig = bb.clone().symmetric_eigen().eigenvalues;
    let d: Vec<f64> = bb.diagonal().iter().map(|x| 1.0 / x.sqrt()).collect();
    let scaled = nalgebra::DMatrix::from_fn(bb.nrows(), bb.ncols(), |r, c| bb[(r, c)] * d[r] * d[c]);
    let scaled_eig = scaled.symmetric_eigen().eigenvalues;
    let sv = ba.clone().svd(false, false).singular_values;
    let ba_norm = ba.norm();
    GramDiagnostics {
        bb_positive_definite: bb.clone().cholesky().is_some() && eig.min() > 0.0,
        bb_condition: eig.max() / eig.min(),
        bb_scaled_condition: scaled_eig.max() / scaled_eig.min(),
        ba_skew_residual: if ba_norm > 0.0 { (&ba + ba.transpose()).norm() / ba_norm } else { 0.0 },
        ba_sigma_ratio: sv.min() / sv.max(),
    }
}

/// Magic bytes of the matrix dump format.
pub const DUMP_MAGIC: [u8; 8] = *b"WMFIEMAT";

/// Writes `m` as the 8-byte magic, `N` as little-endian `u64`, then `N²`
/// row-major entries, each a little-endian `f32` pair (real, imaginary).
pub fn write_matrix_dump(path: impl AsRef<Path>, m: &DenseMatrix<C64>) -> Result<()> {
    let path = path.as_ref();
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    let mut buf = Vec::with_capacity(16 + 8 * m.as_slice().len());
    buf.extend_from_slice(&DUMP_MAGIC);
    buf.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    for z in m.as_slice() {
        buf.extend_from_slice(&(z.re as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_dump(path: impl AsRef<Path>) -> Result<DenseMatrix<C64>> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::InvalidArgument(format!("{}: {msg}", path.display()));
    if buf.len() < 16 || buf[..8] != DUMP_MAGIC {
        return Err(bad("not a matrix dump"));
    }
    let n = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
    if buf.len() != 16 + 8 * n * n {
        return Err(bad("truncated matrix dump"));
    }
    let data = buf[16..]
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..].try_into().unwrap());
            C64::new(re.into(), im.into())
        })
        .collect();
    Ok(DenseMatrix::from_row_major(n, n, data))
}
