//! Krylov and direct solvers.
//!
//! GMRES is unrestarted (full Krylov basis) with modified Gram-Schmidt and
//! complex Givens rotations, starting from a zero guess. CG is Jacobi
//! preconditioned and works on real SPD matrices with complex right-hand
//! sides.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{axpy, cdot, norm2, CsrMatrix, DenseMatrix, C64, ZERO};

/// A square linear map `x ↦ A x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>>;
}

impl LinearOperator for DenseMatrix<C64> {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(self.cols(), x.len())?;
        Ok(self.matvec(x))
    }
}

/// Real symmetric matrices usable by [`pcg_diag`].
pub trait SymmetricMatrix: Sync {
    fn dim(&self) -> usize;
    fn matvec_c(&self, x: &[C64]) -> Vec<C64>;
    fn diag(&self) -> Vec<f64>;
}

impl SymmetricMatrix for CsrMatrix {
    fn dim(&self) -> usize {
        CsrMatrix::dim(self)
    }

    fn matvec_c(&self, x: &[C64]) -> Vec<C64> {
        self.matvec(x)
    }

    fn diag(&self) -> Vec<f64> {
        self.diagonal()
    }
}

impl SymmetricMatrix for DenseMatrix<f64> {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn matvec_c(&self, x: &[C64]) -> Vec<C64> {
        (0..self.rows())
            .map(|r| self.row(r).iter().zip(x).fold(ZERO, |acc, (a, v)| acc + v * *a))
            .collect()
    }

    fn diag(&self) -> Vec<f64> {
        (0..self.rows()).map(|i| self.get(i, i)).collect()
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<C64>,
    pub iterations: usize,
    /// Relative residual after each iteration.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }

    /// Turns a non-converged report into [`Error::NotConverged`].
    pub fn require_converged(self, solver: &'static str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                solver,
                iterations: self.iterations,
                residual: self.final_residual(),
            })
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {tol}")))
    }
}

/// Complex Givens rotation `(c, s)` zeroing `b` in `[a; b]`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

/// Unrestarted GMRES. Returns `converged = false` with the current iterate
/// when `maxit` is reached.
pub fn gmres(op: &dyn LinearOperator, rhs: &[C64], tol: f64, maxit: usize) -> Result<SolveReport> {
    let start = Instant::now();
    let n = op.dim();
    check_len(n, rhs.len())?;
    check_tol(tol)?;
    let beta = norm2(rhs);
    if beta == 0.0 {
        return Ok(SolveReport {
            solution: vec![ZERO; n],
            iterations: 0,
            residual_history: Vec::new(),
            converged: true,
            wall_time: start.elapsed(),
        });
    }
    let mut basis: Vec<Vec<C64>> = vec![rhs.iter().map(|v| v / beta).collect()];
    // Columns of the rotated Hessenberg matrix, i.e. of R.
    let mut r_cols: Vec<Vec<C64>> = Vec::new();
    let mut rot: Vec<(f64, C64)> = Vec::new();
    let mut g = vec![C64::from(beta)];
    let mut history = Vec::new();
    let mut converged = false;
    let maxit = maxit.min(n);
    for j in 0..maxit {
        let mut w = op.apply(&basis[j])?;
        let mut h = Vec::with_capacity(j + 2);
        for v in &basis {
            let hij = cdot(v, &w);
            axpy(-hij, v, &mut w);
            h.push(hij);
        }
        let hn = norm2(&w);
        h.push(C64::from(hn));
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, b) = (h[i], h[i + 1]);
            h[i] = a * c + s * b;
            h[i + 1] = -s.conj() * a + b * c;
        }
        let (c, s) = givens(h[j], h[j + 1]);
        h[j] = h[j] * c + s * h[j + 1];
        h.truncate(j + 1);
        rot.push((c, s));
        let gj = g[j];
        g[j] = gj * c;
        g.push(-s.conj() * gj);
        r_cols.push(h);
        let res = g[j + 1].norm() / beta;
        history.push(res);
        if res <= tol || hn <= 1e-14 * beta {
            converged = res <= tol || hn <= 1e-14 * beta;
            break;
        }
        basis.push(w.iter().map(|v| v / hn).collect());
    }
    let m = r_cols.len();
    let mut y = vec![ZERO; m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for k in i + 1..m {
            acc -= r_cols[k][i] * y[k];
        }
        y[i] = acc / r_cols[i][i];
    }
    let mut x = vec![ZERO; n];
    for (yi, v) in y.iter().zip(&basis) {
        axpy(*yi, v, &mut x);
    }
    Ok(SolveReport {
        solution: x,
        iterations: m,
        residual_history: history,
        converged,
        wall_time: start.elapsed(),
    })
}

/// Jacobi-preconditioned CG for a real SPD matrix. A non-positive curvature
/// `pᴴAp` is reported as [`Error::NotPositiveDefinite`].
pub fn pcg_diag(a: &dyn SymmetricMatrix, rhs: &[C64], tol: f64, maxit: usize) -> Result<SolveReport> {
    let start = Instant::now();
    let n = a.dim();
    check_len(n, rhs.len())?;
    check_tol(tol)?;
    let inv_diag: Vec<f64> = a
        .diag()
        .iter()
        .map(|&d| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::NotPositiveDefinite(d))
            }
        })
        .collect::<Result<_>>()?;
    let bnorm = norm2(rhs);
    let mut x = vec![ZERO; n];
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return Ok(SolveReport {
            solution: x,
            iterations: 0,
            residual_history: history,
            converged: true,
            wall_time: start.elapsed(),
        });
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<C64> = r.iter().zip(&inv_diag).map(|(v, d)| v * d).collect();
    let mut p = z.clone();
    let mut rz = cdot(&r, &z).re;
    let mut converged = false;
    for _ in 0..maxit {
        let ap = a.matvec_c(&p);
        let curv = cdot(&p, &ap).re;
        if !(curv > 0.0) {
            return Err(Error::NotPositiveDefinite(curv));
        }
        let alpha = rz / curv;
        axpy(C64::from(alpha), &p, &mut x);
        axpy(C64::from(-alpha), &ap, &mut r);
        let res = norm2(&r) / bnorm;
        history.push(res);
        if res <= tol {
            converged = true;
            break;
        }
        z = r.iter().zip(&inv_diag).map(|(v, d)| v * d).collect();
        let rz_new = cdot(&r, &z).re;
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + *pi * beta;
        }
    }
    Ok(SolveReport {
        iterations: history.len(),
        solution: x,
        residual_history: history,
        converged,
        wall_time: start.elapsed(),
    })
}

/// Largest system [`dense_solve`] accepts.
pub const DENSE_CAP: usize = 12_000;

/// Condition estimates above this are flagged as ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub solution: Vec<C64>,
    /// `‖A‖₁ · est(‖A⁻¹‖₁)`, a lower bound on the 1-norm condition number.
    pub condition_estimate: f64,
    pub relative_residual: f64,
}

impl DenseSolution {
    pub fn ill_conditioned(&self) -> bool {
        self.condition_estimate > ILL_CONDITIONED
    }
}

/// LU with partial pivoting plus a Hager-Higham estimate of `‖A⁻¹‖₁`.
pub fn dense_solve(a: &DenseMatrix<C64>, rhs: &[C64]) -> Result<DenseSolution> {
    let n = a.rows();
    check_len(n, a.cols())?;
    check_len(n, rhs.len())?;
    if n > DENSE_CAP {
        return Err(Error::InvalidArgument(format!(
            "dense solve limited to N <= {DENSE_CAP}, got {n}"
        )));
    }
    let lu = a.to_nalgebra().lu();
    let solve = |b: &[C64]| lu.solve(&DVector::from_column_slice(b)).map(|v| v.as_slice().to_vec());
    let x = solve(rhs).ok_or(Error::Singular)?;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Singular);
    }
    // Aᴴ = Uᴴ Lᴴ P for P A = L U.
    let (l, u) = (lu.l(), lu.u());
    let p = lu.p();
    let solve_adj = |b: &[C64]| -> Option<Vec<C64>> {
        let mut v: DMatrix<C64> = DMatrix::from_column_slice(n, 1, b);
        if !u.ad_solve_upper_triangular_mut(&mut v) || !l.ad_solve_lower_triangular_mut(&mut v) {
            return None;
        }
        p.inv_permute_rows(&mut v);
        Some(v.as_slice().to_vec())
    };
    let inv_norm = hager(n, &|b| solve(b), &solve_adj).unwrap_or(f64::INFINITY);
    let a_norm = (0..n)
        .map(|c| (0..n).map(|r| a.get(r, c).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let ax = a.matvec(&x);
    let res: Vec<C64> = ax.iter().zip(rhs).map(|(p, q)| p - q).collect();
    let bn = norm2(rhs);
    let relative_residual = if bn > 0.0 { norm2(&res) / bn } else { norm2(&res) };
    let condition_estimate = a_norm * inv_norm;
    if condition_estimate > ILL_CONDITIONED {
        log::warn!("dense system is ill-conditioned (1-norm condition estimate {condition_estimate:e})");
    }
    Ok(DenseSolution {
        solution: x,
        condition_estimate,
        relative_residual,
    })
}

/// Estimate of `‖A⁻¹‖₁` from solves with `A` and `Aᴴ`.
fn hager(
    n: usize,
    solve: &dyn Fn(&[C64]) -> Option<Vec<C64>>,
    solve_adj: &dyn Fn(&[C64]) -> Option<Vec<C64>>,
) -> Option<f64> {
    let one_norm = |v: &[C64]| v.iter().map(|z| z.norm()).sum::<f64>();
    let mut x = vec![C64::from(1.0 / n as f64); n];
    let mut est = 0.0;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = solve(&x)?;
        est = one_norm(&y);
        let xi: Vec<C64> = y
            .iter()
            .map(|v| if v.norm() > 0.0 { v / v.norm() } else { C64::from(1.0) })
            .collect();
        let z = solve_adj(&xi)?;
        let (j, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if zmax <= cdot(&z, &x).re || j == last_j {
            break;
        }
        last_j = j;
        x = vec![ZERO; n];
        x[j] = C64::from(1.0);
    }
    // Higham's alternating vector guards against unlucky starting points.
    let alt: Vec<C64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            C64::from(s * (1.0 + i as f64 / (n.max(2) - 1) as f64))
        })
        .collect();
    let alt_est = 2.0 * one_norm(&solve(&alt)?) / (3.0 * n as f64);
    Some(est.max(alt_est))
}

#[cfg(test)]
mod tests;
