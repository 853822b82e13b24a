//! Solvable systems built from an [`OperatorSet`].
//!
//! With `T = B + C/k²`, `M = −(G_bb/2 + Kα)` and the weak-form transform
//! `W_γ = γI + (1−γ)R`, `R = −G_bb⁻¹ G_ba G_bb⁻¹ G_ba`:
//!
//! | kind   | operator                                               | rhs              |
//! |--------|--------------------------------------------------------|------------------|
//! | EFIE   | `jkZ0 T`                                               | `e`              |
//! | MFIE   | `M`                                                    | `h`              |
//! | WMFIE1 | `−(G_bb W_γ / 2 + Kα)`                                 | `h`              |
//! | WMFIE2 | `M W_γ`                                                | `h`              |
//! | WMFIE3 | `[γI + (γ−1) G_ba G_bb⁻¹ G_ba G_bb⁻¹] M`               | `h`              |
//! | CFIE   | `α jkZ0 T + (1−α) Z0 M`                                | `αe + (1−α)Z0 h` |
//! | WCFIE  | as CFIE with the WMFIE1 operator in place of `M`       | `αe + (1−α)Z0 h` |
//! | CSIE   | `jkZ0 T + (−G_ba/2 + Kβ) β Z0 G_bb⁻¹ G_ba`             | `e`              |
//!
//! Every `G_bb⁻¹` is applied inside the matrix-vector product, by Jacobi
//! CG or, for small systems, a dense Cholesky factor.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excitation::ExcitationVectors;
use crate::linalg::{axpy, CsrMatrix, DenseMatrix, C64};
use crate::operators::{add_csr, OperatorSet};
use crate::solvers::{pcg_diag, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FormulationKind {
    Efie,
    Mfie,
    Wmfie1,
    Wmfie2,
    Wmfie3,
    Cfie,
    Wcfie,
    Csie,
}

impl FormulationKind {
    pub const ALL: [FormulationKind; 8] = [
        FormulationKind::Efie,
        FormulationKind::Mfie,
        FormulationKind::Wmfie1,
        FormulationKind::Wmfie2,
        FormulationKind::Wmfie3,
        FormulationKind::Cfie,
        FormulationKind::Wcfie,
        FormulationKind::Csie,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulationKind::Efie => "EFIE",
            FormulationKind::Mfie => "MFIE",
            FormulationKind::Wmfie1 => "WMFIE1",
            FormulationKind::Wmfie2 => "WMFIE2",
            FormulationKind::Wmfie3 => "WMFIE3",
            FormulationKind::Cfie => "CFIE",
            FormulationKind::Wcfie => "WCFIE",
            FormulationKind::Csie => "CSIE",
        }
    }

    /// Kinds that apply the weak-form transform and need `γ > 0`.
    pub fn uses_gamma(self) -> bool {
        matches!(
            self,
            FormulationKind::Wmfie1 | FormulationKind::Wmfie2 | FormulationKind::Wmfie3 | FormulationKind::Wcfie
        )
    }
}

impl fmt::Display for FormulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for FormulationKind {
    type Err = Error;

    /// Case-insensitive; dashes are ignored and a bare `WMFIE` means WMFIE1.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_uppercase();
        if key == "WMFIE" {
            return Ok(FormulationKind::Wmfie1);
        }
        FormulationKind::ALL.into_iter().find(|k| k.name() == key).ok_or_else(|| {
            let names: Vec<&str> = FormulationKind::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown formulation '{s}' (valid: {})", names.join(", ")))
        })
    }
}

impl TryFrom<String> for FormulationKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FormulationKind> for String {
    fn from(k: FormulationKind) -> String {
        k.name().to_string()
    }
}

/// How `G_bb⁻¹` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GramSolve {
    /// Jacobi-preconditioned CG to `inner_tol` on every application.
    #[default]
    Iterative,
    /// Dense Cholesky factor, for `N ≤ DENSE_GRAM_CAP`.
    Dense,
}

pub const DENSE_GRAM_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormulationConfig {
    pub kind: FormulationKind,
    pub gamma: f64,
    pub alpha_cfie: f64,
    pub beta_cs: f64,
    pub inner_tol: f64,
    pub inner_maxit: usize,
    pub gram_solve: GramSolve,
}

impl Default for FormulationConfig {
    fn default() -> Self {
        Self {
            kind: FormulationKind::Efie,
            gamma: 0.5,
            alpha_cfie: 0.5,
            beta_cs: 10.0,
            inner_tol: 1e-10,
            inner_maxit: 1000,
            gram_solve: GramSolve::Iterative,
        }
    }
}

impl FormulationConfig {
    pub fn new(kind: FormulationKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if self.kind.uses_gamma() && self.gamma <= 0.0 {
            return bad(format!(
                "{} needs gamma > 0; gamma = 0 leaves the null space of G_ba in the operator",
                self.kind
            ));
        }
        if !(self.alpha_cfie > 0.0 && self.alpha_cfie < 1.0) {
            return bad(format!("alpha_cfie must lie in (0, 1), got {}", self.alpha_cfie));
        }
        if !(self.beta_cs > 0.0) || !self.beta_cs.is_finite() {
            return bad(format!("beta_cs must be positive, got {}", self.beta_cs));
        }
        if !(self.inner_tol > 0.0 && self.inner_tol < 1.0) {
            return bad(format!("inner_tol must lie in (0, 1), got {}", self.inner_tol));
        }
        if self.inner_maxit == 0 {
            return bad("inner_maxit must be positive".into());
        }
        Ok(())
    }
}

/// Counters of inner Gram solves; updated atomically so a shared operator
/// can be applied from several threads.
#[derive(Debug, Default)]
pub struct InnerTelemetry {
    calls: AtomicUsize,
    iterations: AtomicUsize,
    max_iterations: AtomicUsize,
}

/// Snapshot of [`InnerTelemetry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InnerStats {
    pub calls: usize,
    pub iterations: usize,
    pub max_iterations: usize,
}

impl InnerStats {
    pub fn mean_iterations(&self) -> f64 {
        if self.calls == 0 {
            0.0
        } else {
            self.iterations as f64 / self.calls as f64
        }
    }
}

impl InnerTelemetry {
    fn record(&self, iterations: usize) {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.iterations.fetch_add(iterations, Ordering::Relaxed);
        self.max_iterations.fetch_max(iterations, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> InnerStats {
        InnerStats {
            calls: self.calls.load(Ordering::Relaxed),
            iterations: self.iterations.load(Ordering::Relaxed),
            max_iterations: self.max_iterations.load(Ordering::Relaxed),
        }
    }
}

/// Applies `G_bb⁻¹` to complex vectors.
pub struct GramInverse<'a> {
    g: &'a CsrMatrix,
    factor: Option<Cholesky<f64, Dyn>>,
    tol: f64,
    maxit: usize,
    telemetry: InnerTelemetry,
}

impl<'a> GramInverse<'a> {
    pub fn new(g: &'a CsrMatrix, mode: GramSolve, tol: f64, maxit: usize) -> Result<Self> {
        let factor = match mode {
            GramSolve::Iterative => None,
            GramSolve::Dense => {
                if g.dim() > DENSE_GRAM_CAP {
                    return Err(Error::InvalidArgument(format!(
                        "dense Gram factorisation limited to N <= {DENSE_GRAM_CAP}, got {}",
                        g.dim()
                    )));
                }
                let chol = g.to_dense().to_nalgebra().cholesky().ok_or(Error::NotPositiveDefinite(f64::NAN))?;
                Some(chol)
            }
        };
        Ok(Self {
            g,
            factor,
            tol,
            maxit,
            telemetry: InnerTelemetry::default(),
        })
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        match &self.factor {
            Some(chol) => {
                let n = b.len();
                let re = chol.solve(&DMatrix::from_iterator(n, 1, b.iter().map(|z| z.re)));
                let im = chol.solve(&DMatrix::from_iterator(n, 1, b.iter().map(|z| z.im)));
                self.telemetry.record(0);
                Ok(re.iter().zip(im.iter()).map(|(r, i)| C64::new(*r, *i)).collect())
            }
            None => {
                let rep = pcg_diag(self.g, b, self.tol, self.maxit)?;
                self.telemetry.record(rep.iterations);
                Ok(rep.require_converged("Gram CG")?.solution)
            }
        }
    }

    pub fn stats(&self) -> InnerStats {
        self.telemetry.snapshot()
    }
}

/// `W_γ x = γx + (1−γ) R x`; `γ = 1` returns `x` without any inner solve.
pub fn apply_w(ops: &OperatorSet, gamma: f64, x: &[C64], inv: &GramInverse) -> Result<Vec<C64>> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    if gamma == 1.0 {
        return Ok(x.to_vec());
    }
    let rx = apply_r(ops, x, inv)?;
    Ok(x.iter().zip(&rx).map(|(a, b)| a * gamma + b * (1.0 - gamma)).collect())
}

/// `R x = −G_bb⁻¹ G_ba G_bb⁻¹ G_ba x`.
pub fn apply_r(ops: &OperatorSet, x: &[C64], inv: &GramInverse) -> Result<Vec<C64>> {
    let t = inv.solve(&ops.g_ba.matvec(x))?;
    let u = inv.solve(&ops.g_ba.matvec(&t))?;
    Ok(u.iter().map(|v| -v).collect())
}

enum Apply {
    /// `A x`.
    Dense(DenseMatrix<C64>),
    /// `A x + s (−γ/2 G_bb x + (1−γ)/2 G_ba G_bb⁻¹ G_ba x)`.
    WeakIdentity { a: DenseMatrix<C64>, scale: f64 },
    /// `M W_γ x`.
    RightTransform(DenseMatrix<C64>),
    /// `[γI + (γ−1) G_ba G_bb⁻¹ G_ba G_bb⁻¹] M x`.
    LeftTransform(DenseMatrix<C64>),
    /// `A x + (−G_ba/2 + Kβ)(β Z0 G_bb⁻¹ G_ba x)`.
    CombinedSource { a: DenseMatrix<C64>, beta: f64 },
}

/// A formulation as a linear operator with its right-hand side.
pub struct FormulationOperator<'a> {
    ops: &'a OperatorSet,
    config: FormulationConfig,
    rhs: Vec<C64>,
    inv: GramInverse<'a>,
    apply: Apply,
}

impl<'a> FormulationOperator<'a> {
    pub fn new(ops: &'a OperatorSet, exc: &ExcitationVectors, config: &FormulationConfig) -> Result<Self> {
        config.validate()?;
        let n = ops.len();
        for v in [&exc.e, &exc.h] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        let inv = GramInverse::new(&ops.g_bb, config.gram_solve, config.inner_tol, config.inner_maxit)?;
        let (alpha, z0) = (config.alpha_cfie, ops.z0);
        let neg_k_alpha = || {
            let mut a = ops.k_alpha.clone();
            a.scale(C64::from(-1.0));
            a
        };
        let combined_rhs = || -> Vec<C64> { exc.e.iter().zip(&exc.h).map(|(e, h)| e * alpha + h * ((1.0 - alpha) * z0)).collect() };
        let (apply, rhs) = match config.kind {
            FormulationKind::Efie => (Apply::Dense(ops.efie_matrix()), exc.e.clone()),
            FormulationKind::Mfie => (Apply::Dense(ops.mfie_matrix()), exc.h.clone()),
            FormulationKind::Wmfie1 => (
                Apply::WeakIdentity {
                    a: neg_k_alpha(),
                    scale: 1.0,
                },
                exc.h.clone(),
            ),
            FormulationKind::Wmfie2 => (Apply::RightTransform(ops.mfie_matrix()), exc.h.clone()),
            FormulationKind::Wmfie3 => (Apply::LeftTransform(ops.mfie_matrix()), exc.h.clone()),
            FormulationKind::Cfie => {
                let mut a = ops.efie_matrix();
                a.scale(C64::from(alpha));
                a.add_scaled(C64::from((1.0 - alpha) * z0), &ops.mfie_matrix());
                (Apply::Dense(a), combined_rhs())
            }
            FormulationKind::Wcfie => {
                let mut a = ops.efie_matrix();
                a.scale(C64::from(alpha));
                a.add_scaled(C64::from(-(1.0 - alpha) * z0), &ops.k_alpha);
                (
                    Apply::WeakIdentity {
                        a,
                        scale: (1.0 - alpha) * z0,
                    },
                    combined_rhs(),
                )
            }
            FormulationKind::Csie => (
                Apply::CombinedSource {
                    a: ops.efie_matrix(),
                    beta: config.beta_cs,
                },
                exc.e.clone(),
            ),
        };
        Ok(Self {
            ops,
            config: *config,
            rhs,
            inv,
            apply,
        })
    }

    pub fn kind(&self) -> FormulationKind {
        self.config.kind
    }

    pub fn config(&self) -> &FormulationConfig {
        &self.config
    }

    pub fn frequency(&self) -> f64 {
        self.ops.frequency
    }

    pub fn rhs(&self) -> &[C64] {
        &self.rhs
    }

    pub fn inner_stats(&self) -> InnerStats {
        self.inv.stats()
    }

    pub fn gram_inverse(&self) -> &GramInverse<'a> {
        &self.inv
    }

    /// Magnetic coefficients `v = β Z0 G_bb⁻¹ G_ba i` of a CSIE solution;
    /// zero for the Love-current formulations.
    pub fn magnetic_coefficients(&self, i: &[C64]) -> Result<Vec<C64>> {
        match &self.apply {
            Apply::CombinedSource { beta, .. } => {
                let v = self.inv.solve(&self.ops.g_ba.matvec(i))?;
                Ok(v.iter().map(|z| z * (beta * self.ops.z0)).collect())
            }
            _ => Ok(vec![C64::from(0.0); i.len()]),
        }
    }

    /// `−γ/2 G_bb x + (1−γ)/2 G_ba G_bb⁻¹ G_ba x`, i.e. `−G_bb W_γ x / 2`.
    fn weak_identity(&self, x: &[C64]) -> Result<Vec<C64>> {
        let gamma = self.config.gamma;
        let mut out: Vec<C64> = self.ops.g_bb.matvec(x).iter().map(|v| v * (-0.5 * gamma)).collect();
        if gamma < 1.0 {
            let t = self.inv.solve(&self.ops.g_ba.matvec(x))?;
            axpy(C64::from(0.5 * (1.0 - gamma)), &self.ops.g_ba.matvec(&t), &mut out);
        }
        Ok(out)
    }
}

impl LinearOperator for FormulationOperator<'_> {
    fn dim(&self) -> usize {
        self.ops.len()
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        let n = self.ops.len();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let gamma = self.config.gamma;
        match &self.apply {
            Apply::Dense(a) => Ok(a.matvec(x)),
            Apply::WeakIdentity { a, scale } => {
                let mut y = a.matvec(x);
                axpy(C64::from(*scale), &self.weak_identity(x)?, &mut y);
                Ok(y)
            }
            Apply::RightTransform(m) => Ok(m.matvec(&apply_w(self.ops, gamma, x, &self.inv)?)),
            Apply::LeftTransform(m) => {
                let y = m.matvec(x);
                if gamma == 1.0 {
                    return Ok(y);
                }
                let z = self.inv.solve(&y)?;
                let w = self.inv.solve(&self.ops.g_ba.matvec(&z))?;
                let mut out: Vec<C64> = y.iter().map(|v| v * gamma).collect();
                axpy(C64::from(gamma - 1.0), &self.ops.g_ba.matvec(&w), &mut out);
                Ok(out)
            }
            Apply::CombinedSource { a, beta } => {
                let mut y = a.matvec(x);
                let v: Vec<C64> = self
                    .inv
                    .solve(&self.ops.g_ba.matvec(x))?
                    .iter()
                    .map(|z| z * (beta * self.ops.z0))
                    .collect();
                self.ops.k_beta.matvec_acc(C64::from(1.0), &v, &mut y);
                axpy(C64::from(-0.5), &self.ops.g_ba.matvec(&v), &mut y);
                Ok(y)
            }
        }
    }
}

pub fn make_formulation<'a>(ops: &'a OperatorSet, exc: &ExcitationVectors, config: &FormulationConfig) -> Result<FormulationOperator<'a>> {
    FormulationOperator::new(ops, exc, config)
}

pub fn make_efie<'a>(ops: &'a OperatorSet, exc: &ExcitationVectors) -> Result<FormulationOperator<'a>> {
    FormulationOperator::new(ops, exc, &FormulationConfig::new(FormulationKind::Efie))
}

pub fn make_mfie<'a>(ops: &'a OperatorSet, exc: &ExcitationVectors) -> Result<FormulationOperator<'a>> {
    FormulationOperator::new(ops, exc, &FormulationConfig::new(FormulationKind::Mfie))
}

pub fn make_wmfie<'a>(ops: &'a OperatorSet, exc: &ExcitationVectors, variant: u8, gamma: f64) -> Result<FormulationOperator<'a>> {
    let kind = match variant {
        1 => FormulationKind::Wmfie1,
        2 => FormulationKind::Wmfie2,
        3 => FormulationKind::Wmfie3,
        _ => return Err(Error::InvalidArgument(format!("WMFIE variant must be 1, 2 or 3, got {variant}"))),
    };
    FormulationOperator::new(
        ops,
        exc,
        &FormulationConfig {
            gamma,
            ..FormulationConfig::new(kind)
        },
    )
}

pub fn make_cfie<'a>(ops: &'a OperatorSet, exc: &ExcitationVectors, alpha_cfie: f64, weak: bool, gamma: f64) -> Result<FormulationOperator<'a>> {
    let kind = if weak { FormulationKind::Wcfie } else { FormulationKind::Cfie };
    FormulationOperator::new(
        ops,
        exc,
        &FormulationConfig {
            alpha_cfie,
            gamma,
            ..FormulationConfig::new(kind)
        },
    )
}

pub fn make_csie<'a>(ops: &'a OperatorSet, exc: &ExcitationVectors, beta_cs: f64) -> Result<FormulationOperator<'a>> {
    FormulationOperator::new(
        ops,
        exc,
        &FormulationConfig {
            beta_cs,
            ..FormulationConfig::new(FormulationKind::Csie)
        },
    )
}

/// Explicit matrices used as oracles for the matrix-free operators.
pub mod dense {
    use super::*;

    /// Dense `G_bb⁻¹` via Cholesky.
    pub fn gram_inverse(ops: &OperatorSet) -> Result<DenseMatrix<C64>> {
        let chol = ops.g_bb.to_dense().to_nalgebra().cholesky().ok_or(Error::NotPositiveDefinite(f64::NAN))?;
        Ok(DenseMatrix::from_nalgebra(&chol.inverse().map(C64::from)))
    }

    fn real(m: &CsrMatrix) -> DenseMatrix<C64> {
        m.to_dense().to_complex()
    }

    /// `−(γ/2 G_bb − (1−γ)/2 G_ba G_bb⁻¹ G_ba + Kα)`; at `γ = 1/2` this is
    /// `−(G_bb/4 − G_ba G_bb⁻¹ G_ba/4 + Kα)`.
    pub fn wmfie_final(ops: &OperatorSet, gamma: f64) -> Result<DenseMatrix<C64>> {
        let gba = real(&ops.g_ba);
        let mut out = gba.matmul(&gram_inverse(ops)?).matmul(&gba);
        out.scale(C64::from(0.5 * (1.0 - gamma)));
        add_csr(&mut out, -0.5 * gamma, &ops.g_bb);
        out.add_scaled(C64::from(-1.0), &ops.k_alpha);
        Ok(out)
    }

    /// `W_γ` as a dense matrix.
    pub fn w_matrix(ops: &OperatorSet, gamma: f64) -> Result<DenseMatrix<C64>> {
        let inv = gram_inverse(ops)?;
        let gba = real(&ops.g_ba);
        let r = inv.matmul(&gba).matmul(&inv).matmul(&gba);
        let mut out = DenseMatrix::identity(ops.len());
        out.scale(C64::from(gamma));
        out.add_scaled(C64::from(gamma - 1.0), &r);
        Ok(out)
    }

    /// `G_bb W_γ G_bb⁻¹ M`, the second form of the WMFIE-3 operator.
    pub fn wmfie3_alternative(ops: &OperatorSet, gamma: f64) -> Result<DenseMatrix<C64>> {
        let gbb = real(&ops.g_bb);
        Ok(gbb.matmul(&w_matrix(ops, gamma)?).matmul(&gram_inverse(ops)?).matmul(&ops.mfie_matrix()))
    }

    /// The CSIE before eliminating `v`:
    /// `[jkZ0 T, −G_ba/2 + Kβ; β Z0 G_ba, −G_bb] [i; v] = [e; 0]`.
    pub fn csie_block(ops: &OperatorSet, beta_cs: f64, e: &[C64]) -> (DenseMatrix<C64>, Vec<C64>) {
        let n = ops.len();
        let t = ops.efie_matrix();
        let mut a = DenseMatrix::zeros(2 * n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                a.set(r, c, t.get(r, c));
                a.set(r, n + c, ops.k_beta.get(r, c) - 0.5 * ops.g_ba.get(r, c));
                a.set(n + r, c, C64::from(beta_cs * ops.z0 * ops.g_ba.get(r, c)));
                a.set(n + r, n + c, C64::from(-ops.g_bb.get(r, c)));
            }
        }
        let mut rhs = e.to_vec();
        rhs.resize(2 * n, C64::from(0.0));
        (a, rhs)
    }

    /// Any operator as a dense matrix, column by column.
    pub fn materialize(op: &dyn LinearOperator) -> Result<DenseMatrix<C64>> {
        let n = op.dim();
        let mut out = DenseMatrix::zeros(n, n);
        let mut e = vec![C64::from(0.0); n];
        for c in 0..n {
            e[c] = C64::from(1.0);
            let col = op.apply(&e)?;
            e[c] = C64::from(0.0);
            for (r, v) in col.into_iter().enumerate() {
                out.set(r, c, v);
            }
        }
        Ok(out)
    }
}
