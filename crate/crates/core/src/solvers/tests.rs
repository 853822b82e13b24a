use super::*;
use crate::linalg::rel_diff;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Diagonally dominant random matrix.
fn well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix<C64> {
    DenseMatrix::from_fn(n, n, |i, j| {
        let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / n as f64;
        if i == j {
            v + C64::new(2.0, 0.5)
        } else {
            v
        }
    })
}

fn spd(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix<f64> {
    let b = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    DenseMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| b.get(k, i) * b.get(k, j)).sum::<f64>() + if i == j { 0.5 } else { 0.0 }
    })
}

#[test]
fn identity_converges_in_one_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let b = random_vec(&mut rng, 20);
    let rep = gmres(&DenseMatrix::identity(20), &b, 1e-12, 50).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.iterations, 1);
    assert!(rel_diff(&rep.solution, &b) < 1e-15);
}

#[test]
fn gmres_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = well_conditioned(&mut rng, 50);
    let b = random_vec(&mut rng, 50);
    let rep = gmres(&a, &b, 1e-12, 200).unwrap();
    let direct = dense_solve(&a, &b).unwrap();
    assert!(rep.converged);
    assert!(rel_diff(&rep.solution, &direct.solution) < 1e-9);
    assert!(direct.relative_residual < 1e-10);
    let true_res = rel_diff(&a.matvec(&rep.solution), &b);
    assert!(true_res < 1e-11, "{true_res}");
}

#[test]
fn gmres_history_is_monotone_and_reports_failure() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = DenseMatrix::from_fn(60, 60, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let b = random_vec(&mut rng, 60);
    let rep = gmres(&a, &b, 1e-10, 10).unwrap();
    assert!(!rep.converged);
    assert_eq!(rep.iterations, 10);
    assert_eq!(rep.residual_history.len(), 10);
    assert!(rep.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    assert!(matches!(rep.require_converged("gmres"), Err(Error::NotConverged { iterations: 10, .. })));
}

#[test]
fn gmres_zero_rhs_and_bad_input() {
    let a = DenseMatrix::identity(4);
    let rep = gmres(&a, &[ZERO; 4], 1e-6, 10).unwrap();
    assert!(rep.converged && rep.iterations == 0);
    assert!(gmres(&a, &[ZERO; 3], 1e-6, 10).is_err());
    assert!(gmres(&a, &[ZERO; 4], 0.0, 10).is_err());
}

#[test]
fn gmres_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = well_conditioned(&mut rng, 80);
    let b = random_vec(&mut rng, 80);
    let x = gmres(&a, &b, 1e-10, 100).unwrap();
    let y = gmres(&a, &b, 1e-10, 100).unwrap();
    assert_eq!(x.solution, y.solution);
    assert_eq!(x.residual_history, y.residual_history);
}

#[test]
fn pcg_on_diagonal_takes_one_iteration() {
    let d = DenseMatrix::from_fn(10, 10, |i, j| if i == j { 1.0 + i as f64 } else { 0.0 });
    let b: Vec<C64> = (0..10).map(|i| C64::new(i as f64, 1.0)).collect();
    let rep = pcg_diag(&d, &b, 1e-12, 10).unwrap();
    assert_eq!(rep.iterations, 1);
    for (i, x) in rep.solution.iter().enumerate() {
        assert!((x - b[i] / (1.0 + i as f64)).norm() < 1e-14);
    }
}

#[test]
fn pcg_agrees_with_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = spd(&mut rng, 30);
    let b = random_vec(&mut rng, 30);
    let tol = 1e-10;
    let rep = pcg_diag(&a, &b, tol, 500).unwrap();
    assert!(rep.converged);
    let direct = dense_solve(&a.to_complex(), &b).unwrap();
    // Error is bounded by cond · residual; the spec's 10·tol band is relative
    // to the solution scale of this well-scaled system.
    assert!(rel_diff(&rep.solution, &direct.solution) < 10.0 * tol * direct.condition_estimate.max(1.0));
    assert!(rel_diff(&a.matvec_c(&rep.solution), &b) <= tol);
}

#[test]
fn pcg_rejects_indefinite() {
    let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
    let b = vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)];
    assert!(matches!(pcg_diag(&a, &b, 1e-10, 10), Err(Error::NotPositiveDefinite(_))));
    let neg = DenseMatrix::from_row_major(2, 2, vec![-1.0, 0.0, 0.0, 1.0]);
    assert!(matches!(pcg_diag(&neg, &b, 1e-10, 10), Err(Error::NotPositiveDefinite(_))));
}

#[test]
fn pcg_on_csr_matches_dense() {
    let rows = vec![
        vec![(0, 4.0), (1, -1.0)],
        vec![(0, -1.0), (1, 4.0), (2, -1.0)],
        vec![(1, -1.0), (2, 4.0)],
    ];
    let csr = CsrMatrix::from_rows(3, rows);
    let b = vec![C64::new(1.0, 2.0), C64::new(0.0, -1.0), C64::new(3.0, 0.0)];
    let x = pcg_diag(&csr, &b, 1e-14, 10).unwrap();
    let y = pcg_diag(&csr.to_dense(), &b, 1e-14, 10).unwrap();
    assert!(rel_diff(&x.solution, &y.solution) < 1e-14);
}

#[test]
fn dense_identity_and_singular() {
    let b = vec![C64::new(1.0, -2.0), C64::new(0.5, 0.0)];
    let s = dense_solve(&DenseMatrix::identity(2), &b).unwrap();
    assert_eq!(s.solution, b);
    assert!((s.condition_estimate - 1.0).abs() < 1e-12);
    let sing = DenseMatrix::from_row_major(2, 2, vec![C64::from(1.0), C64::from(2.0), C64::from(2.0), C64::from(4.0)]);
    assert!(matches!(dense_solve(&sing, &b), Err(Error::Singular)));
}

#[test]
fn condition_estimate_matches_exact_on_small_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in [3, 8, 20] {
        let a = DenseMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let b = random_vec(&mut rng, n);
        let est = dense_solve(&a, &b).unwrap().condition_estimate;
        let inv = a.to_nalgebra().try_inverse().unwrap();
        let one = |m: &nalgebra::DMatrix<C64>| (0..n).map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
        let exact = one(&a.to_nalgebra()) * one(&inv);
        // Hager's estimate is a lower bound and usually within a factor 3.
        assert!(est <= exact * (1.0 + 1e-10) && est >= exact / 3.0, "n={n}: {est} vs {exact}");
    }
}

#[test]
fn near_singular_matrix_is_flagged() {
    let eps = 1e-11;
    let a = DenseMatrix::from_row_major(2, 2, vec![C64::from(1.0), C64::from(1.0), C64::from(1.0), C64::from(1.0 + eps)]);
    let s = dense_solve(&a, &[C64::from(1.0), C64::from(0.0)]).unwrap();
    assert!(s.ill_conditioned());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gmres_solves_random_dominant_systems(seed in any::<u64>(), n in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = well_conditioned(&mut rng, n);
        let b = random_vec(&mut rng, n);
        let rep = gmres(&a, &b, 1e-10, n).unwrap();
        prop_assert!(rep.converged);
        prop_assert!(rel_diff(&a.matvec(&rep.solution), &b) < 1e-9);
    }

    #[test]
    fn pcg_solves_random_spd_systems(seed in any::<u64>(), n in 1usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = spd(&mut rng, n);
        let b = random_vec(&mut rng, n);
        let rep = pcg_diag(&a, &b, 1e-9, 10 * n + 10).unwrap();
        prop_assert!(rep.converged);
        prop_assert!(rel_diff(&a.matvec_c(&rep.solution), &b) <= 1e-9);
    }
}
