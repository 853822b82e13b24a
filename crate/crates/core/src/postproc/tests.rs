use super::*;
use crate::mesh::generate_sphere;
use crate::quadrature::QuadConfig;
use crate::rwg::build_rwg_space;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn space() -> RwgSpace {
    build_rwg_space(&generate_sphere(1.0, 0.3).unwrap())
}

fn random_vec(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn norm(v: &CVec3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn cut(values: &[(f64, f64)]) -> FarFieldCut {
    let dirs = cut_plane(0.0, values.len());
    FarFieldCut {
        directions: dirs,
        e_theta: values.iter().map(|v| C64::new(v.0, 0.3 * v.0)).collect(),
        e_phi: values.iter().map(|v| C64::new(0.0, v.1)).collect(),
    }
}

#[test]
fn direction_frame_is_orthonormal() {
    for d in [Direction::new(0.0, 0.0), Direction::new(37.0, 110.0), Direction::new(180.0, -30.0)] {
        let (u, t, p) = (d.unit(), d.theta_hat(), d.phi_hat());
        assert!((u.norm() - 1.0).abs() < 1e-15 && (t.norm() - 1.0).abs() < 1e-15);
        assert!(u.dot(&t).abs() < 1e-15 && u.dot(&p).abs() < 1e-15 && t.dot(&p).abs() < 1e-15);
        assert!((u.cross(&t) - p).norm() < 1e-15);
    }
    let c = cut_planes(&[0.0, 90.0], 181);
    assert_eq!(c.len(), 362);
    assert_eq!(c[180].theta_deg, 180.0);
    assert_eq!(c[181].phi_deg, 90.0);
}

#[test]
fn zero_currents_radiate_nothing() {
    let s = space();
    let z = vec![C64::from(0.0); s.len()];
    let f = far_field(&s, &z, Some(&z), 2.0, &cut_plane(0.0, 19)).unwrap();
    assert!(f.e_theta.iter().chain(&f.e_phi).all(|v| *v == C64::from(0.0)));
    let nf = near_field(&s, &z, None, 2.0, &[Vec3::new(2.0, 0.0, 0.0)], &QuadConfig::default()).unwrap();
    assert_eq!(norm(&nf[0].e) + norm(&nf[0].h), 0.0);
    assert!(far_field(&s, &z[1..], None, 2.0, &[]).is_err());
}

#[test]
fn single_rwg_radiates_like_a_short_dipole() {
    let s = space();
    let mut i = vec![C64::from(0.0); s.len()];
    i[3] = C64::from(1.0);
    let f = s.function(3);
    let mesh = s.mesh();
    // ∫β dS = l (c⁻ − c⁺) with c± the triangle centroids.
    let axis = (mesh.centroid(f.plus) - mesh.centroid(f.minus)).normalize();
    let k = 1e-3;
    let dirs: Vec<Direction> = (0..12).map(|n| Direction::new(7.0 + 14.0 * n as f64, 23.0 * n as f64)).collect();
    let ff = far_field_vectors(&s, &i, None, k, &dirs).unwrap();
    let amp0 = k * Z0 / (4.0 * PI) * f.length * (mesh.centroid(f.plus) - mesh.centroid(f.minus)).norm();
    for (d, v) in dirs.iter().zip(&ff) {
        let sin = d.unit().cross(&axis).norm();
        let want = amp0 * sin;
        assert!((norm(v) - want).abs() < 1e-2 * amp0, "{} vs {want}", norm(v));
    }
}

#[test]
fn magnetic_current_radiation_is_dual() {
    // Same coefficients as magnetic current: F_M = −r̂ × F_J / Z0.
    let s = space();
    let m = random_vec(s.len(), 3);
    let z = vec![C64::from(0.0); s.len()];
    let dirs = cut_plane(45.0, 13);
    let fe = far_field_vectors(&s, &m, None, 2.0, &dirs).unwrap();
    let fm = far_field_vectors(&s, &z, Some(&m), 2.0, &dirs).unwrap();
    for ((d, a), b) in dirs.iter().zip(&fe).zip(&fm) {
        let u = d.unit();
        let want = crate::linalg::cross_rc(&u, a) * C64::from(-1.0 / Z0);
        assert!(norm(&(b - want)) < 1e-12 * norm(a).max(1e-30));
    }
}

#[test]
fn rcs_definition_and_scaling() {
    let c = cut(&[(1.0, 0.5), (0.0, 0.0), (2.0, 0.1)]);
    let r = bistatic_rcs(&c, 1.0).unwrap();
    assert!((r.sigma_theta[0] - 4.0 * PI * 1.09).abs() < 1e-12);
    assert_eq!(r.theta_dbsm()[1], DB_FLOOR);
    assert!((r.phi_dbsm()[0] - 10.0 * (4.0 * PI * 0.25f64).log10()).abs() < 1e-12);
    let r2 = bistatic_rcs(&c.scaled(C64::new(0.0, 3.0)), 3.0).unwrap();
    for (a, b) in r.sigma_theta.iter().zip(&r2.sigma_theta) {
        assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }
    assert!(bistatic_rcs(&c, 0.0).is_err());
    assert!(bistatic_rcs(&c, f64::NAN).is_err());
}

#[test]
fn identical_cuts_report_the_floor() {
    let c = cut(&[(1.0, 0.5), (0.2, 0.3)]);
    let e = relative_error_cut(&c, &c).unwrap();
    assert_eq!(e.max_db, DB_FLOOR);
    assert_eq!(e.avg_db, DB_FLOOR);
    assert_eq!(e.max_linear, 0.0);
}

#[test]
fn scaled_cut_is_sixty_db_down() {
    let c = cut(&[(1.0, 0.5), (0.2, 0.3), (0.7, 0.0)]);
    let e = relative_error_cut(&c.scaled(C64::from(1.0 + 1e-3)), &c).unwrap();
    assert!((e.max_db + 60.0).abs() < 1e-6, "{}", e.max_db);
    assert!(e.max_linear >= e.avg_linear);
    assert!(e.per_direction.iter().all(|(a, b)| *a >= 0.0 && *b >= 0.0));
}

#[test]
fn error_uses_peak_over_both_polarizations() {
    // Peak reference amplitude is |E_φ| = 2 at the second direction.
    let reference = FarFieldCut {
        directions: cut_plane(0.0, 2),
        e_theta: vec![C64::from(1.0), C64::from(0.0)],
        e_phi: vec![C64::from(0.0), C64::from(2.0)],
    };
    let mut cand = reference.clone();
    cand.e_theta[0] = C64::from(1.2);
    let e = relative_error_cut(&cand, &reference).unwrap();
    assert!((e.max_linear - 0.1).abs() < 1e-15);
    assert!((e.avg_linear - 0.025).abs() < 1e-15);
    assert!((e.max_db + 20.0).abs() < 1e-12);
}

#[test]
fn grid_mismatch_is_rejected() {
    let a = cut(&[(1.0, 0.5), (0.2, 0.3)]);
    let mut b = a.clone();
    b.directions[1].phi_deg = 90.0;
    assert!(matches!(relative_error_cut(&a, &b), Err(Error::GridMismatch(_))));
    let c = cut(&[(1.0, 0.5)]);
    assert!(matches!(relative_error_cut(&a, &c), Err(Error::GridMismatch(_))));
}

#[test]
fn current_error_plug_in_values() {
    let r = random_vec(20, 1);
    assert_eq!(current_error(&r, &r).unwrap(), 0.0);
    let twice: Vec<C64> = r.iter().map(|z| z * 2.0).collect();
    assert!((current_error(&twice, &r).unwrap() - 1.0).abs() < 1e-15);
    assert!(current_error(&r[1..], &r).is_err());
    assert!(current_error(&r, &vec![C64::from(0.0); 20]).is_err());
}

#[test]
fn point_triangle_distance_regions() {
    let t = [Vec3::zeros(), Vec3::x(), Vec3::y()];
    assert!((point_triangle_distance(&Vec3::new(0.2, 0.2, 0.5), &t) - 0.5).abs() < 1e-15);
    assert!((point_triangle_distance(&Vec3::new(-1.0, -1.0, 0.0), &t) - 2f64.sqrt()).abs() < 1e-15);
    assert!((point_triangle_distance(&Vec3::new(0.5, -2.0, 0.0), &t) - 2.0).abs() < 1e-15);
    assert!((point_triangle_distance(&Vec3::new(1.0, 1.0, 0.0), &t) - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((point_triangle_distance(&Vec3::new(2.0, 0.0, 0.0), &t) - 1.0).abs() < 1e-15);
    assert!((point_triangle_distance(&Vec3::new(-0.5, 0.5, 0.0), &t) - 0.5).abs() < 1e-15);
}

#[test]
fn near_field_rejects_surface_points() {
    let s = space();
    let i = random_vec(s.len(), 2);
    let on = s.mesh().centroid(5);
    let err = near_field(&s, &i, None, 2.0, &[Vec3::new(3.0, 0.0, 0.0), on], &QuadConfig::default()).unwrap_err();
    assert!(matches!(err, Error::PointTooClose { index: 1, .. }));
}

#[test]
fn near_field_approaches_far_field() {
    let s = space();
    let i = random_vec(s.len(), 4);
    let v = random_vec(s.len(), 5);
    let k = 3.0;
    let u = Direction::new(60.0, 30.0);
    let ff = far_field_vectors(&s, &i, Some(&v), k, &[u]).unwrap()[0];
    let mismatch = |r: f64| {
        let nf = near_field(&s, &i, Some(&v), k, &[u.unit() * r], &QuadConfig::default()).unwrap()[0];
        norm(&(nf.e * C64::from_polar(r, k * r) - ff)) / norm(&ff)
    };
    let (a, b) = (mismatch(200.0), mismatch(2000.0));
    assert!(b < 1e-3, "{a} {b}");
    assert!((a / b - 10.0).abs() < 1.0, "{a} {b}");
}

#[test]
fn near_field_satisfies_faraday_and_ampere() {
    // ∇ × E = −jkZ0 H and ∇ × H = jk/Z0 E off the surface.
    let s = space();
    let i = random_vec(s.len(), 6);
    let v = random_vec(s.len(), 7);
    let k = 2.5;
    let q = QuadConfig::default();
    let r0 = Vec3::new(0.3, 0.2, 0.62);
    let d = 1e-4;
    let at = |p: Vec3| near_field(&s, &i, Some(&v), k, &[p], &q).unwrap()[0];
    let curl = |f: &dyn Fn(NearFieldSample) -> CVec3| {
        let g = |a: Vec3| (f(at(r0 + a * d)) - f(at(r0 - a * d))) / C64::from(2.0 * d);
        let (dx, dy, dz) = (g(Vec3::x()), g(Vec3::y()), g(Vec3::z()));
        CVec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x)
    };
    let c = at(r0);
    let ce = curl(&|n| n.e);
    let ch = curl(&|n| n.h);
    let want_e = c.h * C64::new(0.0, -k * Z0);
    let want_h = c.e * C64::new(0.0, k / Z0);
    assert!(norm(&(ce - want_e)) < 2e-2 * norm(&want_e), "{}", norm(&(ce - want_e)) / norm(&want_e));
    assert!(norm(&(ch - want_h)) < 2e-2 * norm(&want_h), "{}", norm(&(ch - want_h)) / norm(&want_h));
}

#[test]
fn near_field_is_continuous_across_the_near_zone_switch() {
    // Points just inside and outside `near_factor` of a triangle give the
    // same field to quadrature accuracy.
    let s = space();
    let i = random_vec(s.len(), 8);
    let k = 2.0;
    let q = QuadConfig::default();
    let g = s.mesh().centroid(0);
    let n = s.mesh().normal(0);
    let h = s.mesh().max_triangle_edge(0);
    let p = g + n * (q.near_factor * h);
    let a = near_field(&s, &i, None, k, &[p * (1.0 - 1e-9)], &q).unwrap()[0];
    let b = near_field(&s, &i, None, k, &[p * (1.0 + 1e-9)], &q).unwrap()[0];
    assert!(norm(&(a.e - b.e)) < 1e-3 * norm(&a.e));
}

#[test]
fn lf_sweep_validates_frequencies() {
    let s = space();
    let ok = |_f: f64| Ok(vec![C64::from(1.0); s.len()]);
    assert!(lf_divergence_sweep(&s, &[1e6, 1e5], ok).is_err());
    assert!(lf_divergence_sweep(&s, &[1e3, 1e6], ok).is_err());
    let fs = log_frequencies(1e6, 1e3, 2);
    assert_eq!(fs.len(), 7);
    assert!((fs[6] - 1e3).abs() < 1e-6);
    let out = lf_divergence_sweep(&s, &fs, ok).unwrap();
    assert_eq!(out.len(), 7);
    assert!((out[0].i_re - (s.len() as f64).sqrt()).abs() < 1e-12);
    assert_eq!(out[0].i_im, 0.0);
    let bad = |_f: f64| Err(Error::Singular);
    assert!(lf_divergence_sweep(&s, &fs, bad).is_err());
}

#[test]
fn far_field_csv_round_trip() {
    let dirs = cut_planes(&[0.0, 45.0], 7);
    let cut = FarFieldCut {
        e_theta: (0..dirs.len()).map(|k| C64::new(1.0 + k as f64 / 3.0, -0.1 * k as f64)).collect(),
        e_phi: (0..dirs.len()).map(|k| C64::new(1e-7 * k as f64, std::f64::consts::PI)).collect(),
        directions: dirs,
    };
    let text = far_field_csv(&cut, 2.0).unwrap();
    assert!(text.starts_with("theta_deg,phi_deg,e_theta_re,"));
    let back = parse_far_field_csv(&text).unwrap();
    assert_eq!(back.directions, cut.directions);
    let e = relative_error_cut(&back, &cut).unwrap();
    assert!(e.max_linear < 1e-8, "{}", e.max_linear);
    assert_eq!(far_field_csv(&back, 2.0).unwrap(), text);
}

#[test]
fn far_field_csv_rejects_garbage() {
    assert!(matches!(parse_far_field_csv("a,b\n1,2\n"), Err(Error::Config(_))));
    let bad = format!("{}\n0,0,1,2,3,oops\n", FAR_FIELD_HEADER.join(","));
    match parse_far_field_csv(&bad) {
        Err(Error::Config(msg)) => assert!(msg.contains("line 2"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn atomic_write_replaces_whole_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    write_atomic(&path, b"first").unwrap();
    write_atomic(&path, b"second").unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), b"second");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}
