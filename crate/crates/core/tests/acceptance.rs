//! Acceptance report. Prints one PASS/FAIL line per criterion.
//!
//! `cargo test -p wmfie-core --test acceptance -- 3 7` runs a subset.
//! The process exits non-zero only when `WMFIE_ACCEPTANCE_STRICT` is set and
//! a criterion fails; otherwise failures are reported but do not fail the run.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wmfie::excitation::{excite_plane_wave, PlaneWave};
use wmfie::formulations::{dense, make_csie, make_formulation, make_mfie, make_wmfie, FormulationConfig, FormulationKind, GramSolve};
use wmfie::linalg::{DenseMatrix, Vec3, C64};
use wmfie::mesh::{generate_canonical, generate_sphere, Canonical, TriangleMesh};
use wmfie::mie::{mie_near_field, mie_solution};
use wmfie::operators::{assemble, gram_diagnostics, OperatorSet};
use wmfie::postproc::{cut_planes, write_far_field_csv};
use wmfie::quadrature::QuadConfig;
use wmfie::rwg::RwgSpace;
use wmfie::solvers::{dense_solve, gmres, LinearOperator};
use wmfie::study::{self, Evaluated, GammaRow, Model, Reference, Scenario, Setup};
use wmfie::{wavenumber, Result, C0};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn scenario(file: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(file);
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn by_kind(results: &[Evaluated], kind: FormulationKind) -> &Evaluated {
    results.iter().find(|e| e.solved.config.kind == kind).expect("formulation in scenario")
}

fn max_db(results: &[Evaluated], kind: FormulationKind) -> f64 {
    by_kind(results, kind).max_db().expect("reference present")
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

fn rel(a: &[C64], b: &[C64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let n: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (d / n).sqrt()
}

fn rel_matrix(a: &DenseMatrix<C64>, b: &DenseMatrix<C64>) -> f64 {
    rel(a.as_slice(), b.as_slice())
}

fn sphere_ops(per_lambda: f64, frequency: f64) -> (RwgSpace, OperatorSet, wmfie::excitation::ExcitationVectors) {
    let mesh = generate_sphere(1.0, C0 / frequency / per_lambda).unwrap();
    let space = RwgSpace::new(mesh);
    let quad = QuadConfig::default();
    let ops = assemble(&space, frequency, &quad).unwrap();
    let wave = PlaneWave::linear(-Vec3::z(), Vec3::x(), 1.0).unwrap();
    let exc = excite_plane_wave(&space, &wave, ops.k0, &quad).unwrap();
    (space, ops, exc)
}

/// Pyramid reference far field, computed once and shared through a CSV file.
struct Shared {
    dir: tempfile::TempDir,
    pyramid_reference: Option<PathBuf>,
}

impl Shared {
    fn pyramid(&mut self) -> Result<Scenario> {
        let mut s = scenario("pyramid.toml");
        if self.pyramid_reference.is_none() {
            let setup = Setup::new(&s)?;
            let model = Model::new(&s.geometry, s.frequency)?;
            let r = setup.reference(&model, s.frequency, s.reference.as_ref())?.expect("pyramid reference");
            let path = self.dir.path().join("pyramid_reference.csv");
            write_far_field_csv(&path, &r.far, s.wave.amplitude)?;
            self.pyramid_reference = Some(path);
        }
        s.reference = Some(Reference::File {
            path: self.pyramid_reference.clone().unwrap(),
        });
        Ok(s)
    }
}

fn c1_exact_limit() -> Result<Verdict> {
    let (_, ops, exc) = sphere_ops(6.0, 200e6);
    let mfie = make_mfie(&ops, &exc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for variant in 1..=3 {
        let w = make_wmfie(&ops, &exc, variant, 1.0)?;
        for _ in 0..100 {
            let x: Vec<C64> = (0..ops.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            worst = worst.max(rel(&w.apply(&x)?, &mfie.apply(&x)?));
        }
    }
    let w1 = dense::w_matrix(&ops, 1.0)?;
    let identity = w1 == DenseMatrix::identity(ops.len());
    Ok(Verdict::new(
        worst <= 1e-12 && identity,
        format!("N={} max rel diff {worst:.1e} over 3x100 vectors, W_1 == I: {identity}", ops.len()),
    ))
}

fn c2_gram_structure() -> Result<Verdict> {
    let wedge = study::build_mesh(&scenario("wedge.toml").geometry, 1.0)?;
    let meshes: Vec<(&str, TriangleMesh)> = vec![
        ("sphere N=270", generate_sphere(1.0, 0.2)?),
        ("sphere N=1080", generate_sphere(1.0, 0.1)?),
        ("cube", generate_canonical(Canonical::Cube { side: 1.0 }, 0.25)?),
        ("pyramid", study::build_mesh(&scenario("pyramid.toml").geometry, 300e6)?),
        ("wedge", wedge.clone()),
    ];
    let mut ok = true;
    let mut worst_skew: f64 = 0.0;
    let mut worst_sigma: f64 = 0.0;
    for (name, mesh) in &meshes {
        let d = gram_diagnostics(&RwgSpace::new(mesh.clone()));
        let good = d.bb_positive_definite && d.ba_skew_residual < 1e-12 && d.ba_sigma_ratio < 1e-3;
        if !good {
            println!("    {name}: {d:?}");
        }
        ok &= good;
        worst_skew = worst_skew.max(d.ba_skew_residual);
        worst_sigma = worst_sigma.max(d.ba_sigma_ratio);
    }
    let d = gram_diagnostics(&RwgSpace::new(wedge));
    let cond_ok = within(d.bb_condition, 600.0, 1000.0) && within(d.bb_scaled_condition, 350.0, 570.0);
    Ok(Verdict::new(
        ok && cond_ok,
        format!(
            "{} meshes SPD/skew/null-space {}; worst skew {worst_skew:.1e}, worst sigma ratio {worst_sigma:.1e}; wedge cond {:.0} (600..1000), scaled {:.0} (350..570)",
            meshes.len(),
            if ok { "ok" } else { "FAILED" },
            d.bb_condition,
            d.bb_scaled_condition
        ),
    ))
}

fn c3_sphere() -> Result<Verdict> {
    let s = scenario("sphere_200mhz.toml");
    let out = study::run(&s)?;
    let radius = out.reference.as_ref().and_then(|r| r.radius).unwrap_or(f64::NAN);
    let (e, m, w) = (
        max_db(&out.results, FormulationKind::Efie),
        max_db(&out.results, FormulationKind::Mfie),
        max_db(&out.results, FormulationKind::Wmfie1),
    );
    let checks = [e <= -45.0, w <= e + 4.0, m >= w + 4.0];
    Ok(Verdict::new(
        checks.iter().all(|c| *c),
        format!(
            "N={} Mie radius {radius:.5} m; max dB EFIE {e:.2} (<= -45: {}), WMFIE1 {w:.2} (within 4 of EFIE: {}), MFIE {m:.2} (>= WMFIE+4: {})",
            out.unknowns, checks[0], checks[1], checks[2]
        ),
    ))
}

fn c4_pyramid(shared: &mut Shared) -> Result<Verdict> {
    let s = shared.pyramid()?;
    let out = study::run(&s)?;
    let (e, m, w) = (
        max_db(&out.results, FormulationKind::Efie),
        max_db(&out.results, FormulationKind::Mfie),
        max_db(&out.results, FormulationKind::Wmfie1),
    );
    let checks = [within(m, -17.0, -5.0), w <= -13.0, e <= -16.0];
    Ok(Verdict::new(
        checks.iter().all(|c| *c),
        format!(
            "N={} mean edge lambda/{:.2}; max dB MFIE {m:.2} (in [-17,-5]: {}), WMFIE1 {w:.2} (<= -13: {}), EFIE {e:.2} (<= -16: {})",
            out.unknowns,
            C0 / s.frequency / out.stats.mean_edge_length,
            checks[0],
            checks[1],
            checks[2]
        ),
    ))
}

fn c5_wedge() -> Result<Verdict> {
    let s = scenario("wedge.toml");
    let out = study::run(&s)?;
    let (e, m, w) = (
        max_db(&out.results, FormulationKind::Efie),
        max_db(&out.results, FormulationKind::Mfie),
        max_db(&out.results, FormulationKind::Wmfie1),
    );
    let inner = by_kind(&out.results, FormulationKind::Wmfie1).solved.inner;
    let checks = [
        within(m, -13.0, -5.0),
        within(w, -26.0, -18.0),
        within(e, -26.0, -18.0),
        inner.max_iterations <= 15,
    ];
    let its: Vec<String> = out.results.iter().map(|r| format!("{} {}", r.solved.config.kind, r.solved.iterations)).collect();
    Ok(Verdict::new(
        checks.iter().all(|c| *c),
        format!(
            "N={} mean edge lambda/{:.2}; max dB MFIE {m:.2} (-9+-4: {}), WMFIE1 {w:.2} (-22+-4: {}), EFIE {e:.2} (-22+-4: {}); Gram CG max {} mean {:.1} iterations (<= 15: {}); GMRES {}",
            out.unknowns,
            C0 / s.frequency / out.stats.mean_edge_length,
            checks[0],
            checks[1],
            checks[2],
            inner.max_iterations,
            inner.mean_iterations(),
            checks[3],
            its.join(", ")
        ),
    ))
}

fn c6_refinement() -> Result<Verdict> {
    let s = scenario("sphere_refine.toml");
    let rows = study::refinement_study(&s)?;
    let its = |k: FormulationKind| -> Vec<usize> { rows.iter().filter(|r| r.formulation.kind == k).map(|r| r.iterations).collect() };
    let (e, m, w) = (its(FormulationKind::Efie), its(FormulationKind::Mfie), its(FormulationKind::Wmfie1));
    let unknowns: Vec<usize> = rows.iter().filter(|r| r.formulation.kind == FormulationKind::Efie).map(|r| r.unknowns).collect();
    let spread = |v: &[usize]| {
        let (lo, hi) = (*v.iter().min().unwrap() as f64, *v.iter().max().unwrap() as f64);
        (hi - lo) / lo
    };
    let increasing = e.windows(2).all(|p| p[1] > p[0]);
    let ratio = *e.last().unwrap() as f64 / *w.last().unwrap() as f64;
    let converged = rows.iter().all(|r| r.converged);
    let checks = [e.len() >= 4, increasing, spread(&m) <= 0.5, spread(&w) <= 0.5, ratio >= 5.0, converged];
    Ok(Verdict::new(
        checks.iter().all(|c| *c),
        format!(
            "N {unknowns:?}; GMRES(1e-4) EFIE {e:?} (strictly increasing: {increasing}), MFIE {m:?} (spread {:.0}%), WMFIE1 {w:?} (spread {:.0}%); finest EFIE/WMFIE {ratio:.1} (>= 5)",
            100.0 * spread(&m),
            100.0 * spread(&w)
        ),
    ))
}

/// Cavity resonances of a PEC sphere: zeros of `[x j_n(x)]'` (TM) and `j_n` (TE).
const TM11: f64 = 2.743707;
const TM21: f64 = 3.870239;

fn c7_resonances() -> Result<Verdict> {
    let s = scenario("sphere_resonance.toml");
    let model = Model::new(&s.geometry, s.frequency)?;
    let a = study::volume_equivalent_radius(model.space.mesh());
    drop(model);
    let predicted = [TM11, TM21].map(|x| x * C0 / (2.0 * std::f64::consts::PI * a));
    let rows = study::freq_sweep(&s)?;
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in [FormulationKind::Efie, FormulationKind::Mfie] {
        let mine: Vec<&study::FreqRow> = rows.iter().filter(|r| r.formulation.kind == kind).collect();
        let m = study::median(&mine.iter().map(|r| r.iterations as f64).collect::<Vec<_>>());
        let spikes: Vec<f64> = mine.iter().filter(|r| r.spike).map(|r| (r.frequency / 1e6).round()).collect();
        let mut peaks = Vec::new();
        for f in predicted {
            let peak = mine.iter().filter(|r| (r.frequency - f).abs() <= 3e6).max_by_key(|r| r.iterations).unwrap();
            let ratio = peak.iterations as f64 / m;
            ok &= ratio >= 2.0;
            peaks.push(format!("{:.0} MHz {:.2}x", peak.frequency / 1e6, ratio));
        }
        lines.push(format!("{kind} median {m}, peaks {} (>= 2x), flagged {spikes:?}", peaks.join(" / ")));
    }
    for kind in [FormulationKind::Cfie, FormulationKind::Wcfie] {
        let its: Vec<f64> = rows.iter().filter(|r| r.formulation.kind == kind).map(|r| r.iterations as f64).collect();
        let m = study::median(&its);
        let worst = its.iter().map(|x| (x - m).abs() / m).fold(0.0, f64::max);
        ok &= worst <= 0.2;
        lines.push(format!("{kind} median {m} worst deviation {:.0}% (<= 20%)", 100.0 * worst));
    }
    let eps = |kind: FormulationKind| -> Vec<f64> {
        rows.iter().filter(|r| r.formulation.kind == kind).map(|r| r.eps_max_db.unwrap_or(f64::NAN)).collect()
    };
    let (cfie, wcfie) = (eps(FormulationKind::Cfie), eps(FormulationKind::Wcfie));
    let margin = wcfie.iter().zip(&cfie).map(|(w, c)| w - c).fold(f64::NEG_INFINITY, f64::max);
    ok &= margin <= 1.0;
    ok &= rows.iter().filter(|r| matches!(r.formulation.kind, FormulationKind::Cfie | FormulationKind::Wcfie)).all(|r| r.converged);
    lines.push(format!("max WCFIE-CFIE error {margin:.2} dB (<= 1)"));
    Ok(Verdict::new(
        ok,
        format!(
            "{} frequencies, predicted TM11 {:.1} MHz, TM21 {:.1} MHz; {}",
            rows.len() / s.formulations.len(),
            predicted[0] / 1e6,
            predicted[1] / 1e6,
            lines.join("; ")
        ),
    ))
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn gamma_shape(name: &str, rows: &[GammaRow]) -> (bool, String) {
    let mfie = rows.iter().find(|r| r.variant == FormulationKind::Mfie).unwrap().eps_max_db;
    let mut ok = true;
    let mut parts = Vec::new();
    let mut minima = Vec::new();
    for kind in [FormulationKind::Wmfie1, FormulationKind::Wmfie2, FormulationKind::Wmfie3] {
        let v: Vec<&GammaRow> = rows.iter().filter(|r| r.variant == kind).collect();
        let at_one = v.iter().find(|r| r.gamma == Some(1.0)).unwrap().eps_max_db;
        let best = v.iter().min_by(|a, b| a.eps_max_db.total_cmp(&b.eps_max_db)).unwrap();
        let g_best = best.gamma.unwrap();
        // error must rise from the minimum towards the smallest gamma
        let below: Vec<&&GammaRow> = v.iter().filter(|r| r.gamma.unwrap() <= g_best).collect();
        let (gx, ey): (Vec<f64>, Vec<f64>) = below.iter().map(|r| (r.gamma.unwrap(), r.eps_max_db)).unzip();
        let smallest = v.iter().min_by(|a, b| a.gamma.unwrap().total_cmp(&b.gamma.unwrap())).unwrap();
        let rising = below.len() >= 3 && slope(&gx, &ey) < 0.0 && smallest.eps_max_db > best.eps_max_db;
        let limit = (at_one - mfie).abs() <= 0.5;
        ok &= rising && limit;
        minima.push(best.eps_max_db);
        parts.push(format!(
            "{kind} min {:.2} dB at gamma {g_best}, {:.2} dB at gamma {} (rising: {rising}), gamma=1 vs MFIE {:+.3} dB",
            best.eps_max_db,
            smallest.eps_max_db,
            smallest.gamma.unwrap(),
            at_one - mfie
        ));
    }
    let best_is_1 = minima[0] <= minima[1] && minima[0] <= minima[2];
    ok &= best_is_1;
    (ok, format!("{name}: MFIE {mfie:.2} dB; {}; WMFIE1 minimum lowest: {best_is_1}", parts.join("; ")))
}

fn c8_gamma(shared: &mut Shared) -> Result<Verdict> {
    let (ok_p, pyr) = gamma_shape("pyramid", &study::gamma_sweep(&shared.pyramid()?)?);
    let (ok_s, sph) = gamma_shape("sphere", &study::gamma_sweep(&scenario("sphere_200mhz.toml"))?);
    Ok(Verdict::new(ok_p && ok_s, format!("{pyr} | {sph}")))
}

fn c9_low_frequency() -> Result<Verdict> {
    let s = scenario("sphere_lowfreq.toml");
    let rows = study::lf_sweep(&s)?;
    let f_low = rows.iter().map(|r| r.sample.frequency).fold(f64::INFINITY, f64::min);
    let f_high = rows.iter().map(|r| r.sample.frequency).fold(0.0, f64::max);
    let mut ok = (f_high / f_low).log10() >= 4.0 - 1e-9;
    let mut parts = Vec::new();
    for kind in [FormulationKind::Efie, FormulationKind::Mfie, FormulationKind::Wmfie1] {
        let d: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.formulation.kind == kind && r.sample.frequency <= 100.0 * f_low * (1.0 + 1e-9))
            .map(|r| (r.sample.frequency, r.sample.d_re))
            .collect();
        ok &= d.iter().all(|x| x.1.is_finite());
        let top = d.iter().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap().1;
        let bottom = d.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap().1;
        if kind == FormulationKind::Efie {
            let drop = top / bottom;
            ok &= drop >= 10.0;
            parts.push(format!("EFIE |Re d| falls {drop:.2e}x (>= 10)"));
        } else {
            let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.1), hi.max(x.1)));
            let change = (hi - lo) / top;
            ok &= change < 0.1;
            parts.push(format!("{kind} |Re d| varies {:.2}% (< 10%)", 100.0 * change));
        }
    }
    Ok(Verdict::new(
        ok,
        format!(
            "{:.1} decades down to {f_low:.3e} Hz, lowest two decades: {}",
            (f_high / f_low).log10(),
            parts.join(", ")
        ),
    ))
}

fn c10_oracles() -> Result<Verdict> {
    let (space, ops, exc) = sphere_ops(7.0, 200e6);
    let n = ops.len();
    let mut parts = vec![format!("N={n}")];
    let mut ok = n <= 500;

    let wm = dense::materialize(&make_wmfie(&ops, &exc, 1, 0.5)?)?;
    let d = rel_matrix(&wm, &dense::wmfie_final(&ops, 0.5)?);
    ok &= d <= 1e-8;
    parts.push(format!("WMFIE1 matrix-free vs closed form {d:.1e}"));

    let csie = make_csie(&ops, &exc, 10.0)?;
    let i_elim = dense_solve(&dense::materialize(&csie)?, csie.rhs())?.solution;
    let (block, rhs) = dense::csie_block(&ops, 10.0, &exc.e);
    let x = dense_solve(&block, &rhs)?.solution;
    let d_i = rel(&i_elim, &x[..n]);
    let d_v = rel(&csie.magnetic_coefficients(&i_elim)?, &x[n..]);
    ok &= d_i <= 1e-6 && d_v <= 1e-6;
    parts.push(format!("CSIE eliminated vs block i {d_i:.1e} v {d_v:.1e}"));

    let mut worst: (f64, FormulationKind) = (0.0, FormulationKind::Efie);
    for kind in FormulationKind::ALL {
        let config = FormulationConfig {
            kind,
            gram_solve: GramSolve::Dense,
            ..FormulationConfig::default()
        };
        let op = make_formulation(&ops, &exc, &config)?;
        let it = gmres(&op, op.rhs(), 1e-13, 3 * n)?.require_converged("GMRES")?;
        let lu = dense_solve(&dense::materialize(&op)?, op.rhs())?;
        let d = rel(&it.solution, &lu.solution);
        if d > worst.0 {
            worst = (d, kind);
        }
    }
    ok &= worst.0 <= 1e-8;
    parts.push(format!("GMRES vs LU worst {:.1e} ({})", worst.0, worst.1));
    drop(space);
    Ok(Verdict::new(ok, parts.join(", ")))
}

fn c11_mie() -> Result<Verdict> {
    let f = 300e6;
    let k = wavenumber(f);
    let wave = PlaneWave::linear(-Vec3::z(), Vec3::x(), 1.0)?;
    let mut optical: f64 = 0.0;
    for a in [0.05, 0.5, 1.5, 5.0] {
        let sol = mie_solution(a, k)?;
        let (ext, sca) = (sol.extinction_cross_section(), sol.scattering_cross_section());
        optical = optical.max((ext - sca).abs() / ext);
    }

    let a = 0.5;
    let sol = mie_solution(a, k)?;
    let dirs = cut_planes(&[0.0, 45.0, 90.0], 37);
    let surface: Vec<Vec3> = dirs.iter().map(|d| d.unit() * (a * (1.0 + 1e-12))).collect();
    let scat = mie_near_field(&sol, &wave, &surface)?;
    let tangential = surface
        .iter()
        .zip(&scat)
        .map(|(p, s)| {
            let e = s.e + wave.e_field(k, p);
            let n = p / p.norm();
            let en = e.x * n.x + e.y * n.y + e.z * n.z;
            let t = e - wmfie::linalg::CVec3::new(en * n.x, en * n.y, en * n.z);
            t.norm()
        })
        .fold(0.0, f64::max);

    let r = 100.0 * C0 / f;
    let far: Vec<_> = dirs.iter().map(|d| sol.far_field_vector(&wave, &d.unit())).collect();
    let points: Vec<Vec3> = dirs.iter().map(|d| d.unit() * r).collect();
    let near = mie_near_field(&sol, &wave, &points)?;
    let phase = C64::from_polar(r, k * r);
    let peak = far.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let (mut vector, mut magnitude): (f64, f64) = (0.0, 0.0);
    for (fv, s) in far.iter().zip(&near) {
        let scaled = s.e * phase;
        vector = vector.max((scaled - fv).norm() / peak);
        magnitude = magnitude.max((scaled.norm() - fv.norm()).abs() / peak);
    }
    let checks = [optical <= 1e-8, tangential < 1e-6, vector <= 1e-3];
    Ok(Verdict::new(
        checks.iter().all(|c| *c),
        format!(
            "optical theorem {optical:.1e} (<= 1e-8), surface tangential E {tangential:.1e} (< 1e-6), far vs near at 100 lambda: vector {:.3}% (<= 0.1%), magnitude {:.3}%",
            100.0 * vector,
            100.0 * magnitude
        ),
    ))
}

const TITLES: [&str; 11] = [
    "exact-limit recovery",
    "Gram structure",
    "sphere accuracy",
    "pyramid accuracy",
    "sharp wedge",
    "refinement trends",
    "interior resonances",
    "gamma-sweep shape",
    "low-frequency property",
    "oracle equivalences",
    "Mie self-checks",
];

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut shared = Shared {
        dir: tempfile::tempdir().expect("temporary directory"),
        pyramid_reference: None,
    };
    let mut failed = Vec::new();
    let mut ran = 0;
    for (index, title) in TITLES.iter().enumerate() {
        let n = index + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| match n {
            1 => c1_exact_limit(),
            2 => c2_gram_structure(),
            3 => c3_sphere(),
            4 => c4_pyramid(&mut shared),
            5 => c5_wedge(),
            6 => c6_refinement(),
            7 => c7_resonances(),
            8 => c8_gamma(&mut shared),
            9 => c9_low_frequency(),
            10 => c10_oracles(),
            _ => c11_mie(),
        }));
        let verdict = match outcome {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => Verdict::new(false, format!("error: {e}")),
            Err(_) => Verdict::new(false, "panicked"),
        };
        if !verdict.pass {
            failed.push(n);
        }
        println!(
            "criterion {n:>2} {} {title} [{:.0} s]: {}",
            if verdict.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            verdict.detail
        );
    }
    println!("acceptance: {}/{ran} passed, failed {failed:?}", ran - failed.len());
    if !failed.is_empty() && std::env::var_os("WMFIE_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
