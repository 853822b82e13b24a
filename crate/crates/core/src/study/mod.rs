//! Scenario-driven studies: a mesh, an incident wave, a set of formulations
//! and a reference, swept over the parameter of interest.
//!
//! Every function here returns plain rows; formatting and file output live
//! in the command-line front end.

mod scenario;

pub use scenario::{
    FreqSweepSpec, GammaSweepSpec, Geometry, LfSweepSpec, MeshSize, MieRadius, NearShell, OutputSpec, Reference,
    RefineSpec, Scenario, SolverMethod, SolverSettings, WaveSpec,
};

use std::time::Duration;

use crate::error::{Error, Result, StageExt};
use crate::excitation::{excite_plane_wave, PlaneWave};
use crate::formulations::{dense, make_formulation, FormulationConfig, FormulationKind, InnerStats};
use crate::linalg::{Vec3, C64};
use crate::mesh::{
    generate_canonical, generate_sphere, load_mesh, refine_uniform, sphere_with_unknowns, wedge_structured, Canonical,
    MeshFormat, MeshStats, TriangleMesh,
};
use crate::mie::{mie_far_field, mie_near_field, mie_solution};
use crate::operators::{assemble, assemble_efie, OperatorSet};
use crate::postproc::{
    current_error, cut_planes, far_field, lf_divergence_sweep, log_frequencies, near_field, near_field_error,
    read_far_field_csv, relative_error_cut, Direction, FarFieldCut, LfSample, NearFieldSample,
};
use crate::quadrature::QuadConfig;
use crate::rwg::RwgSpace;
use crate::solvers::{dense_solve, gmres};
use crate::{wavenumber, C0};

/// Builds the surface mesh; `frequency` resolves `"lambda/d"` edge lengths.
pub fn build_mesh(geometry: &Geometry, frequency: f64) -> Result<TriangleMesh> {
    let h = |size: &MeshSize| size.meters(frequency);
    match geometry {
        Geometry::Sphere { diameter, edge } => generate_sphere(*diameter, h(edge)),
        Geometry::SphereUnknowns { diameter, unknowns } => sphere_with_unknowns(*diameter, *unknowns),
        Geometry::Cube { side, edge } => generate_canonical(Canonical::Cube { side: *side }, h(edge)),
        Geometry::Pyramid { base, height, edge } => generate_canonical(
            Canonical::Pyramid {
                base: *base,
                height: *height,
            },
            h(edge),
        ),
        Geometry::Wedge {
            length,
            depth,
            width,
            edge,
        } => generate_canonical(
            Canonical::Wedge {
                length: *length,
                depth: *depth,
                width: *width,
            },
            h(edge),
        ),
        Geometry::StructuredWedge {
            length,
            depth,
            width,
            n_cross,
            n_len,
        } => wedge_structured(*length, *depth, *width, *n_cross, *n_len),
        Geometry::File { path } => {
            let format = MeshFormat::from_path(path)
                .ok_or_else(|| Error::Config(format!("unknown mesh format: {}", path.display())))?;
            load_mesh(path, format)
        }
    }
}

/// Radius of the sphere enclosing the same volume as `mesh`.
pub fn volume_equivalent_radius(mesh: &TriangleMesh) -> f64 {
    (3.0 * mesh.stats().volume / (4.0 * std::f64::consts::PI)).cbrt()
}

pub fn plane_wave(spec: &WaveSpec) -> Result<PlaneWave> {
    PlaneWave::linear(spec.direction(), spec.polarization(), spec.amplitude)
}

/// A meshed body ready for assembly.
pub struct Model {
    pub geometry: Geometry,
    pub space: RwgSpace,
}

impl Model {
    pub fn new(geometry: &Geometry, frequency: f64) -> Result<Model> {
        let mesh = build_mesh(geometry, frequency).stage("mesh")?;
        Ok(Model {
            geometry: geometry.clone(),
            space: RwgSpace::new(mesh),
        })
    }

    pub fn stats(&self) -> MeshStats {
        self.space.mesh().stats()
    }

    pub fn mie_radius(&self, radius: MieRadius) -> Result<f64> {
        match radius {
            MieRadius::Fixed(r) => Ok(r),
            MieRadius::VolumeEquivalent => Ok(volume_equivalent_radius(self.space.mesh())),
            MieRadius::Nominal => self.geometry.nominal_radius().ok_or_else(|| {
                Error::Config(format!("geometry {} has no nominal sphere radius", self.geometry.kind_name()))
            }),
        }
    }
}

/// Outcome of one formulation at one frequency.
#[derive(Debug, Clone)]
pub struct Solved {
    pub config: FormulationConfig,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub inner: InnerStats,
    pub wall_time: Duration,
    /// Electric current coefficients.
    pub i: Vec<C64>,
    /// Magnetic current coefficients (CSIE only).
    pub v: Option<Vec<C64>>,
}

/// Solves one formulation. A GMRES run that stops at `maxit` is returned
/// with `converged = false` rather than as an error.
pub fn solve_formulation(
    ops: &OperatorSet,
    exc: &crate::excitation::ExcitationVectors,
    config: &FormulationConfig,
    solver: &SolverSettings,
) -> Result<Solved> {
    let stage = format!("solve {}", config.kind);
    let op = make_formulation(ops, exc, config).stage(&stage)?;
    let (i, iterations, converged, residual, wall_time) = match solver.method {
        SolverMethod::Gmres => {
            let rep = gmres(&op, op.rhs(), solver.tol, solver.maxit).stage(&stage)?;
            let residual = rep.final_residual();
            (rep.solution, rep.iterations, rep.converged, residual, rep.wall_time)
        }
        SolverMethod::Dense => {
            let start = std::time::Instant::now();
            let a = dense::materialize(&op).stage(&stage)?;
            let sol = dense_solve(&a, op.rhs()).stage(&stage)?;
            (sol.solution, 0, true, 0.0, start.elapsed())
        }
    };
    let v = match config.kind {
        FormulationKind::Csie => Some(op.magnetic_coefficients(&i).stage(&stage)?),
        _ => None,
    };
    Ok(Solved {
        config: *config,
        iterations,
        converged,
        residual,
        inner: op.inner_stats(),
        wall_time,
        i,
        v,
    })
}

/// Far field and optional near field of a reference solution.
#[derive(Debug, Clone)]
pub struct ReferenceData {
    pub far: FarFieldCut,
    pub near: Option<Vec<NearFieldSample>>,
    /// Mie radius, when the reference is a Mie series.
    pub radius: Option<f64>,
}

/// Everything that stays fixed while a study sweeps: wave, grid, quadrature.
pub struct Setup<'a> {
    pub scenario: &'a Scenario,
    pub wave: PlaneWave,
    pub directions: Vec<Direction>,
    pub near_points: Option<Vec<Vec3>>,
}

impl<'a> Setup<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Setup<'a>> {
        scenario.validate()?;
        let wave = plane_wave(&scenario.wave).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Setup {
            scenario,
            wave,
            directions: cut_planes(&scenario.output.cuts, scenario.output.theta_samples),
            near_points: scenario.output.near_field.as_ref().map(|s| s.points()),
        })
    }

    fn quad(&self) -> &QuadConfig {
        &self.scenario.quadrature
    }

    pub fn reference(
        &self,
        model: &Model,
        frequency: f64,
        reference: Option<&Reference>,
    ) -> Result<Option<ReferenceData>> {
        let k0 = wavenumber(frequency);
        let data = match reference {
            None => return Ok(None),
            Some(Reference::Mie { radius }) => {
                let radius = model.mie_radius(*radius)?;
                let sol = mie_solution(radius, k0)?;
                let near = match &self.near_points {
                    Some(p) => Some(mie_near_field(&sol, &self.wave, p)?),
                    None => None,
                };
                ReferenceData {
                    far: mie_far_field(&sol, &self.wave, &self.directions),
                    near,
                    radius: Some(radius),
                }
            }
            Some(Reference::File { path }) => ReferenceData {
                far: read_far_field_csv(path)?,
                near: None,
                radius: None,
            },
            Some(Reference::RefinedEfie { refine }) => {
                let fine = RwgSpace::new(refine_uniform(model.space.mesh(), *refine)?);
                log::info!("refined EFIE reference with {} unknowns", fine.len());
                let a = assemble_efie(&fine, frequency, self.quad())?;
                let exc = excite_plane_wave(&fine, &self.wave, k0, self.quad())?;
                let s = &self.scenario.solver;
                let i = match s.method {
                    SolverMethod::Gmres => gmres(&a, &exc.e, s.tol, s.maxit)?.require_converged("reference GMRES")?.solution,
                    SolverMethod::Dense => dense_solve(&a, &exc.e)?.solution,
                };
                drop(a);
                let near = match &self.near_points {
                    Some(p) => Some(near_field(&fine, &i, None, k0, p, self.quad())?),
                    None => None,
                };
                ReferenceData {
                    far: far_field(&fine, &i, None, k0, &self.directions)?,
                    near,
                    radius: None,
                }
            }
        };
        Ok(Some(data))
    }

    pub fn operators(&self, model: &Model, frequency: f64) -> Result<(OperatorSet, crate::excitation::ExcitationVectors)> {
        let ops = assemble(&model.space, frequency, self.quad()).stage("assemble")?;
        let exc = excite_plane_wave(&model.space, &self.wave, ops.k0, self.quad()).stage("excitation")?;
        Ok((ops, exc))
    }

    /// Solves every configuration and scores it against `reference`.
    pub fn evaluate(
        &self,
        model: &Model,
        ops: &OperatorSet,
        exc: &crate::excitation::ExcitationVectors,
        configs: &[FormulationConfig],
        reference: Option<&ReferenceData>,
    ) -> Result<Vec<Evaluated>> {
        let mut out: Vec<Evaluated> = Vec::with_capacity(configs.len());
        for c in configs {
            let solved = solve_formulation(ops, exc, c, &self.scenario.solver)?;
            let far = far_field(&model.space, &solved.i, solved.v.as_deref(), ops.k0, &self.directions).stage("far field")?;
            let near = match &self.near_points {
                Some(p) => Some(near_field(&model.space, &solved.i, solved.v.as_deref(), ops.k0, p, self.quad()).stage("near field")?),
                None => None,
            };
            let (far_error, near_error) = match reference {
                Some(r) => {
                    let e = relative_error_cut(&far, &r.far).stage("far-field error")?;
                    let n = match (&near, &r.near) {
                        (Some(c), Some(rn)) => Some(near_field_error(c, rn)?),
                        _ => None,
                    };
                    (Some((e.max_db, e.avg_db, e.max_linear, e.avg_linear)), n)
                }
                None => (None, None),
            };
            log::info!(
                "{} f={:.6e} Hz: {} iterations{}",
                c.kind,
                ops.frequency,
                solved.iterations,
                far_error.map(|e| format!(", max error {:.2} dB", e.0)).unwrap_or_default()
            );
            out.push(Evaluated {
                solved,
                far,
                near,
                far_error,
                near_error,
                current_error: None,
            });
        }
        if let Some(efie) = out.iter().position(|e| e.solved.config.kind == FormulationKind::Efie) {
            let i_ref = out[efie].solved.i.clone();
            for e in &mut out {
                e.current_error = Some(current_error(&e.solved.i, &i_ref)?);
            }
        }
        Ok(out)
    }
}

/// A solved formulation with its fields and error measures.
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub solved: Solved,
    pub far: FarFieldCut,
    pub near: Option<Vec<NearFieldSample>>,
    /// `(max dB, avg dB, max linear, avg linear)` against the reference.
    pub far_error: Option<(f64, f64, f64, f64)>,
    /// Mean near-field error against the reference, linear.
    pub near_error: Option<f64>,
    /// `ε_i` against the EFIE solution on the same mesh.
    pub current_error: Option<f64>,
}

impl Evaluated {
    pub fn max_db(&self) -> Option<f64> {
        self.far_error.map(|e| e.0)
    }

    pub fn avg_db(&self) -> Option<f64> {
        self.far_error.map(|e| e.1)
    }
}

pub struct RunOutput {
    pub unknowns: usize,
    pub stats: MeshStats,
    pub reference: Option<ReferenceData>,
    pub results: Vec<Evaluated>,
}

/// Solves every formulation of the scenario at its frequency.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    let setup = Setup::new(scenario)?;
    let model = Model::new(&scenario.geometry, scenario.frequency)?;
    let reference = setup
        .reference(&model, scenario.frequency, scenario.reference.as_ref())
        .stage("reference")?;
    let (ops, exc) = setup.operators(&model, scenario.frequency)?;
    let results = setup.evaluate(&model, &ops, &exc, &scenario.formulations, reference.as_ref())?;
    Ok(RunOutput {
        unknowns: model.space.len(),
        stats: model.stats(),
        reference,
        results,
    })
}

fn require_reference(r: Option<ReferenceData>, what: &str) -> Result<ReferenceData> {
    r.ok_or_else(|| Error::Config(format!("{what} needs a [reference]")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaRow {
    /// `None` for the EFIE and MFIE baseline rows.
    pub gamma: Option<f64>,
    pub variant: FormulationKind,
    pub eps_max_db: f64,
    pub eps_avg_db: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// WMFIE variants over a γ grid, plus EFIE and MFIE baselines.
pub fn gamma_sweep(scenario: &Scenario) -> Result<Vec<GammaRow>> {
    let spec = scenario
        .gamma_sweep
        .as_ref()
        .ok_or_else(|| Error::Config("gamma-sweep needs a [gamma_sweep] section".into()))?;
    let setup = Setup::new(scenario)?;
    let model = Model::new(&scenario.geometry, scenario.frequency)?;
    let reference = require_reference(
        setup.reference(&model, scenario.frequency, scenario.reference.as_ref()).stage("reference")?,
        "gamma-sweep",
    )?;
    let (ops, exc) = setup.operators(&model, scenario.frequency)?;
    let template = scenario.formulations[0];
    let mut configs = vec![
        FormulationConfig {
            kind: FormulationKind::Efie,
            ..template
        },
        FormulationConfig {
            kind: FormulationKind::Mfie,
            ..template
        },
    ];
    for &gamma in &spec.gammas {
        for &v in &spec.variants {
            let kind = match v {
                1 => FormulationKind::Wmfie1,
                2 => FormulationKind::Wmfie2,
                _ => FormulationKind::Wmfie3,
            };
            configs.push(FormulationConfig { kind, gamma, ..template });
        }
    }
    let results = setup.evaluate(&model, &ops, &exc, &configs, Some(&reference))?;
    Ok(results
        .iter()
        .map(|e| GammaRow {
            gamma: e.solved.config.kind.uses_gamma().then_some(e.solved.config.gamma),
            variant: e.solved.config.kind,
            eps_max_db: e.max_db().unwrap_or(f64::NAN),
            eps_avg_db: e.avg_db().unwrap_or(f64::NAN),
            iterations: e.solved.iterations,
            converged: e.solved.converged,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineRow {
    pub level: MeshSize,
    pub mean_edge: f64,
    /// Mean edge in wavelengths.
    pub edge_over_lambda: f64,
    pub unknowns: usize,
    pub formulation: FormulationConfig,
    pub iterations: usize,
    pub converged: bool,
    pub eps_max_db: Option<f64>,
    pub eps_avg_db: Option<f64>,
    pub eps_i: Option<f64>,
    pub near_error: Option<f64>,
    pub mie_radius: Option<f64>,
}

/// Solves every formulation on each refinement level, coarse to fine.
pub fn refinement_study(scenario: &Scenario) -> Result<Vec<RefineRow>> {
    let spec = scenario
        .refine
        .as_ref()
        .ok_or_else(|| Error::Config("refine needs a [refine] section".into()))?;
    let setup = Setup::new(scenario)?;
    let lambda = C0 / scenario.frequency;
    let mut rows = Vec::new();
    for level in &spec.levels {
        let geometry = scenario.geometry.with_edge(*level)?;
        let model = Model::new(&geometry, scenario.frequency)?;
        let stage = format!("level {level}");
        let reference = setup
            .reference(&model, scenario.frequency, scenario.reference.as_ref())
            .stage(&stage)?;
        let (ops, exc) = setup.operators(&model, scenario.frequency).stage(&stage)?;
        let results = setup
            .evaluate(&model, &ops, &exc, &scenario.formulations, reference.as_ref())
            .stage(&stage)?;
        let stats = model.stats();
        for e in results {
            rows.push(RefineRow {
                level: *level,
                mean_edge: stats.mean_edge_length,
                edge_over_lambda: stats.mean_edge_length / lambda,
                unknowns: model.space.len(),
                formulation: e.solved.config,
                iterations: e.solved.iterations,
                converged: e.solved.converged,
                eps_max_db: e.max_db(),
                eps_avg_db: e.avg_db(),
                eps_i: e.current_error,
                near_error: e.near_error,
                mie_radius: reference.as_ref().and_then(|r| r.radius),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreqRow {
    pub frequency: f64,
    pub formulation: FormulationConfig,
    pub iterations: usize,
    pub converged: bool,
    pub eps_max_db: Option<f64>,
    pub eps_avg_db: Option<f64>,
    /// Iteration count at least `spike_factor` times this formulation's median.
    pub spike: bool,
}

/// Median of `values`; the mean of the two central entries for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fixed mesh, stepped frequency; flags iteration spikes per formulation.
pub fn freq_sweep(scenario: &Scenario) -> Result<Vec<FreqRow>> {
    let spec = scenario
        .freq_sweep
        .ok_or_else(|| Error::Config("freq-sweep needs a [freq_sweep] section".into()))?;
    let setup = Setup::new(scenario)?;
    let model = Model::new(&scenario.geometry, scenario.frequency)?;
    let mut rows = Vec::new();
    for f in spec.frequencies() {
        let stage = format!("f = {f:e} Hz");
        let reference = setup.reference(&model, f, scenario.reference.as_ref()).stage(&stage)?;
        let (ops, exc) = setup.operators(&model, f).stage(&stage)?;
        let results = setup
            .evaluate(&model, &ops, &exc, &scenario.formulations, reference.as_ref())
            .stage(&stage)?;
        for e in results {
            rows.push(FreqRow {
                frequency: f,
                formulation: e.solved.config,
                iterations: e.solved.iterations,
                converged: e.solved.converged,
                eps_max_db: e.max_db(),
                eps_avg_db: e.avg_db(),
                spike: false,
            });
        }
    }
    flag_spikes(&mut rows, spec.spike_factor);
    Ok(rows)
}

/// Marks rows whose iteration count reaches `factor` times the median of
/// the same formulation over the sweep.
pub fn flag_spikes(rows: &mut [FreqRow], factor: f64) {
    let configs: Vec<FormulationConfig> = rows.iter().fold(Vec::new(), |mut acc, r| {
        if !acc.contains(&r.formulation) {
            acc.push(r.formulation);
        }
        acc
    });
    for c in configs {
        let its: Vec<f64> = rows.iter().filter(|r| r.formulation == c).map(|r| r.iterations as f64).collect();
        let m = median(&its);
        for r in rows.iter_mut().filter(|r| r.formulation == c) {
            r.spike = r.iterations as f64 >= factor * m;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LfRow {
    pub formulation: FormulationConfig,
    pub sample: LfSample,
}

/// Current and divergence norms over a descending logarithmic sweep.
pub fn lf_sweep(scenario: &Scenario) -> Result<Vec<LfRow>> {
    let spec = scenario
        .lf_sweep
        .ok_or_else(|| Error::Config("lf-sweep needs an [lf_sweep] section".into()))?;
    let setup = Setup::new(scenario)?;
    let model = Model::new(&scenario.geometry, scenario.frequency)?;
    let freqs = log_frequencies(spec.f_high, spec.f_high / 10f64.powf(spec.decades), spec.per_decade);
    let mut rows = Vec::new();
    for config in &scenario.formulations {
        let samples = lf_divergence_sweep(&model.space, &freqs, |f| {
            let (ops, exc) = setup.operators(&model, f)?;
            let s = solve_formulation(&ops, &exc, config, &scenario.solver)?;
            if !s.converged {
                return Err(Error::NotConverged {
                    solver: "GMRES",
                    iterations: s.iterations,
                    residual: s.residual,
                });
            }
            Ok(s.i)
        })
        .stage(&format!("lf sweep {}", config.kind))?;
        rows.extend(samples.into_iter().map(|sample| LfRow {
            formulation: *config,
            sample,
        }));
    }
    Ok(rows)
}
