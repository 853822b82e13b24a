use std::path::{Path, PathBuf};

use wmfie::error::{Error, Result, StageExt};
use wmfie::formulations::FormulationConfig;
use wmfie::mie::{mie_far_field, mie_solution};
use wmfie::postproc::{far_field_csv, write_atomic, NearFieldSample};
use wmfie::study::{self, Model, Reference, Scenario, Setup};
use wmfie::{wavenumber, C0};

use crate::table::{db, manifest, opt_db, opt_sci, sci, Table};

/// Files written by a command and the number of solves that stopped short
/// of the requested tolerance.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub unconverged: usize,
}

struct Writer<'a> {
    out_dir: &'a Path,
    name: &'a str,
    command: &'static str,
    files: Vec<(PathBuf, &'static str, usize)>,
}

impl<'a> Writer<'a> {
    fn new(out_dir: &'a Path, scenario: &'a Scenario, command: &'static str) -> Self {
        Self {
            out_dir,
            name: &scenario.name,
            command,
            files: Vec::new(),
        }
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.out_dir.join(format!("{}_{suffix}.csv", self.name))
    }

    fn table(&mut self, suffix: &str, schema: &'static str, t: &Table) -> Result<()> {
        let p = t.write(&self.path(suffix)).stage("write results")?;
        self.files.push((p, schema, t.len()));
        Ok(())
    }

    fn far_field(&mut self, suffix: &str, cut: &wmfie::postproc::FarFieldCut, e0: f64) -> Result<()> {
        let p = self.path(suffix);
        write_atomic(&p, far_field_csv(cut, e0)?.as_bytes()).stage("write results")?;
        self.files.push((p, "far-field", cut.len()));
        Ok(())
    }

    fn finish(self, unconverged: usize) -> Result<Outcome> {
        let m = manifest(self.out_dir, self.name, self.command, &self.files).stage("write results")?;
        let mut files: Vec<PathBuf> = self.files.into_iter().map(|f| f.0).collect();
        files.push(m);
        Ok(Outcome { files, unconverged })
    }
}

fn tag(index: usize, c: &FormulationConfig) -> String {
    format!("{index}_{}", c.kind)
}

fn config_cells(c: &FormulationConfig) -> Vec<String> {
    vec![
        c.kind.to_string(),
        c.kind.uses_gamma().then(|| c.gamma.to_string()).unwrap_or_default(),
        matches!(c.kind, wmfie::formulations::FormulationKind::Cfie | wmfie::formulations::FormulationKind::Wcfie)
            .then(|| c.alpha_cfie.to_string())
            .unwrap_or_default(),
        matches!(c.kind, wmfie::formulations::FormulationKind::Csie)
            .then(|| c.beta_cs.to_string())
            .unwrap_or_default(),
    ]
}

const CONFIG_COLUMNS: [&str; 4] = ["formulation", "gamma", "alpha_cfie", "beta_cs"];

fn with_config(head: &[&'static str], tail: &[&'static str]) -> Vec<&'static str> {
    head.iter().chain(CONFIG_COLUMNS.iter()).chain(tail).copied().collect()
}

fn near_table(samples: &[NearFieldSample], points: &[wmfie::linalg::Vec3]) -> Table {
    let mut t = Table::new(&[
        "x", "y", "z", "ex_re", "ex_im", "ey_re", "ey_im", "ez_re", "ez_im", "hx_re", "hx_im", "hy_re", "hy_im", "hz_re",
        "hz_im",
    ]);
    for (p, s) in points.iter().zip(samples) {
        let mut row = vec![sci(p.x), sci(p.y), sci(p.z)];
        for z in s.e.iter().chain(s.h.iter()) {
            row.push(sci(z.re));
            row.push(sci(z.im));
        }
        t.push(row);
    }
    t
}

pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<Outcome> {
    let out = study::run(scenario)?;
    let mut w = Writer::new(out_dir, scenario, "run");
    let mut summary = Table::new(&with_config(
        &[],
        &[
            "unknowns",
            "iterations",
            "converged",
            "residual",
            "inner_iterations_mean",
            "eps_max_db",
            "eps_avg_db",
            "eps_i",
            "near_error_db",
        ],
    ));
    let amplitude = scenario.wave.amplitude;
    let points = scenario.output.near_field.map(|s| s.points());
    for (k, e) in out.results.iter().enumerate() {
        let s = &e.solved;
        let mut row = config_cells(&s.config);
        row.extend([
            out.unknowns.to_string(),
            s.iterations.to_string(),
            s.converged.to_string(),
            sci(s.residual),
            format!("{:.4}", s.inner.mean_iterations()),
            opt_db(e.max_db()),
            opt_db(e.avg_db()),
            opt_sci(e.current_error),
            opt_db(e.near_error.map(wmfie::postproc::amplitude_db)),
        ]);
        summary.push(row);
        say!(
            "{:<7} iterations {:>5}  max {:>10}  avg {:>10}",
            s.config.kind,
            s.iterations,
            opt_db(e.max_db()),
            opt_db(e.avg_db())
        );
        let t = tag(k, &s.config);
        if scenario.output.far_field {
            w.far_field(&format!("farfield_{t}"), &e.far, amplitude)?;
        }
        if scenario.output.currents {
            let mut c = Table::new(&["index", "i_re", "i_im", "v_re", "v_im"]);
            for (n, z) in s.i.iter().enumerate() {
                let v = s.v.as_ref().map(|v| v[n]);
                c.push(vec![
                    n.to_string(),
                    sci(z.re),
                    sci(z.im),
                    opt_sci(v.map(|v| v.re)),
                    opt_sci(v.map(|v| v.im)),
                ]);
            }
            w.table(&format!("currents_{t}"), "currents", &c)?;
        }
        if let (Some(near), Some(p)) = (&e.near, &points) {
            w.table(&format!("nearfield_{t}"), "near-field", &near_table(near, p))?;
        }
    }
    w.table("summary", "run-summary", &summary)?;
    if let Some(r) = &out.reference {
        if scenario.output.far_field && !matches!(scenario.reference, Some(Reference::File { .. })) {
            w.far_field("farfield_reference", &r.far, amplitude)?;
        }
    }
    let unconverged = out.results.iter().filter(|e| !e.solved.converged).count();
    w.finish(unconverged)
}

pub fn gamma_sweep(scenario: &Scenario, out_dir: &Path) -> Result<Outcome> {
    let rows = study::gamma_sweep(scenario)?;
    let mut t = Table::new(&["gamma", "variant", "eps_max_db", "eps_avg_db", "iterations", "converged"]);
    for r in &rows {
        t.push(vec![
            r.gamma.map(|g| g.to_string()).unwrap_or_default(),
            r.variant.to_string(),
            db(r.eps_max_db),
            db(r.eps_avg_db),
            r.iterations.to_string(),
            r.converged.to_string(),
        ]);
    }
    let mut w = Writer::new(out_dir, scenario, "gamma-sweep");
    w.table("gamma_sweep", "gamma-sweep", &t)?;
    w.finish(rows.iter().filter(|r| !r.converged).count())
}

pub fn refine(scenario: &Scenario, out_dir: &Path) -> Result<Outcome> {
    let rows = study::refinement_study(scenario)?;
    let mut t = Table::new(&with_config(
        &["level", "mean_edge_m", "edge_over_lambda", "unknowns"],
        &["iterations", "converged", "eps_max_db", "eps_avg_db", "eps_i", "near_error_db", "mie_radius_m"],
    ));
    for r in &rows {
        let mut row = vec![r.level.to_string(), sci(r.mean_edge), sci(r.edge_over_lambda), r.unknowns.to_string()];
        row.extend(config_cells(&r.formulation));
        row.extend([
            r.iterations.to_string(),
            r.converged.to_string(),
            opt_db(r.eps_max_db),
            opt_db(r.eps_avg_db),
            opt_sci(r.eps_i),
            opt_db(r.near_error.map(wmfie::postproc::amplitude_db)),
            opt_sci(r.mie_radius),
        ]);
        t.push(row);
    }
    let mut w = Writer::new(out_dir, scenario, "refine");
    w.table("refine", "refine", &t)?;
    w.finish(rows.iter().filter(|r| !r.converged).count())
}

pub fn freq_sweep(scenario: &Scenario, out_dir: &Path) -> Result<Outcome> {
    let rows = study::freq_sweep(scenario)?;
    let mut t = Table::new(&with_config(
        &["frequency_hz"],
        &["iterations", "converged", "eps_max_db", "eps_avg_db", "spike"],
    ));
    for r in &rows {
        let mut row = vec![sci(r.frequency)];
        row.extend(config_cells(&r.formulation));
        row.extend([
            r.iterations.to_string(),
            r.converged.to_string(),
            opt_db(r.eps_max_db),
            opt_db(r.eps_avg_db),
            r.spike.to_string(),
        ]);
        t.push(row);
        if r.spike {
            say!("iteration spike: {} at {:.6e} Hz ({} iterations)", r.formulation.kind, r.frequency, r.iterations);
        }
    }
    let mut w = Writer::new(out_dir, scenario, "freq-sweep");
    w.table("freq_sweep", "freq-sweep", &t)?;
    w.finish(rows.iter().filter(|r| !r.converged).count())
}

pub fn lf_sweep(scenario: &Scenario, out_dir: &Path) -> Result<Outcome> {
    let rows = study::lf_sweep(scenario)?;
    let mut t = Table::new(&with_config(
        &["frequency_hz"],
        &["i_re_norm", "i_im_norm", "d_re_norm", "d_im_norm"],
    ));
    for r in &rows {
        let mut row = vec![sci(r.sample.frequency)];
        row.extend(config_cells(&r.formulation));
        row.extend([sci(r.sample.i_re), sci(r.sample.i_im), sci(r.sample.d_re), sci(r.sample.d_im)]);
        t.push(row);
    }
    let mut w = Writer::new(out_dir, scenario, "lf-sweep");
    w.table("lf_sweep", "lf-sweep", &t)?;
    w.finish(0)
}

pub fn mie(scenario: &Scenario, out_dir: &Path) -> Result<Outcome> {
    let setup = Setup::new(scenario)?;
    let radius = match &scenario.reference {
        Some(Reference::Mie { radius }) => *radius,
        None => wmfie::study::MieRadius::Nominal,
        Some(_) => return Err(Error::Config("the mie command needs a Mie reference or none".into())),
    };
    let radius = match radius {
        wmfie::study::MieRadius::Fixed(r) => r,
        wmfie::study::MieRadius::Nominal => scenario
            .geometry
            .nominal_radius()
            .ok_or_else(|| Error::Config("the mie command needs a sphere geometry or a fixed radius".into()))?,
        wmfie::study::MieRadius::VolumeEquivalent => Model::new(&scenario.geometry, scenario.frequency)?.mie_radius(radius)?,
    };
    let sol = mie_solution(radius, wavenumber(scenario.frequency)).stage("mie")?;
    say!(
        "ka = {:.6}, order {}, scattering cross section {} m^2",
        sol.ka(),
        sol.order,
        sci(sol.scattering_cross_section())
    );
    let mut w = Writer::new(out_dir, scenario, "mie");
    w.far_field("mie_farfield", &mie_far_field(&sol, &setup.wave, &setup.directions), scenario.wave.amplitude)?;
    w.finish(0)
}

pub fn mesh_info(scenario: &Scenario, out_dir: &Path) -> Result<Outcome> {
    let model = Model::new(&scenario.geometry, scenario.frequency)?;
    let s = model.stats();
    let lambda = C0 / scenario.frequency;
    let mut t = Table::new(&[
        "unknowns",
        "triangles",
        "vertices",
        "edges",
        "mean_edge_m",
        "min_edge_m",
        "max_edge_m",
        "lambda_over_mean_edge",
        "area_m2",
        "volume_m3",
        "volume_equivalent_radius_m",
    ]);
    t.push(vec![
        model.space.len().to_string(),
        s.triangle_count.to_string(),
        s.vertex_count.to_string(),
        s.edge_count.to_string(),
        sci(s.mean_edge_length),
        sci(s.min_edge_length),
        sci(s.max_edge_length),
        format!("{:.4}", lambda / s.mean_edge_length),
        sci(s.total_area),
        sci(s.volume),
        sci(study::volume_equivalent_radius(model.space.mesh())),
    ]);
    say!(
        "{} unknowns, {} triangles, mean edge {:.4} m (lambda/{:.2})",
        model.space.len(),
        s.triangle_count,
        s.mean_edge_length,
        lambda / s.mean_edge_length
    );
    let mut w = Writer::new(out_dir, scenario, "mesh-info");
    w.table("mesh_info", "mesh-info", &t)?;
    w.finish(0)
}
