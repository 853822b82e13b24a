use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::{FormulationConfig, FormulationKind};
use crate::linalg::Vec3;
use crate::quadrature::QuadConfig;
use crate::C0;

/// Target mean edge length, absolute or as a fraction of the wavelength.
///
/// Written as a number of metres (`0.1`) or as `"lambda/14"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SizeRepr", into = "SizeRepr")]
pub enum MeshSize {
    Meters(f64),
    WavelengthDivisor(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SizeRepr {
    Number(f64),
    Text(String),
}

impl MeshSize {
    pub fn meters(self, frequency: f64) -> f64 {
        match self {
            MeshSize::Meters(h) => h,
            MeshSize::WavelengthDivisor(d) => C0 / frequency / d,
        }
    }
}

impl FromStr for MeshSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let (value, make): (&str, fn(f64) -> MeshSize) = match t.strip_prefix("lambda/") {
            Some(d) => (d, MeshSize::WavelengthDivisor),
            None => (t, MeshSize::Meters),
        };
        match value.trim().parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Ok(make(x)),
            _ => Err(Error::Config(format!("mesh size must be a positive length or \"lambda/<d>\", got {s:?}"))),
        }
    }
}

impl fmt::Display for MeshSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshSize::Meters(h) => write!(f, "{h}"),
            MeshSize::WavelengthDivisor(d) => write!(f, "lambda/{d}"),
        }
    }
}

impl TryFrom<SizeRepr> for MeshSize {
    type Error = Error;

    fn try_from(r: SizeRepr) -> Result<Self> {
        match r {
            SizeRepr::Number(x) => x.to_string().parse(),
            SizeRepr::Text(s) => s.parse(),
        }
    }
}

impl From<MeshSize> for SizeRepr {
    fn from(m: MeshSize) -> Self {
        match m {
            MeshSize::Meters(h) => SizeRepr::Number(h),
            MeshSize::WavelengthDivisor(_) => SizeRepr::Text(m.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Geometry {
    Sphere { diameter: f64, edge: MeshSize },
    /// Fibonacci-lattice sphere with an exact RWG count.
    SphereUnknowns { diameter: f64, unknowns: usize },
    Cube { side: f64, edge: MeshSize },
    Pyramid { base: f64, height: f64, edge: MeshSize },
    Wedge { length: f64, depth: f64, width: f64, edge: MeshSize },
    /// Wedge with explicit segment counts, see [`crate::mesh::wedge_structured`].
    StructuredWedge {
        length: f64,
        depth: f64,
        width: f64,
        n_cross: usize,
        n_len: usize,
    },
    /// Gmsh 2.x ASCII or OFF surface.
    File { path: PathBuf },
}

impl Geometry {
    /// Same shape with a different target edge, for refinement studies.
    pub fn with_edge(&self, size: MeshSize) -> Result<Geometry> {
        let mut g = self.clone();
        match &mut g {
            Geometry::Sphere { edge, .. }
            | Geometry::Cube { edge, .. }
            | Geometry::Pyramid { edge, .. }
            | Geometry::Wedge { edge, .. } => *edge = size,
            _ => return Err(Error::Config(format!("geometry {} has no edge length to refine", self.kind_name()))),
        }
        Ok(g)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Geometry::Sphere { .. } => "sphere",
            Geometry::SphereUnknowns { .. } => "sphere-unknowns",
            Geometry::Cube { .. } => "cube",
            Geometry::Pyramid { .. } => "pyramid",
            Geometry::Wedge { .. } => "wedge",
            Geometry::StructuredWedge { .. } => "structured-wedge",
            Geometry::File { .. } => "file",
        }
    }

    /// Radius of the sphere the mesh approximates, if it is one.
    pub fn nominal_radius(&self) -> Option<f64> {
        match self {
            Geometry::Sphere { diameter, .. } | Geometry::SphereUnknowns { diameter, .. } => Some(0.5 * diameter),
            _ => None,
        }
    }
}

/// Linearly polarized plane wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveSpec {
    /// Propagation direction.
    pub direction: [f64; 3],
    pub polarization: [f64; 3],
    /// V/m.
    pub amplitude: f64,
}

impl Default for WaveSpec {
    fn default() -> Self {
        Self {
            direction: [0.0, 0.0, -1.0],
            polarization: [1.0, 0.0, 0.0],
            amplitude: 1.0,
        }
    }
}

impl WaveSpec {
    pub fn direction(&self) -> Vec3 {
        Vec3::from(self.direction)
    }

    pub fn polarization(&self) -> Vec3 {
        Vec3::from(self.polarization)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    #[default]
    Gmres,
    /// Materialized operator and LU; for small or badly conditioned systems.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub method: SolverMethod,
    /// Relative residual.
    pub tol: f64,
    pub maxit: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            method: SolverMethod::Gmres,
            tol: 1e-6,
            maxit: 2000,
        }
    }
}

/// Radius used for the Mie reference.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "SizeRepr", into = "SizeRepr")]
pub enum MieRadius {
    /// The generator's radius.
    #[default]
    Nominal,
    /// Radius of the sphere with the mesh's enclosed volume.
    VolumeEquivalent,
    Fixed(f64),
}

impl TryFrom<SizeRepr> for MieRadius {
    type Error = Error;

    fn try_from(r: SizeRepr) -> Result<Self> {
        match r {
            SizeRepr::Number(x) if x > 0.0 && x.is_finite() => Ok(MieRadius::Fixed(x)),
            SizeRepr::Text(s) if s == "nominal" => Ok(MieRadius::Nominal),
            SizeRepr::Text(s) if s == "volume-equivalent" => Ok(MieRadius::VolumeEquivalent),
            _ => Err(Error::Config(
                "Mie radius must be a positive number, \"nominal\" or \"volume-equivalent\"".into(),
            )),
        }
    }
}

impl From<MieRadius> for SizeRepr {
    fn from(m: MieRadius) -> Self {
        match m {
            MieRadius::Nominal => SizeRepr::Text("nominal".into()),
            MieRadius::VolumeEquivalent => SizeRepr::Text("volume-equivalent".into()),
            MieRadius::Fixed(r) => SizeRepr::Number(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Reference {
    Mie {
        #[serde(default)]
        radius: MieRadius,
    },
    /// Far-field CSV as written by a previous run.
    File { path: PathBuf },
    /// EFIE on the geometry's mesh uniformly refined `refine²`-fold.
    RefinedEfie { refine: usize },
}

/// Sphere of observation points for near-field output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearShell {
    pub radius: f64,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl NearShell {
    /// Cell-centred in θ so that no two points coincide at the poles.
    pub fn points(&self) -> Vec<Vec3> {
        let mut p = Vec::with_capacity(self.n_theta * self.n_phi);
        for a in 0..self.n_theta {
            let theta = std::f64::consts::PI * (a as f64 + 0.5) / self.n_theta as f64;
            for b in 0..self.n_phi {
                let phi = 2.0 * std::f64::consts::PI * b as f64 / self.n_phi as f64;
                p.push(self.radius * Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()));
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// φ of each far-field cut, degrees.
    pub cuts: Vec<f64>,
    pub theta_samples: usize,
    /// Write one far-field CSV per formulation.
    pub far_field: bool,
    /// Write the solved coefficient vectors.
    pub currents: bool,
    pub near_field: Option<NearShell>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            cuts: vec![0.0, 90.0],
            theta_samples: 181,
            far_field: true,
            currents: false,
            near_field: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSweepSpec {
    pub gammas: Vec<f64>,
    #[serde(default = "default_variants")]
    pub variants: Vec<u8>,
}

fn default_variants() -> Vec<u8> {
    vec![1, 2, 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineSpec {
    /// Coarse to fine.
    pub levels: Vec<MeshSize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreqSweepSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Iteration count relative to the formulation's median that flags a
    /// resonance.
    #[serde(default = "default_spike")]
    pub spike_factor: f64,
}

fn default_spike() -> f64 {
    2.0
}

impl FreqSweepSpec {
    pub fn frequencies(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LfSweepSpec {
    pub f_high: f64,
    pub decades: f64,
    #[serde(default = "default_per_decade")]
    pub per_decade: usize,
}

fn default_per_decade() -> usize {
    4
}

fn default_formulations() -> Vec<FormulationConfig> {
    [FormulationKind::Efie, FormulationKind::Mfie, FormulationKind::Wmfie1]
        .into_iter()
        .map(FormulationConfig::new)
        .collect()
}

/// One study, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Hz. Sets the mesh size for `"lambda/d"` edges in every command.
    pub frequency: f64,
    pub geometry: Geometry,
    #[serde(default)]
    pub wave: WaveSpec,
    #[serde(default = "default_formulations", rename = "formulation")]
    pub formulations: Vec<FormulationConfig>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub reference: Option<Reference>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub gamma_sweep: Option<GammaSweepSpec>,
    #[serde(default)]
    pub refine: Option<RefineSpec>,
    #[serde(default)]
    pub freq_sweep: Option<FreqSweepSpec>,
    #[serde(default)]
    pub lf_sweep: Option<LfSweepSpec>,
    /// Reserved; every computation is deterministic.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn positive(what: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive, got {x}")))
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Reads a scenario; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s = Scenario::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Geometry::File { path } = &mut s.geometry {
            resolve(path);
        }
        if let Some(Reference::File { path }) = &mut s.reference {
            resolve(path);
        }
        s.check_files()?;
        Ok(s)
    }

    pub fn check_files(&self) -> Result<()> {
        let paths = [
            match &self.geometry {
                Geometry::File { path } => Some(path),
                _ => None,
            },
            match &self.reference {
                Some(Reference::File { path }) => Some(path),
                _ => None,
            },
        ];
        for p in paths.into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::Config(format!("referenced file does not exist: {}", p.display())));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        positive("frequency", self.frequency)?;
        positive("wave amplitude", self.wave.amplitude)?;
        if self.formulations.is_empty() {
            return Err(Error::Config("at least one [[formulation]] is required".into()));
        }
        for f in &self.formulations {
            f.validate()?;
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) || self.solver.maxit == 0 {
            return Err(Error::Config("solver needs 0 < tol < 1 and maxit > 0".into()));
        }
        if self.output.cuts.is_empty() || self.output.theta_samples < 2 {
            return Err(Error::Config("output needs at least one cut and two theta samples".into()));
        }
        if let Some(shell) = &self.output.near_field {
            positive("near-field shell radius", shell.radius)?;
            if shell.n_theta == 0 || shell.n_phi == 0 {
                return Err(Error::Config("near-field shell needs n_theta, n_phi > 0".into()));
            }
        }
        match &self.reference {
            Some(Reference::Mie { radius: MieRadius::Nominal }) if self.geometry.nominal_radius().is_none() => {
                return Err(Error::Config(format!(
                    "a nominal Mie radius needs a sphere geometry, not {}",
                    self.geometry.kind_name()
                )))
            }
            Some(Reference::RefinedEfie { refine }) if *refine < 2 => {
                return Err(Error::Config("refined-efie reference needs refine >= 2".into()))
            }
            _ => {}
        }
        if let Some(g) = &self.gamma_sweep {
            if g.gammas.len() < 2 || g.gammas.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
                return Err(Error::Config("gamma sweep needs at least two gammas in (0, 1]".into()));
            }
            if g.variants.is_empty() || g.variants.iter().any(|v| !(1..=3).contains(v)) {
                return Err(Error::Config("gamma sweep variants must be 1, 2 or 3".into()));
            }
        }
        if let Some(r) = &self.refine {
            if r.levels.len() < 3 {
                return Err(Error::Config("refinement study needs at least three levels".into()));
            }
        }
        if let Some(f) = &self.freq_sweep {
            positive("freq_sweep.start", f.start)?;
            positive("freq_sweep.step", f.step)?;
            positive("freq_sweep.spike_factor", f.spike_factor)?;
            if f.stop < f.start {
                return Err(Error::Config("freq_sweep.stop must not be below start".into()));
            }
        }
        if let Some(l) = &self.lf_sweep {
            positive("lf_sweep.f_high", l.f_high)?;
            if l.decades < 3.0 || l.per_decade == 0 {
                return Err(Error::Config("lf_sweep needs decades >= 3 and per_decade >= 1".into()));
            }
        }
        Ok(())
    }
}
