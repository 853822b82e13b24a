use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wmfie::error::{Error, Result};
use wmfie::study::{MieRadius, Reference, Scenario};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
#[macro_export]
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

mod commands;
mod table;

#[derive(Parser, Debug)]
#[command(name = "wmfie", version, about = "PEC scattering studies with EFIE, MFIE, WMFIE, CFIE, WCFIE and CSIE")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for result files; created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for assembly and field evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Radius of the Mie reference sphere in metres.
    #[arg(long, global = true, value_name = "METRES")]
    mie_radius_override: Option<f64>,
    /// Reserved; all computations are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Solve every formulation once and score it against the reference.
    Run,
    /// WMFIE-1/2/3 over the scenario's gamma grid.
    GammaSweep,
    /// Mesh refinement study over the scenario's levels.
    Refine,
    /// Fixed mesh, stepped frequency; flags iteration spikes.
    FreqSweep,
    /// Low-frequency current and divergence norms.
    LfSweep,
    /// Mie-series far field only.
    Mie,
    /// Mesh statistics only.
    MeshInfo,
}

const EXIT_NOT_CONVERGED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Io { .. } => EXIT_IO,
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::MeshParse { .. }
        | Error::NonManifold(..)
        | Error::Orientation(_)
        | Error::DegenerateTriangle { .. }
        | Error::TooManyTriangles { .. }
        | Error::GridMismatch(_) => EXIT_CONFIG,
        _ => EXIT_NOT_CONVERGED,
    }
}

fn load_scenario(common: &Common) -> Result<Scenario> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut s = Scenario::load(path)?;
    if let Some(r) = common.mie_radius_override {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Config(format!("--mie-radius-override must be positive, got {r}")));
        }
        match &mut s.reference {
            Some(Reference::Mie { radius }) => *radius = MieRadius::Fixed(r),
            None => s.reference = Some(Reference::Mie { radius: MieRadius::Fixed(r) }),
            Some(_) => return Err(Error::Config("--mie-radius-override needs a Mie reference".into())),
        }
    }
    if common.seed.is_some() {
        s.seed = common.seed;
    }
    Ok(s)
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn execute(cli: &Cli) -> Result<commands::Outcome> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    let scenario = load_scenario(&cli.common)?;
    prepare_out_dir(&cli.common.out_dir)?;
    let out = &cli.common.out_dir;
    match cli.command {
        Command::Run => commands::run(&scenario, out),
        Command::GammaSweep => commands::gamma_sweep(&scenario, out),
        Command::Refine => commands::refine(&scenario, out),
        Command::FreqSweep => commands::freq_sweep(&scenario, out),
        Command::LfSweep => commands::lf_sweep(&scenario, out),
        Command::Mie => commands::mie(&scenario, out),
        Command::MeshInfo => commands::mesh_info(&scenario, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                say!("wrote {}", f.display());
            }
            if outcome.unconverged > 0 {
                eprintln!("error: {} solve(s) did not reach the requested tolerance", outcome.unconverged);
                ExitCode::from(EXIT_NOT_CONVERGED)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
