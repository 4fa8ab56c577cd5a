//! Command-line front end for `cuspforge`.
//!
//! Every subcommand reads an analysis config (see [`config`]), runs one
//! analysis and writes CSV tables and SVG plots named
//! `<config stem>_<output>` into the output directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod reproduce;
pub mod svg;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cuspforge::monodromy::DEFAULT_SAMPLES_PER_REV;
use cuspforge::FamilyRegistry;

pub use commands::{LoopSpec, Report, Session};
pub use config::AnalysisConfig;
pub use error::CliError;
pub use svg::{Layer, PlotSpec};

const CSV_SCHEMAS: &str = "\
CSV schemas (floats have 12 significant digits):
  cusps      kind,phi,y,u,v,delta,residual
  trace      curve,kind,closed,index,phi,y,u,v,cusp
             kind is singularity, characteristic or isolated
  dkp        index,phi,y,residual,multiple
  regions    u,v,count          (count -1 marks a failed cell)
  monodromy  lift,sample,u,v,phi,y
  loop input u,v                (last row repeats the first)

Exit codes: 0 success (warnings go to stderr), 1 config error, 2 solver failure.
Environment: CUSPFORGE_THREADS caps the worker pool.";

#[derive(Debug, Parser)]
#[command(name = "cuspforge", version, about = "Cusp and singularity analysis of planar maps", after_help = CSV_SCHEMAS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Analysis config (`key = value` lines).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate and classify cusps and corank-2 points.
    Cusps {
        #[command(flatten)]
        common: Common,
    },
    /// Trace the singular curve and its joint-space image.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Also compute characteristic curves.
        #[arg(long)]
        characteristic: bool,
    },
    /// Classify a point of the singular set.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Workspace point `phi,y`.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Refine the point onto the nearest special point first.
        #[arg(long)]
        polish: bool,
    },
    /// Solve the direct kinematic problem at one joint target.
    Dkp {
        #[command(flatten)]
        common: Common,
        /// Joint target `u,v`.
        #[arg(long, allow_hyphen_values = true)]
        target: String,
    },
    /// Solution-count map over the joint box.
    Regions {
        #[command(flatten)]
        common: Common,
    },
    /// Permutation of assembly modes along a closed joint loop.
    Monodromy {
        #[command(flatten)]
        common: Common,
        /// Circle centre `u,v`.
        #[arg(long, allow_hyphen_values = true, requires = "radius", conflicts_with = "loop_file")]
        center: Option<String>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 1)]
        turns: usize,
        #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_REV)]
        samples: usize,
        /// Angle of the base point on the circle, radians.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        start_angle: f64,
        /// Closed loop as a `u,v` CSV sample list.
        #[arg(long = "loop")]
        loop_file: Option<PathBuf>,
    },
    /// Run the four reference instances and write a pass/fail report.
    ReproducePaper {
        #[arg(long, short, default_value = "reproduce")]
        out: PathBuf,
        /// Count-map cells per axis.
        #[arg(long, default_value_t = config::DEFAULT_RESOLUTION)]
        resolution: usize,
    },
}

fn session(common: &Common, registry: &FamilyRegistry) -> Result<Session, CliError> {
    let cfg = AnalysisConfig::load(&common.config)?;
    let stem = common
        .config
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("cuspforge")
        .to_owned();
    Session::new(cfg, registry, &common.out, &stem)
}

pub fn execute(cmd: &Command, registry: &FamilyRegistry) -> Result<Report, CliError> {
    match cmd {
        Command::Cusps { common } => commands::cusps(&session(common, registry)?),
        Command::Trace { common, characteristic } => commands::trace(&session(common, registry)?, *characteristic),
        Command::Classify { common, point, polish } => {
            let p = commands::parse_pair(point)?;
            commands::classify(&session(common, registry)?, p, *polish)
        }
        Command::Dkp { common, target } => {
            let t = commands::parse_pair(target)?;
            commands::dkp(&session(common, registry)?, t)
        }
        Command::Regions { common } => commands::regions(&session(common, registry)?),
        Command::Monodromy {
            common,
            center,
            radius,
            turns,
            samples,
            start_angle,
            loop_file,
        } => {
            let spec = match (center, radius, loop_file) {
                (Some(c), Some(r), None) => LoopSpec::Circle {
                    center: commands::parse_pair(c)?,
                    radius: *r,
                    turns: *turns,
                    samples_per_rev: *samples,
                    start_angle: *start_angle,
                },
                (None, _, Some(path)) => LoopSpec::File(path.clone()),
                _ => return Err(CliError::Config("give either --center and --radius, or --loop".into())),
            };
            commands::monodromy(&session(common, registry)?, &spec)
        }
        Command::ReproducePaper { out, resolution } => reproduce::reproduce(registry, out, *resolution),
    }
}

fn init_threads() {
    let Ok(v) = std::env::var("CUSPFORGE_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::debug!("thread pool already initialised: {e}");
            }
        }
        _ => log::warn!("ignoring CUSPFORGE_THREADS={v:?}"),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Console output goes to `stdout` and `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(stdout, "{}", e.render())
            } else {
                write!(stderr, "{}", e.render())
            };
            return code;
        }
    };
    init_threads();
    let registry = FamilyRegistry::builtin();
    match execute(&cli.command, &registry) {
        Ok(report) => {
            for l in &report.lines {
                let _ = writeln!(stdout, "{l}");
            }
            for w in &report.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            for f in &report.files {
                log::info!("wrote {}", display(f));
            }
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
